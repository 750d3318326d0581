//! Field snapshot files: a four-line text header plus raw little-endian payload.
//!
//! Layout, stable across the whole project:
//!
//! ```text
//! glvortex-field v1\n
//! n_cells=<int>\n
//! n_components=<int>\n
//! epsilon=<float or nan>\n
//! <n_components blocks of (n_cells+1)^2 row-major (re, im) f64 little-endian pairs>
//! ```
//!
//! Values round-trip bitwise; epsilon is nan for constrained-limit fields that have no
//! coupling attached.

use crate::complex::Complex;
use crate::field::MultiField;
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

pub const MAGIC: &str = "glvortex-field v1";

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("snapshot io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad snapshot header: {0}")]
    BadHeader(String),
    #[error("snapshot payload holds {got} bytes, expected {expected}")]
    PayloadSize { expected: usize, got: usize },
}

/// Writes one state. `epsilon` may be NaN for limit fields.
pub fn write_snapshot<W: Write>(
    mut out: W,
    psi: &MultiField,
    epsilon: f64,
) -> Result<(), SnapshotError> {
    let eps_text = if epsilon.is_nan() { "nan".to_string() } else { format!("{epsilon}") };
    write!(out, "{MAGIC}\nn_cells={}\nn_components={}\nepsilon={eps_text}\n", psi.n_cells, psi.n())?;
    for component in &psi.components {
        for z in component {
            out.write_all(&z.re.to_le_bytes())?;
            out.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads one state back; returns the field and the stored epsilon.
pub fn read_snapshot<R: Read>(mut input: R) -> Result<(MultiField, f64), SnapshotError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;

    let mut offset = 0usize;
    let mut next_line = || -> Result<String, SnapshotError> {
        let rest = &bytes[offset..];
        let nl = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| SnapshotError::BadHeader("unterminated header".into()))?;
        let line = std::str::from_utf8(&rest[..nl])
            .map_err(|_| SnapshotError::BadHeader("non-utf8 header".into()))?
            .to_string();
        offset += nl + 1;
        Ok(line)
    };

    let magic = next_line()?;
    if magic != MAGIC {
        return Err(SnapshotError::BadHeader(format!("magic line '{magic}'")));
    }
    let parse_kv = |line: &str, key: &str| -> Result<String, SnapshotError> {
        line.strip_prefix(key)
            .and_then(|r| r.strip_prefix('='))
            .map(str::to_string)
            .ok_or_else(|| SnapshotError::BadHeader(format!("expected {key}=..., got '{line}'")))
    };
    let n_cells: usize = parse_kv(&next_line()?, "n_cells")?
        .parse()
        .map_err(|e| SnapshotError::BadHeader(format!("n_cells: {e}")))?;
    let n_components: usize = parse_kv(&next_line()?, "n_components")?
        .parse()
        .map_err(|e| SnapshotError::BadHeader(format!("n_components: {e}")))?;
    let epsilon: f64 = parse_kv(&next_line()?, "epsilon")?
        .parse()
        .map_err(|e| SnapshotError::BadHeader(format!("epsilon: {e}")))?;

    let n_nodes = (n_cells + 1) * (n_cells + 1);
    let expected = n_components * n_nodes * 16;
    let payload = &bytes[offset..];
    if payload.len() != expected {
        return Err(SnapshotError::PayloadSize { expected, got: payload.len() });
    }

    let mut components = Vec::with_capacity(n_components);
    let mut cursor = payload;
    let mut read_f64 = || -> f64 {
        let (head, rest) = cursor.split_at(8);
        cursor = rest;
        f64::from_le_bytes(head.try_into().expect("8-byte split"))
    };
    for _ in 0..n_components {
        let mut component = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            let re = read_f64();
            let im = read_f64();
            component.push(Complex::new(re, im));
        }
        components.push(component);
    }
    Ok((MultiField { n_cells, components }, epsilon))
}

/// Writes a snapshot to a file path.
pub fn save_snapshot(path: &Path, psi: &MultiField, epsilon: f64) -> Result<(), SnapshotError> {
    let file = std::fs::File::create(path)?;
    write_snapshot(std::io::BufWriter::new(file), psi, epsilon)
}

/// Reads a snapshot from a file path.
pub fn load_snapshot(path: &Path) -> Result<(MultiField, f64), SnapshotError> {
    let file = std::fs::File::open(path)?;
    read_snapshot(std::io::BufReader::new(file))
}
