//! End-to-end checks of the binary: exit codes, error wording, and the files each
//! subcommand leaves in its run directory.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glvortex"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).expect("config written");
    path.to_str().expect("utf-8 path").to_string()
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

const CONSTANT_16: &str = "
[grid]
n_cells = 16

[problem]
n = 2

[[problem.components]]
degree = 0

[[problem.components]]
degree = 0

[sweep]
eps_schedule = [0.4, 0.3]

[diagnostics]
margin = 0.15
";

const VORTEX_16: &str = "
[grid]
n_cells = 16

[problem]
n = 2

[[problem.components]]
degree = 1

[[problem.components]]
degree = 0

[sweep]
eps_schedule = [0.3, 0.25]

[diagnostics]
margin = 0.15
";

#[test]
fn check_subcommand_passes_every_probe() {
    let output = run(&["check"]);
    let text = stdout_of(&output);
    assert_eq!(output.status.code(), Some(0), "stderr: {}", stderr_of(&output));
    assert_eq!(text.matches("PASS").count(), 4, "stdout: {text}");
    assert!(!text.contains("FAIL"));
}

#[test]
fn unknown_config_key_fails_naming_it() {
    let dir = TempDir::new().expect("tempdir");
    let config = write_config(
        dir.path(),
        "
[grid]
n_cells = 16

[problem]
n = 1

[[problem.components]]
degree = 1

[diagnostics]
margn = 0.2
",
    );
    let output = run(&["solve", "--config", &config, "--epsilon", "0.3"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("margn"), "stderr: {}", stderr_of(&output));
}

#[test]
fn invalid_field_value_names_its_path() {
    let dir = TempDir::new().expect("tempdir");
    let config = write_config(
        dir.path(),
        "
[grid]
n_cells = 15

[problem]
n = 1

[[problem.components]]
degree = 0
",
    );
    let output = run(&["solve", "--config", &config, "--epsilon", "0.3"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("n_cells"), "stderr: {}", stderr_of(&output));
}

#[test]
fn missing_config_file_is_a_clean_error() {
    let output = run(&["solve", "--config", "/nonexistent/lab.toml", "--epsilon", "0.3"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("/nonexistent/lab.toml"));
}

#[test]
fn solve_writes_the_run_artifacts() {
    let dir = TempDir::new().expect("tempdir");
    let config = write_config(dir.path(), CONSTANT_16);
    let out = dir.path().join("run");
    let output = run(&["solve", "--config", &config, "--epsilon", "0.4", "--out", out.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0), "stderr: {}", stderr_of(&output));
    for name in ["config.toml", "field.snap", "u_star.snap", "diagnostics.csv", "summary.txt"] {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    let csv = fs::read_to_string(out.join("diagnostics.csv")).expect("csv");
    assert!(csv.starts_with(
        "epsilon,energy_total,dirichlet_total,potential_total,potential_c1,potential_c2,"
    ));
    assert_eq!(csv.lines().count(), 2);
    let summary = fs::read_to_string(out.join("summary.txt")).expect("summary");
    assert!(summary.contains("converged: true"));
}

#[test]
fn iteration_starved_solve_exits_two_with_partial_output() {
    let dir = TempDir::new().expect("tempdir");
    let config = write_config(
        dir.path(),
        "
[grid]
n_cells = 16

[problem]
n = 1

[[problem.components]]
degree = 1

[solver]
max_iters = 1

[diagnostics]
margin = 0.15
",
    );
    let out = dir.path().join("run");
    let output = run(&["solve", "--config", &config, "--epsilon", "0.3", "--out", out.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2), "stderr: {}", stderr_of(&output));
    assert!(out.join("field.snap").is_file());
    let summary = fs::read_to_string(out.join("summary.txt")).expect("summary");
    assert!(summary.contains("converged: false"));
}

#[test]
fn continue_without_sweep_section_is_rejected() {
    let dir = TempDir::new().expect("tempdir");
    let config = write_config(
        dir.path(),
        "
[grid]
n_cells = 16

[problem]
n = 1

[[problem.components]]
degree = 0

[diagnostics]
margin = 0.15
",
    );
    let output = run(&["continue", "--config", &config]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("[sweep]"), "stderr: {}", stderr_of(&output));
}

#[test]
fn continue_writes_per_record_snapshots_and_traces() {
    let dir = TempDir::new().expect("tempdir");
    let config = write_config(dir.path(), VORTEX_16);
    let out = dir.path().join("run");
    let output = run(&["continue", "--config", &config, "--trace", "--out", out.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0), "stderr: {}", stderr_of(&output));
    for name in ["u_star.snap", "field_001.snap", "field_002.snap", "trace_001.csv", "trace_002.csv"] {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    let trace = fs::read_to_string(out.join("trace_001.csv")).expect("trace");
    assert!(trace.starts_with("iter,energy,residual\n"));
    assert!(trace.lines().count() > 1);
    let csv = fs::read_to_string(out.join("diagnostics.csv")).expect("csv");
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn seed_override_lands_in_the_resolved_config() {
    let dir = TempDir::new().expect("tempdir");
    let config = write_config(dir.path(), CONSTANT_16);
    let out = dir.path().join("run");
    let output = run(&[
        "solve", "--config", &config, "--epsilon", "0.4", "--seed", "42", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let resolved = fs::read_to_string(out.join("config.toml")).expect("resolved config");
    assert!(resolved.contains("seed = 42"), "resolved: {resolved}");
}

#[test]
fn alpha_beta_reports_exact_zero_for_constant_data() {
    let dir = TempDir::new().expect("tempdir");
    let config = write_config(dir.path(), CONSTANT_16);
    let out = dir.path().join("run");
    let output = run(&["alpha-beta", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0), "stderr: {}", stderr_of(&output));
    let csv = fs::read_to_string(out.join("report.csv")).expect("report");
    let row = csv.lines().nth(1).expect("data row");
    assert!(row.starts_with("0,0,0,"), "row: {row}");
    assert!(out.join("beta_minimizer.snap").is_file());
    assert!(out.join("alpha_minimizer.snap").is_file());
}

#[test]
fn baseline_writes_the_sweep_table_and_slope() {
    let dir = TempDir::new().expect("tempdir");
    let config = write_config(
        dir.path(),
        "
[grid]
n_cells = 16

[problem]
n = 1

[[problem.components]]
degree = 1

[sweep]
eps_schedule = [0.3, 0.25]
",
    );
    let out = dir.path().join("run");
    let output = run(&["baseline", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0), "stderr: {}", stderr_of(&output));
    let csv = fs::read_to_string(out.join("baseline.csv")).expect("baseline");
    assert!(csv.starts_with("epsilon,energy_total,dirichlet_total,potential_total,residual_el,converged\n"));
    assert_eq!(csv.lines().count(), 3);
    let summary = fs::read_to_string(out.join("summary.txt")).expect("summary");
    assert!(summary.contains("energy_slope_vs_log_inv_eps"));
}
