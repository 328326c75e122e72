use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const QUADRATIC: &str = "\
problem.family = quadratic
problem.n = 8
problem.d = 12
problem.m = 3
problem.condition_number = 20
problem.reg = l1(0.05)
problem.seed = 7
algorithm.name = pccd
algorithm.K = 60
";

fn ccd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccd")).arg("--out-dir").arg(dir).args(args).output().expect("ccd binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Data rows of a CSV with `#` header comments, header line excluded.
fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn rerun_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", QUADRATIC);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(ccd(&a, &["run", cfg.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(ccd(&b, &["run", cfg.to_str().unwrap()]).status.code(), Some(0));
    let first = fs::read(a.join("trace_seed0.csv")).unwrap();
    let second = fs::read(b.join("trace_seed0.csv")).unwrap();
    assert!(!first.is_empty());
    assert_eq!(first, second);
}

#[test]
fn stochastic_rerun_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let text = QUADRATIC.replace(
        "algorithm.name = pccd",
        "algorithm.name = vrccd\nalgorithm.b = 4\nalgorithm.bprime = 2\nalgorithm.p = 0.3",
    ) + "seeds.count = 3\ndiagnostics.record_u = true\n";
    let cfg = write_config(dir.path(), "run.cfg", &text);
    for sub in ["a", "b"] {
        assert_eq!(ccd(&dir.path().join(sub), &["run", cfg.to_str().unwrap()]).status.code(), Some(0));
    }
    for seed in 0..3 {
        let name = format!("trace_seed{seed}.csv");
        assert_eq!(
            fs::read(dir.path().join("a").join(&name)).unwrap(),
            fs::read(dir.path().join("b").join(&name)).unwrap()
        );
    }
}

#[test]
fn theorem1_check_passes_on_convex_quadratic() {
    let dir = TempDir::new().unwrap();
    let text = format!("{QUADRATIC}diagnostics.checks = theorem1\noutput.report_path = t1.csv\n");
    let cfg = write_config(dir.path(), "t1.cfg", &text);
    let out = ccd(dir.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let report = fs::read_to_string(dir.path().join("t1.csv")).unwrap();
    let rows = data_rows(&report);
    assert_eq!(rows.len(), 60);
    assert!(rows.iter().all(|r| r[0].starts_with("pccd_min_stationarity_rate") && r[5] == "pass"));
}

#[test]
fn trace_schema_and_empty_u_without_diagnostics() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", QUADRATIC);
    assert_eq!(ccd(dir.path(), &["run", cfg.to_str().unwrap()]).status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("trace_seed0.csv")).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "k,F,s_k,v_k,u_k,grad_component_evals,wall_ns");
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 61);
    assert!(rows.iter().all(|r| r.len() == 7 && r[4].is_empty()));
    assert!(rows[1..].iter().all(|r| !r[2].is_empty()));
    // derived values are echoed in the header block
    assert!(text.contains("# smoothness.l_hat = "));
    assert!(text.contains("# algorithm.eta = 1"));
}

#[test]
fn u_is_recorded_with_diagnostics() {
    let dir = TempDir::new().unwrap();
    let text = QUADRATIC.replace("algorithm.name = pccd", "algorithm.name = vrccd\nalgorithm.schedule = finite_sum")
        + "diagnostics.record_u = true\n";
    let cfg = write_config(dir.path(), "run.cfg", &text);
    assert_eq!(ccd(dir.path(), &["run", cfg.to_str().unwrap()]).status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("trace_seed0.csv")).unwrap();
    assert!(text.contains("# algorithm.p = "));
    assert!(text.contains("# algorithm.bprime = 3"));
    assert!(data_rows(&text)[1..].iter().all(|r| !r[4].is_empty()));
}

#[test]
fn config_errors_exit_3_and_list_every_line() {
    let dir = TempDir::new().unwrap();
    let text = format!("{QUADRATIC}algorithm.p = 1.5\nproblem.colour = red\nalgorithm.K = many\n");
    let cfg = write_config(dir.path(), "bad.cfg", &text);
    let out = ccd(dir.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr(&out);
    for line in ["line 10", "line 11", "line 12"] {
        assert!(err.contains(line), "missing {line} in {err}");
    }
}

#[test]
fn missing_config_file_is_a_runtime_error() {
    let dir = TempDir::new().unwrap();
    let out = ccd(dir.path(), &["run", dir.path().join("absent.cfg").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("absent.cfg"));
}

#[test]
fn hard_violation_exits_2() {
    // a metric below the block curvature breaks descent without diverging
    let dir = TempDir::new().unwrap();
    let text = format!("{QUADRATIC}lambda.mode = explicit\nlambda.values = 8, 8, 8\ndiagnostics.checks = descent\n");
    let cfg = write_config(dir.path(), "hard.cfg", &text);
    let out = ccd(dir.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}{}", stdout(&out), stderr(&out));
}

#[test]
fn sweep_eta_scale_gives_one_row_per_value_per_seed() {
    let dir = TempDir::new().unwrap();
    let text = QUADRATIC.replace(
        "algorithm.name = pccd",
        "algorithm.name = vrccd\nalgorithm.schedule = finite_sum\nalgorithm.eta = auto",
    ) + "seeds.count = 2\n";
    let cfg = write_config(dir.path(), "sweep.cfg", &text);
    let out =
        ccd(dir.path(), &["sweep", cfg.to_str().unwrap(), "--axis", "algorithm.eta_scale", "--values", "0.25,0.5,1.0"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("sweep_algorithm.eta_scale.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "axis,value,seed,final_F,final_s,total_work"));
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 3 * 2);
    let values: Vec<&str> = rows.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(values, ["0.25", "0.25", "0.5", "0.5", "1.0", "1.0"]);
}

#[test]
fn sweep_m_single_block_matches_prox_gd() {
    let dir = TempDir::new().unwrap();
    let text = QUADRATIC.to_string();
    let cfg = write_config(dir.path(), "m.cfg", &text);
    let out = ccd(dir.path(), &["sweep", cfg.to_str().unwrap(), "--axis", "problem.m", "--values", "1,2,4,12"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows = data_rows(&fs::read_to_string(dir.path().join("sweep_problem.m.csv")).unwrap());
    assert_eq!(rows.len(), 4);
    let single = rows.iter().find(|r| r[1] == "1").unwrap();

    let gd = text.replace("algorithm.name = pccd", "algorithm.name = prox_gd");
    let gd_cfg = write_config(dir.path(), "gd.cfg", &gd);
    let gd_dir = dir.path().join("gd");
    let out = ccd(&gd_dir, &["sweep", gd_cfg.to_str().unwrap(), "--axis", "problem.m", "--values", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let gd_rows = data_rows(&fs::read_to_string(gd_dir.join("sweep_problem.m.csv")).unwrap());
    assert_eq!(single[3..], gd_rows[0][3..]);
}

#[test]
fn sweep_bprime_rederives_p_under_schedule() {
    let dir = TempDir::new().unwrap();
    let text = QUADRATIC.replace("algorithm.name = pccd", "algorithm.name = vrccd\nalgorithm.schedule = finite_sum");
    let cfg = write_config(dir.path(), "bp.cfg", &text);
    let out = ccd(dir.path(), &["sweep", cfg.to_str().unwrap(), "--axis", "algorithm.bprime", "--values", "1,2,4"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("sweep_algorithm.bprime.csv")).unwrap();
    for (bp, p) in [(1.0, 1.0 / 9.0), (2.0, 2.0 / 10.0), (4.0, 4.0 / 12.0)] {
        let block = csv.split("# algorithm.bprime = ").find(|b| b.starts_with(&format!("{bp}"))).unwrap();
        assert!(block.contains(&format!("#   algorithm.p = {p}")), "p for b' = {bp} in {block}");
    }
}

#[test]
fn sweep_rejects_non_numeric_axis() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", QUADRATIC);
    let out = ccd(dir.path(), &["sweep", cfg.to_str().unwrap(), "--axis", "algorithm.name", "--values", "1,2"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("not a numeric"));
    let out = ccd(dir.path(), &["sweep", cfg.to_str().unwrap(), "--axis", "problem.m", "--values", "1,two"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn check_runs_a_builtin_suite() {
    let dir = TempDir::new().unwrap();
    let out = ccd(dir.path(), &["check", "equivalence"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).starts_with("[PASS]") && stdout(&out).contains("equivalence"));
    assert!(dir.path().join("equivalence_report.csv").exists());
    let out = ccd(dir.path(), &["check", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let out = ccd(dir.path(), &["check", "nonsense"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn monte_carlo_failure_exits_1() {
    // 20 cycles are far too few for the 2% cost window
    let dir = TempDir::new().unwrap();
    let text = "\
problem.family = quadratic
problem.n = 64
problem.d = 6
problem.m = 3
problem.seed = 1
algorithm.name = vroccd
algorithm.b = 32
algorithm.bprime = 2
algorithm.p = 0.5
algorithm.K = 20
diagnostics.checks = arith_cost
";
    let cfg = write_config(dir.path(), "soft.cfg", text);
    let out = ccd(dir.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", stdout(&out));
    assert!(stdout(&out).contains("low power"));
}

#[test]
fn shipped_configs_resolve() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "cfg") {
            let text = fs::read_to_string(&path).unwrap();
            ccd_cli::config::parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 4);
}
