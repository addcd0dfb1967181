use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use radpair::commands::{load_config, Overrides};
use radpair::SimulationConfig;

const SMALL: &str = r#"
[[nuclei]]
label = "H1"
spin = 0.5
electron = 0
hyperfine = { isotropic = 1.0 }

[[nuclei]]
label = "N1"
spin = 1.0
electron = 1
hyperfine = { axial = { iso = 0.4, axial = 0.2, axis = [0.0, 0.0, 1.0] } }

[field]
magnitude_mt = 0.3
theta_deg = 30.0
phi_deg = 10.0

[kinetics]
k_b = 2.0
k_f = 0.3

[dissipation]
gamma_st = 0.5
gamma_rf = [0.2, 0.1]

[run]
method = "mcwf"
n_samples = 300
master_seed = 42
t_max = 2.0
grid_dt = 0.01
"#;

fn radpair(args: &[&str], out_env: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_radpair"));
    cmd.args(args).env_remove("RADPAIR_OUT");
    if let Some(dir) = out_env {
        cmd.env("RADPAIR_OUT", dir);
    }
    cmd.output().expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn repo_configs() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    v.sort();
    v
}

#[test]
fn bundled_configs_load() {
    let configs = repo_configs();
    assert!(configs.len() >= 4);
    for p in configs {
        let cfg = load_config(&p, &Overrides::default()).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert!(cfg.dim().unwrap() >= 8, "{}", p.display());
    }
}

#[test]
fn illustrative_configs_say_so() {
    for p in repo_configs() {
        let text = std::fs::read_to_string(&p).unwrap();
        if text.contains("axial =") && p.file_name().unwrap().to_string_lossy().contains("probe") {
            assert!(text.contains("ILLUSTRATIVE"), "{}", p.display());
        }
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    ok(&radpair(&["run", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()], None));
    ok(&radpair(&["run", cfg.to_str().unwrap(), "--out", b.to_str().unwrap()], None));
    let ca = std::fs::read(a.join("mcwf.csv")).unwrap();
    let cb = std::fs::read(b.join("mcwf.csv")).unwrap();
    assert_eq!(ca, cb);
    let text = String::from_utf8(ca).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t_us,p1,p1_stderr,pS,pS_stderr"));
    assert_eq!(lines.count(), 201);
}

#[test]
fn worker_count_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let mut outputs = Vec::new();
    for w in ["1", "4", "8"] {
        let dir = tmp.path().join(format!("w{w}"));
        ok(&radpair(
            &["run", cfg.to_str().unwrap(), "--workers", w, "--out", dir.to_str().unwrap()],
            None,
        ));
        outputs.push(std::fs::read(dir.join("mcwf.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn seed_changes_results() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    ok(&radpair(&["run", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()], None));
    ok(&radpair(
        &["run", cfg.to_str().unwrap(), "--seed", "43", "--out", b.to_str().unwrap()],
        None,
    ));
    assert_ne!(
        std::fs::read(a.join("mcwf.csv")).unwrap(),
        std::fs::read(b.join("mcwf.csv")).unwrap()
    );
}

#[test]
fn manifest_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let a = tmp.path().join("a");
    ok(&radpair(
        &["run", cfg.to_str().unwrap(), "--samples", "150", "--seed", "9", "--out", a.to_str().unwrap()],
        None,
    ));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 9);
    assert_eq!(manifest["config"]["run"]["n_samples"], 150);
    assert_eq!(manifest["dim"], 24);
    assert_eq!(manifest["outputs"][0], "mcwf.csv");

    // The manifest records the output directory too; send the rerun elsewhere.
    let b = tmp.path().join("b");
    ok(&radpair(
        &["run", a.join("manifest.json").to_str().unwrap(), "--out", b.to_str().unwrap()],
        None,
    ));
    assert_eq!(
        std::fs::read(a.join("mcwf.csv")).unwrap(),
        std::fs::read(b.join("mcwf.csv")).unwrap()
    );
}

#[test]
fn compare_writes_all_series() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL.replace("method = \"mcwf\"", "method = \"compare\"") + "\n[output]\nformats = [\"csv\", \"gnuplot\"]\n";
    let cfg = write_config(tmp.path(), "cmp.toml", &text);
    let dir = tmp.path().join("out");
    let out = radpair(&["compare", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()], None);
    ok(&out);
    for f in ["mcwf.csv", "me.csv", "deviation.csv", "mcwf.gp", "me.gp", "deviation.gp", "manifest.json"] {
        assert!(dir.join(f).exists(), "missing {f}");
    }
    let dev = std::fs::read_to_string(dir.join("deviation.csv")).unwrap();
    assert!(dev.starts_with("t_us,f1_mcwf,f1_me,df1,fS_mcwf,fS_me,dfS\n"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    let e1 = manifest["summary"]["E1"].as_f64().unwrap();
    assert!(e1 > 0.0 && e1 < 0.1, "{e1}");
    // At least 12 significant digits.
    let row = dev.lines().nth(5).unwrap();
    let mantissa = row.split(',').nth(1).unwrap().split('e').next().unwrap();
    assert!(mantissa.chars().filter(|c| c.is_ascii_digit()).count() >= 12, "{row}");
}

#[test]
fn environment_variable_sets_the_output_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", &SMALL.replace("n_samples = 300", "n_samples = 20"));
    let dir = tmp.path().join("from-env");
    ok(&radpair(&["run", cfg.to_str().unwrap()], Some(&dir)));
    assert!(dir.join("mcwf.csv").exists());
    assert!(dir.join("manifest.json").exists());

    // --out wins over the environment.
    let explicit = tmp.path().join("explicit");
    ok(&radpair(&["run", cfg.to_str().unwrap(), "--out", explicit.to_str().unwrap()], Some(&dir)));
    assert!(explicit.join("mcwf.csv").exists());
}

#[test]
fn master_equation_refuses_above_the_cap() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL.replace("method = \"mcwf\"", "method = \"me\"\nme_dim_cap = 16");
    let cfg = write_config(tmp.path(), "cap.toml", &text);
    let dir = tmp.path().join("out");
    let out = radpair(&["run", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()], None);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("dimension 24 exceeds the cap 16"), "{err}");
    assert!(err.contains("bytes"), "{err}");
    assert!(!dir.join("me.csv").exists());
}

#[test]
fn invalid_config_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", &SMALL.replace("k_b = 2.0", "k_b = -2.0"));
    let out = radpair(&["run", cfg.to_str().unwrap()], Some(tmp.path()));
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("kinetics.k_b"), "{err}");

    let cfg = write_config(tmp.path(), "typo.toml", &SMALL.replace("t_max = 2.0", "tmax = 2.0"));
    let out = radpair(&["run", cfg.to_str().unwrap()], Some(tmp.path()));
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("tmax"));
}

#[test]
fn me_run_reports_spectrum_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL.replace("method = \"mcwf\"", "method = \"me\"");
    let cfg = write_config(tmp.path(), "me.toml", &text);
    let dir = tmp.path().join("out");
    ok(&radpair(&["run", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()], None));
    let m = radpair::manifest::Manifest::read(&dir.join("manifest.json")).unwrap();
    let eig = m.summary["min_eigenvalues"].as_array().unwrap();
    assert_eq!(eig.len(), 4);
    for pair in eig {
        assert!(pair[1].as_f64().unwrap() >= -1e-8);
    }
    assert!(m.warnings.is_empty(), "{:?}", m.warnings);
}

#[test]
fn config_round_trips_through_toml() {
    let cfg = SimulationConfig::from_toml_str(SMALL).unwrap();
    let again = SimulationConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
    assert_eq!(cfg, again);
}

#[test]
fn bench_writes_a_table() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL.to_string() + "\n[bench]\nmax_added_protons = 1\ntrajectories = 5\nt_max = 0.2\n";
    let cfg = write_config(tmp.path(), "bench.toml", &text);
    let dir = tmp.path().join("out");
    ok(&radpair(&["bench", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()], None));
    let csv = std::fs::read_to_string(dir.join("bench.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}
