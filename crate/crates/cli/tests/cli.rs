use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mpnr-lab"));
    c.env_remove("MPNR_LAB_WORKERS");
    c
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run_config(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("run")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("case.toml");
    std::fs::write(&p, body).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn repeated_runs_are_byte_identical() {
    let cfg = shipped("four_photon_mpnr.toml");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run_config(&cfg, a.path(), &["--workers", "1"]).status.success());
    assert!(run_config(&cfg, b.path(), &["--workers", "4"]).status.success());
    let x = std::fs::read(a.path().join("four_photon_mpnr.csv")).unwrap();
    let y = std::fs::read(b.path().join("four_photon_mpnr.csv")).unwrap();
    assert_eq!(x, y);

    let text = String::from_utf8(x).unwrap();
    assert!(!text.contains('\r'));
    assert!(text.ends_with('\n'));
    let mut lines = text.lines();
    let manifest = lines.next().unwrap();
    assert!(manifest.starts_with(&format!("# mpnr-lab {} config-sha256=", env!("CARGO_PKG_VERSION"))));
    assert_eq!(lines.next(), Some("eta,n,kappa,k,fidelity,fidelity_phase_opt,p_succ,rate_hz"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn manifest_hash_follows_the_config_text() {
    let dir = tempfile::tempdir().unwrap();
    let body = std::fs::read_to_string(shipped("gap_law_pnr.toml")).unwrap();
    let first = write_config(dir.path(), &body);
    assert!(run_config(&first, dir.path(), &[]).status.success());
    let a = std::fs::read_to_string(dir.path().join("gap_law_pnr.csv")).unwrap();
    write_config(dir.path(), &format!("# edited\n{body}"));
    assert!(run_config(&first, dir.path(), &[]).status.success());
    let b = std::fs::read_to_string(dir.path().join("gap_law_pnr.csv")).unwrap();
    assert_ne!(a.lines().next(), b.lines().next());
    assert_eq!(a.lines().skip(1).collect::<Vec<_>>(), b.lines().skip(1).collect::<Vec<_>>());
}

#[test]
fn unknown_key_exits_two_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = \"cat-breed\"\nsqueezing_db = 7.0\nn_detectors = 20\nkapa = 0.95\neta = 0.7\n",
    );
    let o = run_config(&cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("kapa"), "{}", stderr(&o));
}

#[test]
fn out_of_range_value_names_line_and_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = \"cat-breed\"\nsqueezing_db = 7.0\nn_detectors = 20\nkappa = 1.5\neta = 0.7\n",
    );
    let o = run_config(&cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("line 4") && e.contains("kappa"), "{e}");
}

#[test]
fn missing_config_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(&dir.path().join("absent.toml"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn truncation_overflow_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = \"cat-breed\"\nsqueezing_db = 7.0\nn_detectors = 20\neta = 0.7\ntruncation = 6\n",
    );
    let o = run_config(&cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("numerical failure"), "{}", stderr(&o));
    assert!(!dir.path().join("cat_breed.csv").exists());
}

#[test]
fn degenerate_herald_exits_three() {
    // no light reaches the herald arm, so two clicks never happen
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = \"cat-breed\"\nsqueezing_db = 7.0\nn_detectors = 4\nk_clicks = 2\neta = 1.0\n",
    );
    let o = run_config(&cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("condition_on_clicks"), "{}", stderr(&o));
}

#[test]
fn frontier_reaches_the_headline_region() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(&shipped("frontier_7db_n20.toml"), dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("frontier_7db_n20.csv")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(2)
        .map(|l| l.split(',').filter_map(|c| c.parse().ok()).collect())
        .collect();
    assert!(!rows.is_empty());
    // columns: eta, n, kappa, k, fidelity, fidelity_phase_opt, p_succ
    assert!(rows.iter().any(|r| r[5] >= 0.87 && r[6] >= 0.035));
    assert!(rows.windows(2).all(|w| w[0][5] <= w[1][5] && w[0][6] >= w[1][6]));
}

#[test]
fn env_var_overrides_workers_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = shipped("gap_law_pnr.toml");
    let o = bin()
        .env("MPNR_LAB_WORKERS", "zero")
        .args(["run", cfg.to_str().unwrap(), "--workers", "2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("MPNR_LAB_WORKERS"));

    let o = bin()
        .env("MPNR_LAB_WORKERS", "3")
        .args(["run", cfg.to_str().unwrap(), "--workers", "0", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn every_shipped_config_runs() {
    let out = tempfile::tempdir().unwrap();
    let mut seen = 0;
    for entry in std::fs::read_dir(shipped("")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let o = run_config(&path, out.path(), &[]);
            assert!(o.status.success(), "{}: {}", path.display(), stderr(&o));
            seen += 1;
        }
    }
    assert!(seen >= 13);
}

#[test]
fn verify_prints_one_line_per_criterion() {
    let o = bin().arg("verify").output().unwrap();
    let out = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 13, "{out}");
    assert!(lines.iter().all(|l| l.starts_with("PASS") || l.starts_with("FAIL")));
    assert!(o.status.success(), "{out}");
}
