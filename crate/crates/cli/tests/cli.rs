use std::fs;
use std::path::Path;
use std::process::Command;

fn kpp() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kpp"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, body).unwrap();
    p
}

const LINEAR: &str = r#"
t_max = 40.0
eps = [-0.25, 0.25]
c = [2.5, 3.0]

[ic]
kind = "step"

[nonlinearity]
kind = "zero"

[solver]
c_max = 3.0
"#;

#[test]
fn expand_prints_table() {
    let out = kpp().args(["expand", "--alpha", "1", "--beta", "0", "--eps", "0.1"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().nth(1).unwrap();
    let v: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((v - 0.22586).abs() < 1e-4, "{row}");
}

#[test]
fn wave_reports_tail_coefficients() {
    let out = kpp().args(["wave", "--stride", "500"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# alpha_tilde: "));
    assert!(text.contains("zeta,omega"));
}

#[test]
fn missing_config_is_an_error() {
    let out = kpp().arg("evolve").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--config"));
}

#[test]
fn linear_phi_and_magic_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), LINEAR);
    let out = kpp()
        .args(["phi", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut seen = 0;
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (c, v): (f64, f64) = (f[0].parse().unwrap(), f[2].parse().unwrap());
        assert!((v - 2.0 / c).abs() < 0.01 * 2.0 / c, "{line}");
        seen += 1;
    }
    assert_eq!(seen, 5);

    let out = kpp()
        .args(["magic-check", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let res: Vec<f64> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(res.len(), 2);
    assert!(res.iter().all(|r| r.abs() < 1e-6), "{res:?}");
}

#[test]
fn same_seed_gives_identical_tables() {
    let body = r#"
t_max = 40.0
eps = [0.0]
c = [2.5]
seed = 3

[ic]
kind = "step"

[nonlinearity]
kind = "quadratic"

[solver]
c_max = 2.5

[fk]
enabled = true
n_paths = 2000
ds = 0.02
"#;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = write_config(a.path(), body);
    for d in [&a, &b] {
        let st = kpp()
            .args(["fk-mc", "--config", cfg.to_str().unwrap(), "--out", d.path().to_str().unwrap(), "--threads", "2"])
            .status()
            .unwrap();
        assert!(st.success());
    }
    let sub = |d: &Path| fs::read_dir(d).unwrap().map(|e| e.unwrap().path()).find(|p| p.is_dir()).unwrap();
    let (ra, rb) = (sub(a.path()), sub(b.path()));
    assert_eq!(ra.file_name(), rb.file_name());
    for t in ["mu.csv", "phi.csv", "phi_routes.csv"] {
        assert_eq!(fs::read(ra.join(t)).unwrap(), fs::read(rb.join(t)).unwrap(), "{t}");
    }
}
