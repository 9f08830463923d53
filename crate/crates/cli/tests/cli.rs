use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_eprsim");

fn reference_cfg() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../paper.cfg")
}

fn eprsim(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn eprsim")
}

fn unpumped_config(dir: &Path) -> PathBuf {
    let text = fs::read_to_string(reference_cfg())
        .unwrap()
        .replace("pump_param = 0.2946916681592727", "pump_param = 0.0")
        .replace("pump_param = 0.25673920526167515", "pump_param = 0.0");
    assert_eq!(text.matches("pump_param = 0.0\n").count(), 2);
    let p = dir.join("vacuum.toml");
    fs::write(&p, text).unwrap();
    p
}

fn fingerprint_line(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

/// (first column, second column) of a two-column CSV after its header rows.
fn columns(path: &Path) -> Vec<(f64, f64)> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(2)
        .map(|l| {
            let mut it = l.split(',').map(|c| c.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect()
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dirs = [TempDir::new().unwrap(), TempDir::new().unwrap()];
    let cfg = reference_cfg();
    for d in &dirs {
        let out = eprsim(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--reps",
            "2",
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let names = [
        "report.csv",
        "psd.csv",
        "psd_sum_p.csv",
        "diagram.csv",
        "diagram_p.csv",
        "trace.csv",
        "trace_p.csv",
    ];
    let fp = fingerprint_line(&dirs[0].path().join("report.csv"));
    assert!(fp.starts_with("# config_fingerprint="), "{fp}");
    for n in names {
        let a = fs::read(dirs[0].path().join(n)).unwrap();
        let b = fs::read(dirs[1].path().join(n)).unwrap();
        assert!(a == b, "{n} differs between runs");
        assert_eq!(fingerprint_line(&dirs[0].path().join(n)), fp, "{n}");
    }

    let other = TempDir::new().unwrap();
    let out = eprsim(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--reps",
        "2",
        "--seed",
        "1",
        "--out",
        other.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_ne!(fingerprint_line(&other.path().join("report.csv")), fp);
    assert_ne!(
        fs::read(other.path().join("diagram.csv")).unwrap(),
        fs::read(dirs[0].path().join("diagram.csv")).unwrap()
    );
}

#[test]
fn spectra_of_unpumped_opos_are_vacuum() {
    let dir = TempDir::new().unwrap();
    let cfg = unpumped_config(dir.path());
    let out_dir = dir.path().join("out");
    let out = eprsim(&[
        "spectra",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    for name in ["psd.csv", "psd_sum_p.csv"] {
        let rows = columns(&out_dir.join(name));
        assert!(rows.iter().all(|&(_, db)| db == 0.0), "{name}");
        // ≥ 50 points per decade over 1 kHz – 100 MHz
        assert!(rows.len() > 5 * 50, "{name}: {}", rows.len());
        assert!(rows.windows(2).all(|w| w[1].0 > w[0].0));
    }
    let text = fs::read_to_string(out_dir.join("variances.csv")).unwrap();
    let mut lines = text.lines().skip(1);
    assert_eq!(
        lines.next().unwrap(),
        "t_s,var_diff_x,var_diff_x_db,var_sum_p,var_sum_p_db,duan"
    );
    let mut n = 0;
    for l in lines {
        let v: Vec<f64> = l.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(&v[1..], &[1.0, 0.0, 1.0, 0.0, 1.0], "{l}");
        n += 1;
    }
    // 0.01–10 µs at 50 per decade
    assert!(n >= 151, "{n}");
}

#[test]
fn degenerate_optimize_reports_unity() {
    let dir = TempDir::new().unwrap();
    let cfg = unpumped_config(dir.path());
    let out_dir = dir.path().join("out");
    let out = eprsim(&[
        "optimize",
        "--config",
        cfg.to_str().unwrap(),
        "--family",
        "square",
        "--budget",
        "16",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = columns(&out_dir.join("optimize.csv"));
    assert!(!rows.is_empty() && rows.len() <= 16);
    assert!(rows.iter().all(|&(_, d)| d == 1.0));
}

#[test]
fn calibrate_reproduces_shipped_pumps() {
    let out = eprsim(&[
        "calibrate",
        "--config",
        reference_cfg().to_str().unwrap(),
        "--x-db",
        "-3.30",
        "--p-db",
        "-3.74",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let printed: toml::Table = toml::from_str(&String::from_utf8(out.stdout).unwrap()).unwrap();
    let shipped: toml::Table = toml::from_str(&fs::read_to_string(reference_cfg()).unwrap()).unwrap();
    for opo in ["opo1", "opo2"] {
        let got = printed[opo]["pump_param"].as_float().unwrap();
        let want = shipped[opo]["pump_param"].as_float().unwrap();
        assert!((got - want).abs() < 1e-9, "{opo}: {got} vs {want}");
    }
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let cfg = reference_cfg();
    let cfg = cfg.to_str().unwrap();

    // usage
    let out = eprsim(&["optimize", "--config", cfg, "--budget", "15"]);
    assert_eq!(out.status.code(), Some(2));
    let out = eprsim(&["optimize", "--config", cfg, "--family", "gaussian"]);
    assert_eq!(out.status.code(), Some(2));
    let out = eprsim(&["run", "--config", cfg, "--reps", "0"]);
    assert_eq!(out.status.code(), Some(2));

    // configuration, with the offending line
    let bad = dir.path().join("bad.toml");
    let text = fs::read_to_string(cfg).unwrap().replace("seed = 2007", "sede = 2007");
    fs::write(&bad, &text).unwrap();
    let line = text.lines().position(|l| l.starts_with("sede")).unwrap() + 1;
    let out = eprsim(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(&format!("line {line}")), "{err}");

    let above = dir.path().join("above.toml");
    fs::write(
        &above,
        fs::read_to_string(cfg)
            .unwrap()
            .replace("pump_param = 0.2946916681592727", "pump_param = 1.2"),
    )
    .unwrap();
    let out = eprsim(&["spectra", "--config", above.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));

    // io
    let out = eprsim(&["run", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(5));
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = eprsim(&[
        "spectra",
        "--config",
        cfg,
        "--out",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn single_repetition_has_na_errors() {
    let dir = TempDir::new().unwrap();
    let out = eprsim(&[
        "run",
        "--config",
        reference_cfg().to_str().unwrap(),
        "--reps",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let summary = report.lines().last().unwrap();
    let cells: Vec<&str> = summary.split(',').collect();
    assert_eq!(cells[0], "summary");
    assert_eq!([cells[2], cells[4], cells[6]], ["NA"; 3]);
    assert_eq!(cells[7], "10000");
}
