//! End-to-end checks of the binary: flag surface, output formats, exit
//! codes, and byte-level determinism of the CSV artifact.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ifofdm"))
}

#[test]
fn dof_prints_rational_and_decimal() {
    let out = bin()
        .args(["dof", "--k", "4", "--ld", "2", "--li", "1"])
        .output()
        .expect("run binary");
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout), "2 (= 2.000000)\n");
}

#[test]
fn dof_optional_lines() {
    let out = bin()
        .args([
            "dof", "--k", "4", "--ld", "3", "--li", "2", "--symmetric", "--m-tdma", "64",
            "--antennas", "3",
        ])
        .output()
        .expect("run binary");
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "4/3 (= 1.333333)");
    assert_eq!(lines[1], "symmetric: 4/3 (= 1.333333)");
    assert_eq!(lines[2], "tdma-ofdm: 32/33 (= 0.969697)");
    assert_eq!(lines[3], "mimo-circulant: 6 (= 6.000000)");
}

#[test]
fn no_arguments_is_usage_error() {
    let out = bin().output().expect("run binary");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = bin()
        .args(["dof", "--k", "4", "--ld", "2", "--li", "1", "--frobnicate"])
        .output()
        .expect("run binary");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn degenerate_dof_falls_back_to_unity() {
    let out = bin()
        .args(["dof", "--k", "3", "--ld", "2", "--li", "2"])
        .output()
        .expect("run binary");
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout), "1 (= 1.000000)\n");
}

#[test]
fn sweep_writes_deterministic_csv() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path_a = dir.path().join("a.csv");
    let path_b = dir.path().join("b.csv");
    for path in [&path_a, &path_b] {
        let out = bin()
            .args([
                "sweep",
                "--scheme",
                "if-ofdm,tdma-ofdm",
                "--k",
                "2,4",
                "--ld",
                "2",
                "--li",
                "1",
                "--snr",
                "0:10:5",
                "--trials",
                "25",
                "--seed",
                "7",
                "--out",
            ])
            .arg(path)
            .output()
            .expect("run binary");
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(&path_a).expect("read a");
    let b = std::fs::read(&path_b).expect("read b");
    assert_eq!(a, b);

    let text = String::from_utf8(a).expect("utf-8");
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("snr_db,k,scheme,trials,mean_sum_se,stderr"));
    // 2 schemes x 2 user counts x 3 SNR points
    assert_eq!(lines.count(), 12);
    assert!(!text.contains('\r'));
}

#[test]
fn sweep_rejects_unknown_scheme() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = bin()
        .args([
            "sweep", "--scheme", "cdma", "--k", "2", "--ld", "2", "--li", "1", "--snr",
            "0:10:5", "--trials", "5", "--out",
        ])
        .arg(dir.path().join("x.csv"))
        .output()
        .expect("run binary");
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown scheme"));
}

#[test]
fn validate_passes_and_exits_zero() {
    let out = bin().args(["validate", "--seed", "3"]).output().expect("run binary");
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for name in [
        "circulant-reconstruction",
        "iui-nulling",
        "noiseless-round-trip",
        "waterfill-kkt",
    ] {
        assert!(text.contains(name), "missing check {name} in: {text}");
    }
    assert!(text.contains("validation passed"));
}
