use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kk-hydrogen"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data_lines(text: &str) -> Vec<String> {
    text.lines().filter(|l| !l.starts_with('#')).map(str::to_string).collect()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("spectrum-scan"));
    let o = run(&["--version"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn spectrum_scan_writes_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = run(&[
            "spectrum-scan", "--N", "3", "--Q", "2", "--rmin", "0.1", "--rmax", "0.2", "--levels", "2", "--out",
            path_str(out),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let rows = data_lines(&text);
    assert_eq!(rows[0], "R,E1,E2");
    assert!(rows[1].starts_with("1.00000000e-1,"));
    assert!(rows.last().unwrap().starts_with("2.00000000e-1,"));
    assert!(text.contains("# basis = hydrogen"));
    for row in &rows[1..] {
        let cells: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells.len(), 3);
        assert!(cells[1] <= cells[2]);
    }
}

#[test]
fn radius_beyond_critical_is_rejected() {
    let o = run(&["spectrum-scan", "--rmax", "0.3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("critical radius"), "{}", stderr(&o));
    let o = run(&["density", "--R", "0.26"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = run(&["convergence", "--frobnicate", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--frobnicate"));
}

#[test]
fn invalid_range_is_a_usage_error() {
    let o = run(&["toy-scan", "--invmu", "2:1:0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("invalid range"), "{}", stderr(&o));
}

#[test]
fn config_file_sets_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.cfg");
    fs::write(&cfg, "# small basis\nN = 3\nqmax = 5\nR = 0.2\n").unwrap();
    let o = run(&["convergence", "--config", path_str(&cfg), "--qmin", "1", "--qmax", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("# N = 3"));
    assert!(text.contains("# R = 0.2"));
    assert_eq!(data_lines(&text).len(), 3);

    fs::write(&cfg, "N = 3\nqmax = 2\nR = 0.2\n").unwrap();
    let o = run(&["convergence", "--config", path_str(&cfg), "--N", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("# N = 4"));
}

#[test]
fn config_problems_are_reported_distinctly() {
    let o = run(&["convergence", "--config", "/nonexistent/dir/x.cfg"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cannot read config file"), "{}", stderr(&o));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "colour = blue\n").unwrap();
    let o = run(&["convergence", "--config", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad entry in config file"), "{}", stderr(&o));

    fs::write(&cfg, "just words\n").unwrap();
    let o = run(&["convergence", "--config", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));
}

#[test]
fn toy_scan_rows() {
    let o = run(&["toy-scan", "--invmu", "1,2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = data_lines(&stdout(&o));
    assert_eq!(rows[0], "inv_mu,E_shooting,E_hydrogen,E_exponential");
    assert_eq!(rows.len(), 3);
}

#[test]
fn degeneracy_columns() {
    let o = run(&["degeneracy", "--N", "4", "--Q", "2", "--R", "0.02,0.1", "--levels", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = data_lines(&stdout(&o));
    assert_eq!(rows[0], "R,l0_n1,l0_n2,l1_n2,l1_n3,kk_n1_q1");
    assert_eq!(rows.len(), 3);
}

#[test]
fn density_with_matrix_dump() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rho.csv");
    let dump = dir.path().join("h.txt");
    let o = run(&[
        "density", "--basis", "exponential", "--N", "4", "--Q", "2", "--R", "0.2", "--nr", "11", "--ntheta", "8",
        "--out", path_str(&out), "--dump-matrix", path_str(&dump),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("# localization = "));
    let rows = data_lines(&text);
    assert_eq!(rows[0], "r,theta,density");
    assert_eq!(rows.len(), 1 + 11 * 8);
    let dumped = fs::read_to_string(&dump).unwrap();
    assert!(dumped.starts_with("dim=20 basis=exponential R=0.2 N=4 Q=2"));
    assert!(dumped.contains("\noverlap\n"));
}

#[test]
fn density_state_out_of_range() {
    let o = run(&["density", "--N", "2", "--Q", "1", "--state", "99"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn potential_table_forms_agree() {
    let o = run(&["potential-table", "--R", "0.25", "--nr", "4", "--ntheta", "6"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = data_lines(&stdout(&o));
    assert_eq!(rows[0], "r,theta,closed,image_sum,image_sum_corrected,fourier");
    assert_eq!(rows.len(), 1 + 4 * 6);
    for row in &rows[1..] {
        let v: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(((v[4] - v[2]) / v[2]).abs() < 1e-7);
        assert!(((v[5] - v[2]) / v[2]).abs() < 1e-7);
    }
}
