use std::path::Path;
use std::process::{Command, Output};

fn tfc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tfc"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn run_sweep(dir: &Path, name: &str, problem: &str, n: &str, m: &str) -> Output {
    let out = dir.join(name);
    tfc(&[
        "run",
        "--problem",
        problem,
        "--basis",
        "chebyshev",
        "--n",
        n,
        "--m",
        m,
        "--out",
        out.to_str().unwrap(),
        "--repeats",
        "1",
    ])
}

/// CSV text with the two timing columns blanked.
fn without_timings(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers = r.headers().unwrap().clone();
    let skip: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.contains("time"))
        .map(|(i, _)| i)
        .collect();
    assert_eq!(skip.len(), 2);
    r.records()
        .map(|rec| {
            rec.unwrap()
                .iter()
                .enumerate()
                .filter(|(i, _)| !skip.contains(i))
                .map(|(_, v)| v.to_string())
                .collect()
        })
        .collect()
}

#[test]
fn sweep_csv_is_deterministic_and_has_one_row_per_valid_cell() {
    let dir = tempfile::tempdir().unwrap();
    assert!(
        run_sweep(dir.path(), "a.csv", "problem1", "5,10,12", "5,10")
            .status
            .success()
    );
    assert!(
        run_sweep(dir.path(), "b.csv", "problem1", "12,5,10", "10,5")
            .status
            .success()
    );
    let a = without_timings(&dir.path().join("a.csv"));
    let b = without_timings(&dir.path().join("b.csv"));
    assert_eq!(a, b);
    // (5,5) (10,5) (10,10) (12,5) (12,10)
    assert_eq!(a.len(), 5);
    let nm: Vec<(String, String)> = a.iter().map(|r| (r[2].clone(), r[3].clone())).collect();
    assert_eq!(nm[0], ("5".into(), "5".into()));
    assert_eq!(nm[4], ("12".into(), "10".into()));
    assert_eq!(a[0][4], "17");
}

#[test]
fn csv_header_and_number_format() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_sweep(dir.path(), "r.csv", "problem1", "10", "10")
        .status
        .success());
    let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "problem,basis,n,m,num_features,max_train_err,max_test_err,ls_time_ms,total_time_s,converged,gn_iters"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..5], &["problem1", "chebyshev", "10", "10", "62"]);
    let test_err: f64 = row[6].parse().unwrap();
    assert!((1e-11..=1e-9).contains(&test_err));
    assert!(row[6].contains('e') && row[6].split('e').next().unwrap().len() == 7);
    assert_eq!(row[9], "true");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let out = out.to_str().unwrap();

    let ok = tfc(&[
        "run",
        "--problem",
        "problem2",
        "--n",
        "10",
        "--m",
        "10",
        "--out",
        out,
        "--strict",
        "--repeats",
        "1",
    ]);
    assert_eq!(
        ok.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&ok.stderr)
    );

    let miss = tfc(&[
        "run",
        "--problem",
        "problem2",
        "--n",
        "10",
        "--m",
        "10",
        "--out",
        out,
        "--strict",
        "--repeats",
        "1",
        "--strict-factor",
        "0.5",
    ]);
    assert_eq!(miss.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&miss.stderr).contains("strict"));

    assert_eq!(
        tfc(&[
            "run",
            "--problem",
            "problem9",
            "--n",
            "5",
            "--m",
            "5",
            "--out",
            out
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        tfc(&[
            "run",
            "--problem",
            "problem1",
            "--basis",
            "hermite",
            "--n",
            "5",
            "--m",
            "5",
            "--out",
            out
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        tfc(&[
            "run",
            "--problem",
            "problem1",
            "--n",
            "1",
            "--m",
            "1",
            "--out",
            out
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(tfc(&["bogus"]).status.code(), Some(2));
    let empty = tempfile::tempdir().unwrap();
    let s = tfc(&[
        "surface",
        "--problem",
        "problem1",
        "--from",
        empty.path().to_str().unwrap(),
        "--out",
        out,
    ]);
    assert_eq!(s.status.code(), Some(2));
}

#[test]
fn thread_cap_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_tfc"))
            .args([
                "run",
                "--problem",
                "problem1",
                "--n",
                "5",
                "--m",
                "5",
                "--repeats",
                "1",
                "--out",
                out.to_str().unwrap(),
            ])
            .env("TFC_THREADS", threads)
            .output()
            .unwrap()
    };
    assert_eq!(run("1").status.code(), Some(0));
    assert_eq!(run("zero").status.code(), Some(2));
}

fn surface_rows(path: &Path) -> Vec<[f64; 5]> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "x y u u_true abs_err");
    lines
        .map(|l| {
            let v: Vec<f64> = l.split_whitespace().map(|t| t.parse().unwrap()).collect();
            [v[0], v[1], v[2], v[3], v[4]]
        })
        .collect()
}

#[test]
fn surface_corners() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_sweep(dir.path(), "p1.csv", "problem1", "12", "12")
        .status
        .success());
    assert!(run_sweep(dir.path(), "p2.csv", "problem2", "12", "12")
        .status
        .success());
    let s1 = dir.path().join("s1.dat");
    let from = dir.path().to_str().unwrap();
    let r = tfc(&[
        "surface",
        "--problem",
        "problem1",
        "--from",
        from,
        "--res",
        "100",
        "--out",
        s1.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let rows = surface_rows(&s1);
    assert_eq!(rows.len(), 10_000);
    let at =
        |rows: &[[f64; 5]], x: f64, y: f64| *rows.iter().find(|r| r[0] == x && r[1] == y).unwrap();
    let origin = at(&rows, 0.0, 0.0);
    assert_eq!((origin[2], origin[3]), (0.0, 0.0));
    let far = at(&rows, 1.0, 1.0);
    assert!((far[3] - 2.0 / std::f64::consts::E).abs() < 1e-16);
    assert!((far[2] - far[3]).abs() < 1e-15);

    let s2 = dir.path().join("s2.dat");
    let r = tfc(&[
        "surface",
        "--problem",
        "problem2",
        "--from",
        from,
        "--res",
        "20",
        "--n",
        "12",
        "--out",
        s2.to_str().unwrap(),
    ]);
    assert!(r.status.success());
    let rows = surface_rows(&s2);
    assert_eq!(rows.len(), 400);
    assert_eq!(at(&rows, 1.0, 0.0)[3], 1.0);
    assert!(rows.iter().all(|r| r[4] < 1e-5));
}

#[test]
fn check_passes_and_detects_an_injected_fault() {
    let ok = tfc(&["check", "--random-cases", "10"]);
    assert_eq!(ok.status.code(), Some(0));
    let text = String::from_utf8_lossy(&ok.stdout);
    assert!(text.contains("PASS switching kronecker"));
    assert!(text.contains("singular support detection"));
    assert!(!text.contains("FAIL"));

    let bad = tfc(&["check", "--random-cases", "0", "--inject-fault"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL switching kronecker"));
}
