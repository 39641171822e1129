use mfs_cli::report::Report;
use std::path::PathBuf;
use std::process::{Command, Output};

fn mfs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfs")).args(args).env_remove("MFS_THREADS").output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mfs-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

const PRESSURE: &[&str] = &["pressure", "--system", "lueroth", "--psi", "negid", "--t", "0.5,1", "--beta", "0,1"];
const SPECTRUM: &[&str] =
    &["spectrum", "--system", "finite:ratios=0.3,0.5", "--psi", "list:values=-1,-2", "--beta", "-3:3:0.5", "--alpha", "1,2"];
const EXHAUST: &[&str] =
    &["exhaust", "--system", "lueroth", "--psi", "negid", "--n", "2,4", "--beta", "-2:2:1", "--alpha", "1.25,1.27", "--no-full"];

#[test]
fn csv_headers_per_command() {
    let cases: &[(&[&str], &str)] = &[
        (PRESSURE, "t,beta,kind,p_lo,p_hi,sign"),
        (&["free-energy", "--system", "lueroth", "--psi", "negid", "--beta", "0,1"], "beta,t_lo,t_hi,infinite,zero_exists"),
        (SPECTRUM, "alpha,f,region,clamped"),
        (EXHAUST, "n,alpha_minus,alpha_plus,boundary_f,boundary_collapse,rho_lo,rho_hi,t_gap"),
        (&["rho", "--system-a", "gauss", "--system-b", "lueroth", "--depth", "8"], "depth,rho_lo,rho_hi"),
        (&["lambda-check", "--system-a", "lueroth:trunc=4", "--system-b", "lueroth"], "pass,worst_ratio,worst_symbol,symbols_checked"),
    ];
    for (args, header) in cases {
        let out = mfs(args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(stdout(&out).lines().next(), Some(*header), "{args:?}");
    }
}

#[test]
fn pressure_rows_parse_back() {
    let text = stdout(&mfs(PRESSURE));
    let rows: Vec<Vec<String>> = text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 4);
    let infinite = rows.iter().find(|r| r[0].parse::<f64>().unwrap() == 0.5 && r[1].parse::<f64>().unwrap() == 0.0).unwrap();
    assert_eq!((infinite[2].as_str(), infinite[3].as_str()), ("plus_infinity", "inf"));
    for r in &rows {
        assert!(r[3].parse::<f64>().unwrap() <= r[4].parse::<f64>().unwrap());
    }
}

#[test]
fn output_is_deterministic() {
    for args in [PRESSURE, SPECTRUM, EXHAUST] {
        let (a, b) = (mfs(args), mfs(args));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        let mut json = args.to_vec();
        json.extend(["--format", "json"]);
        assert_eq!(mfs(&json).stdout, mfs(&json).stdout, "{args:?} json");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_mfs")).args(PRESSURE).env("MFS_THREADS", threads).output().unwrap()
    };
    let (one, four) = (run("1"), run("4"));
    assert!(one.status.success() && four.status.success());
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(run("0").status.code(), Some(2));
}

#[test]
fn json_reports_round_trip() {
    for args in [PRESSURE, SPECTRUM, EXHAUST] {
        let mut json = args.to_vec();
        json.extend(["--format", "json"]);
        let out = mfs(&json);
        assert!(out.status.success());
        let report: Report = serde_json::from_slice(&out.stdout).unwrap();
        let again = serde_json::to_vec_pretty(&report).unwrap();
        assert_eq!(again, out.stdout[..out.stdout.len() - 1], "{args:?}");
    }
}

#[test]
fn config_file_merges_with_flags() {
    let path = scratch("spectrum.json");
    std::fs::write(
        &path,
        r#"{"system": "finite:ratios=0.3,0.5", "psi": "list:values=-1,-2", "beta": [-3, -1, 1, 3], "alpha": "1:2:0.5", "format": "json"}"#,
    )
    .unwrap();
    let cfg = path.to_str().unwrap();
    let from_file = mfs(&["spectrum", "--config", cfg]);
    assert!(from_file.status.success(), "{}", String::from_utf8_lossy(&from_file.stderr));
    let Report::Spectrum(r) = serde_json::from_slice(&from_file.stdout).unwrap() else { panic!("not a spectrum") };
    assert_eq!(r.curve.points.len(), 4);
    assert_eq!(r.spectrum.points.len(), 3);

    let overridden = mfs(&["spectrum", "--config", cfg, "--alpha", "1.5", "--format", "csv"]);
    assert!(overridden.status.success());
    assert_eq!(stdout(&overridden).lines().count(), 2);

    let out_path = scratch("spectrum.csv");
    let written = mfs(&["spectrum", "--config", cfg, "--format", "csv", "-o", out_path.to_str().unwrap()]);
    assert!(written.status.success() && written.stdout.is_empty());
    assert!(std::fs::read_to_string(&out_path).unwrap().starts_with("alpha,f,region,clamped\n"));
}

#[test]
fn usage_errors_exit_2() {
    let bad_key = scratch("bad.json");
    std::fs::write(&bad_key, r#"{"system": "gauss", "colour": "blue"}"#).unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["spectrum", "--system", "gauss", "--psi", "negid", "--beta", "-1:1:1"],
        vec!["pressure", "--system", "gauss", "--psi", "negid"],
        vec!["pressure", "--system", "cantor", "--psi", "negid", "--t", "1"],
        vec!["free-energy", "--system", "gauss", "--psi", "negid", "--beta", "1,0"],
        vec!["exhaust", "--system", "gauss", "--psi", "negid", "--alpha", "1", "--beta", "-1:1:1"],
        vec!["free-energy", "--config", bad_key.to_str().unwrap(), "--psi", "negid"],
        vec!["free-energy", "--config", "/nonexistent/mfs.json"],
        vec!["rho", "--system-a", "gauss"],
        vec!["no-such-command"],
    ];
    for args in cases {
        let out = mfs(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn computation_errors_exit_1() {
    let out = mfs(&["lambda-check", "--system-a", "gauss", "--system-b", "gauss:trunc=4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nested"));
}

#[test]
fn lambda_check_reports_pass() {
    let out = mfs(&["lambda-check", "--system-a", "lueroth:trunc=4", "--system-b", "lueroth", "--format", "json"]);
    let Report::LambdaCheck(r) = serde_json::from_slice(&out.stdout).unwrap() else { panic!("not a lambda report") };
    assert!(r.check.pass);
}
