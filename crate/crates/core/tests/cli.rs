use std::path::Path;
use std::process::{Command, Output};

const TINY: &[&str] = &[
    "--env",
    "bitflip:4",
    "--epochs",
    "2",
    "--cycles",
    "2",
    "--optimizer-steps",
    "5",
    "--batch-size",
    "16",
    "--eval-episodes",
    "4",
    "--hidden",
    "16",
];

fn hercs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hercs"))
        .args(args)
        .output()
        .unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[test]
fn run_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let mut args = vec!["run", "--algo", "her", "--seeds", "1", "--out", out];
    args.extend_from_slice(TINY);
    let result = hercs(&args);
    assert!(result.status.success(), "{}", text(&result.stderr));
    assert!(text(&result.stdout).contains("results written to"));
    for file in [
        "her/seed_1.csv",
        "her/aggregate.csv",
        "chart.svg",
        "summary.csv",
        "manifest.json",
    ] {
        assert!(Path::new(out).join(file).is_file(), "missing {file}");
    }
    let csv = std::fs::read_to_string(Path::new(out).join("her/seed_1.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn compare_charts_every_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let mut args = vec![
        "compare",
        "--algo",
        "her,her-cs",
        "--seeds",
        "1,2",
        "--k",
        "2",
        "--fgb-capacity",
        "4",
        "--out",
        out,
    ];
    args.extend_from_slice(TINY);
    let result = hercs(&args);
    assert!(result.status.success(), "{}", text(&result.stderr));
    let stdout = text(&result.stdout);
    assert!(stdout.contains("her-cs") && stdout.contains("auc"));
    let svg = std::fs::read_to_string(Path::new(out).join("chart.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert!(Path::new(out).join("her-cs/refits_seed_2.jsonl").is_file());
}

#[test]
fn run_refuses_several_algorithms() {
    let result = hercs(&["run", "--algo", "her,vanilla", "--epochs", "1"]);
    assert_eq!(result.status.code(), Some(1));
    assert!(text(&result.stderr).contains("compare"));
}

#[test]
fn validate_config_echoes_a_good_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.conf");
    std::fs::write(&path, "# comment\nenv = push2d\nalgo = her,her-cs\nk = 3\n").unwrap();
    let result = hercs(&[
        "validate-config",
        "--config",
        path.to_str().unwrap(),
        "--seeds",
        "7,8",
    ]);
    assert!(result.status.success(), "{}", text(&result.stderr));
    let stdout = text(&result.stdout);
    assert!(stdout.contains("env = push2d"));
    assert!(stdout.contains("seeds = 7,8"));
    assert!(stdout.trim_end().ends_with("# configuration is valid"));
}

#[test]
fn validate_config_names_the_bad_value() {
    for (flag, value) in [
        ("--future-p", "1.5"),
        ("--k", "0"),
        ("--env", "bitflip:0"),
        ("--algo", "dqn"),
        ("--tau", "x"),
    ] {
        let result = hercs(&["validate-config", flag, value]);
        assert_eq!(result.status.code(), Some(1), "{flag} {value}");
        let stderr = text(&result.stderr);
        assert!(stderr.starts_with("error:"), "{flag}: {stderr}");
    }
}

#[test]
fn shipped_configs_validate() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["bitflip10.conf", "push2d.conf"] {
        let result = hercs(&[
            "validate-config",
            "--config",
            root.join(name).to_str().unwrap(),
        ]);
        assert!(result.status.success(), "{name}: {}", text(&result.stderr));
    }
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(hercs(&["train"]).status.code(), Some(2));
    assert_eq!(
        hercs(&["run", "--no-such-flag", "1"]).status.code(),
        Some(2)
    );
}

#[test]
fn validate_config_rejects_batch_smaller_than_k() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.conf");
    std::fs::write(&path, "algo = her-cs\nk = 8\nbatch-size = 4\n").unwrap();
    let result = hercs(&["validate-config", "--config", path.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(1));
    let stderr = text(&result.stderr);
    assert!(stderr.contains("batch") && stderr.contains('k'), "{stderr}");
}
