use std::path::PathBuf;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ss-gamp")).args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ss-gamp-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn help_and_version_exit_zero() {
    let out = bin(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for cmd in ["decode-trials", "se-track", "threshold", "potential", "coupled"] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
    assert_eq!(bin(&["--version"]).status.code(), Some(0));
    assert_eq!(bin(&["potential", "--help"]).status.code(), Some(0));
}

#[test]
fn config_errors_exit_two() {
    assert_eq!(bin(&[]).status.code(), Some(2));
    assert_eq!(bin(&["decode-trials", "--L", "many"]).status.code(), Some(2));
    assert_eq!(bin(&["decode-trials", "--operator", "sparse"]).status.code(), Some(2));
    assert_eq!(
        bin(&["decode-trials", "--channel", "bec:eps=1.5"]).status.code(),
        Some(2)
    );
    assert_eq!(
        bin(&["decode-trials", "--config", "/nonexistent/ss-gamp.conf"])
            .status
            .code(),
        Some(2)
    );

    let cfg = scratch("bad.conf");
    std::fs::write(&cfg, "L = 32\n\nwidth = 3\n").unwrap();
    let out = bin(&["decode-trials", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 3") && err.contains("width"), "{err}");
}

#[test]
fn bracket_without_transition_is_a_config_error() {
    // a noisy AWGNC decodes up to capacity, so there is nothing to bracket
    let out = bin(&[
        "threshold",
        "--channel",
        "awgnc:snr=1",
        "--B-list",
        "2",
        "--skip-empirical",
        "--se-samples",
        "2000",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("straddle"));
}

#[test]
fn config_file_sets_defaults_and_flags_override() {
    let cfg = scratch("trials.conf");
    std::fs::write(
        &cfg,
        "# small run\nL = 32\nB = 4\nR = 0.3\ntrials = 3\nseed = 4\nchannel = bsc:eps=0.1\n",
    )
    .unwrap();
    let path = cfg.to_str().unwrap();
    let from_file = bin(&["decode-trials", "--config", path]);
    assert!(from_file.status.success());
    let text = String::from_utf8(from_file.stdout).unwrap();
    assert!(text.contains("# L=32\n") && text.contains("# channel=bsc:eps=0.1\n"));
    assert_eq!(data_rows(&text).len(), 4);

    // the same settings spelled out give the same bytes
    let spelled = bin(&[
        "decode-trials",
        "--L",
        "32",
        "--B",
        "4",
        "--R",
        "0.3",
        "--trials",
        "3",
        "--seed",
        "4",
        "--channel",
        "bsc:eps=0.1",
    ]);
    assert_eq!(spelled.stdout, text.as_bytes());

    let overridden = bin(&["decode-trials", "--config", path, "--trials", "2", "--seed", "5"]);
    let text = String::from_utf8(overridden.stdout).unwrap();
    assert!(text.contains("# trials=2\n") && text.contains("# seed=5\n"));
    assert_eq!(data_rows(&text).len(), 3);
}

#[test]
fn out_file_matches_stdout_of_a_plain_run() {
    let path = scratch("se.csv");
    let args = [
        "se-track",
        "--L",
        "32",
        "--B",
        "2",
        "--R",
        "0.3",
        "--trials",
        "2",
        "--se-samples",
        "1000",
    ];
    let plain = bin(&args);
    let mut with_out: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap().to_string();
    with_out.extend(["--out", &p]);
    let filed = bin(&with_out);
    assert!(filed.status.success() && filed.stdout.is_empty());
    let file = std::fs::read_to_string(&path).unwrap();
    let plain = String::from_utf8(plain.stdout).unwrap();
    assert_eq!(file, plain);
    assert!(data_rows(&plain)[0].starts_with("t,mse_gamp_mean"));
}

#[test]
fn seeds_change_the_trials() {
    let run = |seed: &str| {
        bin(&[
            "decode-trials",
            "--L",
            "32",
            "--B",
            "4",
            "--R",
            "0.3",
            "--trials",
            "2",
            "--seed",
            seed,
        ])
        .stdout
    };
    assert_eq!(run("1"), run("1"));
    assert_ne!(run("1"), run("2"));
}
