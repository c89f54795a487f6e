use std::fs;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bayes-explore"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

const SMALL_SWEEP: &[&str] = &[
    "problem1-sweep",
    "--size-grid",
    "3,5",
    "--prior-draws",
    "20",
    "--episodes",
    "20",
    "--agent",
    "thompson,bandit-k,soft-q",
];

fn with(extra: &[&str]) -> Vec<String> {
    SMALL_SWEEP
        .iter()
        .chain(extra)
        .map(|s| s.to_string())
        .collect()
}

fn stdout_of(args: &[String]) -> Vec<u8> {
    let out = bin().args(args).output().expect("spawn");
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

#[test]
fn same_seed_gives_identical_bytes() {
    let a = stdout_of(&with(&["--seed", "42"]));
    let b = stdout_of(&with(&["--seed", "42"]));
    assert!(!a.is_empty());
    assert_eq!(a, b);
    let c = stdout_of(&with(&["--seed", "43"]));
    assert_ne!(a, c);
}

#[test]
fn thread_count_does_not_change_results() {
    let one = stdout_of(&with(&["--seed", "7", "--parallelism", "1"]));
    let two = stdout_of(&with(&["--seed", "7", "--parallelism", "2"]));
    assert_eq!(one, two);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(
        run(&["problem1-sweep", "--no-such-flag"]).status.code(),
        Some(1)
    );
    assert_eq!(
        run(&["problem1-sweep", "--agent", "nonsense"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        run(&["run", "--agent", "thompson", "--env", "maze"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.cfg");
    fs::write(
        &config,
        "# small run\nsize_grid = 3\nprior-draws = 10\nepisodes = 15\nagent = thompson\nseed = 5\n",
    )
    .unwrap();
    let from_file = stdout_of(&[
        "problem1-sweep".into(),
        "--config".into(),
        config.display().to_string(),
    ]);
    let explicit = stdout_of(
        &[
            "problem1-sweep",
            "--size-grid",
            "3",
            "--prior-draws",
            "10",
            "--episodes",
            "15",
            "--agent",
            "thompson",
            "--seed",
            "5",
        ]
        .map(String::from),
    );
    assert_eq!(from_file, explicit);

    let overridden = stdout_of(&[
        "problem1-sweep".into(),
        "--config".into(),
        config.display().to_string(),
        "--size-grid".into(),
        "4".into(),
    ]);
    let text = String::from_utf8(overridden).unwrap();
    assert!(text.lines().skip(1).all(|l| l.contains(",4,")), "{text}");

    fs::write(&config, "colour = blue\n").unwrap();
    let bad = run(&["problem1-sweep", "--config", &config.display().to_string()]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn out_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sub.csv");
    let printed = stdout_of(&with(&["--seed", "1"]));
    let mut args = with(&["--seed", "1", "--out"]);
    args.push(path.display().to_string());
    let silent = stdout_of(&args);
    assert!(silent.is_empty());
    assert_eq!(fs::read(&path).unwrap(), printed);
    let leftovers: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(leftovers.len(), 1);
}

#[test]
fn run_writes_curves() {
    let out = run(&[
        "run",
        "--agent",
        "bayes-optimal",
        "--size-grid",
        "4",
        "--episodes",
        "5",
        "--seeds",
        "2",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 5);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bayes_regret"));
}

#[test]
fn bandit_table_rows() {
    let out = run(&["bandit-table", "--size-grid", "10,100"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() > 2);
    assert!(text.contains("bandit"));
}

#[test]
fn check_bounds_small_battery() {
    let out = run(&["check-bounds", "--trials", "3", "--beta", "1"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("3/3"));
}

#[test]
fn deep_sea_sweep_small() {
    let out = run(&[
        "deepsea-sweep",
        "--size-grid",
        "4",
        "--seeds",
        "2",
        "--agent",
        "thompson",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("time_to_learn"));
    assert!(text.contains("learned_fraction"));
}
