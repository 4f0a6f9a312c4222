use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn pgg(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pgg"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn pgg")
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

const SIM: &[&str] = &[
    "simulate",
    "--policy",
    "mimic",
    "--r",
    "2.0",
    "--rho",
    "0.5",
    "--seed",
    "7",
    "--generations",
    "500",
    "--grid-width",
    "16",
    "--grid-height",
    "16",
];

#[test]
fn predict_matches_golden_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = pgg(
        &["predict", "--k", "4", "--rho", "0,0.25,0.5,0.75,1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let expected = std::fs::read_to_string(golden("predict_k4.txt")).unwrap();
    assert_eq!(stdout(&out), expected);
}

#[test]
fn predict_writes_out_file_and_rejects_bad_k() {
    let dir = tempfile::tempdir().unwrap();
    let out = pgg(
        &["predict", "--k", "4", "--rho", "0", "--out", "p.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("p.csv")).unwrap();
    assert_eq!(
        text,
        "k,rho_A,r_low,r_high,r_critical\n4,0.000000,1.000000,5.000000,5.000000\n"
    );

    let out = pgg(&["predict", "--k", "0"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = pgg(&["predict", "--rho", "0.5,x"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = pgg(&["predict", "--rho", "1.5"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_writes_one_row_per_generation_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = SIM.to_vec();
    args.extend(["--out", "a.csv"]);
    let first = pgg(&args, dir.path());
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    *args.last_mut().unwrap() = "b.csv";
    let second = pgg(&args, dir.path());
    assert_eq!(second.status.code(), Some(0));

    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("generation,mean_p_C,mean_p_AC,coop_freq")
    );
    assert_eq!(lines.count(), 500);
    assert_eq!(stdout(&first), stdout(&second));

    let summary = stdout(&first);
    assert!(summary.starts_with("final mean_p_C="), "{summary}");
    for key in [
        "mean_p_AC=",
        "tail_mean_p_C=",
        "tail_coop_freq=",
        "lod_mean_p_C=",
    ] {
        assert!(summary.contains(key), "{summary}");
    }
}

#[test]
fn simulate_rejects_out_of_range_rho() {
    let dir = tempfile::tempdir().unwrap();
    let out = pgg(
        &[
            "simulate",
            "--policy",
            "mimic",
            "--rho",
            "2.0",
            "--generations",
            "5",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("rho"), "{}", stderr(&out));
    assert!(!dir.path().join("run.csv").exists());
}

#[test]
fn simulate_rejects_baseline_with_agents_and_unknown_policy() {
    let dir = tempfile::tempdir().unwrap();
    let out = pgg(
        &["simulate", "--policy", "baseline", "--rho", "0.25"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains("Baseline requires rho_A=0"),
        "{}",
        stderr(&out)
    );
    let out = pgg(&["simulate", "--policy", "friendly"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.cfg"),
        "# desk run\npolicy=mimic\nr=2.0\nrho_a=0.5\ngenerations=40\ngrid_width=8\ngrid_height=8\n",
    )
    .unwrap();
    let out = pgg(
        &[
            "simulate",
            "--config",
            "run.cfg",
            "--generations",
            "12",
            "--seed",
            "3",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("run.csv")).unwrap();
    assert_eq!(text.lines().count(), 13);
}

#[test]
fn sweep_config_with_unknown_key_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.cfg"),
        "policy=mimic\nr_values=1,2\nrho_values=0.5\nspeed=11\n",
    )
    .unwrap();
    let out = pgg(&["sweep", "--config", "bad.cfg", "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("line 4") && err.contains("speed"), "{err}");
}

#[test]
fn sweep_output_is_independent_of_parallelism() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("s.cfg"),
        "policy=mimic\nr_values=1.5,2,2.5,3\nrho_values=0.25,0.75\nreplicates=3\nmaster_seed=42\n\
         generations=60\ngrid_width=8\ngrid_height=8\n",
    )
    .unwrap();
    let one = pgg(
        &[
            "sweep",
            "--config",
            "s.cfg",
            "--parallelism",
            "1",
            "--out",
            "one.csv",
            "--quiet",
        ],
        dir.path(),
    );
    let eight = pgg(
        &[
            "sweep",
            "--config",
            "s.cfg",
            "--parallelism",
            "8",
            "--out",
            "eight.csv",
            "--json",
            "e.json",
        ],
        dir.path(),
    );
    assert_eq!(one.status.code(), Some(0), "{}", stderr(&one));
    assert_eq!(eight.status.code(), Some(0), "{}", stderr(&eight));
    let a = std::fs::read(dir.path().join("one.csv")).unwrap();
    let b = std::fs::read(dir.path().join("eight.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 1 + 4 * 2);
    assert_eq!(stdout(&one), stdout(&eight));
    for line in stdout(&one).lines() {
        assert!(
            line.starts_with("rho_A=") && line.contains(" r_critical="),
            "{line}"
        );
    }
    // progress goes to stderr only when not quiet
    assert!(stderr(&one).is_empty());
    assert!(stderr(&eight).contains("[24/24]"));
    let json = std::fs::read_to_string(dir.path().join("e.json")).unwrap();
    assert!(json.contains("\"mean_p_C\""));
}

#[test]
fn critical_matches_golden_and_prints_none() {
    let dir = tempfile::tempdir().unwrap();
    let input = golden("sweep_no_crossing.csv");
    let out = pgg(
        &["critical", "--input", input.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let expected = std::fs::read_to_string(golden("critical_no_crossing.txt")).unwrap();
    assert_eq!(stdout(&out), expected);
}

#[test]
fn critical_rejects_header_only_and_malformed_input() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("empty.csv"),
        "policy,k,r,rho_A,replicates,mean_p_C,sd_p_C,mean_p_AC,sd_p_AC,mean_coop_freq,r_critical\n",
    )
    .unwrap();
    let out = pgg(&["critical", "--input", "empty.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("no data rows"), "{}", stderr(&out));

    std::fs::write(dir.path().join("junk.csv"), "a,b\n1,2\n").unwrap();
    let out = pgg(&["critical", "--input", "junk.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let out = pgg(&["critical", "--input", "missing.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_then_critical_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = pgg(
        &[
            "sweep",
            "--policy",
            "mimic",
            "--r-values",
            "1,2,3,4",
            "--rho-values",
            "0.5",
            "--replicates",
            "2",
            "--generations",
            "40",
            "--grid-width",
            "8",
            "--grid-height",
            "8",
            "--seed",
            "5",
            "--quiet",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = pgg(&["critical", "--input", "sweep.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(
        text.starts_with("rho_A,observed_r_critical,predicted_r_critical,abs_error\n0.5,"),
        "{text}"
    );
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pgg(&["evolve"], dir.path()).status.code(), Some(2));
    assert_eq!(pgg(&[], dir.path()).status.code(), Some(2));
}
