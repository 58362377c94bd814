//! Binary-level tests: the full subcommand flow on a small configuration,
//! exit-code contracts, and help coverage of the config keys.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn pairspec() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pairspec"))
}

fn run(args: &[&str]) -> Output {
    pairspec().args(args).output().expect("binary runs")
}

fn assert_success(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed: {}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

const SMALL_CONFIG: &str = r#"
seed = 11

[corpus]
fingers = 5
images_per_finger = 4
z_mean = 30.0
field_width = 400.0
field_height = 400.0

[noise]
jitter_sigma = 0.8
angle_sigma = 0.05
drop_prob = 0.02
insert_rate = 0.5
global_shift_max = 4.0
global_rot_max = 0.02

[grid]
sigma = 3.2
r_values = [20.0, 40.0, 60.0, 80.0]
q_values = [1, 2, 3, 4]

[quantizer]
n_intervals = 2

[policy]
method = "e1"
t = 1
kinds = "xtheta"

[selection]
reliable_count = 32

[code]
message_lengths = [6]

[eval]
impostor_policy = "all"
"#;

struct Fixture {
    _dir: tempfile::TempDir,
    config: PathBuf,
    root: PathBuf,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.toml");
    std::fs::write(&config, SMALL_CONFIG).unwrap();
    Fixture {
        root: dir.path().to_path_buf(),
        config,
        _dir: dir,
    }
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn full_subcommand_flow_with_exit_codes() {
    let fx = fixture();
    let config = path_str(&fx.config);
    let corpus = fx.root.join("corpus.mnt");
    let stats = fx.root.join("stats.json");
    let code = fx.root.join("code.json");
    let record = fx.root.join("record.json");

    assert_success(
        &run(&["gen-data", config, path_str(&corpus)]),
        "gen-data",
    );
    assert_success(
        &run(&["stats", config, path_str(&corpus), path_str(&stats)]),
        "stats",
    );
    assert_success(
        &run(&["design-code", config, path_str(&stats), path_str(&code)]),
        "design-code",
    );
    assert_success(
        &run(&[
            "enroll",
            config,
            path_str(&corpus),
            path_str(&stats),
            path_str(&code),
            path_str(&record),
        ]),
        "enroll",
    );

    // The enrollment image itself verifies: exit code 0.
    let genuine = run(&[
        "verify",
        config,
        path_str(&corpus),
        path_str(&record),
        path_str(&stats),
        path_str(&code),
        "--index",
        "0",
    ]);
    assert_eq!(genuine.status.code(), Some(0), "genuine probe must accept");

    // An image of a different finger: exit code 1 (reject), not an error.
    let impostor = run(&[
        "verify",
        config,
        path_str(&corpus),
        path_str(&record),
        path_str(&stats),
        path_str(&code),
        "--index",
        "12",
    ]);
    assert_eq!(impostor.status.code(), Some(1), "impostor probe must reject");

    // A mismatched code descriptor is a configuration error: exit code 2.
    let other_code = fx.root.join("other-code.json");
    assert_success(
        &run(&[
            "design-code",
            config,
            path_str(&stats),
            path_str(&other_code),
            "--message-len",
            "4",
        ]),
        "design-code --message-len",
    );
    let mismatched = run(&[
        "verify",
        config,
        path_str(&corpus),
        path_str(&record),
        path_str(&stats),
        path_str(&other_code),
    ]);
    assert_eq!(
        mismatched.status.code(),
        Some(2),
        "code mismatch must be an error, not a reject: {}",
        String::from_utf8_lossy(&mismatched.stderr)
    );
}

#[test]
fn transform_emits_csv_with_expected_shape() {
    let fx = fixture();
    let config = path_str(&fx.config);
    let corpus = fx.root.join("corpus.mnt");
    let csv = fx.root.join("dump.csv");
    assert_success(&run(&["gen-data", config, path_str(&corpus)]), "gen-data");
    assert_success(
        &run(&["transform", config, path_str(&corpus), path_str(&csv)]),
        "transform",
    );
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "kind,q,R,re,im");
    // 4 radii x 4 harmonics on the overridden grid.
    assert_eq!(lines.len(), 1 + 16);
    assert!(lines[1].starts_with("xtheta,1,20,"));
}

#[test]
fn invalid_policy_rejected_with_exit_code_2() {
    let fx = fixture();
    let bad = fx.root.join("bad.toml");
    std::fs::write(
        &bad,
        SMALL_CONFIG
            .replace("method = \"e1\"", "method = \"e3\"")
            .replace("t = 1", "t = 2"),
    )
    .unwrap();
    let out = run(&["gen-data", path_str(&bad), path_str(&fx.root.join("x.mnt"))]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("odd t"), "unexpected error text: {stderr}");
}

#[test]
fn help_documents_config_keys_for_every_subcommand() {
    for sub in [
        "gen-data",
        "transform",
        "stats",
        "design-code",
        "enroll",
        "verify",
        "evaluate",
        "run",
    ] {
        let out = run(&[sub, "--help"]);
        assert_success(&out, "help");
        let text = String::from_utf8_lossy(&out.stdout);
        for key in [
            "seed",
            "jitter_sigma",
            "angle_sigma",
            "drop_prob",
            "insert_rate",
            "global_shift_max",
            "global_rot_max",
            "sigma",
            "r_values",
            "q_values",
            "n_intervals",
            "method",
            "kinds",
            "reliable_count",
            "message_lengths",
            "impostor_policy",
            "codebook_ells",
            "severity_spread",
            "fingers",
            "images_per_finger",
            "z_mean",
            "field_width",
            "field_height",
        ] {
            assert!(
                text.contains(key),
                "`{sub} --help` does not document config key {key}"
            );
        }
    }
}

#[test]
fn seed_flag_overrides_config_seed() {
    let fx = fixture();
    let config = path_str(&fx.config);
    let a = fx.root.join("a.mnt");
    let b = fx.root.join("b.mnt");
    let c = fx.root.join("c.mnt");
    assert_success(&run(&["gen-data", config, path_str(&a)]), "gen-data a");
    assert_success(
        &run(&["gen-data", config, path_str(&b), "--seed", "99"]),
        "gen-data b",
    );
    assert_success(
        &run(&["gen-data", config, path_str(&c), "--seed", "99"]),
        "gen-data c",
    );
    let a = std::fs::read(&a).unwrap();
    let b = std::fs::read(&b).unwrap();
    let c = std::fs::read(&c).unwrap();
    assert_ne!(a, b, "seed override must change the corpus");
    assert_eq!(b, c, "same seed must reproduce the corpus");
}

#[test]
fn evaluate_emits_expected_files() {
    let fx = fixture();
    let config = path_str(&fx.config);
    let corpus = fx.root.join("corpus.mnt");
    let out_dir = fx.root.join("eval");
    assert_success(&run(&["gen-data", config, path_str(&corpus)]), "gen-data");
    assert_success(
        &run(&["evaluate", config, path_str(&corpus), path_str(&out_dir)]),
        "evaluate",
    );
    for name in ["roc.csv", "summary.json", "codes.csv", "stats.json"] {
        assert!(out_dir.join(name).is_file(), "missing {name}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap())
            .unwrap();
    assert!(summary["eer"].is_number());
    assert_eq!(summary["config"]["seed"], 11);
}
