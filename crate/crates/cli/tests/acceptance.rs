//! Acceptance battery: one test per criterion, each printing a pass line.
//!
//! Criteria 1-10 evaluate the library's claim suite at the default seed.
//! Criterion 11 drives the compiled binary and demands byte-identical
//! reruns, independent of worker-thread count. Criterion 12 round-trips a
//! synthetic tweet file through ingest.

use retweet_graph::event_log::{read_events, replay_log};
use retweet_graph::ingest::{build_progression, parse_stream, InputFormat};
use retweet_graph::state::StateConfig;
use retweet_graph::verify::{
    degenerate_claims, density_at_target_claims, edges_per_tree_mean_claim,
    edges_per_tree_variance_claim, estimator_recovery_claims, normality_claim,
    one_step_distribution_claims, replay_claim, sweep_claims, ClaimRecord, DEFAULT_SEED,
};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn assert_claims(criterion: u32, records: &[ClaimRecord]) {
    for r in records {
        assert!(
            r.pass,
            "criterion {criterion} failed: {} (theoretical={}, empirical={}, tolerance={:?})",
            r.claim, r.theoretical, r.empirical, r.tolerance
        );
    }
    let names: Vec<&str> = records.iter().map(|r| r.claim.as_str()).collect();
    println!("criterion {criterion:02} PASS: {}", names.join("; "));
}

#[test]
fn criterion_01_edge_density_mean_at_node_target() {
    assert_claims(1, &density_at_target_claims(DEFAULT_SEED)[..1]);
}

#[test]
fn criterion_02_edge_density_variance_at_node_target() {
    assert_claims(2, &density_at_target_claims(DEFAULT_SEED)[1..]);
}

#[test]
fn criterion_03_edges_per_tree_mean() {
    assert_claims(3, &[edges_per_tree_mean_claim(DEFAULT_SEED)]);
}

#[test]
fn criterion_04_edges_per_tree_variance_limit() {
    assert_claims(4, &[edges_per_tree_variance_claim(DEFAULT_SEED)]);
}

#[test]
fn criterion_05_normalized_ratio_is_standard_normal() {
    assert_claims(5, &[normality_claim(DEFAULT_SEED)]);
}

#[test]
fn criterion_06_one_step_component_distribution() {
    assert_claims(6, &one_step_distribution_claims(DEFAULT_SEED));
}

#[test]
fn criterion_07_estimator_recovery() {
    assert_claims(7, &estimator_recovery_claims(DEFAULT_SEED));
}

#[test]
fn criterion_08_sweep_density_approximation() {
    assert_claims(8, &sweep_claims(DEFAULT_SEED));
}

#[test]
fn criterion_09_degenerate_parameters() {
    assert_claims(9, &degenerate_claims(DEFAULT_SEED));
}

#[test]
fn criterion_10_replay_band_covers_reference() {
    assert_claims(10, &[replay_claim(DEFAULT_SEED)]);
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_retweet-graph"))
}

fn run_ok(args: &[&str]) {
    let output = bin().args(args).output().expect("binary runs");
    assert!(
        output.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&output.stderr)
    );
}

/// Every regular file under `path` (a file or a flat directory), keyed by
/// name.
fn artifact_bytes(path: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    if path.is_file() {
        // Single-file outputs differ only in the path we chose; key them
        // under a fixed name so the comparison sees the contents.
        files.insert("output".to_string(), fs::read(path).unwrap());
        return files;
    }
    for entry in fs::read_dir(path).unwrap() {
        let entry = entry.unwrap().path();
        assert!(entry.is_file(), "unexpected non-file artifact {entry:?}");
        files.insert(
            entry.file_name().unwrap().to_string_lossy().into_owned(),
            fs::read(&entry).unwrap(),
        );
    }
    assert!(!files.is_empty(), "no artifacts under {path:?}");
    files
}

/// Runs the same command template twice, appending per-run extra flags, and
/// demands byte-identical artifacts.
fn assert_rerun_identical(
    root: &Path,
    label: &str,
    build_args: impl Fn(&str) -> Vec<String>,
    extra: [&[&str]; 2],
) {
    let out_a = root.join(format!("{label}-a"));
    let out_b = root.join(format!("{label}-b"));
    let mut args_a = build_args(out_a.to_str().unwrap());
    let mut args_b = build_args(out_b.to_str().unwrap());
    args_a.extend(extra[0].iter().map(|s| s.to_string()));
    args_b.extend(extra[1].iter().map(|s| s.to_string()));
    run_ok(&args_a.iter().map(String::as_str).collect::<Vec<_>>());
    run_ok(&args_b.iter().map(String::as_str).collect::<Vec<_>>());
    let files_a = artifact_bytes(&out_a);
    let files_b = artifact_bytes(&out_b);
    assert_eq!(
        files_a.keys().collect::<Vec<_>>(),
        files_b.keys().collect::<Vec<_>>(),
        "{label}: artifact sets differ"
    );
    for (name, bytes) in &files_a {
        assert_eq!(
            bytes, &files_b[name],
            "{label}: {name} differs between reruns"
        );
    }
}

fn tweet_fixture() -> String {
    [
        r#"{"tweet_id":"t9","user_id":"erin","timestamp":7300,"retweet_of_tweet_id":"t1","retweet_of_user_id":"alice"}"#,
        r#"{"tweet_id":"t1","user_id":"alice","timestamp":10}"#,
        r#"{"tweet_id":"t2","user_id":"bob","timestamp":70,"retweet_of_tweet_id":"t1","retweet_of_user_id":"alice"}"#,
        r#"{"tweet_id":"t3","user_id":"bob","timestamp":130,"retweet_of_tweet_id":"t1","retweet_of_user_id":"alice"}"#,
        r#"{"tweet_id":"t4","user_id":"alice","timestamp":190}"#,
        r#"{"tweet_id":"t5","user_id":"alice","timestamp":250,"retweet_of_tweet_id":"t1","retweet_of_user_id":"alice"}"#,
        r#"{"tweet_id":"t6","user_id":"carol","timestamp":310,"retweet_of_tweet_id":"t0","retweet_of_user_id":"dave"}"#,
        r#"{"tweet_id":"t6","user_id":"carol","timestamp":310,"retweet_of_tweet_id":"t0","retweet_of_user_id":"dave"}"#,
        r#"{"tweet_id":"t7","user_id":"bob","timestamp":370,"retweet_of_tweet_id":"t4","retweet_of_user_id":"alice"}"#,
        "this line is not a tweet",
        r#"{"tweet_id":"t8","user_id":"erin","timestamp":430,"retweet_of_tweet_id":"t2","retweet_of_user_id":"bob"}"#,
    ]
    .join("\n")
}

#[test]
fn criterion_11_byte_identical_reruns() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();

    let steps_sim = |out: &str| {
        vec![
            "simulate", "--lambda", "0.5", "--p", "0.5", "--q", "0.9", "--steps", "400", "--seed",
            "42", "-o", out,
        ]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>()
    };
    assert_rerun_identical(root, "simulate-steps", steps_sim, [&[], &[]]);

    assert_rerun_identical(
        root,
        "simulate-nodes",
        |out| {
            vec![
                "simulate", "--lambda", "0.3", "--p", "0.7", "--q", "0.9", "--nodes", "200",
                "--seed", "7", "--checkpoint-every", "10", "-o", out,
            ]
            .into_iter()
            .map(String::from)
            .collect()
        },
        [&[], &[]],
    );

    // A reference log for the log-consuming subcommands.
    let reference = root.join("reference");
    run_ok(&[
        "simulate", "--lambda", "0.4", "--p", "0.6", "--q", "0.9", "--steps", "600", "--seed",
        "11", "-o",
        reference.to_str().unwrap(),
    ]);
    let log = reference.join("events.jsonl");
    let log_str = log.to_str().unwrap().to_string();

    assert_rerun_identical(
        root,
        "estimate",
        |out| {
            vec!["estimate", "--input", &log_str, "-o", out]
                .into_iter()
                .map(String::from)
                .collect()
        },
        [&[], &[]],
    );

    assert_rerun_identical(
        root,
        "analyze",
        |out| {
            vec!["analyze", "--input", &log_str, "-o", out]
                .into_iter()
                .map(String::from)
                .collect()
        },
        [&[], &[]],
    );

    // The parallel subcommands also get a thread-count variation.
    assert_rerun_identical(
        root,
        "replay",
        |out| {
            vec![
                "replay",
                "--input",
                &log_str,
                "--branch-step",
                "300",
                "--runs",
                "8",
                "--seed",
                "5",
                "-o",
                out,
            ]
            .into_iter()
            .map(String::from)
            .collect()
        },
        [&["--jobs", "1"], &["--jobs", "3"]],
    );

    assert_rerun_identical(
        root,
        "sweep",
        |out| {
            vec![
                "sweep",
                "--lambda-grid",
                "0.5,1.0",
                "--p-grid",
                "0.25,0.75",
                "--steps",
                "150",
                "--runs",
                "4",
                "--seed",
                "3",
                "-o",
                out,
            ]
            .into_iter()
            .map(String::from)
            .collect()
        },
        [&["--jobs", "1"], &["--jobs", "3"]],
    );

    let tweets = root.join("tweets.jsonl");
    fs::write(&tweets, tweet_fixture()).unwrap();
    let tweets_str = tweets.to_str().unwrap().to_string();
    assert_rerun_identical(
        root,
        "ingest",
        |out| {
            vec!["ingest", "--input", &tweets_str, "-o", out]
                .into_iter()
                .map(String::from)
                .collect()
        },
        [&[], &[]],
    );

    assert_rerun_identical(
        root,
        "verify",
        |out| {
            vec![
                "verify", "--seed", "42", "--strict", "-o", out,
            ]
            .into_iter()
            .map(String::from)
            .collect()
        },
        [&["--jobs", "1"], &["--jobs", "3"]],
    );

    println!("criterion 11 PASS: byte-identical reruns for every subcommand");
}

#[test]
fn criterion_12_ingest_round_trip() {
    let parsed = parse_stream(tweet_fixture().as_bytes(), InputFormat::Jsonl).unwrap();
    let outcome = build_progression(&parsed, StateConfig::default()).unwrap();
    let c = outcome.counters;

    // The fixture exercises every classification branch.
    assert_eq!(c.malformed_lines, 1);
    assert_eq!(c.duplicate_tweet_ids, 1);
    assert_eq!(c.skipped_original_by_seen, 1);
    assert_eq!(c.skipped_self_retweets, 1);
    assert_eq!(c.materialized_authors, 1);

    // Arrival identities tie the graph to the event counts.
    let counters = outcome.state.graph.counters;
    assert!(counters.t1 > 0 && counters.t2 > 0 && counters.t3 > 0);
    assert_eq!(outcome.state.graph.node_count(), counters.t1 + counters.t2);
    assert_eq!(outcome.state.graph.edge_count(), counters.t2 + counters.t3);
    assert_eq!(outcome.state.forest.tree_count(), counters.t1);

    // Replaying the derived log reproduces the ingested graph exactly.
    let mut replayed = replay_log(&outcome.events, StateConfig::default()).unwrap();
    let mut original = outcome.state.clone();
    assert_eq!(replayed.graph.edges(), original.graph.edges());
    assert_eq!(
        replayed.graph.degree_distribution(),
        original.graph.degree_distribution()
    );
    assert_eq!(
        replayed.components.all_components(),
        original.components.all_components()
    );
    assert_eq!(replayed.snapshot(), original.snapshot());

    // The binary's export of the same file parses and replays to the same
    // graph.
    let tmp = tempfile::tempdir().unwrap();
    let tweets = tmp.path().join("tweets.jsonl");
    fs::write(&tweets, tweet_fixture()).unwrap();
    let out: PathBuf = tmp.path().join("out");
    run_ok(&[
        "ingest",
        "--input",
        tweets.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
    ]);
    let exported =
        read_events(fs::read(out.join("events.jsonl")).unwrap().as_slice()).unwrap();
    assert_eq!(exported, outcome.events);

    println!("criterion 12 PASS: ingest round-trip reproduces the graph");
}
