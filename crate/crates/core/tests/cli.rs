use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use aks::bench::{render_plot, run_grid, BenchConfig};
use aks::io::{format_scores, format_selection, load_selection, save_scores, ScoreFormat};
use aks::oracle::{brute_force, OracleConfig};
use aks::scorer::echo::{EchoConfig, EchoHttpServer};
use aks::scorer::{score_frames, ScorerSpec};
use aks::series::{resample_with_stride, FrameManifest, ManifestFrame, ScoreSeries, SelectionParams, Strategy};
use aks::strategies::{objective, select};
use aks::{coverage, io::format_manifest};

const AKS: &str = env!("CARGO_BIN_EXE_aks");

fn aks(args: &[&str], dir: &Path) -> Output {
    Command::new(AKS)
        .args(args)
        .current_dir(dir)
        .env_remove("AKS_SCORER_URL")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// 40 frames at 2 fps with a late peak.
fn fixture(dir: &Path) -> ScoreSeries {
    let n = 40;
    let ts: Vec<f64> = (0..n).map(|i| i as f64 * 0.5).collect();
    let scores: Vec<f64> = (0..n)
        .map(|i| if (30..34).contains(&i) { 0.9 } else { 0.1 + (i % 7) as f64 * 0.01 })
        .collect();
    let s = ScoreSeries::new(ts, scores, None, Some("where is the cat".into())).unwrap();
    save_scores(&s, &dir.join("s.jsonl"), ScoreFormat::Jsonl).unwrap();
    s
}

#[test]
fn select_matches_library_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let s = fixture(dir.path());
    let out = aks(
        &["select", "--scores", "s.jsonl", "--strategy", "ada", "--m", "4", "--max-level", "2", "--s-thr", "0.5", "--out", "sel.jsonl"],
        dir.path(),
    );
    assert_eq!(stdout(&out), "");

    let (cands, stride) = resample_with_stride(&s, 1.0).unwrap();
    assert_eq!(stride, 2);
    let sel = select(&cands, Strategy::Ada, &SelectionParams::new(4, 2, 0.5)).unwrap();
    let want = format_selection(&cands, &sel, stride).unwrap();
    assert_eq!(fs::read_to_string(dir.path().join("sel.jsonl")).unwrap(), want);

    // without --out the same bytes go to stdout
    let out = aks(
        &["select", "--scores", "s.jsonl", "--m", "4", "--max-level", "2", "--s-thr", "0.5"],
        dir.path(),
    );
    assert_eq!(stdout(&out), want);
}

#[test]
fn defaults_and_preset() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    let text = stdout(&aks(&["select", "--scores", "s.jsonl"], dir.path()));
    assert!(text.starts_with(r#"{"type":"selection","strategy":"ada","m":64,"max_level":5,"s_thr":0.8,"#), "{text}");
    let text = stdout(&aks(&["select", "--scores", "s.jsonl", "--preset", "concentrated"], dir.path()));
    assert!(text.contains(r#""max_level":3,"s_thr":0.2,"#), "{text}");
}

#[test]
fn coverage_objective_and_plot_match_library() {
    let dir = tempfile::tempdir().unwrap();
    let s = fixture(dir.path());
    stdout(&aks(
        &["select", "--scores", "s.jsonl", "--strategy", "bin", "--m", "5", "--max-level", "2", "--fps", "2", "--out", "sel.jsonl"],
        dir.path(),
    ));
    let file = load_selection(&dir.path().join("sel.jsonl")).unwrap();
    assert_eq!(file.stride, 1);

    let cov = coverage(file.selection.indices(), s.len(), 2).unwrap();
    assert_eq!(stdout(&aks(&["coverage", "--selection", "sel.jsonl"], dir.path())), format!("{cov}\n"));
    let cov3 = coverage(file.selection.indices(), s.len(), 3).unwrap();
    assert_eq!(
        stdout(&aks(&["coverage", "--selection", "sel.jsonl", "--max-level", "3"], dir.path())),
        format!("{cov3}\n")
    );

    let obj = objective(&s, file.selection.indices(), 0.5, 2).unwrap();
    assert_eq!(
        stdout(&aks(&["objective", "--scores", "s.jsonl", "--selection", "sel.jsonl", "--lambda", "0.5"], dir.path())),
        format!("{obj}\n")
    );

    stdout(&aks(&["plot", "--scores", "s.jsonl", "--selection", "sel.jsonl", "--out", "p.svg"], dir.path()));
    assert_eq!(
        fs::read_to_string(dir.path().join("p.svg")).unwrap(),
        render_plot(&s, &file.selection).unwrap()
    );
}

#[test]
fn objective_follows_selection_stride() {
    let dir = tempfile::tempdir().unwrap();
    let s = fixture(dir.path());
    stdout(&aks(
        &["select", "--scores", "s.jsonl", "--strategy", "top", "--m", "3", "--max-level", "1", "--out", "sel.jsonl"],
        dir.path(),
    ));
    let (cands, _) = resample_with_stride(&s, 1.0).unwrap();
    let file = load_selection(&dir.path().join("sel.jsonl")).unwrap();
    let want = objective(&cands, file.selection.indices(), 1.0, 1).unwrap();
    assert_eq!(
        stdout(&aks(&["objective", "--scores", "s.jsonl", "--selection", "sel.jsonl"], dir.path())),
        format!("{want}\n")
    );
}

#[test]
fn oracle_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let s = ScoreSeries::from_scores(vec![0.2, 0.9, 0.1, 0.4, 0.8, 0.3, 0.7, 0.5], 1.0).unwrap();
    save_scores(&s, &dir.path().join("o.csv"), ScoreFormat::Csv).unwrap();
    let (sel, value) = brute_force(&s, 3, 1.0, 2, &OracleConfig::default()).unwrap();
    let out = aks(
        &["oracle", "--scores", "o.csv", "--m", "3", "--max-level", "2", "--out", "best.jsonl"],
        dir.path(),
    );
    assert_eq!(stdout(&out), format!("{value}\n"));
    assert_eq!(
        fs::read_to_string(dir.path().join("best.jsonl")).unwrap(),
        format_selection(&s, &sel, 1).unwrap()
    );

    let out = aks(&["oracle", "--scores", "o.csv", "--m", "4", "--max-level", "2", "--lexicographic"], dir.path());
    assert_eq!(stdout(&out), "0\n");

    let out = aks(&["oracle", "--scores", "o.csv", "--m", "4", "--cap", "10"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));
}

fn write_manifest(dir: &Path, n: usize) -> FrameManifest {
    let frames = (0..n)
        .map(|i| ManifestFrame {
            index: i,
            timestamp_s: i as f64,
            asset: format!("frames/{i}.jpg"),
        })
        .collect();
    let m = FrameManifest::new("clip", frames).unwrap();
    fs::write(dir.join("m.jsonl"), format_manifest(&m)).unwrap();
    m
}

#[test]
fn score_with_constant_and_env_url() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(dir.path(), 5);
    let want = score_frames(&m, "q", &ScorerSpec::Constant { value: 0.5 }).unwrap();
    let out = aks(&["score", "--manifest", "m.jsonl", "--query", "q", "--scorer", "constant:0.5"], dir.path());
    assert_eq!(stdout(&out), format_scores(&want, ScoreFormat::Jsonl));

    let server = EchoHttpServer::start(EchoConfig::default(), "127.0.0.1:0").unwrap();
    let out = Command::new(AKS)
        .args(["score", "--manifest", "m.jsonl", "--query", "q", "--out", "e.csv", "--batch-size", "2"])
        .current_dir(dir.path())
        .env("AKS_SCORER_URL", server.url())
        .output()
        .unwrap();
    stdout(&out);
    let text = fs::read_to_string(dir.path().join("e.csv")).unwrap();
    assert!(text.ends_with("0,0,0\n1,1,0.1\n2,2,0.2\n3,3,0.3\n4,4,0.4\n"), "{text}");

    let out = aks(&["score", "--manifest", "m.jsonl", "--query", "q"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bench_matches_library_and_seed_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"
seed = 5
output_dir = "lib-out"
strategies = ["top", "bin"]

[grid]
m = [4]
max_level = [2]
s_thr = [0.1, 0.9]

[[corpus]]
kind = "preset"
name = "multi-moment"
videos = 3
"#;
    fs::write(dir.path().join("bench.toml"), config).unwrap();
    let cfg = BenchConfig::load(&dir.path().join("bench.toml")).unwrap();
    let report = run_grid(&cfg).unwrap();
    assert_eq!(report.rows.len(), 12);

    let out = aks(&["bench", "--config", "bench.toml", "--output-dir", "cli-out"], dir.path());
    assert_eq!(stdout(&out), report.summary());
    let read = |p: &str| fs::read(dir.path().join(p)).unwrap();
    assert_eq!(read("cli-out/results.csv"), read("lib-out/results.csv"));
    assert_eq!(read("cli-out/summary.txt"), read("lib-out/summary.txt"));

    stdout(&aks(&["bench", "--config", "bench.toml", "--output-dir", "seeded", "--seed", "6"], dir.path()));
    assert_ne!(read("seeded/results.csv"), read("lib-out/results.csv"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = aks(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let out = aks(&["select", "--scores", "s.jsonl", "--bogus"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_score_file_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = aks(
        &["select", "--scores", "missing.jsonl", "--strategy", "ada", "--m", "64", "--max-level", "5", "--s-thr", "0.8", "--out", "sel.jsonl"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.jsonl"));
    assert!(out.stdout.is_empty());
    assert!(!dir.path().join("sel.jsonl").exists());
}
