use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fastforward"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const CORPUS: &str = "d1\tthe quick brown fox jumps\n\
d2\tlazy dogs sleep all day\n\
d3\ta quick dog runs past the fox\n";

const QUERIES: &str = "q1\tquick dog\nq2\tfox\nq3\tlazy day\n";

fn setup() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("corpus.tsv"), CORPUS).unwrap();
    fs::write(dir.path().join("queries.tsv"), QUERIES).unwrap();
    let out = run(
        dir.path(),
        &[
            "index",
            "--corpus",
            "corpus.tsv",
            "--sparse-out",
            "s.idx",
            "--forward-out",
            "f.ffi",
            "--dimension",
            "16",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("indexed 3 docs"), "{}", stdout(&out));
    dir
}

fn search(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "search",
        "--sparse",
        "s.idx",
        "--forward",
        "f.ffi",
        "--queries",
        "queries.tsv",
        "--ks",
        "3",
    ];
    args.extend_from_slice(extra);
    run(dir, &args)
}

fn ranked_lines(text: &str) -> Vec<String> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

/// (qid, doc) pairs in output order, ignoring scores and tags.
fn order(text: &str) -> Vec<(String, String)> {
    ranked_lines(text)
        .iter()
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            (f[0].to_string(), f[2].to_string())
        })
        .collect()
}

#[test]
fn index_writes_both_files() {
    let dir = setup();
    assert!(dir.path().join("s.idx").metadata().unwrap().len() > 0);
    let ffi = fs::read(dir.path().join("f.ffi")).unwrap();
    assert_eq!(&ffi[..4], b"FFWD");
}

#[test]
fn forward_index_bytes_are_reproducible() {
    let dir = setup();
    let first = fs::read(dir.path().join("f.ffi")).unwrap();
    let sparse = fs::read(dir.path().join("s.idx")).unwrap();
    let out = run(
        dir.path(),
        &[
            "index",
            "--corpus",
            "corpus.tsv",
            "--sparse-out",
            "s2.idx",
            "--forward-out",
            "f2.ffi",
            "--dimension",
            "16",
        ],
    );
    assert!(out.status.success());
    assert_eq!(first, fs::read(dir.path().join("f2.ffi")).unwrap());
    assert_eq!(sparse, fs::read(dir.path().join("s2.idx")).unwrap());
}

#[test]
fn malformed_jsonl_reports_line_and_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.jsonl"),
        "{\"id\": \"a\", \"text\": \"x\"}\n{\"id\": \"b\", \"text\": \"y\"}\n{\"id\": \"c\"\n",
    )
    .unwrap();
    let out = run(
        dir.path(),
        &[
            "index",
            "--corpus",
            "c.jsonl",
            "--sparse-out",
            "s",
            "--forward-out",
            "f",
        ],
    );
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn missing_input_is_exit_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "index",
            "--corpus",
            "nope.tsv",
            "--sparse-out",
            "s",
            "--forward-out",
            "f",
        ],
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn alpha_one_keeps_sparse_order() {
    let dir = setup();
    let interp = search(dir.path(), &["--alpha", "1", "--k", "3"]);
    assert!(interp.status.success(), "{}", stderr(&interp));
    // With zero dense weight every candidate keeps its sparse score.
    let index = fastforward::SparseIndex::load(dir.path().join("s.idx")).unwrap();
    let mut want = Vec::new();
    for line in QUERIES.lines() {
        let (qid, text) = line.split_once('\t').unwrap();
        for hit in index.retrieve(text, 3).iter() {
            want.push((qid.to_string(), hit.doc.to_string()));
        }
    }
    want.sort_by(|a, b| a.0.cmp(&b.0));
    let mut got = order(&stdout(&interp));
    got.sort_by(|a, b| a.0.cmp(&b.0));
    assert_eq!(got, want);
}

#[test]
fn early_stop_with_oracle_bound_matches_interpolation() {
    let dir = setup();
    let full = search(dir.path(), &["--alpha", "0.3", "--k", "2"]);
    let early = search(
        dir.path(),
        &["--alpha", "0.3", "--k", "2", "--mode", "early-stop", "--sd-oracle"],
    );
    assert!(early.status.success(), "{}", stderr(&early));
    let strip_tag = |t: &str| -> Vec<String> {
        ranked_lines(t)
            .iter()
            .map(|l| l.rsplit_once(' ').unwrap().0.to_string())
            .collect()
    };
    assert_eq!(strip_tag(&stdout(&full)), strip_tag(&stdout(&early)));
    assert!(stdout(&early).lines().any(|l| l.starts_with("# lookups qid=q1")));
}

#[test]
fn every_mode_writes_a_run_file() {
    let dir = setup();
    for mode in ["rerank", "interpolate", "hybrid", "early-stop"] {
        let path = format!("{mode}.run");
        let out = search(dir.path(), &["--mode", mode, "--k", "3", "--kd", "3", "--run", &path]);
        assert!(out.status.success(), "{mode}: {}", stderr(&out));
        let text = fs::read_to_string(dir.path().join(&path)).unwrap();
        assert!(text.contains(&format!("fastforward-{mode}")));
        fastforward::RunFile::parse(text.as_bytes()).unwrap();
    }
}

#[test]
fn invalid_settings_are_usage_errors() {
    let dir = setup();
    for extra in [
        &["--k", "5"][..],
        &["--k", "1", "--alpha", "1.5"],
        &["--k", "1", "--alpha", "-0.1"],
        &["--k", "0"],
    ] {
        let out = search(dir.path(), extra);
        assert_eq!(out.status.code(), Some(2), "{extra:?}: {}", stderr(&out));
    }
    let out = run(
        dir.path(),
        &["coalesce", "--index", "f.ffi", "--delta", "-1", "--out", "g.ffi"],
    );
    assert_eq!(out.status.code(), Some(2));
    let out = run(
        dir.path(),
        &["evaluate", "--run", "x", "--qrels", "y", "--metrics", "bogus"],
    );
    assert_eq!(out.status.code(), Some(2));
    let out = run(dir.path(), &["search", "--mode", "sideways"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flags_override_config_file() {
    let dir = setup();
    fs::write(
        dir.path().join("ff.conf"),
        "# settings\nalpha = 1\nk = 1\nsparse = s.idx\nforward = f.ffi\nqueries = queries.tsv\nks = 3\n",
    )
    .unwrap();
    let from_file = run(dir.path(), &["search", "--config", "ff.conf"]);
    assert!(from_file.status.success(), "{}", stderr(&from_file));
    assert_eq!(ranked_lines(&stdout(&from_file)).len(), 3);
    let overridden = run(dir.path(), &["search", "--config", "ff.conf", "--k", "2"]);
    assert_eq!(ranked_lines(&stdout(&overridden)).len(), 5);
    fs::write(dir.path().join("bad.conf"), "alpha: 1\n").unwrap();
    assert_eq!(
        run(dir.path(), &["search", "--config", "bad.conf"]).status.code(),
        Some(2)
    );
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

#[test]
fn evaluate_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let run_path = fixture("fixture.run");
    let qrels_path = fixture("fixture.qrels");
    let out = run(
        dir.path(),
        &[
            "evaluate",
            "--run",
            run_path.to_str().unwrap(),
            "--qrels",
            qrels_path.to_str().unwrap(),
            "--metrics",
            "ndcg@3,rr@10",
            "--per-query",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let q1: f64 = text
        .lines()
        .find(|l| l.starts_with("ndcg@3\tq1\t"))
        .and_then(|l| l.rsplit('\t').next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((q1 - 0.98284).abs() < 1e-4, "{text}");
    assert!(text.lines().any(|l| l.starts_with("rr@10\tall\t")));
}

#[test]
fn interchange_vectors_and_query_vectors() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("corpus.tsv"), "a\tred apple\nb\tgreen apple\nc\tblue sky\n").unwrap();
    fs::write(
        p.join("vectors.jsonl"),
        "{\"id\": \"a\", \"passages\": [[1, 0], [0.5, 0.5]]}\n\
         {\"id\": \"b\", \"passages\": [[0, 1]]}\n\
         {\"id\": \"c\", \"passages\": [[-1, 0]]}\n",
    )
    .unwrap();
    fs::write(p.join("q.tsv"), "q1\tapple\n").unwrap();
    fs::write(p.join("qv.tsv"), "q1\t0,2\n").unwrap();
    let out = run(
        p,
        &[
            "index",
            "--corpus",
            "corpus.tsv",
            "--encoder",
            "vectors.jsonl",
            "--sparse-out",
            "s",
            "--forward-out",
            "f",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(
        stdout(&out).contains("3 docs, 4 vectors of dimension 2"),
        "{}",
        stdout(&out)
    );

    let out = run(
        p,
        &[
            "search",
            "--sparse",
            "s",
            "--forward",
            "f",
            "--queries",
            "q.tsv",
            "--query-vectors",
            "qv.tsv",
            "--mode",
            "rerank",
            "--ks",
            "3",
            "--k",
            "2",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    // Dense scores are maxP dot products: b = 2, a = max(0, 1) = 1.
    let lines = ranked_lines(&stdout(&out));
    assert_eq!(lines[0], "q1 Q0 b 1 2 fastforward-rerank");
    assert_eq!(lines[1], "q1 Q0 a 2 1 fastforward-rerank");

    fs::write(p.join("qv3.tsv"), "q1\t0,2,1\n").unwrap();
    let out = run(
        p,
        &[
            "search",
            "--sparse",
            "s",
            "--forward",
            "f",
            "--queries",
            "q.tsv",
            "--query-vectors",
            "qv3.tsv",
            "--ks",
            "3",
            "--k",
            "2",
        ],
    );
    assert_eq!(out.status.code(), Some(4));
    fs::write(
        p.join("bad.jsonl"),
        "{\"id\": \"a\", \"passages\": [[1, 0]]}\n{\"id\": \"b\", \"passages\": [[1]]}\n",
    )
    .unwrap();
    let out = run(
        p,
        &[
            "index",
            "--corpus",
            "corpus.tsv",
            "--encoder",
            "bad.jsonl",
            "--sparse-out",
            "s",
            "--forward-out",
            "f",
        ],
    );
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("line 2"));
}

#[test]
fn coalesce_and_bench_report() {
    let dir = setup();
    let p = dir.path();
    let out = run(
        p,
        &[
            "coalesce",
            "--index",
            "f.ffi",
            "--sweep",
            "0,1,2.1",
            "--csv",
            "sweep.csv",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(p.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("delta,total_vectors,compression_ratio"));
    assert_eq!(csv.lines().count(), 4);

    let out = run(p, &["coalesce", "--index", "f.ffi", "--delta", "0.5", "--out", "g.ffi"]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("coalesced 3 vectors into 3"));

    let out = run(
        p,
        &[
            "bench",
            "--sparse",
            "s.idx",
            "--forward",
            "g.ffi",
            "--queries",
            "queries.tsv",
            "--ks",
            "3",
            "--k",
            "2",
            "--mode",
            "early-stop",
            "--rounds",
            "2",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "qid,scoring_ms,interpolation_ms,sorting_ms,total_ms,lookups");
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("mean,"));
}
