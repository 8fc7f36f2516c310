use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use shiftkit_core::fixtures::worked_examples;
use shiftkit_core::project::{save, Project};
use shiftkit_core::shift::ShiftTag;
use shiftkit_core::testkit::{random_project, GenConfig};

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn shiftkit(args: &[&str]) -> Outcome {
    let out = Command::new(env!("CARGO_BIN_EXE_shiftkit"))
        .args(args)
        .output()
        .unwrap();
    Outcome {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn in_process(args: &[&str]) -> Outcome {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("shiftkit").chain(args.iter().copied());
    let code = shiftkit_cli::run(argv, &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn fixtures(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

fn golden(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    if std::env::var_os("SHIFTKIT_UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "golden {name}");
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn ingest(dir: &Path, fixture: &str) -> PathBuf {
    let f = fixtures(fixture);
    let out = dir.join("p.shifts.json");
    let r = shiftkit(&[
        "ingest",
        "--source",
        s(&f.join("en.xml")),
        "--target",
        s(&f.join("de.xml")),
        "--alignment",
        s(&f.join("links.tsv")),
        "--out",
        s(&out),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    out
}

fn saved(dir: &Path, p: &Project) -> PathBuf {
    let path = dir.join("p.shifts.json");
    save(p, &path).unwrap();
    path
}

#[test]
fn ingest_prints_counts() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures("worked");
    let out = dir.path().join("p.shifts.json");
    let r = shiftkit(&[
        "ingest",
        "--source",
        s(&f.join("en.xml")),
        "--target",
        s(&f.join("de.xml")),
        "--alignment",
        s(&f.join("links.tsv")),
        "--out",
        s(&out),
    ]);
    assert_eq!(r.code, 0);
    golden("ingest_worked.txt", &r.stdout);
    let p = shiftkit_core::project::load(&out).unwrap();
    assert_eq!(p.corpora.len(), 2);
    assert_eq!(p.links.len(), 4);
}

#[test]
fn ingest_with_empty_alignment_has_no_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures("worked");
    let links = dir.path().join("empty.tsv");
    std::fs::write(&links, "").unwrap();
    let out = dir.path().join("p.shifts.json");
    let r = shiftkit(&[
        "ingest",
        "--source",
        s(&f.join("en.xml")),
        "--target",
        s(&f.join("de.xml")),
        "--alignment",
        s(&links),
        "--out",
        s(&out),
    ]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("links\t0\npairs\t0\n"));
}

#[test]
fn ingest_reports_malformed_xml_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures("worked");
    let bad = dir.path().join("bad.xml");
    std::fs::write(
        &bad,
        "<corpus lang=\"en\"><doc id=\"d\"><s id=\"1\"><w>x</s></doc></corpus>",
    )
    .unwrap();
    let r = shiftkit(&[
        "ingest",
        "--source",
        s(&bad),
        "--target",
        s(&f.join("de.xml")),
        "--alignment",
        s(&f.join("links.tsv")),
        "--out",
        s(&dir.path().join("p.json")),
    ]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("bad.xml"), "{}", r.stderr);
    assert!(r.stderr.contains("byte"), "{}", r.stderr);
}

#[test]
fn extract_prints_tallies() {
    let dir = tempfile::tempdir().unwrap();
    let project = ingest(dir.path(), "extraction");
    let r = shiftkit(&[
        "extract",
        "--project",
        s(&project),
        "--whitelist",
        s(&fixtures("extraction/whitelist.txt")),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    golden("extract_fixture.txt", &r.stdout);
    assert!(r.stdout.starts_with("2 emitted, 4 skipped\n"));
    let p = shiftkit_core::project::load(&project).unwrap();
    assert_eq!(p.pairs.len(), 2);
    assert_eq!(p.revision, 1);
}

#[test]
fn extract_with_empty_whitelist_skips_every_speaker() {
    let dir = tempfile::tempdir().unwrap();
    let project = ingest(dir.path(), "extraction");
    let empty = dir.path().join("empty.txt");
    std::fs::write(&empty, "\n").unwrap();
    let r = shiftkit(&["extract", "--project", s(&project), "--whitelist", s(&empty)]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.starts_with("0 emitted, 6 skipped\n"), "{}", r.stdout);
    // Links 0, 3, 4 and 5 are one-to-one with a named source speaker.
    assert!(
        r.stdout.contains("skipped\tspeaker_not_whitelisted\t4\n"),
        "{}",
        r.stdout
    );
}

#[test]
fn extract_with_every_speaker_skips_on_language_grounds_only() {
    let dir = tempfile::tempdir().unwrap();
    let project = ingest(dir.path(), "extraction");
    let all = dir.path().join("all.txt");
    std::fs::write(&all, "Smith, John\nBrown, Ann\nDupont, Jean\nO'Neill, Maire\n").unwrap();
    let r = shiftkit(&["extract", "--project", s(&project), "--whitelist", s(&all)]);
    assert_eq!(r.code, 0);
    assert!(
        r.stdout.contains("skipped\tspeaker_not_whitelisted\t0\n"),
        "{}",
        r.stdout
    );
    assert!(r.stdout.starts_with("3 emitted, 3 skipped\n"), "{}", r.stdout);
}

#[test]
fn extract_without_whitelist_fails() {
    let dir = tempfile::tempdir().unwrap();
    let project = ingest(dir.path(), "extraction");
    let before = std::fs::read(&project).unwrap();
    let r = shiftkit(&[
        "extract",
        "--project",
        s(&project),
        "--whitelist",
        "/nonexistent/list.txt",
    ]);
    assert_eq!(r.code, 1);
    assert_eq!(std::fs::read(&project).unwrap(), before);
}

#[test]
fn validate_clean_fixture_is_silent() {
    let dir = tempfile::tempdir().unwrap();
    let path = saved(dir.path(), &worked_examples());
    let r = shiftkit(&["validate", "--project", s(&path)]);
    assert_eq!((r.code, r.stdout.as_str()), (0, ""));
}

#[test]
fn validate_reports_injected_breach() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = worked_examples();
    p.alignments[0].tags = vec![ShiftTag::CategoryChange, ShiftTag::Mutation, ShiftTag::Generalisation];
    let path = saved(dir.path(), &p);
    let r = shiftkit(&["validate", "--project", s(&path)]);
    assert_eq!(r.code, 2);
    let lines: Vec<&str> = r.stdout.lines().collect();
    assert_eq!(lines.len(), 1);
    let fields: Vec<&str> = lines[0].split('\t').collect();
    assert_eq!(fields[..2], ["en-de:ep-00-01-18:4.2", "R1"]);
}

#[test]
fn validate_corrupted_file_fails() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.shifts.json");
    std::fs::write(&path, "{\"schema_version\": 1, \"pairs\": [").unwrap();
    let r = shiftkit(&["validate", "--project", s(&path)]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("line"), "{}", r.stderr);
    std::fs::write(&path, "{\"schema_version\": 2}").unwrap();
    let r = shiftkit(&["validate", "--project", s(&path)]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("schema_version 2"), "{}", r.stderr);
}

#[test]
fn exit_code_two_iff_violation_injected() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..20u64 {
        let mut p = random_project(seed, &GenConfig::default());
        let path = saved(dir.path(), &p);
        assert_eq!(in_process(&["validate", "--project", s(&path)]).code, 0, "seed {seed}");
        let Some(a) = p.alignments.first_mut() else { continue };
        a.marker = None;
        a.tags = vec![ShiftTag::Explicitation, ShiftTag::Generalisation, ShiftTag::Mutation];
        let path = saved(dir.path(), &p);
        let r = in_process(&["validate", "--project", s(&path)]);
        assert_eq!(r.code, 2, "seed {seed}");
        assert!(r.stdout.lines().all(|l| l.split('\t').count() == 3));
    }
}

#[test]
fn report_prints_dense_table_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = saved(dir.path(), &worked_examples());
    let csv = dir.path().join("shifts.csv");
    let r = shiftkit(&["report", "--project", s(&path), "--group-by", "none", "--csv", s(&csv)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    golden("report_worked.txt", &r.stdout);
    let csv = std::fs::read_to_string(&csv).unwrap();
    golden("report_worked.csv", &csv);
    assert!(csv.contains("\n(all),depassivisation,1,14\n"));

    let r = shiftkit(&["report", "--project", s(&path), "--group-by", "transeme_kind"]);
    assert_eq!(r.code, 0);
    golden("report_worked_kind.txt", &r.stdout);
    let r = shiftkit(&["report", "--project", s(&path), "--group-by", "speaker"]);
    assert_eq!(r.code, 1);
}

#[test]
fn help_and_usage_errors() {
    let r = shiftkit(&["--help"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("Usage"));
    let r = shiftkit(&["serve", "--help"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("--bind"));
    assert_eq!(shiftkit(&[]).code, 1);
    assert_eq!(shiftkit(&["frobnicate"]).code, 1);
    assert_eq!(shiftkit(&["validate"]).code, 1);
}

#[test]
fn serve_rejects_bad_bind_address() {
    let dir = tempfile::tempdir().unwrap();
    let path = saved(dir.path(), &worked_examples());
    let r = shiftkit(&["serve", "--project", s(&path), "--bind", "not-an-address"]);
    assert_eq!(r.code, 1);
    let r = shiftkit(&[
        "serve",
        "--project",
        s(&dir.path().join("missing.json")),
        "--bind",
        "127.0.0.1:0",
    ]);
    assert_eq!(r.code, 1);
}

#[tokio::test]
async fn serve_answers_pair_listing() {
    let dir = tempfile::tempdir().unwrap();
    let path = saved(dir.path(), &worked_examples());
    let mut child = Command::new(env!("CARGO_BIN_EXE_shiftkit"))
        .args(["serve", "--project", s(&path), "--bind", "127.0.0.1:0"])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stderr.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let base = line.trim().strip_prefix("listening on ").unwrap().to_string();
    let body = reqwest::get(format!("{base}/api/pairs"))
        .await
        .unwrap()
        .text()
        .await
        .unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    let pairs: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(pairs.as_array().unwrap().len(), 4);
}
