use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BLT_GOAL: &str = "B b (B t p & B l B t p & B l p)";

fn delsynth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_delsynth"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn fixture(name: &str) -> String {
    golden_dir().join(name).display().to_string()
}

/// Writes the fixtures plus the synthesized BLT action model into a temp dir.
fn workspace() -> TempDir {
    let dir = TempDir::new().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(code(&delsynth(&["fixtures", "--out", d])), 0);
    let u = dir.path().join("u.json");
    assert_eq!(code(&delsynth(&["synthesize", BLT_GOAL, "--out", u.to_str().unwrap()])), 0);
    dir
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).display().to_string()
}

#[test]
fn golden_fixtures_regenerate_byte_identically() {
    let dir = workspace();
    for entry in fs::read_dir(golden_dir()).unwrap() {
        let golden = entry.unwrap().path();
        let name = golden.file_name().unwrap().to_str().unwrap().to_string();
        let fresh = if name == "blt_goal_synthesized.json" { "u.json".to_string() } else { name.clone() };
        let regenerated = fs::read_to_string(dir.path().join(&fresh)).unwrap_or_default();
        assert_eq!(regenerated, fs::read_to_string(&golden).unwrap(), "{name} drifted");
    }
}

#[test]
fn synthesize_outputs_and_errors() {
    let out = delsynth(&["synthesize", "B i p"]);
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["events"].as_array().unwrap().len(), 3);
    assert_eq!(doc["synthesis"]["root"], "0");

    let bad = delsynth(&["synthesize", "~B i p"]);
    assert_eq!(code(&bad), 2);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("~B i p"));
    assert_eq!(code(&delsynth(&["synthesize", "B i ("])), 2);

    let notice = delsynth(&["synthesize", BLT_GOAL]);
    assert!(String::from_utf8_lossy(&notice.stderr).contains("notice: goal normalized"));
}

#[test]
fn update_modes_and_report() {
    let dir = workspace();
    let (m, u) = (path(&dir, "blt_initial.json"), path(&dir, "u.json"));
    let report = path(&dir, "report.json");
    let out = delsynth(&["update", &m, &u, "--mode", "pointed", "--report", &report]);
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["worlds"].as_array().unwrap().len(), 8);
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["stats"]["kept_pairs"], 8);
    assert_eq!(r["stats"]["candidate_pairs"], 9);
    assert_eq!(r["inputs"]["model"].as_str().unwrap().len(), 64);

    let product: serde_json::Value =
        serde_json::from_str(&stdout(&delsynth(&["update", &m, &u, "--mode", "product"]))).unwrap();
    assert_eq!(product["worlds"].as_array().unwrap().len(), 9);
}

#[test]
fn iterated_product_updates_through_files() {
    let dir = workspace();
    let u = path(&dir, "priv_msg_U.json");
    let mut current = path(&dir, "two_agent_M.json");
    let mut sizes = Vec::new();
    for i in 0..3 {
        let next = path(&dir, &format!("iter{i}.json"));
        assert_eq!(code(&delsynth(&["update", &current, &u, "--mode", "product", "--out", &next])), 0);
        let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&next).unwrap()).unwrap();
        sizes.push(doc["worlds"].as_array().unwrap().len());
        current = next;
    }
    assert_eq!(sizes, [3, 5, 9]);
}

#[test]
fn undefined_updates_exit_three() {
    let dir = workspace();
    // Nothing satisfies `q`, so even the product is empty.
    let u = path(&dir, "q.json");
    fs::write(
        &u,
        r#"{"agents":["a","b"],"events":[{"id":"e","pre":"q"}],"kind":"action","point":"e","relations":[{"agent":"a","from":"e","to":"e"},{"agent":"b","from":"e","to":"e"}]}"#,
    )
    .unwrap();
    let m = path(&dir, "two_agent_M.json");
    assert_eq!(code(&delsynth(&["update", &m, &u, "--mode", "product"])), 3);
    assert_eq!(code(&delsynth(&["update", &m, &u, "--mode", "pointed"])), 3);
}

#[test]
fn check_verdicts_on_the_updated_model() {
    let dir = workspace();
    let r = path(&dir, "r.json");
    delsynth(&["update", &path(&dir, "blt_initial.json"), &path(&dir, "u.json"), "--out", &r]);
    let expect = [(BLT_GOAL, 0, "true"), ("B b p", 1, "false"), ("~B b bot & ~B l bot & ~B t bot", 0, "true")];
    for (f, c, text) in expect {
        let out = delsynth(&["check", &r, f]);
        assert_eq!((code(&out), stdout(&out).trim()), (c, text), "{f}");
    }
    assert_eq!(code(&delsynth(&["check", &r, "p", "--world", "v@0"])), 1);
    assert_eq!(code(&delsynth(&["check", &r, "p", "--world", "nowhere"])), 2);
    assert_eq!(code(&delsynth(&["check", &r, "p &"])), 2);
}

#[test]
fn verify_passes_end_to_end_and_fails_with_a_witness() {
    let dir = workspace();
    let m = path(&dir, "blt_initial.json");
    let out = delsynth(&["verify", "--model", &m, "--goal", BLT_GOAL, "--action", &path(&dir, "u.json")]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let verdicts = report["verdicts"].as_array().unwrap();
    assert_eq!(verdicts.len(), 7);
    assert!(verdicts.iter().all(|v| v["passed"] == true && !v["claim"].as_str().unwrap().is_empty()));

    let refl = path(&dir, "refl.json");
    fs::write(
        &refl,
        r#"{"agents":["b","l","t"],"events":[{"id":"e","pre":"top"}],"kind":"action","point":"e","relations":[{"agent":"b","from":"e","to":"e"},{"agent":"l","from":"e","to":"e"},{"agent":"t","from":"e","to":"e"}]}"#,
    )
    .unwrap();
    let out = delsynth(&["verify", "--model", &m, "--goal", "B b p", "--action", &refl, "--checks", "privatized"]);
    assert_eq!(code(&out), 1);
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["verdicts"][0]["detail"]["witness"]["kind"], "clash");

    assert_eq!(code(&delsynth(&["verify", "--model", &m, "--goal", "B b p", "--checks", "nope"])), 2);
}

#[test]
fn export_dot_is_stable_and_handles_empty_relations() {
    let dot = stdout(&delsynth(&["export-dot", &fixture("priv_msg_U.json")]));
    assert!(dot.contains("label=\"p\"") && dot.contains("label=\"⊤\""));
    assert_eq!(dot, stdout(&delsynth(&["export-dot", &fixture("priv_msg_U.json")])));

    let blt = stdout(&delsynth(&["export-dot", &fixture("blt_initial.json")]));
    assert_eq!(blt.matches("shape=circle").count(), 2);
    assert_eq!(blt.matches("->").count(), 4);

    let dir = TempDir::new().unwrap();
    let lonely = path(&dir, "lonely.json");
    fs::write(&lonely, r#"{"agents":["a"],"kind":"kripke","point":"w","relations":[],"worlds":[{"id":"w"}]}"#).unwrap();
    let dot = stdout(&delsynth(&["export-dot", &lonely]));
    assert!(dot.contains("\"w\"") && !dot.contains("->"));
}

#[test]
fn bench_blowup_csv() {
    let out = stdout(&delsynth(&["bench-blowup", "--iterations", "3", "--mode", "product"]));
    assert_eq!(out, "iteration,mode,world_count\n1,product,3\n2,product,5\n3,product,9\n");
    let out = stdout(&delsynth(&["bench-blowup", "--iterations", "5", "--mode", "pointed"]));
    let counts: Vec<&str> = out.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(counts, ["3"; 5]);
    let out = stdout(&delsynth(&["bench-blowup", "--iterations", "1"]));
    assert_eq!(out.lines().count(), 3);
    assert_eq!(code(&delsynth(&["bench-blowup", "--iterations", "0"])), 2);
}

#[test]
fn parse_and_normalize() {
    let out = delsynth(&["parse", "B a p -> q", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["modal_depth"], 1);
    assert_eq!(stdout(&delsynth(&["normalize", "B i B i p"])).trim(), "B i p");
    assert_eq!(code(&delsynth(&["normalize", "B i p | q"])), 2);
    assert_eq!(code(&delsynth(&["bogus-verb"])), 2);
}

#[test]
fn malformed_documents_are_input_errors() {
    let dir = TempDir::new().unwrap();
    let bad = path(&dir, "bad.json");
    fs::write(&bad, r#"{"agents":["a"],"kind":"kripke","point":"x","relations":[],"worlds":[{"id":"w"}]}"#).unwrap();
    let out = delsynth(&["check", &bad, "p"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("point not in domain: 'x'"));
    assert_eq!(code(&delsynth(&["export-dot", &path(&dir, "missing.json")])), 2);
}
