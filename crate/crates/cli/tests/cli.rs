use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn abduct(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abduct"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_lines(path: &Path, lines: &[String]) {
    fs::write(path, lines.join("\n") + "\n").unwrap();
}

#[test]
fn score_ten_sample_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let gold_labels = [1, 1, 1, 1, 1, 0, 0, 0, 0, 0];
    let pred_labels = [1, 0, 1, 1, 0, 0, 1, 0, 0, 0];
    let gold: Vec<String> = gold_labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            format!(
                r#"{{"id":"s{i}","obs1":"A.","obs2":"B.","hyp":"C.","label":{l},"provenance":"generated:seed=0:theory={i}"}}"#
            )
        })
        .collect();
    let preds: Vec<String> = pred_labels
        .iter()
        .enumerate()
        .map(|(i, l)| format!(r#"{{"id":"s{i}","pred":{l}}}"#))
        .collect();
    let (g, pr, js) = (dir.path().join("gold.jsonl"), dir.path().join("preds.jsonl"), dir.path().join("r.json"));
    write_lines(&g, &gold);
    write_lines(&pr, &preds);
    let out = abduct(&["score", "--gold", p(&g), "--preds", p(&pr), "--json", p(&js)]);
    assert!(out.status.success());
    // Agreements at positions 0, 2, 3, 5, 7, 8, 9.
    let text = stdout(&out);
    assert!(text.starts_with("accuracy\t0.7000\n"), "{text}");
    assert!(text.contains("tp\t3\ttn\t4\tfp\t1\tfn\t2"));
    assert!(fs::read_to_string(&js).unwrap().contains("\"accuracy\":0.7,"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(abduct(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(abduct(&["score", "--gold", "x.jsonl"]).status.code(), Some(1));
    assert_eq!(abduct(&["pipeline", "--out", "x", "--interchange", "maybe"]).status.code(), Some(1));
    assert_eq!(abduct(&["split", "--input", "x", "--out", "y", "--ratios", "0.5,0.5,0.5"]).status.code(), Some(1));
    assert_eq!(abduct(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_input_is_an_error() {
    let out = abduct(&["stats", "/nonexistent/file.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/file.jsonl"));
}

#[test]
fn validate_flags_single_flipped_label() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("corpus");
    let run = abduct(&["pipeline", "--seed", "3", "--n", "400", "--ratios", "0.8,0.1,0.1", "--out", p(&out_dir)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));

    let triples = out_dir.join("triples.jsonl");
    let train = out_dir.join("train.jsonl");
    let clean = abduct(&["validate", "--triples", p(&triples), "--samples", p(&train)]);
    assert_eq!(clean.status.code(), Some(0));
    assert!(stdout(&clean).contains("disagreements\t0"));

    let text = fs::read_to_string(&train).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let victim = &mut lines[5];
    let id = victim[7..23].to_string();
    *victim = if victim.contains("\"label\":1") {
        victim.replace("\"label\":1", "\"label\":0")
    } else {
        victim.replace("\"label\":0", "\"label\":1")
    };
    let corrupt = dir.path().join("corrupt.jsonl");
    write_lines(&corrupt, &lines);
    let bad = abduct(&["validate", "--triples", p(&triples), "--samples", p(&corrupt)]);
    assert_eq!(bad.status.code(), Some(2));
    let report = stdout(&bad);
    assert!(report.contains("disagreements\t1\n"));
    assert_eq!(report.matches("disagree\t").count(), 1);
    assert!(report.contains(&format!("disagree\t{id}\t")));
}

#[test]
fn staged_commands_match_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (pipe_dir, gen_dir) = (d.join("pipe"), d.join("gen"));
    let common = ["--seed", "11", "--n", "300"];
    let mut args = vec!["pipeline"];
    args.extend(common);
    args.extend(["--ratios", "0.8,0.1,0.1", "--out", p(&pipe_dir)]);
    assert!(abduct(&args).status.success());

    let mut args = vec!["gen"];
    args.extend(common);
    args.extend(["--out", p(&gen_dir), "--proofs"]);
    let gen = abduct(&args);
    assert!(gen.status.success());
    assert!(stdout(&gen).contains("triples\t300"));
    assert_eq!(
        fs::read(d.join("gen/triples.jsonl")).unwrap(),
        fs::read(d.join("pipe/triples.jsonl")).unwrap()
    );
    let theory = fs::read_dir(d.join("gen/theories")).unwrap().next().unwrap().unwrap().path();
    assert!(fs::read_to_string(&theory).unwrap().contains("=>"));
    assert!(d.join("gen/proofs").read_dir().unwrap().next().is_some());

    let samples = d.join("samples.jsonl");
    assert!(abduct(&["render", "--triples", p(&d.join("gen/triples.jsonl")), "--out", p(&samples)])
        .status
        .success());
    let split = abduct(&["split", "--input", p(&samples), "--out", p(&d.join("split")), "--seed", "11", "--ratios", "0.8,0.1,0.1"]);
    assert!(split.status.success());
    for file in ["train.jsonl", "valid.jsonl", "test.jsonl"] {
        assert_eq!(
            fs::read(d.join("split").join(file)).unwrap(),
            fs::read(d.join("pipe").join(file)).unwrap(),
            "{file}"
        );
    }

    let stats = abduct(&["stats", p(&d.join("split/train.jsonl")), p(&d.join("split/test.jsonl"))]);
    assert!(stats.status.success());
    assert!(stdout(&stats).contains("positives"));
}

#[test]
fn baseline_predictions_are_scorable() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(abduct(&["pipeline", "--seed", "5", "--n", "200", "--ratios", "0.5,0.25,0.25", "--out", p(&d.join("c"))])
        .status
        .success());
    let test = d.join("c/test.jsonl");
    let preds = d.join("majority.jsonl");
    assert!(abduct(&["baseline", "--gold", p(&test), "--kind", "majority", "--out", p(&preds)])
        .status
        .success());
    let out = abduct(&["score", "--gold", p(&test), "--preds", p(&preds)]);
    assert!(stdout(&out).starts_with("accuracy\t0.5000\n"));
}

#[test]
fn convert_art_records() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("art.jsonl");
    write_lines(
        &input,
        &[
            r#"{"obs1":"Ann went out.","obs2":"Ann got wet.","hyp1":"It rained.","hyp2":"It was sunny.","label":1}"#.into(),
            r#"{"obs1":"Bo cooked.","obs2":"Dinner burned.","hyp1":"Bo slept.","hyp2":"Bo forgot the oven.","label":2}"#.into(),
        ],
    );
    let out = dir.path().join("samples.jsonl");
    let run = abduct(&["convert-art", "--input", p(&input), "--out", p(&out)]);
    assert!(run.status.success());
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().all(|l| l.contains("\"label\":1")));
    assert!(text.contains(r#""obs1":"Bo forgot the oven.""#));

    // ART samples carry no symbolic payload, so validation skips them.
    let empty = dir.path().join("triples.jsonl");
    fs::write(&empty, "").unwrap();
    let v = abduct(&["validate", "--triples", p(&empty), "--samples", p(&out)]);
    assert_eq!(v.status.code(), Some(0));
    assert!(stdout(&v).contains("skipped\t4"));
}
