use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use ina_cli::{read_model, repl_loop, run, EXIT_INVALID_MODEL, EXIT_IO, EXIT_OK, EXIT_USAGE};
use ina_service::FeedbackLog;
use serde_json::Value;
use tempfile::TempDir;

const VEHICLES: &str = "query,class\n\
wheel steering,car\n\
wheel fast,car\n\
dipper bucket,excavator\n\
bucket arm,excavator\n";

const TIES: &str = "query,class\n\
alpha shared,a\n\
beta shared,b\n\
gamma,c\n";

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn ina(args: &[&str]) -> Output {
    ina_with_input(args, "")
}

fn ina_with_input(args: &[&str], input: &str) -> Output {
    let mut stdin = Cursor::new(input.as_bytes().to_vec());
    let mut stdout = Vec::new();
    let mut stderr = Vec::new();
    let argv = std::iter::once("ina").chain(args.iter().copied());
    let code = run(argv, &mut stdin, &mut stdout, &mut stderr);
    Output {
        code,
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, content).unwrap();
    path
}

fn trained(corpus: &str, extra: &[&str]) -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write(dir.path(), "corpus.csv", corpus);
    let model = dir.path().join("model.json");
    let mut args = vec![
        "train",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let out = ina(&args);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert!(
        out.stdout.starts_with("trained 2 classes") || out.stdout.starts_with("trained 3 classes")
    );
    (dir, model)
}

#[test]
fn classify_answers_and_rejects() {
    let (_dir, model) = trained(VEHICLES, &[]);
    let model = model.to_str().unwrap();
    let out = ina(&["classify", "--model", model, "--text", "wheel steering"]);
    assert_eq!(out.code, EXIT_OK);
    assert!(out.stdout.starts_with("class car (CL="), "{}", out.stdout);

    let out = ina(&["classify", "--model", model, "--text", "qqq www eee"]);
    assert_eq!(out.code, EXIT_OK);
    assert!(out.stdout.starts_with("rejected:"), "{}", out.stdout);
    assert!(out.stdout.contains("unknown words 3"));
}

#[test]
fn classify_json_is_stable() {
    let (_dir, model) = trained(VEHICLES, &[]);
    let model = model.to_str().unwrap();
    let args = [
        "classify",
        "--model",
        model,
        "--text",
        "wheel bucket zzz",
        "--json",
    ];
    let first = ina(&args);
    let second = ina(&args);
    assert_eq!(first.code, EXIT_OK);
    assert_eq!(first.stdout, second.stdout);
    let value: Value = serde_json::from_str(&first.stdout).unwrap();
    assert_eq!(value["unknown_count"], 1);
    assert!(value["breakdown"]["classes"].as_array().unwrap().len() == 2);
    assert!(value["status"].is_string());
}

#[test]
fn usage_errors_exit_one() {
    let out = ina(&["classify", "--bogus"]);
    assert_eq!(out.code, EXIT_USAGE);
    assert!(!out.stderr.is_empty());
    assert_eq!(ina(&[]).code, EXIT_USAGE);

    let out = ina(&["--help"]);
    assert_eq!(out.code, EXIT_OK);
    assert!(out.stdout.contains("classify"));
}

#[test]
fn invalid_config_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write(dir.path(), "corpus.csv", VEHICLES);
    let model = dir.path().join("model.json");
    let out = ina(&[
        "train",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
        "--threshold",
        "1.5",
    ]);
    assert_eq!(out.code, EXIT_USAGE, "{}", out.stderr);
    assert!(!model.exists());
}

#[test]
fn missing_files_exit_two() {
    let out = ina(&[
        "classify",
        "--model",
        "/nonexistent/model.json",
        "--text",
        "x",
    ]);
    assert_eq!(out.code, EXIT_IO);
    assert!(out.stderr.contains("/nonexistent/model.json"));

    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "corpus.csv", "text,label\na,b\n");
    let out = ina(&[
        "train",
        "--corpus",
        bad.to_str().unwrap(),
        "--out",
        "/tmp/unused.json",
    ]);
    assert_eq!(out.code, EXIT_IO);

    let garbage = write(dir.path(), "model.json", "not json");
    let out = ina(&[
        "classify",
        "--model",
        garbage.to_str().unwrap(),
        "--text",
        "x",
    ]);
    assert_eq!(out.code, EXIT_IO);
}

#[test]
fn invariant_violation_exits_three() {
    let (dir, model) = trained(VEHICLES, &[]);
    let mut value: Value = serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    value["stats"]["w_max"] = serde_json::json!(123.0);
    let broken = write(dir.path(), "broken.json", &value.to_string());
    let out = ina(&[
        "classify",
        "--model",
        broken.to_str().unwrap(),
        "--text",
        "wheel",
    ]);
    assert_eq!(out.code, EXIT_INVALID_MODEL);
    assert!(out.stderr.contains("stats_consistent"), "{}", out.stderr);
}

#[test]
fn synonym_and_lemma_tables_apply() {
    let dir = tempfile::tempdir().unwrap();
    let synonyms = write(dir.path(), "syn.txt", "steering wheel => wheel\n");
    let lemmas = write(dir.path(), "lemmas.tsv", "wheels\twheel\n");
    let (_d, model) = trained(
        VEHICLES,
        &[
            "--synonyms",
            synonyms.to_str().unwrap(),
            "--lemmas",
            lemmas.to_str().unwrap(),
        ],
    );
    let out = ina(&[
        "classify",
        "--model",
        model.to_str().unwrap(),
        "--text",
        "Wheels!",
        "--json",
    ]);
    let value: Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(value["unknown_count"], 0);
    assert_eq!(value["class"], "car");
}

#[test]
fn eval_plain_and_json() {
    let (dir, model) = trained(VEHICLES, &[]);
    let test = write(
        dir.path(),
        "test.csv",
        "query,class\nwheel steering,car\nbucket arm,excavator\nqqq www,__irrelevant__\n",
    );
    let args = [
        "eval",
        "--model",
        model.to_str().unwrap(),
        "--test",
        test.to_str().unwrap(),
    ];
    let out = ina(&args);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert!(out.stdout.contains("accuracy"));

    let mut json_args = args.to_vec();
    json_args.push("--json");
    let out = ina(&json_args);
    let value: Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(value["total"], 3);
    assert_eq!(value["accuracy"], 1.0);
    assert_eq!(value["rejection_rate"], 1.0 / 3.0);
}

#[test]
fn eval_with_injection_prints_table() {
    let (dir, model) = trained(VEHICLES, &[]);
    let test = write(
        dir.path(),
        "test.csv",
        "query,class\nwheel steering,car\nbucket arm,excavator\n",
    );
    let model = model.to_str().unwrap();
    let test = test.to_str().unwrap();
    let out = ina(&[
        "eval", "--model", model, "--test", test, "--inject", "0.5", "--seed", "7",
    ]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert!(out.stdout.contains("injected"));
    assert!(out.stdout.contains("updated"));

    let a = ina(&[
        "eval", "--model", model, "--test", test, "--inject", "0.5", "--json",
    ]);
    let b = ina(&[
        "eval", "--model", model, "--test", test, "--inject", "0.5", "--json",
    ]);
    assert_eq!(a.stdout, b.stdout);
    let value: Value = serde_json::from_str(&a.stdout).unwrap();
    assert!(value["clean"]["basic"]["accuracy"].is_number());

    let out = ina(&["eval", "--model", model, "--test", test, "--inject", "1.5"]);
    assert_eq!(out.code, EXIT_USAGE);
}

#[test]
fn repl_answers_and_exits() {
    let (_dir, model) = trained(VEHICLES, &[]);
    let out = ina_with_input(
        &[
            "repl",
            "--model",
            model.to_str().unwrap(),
            "--feedback-log",
            "/dev/null",
        ],
        "\nwheel steering\nqqq\nexit\nwheel fast\n",
    );
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let lines: Vec<_> = out.stdout.split("> ").filter(|s| !s.is_empty()).collect();
    assert_eq!(lines.len(), 2, "{:?}", out.stdout);
    assert!(lines[0].starts_with("class car (CL="));
    assert!(lines[1].starts_with("no confident answer"));
}

#[test]
fn repl_ambiguous_pick_is_logged() {
    let (dir, model_path) = trained(TIES, &["--threshold", "0"]);
    let model = read_model(&model_path).unwrap();
    let log_path = dir.path().join("feedback.jsonl");
    let log = FeedbackLog::open(&log_path).unwrap();

    let mut input = Cursor::new(b"shared\nabc\n9\n2\n".to_vec());
    let mut output = Vec::new();
    repl_loop(&model, &log, &mut input, &mut output).unwrap();
    let text = String::from_utf8(output).unwrap();
    assert!(text.contains("1. a (CL="));
    assert!(text.contains("\"beta shared\""));
    assert_eq!(text.matches("pick 1-2: ").count(), 3);
    assert!(text.contains("class b (CL="));

    let logged = fs::read_to_string(&log_path).unwrap();
    let lines: Vec<_> = logged.lines().collect();
    assert_eq!(lines.len(), 1);
    let record: Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(record["query"], "shared");
    assert_eq!(record["chosen_class"], "b");
    assert_eq!(record["candidates"], serde_json::json!(["a", "b"]));
    assert!(record.get("query_id").is_none());
}

#[test]
fn repl_eof_during_pick_logs_nothing() {
    let (dir, model_path) = trained(TIES, &["--threshold", "0"]);
    let model = read_model(&model_path).unwrap();
    let log_path = dir.path().join("feedback.jsonl");
    let log = FeedbackLog::open(&log_path).unwrap();
    let mut input = Cursor::new(b"shared\n".to_vec());
    let mut output = Vec::new();
    repl_loop(&model, &log, &mut input, &mut output).unwrap();
    assert_eq!(fs::read_to_string(&log_path).unwrap(), "");
}
