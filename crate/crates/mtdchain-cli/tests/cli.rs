//! End-to-end tests of the `mtdchain` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mtdchain::{fit, parse_sequence, History, MtdModelF64, StateSpace};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mtdchain"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is utf-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is utf-8")
}

fn write(dir: &TempDir, name: &str, contents: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, contents).unwrap();
    path.to_string_lossy().into_owned()
}

/// Parse `predict` output: alternating label/value pairs on one line.
fn parse_distribution(line: &str) -> Vec<(String, f64)> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    tokens
        .chunks(2)
        .map(|pair| (pair[0].to_string(), pair[1].parse().unwrap()))
        .collect()
}

#[test]
fn fit_writes_model_matching_library() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "seq.txt", "WWLWL");
    let out = dir.path().join("model.json");
    let result = run(&["fit", &input, "--order", "2", "--out", out.to_str().unwrap()]);
    assert!(result.status.success(), "stderr: {}", stderr(&result));

    let loaded = MtdModelF64::from_json(&fs::read_to_string(&out).unwrap()).unwrap();
    let space = StateSpace::wdl();
    let reference: MtdModelF64 = fit(&parse_sequence("WWLWL", &space).unwrap(), 2).unwrap();
    assert_eq!(loaded, reference);

    let text = stdout(&result);
    assert!(text.contains("lambda:"), "summary missing: {text}");
    assert!(text.contains("lp_residual:"));
}

#[test]
fn fit_rejects_order_zero_with_exit_3() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "seq.txt", "WWLWL");
    let result = run(&["fit", &input, "--order", "0"]);
    assert_eq!(result.status.code(), Some(3));
    assert!(stderr(&result).contains("order must be >= 1"));
}

#[test]
fn fit_names_unknown_token_with_exit_2() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "seq.txt", "W X");
    let result = run(&["fit", &input, "--order", "1"]);
    assert_eq!(result.status.code(), Some(2));
    let err = stderr(&result);
    assert!(err.contains("\"X\"") && err.contains('2'), "stderr: {err}");
}

#[test]
fn fit_missing_file_is_input_error() {
    let result = run(&["fit", "/nonexistent/seq.txt", "--order", "1"]);
    assert_eq!(result.status.code(), Some(2));
}

fn fitted_alternating_model(dir: &TempDir) -> String {
    let input = write(dir, "alt.txt", &"WL".repeat(60));
    let out = dir.path().join("alt_model.json");
    let result = run(&["fit", &input, "--order", "2", "--out", out.to_str().unwrap()]);
    assert!(result.status.success());
    out.to_string_lossy().into_owned()
}

#[test]
fn predict_alternating_history() {
    let dir = TempDir::new().unwrap();
    let model = fitted_alternating_model(&dir);
    let result = run(&["predict", &model, "--history", "W,L"]);
    assert!(result.status.success());
    let dist = parse_distribution(stdout(&result).trim());
    assert_eq!(dist.len(), 3);
    assert_eq!(dist[0], ("W".to_string(), 0.0));
    assert_eq!(dist[1], ("D".to_string(), 0.0));
    assert_eq!(dist[2], ("L".to_string(), 1.0));
}

#[test]
fn predict_wrong_length_history_is_exit_2() {
    let dir = TempDir::new().unwrap();
    let model = fitted_alternating_model(&dir);
    let result = run(&["predict", &model, "--history", "W"]);
    assert_eq!(result.status.code(), Some(2));
    let result = run(&["predict", &model, "--history", "W,X"]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn predict_order_one_prints_matrix_column() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "seq.txt", "WWLWLLWWWLD");
    let out = dir.path().join("m.json");
    assert!(run(&["fit", &input, "--order", "1", "--out", out.to_str().unwrap()])
        .status
        .success());
    let result = run(&["predict", out.to_str().unwrap(), "--history", "W"]);
    assert!(result.status.success());
    let printed: Vec<f64> = parse_distribution(stdout(&result).trim())
        .into_iter()
        .map(|(_, p)| p)
        .collect();

    let space = StateSpace::wdl();
    let reference: MtdModelF64 =
        fit(&parse_sequence("WWLWLLWWWLD", &space).unwrap(), 1).unwrap();
    // Full-precision output: printed values equal the library's exactly.
    assert_eq!(printed, reference.q(1).column(0));
}

#[test]
fn fit_then_predict_loses_no_precision() {
    let dir = TempDir::new().unwrap();
    let text = "WWLWLDDWLLWDWWLLLWWDLWL";
    let input = write(&dir, "seq.txt", text);
    let out = dir.path().join("m.json");
    assert!(run(&["fit", &input, "--order", "3", "--out", out.to_str().unwrap()])
        .status
        .success());
    let result = run(&["predict", out.to_str().unwrap(), "--history", "L,W,D"]);
    assert!(result.status.success());
    let printed: Vec<f64> = parse_distribution(stdout(&result).trim())
        .into_iter()
        .map(|(_, p)| p)
        .collect();

    let space = StateSpace::wdl();
    let reference: MtdModelF64 = fit(&parse_sequence(text, &space).unwrap(), 3).unwrap();
    let hist = History::parse("L,W,D", &space).unwrap();
    let expected = reference.predict_distribution(&hist).unwrap();
    assert_eq!(printed, expected.probs());
}

#[test]
fn simulate_alternating_chain() {
    let dir = TempDir::new().unwrap();
    let model = fitted_alternating_model(&dir);
    let result = run(&["simulate", &model, "--init", "W,L", "--steps", "4", "--seed", "9"]);
    assert!(result.status.success());
    assert_eq!(stdout(&result), "LWLW\n");
}

#[test]
fn simulate_zero_steps_prints_nothing() {
    let dir = TempDir::new().unwrap();
    let model = fitted_alternating_model(&dir);
    let result = run(&["simulate", &model, "--init", "W,L", "--steps", "0"]);
    assert!(result.status.success());
    assert_eq!(stdout(&result), "");
}

#[test]
fn simulate_is_seed_deterministic() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "seq.txt", "WWLWLDDWLLWDWWLL");
    let out = dir.path().join("m.json");
    assert!(run(&["fit", &input, "--order", "2", "--out", out.to_str().unwrap()])
        .status
        .success());
    let args = ["simulate", out.to_str().unwrap(), "--init", "W,L", "--steps", "40", "--seed", "77"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(stdout(&a).trim().len(), 40);
}

#[test]
fn simulate_invalid_init_is_exit_2() {
    let dir = TempDir::new().unwrap();
    let model = fitted_alternating_model(&dir);
    assert_eq!(
        run(&["simulate", &model, "--init", "W", "--steps", "3"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["simulate", &model, "--init", "W,Q", "--steps", "3"]).status.code(),
        Some(2)
    );
}

#[test]
fn assess_is_byte_deterministic() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "seq.txt", &"WLWWLWDLWL".repeat(10));
    let run_once = |tag: &str| {
        let report = dir.path().join(format!("report-{tag}.csv"));
        let chart = dir.path().join(format!("chart-{tag}.csv"));
        let trace = dir.path().join(format!("trace-{tag}.csv"));
        let result = run(&[
            "assess", &input,
            "--k-max", "6",
            "--seed", "7",
            "--report", report.to_str().unwrap(),
            "--chart", chart.to_str().unwrap(),
            "--trace", trace.to_str().unwrap(),
        ]);
        assert!(result.status.success(), "stderr: {}", stderr(&result));
        (
            stdout(&result),
            fs::read(report).unwrap(),
            fs::read(chart).unwrap(),
            fs::read(trace).unwrap(),
        )
    };
    assert_eq!(run_once("a"), run_once("b"));
}

#[test]
fn assess_k_max_rows() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "seq.txt", &"WLWWLWDLWL".repeat(10));
    let result = run(&["assess", &input, "--k-max", "13", "--seed", "3"]);
    assert!(result.status.success());
    let text = stdout(&result);
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| {
            let mut parts = l.split('\t');
            matches!(
                (parts.next().map(|p| p.parse::<usize>()), parts.next()),
                (Some(Ok(_)), Some(_))
            )
        })
        .collect();
    assert_eq!(rows.len(), 13, "table: {text}");
}

#[test]
fn assess_reads_ledger_and_warns_on_short_teams() {
    let dir = TempDir::new().unwrap();
    let mut ledger = String::from("date,team,opponent,result\n");
    for (i, r) in ["W", "L", "W", "W", "L", "D", "W", "L"].iter().enumerate() {
        ledger.push_str(&format!("2018-04-{:02},Alpha,Beta,{r}\n", i + 1));
    }
    for (i, r) in ["L", "W", "L", "L", "W", "W"].iter().enumerate() {
        ledger.push_str(&format!("2018-04-{:02},Beta,Alpha,{r}\n", i + 1));
    }
    let input = write(&dir, "games.csv", &ledger);

    let result = run(&[
        "assess", &input, "--ledger",
        "--window", "5", "--k-max", "2", "--n-eval", "3", "--last", "10",
    ]);
    assert!(result.status.success(), "stderr: {}", stderr(&result));
    let text = stdout(&result);
    assert!(text.contains("team: Alpha") && text.contains("team: Beta"));
    let warnings = stderr(&result);
    assert!(warnings.contains("only 8 games") && warnings.contains("only 6 games"));

    // --team narrows to one section; --quiet drops the warning.
    let result = run(&[
        "assess", &input, "--ledger", "--team", "Beta", "--quiet",
        "--window", "5", "--k-max", "2", "--n-eval", "3", "--last", "10",
    ]);
    assert!(result.status.success());
    assert!(!stdout(&result).contains("Alpha"));
    assert!(stderr(&result).is_empty());
}

#[test]
fn assess_ledger_rejects_unknown_team_and_bad_rows() {
    let dir = TempDir::new().unwrap();
    let ledger = "date,team,opponent,result\n2018-04-01,Alpha,Beta,W\n2018-04-02,Alpha,Beta,X\n";
    let input = write(&dir, "games.csv", ledger);
    let result = run(&["assess", &input, "--ledger", "--window", "2", "--k-max", "1", "--n-eval", "1"]);
    assert_eq!(result.status.code(), Some(2));
    assert!(stderr(&result).contains("line 3"), "stderr: {}", stderr(&result));

    let ledger = "date,team,opponent,result\n2018-04-01,Alpha,Beta,W\n";
    let input = write(&dir, "ok.csv", ledger);
    let result = run(&[
        "assess", &input, "--ledger", "--team", "Gamma",
        "--window", "1", "--k-max", "1", "--n-eval", "1",
    ]);
    assert_eq!(result.status.code(), Some(2));
    assert!(stderr(&result).contains("Gamma"));
}

#[test]
fn assess_window_longer_than_data_is_exit_2() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "seq.txt", "WLWLWL");
    let result = run(&["assess", &input, "--k-max", "2"]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn states_flag_overrides_and_header_applies() {
    let dir = TempDir::new().unwrap();
    // Explicit flag.
    let input = write(&dir, "ha.txt", "H A H H A H A A H H");
    let result = run(&["fit", &input, "--order", "1", "--states", "H,A"]);
    assert!(result.status.success(), "stderr: {}", stderr(&result));
    assert!(stdout(&result).contains("states: H,A"));

    // Header line without the flag.
    let input = write(&dir, "header.txt", "# states: U V\nU V U U V\n");
    let result = run(&["fit", &input, "--order", "1"]);
    assert!(result.status.success(), "stderr: {}", stderr(&result));
    assert!(stdout(&result).contains("states: U,V"));
}

#[test]
fn chart_and_svg_round_trip_through_files() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "seq.txt", &"WLWWLWDLWL".repeat(10));
    let chart = dir.path().join("chart.csv");
    let svg = dir.path().join("chart.svg");
    let result = run(&[
        "assess", &input, "--k-max", "4", "--seed", "5",
        "--chart", chart.to_str().unwrap(),
        "--svg", svg.to_str().unwrap(),
    ]);
    assert!(result.status.success());

    let data = mtdchain::ChartData::from_csv(fs::read(&chart).unwrap().as_slice()).unwrap();
    assert_eq!(data.rows().len(), 4);
    // Re-rendering the re-read chart reproduces the SVG byte for byte.
    assert_eq!(data.to_svg(), fs::read_to_string(&svg).unwrap());
}

#[test]
fn closed_stdout_pipe_exits_quietly() {
    use std::io::Read;
    use std::process::Stdio;

    let dir = TempDir::new().unwrap();
    let model = fitted_alternating_model(&dir);
    // Enough output to overflow the pipe buffer after the reader leaves.
    let mut child = bin()
        .args(["simulate", &model, "--init", "W,L", "--steps", "400000"])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut head = [0u8; 64];
    child.stdout.take().unwrap().read_exact(&mut head).unwrap();
    // Dropping the handle closes the read end mid-write.
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success(), "status: {:?}", out.status);
    assert!(
        out.stderr.is_empty(),
        "stderr must stay quiet: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn bundled_sample_data_flows_through() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let doosan = root.join("data/doosan_2018.txt");
    let result = run(&["fit", doosan.to_str().unwrap(), "--order", "2"]);
    assert!(result.status.success(), "stderr: {}", stderr(&result));
    assert!(stdout(&result).contains("stationary_hat"));
}
