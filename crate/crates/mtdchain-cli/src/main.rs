//! Command-line frontend: fit models to outcome sequences, predict next
//! states, rank chain orders by prediction accuracy, and simulate.
//!
//! Exit codes: 0 on success, 2 on input or parse errors, 3 on computation
//! errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mtdchain::{
    fit, header_state_space, parse_sequence, rank_orders, read_ledger, run_assessment, stream_tag,
    team_game_count, team_sequence, teams, write_reports_csv, write_traces_csv, AssessError,
    AssessmentConfig, AssessmentReport, ChartData, History, LedgerRecord, MtdModelF64, StateSpace,
};

#[derive(Parser)]
#[command(
    name = "mtdchain",
    version,
    about = "Fit higher-order Markov chain mixtures to categorical outcome sequences"
)]
struct Cli {
    /// Comma-separated state labels (default "W,D,L"; a `# states:` file
    /// header applies when the flag is absent)
    #[arg(long, global = true)]
    states: Option<String>,

    /// Seed for all randomized commands
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Suppress informational output and warnings
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit an order-k model to a sequence file and write the model document
    Fit {
        /// Sequence file (whitespace-separated labels or compact form)
        input: PathBuf,
        /// Chain order k
        #[arg(long)]
        order: usize,
        /// Output path for the model JSON document
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the next-state distribution for a history
    Predict {
        /// Model JSON document written by `fit`
        model: PathBuf,
        /// Comma-separated recent states, most recent first (e.g. "W,L")
        #[arg(long)]
        history: String,
    },
    /// Rank chain orders by prediction accuracy on recent games
    Assess {
        /// Sequence file, or a game-ledger CSV with --ledger
        input: PathBuf,
        /// Treat input as a ledger CSV (date,team,opponent,result)
        #[arg(long)]
        ledger: bool,
        /// Assess a single ledger team (default: every team)
        #[arg(long)]
        team: Option<String>,
        /// Largest order to test (orders 1..=k-max)
        #[arg(long = "k-max", default_value_t = 13)]
        k_max: usize,
        /// Evaluation games sampled per repetition
        #[arg(long = "n-eval", default_value_t = 10)]
        n_eval: usize,
        /// Number of most recent games to fit and evaluate on
        #[arg(long, default_value_t = 100)]
        window: usize,
        /// Independent repetitions to average over
        #[arg(long, default_value_t = 1)]
        reps: usize,
        /// Ledger truncation: most recent games to ingest per team
        /// (default: the window size)
        #[arg(long)]
        last: Option<usize>,
        /// Write the accuracy report CSV here
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write chart CSV data here (a directory when several teams run)
        #[arg(long)]
        chart: Option<PathBuf>,
        /// Render SVG barplots here (a directory when several teams run)
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Write the per-prediction trace CSV here
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Generate states from a fitted model
    Simulate {
        /// Model JSON document written by `fit`
        model: PathBuf,
        /// Comma-separated initial history, most recent first
        #[arg(long)]
        init: String,
        /// Number of states to generate
        #[arg(long)]
        steps: usize,
    },
}

enum CliError {
    /// Bad input: unreadable files, parse failures, invalid histories.
    Input(String),
    /// The computation itself failed: fitting, solving, assessment.
    Compute(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Compute(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Compute(m) => m,
        }
    }
}

fn input_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn compute_err(e: impl std::fmt::Display) -> CliError {
    CliError::Compute(e.to_string())
}

/// Write one line of primary output. When the reader has closed the pipe
/// (`mtdchain ... | head`), quit silently instead of panicking.
fn out_line(text: &str) {
    let mut out = std::io::stdout().lock();
    let done = out
        .write_all(text.as_bytes())
        .and_then(|()| out.write_all(b"\n"));
    if let Err(e) = done {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: cannot write to stdout: {e}");
        std::process::exit(3);
    }
}

macro_rules! outln {
    () => { out_line("") };
    ($($arg:tt)*) => { out_line(&format!($($arg)*)) };
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit {
            ref input,
            order,
            ref out,
        } => cmd_fit(&cli, input, order, out.as_deref()),
        Command::Predict {
            ref model,
            ref history,
        } => cmd_predict(model, history),
        Command::Assess { .. } => cmd_assess(&cli),
        Command::Simulate {
            ref model,
            ref init,
            steps,
        } => cmd_simulate(&cli, model, init, steps),
    }
}

/// Resolve the state space: explicit flag, then file header, then W/D/L.
fn resolve_space(flag: &Option<String>, file_text: Option<&str>) -> Result<StateSpace, CliError> {
    if let Some(list) = flag {
        let labels: Vec<&str> = list.split(',').map(str::trim).collect();
        return StateSpace::new(labels).map_err(input_err);
    }
    if let Some(text) = file_text {
        if let Some(space) = header_state_space(text).map_err(input_err)? {
            return Ok(space);
        }
    }
    Ok(StateSpace::wdl())
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<MtdModelF64, CliError> {
    let text = read_to_string(path)?;
    MtdModelF64::from_json(&text).map_err(input_err)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| input_err(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    fs::write(path, contents)
        .map_err(|e| input_err(format!("cannot write {}: {e}", path.display())))
}

fn format_distribution(space: &StateSpace, probs: &[f64]) -> String {
    space
        .labels()
        .iter()
        .zip(probs)
        .map(|(l, p)| format!("{l} {p}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn cmd_fit(cli: &Cli, input: &Path, order: usize, out: Option<&Path>) -> Result<(), CliError> {
    let text = read_to_string(input)?;
    let space = resolve_space(&cli.states, Some(&text))?;
    let seq = parse_sequence(&text, &space).map_err(input_err)?;
    let model: MtdModelF64 = fit(&seq, order).map_err(compute_err)?;

    if let Some(out) = out {
        write_file(out, &model.to_json())?;
    }
    if !cli.quiet {
        outln!("order: {}", model.order());
        outln!("states: {}", space.labels().join(","));
        let lambda: Vec<String> = model.lambda().iter().map(f64::to_string).collect();
        outln!("lambda: {}", lambda.join(" "));
        outln!("lp_residual: {}", model.lp_residual());
        outln!(
            "stationary_hat: {}",
            format_distribution(&space, model.stationary_hat().probs())
        );
    }
    Ok(())
}

fn cmd_predict(model_path: &Path, history: &str) -> Result<(), CliError> {
    let model = load_model(model_path)?;
    let hist = History::parse(history, model.space()).map_err(input_err)?;
    let dist = model.predict_distribution(&hist).map_err(input_err)?;
    outln!("{}", format_distribution(model.space(), dist.probs()));
    Ok(())
}

fn cmd_simulate(cli: &Cli, model_path: &Path, init: &str, steps: usize) -> Result<(), CliError> {
    let model = load_model(model_path)?;
    let hist = History::parse(init, model.space()).map_err(input_err)?;
    if hist.len() != model.order() {
        return Err(CliError::Input(format!(
            "init history has {} states, model order is {}",
            hist.len(),
            model.order()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let out = model
        .simulate(&hist, steps, &mut rng)
        .map_err(compute_err)?;
    let rendered = out.render();
    if !rendered.is_empty() {
        outln!("{rendered}");
    }
    Ok(())
}

fn cmd_assess(cli: &Cli) -> Result<(), CliError> {
    let Command::Assess {
        ref input,
        ledger,
        ref team,
        k_max,
        n_eval,
        window,
        reps,
        last,
        ref report,
        ref chart,
        ref svg,
        ref trace,
    } = cli.command
    else {
        unreachable!("dispatched from Assess");
    };
    if k_max < 1 {
        return Err(CliError::Input("k-max must be >= 1".into()));
    }

    let base_config = AssessmentConfig {
        k_values: (1..=k_max).collect(),
        n_eval,
        window,
        seed: cli.seed,
        repetitions: reps,
        stream: 0,
    };

    // (team label, fitted report, space) per assessed sequence.
    let mut results: Vec<(String, AssessmentReport)> = Vec::new();
    let space;

    if ledger {
        let text = read_to_string(input)?;
        space = resolve_space(&cli.states, None)?;
        let records: Vec<LedgerRecord> =
            read_ledger(text.as_bytes(), &space).map_err(input_err)?;
        let selected: Vec<String> = match team {
            Some(t) => vec![t.clone()],
            None => teams(&records),
        };
        if selected.is_empty() {
            return Err(CliError::Input("ledger contains no teams".into()));
        }
        let take = last.unwrap_or(window);
        for name in selected {
            let available = team_game_count(&records, &name);
            if available > 0 && available < take && !cli.quiet {
                eprintln!("warning: {name} has only {available} games, using all of them");
            }
            let seq = team_sequence(&records, &name, take, &space).map_err(input_err)?;
            let config = AssessmentConfig {
                stream: stream_tag(&name),
                ..base_config.clone()
            };
            let report = run_assessment::<f64>(&seq, &config).map_err(assess_err)?;
            results.push((name, report));
        }
    } else {
        let text = read_to_string(input)?;
        space = resolve_space(&cli.states, Some(&text))?;
        let seq = parse_sequence(&text, &space).map_err(input_err)?;
        let name = input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "sequence".to_string());
        let report = run_assessment::<f64>(&seq, &base_config).map_err(assess_err)?;
        results.push((name, report));
    }

    for (name, report) in &results {
        outln!("team: {name}");
        outln!("k\taccuracy");
        for (k, acc) in &report.per_k {
            outln!("{k}\t{acc}");
        }
        let ranked = rank_orders(report);
        if let Some((best_k, best_acc)) = ranked.first() {
            outln!("best: k={best_k} accuracy {best_acc}");
        }
        outln!();
    }

    let pairs: Vec<(&str, &AssessmentReport)> = results
        .iter()
        .map(|(name, report)| (name.as_str(), report))
        .collect();

    if let Some(path) = report {
        let mut buf = Vec::new();
        write_reports_csv(&pairs, &mut buf).map_err(input_err)?;
        write_file(path, &String::from_utf8(buf).expect("csv is utf-8"))?;
    }
    if let Some(path) = trace {
        let mut buf = Vec::new();
        write_traces_csv(&pairs, &space, &mut buf).map_err(input_err)?;
        write_file(path, &String::from_utf8(buf).expect("csv is utf-8"))?;
    }
    if let Some(path) = chart {
        for (name, report) in &results {
            let data = ChartData::from_report(name.clone(), report);
            let target = per_team_path(path, name, "csv", results.len() > 1);
            write_file(&target, &data.to_csv_string())?;
        }
    }
    if let Some(path) = svg {
        for (name, report) in &results {
            let data = ChartData::from_report(name.clone(), report);
            let target = per_team_path(path, name, "svg", results.len() > 1);
            write_file(&target, &data.to_svg())?;
        }
    }
    Ok(())
}

fn assess_err(e: AssessError) -> CliError {
    match e {
        AssessError::WindowTooShort { .. } | AssessError::ConfigInvalid(_) => {
            CliError::Input(e.to_string())
        }
        AssessError::Model(_) => CliError::Compute(e.to_string()),
    }
}

/// Output path for one team's chart file. With several teams the flag
/// names a directory and each team gets `<sanitized-name>.<ext>` inside.
fn per_team_path(base: &Path, team: &str, ext: &str, multi: bool) -> PathBuf {
    if multi {
        base.join(format!("{}.{ext}", sanitize_name(team)))
    } else {
        base.to_path_buf()
    }
}

fn sanitize_name(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for ch in name.chars() {
        if ch.is_ascii_alphanumeric() {
            out.extend(ch.to_lowercase());
        } else if !out.ends_with('-') && !out.is_empty() {
            out.push('-');
        }
    }
    out.trim_end_matches('-').to_string()
}
