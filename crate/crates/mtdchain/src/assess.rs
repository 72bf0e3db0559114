//! Prediction-accuracy assessment of candidate chain orders.
//!
//! For each candidate order `k`, a model is fitted on the same window of
//! recent observations and asked to predict a shared random set of
//! evaluation positions: the predicted state is one categorical draw from
//! the model's next-state distribution given the true preceding states,
//! and the score is the fraction of draws matching the actual outcome.
//! The window is also the fitting data, so this measures how well each
//! order describes the observed sequence rather than out-of-sample skill.
//!
//! # Reproducibility
//!
//! Every random choice comes from a ChaCha8 stream derived from
//! `(seed, stream, lane, repetition)` — see [`derive_rng`]. Position
//! sampling uses the reserved [`POSITION_LANE`]; prediction draws for
//! order `k` use lane `k`. Units are therefore independent: per-`(k,
//! repetition)` work can run in parallel and still agree exactly with a
//! serial run.

use std::collections::BTreeMap;
use std::io::Write;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::chain::{Sequence, StateSpace};
use crate::model::{fit, History, ModelError};
use crate::scalar::Scalar;

/// Lane reserved for drawing evaluation positions (shared by all orders).
pub const POSITION_LANE: u64 = u64::MAX;

/// Build the deterministic generator for one unit of assessment work.
///
/// The 256-bit ChaCha8 key is the little-endian concatenation of the four
/// words, so distinct `(seed, stream, lane, repetition)` tuples get
/// independent streams and identical tuples replay identical draws.
pub fn derive_rng(seed: u64, stream: u64, lane: u64, repetition: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&stream.to_le_bytes());
    key[16..24].copy_from_slice(&lane.to_le_bytes());
    key[24..32].copy_from_slice(&repetition.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// FNV-1a hash of a name, used as the `stream` word so runs over
/// different teams draw from unrelated streams.
pub fn stream_tag(name: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in name.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssessError {
    #[error("sequence length {len} is shorter than the assessment window {window}")]
    WindowTooShort { len: usize, window: usize },

    #[error("invalid assessment configuration: {0}")]
    ConfigInvalid(String),

    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Assessment parameters. Defaults follow the reference procedure: orders
/// 1..=13, 10 evaluation games out of the most recent 100, one repetition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssessmentConfig {
    /// Candidate orders to compare.
    pub k_values: Vec<usize>,
    /// Evaluation games sampled per repetition.
    pub n_eval: usize,
    /// Number of most recent observations used for fitting and evaluation.
    pub window: usize,
    /// Base seed recorded in reports.
    pub seed: u64,
    /// Independent repeats averaged into `per_k`.
    pub repetitions: usize,
    /// Stream word mixed into RNG derivation; the CLI sets this to
    /// [`stream_tag`] of the team name, 0 otherwise.
    pub stream: u64,
}

impl Default for AssessmentConfig {
    fn default() -> Self {
        Self {
            k_values: (1..=13).collect(),
            n_eval: 10,
            window: 100,
            seed: 0,
            repetitions: 1,
            stream: 0,
        }
    }
}

impl AssessmentConfig {
    pub fn max_k(&self) -> usize {
        self.k_values.iter().copied().max().unwrap_or(0)
    }

    fn validate(&self) -> Result<(), AssessError> {
        if self.k_values.is_empty() {
            return Err(AssessError::ConfigInvalid("k_values must be non-empty".into()));
        }
        if self.k_values.iter().any(|&k| k < 1) {
            return Err(AssessError::ConfigInvalid("every order must be >= 1".into()));
        }
        if self.n_eval < 1 {
            return Err(AssessError::ConfigInvalid("n_eval must be >= 1".into()));
        }
        if self.repetitions < 1 {
            return Err(AssessError::ConfigInvalid("repetitions must be >= 1".into()));
        }
        if self.window <= self.max_k() {
            return Err(AssessError::ConfigInvalid(format!(
                "window {} must exceed the largest order {}",
                self.window,
                self.max_k()
            )));
        }
        let eligible = self.window - self.max_k();
        if eligible < self.n_eval {
            return Err(AssessError::ConfigInvalid(format!(
                "only {eligible} eligible positions for n_eval {}",
                self.n_eval
            )));
        }
        Ok(())
    }
}

/// One scored prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PredictionTrace {
    pub repetition: usize,
    pub k: usize,
    /// 0-based index into the assessment window.
    pub position: usize,
    pub predicted: usize,
    pub actual: usize,
}

/// Results of one assessment run.
#[derive(Debug, Clone, PartialEq)]
pub struct AssessmentReport {
    pub config: AssessmentConfig,
    /// Sampled evaluation positions, one sorted list per repetition.
    pub eval_positions: Vec<Vec<usize>>,
    /// Order -> accuracy per repetition, each a multiple of `1/n_eval`.
    pub accuracies: BTreeMap<usize, Vec<f64>>,
    /// Order -> accuracy averaged over repetitions.
    pub per_k: BTreeMap<usize, f64>,
    pub trace: Vec<PredictionTrace>,
}

impl AssessmentReport {
    /// Mean accuracy for one order.
    pub fn accuracy(&self, k: usize) -> Option<f64> {
        self.per_k.get(&k).copied()
    }
}

/// Run the assessment procedure over the most recent `config.window`
/// observations of `seq`.
///
/// Evaluation positions are drawn once per repetition and shared by all
/// orders, restricted to positions with at least `max(k_values)`
/// predecessors so every order is scored on identical games with a full
/// history of true outcomes.
pub fn run_assessment<T: Scalar>(
    seq: &Sequence,
    config: &AssessmentConfig,
) -> Result<AssessmentReport, AssessError> {
    config.validate()?;
    if seq.len() < config.window {
        return Err(AssessError::WindowTooShort {
            len: seq.len(),
            window: config.window,
        });
    }
    let window_seq = seq.last_n(config.window);
    let max_k = config.max_k();

    let mut orders: Vec<usize> = config.k_values.clone();
    orders.sort_unstable();
    orders.dedup();

    let mut models = Vec::with_capacity(orders.len());
    for &k in &orders {
        models.push((k, fit::<T>(&window_seq, k)?));
    }

    let eligible = config.window - max_k;
    let mut eval_positions = Vec::with_capacity(config.repetitions);
    let mut accuracies: BTreeMap<usize, Vec<f64>> =
        orders.iter().map(|&k| (k, Vec::new())).collect();
    let mut trace = Vec::new();

    for rep in 0..config.repetitions {
        let mut pos_rng = derive_rng(config.seed, config.stream, POSITION_LANE, rep as u64);
        let mut positions: Vec<usize> =
            rand::seq::index::sample(&mut pos_rng, eligible, config.n_eval)
                .into_iter()
                .map(|i| i + max_k)
                .collect();
        positions.sort_unstable();

        for (k, model) in &models {
            let mut draw_rng = derive_rng(config.seed, config.stream, *k as u64, rep as u64);
            let mut correct = 0usize;
            for &pos in &positions {
                let hist = History::preceding(&window_seq, pos, *k)
                    .expect("eligible positions have full histories");
                let predicted = model.sample_next(&hist, &mut draw_rng)?;
                let actual = window_seq.states()[pos];
                if predicted == actual {
                    correct += 1;
                }
                trace.push(PredictionTrace {
                    repetition: rep,
                    k: *k,
                    position: pos,
                    predicted,
                    actual,
                });
            }
            accuracies
                .get_mut(k)
                .expect("order registered")
                .push(correct as f64 / config.n_eval as f64);
        }
        eval_positions.push(positions);
    }

    let per_k = accuracies
        .iter()
        .map(|(&k, accs)| (k, accs.iter().sum::<f64>() / accs.len() as f64))
        .collect();

    Ok(AssessmentReport {
        config: config.clone(),
        eval_positions,
        accuracies,
        per_k,
        trace,
    })
}

/// Orders ranked by mean accuracy, best first; ties go to the smaller
/// order.
pub fn rank_orders(report: &AssessmentReport) -> Vec<(usize, f64)> {
    let mut ranked: Vec<(usize, f64)> = report.per_k.iter().map(|(&k, &a)| (k, a)).collect();
    ranked.sort_by(|(ka, aa), (kb, ab)| ab.total_cmp(aa).then(ka.cmp(kb)));
    ranked
}

/// Write the tabular report: one row per `(k, repetition)` with columns
/// `team,k,repetition,accuracy,seed`.
pub fn write_report_csv<W: Write>(
    report: &AssessmentReport,
    team: &str,
    out: W,
) -> csv::Result<()> {
    write_reports_csv(&[(team, report)], out)
}

/// Multi-team variant of [`write_report_csv`]: one document, one header,
/// rows grouped by team in the given order.
pub fn write_reports_csv<W: Write>(
    reports: &[(&str, &AssessmentReport)],
    out: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["team", "k", "repetition", "accuracy", "seed"])?;
    for (team, report) in reports {
        for (k, accs) in &report.accuracies {
            for (rep, acc) in accs.iter().enumerate() {
                w.write_record([
                    *team,
                    &k.to_string(),
                    &rep.to_string(),
                    &acc.to_string(),
                    &report.config.seed.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Write the per-prediction companion file with columns
/// `team,k,repetition,position,predicted,actual`.
pub fn write_trace_csv<W: Write>(
    report: &AssessmentReport,
    team: &str,
    space: &StateSpace,
    out: W,
) -> csv::Result<()> {
    write_traces_csv(&[(team, report)], space, out)
}

/// Multi-team variant of [`write_trace_csv`].
pub fn write_traces_csv<W: Write>(
    reports: &[(&str, &AssessmentReport)],
    space: &StateSpace,
    out: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["team", "k", "repetition", "position", "predicted", "actual"])?;
    for (team, report) in reports {
        for row in &report.trace {
            w.write_record([
                *team,
                &row.k.to_string(),
                &row.repetition.to_string(),
                &row.position.to_string(),
                space.label(row.predicted),
                space.label(row.actual),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
