//! Higher-order Markov chains in mixture transition distribution form.
//!
//! Fits order-`k` models to categorical outcome sequences (win/draw/loss
//! records and the like): per-lag transition matrices come from observed
//! transition frequencies, and the lag weights from a small linear
//! program minimizing the L1 mismatch between the empirical state
//! distribution and its image under the mixture. On top of the model sit
//! next-state prediction, seeded simulation, stationary-distribution
//! solving, and an accuracy-based procedure for ranking candidate orders.
//!
//! The numeric core is generic over the scalar type via [`Scalar`]
//! (`f32` or `f64`); the `*F64` aliases at the crate root fix the
//! default double-precision line.
//!
//! ```
//! use mtdchain::{fit, parse_sequence, History, StateSpace};
//!
//! let space = StateSpace::wdl();
//! let seq = parse_sequence("WLWWLWLLWLWWLWL", &space).unwrap();
//! let model: mtdchain::MtdModelF64 = fit(&seq, 2).unwrap();
//! let next = model.predict_distribution(&History::parse("W,L", &space).unwrap());
//! assert_eq!(next.unwrap().len(), 3);
//! ```
//!
//! Randomized operations take an explicit generator; callers seed a
//! `rand_chacha::ChaCha8Rng` (the crate's documented PRNG) so every run
//! is replayable from a recorded 64-bit seed.

pub mod assess;
pub mod chain;
pub mod chart;
pub mod ledger;
pub mod lp;
pub mod model;
pub mod scalar;

pub use assess::{
    derive_rng, rank_orders, run_assessment, stream_tag, write_report_csv, write_reports_csv,
    write_trace_csv, write_traces_csv, AssessError, AssessmentConfig, AssessmentReport,
    PredictionTrace, POSITION_LANE,
};
pub use chain::{
    count_frequencies, empirical_distribution, header_state_space, normalize, parse_sequence,
    ChainError, Distribution, FrequencyMatrix, Sequence, StateSpace, TransitionMatrix,
};
pub use chart::{ChartData, ChartError};
pub use ledger::{
    ingest_ledger, read_ledger, team_game_count, team_sequence, teams, LedgerError, LedgerRecord,
};
pub use lp::{solve_lp, LinearProgram, LpError, LpSolution, LpStatus};
pub use model::{
    fit, lambda_program, sample_categorical, History, ModelError, ModelFileError, MtdModel,
    MODEL_FORMAT,
};
pub use scalar::Scalar;

/// Double-precision transition matrix.
pub type TransitionMatrixF64 = chain::TransitionMatrix<f64>;
/// Double-precision distribution over states.
pub type DistributionF64 = chain::Distribution<f64>;
/// Double-precision linear program.
pub type LinearProgramF64 = lp::LinearProgram<f64>;
/// Double-precision LP solution.
pub type LpSolutionF64 = lp::LpSolution<f64>;
/// Double-precision fitted model, the default numeric line.
pub type MtdModelF64 = model::MtdModel<f64>;
