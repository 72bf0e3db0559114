//! The mixture transition distribution (MTD) model of order `k`.
//!
//! A fitted model carries one column-stochastic transition matrix per lag
//! `1..=k` plus a vector of non-negative lag weights summing to one. The
//! next-state distribution given the `k` most recent states is the
//! weight-mixed combination of the addressed matrix columns. Lag weights
//! are estimated by linear programming: minimize the L1 mismatch between
//! the empirical state distribution and its one-step image under the
//! mixture.

use rand::Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{
    count_frequencies, empirical_distribution, normalize, ChainError, Distribution, Sequence,
    StateSpace, TransitionMatrix,
};
use crate::lp::{solve_lp, LinearProgram, LpError, LpStatus};
use crate::scalar::Scalar;

/// Version tag written into every serialized model document.
pub const MODEL_FORMAT: &str = "mtd-model/1";

const ORIENTATION_NOTE: &str =
    "column-stochastic; columns[from][to]: columns index the from-state, rows the to-state";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("order must be >= 1")]
    OrderNotPositive,

    #[error("sequence too short: length {n} cannot support order {k} (need at least k+1)")]
    SequenceTooShort { n: usize, k: usize },

    #[error("lag-weight LP did not reach an optimum: {0}")]
    LpFailure(String),

    #[error("history length {got} does not match model order {expected}")]
    HistoryLengthMismatch { expected: usize, got: usize },

    #[error("history state {index} out of range for {m} states")]
    InvalidHistoryState { index: usize, m: usize },

    #[error("no non-negative normalized stationary solution within tolerance")]
    NoStationary,

    #[error(transparent)]
    Chain(#[from] ChainError),

    #[error("invalid model: {0}")]
    InvalidModel(String),
}

impl From<LpError> for ModelError {
    fn from(e: LpError) -> Self {
        ModelError::LpFailure(e.to_string())
    }
}

/// The `k` most recent states, most recent first: entry `l-1` holds the
/// state observed `l` steps ago.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct History {
    states: Vec<usize>,
}

impl History {
    pub fn new(states: Vec<usize>) -> Self {
        Self { states }
    }

    /// Parse a comma-separated label list such as `"W,L"`, most recent
    /// label first.
    pub fn parse(text: &str, space: &StateSpace) -> Result<Self, ChainError> {
        let mut states = Vec::new();
        for (i, token) in text.split(',').map(str::trim).enumerate() {
            let idx = space
                .index_of(token)
                .ok_or_else(|| ChainError::UnknownLabel {
                    token: token.to_string(),
                    position: i + 1,
                })?;
            states.push(idx);
        }
        Ok(Self { states })
    }

    /// History of the `k` states preceding 0-based position `pos` in
    /// `seq`, or `None` when fewer than `k` predecessors exist.
    pub fn preceding(seq: &Sequence, pos: usize, k: usize) -> Option<Self> {
        if pos < k || pos > seq.len() {
            return None;
        }
        let states = (1..=k).map(|l| seq.states()[pos - l]).collect();
        Some(Self { states })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    /// Slide the window one step: `new_state` becomes the most recent
    /// entry and the oldest entry drops off.
    pub fn shift(&mut self, new_state: usize) {
        self.states.rotate_right(1);
        self.states[0] = new_state;
    }
}

/// A fitted MTD model: per-lag transition matrices, lag weights, the
/// empirical stationary estimate used during fitting, and the attained LP
/// objective (the L1 mismatch).
#[derive(Debug, Clone, PartialEq)]
pub struct MtdModel<T> {
    order: usize,
    space: StateSpace,
    qs: Vec<TransitionMatrix<T>>,
    lambda: Vec<T>,
    stationary_hat: Distribution<T>,
    lp_residual: T,
}

impl<T: Scalar> MtdModel<T> {
    /// Assemble from already-computed parts, validating every invariant:
    /// matrix lags run `1..=order`, dimensions agree, weights are
    /// non-negative and sum to one, the residual is non-negative.
    pub fn from_parts(
        space: StateSpace,
        qs: Vec<TransitionMatrix<T>>,
        lambda: Vec<T>,
        stationary_hat: Distribution<T>,
        lp_residual: T,
    ) -> Result<Self, ModelError> {
        let order = lambda.len();
        if order == 0 {
            return Err(ModelError::OrderNotPositive);
        }
        let m = space.len();
        if qs.len() != order {
            return Err(ModelError::InvalidModel(format!(
                "got {} transition matrices for order {order}",
                qs.len()
            )));
        }
        for (i, q) in qs.iter().enumerate() {
            if q.lag() != i + 1 {
                return Err(ModelError::InvalidModel(format!(
                    "matrix at position {i} has lag {}, expected {}",
                    q.lag(),
                    i + 1
                )));
            }
            if q.dim() != m {
                return Err(ModelError::InvalidModel(format!(
                    "matrix for lag {} is {}x{}, expected {m}x{m}",
                    q.lag(),
                    q.dim(),
                    q.dim()
                )));
            }
        }
        if lambda.iter().any(|&l| !(l >= T::zero() && l.is_finite())) {
            return Err(ModelError::InvalidModel(
                "lag weights must be finite and non-negative".into(),
            ));
        }
        let sum: T = lambda.iter().copied().sum();
        if (sum - T::one()).abs() > T::prob_tol() {
            return Err(ModelError::InvalidModel(format!(
                "lag weights sum to {sum}, expected 1"
            )));
        }
        if stationary_hat.len() != m {
            return Err(ModelError::InvalidModel(format!(
                "stationary estimate has {} entries, expected {m}",
                stationary_hat.len()
            )));
        }
        if lp_residual < T::zero() || !lp_residual.is_finite() {
            return Err(ModelError::InvalidModel(format!(
                "lp_residual must be finite and non-negative, got {lp_residual}"
            )));
        }
        Ok(Self {
            order,
            space,
            qs,
            lambda,
            stationary_hat,
            lp_residual,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    /// Number of states `m`.
    pub fn dim(&self) -> usize {
        self.space.len()
    }

    /// Transition matrix for `lag` (1-based, `1..=order`).
    pub fn q(&self, lag: usize) -> &TransitionMatrix<T> {
        &self.qs[lag - 1]
    }

    pub fn qs(&self) -> &[TransitionMatrix<T>] {
        &self.qs
    }

    pub fn lambda(&self) -> &[T] {
        &self.lambda
    }

    pub fn stationary_hat(&self) -> &Distribution<T> {
        &self.stationary_hat
    }

    /// Optimal LP objective: the L1 mismatch between the empirical
    /// distribution and its image under the fitted mixture.
    pub fn lp_residual(&self) -> T {
        self.lp_residual
    }

    /// The mixture matrix `sum_l lambda_l Q(l)`, column-major.
    pub fn mixture_matrix(&self) -> Vec<T> {
        let m = self.dim();
        let mut mix = vec![T::zero(); m * m];
        for (l, q) in self.qs.iter().enumerate() {
            let w = self.lambda[l];
            if w == T::zero() {
                continue;
            }
            for (dst, &src) in mix.iter_mut().zip(q.entries()) {
                *dst += w * src;
            }
        }
        mix
    }

    /// L1 mismatch between the fitting distribution and its mixture image
    /// for an arbitrary weight vector. `weights` must have length `order`.
    pub fn residual_for(&self, weights: &[T]) -> T {
        assert_eq!(weights.len(), self.order, "weight vector length");
        let m = self.dim();
        let xh = self.stationary_hat.probs();
        let mut total = T::zero();
        for i in 0..m {
            let mut image = T::zero();
            for (l, q) in self.qs.iter().enumerate() {
                let mut qx = T::zero();
                for (j, &x) in xh.iter().enumerate() {
                    qx += q.prob(i, j) * x;
                }
                image += weights[l] * qx;
            }
            total += (xh[i] - image).abs();
        }
        total
    }

    /// Next-state distribution given the `order` most recent states.
    ///
    /// The raw mixture vector is renormalized when some addressed columns
    /// are zero; when every addressed column is zero it falls back to the
    /// empirical stationary estimate so the result is always a proper
    /// distribution.
    pub fn predict_distribution(&self, hist: &History) -> Result<Distribution<T>, ModelError> {
        if hist.len() != self.order {
            return Err(ModelError::HistoryLengthMismatch {
                expected: self.order,
                got: hist.len(),
            });
        }
        let m = self.dim();
        for &s in hist.states() {
            if s >= m {
                return Err(ModelError::InvalidHistoryState { index: s, m });
            }
        }
        let mut raw = vec![T::zero(); m];
        for (l, q) in self.qs.iter().enumerate() {
            let from = hist.states()[l];
            let w = self.lambda[l];
            for (i, r) in raw.iter_mut().enumerate() {
                *r += w * q.prob(i, from);
            }
        }
        let total: T = raw.iter().copied().sum();
        if total > T::zero() {
            for r in raw.iter_mut() {
                *r /= total;
            }
            Ok(Distribution::from_raw(raw))
        } else {
            Ok(self.stationary_hat.clone())
        }
    }

    /// Draw the next state from the predicted distribution. Deterministic
    /// given the generator state.
    pub fn sample_next<R: Rng>(&self, hist: &History, rng: &mut R) -> Result<usize, ModelError> {
        let dist = self.predict_distribution(hist)?;
        Ok(sample_categorical(dist.probs(), rng))
    }

    /// Generate `steps` states starting from `init`, shifting the history
    /// window after each draw.
    pub fn simulate<R: Rng>(
        &self,
        init: &History,
        steps: usize,
        rng: &mut R,
    ) -> Result<Sequence, ModelError> {
        let mut hist = init.clone();
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            let s = self.sample_next(&hist, rng)?;
            out.push(s);
            if self.order > 0 {
                hist.shift(s);
            }
        }
        Ok(Sequence::from_indices(self.space.clone(), out).expect("sampled states are in range"))
    }

    /// Solve for a distribution fixed by the mixture matrix: `M X = X`,
    /// `X >= 0`, `sum X = 1`.
    ///
    /// The singular system `(I - M) X = 0` is solved with the
    /// normalization row appended, by Gauss-Jordan elimination with
    /// partial pivoting. When the solution space has more than one
    /// dimension the remaining freedom is resolved deterministically: all
    /// free variables are tied to one parameter chosen to minimize the
    /// Euclidean norm, which yields the uniform distribution for the
    /// identity mixture.
    pub fn stationary_distribution(&self) -> Result<Distribution<T>, ModelError> {
        let m = self.dim();
        let mix = self.mixture_matrix();

        // (m+1) x m augmented system: rows of (I - M), then the ones row.
        let mut a: Vec<Vec<T>> = (0..m)
            .map(|r| {
                (0..m)
                    .map(|c| {
                        let id = if r == c { T::one() } else { T::zero() };
                        id - mix[c * m + r]
                    })
                    .collect()
            })
            .collect();
        a.push(vec![T::one(); m]);
        let mut b = vec![T::zero(); m + 1];
        b[m] = T::one();

        let rows = m + 1;
        let mut pivot_row_of_col = vec![usize::MAX; m];
        let mut row_used = vec![false; rows];
        for col in 0..m {
            let mut best: Option<(usize, T)> = None;
            for (r, &used) in row_used.iter().enumerate() {
                if used {
                    continue;
                }
                let mag = a[r][col].abs();
                if best.is_none_or(|(_, bm)| mag > bm) {
                    best = Some((r, mag));
                }
            }
            let Some((r, mag)) = best else { break };
            if mag <= T::pivot_tol() {
                continue; // free column
            }
            let p = a[r][col];
            for x in a[r].iter_mut() {
                *x /= p;
            }
            b[r] /= p;
            let prow = a[r].clone();
            let prhs = b[r];
            for (other, row) in a.iter_mut().enumerate() {
                if other == r {
                    continue;
                }
                let f = row[col];
                if f != T::zero() {
                    for (x, &pv) in row.iter_mut().zip(&prow) {
                        *x -= f * pv;
                    }
                    b[other] -= f * prhs;
                }
            }
            row_used[r] = true;
            pivot_row_of_col[col] = r;
        }

        let free_cols: Vec<usize> = (0..m)
            .filter(|&c| pivot_row_of_col[c] == usize::MAX)
            .collect();

        // x = base + dir * tau, with every free variable set to tau.
        let mut base = vec![T::zero(); m];
        let mut dir = vec![T::zero(); m];
        for col in 0..m {
            let pr = pivot_row_of_col[col];
            if pr == usize::MAX {
                dir[col] = T::one();
            } else {
                base[col] = b[pr];
                let mut d = T::zero();
                for &f in &free_cols {
                    d -= a[pr][f];
                }
                dir[col] = d;
            }
        }
        let mut x = if free_cols.is_empty() {
            base
        } else {
            let num: T = base.iter().zip(&dir).map(|(&p, &q)| p * q).sum();
            let den: T = dir.iter().map(|&q| q * q).sum();
            let tau = -num / den;
            base.iter()
                .zip(&dir)
                .map(|(&p, &q)| p + q * tau)
                .collect()
        };

        // Verify against the original system before accepting.
        let mut residual = T::zero();
        for r in 0..m {
            let mut mx = T::zero();
            for c in 0..m {
                mx += mix[c * m + r] * x[c];
            }
            residual += (mx - x[r]).abs();
        }
        let sum: T = x.iter().copied().sum();
        let min = x.iter().copied().fold(T::infinity(), T::min);
        if residual > T::feas_tol() || (sum - T::one()).abs() > T::feas_tol() || min < -T::feas_tol()
        {
            return Err(ModelError::NoStationary);
        }
        for xi in x.iter_mut() {
            *xi = xi.max(T::zero());
        }
        let sum: T = x.iter().copied().sum();
        for xi in x.iter_mut() {
            *xi /= sum;
        }
        Ok(Distribution::from_raw(x))
    }
}

/// Build the lag-weight estimation program for transition matrices `qs`
/// (lags in positional order) against the distribution `stationary`.
///
/// Variables are the `k` lag weights followed by `m` absolute-value bound
/// variables `u`; the objective minimizes `sum u_i` subject to
/// `u >= +-(X - B w)`, `sum w = 1`, and the implicit `w, u >= 0`, where
/// column `l` of `B` is `Q(l) X`.
pub fn lambda_program<T: Scalar>(
    qs: &[TransitionMatrix<T>],
    stationary: &Distribution<T>,
) -> LinearProgram<T> {
    let k = qs.len();
    let m = stationary.len();
    let xh = stationary.probs();

    // b_col[l][i] = (Q(l) X)_i
    let mut b_col = vec![vec![T::zero(); m]; k];
    for (q, col) in qs.iter().zip(b_col.iter_mut()) {
        for (i, acc) in col.iter_mut().enumerate() {
            for (j, &x) in xh.iter().enumerate() {
                *acc += q.prob(i, j) * x;
            }
        }
    }

    let v = k + m;
    let mut lp = LinearProgram::new(vec![T::zero(); v]);
    for c in lp.objective.iter_mut().skip(k) {
        *c = T::one();
    }
    let mut simplex_row = vec![T::zero(); v];
    for c in simplex_row.iter_mut().take(k) {
        *c = T::one();
    }
    lp.eq_constraints.push((simplex_row, T::one()));
    for i in 0..m {
        // u_i >= x_i - (B w)_i  <=>  -(B w)_i - u_i <= -x_i
        let mut row = vec![T::zero(); v];
        for l in 0..k {
            row[l] = -b_col[l][i];
        }
        row[k + i] = -T::one();
        lp.ub_constraints.push((row, -xh[i]));
        // u_i >= (B w)_i - x_i  <=>  (B w)_i - u_i <= x_i
        let mut row = vec![T::zero(); v];
        for l in 0..k {
            row[l] = b_col[l][i];
        }
        row[k + i] = -T::one();
        lp.ub_constraints.push((row, xh[i]));
    }
    lp
}

/// Fit an order-`k` MTD model to a sequence.
///
/// Per-lag matrices come from normalized transition frequencies; the lag
/// weights minimize `||X - B w||_1` over the weight simplex, where `X` is
/// the empirical state distribution and column `l` of `B` is `Q(l) X`.
/// The minimization runs as the linear program built by
/// [`lambda_program`].
pub fn fit<T: Scalar>(seq: &Sequence, k: usize) -> Result<MtdModel<T>, ModelError> {
    if k < 1 {
        return Err(ModelError::OrderNotPositive);
    }
    let n = seq.len();
    if n < k + 1 {
        return Err(ModelError::SequenceTooShort { n, k });
    }

    let mut qs = Vec::with_capacity(k);
    for lag in 1..=k {
        qs.push(normalize::<T>(&count_frequencies(seq, lag)?));
    }
    let stationary_hat = empirical_distribution::<T>(seq)?;

    let lp = lambda_program(&qs, &stationary_hat);
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        // A feasible point always exists (any vertex of the weight
        // simplex), so this indicates an internal solver problem.
        return Err(ModelError::LpFailure(format!(
            "solver returned {:?}",
            sol.status
        )));
    }
    // Scrub solver dust: weights are exactly non-negative by contract.
    let lambda: Vec<T> = sol.x[..k].iter().map(|&w| w.max(T::zero())).collect();
    let lp_residual = sol.objective_value.max(T::zero());

    MtdModel::from_parts(seq.space().clone(), qs, lambda, stationary_hat, lp_residual)
}

/// Draw an index from a categorical distribution by inversion of one
/// uniform variate. `probs` must be non-negative and sum to ~1.
pub fn sample_categorical<T: Scalar, R: Rng>(probs: &[T], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        let p = p.to_f64().expect("probability converts to f64");
        if p > 0.0 {
            last_positive = i;
        }
        cum += p;
        if u < cum {
            return i;
        }
    }
    // Rounding left cum slightly below 1; attribute the sliver to the
    // last state carrying mass.
    last_positive
}

// ---------------------------------------------------------------------
// Serialized document
// ---------------------------------------------------------------------

/// Errors from reading or writing model documents.
#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("model document is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("unsupported model format tag {0:?} (expected {MODEL_FORMAT:?})")]
    Format(String),

    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Serialize, Deserialize)]
struct MatrixDoc<T> {
    lag: usize,
    columns: Vec<Vec<T>>,
}

#[derive(Serialize, Deserialize)]
struct ModelDoc<T> {
    format: String,
    order: usize,
    states: Vec<String>,
    orientation: String,
    lambda: Vec<T>,
    transition_matrices: Vec<MatrixDoc<T>>,
    stationary_hat: Vec<T>,
    lp_residual: T,
}

impl<T: Scalar + Serialize> MtdModel<T> {
    /// Serialize to the self-describing JSON document. Probabilities
    /// round-trip exactly: the writer emits the shortest decimal form
    /// that parses back to the identical value.
    pub fn to_json(&self) -> String {
        let doc = ModelDoc {
            format: MODEL_FORMAT.to_string(),
            order: self.order,
            states: self.space.labels().to_vec(),
            orientation: ORIENTATION_NOTE.to_string(),
            lambda: self.lambda.clone(),
            transition_matrices: self
                .qs
                .iter()
                .map(|q| MatrixDoc {
                    lag: q.lag(),
                    columns: (0..q.dim()).map(|j| q.column(j).to_vec()).collect(),
                })
                .collect(),
            stationary_hat: self.stationary_hat.probs().to_vec(),
            lp_residual: self.lp_residual,
        };
        serde_json::to_string_pretty(&doc).expect("model document serializes")
    }
}

impl<T: Scalar + DeserializeOwned> MtdModel<T> {
    /// Parse and validate a JSON model document.
    pub fn from_json(text: &str) -> Result<Self, ModelFileError> {
        let doc: ModelDoc<T> = serde_json::from_str(text)?;
        if doc.format != MODEL_FORMAT {
            return Err(ModelFileError::Format(doc.format));
        }
        let space = StateSpace::new(doc.states).map_err(ModelError::from)?;
        let m = space.len();
        let mut qs = Vec::with_capacity(doc.transition_matrices.len());
        for mat in doc.transition_matrices {
            let mut probs = Vec::with_capacity(m * m);
            if mat.columns.len() != m || mat.columns.iter().any(|c| c.len() != m) {
                return Err(ModelError::InvalidModel(format!(
                    "matrix for lag {} is not {m}x{m}",
                    mat.lag
                ))
                .into());
            }
            for col in &mat.columns {
                probs.extend(col.iter().copied());
            }
            qs.push(TransitionMatrix::new(mat.lag, m, probs).map_err(ModelError::from)?);
        }
        let stationary =
            Distribution::new(doc.stationary_hat).map_err(ModelError::from)?;
        if doc.order != doc.lambda.len() {
            return Err(ModelError::InvalidModel(format!(
                "order {} disagrees with {} lag weights",
                doc.order,
                doc.lambda.len()
            ))
            .into());
        }
        Ok(Self::from_parts(
            space,
            qs,
            doc.lambda,
            stationary,
            doc.lp_residual,
        )?)
    }
}
