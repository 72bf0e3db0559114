//! Categorical state spaces, observed sequences, and transition counting.
//!
//! Matrix orientation throughout the crate: **columns index the "from"
//! state, rows index the "to" state**. A transition matrix is column
//! stochastic, i.e. every column is non-negative and sums to one (or is
//! entirely zero when the from-state was never observed leaving).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// Errors from state-space construction, sequence parsing, and counting.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("unknown state label {token:?} at position {position}")]
    UnknownLabel { token: String, position: usize },

    #[error("empty input: no state tokens found")]
    EmptyInput,

    #[error("lag must be >= 1")]
    LagNotPositive,

    #[error("invalid state space: {0}")]
    InvalidStateSpace(String),

    #[error("state index {index} out of range for {m} states")]
    InvalidStateIndex { index: usize, m: usize },
}

/// Ordered alphabet of categorical states.
///
/// The declaration order is significant: it fixes the index of every state
/// in vectors and matrices. For win/draw/loss data that order is `W, D, L`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSpace {
    labels: Vec<String>,
}

impl StateSpace {
    /// Build a state space from distinct, non-empty labels. At least two
    /// states are required.
    pub fn new<I, S>(labels: I) -> Result<Self, ChainError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() < 2 {
            return Err(ChainError::InvalidStateSpace(format!(
                "need at least 2 states, got {}",
                labels.len()
            )));
        }
        for (i, label) in labels.iter().enumerate() {
            if label.is_empty() {
                return Err(ChainError::InvalidStateSpace(format!(
                    "label at index {i} is empty"
                )));
            }
            if label.chars().any(char::is_whitespace) || label.contains(',') {
                return Err(ChainError::InvalidStateSpace(format!(
                    "label {label:?} contains whitespace or a comma"
                )));
            }
            if labels[..i].contains(label) {
                return Err(ChainError::InvalidStateSpace(format!(
                    "duplicate label {label:?}"
                )));
            }
        }
        Ok(Self { labels })
    }

    /// The standard win/draw/loss space.
    pub fn wdl() -> Self {
        Self::new(["W", "D", "L"]).expect("static labels are valid")
    }

    /// Number of states `m`.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// True when every label is a single character, which enables the
    /// compact unseparated text form (`"WWLWL"`).
    pub fn single_char(&self) -> bool {
        self.labels.iter().all(|l| l.chars().count() == 1)
    }
}

/// Time-ordered sequence of state indices over a [`StateSpace`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sequence {
    space: StateSpace,
    states: Vec<usize>,
}

impl Sequence {
    /// Build a sequence from raw indices, validating each against the space.
    pub fn from_indices(space: StateSpace, states: Vec<usize>) -> Result<Self, ChainError> {
        let m = space.len();
        for &s in &states {
            if s >= m {
                return Err(ChainError::InvalidStateIndex { index: s, m });
            }
        }
        Ok(Self { space, states })
    }

    /// Build a sequence from an iterator of labels.
    pub fn from_labels<'a, I>(space: StateSpace, labels: I) -> Result<Self, ChainError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut states = Vec::new();
        for (i, label) in labels.into_iter().enumerate() {
            let idx = space
                .index_of(label)
                .ok_or_else(|| ChainError::UnknownLabel {
                    token: label.to_string(),
                    position: i + 1,
                })?;
            states.push(idx);
        }
        Ok(Self { space, states })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    /// Length `n` of the sequence.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// New sequence holding the last `n` observations (all of them when
    /// fewer are available).
    pub fn last_n(&self, n: usize) -> Sequence {
        let start = self.states.len().saturating_sub(n);
        Sequence {
            space: self.space.clone(),
            states: self.states[start..].to_vec(),
        }
    }

    /// Render back to text. Uses the compact unseparated form when every
    /// label is a single character, otherwise space-separated labels.
    pub fn render(&self) -> String {
        let labels: Vec<&str> = self.states.iter().map(|&s| self.space.label(s)).collect();
        if self.space.single_char() {
            labels.concat()
        } else {
            labels.join(" ")
        }
    }
}

/// Parse a token stream into a sequence over `space`.
///
/// Tokens are separated by any whitespace. A token that is not itself a
/// label is expanded character by character when every label of the space
/// is a single character, so `"WWLWL"` and `"W W L W L"` parse identically.
/// Lines starting with `#` are ignored as comments.
///
/// Error positions are 1-based and refer to the position the offending
/// token (or character, in compact form) would occupy in the parsed
/// sequence.
pub fn parse_sequence(text: &str, space: &StateSpace) -> Result<Sequence, ChainError> {
    let mut states = Vec::new();
    let compact_ok = space.single_char();
    for line in text.lines() {
        if line.trim_start().starts_with('#') {
            continue;
        }
        for token in line.split_whitespace() {
            if let Some(idx) = space.index_of(token) {
                states.push(idx);
                continue;
            }
            if compact_ok && token.chars().count() > 1 {
                for ch in token.chars() {
                    let s = ch.to_string();
                    match space.index_of(&s) {
                        Some(idx) => states.push(idx),
                        None => {
                            return Err(ChainError::UnknownLabel {
                                token: s,
                                position: states.len() + 1,
                            })
                        }
                    }
                }
            } else {
                return Err(ChainError::UnknownLabel {
                    token: token.to_string(),
                    position: states.len() + 1,
                });
            }
        }
    }
    if states.is_empty() {
        return Err(ChainError::EmptyInput);
    }
    Ok(Sequence {
        space: space.clone(),
        states,
    })
}

/// Extract the state space declared by a `# states: ...` header line, if
/// the text carries one.
pub fn header_state_space(text: &str) -> Result<Option<StateSpace>, ChainError> {
    for line in text.lines() {
        let trimmed = line.trim_start();
        if let Some(rest) = trimmed.strip_prefix("# states:") {
            let labels: Vec<&str> = rest.split_whitespace().collect();
            return StateSpace::new(labels).map(Some);
        }
    }
    Ok(None)
}

/// Lag-`l` transition frequency counts.
///
/// Entry `(to, from)` is the number of positions `t` with `X(t) = from`
/// and `X(t+l) = to`. Stored column-major; a column holds all counts out
/// of one from-state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyMatrix {
    lag: usize,
    m: usize,
    counts: Vec<u64>,
}

impl FrequencyMatrix {
    pub fn lag(&self) -> usize {
        self.lag
    }

    /// Number of states (the matrix is `m x m`).
    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn count(&self, to: usize, from: usize) -> u64 {
        self.counts[from * self.m + to]
    }

    /// Column of counts out of `from`.
    pub fn column(&self, from: usize) -> &[u64] {
        &self.counts[from * self.m..(from + 1) * self.m]
    }

    pub fn column_sum(&self, from: usize) -> u64 {
        self.column(from).iter().sum()
    }

    /// Sum of all entries; equals `max(n - lag, 0)` for the source sequence.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Count lag-`l` transitions over all overlapping windows of `seq`.
///
/// When `lag >= n` there are no pairs and the result is all zeros.
pub fn count_frequencies(seq: &Sequence, lag: usize) -> Result<FrequencyMatrix, ChainError> {
    if lag < 1 {
        return Err(ChainError::LagNotPositive);
    }
    let m = seq.space.len();
    let mut counts = vec![0u64; m * m];
    let states = &seq.states;
    if states.len() > lag {
        for t in 0..states.len() - lag {
            let from = states[t];
            let to = states[t + lag];
            counts[from * m + to] += 1;
        }
    }
    Ok(FrequencyMatrix { lag, m, counts })
}

/// Column-stochastic lag-`l` transition matrix estimate.
///
/// Every column sums to one, except columns whose from-state produced no
/// observed transitions, which are entirely zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix<T> {
    lag: usize,
    m: usize,
    probs: Vec<T>,
}

impl<T: Scalar> TransitionMatrix<T> {
    /// Build from column-major entries, validating the stochastic-or-zero
    /// column rule.
    pub fn new(lag: usize, m: usize, probs: Vec<T>) -> Result<Self, ChainError> {
        if lag < 1 {
            return Err(ChainError::LagNotPositive);
        }
        if probs.len() != m * m {
            return Err(ChainError::InvalidStateSpace(format!(
                "transition matrix needs {} entries for m={m}, got {}",
                m * m,
                probs.len()
            )));
        }
        let mat = Self { lag, m, probs };
        for j in 0..m {
            let col = mat.column(j);
            // Negated range test so NaN entries are rejected too.
            if col.iter().any(|&p| !(p >= T::zero() && p <= T::one())) {
                return Err(ChainError::InvalidStateSpace(format!(
                    "column {j} has entries outside [0,1]"
                )));
            }
            let sum: T = col.iter().copied().sum();
            let stochastic = (sum - T::one()).abs() <= T::prob_tol();
            let zero = col.iter().all(|&p| p == T::zero());
            if !stochastic && !zero {
                return Err(ChainError::InvalidStateSpace(format!(
                    "column {j} sums to {sum}, expected 1 or all zeros"
                )));
            }
        }
        Ok(mat)
    }

    fn from_raw(lag: usize, m: usize, probs: Vec<T>) -> Self {
        Self { lag, m, probs }
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    /// Probability of moving to `to` after `lag` steps from `from`.
    pub fn prob(&self, to: usize, from: usize) -> T {
        self.probs[from * self.m + to]
    }

    /// Column of probabilities out of `from`.
    pub fn column(&self, from: usize) -> &[T] {
        &self.probs[from * self.m..(from + 1) * self.m]
    }

    /// True when the column for `from` is entirely zero.
    pub fn column_is_zero(&self, from: usize) -> bool {
        self.column(from).iter().all(|&p| p == T::zero())
    }

    /// Column-major entries.
    pub fn entries(&self) -> &[T] {
        &self.probs
    }
}

/// Normalize a frequency matrix into a column-stochastic estimate.
///
/// Columns with a nonzero count sum are divided by that sum; columns with
/// no observations stay entirely zero.
pub fn normalize<T: Scalar>(freq: &FrequencyMatrix) -> TransitionMatrix<T> {
    let m = freq.dim();
    let mut probs = vec![T::zero(); m * m];
    for from in 0..m {
        let sum = freq.column_sum(from);
        if sum == 0 {
            continue;
        }
        let denom = T::from_u64(sum).expect("count fits scalar");
        for to in 0..m {
            let c = T::from_u64(freq.count(to, from)).expect("count fits scalar");
            probs[from * m + to] = c / denom;
        }
    }
    TransitionMatrix::from_raw(freq.lag(), m, probs)
}

/// Probability distribution over the `m` states.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution<T> {
    probs: Vec<T>,
}

impl<T: Scalar> Distribution<T> {
    /// Build from probabilities, validating non-negativity and unit sum.
    pub fn new(probs: Vec<T>) -> Result<Self, ChainError> {
        if probs.is_empty() {
            return Err(ChainError::EmptyInput);
        }
        if probs.iter().any(|&p| !(p >= T::zero() && p <= T::one())) {
            return Err(ChainError::InvalidStateSpace(
                "distribution entries must lie in [0,1]".into(),
            ));
        }
        let sum: T = probs.iter().copied().sum();
        if (sum - T::one()).abs() > T::prob_tol() {
            return Err(ChainError::InvalidStateSpace(format!(
                "distribution sums to {sum}, expected 1"
            )));
        }
        Ok(Self { probs })
    }

    pub(crate) fn from_raw(probs: Vec<T>) -> Self {
        Self { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn prob(&self, state: usize) -> T {
        self.probs[state]
    }
}

/// Per-state occurrence proportions of a sequence.
pub fn empirical_distribution<T: Scalar>(seq: &Sequence) -> Result<Distribution<T>, ChainError> {
    let n = seq.len();
    if n == 0 {
        return Err(ChainError::EmptyInput);
    }
    let m = seq.space.len();
    let mut counts = vec![0u64; m];
    for &s in &seq.states {
        counts[s] += 1;
    }
    let denom = T::from_usize(n).expect("length fits scalar");
    let probs = counts
        .iter()
        .map(|&c| T::from_u64(c).expect("count fits scalar") / denom)
        .collect();
    Ok(Distribution { probs })
}
