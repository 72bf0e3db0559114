//! Game-ledger CSV ingestion.
//!
//! A ledger holds one row per game with the fixed header
//! `date,team,opponent,result`: ISO-8601 date, team name, opponent name,
//! and a result label from the state space (for win/draw/loss data: `W`,
//! `D`, or `L`). Ingestion filters one team, sorts its rows by date, and
//! keeps the most recent games.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use thiserror::Error;

use crate::chain::{Sequence, StateSpace};

const LEDGER_HEADER: [&str; 4] = ["date", "team", "opponent", "result"];

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("cannot read ledger: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("ledger header must be `date,team,opponent,result`, got {0:?}")]
    Header(String),

    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },

    #[error("team {0:?} not present in ledger")]
    UnknownTeam(String),
}

/// One game row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LedgerRecord {
    pub date: NaiveDate,
    pub team: String,
    pub opponent: String,
    pub result: String,
}

/// Read and validate every row of a ledger. Result labels are checked
/// against `space`; dates must parse as `YYYY-MM-DD`; a team plays at
/// most one game per date, so each team's games are strictly date-ordered
/// after sorting.
pub fn read_ledger<R: Read>(reader: R, space: &StateSpace) -> Result<Vec<LedgerRecord>, LedgerError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr.headers()?.clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != LEDGER_HEADER {
        return Err(LedgerError::Header(got.join(",")));
    }

    let mut seen = std::collections::HashSet::new();
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 4 {
            return Err(LedgerError::MalformedRow {
                line,
                reason: format!("expected 4 fields, got {}", row.len()),
            });
        }
        let date = NaiveDate::parse_from_str(&row[0], "%Y-%m-%d").map_err(|e| {
            LedgerError::MalformedRow {
                line,
                reason: format!("invalid date {:?}: {e}", &row[0]),
            }
        })?;
        let team = row[1].to_string();
        if team.is_empty() {
            return Err(LedgerError::MalformedRow {
                line,
                reason: "empty team name".into(),
            });
        }
        let result = row[3].to_string();
        if space.index_of(&result).is_none() {
            return Err(LedgerError::MalformedRow {
                line,
                reason: format!(
                    "result {result:?} is not one of the states {:?}",
                    space.labels()
                ),
            });
        }
        if !seen.insert((team.clone(), date)) {
            return Err(LedgerError::MalformedRow {
                line,
                reason: format!("duplicate game on {date} for team {team:?}"),
            });
        }
        records.push(LedgerRecord {
            date,
            team,
            opponent: row[2].to_string(),
            result,
        });
    }
    Ok(records)
}

/// Distinct team names, sorted.
pub fn teams(records: &[LedgerRecord]) -> Vec<String> {
    let mut names: Vec<String> = records.iter().map(|r| r.team.clone()).collect();
    names.sort();
    names.dedup();
    names
}

/// Number of games recorded for `team`.
pub fn team_game_count(records: &[LedgerRecord], team: &str) -> usize {
    records.iter().filter(|r| r.team == team).count()
}

/// Date-ordered result sequence for one team, truncated to the most
/// recent `last` games (all games when fewer are available).
pub fn team_sequence(
    records: &[LedgerRecord],
    team: &str,
    last: usize,
    space: &StateSpace,
) -> Result<Sequence, LedgerError> {
    let mut rows: Vec<&LedgerRecord> = records.iter().filter(|r| r.team == team).collect();
    if rows.is_empty() {
        return Err(LedgerError::UnknownTeam(team.to_string()));
    }
    rows.sort_by_key(|r| r.date);
    let labels = rows.iter().map(|r| r.result.as_str());
    let seq = Sequence::from_labels(space.clone(), labels).expect("results validated on read");
    Ok(seq.last_n(last))
}

/// Convenience wrapper: read a ledger file and extract one team's recent
/// games.
pub fn ingest_ledger<P: AsRef<Path>>(
    path: P,
    team: &str,
    last: usize,
    space: &StateSpace,
) -> Result<Sequence, LedgerError> {
    let records = read_ledger(File::open(path)?, space)?;
    team_sequence(&records, team, last, space)
}
