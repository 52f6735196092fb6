//! Tournament events and the line-delimited event log.
//!
//! Each line of a log file is one JSON object:
//!
//! ```text
//! {"v":1,"seq":0,"at":1718000000000,"event":{"type":"TournamentCreated",...}}
//! ```
//!
//! `v` is the schema version, `seq` the 0-based position in the log and `at`
//! the wall-clock time in milliseconds. State never depends on `at`.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{GameRef, GameResult, Player, PlayerId, TournamentConfig};
use crate::scheduling::RoundPairing;
use crate::state::GroupStanding;
use crate::Ratio;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormedGroup {
    pub group: u32,
    pub members: Vec<PlayerId>,
    pub mean_elo: Ratio,
}

/// Where a random tie-break was needed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TieContext {
    /// Equal ratings straddling a tier boundary.
    TierBoundary,
    /// Several groups equally close to the tier mean.
    GroupSplit { group: u32 },
    /// Rule (iv) inside a group standing.
    GroupRanking { group: u32 },
    /// Rule (iv) deciding a promotion.
    Promotion,
    /// Rule (iv) deciding the tournament winner.
    Winner,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Event {
    TournamentCreated {
        config: TournamentConfig,
        roster: Vec<Player>,
        /// Base players of each tier.
        tiers: Vec<Vec<PlayerId>>,
    },
    TierStarted {
        tier: u32,
        members: Vec<PlayerId>,
    },
    GroupsFormed {
        tier: u32,
        target_mean: Ratio,
        groups: Vec<FormedGroup>,
    },
    PairingsPublished {
        tier: u32,
        group: u32,
        rounds: Vec<RoundPairing>,
    },
    ResultEntered {
        game: GameRef,
        result: GameResult,
        moves: u32,
    },
    PlayerForfeited {
        tier: u32,
        player: PlayerId,
        reason: String,
        /// Unplayed games scored as losses.
        games: Vec<GameRef>,
    },
    TieResolvedRandomly {
        tier: u32,
        context: TieContext,
        /// The tied players in the order the draw produced.
        players: Vec<PlayerId>,
        /// Number of equally good outcomes the draw chose among.
        alternatives: u64,
    },
    TierCompleted {
        tier: u32,
        standings: Vec<GroupStanding>,
    },
    PromotionsApplied {
        from_tier: u32,
        players: Vec<PlayerId>,
    },
    TournamentCompleted {
        winner: PlayerId,
    },
}

impl Event {
    pub fn name(&self) -> &'static str {
        match self {
            Event::TournamentCreated { .. } => "TournamentCreated",
            Event::TierStarted { .. } => "TierStarted",
            Event::GroupsFormed { .. } => "GroupsFormed",
            Event::PairingsPublished { .. } => "PairingsPublished",
            Event::ResultEntered { .. } => "ResultEntered",
            Event::PlayerForfeited { .. } => "PlayerForfeited",
            Event::TieResolvedRandomly { .. } => "TieResolvedRandomly",
            Event::TierCompleted { .. } => "TierCompleted",
            Event::PromotionsApplied { .. } => "PromotionsApplied",
            Event::TournamentCompleted { .. } => "TournamentCompleted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoggedEvent {
    pub v: u32,
    pub seq: u64,
    pub at: u64,
    pub event: Event,
}

pub trait Clock: Send + Sync {
    /// Milliseconds since the Unix epoch.
    fn now_ms(&self) -> u64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
    }
}

/// Always reports the same instant; used where logs must be reproducible.
#[derive(Debug, Clone, Copy, Default)]
pub struct FixedClock(pub u64);

impl Clock for FixedClock {
    fn now_ms(&self) -> u64 {
        self.0
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("event log io: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {reason}")]
    CorruptLine { line: usize, reason: String },
    #[error("line {line}: schema version {found}, expected {expected}")]
    VersionMismatch { line: usize, found: u32, expected: u32 },
}

pub fn encode_line(e: &LoggedEvent) -> String {
    serde_json::to_string(e).expect("events always serialize")
}

pub fn decode_line(line: &str, line_no: usize) -> Result<LoggedEvent, LogError> {
    #[derive(Deserialize)]
    struct Version {
        v: u32,
    }
    let version: Version = serde_json::from_str(line)
        .map_err(|e| LogError::CorruptLine { line: line_no, reason: e.to_string() })?;
    if version.v != SCHEMA_VERSION {
        return Err(LogError::VersionMismatch { line: line_no, found: version.v, expected: SCHEMA_VERSION });
    }
    serde_json::from_str(line).map_err(|e| LogError::CorruptLine { line: line_no, reason: e.to_string() })
}

pub fn write_events<W: Write>(mut w: W, events: &[LoggedEvent]) -> Result<(), LogError> {
    for e in events {
        w.write_all(encode_line(e).as_bytes())?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads events; blank lines are skipped, line numbers in errors are 1-based.
pub fn read_events<R: BufRead>(r: R) -> Result<Vec<LoggedEvent>, LogError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let e = decode_line(&line, i + 1)?;
        if e.seq != out.len() as u64 {
            return Err(LogError::CorruptLine {
                line: i + 1,
                reason: format!("sequence number {} where {} was expected", e.seq, out.len()),
            });
        }
        out.push(e);
    }
    Ok(out)
}

pub fn write_log(path: &Path, events: &[LoggedEvent]) -> Result<(), LogError> {
    let f = File::create(path)?;
    let mut w = BufWriter::new(f);
    write_events(&mut w, events)?;
    w.get_ref().sync_data()?;
    Ok(())
}

pub fn read_log(path: &Path) -> Result<Vec<LoggedEvent>, LogError> {
    read_events(BufReader::new(File::open(path)?))
}

/// Appends events to a log file and syncs before returning.
pub fn append_log(path: &Path, events: &[LoggedEvent]) -> Result<(), LogError> {
    let f = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = BufWriter::new(f);
    write_events(&mut w, events)?;
    w.get_ref().sync_data()?;
    Ok(())
}
