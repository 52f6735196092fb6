//! Single round-robin schedules with fair colors, and schedule validation.
//!
//! Pairings come from the circle method: with `m = n - 1` seats on a circle
//! and one fixed seat, round `r` pairs the fixed seat with seat `r` and seat
//! `r + i` with seat `r - i` (mod `m`). The fixed seat alternates colors by
//! round, and the seat `r + i` takes White exactly when `i` is odd. For even
//! `n` this gives `n - 2` breaks in total, at most one per player, a color
//! difference of one for everyone, and no three equal colors in a row. For
//! odd `n` the fixed seat is empty and its opponent has the bye; every player
//! then has equal colors and no breaks.

use std::collections::{BTreeMap, BTreeSet};
use std::io;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Color, PlayerId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchedulingError {
    #[error("a round robin needs at least 2 players, got {0}")]
    GroupTooSmall(usize),
    #[error("duplicate player {0} in group")]
    DuplicatePlayer(PlayerId),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Board {
    pub white: PlayerId,
    pub black: PlayerId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundPairing {
    /// 1-based.
    pub round: u32,
    pub boards: Vec<Board>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bye: Option<PlayerId>,
}

/// Complete single round robin for `group`, seat order shuffled by `rng`.
pub fn round_robin<R: Rng + ?Sized>(group: &[PlayerId], rng: &mut R) -> Result<Vec<RoundPairing>, SchedulingError> {
    if group.len() < 2 {
        return Err(SchedulingError::GroupTooSmall(group.len()));
    }
    let mut seen = BTreeSet::new();
    for p in group {
        if !seen.insert(p) {
            return Err(SchedulingError::DuplicatePlayer(p.clone()));
        }
    }
    let mut seats: Vec<Option<PlayerId>> = group.iter().cloned().map(Some).collect();
    seats.shuffle(rng);
    if seats.len() % 2 == 1 {
        seats.push(None);
    }
    Ok(circle_schedule(&seats))
}

/// Circle-method schedule over `seats` (even length); `None` is a phantom
/// seat whose opponent has the bye. The last seat is the fixed one.
fn circle_schedule(seats: &[Option<PlayerId>]) -> Vec<RoundPairing> {
    let n = seats.len();
    let m = n - 1;
    let fixed = n - 1;
    let mut rounds = Vec::with_capacity(m);
    for r in 0..m {
        let mut games: Vec<(usize, usize)> = Vec::with_capacity(n / 2);
        games.push(if r % 2 == 0 { (r, fixed) } else { (fixed, r) });
        for i in 1..n / 2 {
            let a = (r + i) % m;
            let b = (r + m - i) % m;
            games.push(if i % 2 == 1 { (a, b) } else { (b, a) });
        }
        let mut boards = Vec::with_capacity(games.len());
        let mut bye = None;
        for (w, b) in games {
            match (&seats[w], &seats[b]) {
                (Some(w), Some(b)) => boards.push(Board { white: w.clone(), black: b.clone() }),
                (Some(p), None) | (None, Some(p)) => bye = Some(p.clone()),
                (None, None) => unreachable!("one phantom seat at most"),
            }
        }
        rounds.push(RoundPairing { round: r as u32 + 1, boards, bye });
    }
    rounds
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerColors {
    pub white: u32,
    pub black: u32,
    pub byes: u32,
    /// `white - black`.
    pub color_diff: i32,
    pub max_same_color_run: u32,
    pub breaks: u32,
    /// Colors by round, byes omitted.
    pub sequence: Vec<Color>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    RepeatedPairing { a: PlayerId, b: PlayerId, rounds: Vec<u32> },
    /// `|white - black|` above 1; `exceeds_fide` when it is also above 2.
    ColorImbalance { player: PlayerId, diff: i32, exceeds_fide: bool },
    SameColorRun { player: PlayerId, color: Color, length: u32 },
    DoubleBooked { player: PlayerId, round: u32 },
    SelfPairing { player: PlayerId, round: u32 },
    ByeMismatch { round: u32 },
    MissingPairing { a: PlayerId, b: PlayerId },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::RepeatedPairing { a, b, rounds } => write!(f, "pair meets twice: {a} and {b} in rounds {rounds:?}"),
            Violation::ColorImbalance { player, diff, exceeds_fide } => {
                write!(f, "color difference {diff} for {player}")?;
                if *exceeds_fide {
                    write!(f, " (also above the FIDE limit of 2)")?;
                }
                Ok(())
            }
            Violation::SameColorRun { player, color, length } => {
                write!(f, "same-color run >= 3: {player} has {length} {color:?} games in a row")
            }
            Violation::DoubleBooked { player, round } => write!(f, "{player} is booked twice in round {round}"),
            Violation::SelfPairing { player, round } => write!(f, "{player} is paired with themself in round {round}"),
            Violation::ByeMismatch { round } => write!(f, "round {round} bye does not match group parity"),
            Violation::MissingPairing { a, b } => write!(f, "{a} and {b} never meet"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleReport {
    pub per_player: BTreeMap<PlayerId, PlayerColors>,
    pub total_breaks: u32,
    pub violations: Vec<Violation>,
}

impl ScheduleReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    /// Whether every player is within FIDE's color-difference limit of 2.
    pub fn fide_color_compliant(&self) -> bool {
        self.per_player.values().all(|c| c.color_diff.abs() <= 2)
    }
}

/// Full fairness audit of a schedule. Violations are reported, never raised.
pub fn validate_schedule(schedule: &[RoundPairing]) -> ScheduleReport {
    let mut per_player: BTreeMap<PlayerId, PlayerColors> = BTreeMap::new();
    let mut meetings: BTreeMap<(PlayerId, PlayerId), Vec<u32>> = BTreeMap::new();
    let mut violations = Vec::new();

    let mut players: BTreeSet<&PlayerId> = BTreeSet::new();
    for r in schedule {
        for b in &r.boards {
            players.insert(&b.white);
            players.insert(&b.black);
        }
        if let Some(p) = &r.bye {
            players.insert(p);
        }
    }
    let odd = players.len() % 2 == 1;
    for p in &players {
        per_player.insert((*p).clone(), PlayerColors::default());
    }

    let mut rounds: Vec<&RoundPairing> = schedule.iter().collect();
    rounds.sort_by_key(|r| r.round);
    for r in rounds {
        let mut booked = BTreeSet::new();
        let mut book = |p: &PlayerId, violations: &mut Vec<Violation>| {
            if !booked.insert(p.clone()) {
                violations.push(Violation::DoubleBooked { player: p.clone(), round: r.round });
            }
        };
        for b in &r.boards {
            if b.white == b.black {
                violations.push(Violation::SelfPairing { player: b.white.clone(), round: r.round });
                continue;
            }
            book(&b.white, &mut violations);
            book(&b.black, &mut violations);
            let key = if b.white < b.black { (b.white.clone(), b.black.clone()) } else { (b.black.clone(), b.white.clone()) };
            meetings.entry(key).or_default().push(r.round);
            let w = per_player.get_mut(&b.white).expect("known");
            w.white += 1;
            w.sequence.push(Color::White);
            let k = per_player.get_mut(&b.black).expect("known");
            k.black += 1;
            k.sequence.push(Color::Black);
        }
        if let Some(p) = &r.bye {
            book(p, &mut violations);
            per_player.get_mut(p).expect("known").byes += 1;
        }
        if r.bye.is_some() != odd {
            violations.push(Violation::ByeMismatch { round: r.round });
        }
    }

    for ((a, b), rounds) in &meetings {
        if rounds.len() > 1 {
            violations.push(Violation::RepeatedPairing { a: a.clone(), b: b.clone(), rounds: rounds.clone() });
        }
    }
    let ids: Vec<&PlayerId> = players.iter().copied().collect();
    for i in 0..ids.len() {
        for j in i + 1..ids.len() {
            if !meetings.contains_key(&(ids[i].clone(), ids[j].clone())) {
                violations.push(Violation::MissingPairing { a: ids[i].clone(), b: ids[j].clone() });
            }
        }
    }

    let mut total_breaks = 0;
    for (p, c) in per_player.iter_mut() {
        c.color_diff = c.white as i32 - c.black as i32;
        let mut run = 0u32;
        let mut prev = None;
        for &col in &c.sequence {
            if prev == Some(col) {
                run += 1;
                c.breaks += 1;
            } else {
                run = 1;
            }
            c.max_same_color_run = c.max_same_color_run.max(run);
            prev = Some(col);
        }
        total_breaks += c.breaks;
        if c.color_diff.abs() > 1 {
            violations.push(Violation::ColorImbalance { player: p.clone(), diff: c.color_diff, exceeds_fide: c.color_diff.abs() > 2 });
        }
        if c.max_same_color_run >= 3 {
            let color = longest_run_color(&c.sequence);
            violations.push(Violation::SameColorRun { player: p.clone(), color, length: c.max_same_color_run });
        }
    }

    ScheduleReport { per_player, total_breaks, violations }
}

fn longest_run_color(seq: &[Color]) -> Color {
    let mut best = (0, Color::White);
    let mut run = 0;
    for (i, &c) in seq.iter().enumerate() {
        run = if i > 0 && seq[i - 1] == c { run + 1 } else { 1 };
        if run > best.0 {
            best = (run, c);
        }
    }
    best.1
}

/// Pairing-sheet CSV with header `round,white,black,bye`.
pub fn write_schedule_csv<W: io::Write>(writer: W, schedule: &[RoundPairing]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["round", "white", "black", "bye"])?;
    for r in schedule {
        let round = r.round.to_string();
        for b in &r.boards {
            w.write_record([round.as_str(), b.white.as_str(), b.black.as_str(), ""])?;
        }
        if let Some(p) = &r.bye {
            w.write_record([round.as_str(), "", "", p.as_str()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a pairing sheet written by [`write_schedule_csv`].
pub fn read_schedule_csv<R: io::Read>(reader: R) -> csv::Result<Vec<RoundPairing>> {
    #[derive(Deserialize)]
    struct Row {
        round: u32,
        white: String,
        black: String,
        bye: String,
    }
    let mut rounds: BTreeMap<u32, RoundPairing> = BTreeMap::new();
    for row in csv::Reader::from_reader(reader).deserialize() {
        let row: Row = row?;
        let r = rounds.entry(row.round).or_insert_with(|| RoundPairing { round: row.round, boards: Vec::new(), bye: None });
        if row.bye.is_empty() {
            r.boards.push(Board { white: PlayerId(row.white), black: PlayerId(row.black) });
        } else {
            r.bye = Some(PlayerId(row.bye));
        }
    }
    Ok(rounds.into_values().collect())
}
