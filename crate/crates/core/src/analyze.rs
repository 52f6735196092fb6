//! Historical head-to-head data: ingest, crosstables and a replay of the
//! tier mechanism over past games.
//!
//! In a replay each tier member is scored by the mean of their pairwise
//! scores against every other member of the tier, with zero for pairs that
//! never met.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io;

use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{validate_config, ConfigError, GameResult, Player, PlayerId, TournamentConfig};
use crate::scoring::{mean_pairwise_ts, order_contenders, Contender, HeadToHead, PairLookup, ScoringError, TieBreakRule};
use crate::tiering::assign_tiers;
use crate::Ratio;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoricalGame {
    pub white: PlayerId,
    pub black: PlayerId,
    pub result: GameResult,
    pub moves: Option<u32>,
    pub date: Option<String>,
}

impl HeadToHead for HistoricalGame {
    fn white(&self) -> &PlayerId {
        &self.white
    }
    fn black(&self) -> &PlayerId {
        &self.black
    }
    fn result(&self) -> GameResult {
        self.result
    }
    fn moves(&self) -> Option<u32> {
        self.moves
    }
}

fn pair_key(a: &PlayerId, b: &PlayerId) -> (PlayerId, PlayerId) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

/// Games indexed by unordered pair.
#[derive(Debug, Clone, Default)]
pub struct HeadToHeadDb {
    games: Vec<HistoricalGame>,
    by_pair: HashMap<(PlayerId, PlayerId), Vec<usize>>,
}

impl HeadToHeadDb {
    pub fn new(games: Vec<HistoricalGame>) -> Self {
        let mut db = Self::default();
        for g in games {
            db.push(g);
        }
        db
    }

    pub fn push(&mut self, g: HistoricalGame) {
        self.by_pair.entry(pair_key(&g.white, &g.black)).or_default().push(self.games.len());
        self.games.push(g);
    }

    pub fn games(&self) -> &[HistoricalGame] {
        &self.games
    }

    pub fn len(&self) -> usize {
        self.games.len()
    }

    pub fn is_empty(&self) -> bool {
        self.games.is_empty()
    }

    pub fn contains_player(&self, p: &PlayerId) -> bool {
        self.games.iter().any(|g| &g.white == p || &g.black == p)
    }
}

impl PairLookup for HeadToHeadDb {
    type Game = HistoricalGame;

    fn games_between(&self, a: &PlayerId, b: &PlayerId) -> Vec<&HistoricalGame> {
        self.by_pair
            .get(&pair_key(a, b))
            .map(|ix| ix.iter().map(|&i| &self.games[i]).collect())
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum RowError {
    #[error("unknown result token {0:?}")]
    UnknownResultToken(String),
    #[error("{0} plays themself")]
    SelfPlay(PlayerId),
    #[error("missing field {0}")]
    MissingField(String),
    #[error("move count {0:?} is not a positive integer")]
    BadMoveCount(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedRow {
    /// 1-based line in the input, header included.
    pub line: u64,
    pub reason: RowError,
}

#[derive(Debug, Clone)]
pub struct Ingest {
    pub db: HeadToHeadDb,
    pub rejected: Vec<RejectedRow>,
    /// Data rows read, accepted or not.
    pub rows: usize,
}

#[derive(Debug, Error)]
pub enum AnalyzeError {
    #[error("games file header lacks the {0} column (expected white,black,result and optionally moves,date)")]
    MissingHeader(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0} has no games in the data")]
    UnknownPlayer(PlayerId),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error("{0} has no color counts")]
    MissingColorCounts(PlayerId),
    #[error("cutoff {k} must be between 1 and {n}")]
    InvalidCutoff { k: usize, n: usize },
}

const COLUMNS: [&str; 5] = ["white", "black", "result", "moves", "date"];

/// Reads `white,black,result,moves,date` rows. Bad rows are collected in
/// [`Ingest::rejected`]; `moves` and `date` may be empty or absent.
pub fn ingest_games<R: io::Read>(reader: R) -> Result<Ingest, AnalyzeError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut col = [None; 5];
    for (i, name) in COLUMNS.iter().enumerate() {
        col[i] = headers.iter().position(|h| h.eq_ignore_ascii_case(name));
        if i < 3 && col[i].is_none() {
            return Err(AnalyzeError::MissingHeader((*name).to_owned()));
        }
    }
    let mut db = HeadToHeadDb::default();
    let mut rejected = Vec::new();
    let mut rows = 0;
    for record in rdr.records() {
        let record = record?;
        rows += 1;
        let line = record.position().map_or(rows as u64 + 1, |p| p.line());
        match parse_row(&record, &col) {
            Ok(g) => db.push(g),
            Err(reason) => rejected.push(RejectedRow { line, reason }),
        }
    }
    Ok(Ingest { db, rejected, rows })
}

fn parse_row(record: &csv::StringRecord, col: &[Option<usize>; 5]) -> Result<HistoricalGame, RowError> {
    let field = |i: usize| col[i].and_then(|c| record.get(c)).filter(|s| !s.is_empty());
    let required = |i: usize| field(i).ok_or_else(|| RowError::MissingField(COLUMNS[i].to_owned()));
    let white = PlayerId::new(required(0)?);
    let black = PlayerId::new(required(1)?);
    let token = required(2)?;
    let result = token.parse().map_err(|_| RowError::UnknownResultToken(token.to_owned()))?;
    if white == black {
        return Err(RowError::SelfPlay(white));
    }
    let moves = match field(3) {
        None => None,
        Some(m) => match m.parse::<u32>() {
            Ok(n) if n > 0 => Some(n),
            _ => return Err(RowError::BadMoveCount(m.to_owned())),
        },
    };
    Ok(HistoricalGame { white, black, result, moves, date: field(4).map(str::to_owned) })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub wins_a: u32,
    pub wins_b: u32,
    pub draws: u32,
    pub games: u32,
}

impl PairRecord {
    pub fn swapped(self) -> Self {
        Self { wins_a: self.wins_b, wins_b: self.wins_a, ..self }
    }
}

pub fn pair_record(db: &HeadToHeadDb, a: &PlayerId, b: &PlayerId) -> PairRecord {
    let mut r = PairRecord::default();
    for g in db.games_between(a, b) {
        r.games += 1;
        match (g.result, &g.white == a) {
            (GameResult::Draw, _) => r.draws += 1,
            (GameResult::WhiteWin, true) | (GameResult::BlackWin, false) => r.wins_a += 1,
            _ => r.wins_b += 1,
        }
    }
    r
}

/// Records for every pair `(players[i], players[j])` with `i < j`.
pub fn crosstable(db: &HeadToHeadDb, players: &[PlayerId]) -> BTreeMap<(PlayerId, PlayerId), PairRecord> {
    let mut out = BTreeMap::new();
    for (i, a) in players.iter().enumerate() {
        for b in &players[i + 1..] {
            out.insert((a.clone(), b.clone()), pair_record(db, a, b));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoricalRow {
    pub player: PlayerId,
    pub mean_ts: Ratio,
    /// Wins against other tier members.
    pub wins: u32,
    pub separated_by: Option<TieBreakRule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoricalTier {
    pub tier: u32,
    /// Best first.
    pub rows: Vec<HistoricalRow>,
    pub promoted: Vec<PlayerId>,
    /// Games between each pair of members, pairs in member order.
    pub pair_games: Vec<(PlayerId, PlayerId, u32)>,
    /// Mean games over the pairs that met at least once.
    pub mean_games_per_matchup: Option<Ratio>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoricalTierReport {
    pub tiers: Vec<HistoricalTier>,
    pub winner: PlayerId,
}

/// Ranks the members of one tier by mean pairwise score and the cascade.
/// Rule (i) uses the net head-to-head record; rule (iii) applies only when
/// every win of both players has a move count.
pub fn rank_historical_tier<R: Rng + ?Sized>(
    db: &HeadToHeadDb,
    members: &[PlayerId],
    rng: &mut R,
) -> Result<Vec<HistoricalRow>, AnalyzeError> {
    let mut contenders = Vec::with_capacity(members.len());
    for p in members {
        let others: Vec<PlayerId> = members.iter().filter(|o| *o != p).cloned().collect();
        let mean = mean_pairwise_ts::<i64, _>(p, &others, db)?;
        let mut wins = 0;
        let mut moves = Some((0u64, 0u32));
        for o in &others {
            for g in db.games_between(p, o) {
                let won = matches!((g.result, &g.white == p), (GameResult::WhiteWin, true) | (GameResult::BlackWin, false));
                if won {
                    wins += 1;
                    moves = match (moves, g.moves) {
                        (Some((s, c)), Some(m)) => Some((s + u64::from(m), c + 1)),
                        _ => None,
                    };
                }
            }
        }
        contenders.push(Contender { player: p.clone(), key: mean, wins, win_moves: moves });
    }
    let h2h = |a: &PlayerId, b: &PlayerId| {
        let r = pair_record(db, a, b);
        (r.wins_a != r.wins_b).then(|| r.wins_a.cmp(&r.wins_b))
    };
    let ranked = order_contenders(contenders, h2h, rng);
    let wins: HashMap<&PlayerId, u32> = members
        .iter()
        .map(|p| (p, members.iter().filter(|o| *o != p).map(|o| pair_record(db, p, o).wins_a).sum()))
        .collect();
    Ok(ranked
        .entries
        .into_iter()
        .map(|e| HistoricalRow { wins: wins[&e.player], player: e.player, mean_ts: e.key, separated_by: e.separated_by })
        .collect())
}

/// Runs the tier mechanism over historical games instead of new play.
pub fn replay_historical<R: Rng + ?Sized>(
    db: &HeadToHeadDb,
    roster: &[Player],
    config: &TournamentConfig,
    rng: &mut R,
) -> Result<HistoricalTierReport, AnalyzeError> {
    validate_config(config, roster)?;
    if let Some(p) = roster.iter().find(|p| !db.contains_player(&p.id)) {
        return Err(AnalyzeError::UnknownPlayer(p.id.clone()));
    }
    let assignment = assign_tiers(roster, config, rng);
    let elo: HashMap<&PlayerId, u32> = roster.iter().map(|p| (&p.id, p.elo)).collect();
    let mut tiers: Vec<HistoricalTier> = Vec::new();
    for (i, base) in assignment.tiers.iter().enumerate() {
        let mut members = base.clone();
        if let Some(prev) = tiers.last() {
            members.extend(prev.promoted.iter().cloned());
        }
        members.sort_by(|a, b| elo[a].cmp(&elo[b]).then_with(|| a.cmp(b)));
        let rows = rank_historical_tier(db, &members, rng)?;
        let promote = if i + 1 == assignment.tiers.len() { 1 } else { config.tiers[i].promote_count };
        let promoted = rows.iter().take(promote).map(|r| r.player.clone()).collect();

        let mut pair_games = Vec::new();
        for (j, a) in members.iter().enumerate() {
            for b in &members[j + 1..] {
                pair_games.push((a.clone(), b.clone(), db.games_between(a, b).len() as u32));
            }
        }
        let (played, total) = pair_games
            .iter()
            .filter(|(_, _, n)| *n > 0)
            .fold((0i64, 0i64), |(p, t), (_, _, n)| (p + 1, t + i64::from(*n)));
        tiers.push(HistoricalTier {
            tier: i as u32 + 1,
            rows,
            promoted,
            pair_games,
            mean_games_per_matchup: (played > 0).then(|| Ratio::new(total, played)),
        });
    }
    let last = tiers.last_mut().expect("at least one tier");
    let winner = last.promoted.pop().expect("final tier has players");
    Ok(HistoricalTierReport { tiers, winner })
}

impl HistoricalTierReport {
    /// `tier,rank,player,mean_ts`, three decimals.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["tier", "rank", "player", "mean_ts"])?;
        for t in &self.tiers {
            for (i, r) in t.rows.iter().enumerate() {
                w.write_record([t.tier.to_string(), (i + 1).to_string(), r.player.to_string(), decimal(&r.mean_ts, 3)])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// One column per tier, best first. `+` marks promoted players and `*`
    /// the winner.
    pub fn render(&self, names: &HashMap<PlayerId, String>) -> String {
        let label = |p: &PlayerId| names.get(p).cloned().unwrap_or_else(|| p.to_string());
        let cells: Vec<Vec<String>> = self
            .tiers
            .iter()
            .map(|t| {
                t.rows
                    .iter()
                    .map(|r| {
                        let mark = if r.player == self.winner {
                            "*"
                        } else if t.promoted.contains(&r.player) {
                            "+"
                        } else {
                            ""
                        };
                        format!("{}{} {}", label(&r.player), mark, decimal(&r.mean_ts, 3))
                    })
                    .collect()
            })
            .collect();
        let width = cells.iter().flatten().map(String::len).max().unwrap_or(0).max(8) + 2;
        let mut out = String::new();
        for t in &self.tiers {
            let _ = write!(out, "{:<width$}", format!("Tier {}", t.tier));
        }
        out.push('\n');
        let depth = cells.iter().map(Vec::len).max().unwrap_or(0);
        for row in 0..depth {
            for col in &cells {
                let _ = write!(out, "{:<width$}", col.get(row).map(String::as_str).unwrap_or(""));
            }
            out.push('\n');
        }
        for t in &self.tiers {
            if let Some(m) = &t.mean_games_per_matchup {
                let _ = writeln!(out, "Tier {}: {} games per matchup", t.tier, decimal(m, 1));
            }
        }
        let _ = writeln!(out, "Winner: {}", label(&self.winner));
        out.trim_end_matches(' ').to_owned()
    }
}

fn decimal(r: &Ratio, places: usize) -> String {
    format!("{:.*}", places, r.to_f64().unwrap_or(f64::NAN))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorBias {
    /// Share of the top `k` with more White than Black games.
    pub fraction: Ratio,
    pub flagged: Vec<PlayerId>,
}

/// How many of the top `k` finishers had an extra White game.
pub fn color_bias_report(
    standings: &[PlayerId],
    color_counts: &BTreeMap<PlayerId, (u32, u32)>,
    k: usize,
) -> Result<ColorBias, AnalyzeError> {
    if k == 0 || k > standings.len() {
        return Err(AnalyzeError::InvalidCutoff { k, n: standings.len() });
    }
    let mut flagged = Vec::new();
    for p in &standings[..k] {
        let (w, b) = color_counts.get(p).ok_or_else(|| AnalyzeError::MissingColorCounts(p.clone()))?;
        if w > b {
            flagged.push(p.clone());
        }
    }
    Ok(ColorBias { fraction: Ratio::new(flagged.len() as i64, k as i64), flagged })
}

/// `(white, black)` game counts per player.
pub fn color_counts<'a, G: HeadToHead + 'a>(games: impl IntoIterator<Item = &'a G>) -> BTreeMap<PlayerId, (u32, u32)> {
    let mut out: BTreeMap<PlayerId, (u32, u32)> = BTreeMap::new();
    for g in games {
        out.entry(g.white().clone()).or_default().0 += 1;
        out.entry(g.black().clone()).or_default().1 += 1;
    }
    out
}

/// Pairwise score of the first player of a record.
pub fn pair_ts(r: &PairRecord) -> Ratio {
    if r.games == 0 {
        return Ratio::zero();
    }
    Ratio::new(i64::from(r.wins_a) - i64::from(r.wins_b), i64::from(r.games))
}
