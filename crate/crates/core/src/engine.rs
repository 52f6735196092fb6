//! Commands that run a tournament from creation to a winner.
//!
//! Every command checks its preconditions against the current state, derives
//! the events it implies, applies them to a copy of the state and only then
//! commits them to the log. A failed command leaves the tournament untouched.
//!
//! Randomness comes from named streams of the configured seed:
//! `tiers`, `split/t{n}`, `seats/t{n}/g{m}`, `rank/t{n}/g{m}` and
//! `promote/t{n}`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::{Clock, Event, FormedGroup, LoggedEvent, TieContext, SCHEMA_VERSION};
use crate::model::{validate_config, ConfigError, GameRef, GameResult, Player, PlayerId, TieBreakMode, TournamentConfig};
use crate::rng::stream;
use crate::scheduling::{round_robin, SchedulingError};
use crate::scoring::{
    compare_by_record, order_contenders, rank_group, score_lines, Contender, RankedStanding, ScoreLine, ScoringError,
    TieBreakRule,
};
use crate::state::{replay, GroupStanding, Phase, StandingRow, StateError, TournamentState};
use crate::tiering::{assign_tiers, split_tier, TieringError};
use crate::TierScore;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    IllegalTransition(String),
    #[error("unknown game {0}")]
    UnknownGame(GameRef),
    #[error("result for {0} was already reported")]
    AlreadyReported(GameRef),
    #[error("tier {tier} is closed; {0} can no longer change", tier = .0.tier)]
    TierClosed(GameRef),
    #[error("move count must be at least 1")]
    InvalidMoveCount,
    #[error("{} games have no result: {}", missing.len(), join(missing))]
    IncompleteResults { missing: Vec<GameRef> },
    #[error("a random tie-break between {} needs the director's confirmation", join(tied))]
    PendingDecision { context: TieContext, tied: Vec<PlayerId> },
    #[error("unknown player {0}")]
    UnknownPlayer(PlayerId),
    #[error("player {0} is not active in the current tier")]
    NotActive(PlayerId),
    #[error("no tier is in progress")]
    NoActiveTier,
    #[error(transparent)]
    Tiering(#[from] TieringError),
    #[error(transparent)]
    Scheduling(#[from] SchedulingError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

impl From<StateError> for EngineError {
    fn from(e: StateError) -> Self {
        match e {
            StateError::IllegalTransition(m) => EngineError::IllegalTransition(m),
        }
    }
}

impl EngineError {
    /// Stable machine-readable name.
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::Config(c) => match c {
                ConfigError::SizeMismatch { .. } => "SizeMismatch",
                ConfigError::DegenerateTier { .. } => "DegenerateTier",
                ConfigError::DuplicatePlayer(_) => "DuplicatePlayer",
                ConfigError::IndivisibleTier { .. } => "IndivisibleTier",
                _ => "InvalidConfig",
            },
            EngineError::IllegalTransition(_) => "IllegalTransition",
            EngineError::UnknownGame(_) => "UnknownGame",
            EngineError::AlreadyReported(_) => "AlreadyReported",
            EngineError::TierClosed(_) => "TierClosed",
            EngineError::InvalidMoveCount => "InvalidMoveCount",
            EngineError::IncompleteResults { .. } => "IncompleteResults",
            EngineError::PendingDecision { .. } => "PendingRandomTieBreak",
            EngineError::UnknownPlayer(_) => "UnknownPlayer",
            EngineError::NotActive(_) => "NotActive",
            EngineError::NoActiveTier => "NoActiveTier",
            EngineError::Tiering(_) => "TieringError",
            EngineError::Scheduling(_) => "SchedulingError",
            EngineError::Scoring(_) => "ScoringError",
        }
    }
}

/// Events derived so far by one command, with the state they lead to.
struct Batch {
    state: TournamentState,
    events: Vec<Event>,
}

impl Batch {
    fn new(state: &TournamentState) -> Self {
        Self { state: state.clone(), events: Vec::new() }
    }

    fn push(&mut self, e: Event) -> Result<(), EngineError> {
        self.state.apply_mut(&e)?;
        self.events.push(e);
        Ok(())
    }
}

fn factorial_capped(n: usize) -> u64 {
    (1..=n as u64).try_fold(1u64, |acc, k| acc.checked_mul(k)).unwrap_or(u64::MAX)
}

/// Starts `tier`: members, groups, and published pairings.
fn start_tier(batch: &mut Batch, tier: u32) -> Result<(), EngineError> {
    let seed = batch.state.config().seed;
    let mut members: Vec<Player> = batch.state.base_tiers[tier as usize - 1]
        .iter()
        .chain(if tier > 1 { batch.state.tier(tier - 1).expect("previous").promoted.iter() } else { [].iter() })
        .map(|id| batch.state.player(id).expect("roster").clone())
        .collect();
    members.sort_by(|a, b| a.elo.cmp(&b.elo).then_with(|| a.id.cmp(&b.id)));
    batch.push(Event::TierStarted { tier, members: members.iter().map(|p| p.id.clone()).collect() })?;

    let group_size = batch.state.config().tiers[tier as usize - 1].max_group_size;
    let split = split_tier(&members, group_size, &mut stream(seed, &format!("split/t{tier}")))?;
    for (i, &alternatives) in split.co_minimizers.iter().enumerate() {
        if alternatives > 1 {
            batch.push(Event::TieResolvedRandomly {
                tier,
                context: TieContext::GroupSplit { group: i as u32 + 1 },
                players: split.groups[i].members.clone(),
                alternatives: u64::try_from(alternatives).unwrap_or(u64::MAX),
            })?;
        }
    }
    let groups: Vec<FormedGroup> = split
        .groups
        .iter()
        .enumerate()
        .map(|(i, g)| FormedGroup { group: i as u32 + 1, members: g.members.clone(), mean_elo: g.mean_elo })
        .collect();
    batch.push(Event::GroupsFormed { tier, target_mean: split.target_mean, groups: groups.clone() })?;
    for g in groups {
        let rounds = round_robin(&g.members, &mut stream(seed, &format!("seats/t{tier}/g{}", g.group)))?;
        batch.push(Event::PairingsPublished { tier, group: g.group, rounds })?;
    }
    Ok(())
}

/// What `complete_tier` decided.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TierOutcome {
    pub tier: u32,
    pub standings: Vec<GroupStanding>,
    pub promoted: Vec<PlayerId>,
    pub winner: Option<PlayerId>,
    /// Random tie-breaks that decided who moved up or won.
    pub decisive_random_ties: Vec<Vec<PlayerId>>,
}

/// Players chosen to move up (or to win), best first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub chosen: Vec<PlayerId>,
    /// Each pick decided against the next-best candidate by rule (iv).
    pub random_picks: Vec<Vec<PlayerId>>,
}

/// Picks `count` players across group standings.
///
/// Each group contributes at most `ceil(count / groups)` players, always in
/// its own standing order. Candidates from different groups are compared by
/// Tier Score, then rules (ii)-(iv); rule (i) cannot apply across groups.
pub fn select_across_groups<R: rand::Rng + ?Sized>(
    groups: &[RankedStanding<TierScore>],
    lines: &BTreeMap<PlayerId, ScoreLine>,
    count: usize,
    rng: &mut R,
) -> Selection {
    let cap = count.div_ceil(groups.len().max(1));
    let mut all: Vec<&PlayerId> = groups.iter().flat_map(|g| g.players()).collect();
    all.sort();
    all.shuffle(rng);
    let lot: BTreeMap<&PlayerId, usize> = all.iter().enumerate().map(|(i, p)| (*p, i)).collect();

    let contender = |p: &PlayerId, key: TierScore| {
        let l = &lines[p];
        Contender { player: p.clone(), key, wins: l.wins, win_moves: Some(l.win_moves()) }
    };
    // Greater = a ranks above b
    let cmp = |a: &Contender<TierScore>, b: &Contender<TierScore>| -> (Ordering, TieBreakRule) {
        if a.key != b.key {
            return (a.key.cmp(&b.key), TieBreakRule::Score);
        }
        compare_by_record(a, b).unwrap_or_else(|| (lot[&b.player].cmp(&lot[&a.player]), TieBreakRule::Random))
    };

    let mut taken = vec![0usize; groups.len()];
    let mut chosen = Vec::with_capacity(count);
    let mut random_picks = Vec::new();
    for _ in 0..count {
        let mut heads: Vec<(usize, Contender<TierScore>)> = groups
            .iter()
            .enumerate()
            .filter(|(gi, g)| taken[*gi] < cap && taken[*gi] < g.entries.len())
            .map(|(gi, g)| {
                let e = &g.entries[taken[gi]];
                (gi, contender(&e.player, e.key))
            })
            .collect();
        if heads.is_empty() {
            break;
        }
        heads.sort_by(|a, b| cmp(&b.1, &a.1).0);
        if heads.len() > 1 && cmp(&heads[0].1, &heads[1].1).1 == TieBreakRule::Random {
            random_picks.push(vec![heads[0].1.player.clone(), heads[1].1.player.clone()]);
        }
        let (gi, best) = heads.swap_remove(0);
        taken[gi] += 1;
        chosen.push(best.player);
    }
    Selection { chosen, random_picks }
}

fn standing_rows(standing: &RankedStanding<TierScore>, lines: &BTreeMap<PlayerId, ScoreLine>) -> Vec<StandingRow> {
    standing
        .entries
        .iter()
        .map(|e| {
            let l = &lines[&e.player];
            let (ts_num, ts_den) = l
                .tier_score::<i64>()
                .map(|s| (s.numerator(), s.denominator()))
                .unwrap_or((0, 0));
            StandingRow {
                player: e.player.clone(),
                wins: l.wins,
                losses: l.losses,
                draws: l.draws,
                ts_num,
                ts_den,
                separated_by: e.separated_by,
            }
        })
        .collect()
}

/// Current standings of every group in `tier`. Final once the tier is
/// complete; otherwise computed from the results entered so far.
pub fn standings(state: &TournamentState, tier: u32) -> Vec<GroupStanding> {
    let Some(t) = state.tier(tier) else { return Vec::new() };
    if t.completed {
        return t.standings.clone();
    }
    let seed = state.config().seed;
    t.groups
        .iter()
        .map(|g| {
            let records = g.records();
            let lines: BTreeMap<PlayerId, ScoreLine> =
                score_lines(&g.members, &records).into_iter().map(|l| (l.player.clone(), l)).collect();
            let contenders = lines
                .values()
                .map(|l| Contender {
                    player: l.player.clone(),
                    key: l.provisional_value::<i64>(),
                    wins: l.wins,
                    win_moves: Some(l.win_moves()),
                })
                .collect();
            let h2h = crate::scoring::head_to_head_table(&records);
            let ranked = order_contenders(
                contenders,
                |a, b| crate::scoring::h2h_lookup(&h2h, a, b),
                &mut stream(seed, &format!("rank/t{tier}/g{}", g.group)),
            );
            let rows = ranked
                .entries
                .iter()
                .map(|e| {
                    let l = &lines[&e.player];
                    StandingRow {
                        player: e.player.clone(),
                        wins: l.wins,
                        losses: l.losses,
                        draws: l.draws,
                        ts_num: i64::from(l.wins) - i64::from(l.losses),
                        ts_den: i64::from(l.games()),
                        separated_by: e.separated_by,
                    }
                })
                .collect();
            GroupStanding { group: g.group, rows }
        })
        .collect()
}

/// Standings CSV: `rank,player,ts_num,ts_den,wins,losses,draws,tiebreak_rule`.
pub fn write_standings_csv<W: io::Write>(writer: W, standing: &GroupStanding) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["rank", "player", "ts_num", "ts_den", "wins", "losses", "draws", "tiebreak_rule"])?;
    for (i, r) in standing.rows.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            r.player.to_string(),
            r.ts_num.to_string(),
            r.ts_den.to_string(),
            r.wins.to_string(),
            r.losses.to_string(),
            r.draws.to_string(),
            r.separated_by.unwrap_or(TieBreakRule::Score).label().to_owned(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// A running tournament: current state plus the log that produced it.
#[derive(Clone)]
pub struct Tournament {
    state: TournamentState,
    log: Vec<LoggedEvent>,
    clock: Arc<dyn Clock>,
}

impl fmt::Debug for Tournament {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tournament").field("state", &self.state).field("events", &self.log.len()).finish()
    }
}

impl Tournament {
    /// Validates the configuration, seeds the tiers and opens tier 1.
    pub fn create(config: TournamentConfig, roster: Vec<Player>, clock: Arc<dyn Clock>) -> Result<Self, EngineError> {
        validate_config(&config, &roster)?;
        let assignment = assign_tiers(&roster, &config, &mut stream(config.seed, "tiers"));
        let empty = TournamentState::default();
        let mut batch = Batch::new(&empty);
        batch.push(Event::TournamentCreated { config, roster, tiers: assignment.tiers })?;
        for tied in assignment.boundary_ties {
            let n = tied.len();
            batch.push(Event::TieResolvedRandomly {
                tier: 0,
                context: TieContext::TierBoundary,
                players: tied,
                alternatives: factorial_capped(n),
            })?;
        }
        start_tier(&mut batch, 1)?;
        let mut t = Tournament { state: empty, log: Vec::new(), clock };
        t.commit(batch);
        Ok(t)
    }

    /// Rebuilds a tournament from its log.
    pub fn from_log(log: Vec<LoggedEvent>, clock: Arc<dyn Clock>) -> Result<Self, EngineError> {
        let state = replay(&log)?;
        Ok(Tournament { state, log, clock })
    }

    pub fn state(&self) -> &TournamentState {
        &self.state
    }

    pub fn log(&self) -> &[LoggedEvent] {
        &self.log
    }

    /// Events with `seq >= since`.
    pub fn events_since(&self, since: u64) -> &[LoggedEvent] {
        let start = (since as usize).min(self.log.len());
        &self.log[start..]
    }

    pub fn winner(&self) -> Option<&PlayerId> {
        self.state.winner.as_ref()
    }

    fn commit(&mut self, batch: Batch) -> &[LoggedEvent] {
        let start = self.log.len();
        let at = self.clock.now_ms();
        for (i, event) in batch.events.into_iter().enumerate() {
            self.log.push(LoggedEvent { v: SCHEMA_VERSION, seq: (start + i) as u64, at, event });
        }
        self.state = batch.state;
        &self.log[start..]
    }

    /// Applies one event in place; `apply_mut` validates before it mutates.
    fn commit_one(&mut self, event: Event) -> Result<&[LoggedEvent], EngineError> {
        self.state.apply_mut(&event)?;
        let seq = self.log.len() as u64;
        self.log.push(LoggedEvent { v: SCHEMA_VERSION, seq, at: self.clock.now_ms(), event });
        Ok(&self.log[seq as usize..])
    }

    fn open_game(&self, game: &GameRef) -> Result<(), EngineError> {
        let Some(tier) = self.state.tier(game.tier) else {
            return Err(EngineError::UnknownGame(*game));
        };
        let group = tier.group(game.group).ok_or(EngineError::UnknownGame(*game))?;
        group.board(game).ok_or(EngineError::UnknownGame(*game))?;
        if tier.completed {
            return Err(EngineError::TierClosed(*game));
        }
        if group.results.contains_key(game) {
            return Err(EngineError::AlreadyReported(*game));
        }
        Ok(())
    }

    /// Records the result of a published game in the active tier.
    pub fn enter_result(&mut self, game: GameRef, result: GameResult, moves: u32) -> Result<&[LoggedEvent], EngineError> {
        self.open_game(&game)?;
        if moves == 0 {
            return Err(EngineError::InvalidMoveCount);
        }
        self.commit_one(Event::ResultEntered { game, result, moves })
    }

    /// Withdraws `player` from the active tier; every game they have not
    /// played yet is scored as a loss for them.
    pub fn forfeit(&mut self, player: &PlayerId, reason: &str) -> Result<&[LoggedEvent], EngineError> {
        if self.state.player(player).is_none() {
            return Err(EngineError::UnknownPlayer(player.clone()));
        }
        let tier = self.state.active_tier().ok_or_else(|| EngineError::NotActive(player.clone()))?;
        let group = tier.group_of(player).ok_or_else(|| EngineError::NotActive(player.clone()))?;
        if group.forfeited.contains(player) {
            return Err(EngineError::NotActive(player.clone()));
        }
        let games: Vec<GameRef> = group
            .scheduled(tier.tier)
            .into_iter()
            .filter(|(g, b)| (&b.white == player || &b.black == player) && !group.results.contains_key(g))
            .map(|(g, _)| g)
            .collect();
        let event = Event::PlayerForfeited { tier: tier.tier, player: player.clone(), reason: reason.to_owned(), games };
        self.commit_one(event)
    }

    /// Scores the active tier, promotes its winners and opens the next tier,
    /// or declares the tournament winner after the final tier.
    ///
    /// In interactive mode a random tie-break that decides a promotion or the
    /// winner fails with [`EngineError::PendingDecision`] unless
    /// `confirm_random` is set. The draw itself is seeded, so confirming
    /// yields the outcome the engine would have chosen.
    pub fn complete_tier(&mut self, confirm_random: bool) -> Result<TierOutcome, EngineError> {
        let (outcome, batch) = self.plan_completion(confirm_random)?;
        self.commit(batch);
        Ok(outcome)
    }

    fn plan_completion(&self, confirm_random: bool) -> Result<(TierOutcome, Batch), EngineError> {
        let state = &self.state;
        let tier_run = state.active_tier().ok_or(EngineError::NoActiveTier)?;
        let tier = tier_run.tier;
        let missing = tier_run.pending();
        if !missing.is_empty() {
            return Err(EngineError::IncompleteResults { missing });
        }
        let config = state.config();
        let seed = config.seed;
        let is_final = tier as usize == config.tiers.len();
        let count = if is_final { 1 } else { config.tiers[tier as usize - 1].promote_count };
        let boundary_context = if is_final { TieContext::Winner } else { TieContext::Promotion };

        let mut ranked = Vec::new();
        let mut lines = BTreeMap::new();
        let mut group_standings = Vec::new();
        for g in &tier_run.groups {
            let records = g.records();
            let group_lines = score_lines(&g.members, &records);
            let standing = rank_group::<i64, _>(&group_lines, &records, &mut stream(seed, &format!("rank/t{tier}/g{}", g.group)))?;
            lines.extend(group_lines.into_iter().map(|l| (l.player.clone(), l)));
            group_standings.push(GroupStanding { group: g.group, rows: standing_rows(&standing, &lines) });
            ranked.push(standing);
        }

        let selection = select_across_groups(&ranked, &lines, count, &mut stream(seed, &format!("promote/t{tier}")));

        // random draws that decided who is in and who is out
        let mut decisive: Vec<Vec<PlayerId>> = selection.random_picks.clone();
        for standing in &ranked {
            let taken = standing.players().filter(|p| selection.chosen.contains(p)).count();
            if taken > 0 && standing.random_at_boundary(taken) {
                let run = standing
                    .random_ties
                    .iter()
                    .find(|run| run.contains(&standing.entries[taken].player) && run.contains(&standing.entries[taken - 1].player))
                    .cloned()
                    .unwrap_or_default();
                decisive.push(run);
            }
        }
        if config.tie_break_mode == TieBreakMode::Interactive && !confirm_random {
            if let Some(tied) = decisive.first() {
                return Err(EngineError::PendingDecision { context: boundary_context, tied: tied.clone() });
            }
        }

        let mut batch = Batch::new(state);
        for (g, standing) in tier_run.groups.iter().zip(&ranked) {
            for run in &standing.random_ties {
                batch.push(Event::TieResolvedRandomly {
                    tier,
                    context: TieContext::GroupRanking { group: g.group },
                    players: run.clone(),
                    alternatives: factorial_capped(run.len()),
                })?;
            }
        }
        for pick in &selection.random_picks {
            batch.push(Event::TieResolvedRandomly {
                tier,
                context: boundary_context.clone(),
                players: pick.clone(),
                alternatives: 2,
            })?;
        }
        batch.push(Event::TierCompleted { tier, standings: group_standings.clone() })?;
        let mut outcome = TierOutcome {
            tier,
            standings: group_standings,
            promoted: Vec::new(),
            winner: None,
            decisive_random_ties: decisive,
        };
        if is_final {
            let winner = selection.chosen[0].clone();
            batch.push(Event::TournamentCompleted { winner: winner.clone() })?;
            outcome.winner = Some(winner);
        } else {
            batch.push(Event::PromotionsApplied { from_tier: tier, players: selection.chosen.clone() })?;
            start_tier(&mut batch, tier + 1)?;
            outcome.promoted = selection.chosen;
        }
        Ok((outcome, batch))
    }

    pub fn phase(&self) -> Phase {
        self.state.phase
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::FixedClock;
    use crate::model::TierConfig;

    fn roster(n: usize) -> Vec<Player> {
        (0..n).map(|i| Player::new(format!("p{i:02}"), format!("Player {i}"), 2600 + 10 * i as u32)).collect()
    }

    fn clock() -> Arc<dyn Clock> {
        Arc::new(FixedClock(0))
    }

    fn example1(seed: u64) -> TournamentConfig {
        TournamentConfig::new(vec![TierConfig::new(8, 2), TierConfig::new(6, 2), TierConfig::new(6, 0)], seed)
    }

    /// Lower seat number wins, so results are a fixed function of the pairing.
    fn play_tier(t: &mut Tournament, f: impl Fn(&PlayerId, &PlayerId) -> GameResult) {
        let tier = t.state().active_tier().unwrap().clone();
        for g in &tier.groups {
            for (r, b) in g.scheduled(tier.tier) {
                t.enter_result(r, f(&b.white, &b.black), 30).unwrap();
            }
        }
    }

    fn by_id(w: &PlayerId, b: &PlayerId) -> GameResult {
        if w > b {
            GameResult::WhiteWin
        } else {
            GameResult::BlackWin
        }
    }

    #[test]
    fn creation_opens_tier_one() {
        let t = Tournament::create(example1(1), roster(20), clock()).unwrap();
        let tier = t.state().active_tier().unwrap();
        assert_eq!(tier.groups.len(), 1);
        assert_eq!(tier.groups[0].members.len(), 8);
        assert_eq!(tier.groups[0].rounds.as_ref().unwrap().len(), 7);
        let names: Vec<&str> = t.log().iter().map(|e| e.event.name()).collect();
        assert_eq!(names, ["TournamentCreated", "TierStarted", "GroupsFormed", "PairingsPublished"]);
        // tier 1 holds the eight lowest ratings
        assert!(tier.members.iter().all(|p| p.as_str() < "p08"));
    }

    #[test]
    fn invalid_config_emits_nothing() {
        let err = Tournament::create(example1(1), roster(19), clock()).unwrap_err();
        assert_eq!(err.code(), "SizeMismatch");
    }

    #[test]
    fn example_two_splits_tier_one() {
        let cfg = TournamentConfig::new(vec![TierConfig::new(30, 3), TierConfig::new(7, 0)], 3);
        let t = Tournament::create(cfg, roster(37), clock()).unwrap();
        let tier = t.state().active_tier().unwrap();
        assert_eq!(tier.groups.len(), 3);
        for g in &tier.groups {
            assert_eq!(g.members.len(), 10);
            assert_eq!(g.rounds.as_ref().unwrap().len(), 9);
        }
    }

    #[test]
    fn result_guards() {
        let mut t = Tournament::create(example1(1), roster(20), clock()).unwrap();
        let g = GameRef { tier: 1, group: 1, round: 1, board: 1 };
        t.enter_result(g, GameResult::Draw, 40).unwrap();
        assert_eq!(t.enter_result(g, GameResult::Draw, 40).unwrap_err(), EngineError::AlreadyReported(g));
        let unknown = GameRef { tier: 1, group: 1, round: 8, board: 1 };
        assert_eq!(t.enter_result(unknown, GameResult::Draw, 40).unwrap_err(), EngineError::UnknownGame(unknown));
        let g2 = GameRef { tier: 1, group: 1, round: 1, board: 2 };
        assert_eq!(t.enter_result(g2, GameResult::Draw, 0).unwrap_err(), EngineError::InvalidMoveCount);
        let st = standings(t.state(), 1);
        let decided: u32 = st[0].rows.iter().map(|r| r.draws).sum();
        assert_eq!(decided, 2);

        play_tier_rest(&mut t);
        t.complete_tier(false).unwrap();
        assert_eq!(t.enter_result(g2, GameResult::Draw, 40).unwrap_err(), EngineError::TierClosed(g2));
    }

    fn play_tier_rest(t: &mut Tournament) {
        let tier = t.state().active_tier().unwrap().clone();
        for r in tier.pending() {
            let b = tier.group(r.group).unwrap().board(&r).unwrap().clone();
            t.enter_result(r, by_id(&b.white, &b.black), 30).unwrap();
        }
    }

    #[test]
    fn incomplete_tier_lists_missing_games() {
        let mut t = Tournament::create(example1(1), roster(20), clock()).unwrap();
        let tier = t.state().active_tier().unwrap().clone();
        let all = tier.pending();
        for r in &all[1..] {
            t.enter_result(*r, GameResult::Draw, 30).unwrap();
        }
        assert_eq!(t.complete_tier(false).unwrap_err(), EngineError::IncompleteResults { missing: vec![all[0]] });
    }

    #[test]
    fn full_example_one_flow() {
        let mut t = Tournament::create(example1(5), roster(20), clock()).unwrap();
        for tier in 1..=3u32 {
            play_tier(&mut t, by_id);
            let out = t.complete_tier(false).unwrap();
            assert_eq!(out.tier, tier);
            if tier < 3 {
                assert_eq!(out.promoted.len(), 2);
                let next = t.state().active_tier().unwrap();
                assert_eq!(next.members.len(), 8);
            } else {
                assert!(out.winner.is_some());
            }
        }
        // higher ids win every game, so p07 and p06 rise from tier 1 and p19 wins
        assert_eq!(t.state().tier(1).unwrap().promoted, vec![PlayerId::new("p07"), PlayerId::new("p06")]);
        assert_eq!(t.winner(), Some(&PlayerId::new("p19")));
        for p in t.state().tier(1).unwrap().promoted.clone() {
            let reached_final = t.state().tier(3).unwrap().members.contains(&p);
            assert_eq!(t.state().games_played(&p), if reached_final { 21 } else { 14 });
        }
        assert_eq!(t.state().games_played(&PlayerId::new("p00")), 7);
        let replayed = Tournament::from_log(t.log().to_vec(), clock()).unwrap();
        assert_eq!(replayed.state(), t.state());
    }

    #[test]
    fn forfeit_scores_losses() {
        let mut t = Tournament::create(example1(2), roster(20), clock()).unwrap();
        let p = t.state().active_tier().unwrap().members[0].clone();
        t.forfeit(&p, "withdrew").unwrap();
        let st = standings(t.state(), 1);
        let row = st[0].rows.iter().find(|r| r.player == p).unwrap();
        assert_eq!((row.losses, row.ts_num, row.ts_den), (7, -7, 7));
        assert_eq!(t.forfeit(&p, "again").unwrap_err(), EngineError::NotActive(p.clone()));
        assert_eq!(t.forfeit(&PlayerId::new("nobody"), "x").unwrap_err(), EngineError::UnknownPlayer(PlayerId::new("nobody")));
        // a tier-3 player is not active during tier 1
        assert_eq!(t.forfeit(&PlayerId::new("p19"), "x").unwrap_err(), EngineError::NotActive(PlayerId::new("p19")));
    }

    #[test]
    fn forfeit_midway_keeps_played_games() {
        let mut t = Tournament::create(example1(2), roster(20), clock()).unwrap();
        let tier = t.state().active_tier().unwrap().clone();
        let g = &tier.groups[0];
        let p = g.members[0].clone();
        let mine: Vec<(GameRef, _)> = g.scheduled(1).into_iter().filter(|(_, b)| b.white == p || b.black == p).collect();
        for (r, b) in &mine[..3] {
            let res = if b.white == p { GameResult::WhiteWin } else { GameResult::BlackWin };
            t.enter_result(*r, res, 25).unwrap();
        }
        t.forfeit(&p, "ill").unwrap();
        let st = standings(t.state(), 1);
        let row = st[0].rows.iter().find(|r| r.player == p).unwrap();
        assert_eq!((row.wins, row.losses), (3, 4));
        // a forfeited game cannot be reported afterwards
        assert_eq!(t.enter_result(mine[3].0, GameResult::Draw, 20).unwrap_err(), EngineError::AlreadyReported(mine[3].0));
    }

    #[test]
    fn forfeit_of_eliminated_player() {
        let mut t = Tournament::create(example1(2), roster(20), clock()).unwrap();
        play_tier(&mut t, by_id);
        t.complete_tier(false).unwrap();
        let out = PlayerId::new("p00");
        assert_eq!(t.forfeit(&out, "gone").unwrap_err(), EngineError::NotActive(out));
    }

    #[test]
    fn interactive_mode_waits_for_confirmation() {
        // two players, one drawn game: the winner is decided by rule (iv)
        let mut cfg = TournamentConfig::new(vec![TierConfig::new(2, 0)], 11);
        cfg.tie_break_mode = TieBreakMode::Interactive;
        let mut t = Tournament::create(cfg, roster(2), clock()).unwrap();
        t.enter_result(GameRef { tier: 1, group: 1, round: 1, board: 1 }, GameResult::Draw, 30).unwrap();
        let before = t.log().len();
        match t.complete_tier(false) {
            Err(EngineError::PendingDecision { context: TieContext::Winner, tied }) => assert_eq!(tied.len(), 2),
            other => panic!("{other:?}"),
        }
        assert_eq!(t.log().len(), before);
        let out = t.complete_tier(true).unwrap();
        assert!(out.winner.is_some());
        assert!(t.log().iter().any(|e| matches!(e.event, Event::TieResolvedRandomly { .. })));
    }

    #[test]
    fn auto_mode_resolves_random_ties() {
        let cfg = TournamentConfig::new(vec![TierConfig::new(2, 0)], 11);
        let mut t = Tournament::create(cfg, roster(2), clock()).unwrap();
        t.enter_result(GameRef { tier: 1, group: 1, round: 1, board: 1 }, GameResult::Draw, 30).unwrap();
        let out = t.complete_tier(false).unwrap();
        assert_eq!(out.decisive_random_ties.len(), 1);
        assert!(t.state().random_ties.iter().any(|r| r.context == TieContext::GroupRanking { group: 1 }));
    }

    #[test]
    fn per_group_winners_in_example_two() {
        let cfg = TournamentConfig::new(vec![TierConfig::new(30, 3), TierConfig::new(7, 0)], 4);
        let mut t = Tournament::create(cfg, roster(37), clock()).unwrap();
        play_tier(&mut t, by_id);
        let out = t.complete_tier(false).unwrap();
        assert_eq!(out.promoted.len(), 3);
        let tier1 = t.state().tier(1).unwrap();
        for g in &tier1.groups {
            let best = g.members.iter().max().unwrap();
            assert!(out.promoted.contains(best));
        }
        assert_eq!(t.state().active_tier().unwrap().members.len(), 10);
    }

    #[test]
    fn mixed_groups_and_promotions_capped_per_group() {
        // 12 players in 3 groups of 4, promote 2: at most one per group
        let cfg = TournamentConfig::new(
            vec![TierConfig::new(12, 2).with_max_group_size(4), TierConfig::new(2, 0)],
            9,
        );
        let mut t = Tournament::create(cfg, roster(14), clock()).unwrap();
        play_tier(&mut t, by_id);
        let out = t.complete_tier(false).unwrap();
        assert_eq!(out.promoted.len(), 2);
        let tier1 = t.state().tier(1).unwrap();
        let groups: Vec<u32> = out.promoted.iter().map(|p| tier1.group_of(p).unwrap().group).collect();
        assert_ne!(groups[0], groups[1]);
    }

    #[test]
    fn standings_csv_shape() {
        let mut t = Tournament::create(TournamentConfig::new(vec![TierConfig::new(4, 0)], 1), roster(4), clock()).unwrap();
        play_tier(&mut t, by_id);
        let out = t.complete_tier(false).unwrap();
        let mut buf = Vec::new();
        write_standings_csv(&mut buf, &out.standings[0]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "rank,player,ts_num,ts_den,wins,losses,draws,tiebreak_rule");
        assert_eq!(lines.next().unwrap(), "1,p03,3,3,3,0,0,score");
        assert_eq!(lines.count(), 3);
    }
}
