//! Tournament state and the pure event-application function.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::{Event, FormedGroup, LoggedEvent, TieContext};
use crate::model::{validate_config, GameRecord, GameRef, GameResult, Player, PlayerId, TournamentConfig};
use crate::scheduling::{Board, RoundPairing};
use crate::scoring::TieBreakRule;
use crate::Ratio;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StateError {
    #[error("illegal transition: {0}")]
    IllegalTransition(String),
}

fn illegal<T>(msg: impl Into<String>) -> Result<T, StateError> {
    Err(StateError::IllegalTransition(msg.into()))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum Phase {
    #[default]
    New,
    Created,
    TierActive { tier: u32 },
    TierCompleted { tier: u32 },
    Completed,
}

/// One row of a final group standing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StandingRow {
    pub player: PlayerId,
    pub wins: u32,
    pub losses: u32,
    pub draws: u32,
    pub ts_num: i64,
    pub ts_den: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separated_by: Option<TieBreakRule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupStanding {
    pub group: u32,
    pub rows: Vec<StandingRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupRun {
    pub group: u32,
    pub members: Vec<PlayerId>,
    pub mean_elo: Ratio,
    pub rounds: Option<Vec<RoundPairing>>,
    pub results: BTreeMap<GameRef, GameRecord>,
    pub forfeited: BTreeSet<PlayerId>,
}

impl GroupRun {
    /// Every scheduled game with its reference, in round and board order.
    pub fn scheduled(&self, tier: u32) -> Vec<(GameRef, &Board)> {
        let mut out = Vec::new();
        for r in self.rounds.iter().flatten() {
            for (i, b) in r.boards.iter().enumerate() {
                out.push((GameRef { tier, group: self.group, round: r.round, board: i as u32 + 1 }, b));
            }
        }
        out
    }

    pub fn board(&self, g: &GameRef) -> Option<&Board> {
        let round = self.rounds.as_ref()?.iter().find(|r| r.round == g.round)?;
        round.boards.get(g.board.checked_sub(1)? as usize)
    }

    pub fn pending(&self, tier: u32) -> Vec<GameRef> {
        self.scheduled(tier).into_iter().map(|(g, _)| g).filter(|g| !self.results.contains_key(g)).collect()
    }

    pub fn records(&self) -> Vec<GameRecord> {
        self.results.values().cloned().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TierRun {
    pub tier: u32,
    pub members: Vec<PlayerId>,
    pub target_mean: Option<Ratio>,
    pub groups: Vec<GroupRun>,
    pub standings: Vec<GroupStanding>,
    pub promoted: Vec<PlayerId>,
    pub completed: bool,
}

impl TierRun {
    pub fn group_of(&self, p: &PlayerId) -> Option<&GroupRun> {
        self.groups.iter().find(|g| g.members.contains(p))
    }

    pub fn group(&self, group: u32) -> Option<&GroupRun> {
        self.groups.iter().find(|g| g.group == group)
    }

    pub fn pending(&self) -> Vec<GameRef> {
        self.groups.iter().flat_map(|g| g.pending(self.tier)).collect()
    }

    /// Lowest round that still has an unreported game.
    pub fn current_round(&self) -> Option<u32> {
        self.pending().iter().map(|g| g.round).min()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomTieRecord {
    pub tier: u32,
    pub context: TieContext,
    pub players: Vec<PlayerId>,
    pub alternatives: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TournamentState {
    pub config: Option<TournamentConfig>,
    pub roster: Vec<Player>,
    pub base_tiers: Vec<Vec<PlayerId>>,
    pub phase: Phase,
    pub tiers: Vec<TierRun>,
    pub random_ties: Vec<RandomTieRecord>,
    pub winner: Option<PlayerId>,
    pub events_applied: u64,
}

impl TournamentState {
    pub fn config(&self) -> &TournamentConfig {
        self.config.as_ref().expect("tournament created")
    }

    pub fn player(&self, id: &PlayerId) -> Option<&Player> {
        self.roster.iter().find(|p| &p.id == id)
    }

    pub fn tier(&self, tier: u32) -> Option<&TierRun> {
        self.tiers.iter().find(|t| t.tier == tier)
    }

    fn tier_mut(&mut self, tier: u32) -> Option<&mut TierRun> {
        self.tiers.iter_mut().find(|t| t.tier == tier)
    }

    pub fn active_tier(&self) -> Option<&TierRun> {
        match self.phase {
            Phase::TierActive { tier } => self.tier(tier),
            _ => None,
        }
    }

    /// The tier currently being played or most recently finished.
    pub fn current_tier(&self) -> Option<&TierRun> {
        self.tiers.last()
    }

    /// Games played (or forfeited) by `p` over all tiers.
    pub fn games_played(&self, p: &PlayerId) -> usize {
        self.tiers
            .iter()
            .flat_map(|t| &t.groups)
            .flat_map(|g| g.results.values())
            .filter(|r| r.involves(p))
            .count()
    }

    /// Every game record in the tournament, in tier, group and game order.
    pub fn all_records(&self) -> Vec<GameRecord> {
        self.tiers.iter().flat_map(|t| &t.groups).flat_map(|g| g.results.values().cloned()).collect()
    }

    pub fn apply(&self, event: &Event) -> Result<TournamentState, StateError> {
        let mut next = self.clone();
        next.apply_mut(event)?;
        Ok(next)
    }

    /// Applies `event` in place. On error the state is left unchanged.
    pub fn apply_mut(&mut self, event: &Event) -> Result<(), StateError> {
        self.check(event)?;
        self.mutate(event);
        self.events_applied += 1;
        Ok(())
    }

    fn check(&self, event: &Event) -> Result<(), StateError> {
        match event {
            Event::TournamentCreated { config, roster, tiers } => {
                if self.phase != Phase::New {
                    return illegal("TournamentCreated on a tournament that already exists");
                }
                validate_config(config, roster).map_err(|e| StateError::IllegalTransition(e.to_string()))?;
                if tiers.len() != config.tiers.len() {
                    return illegal("tier assignment does not match the configured tier count");
                }
                let mut seen = BTreeSet::new();
                for (t, members) in tiers.iter().enumerate() {
                    if members.len() != config.tiers[t].base_size {
                        return illegal(format!("tier {} assignment has {} players, expected {}", t + 1, members.len(), config.tiers[t].base_size));
                    }
                    for m in members {
                        if !roster.iter().any(|p| &p.id == m) || !seen.insert(m) {
                            return illegal(format!("tier assignment lists {m} twice or outside the roster"));
                        }
                    }
                }
            }
            Event::TierStarted { tier, members } => {
                let expected_tier = match self.phase {
                    Phase::Created => 1,
                    Phase::TierCompleted { tier: t } if !self.tier(t).map(|r| r.promoted.is_empty()).unwrap_or(true) => t + 1,
                    _ => return illegal(format!("TierStarted({tier}) in phase {:?}", self.phase)),
                };
                if *tier != expected_tier || *tier as usize > self.config().tiers.len() {
                    return illegal(format!("TierStarted({tier}) where tier {expected_tier} is next"));
                }
                let mut want: BTreeSet<&PlayerId> = self.base_tiers[*tier as usize - 1].iter().collect();
                if *tier > 1 {
                    want.extend(self.tier(tier - 1).expect("previous tier").promoted.iter());
                }
                let got: BTreeSet<&PlayerId> = members.iter().collect();
                if got != want || got.len() != members.len() {
                    return illegal(format!("tier {tier} members are not its base players plus promotions"));
                }
            }
            Event::GroupsFormed { tier, groups, .. } => {
                let t = self.expect_active(*tier)?;
                if !t.groups.is_empty() {
                    return illegal(format!("groups already formed for tier {tier}"));
                }
                let mut seen = BTreeSet::new();
                for (i, g) in groups.iter().enumerate() {
                    if g.group != i as u32 + 1 {
                        return illegal("groups must be numbered 1, 2, ...");
                    }
                    for m in &g.members {
                        if !t.members.contains(m) || !seen.insert(m) {
                            return illegal(format!("player {m} placed outside tier {tier} or in two groups"));
                        }
                    }
                }
                if seen.len() != t.members.len() {
                    return illegal(format!("groups do not cover tier {tier}"));
                }
            }
            Event::PairingsPublished { tier, group, rounds } => {
                let t = self.expect_active(*tier)?;
                let g = t.group(*group).ok_or_else(|| StateError::IllegalTransition(format!("no group {group} in tier {tier}")))?;
                if g.rounds.is_some() {
                    return illegal(format!("pairings already published for tier {tier} group {group}"));
                }
                for r in rounds {
                    for p in r.boards.iter().flat_map(|b| [&b.white, &b.black]).chain(r.bye.iter()) {
                        if !g.members.contains(p) {
                            return illegal(format!("pairing lists {p}, who is not in tier {tier} group {group}"));
                        }
                    }
                }
            }
            Event::ResultEntered { game, moves, .. } => {
                let g = self.expect_open_game(game)?;
                if g.results.contains_key(game) {
                    return illegal(format!("result for {game} already entered"));
                }
                if *moves == 0 {
                    return illegal("move count must be at least 1");
                }
            }
            Event::PlayerForfeited { tier, player, games, .. } => {
                let t = self.expect_active(*tier)?;
                let g = t.group_of(player).ok_or_else(|| StateError::IllegalTransition(format!("{player} is not playing in tier {tier}")))?;
                if g.forfeited.contains(player) {
                    return illegal(format!("{player} already forfeited"));
                }
                for r in games {
                    let b = g.board(r).ok_or_else(|| StateError::IllegalTransition(format!("unknown game {r}")))?;
                    if (&b.white != player && &b.black != player) || g.results.contains_key(r) {
                        return illegal(format!("game {r} is not an open game of {player}"));
                    }
                }
            }
            Event::TieResolvedRandomly { .. } => {
                if matches!(self.phase, Phase::New | Phase::Completed) {
                    return illegal("TieResolvedRandomly outside a running tournament");
                }
            }
            Event::TierCompleted { tier, standings } => {
                let t = self.expect_active(*tier)?;
                if t.groups.is_empty() || t.groups.iter().any(|g| g.rounds.is_none()) {
                    return illegal(format!("tier {tier} has unpublished groups"));
                }
                let pending = t.pending();
                if !pending.is_empty() {
                    return illegal(format!("tier {tier} has {} unreported games", pending.len()));
                }
                if standings.len() != t.groups.len() {
                    return illegal("one standing per group is required");
                }
            }
            Event::PromotionsApplied { from_tier, players } => {
                if self.phase != (Phase::TierCompleted { tier: *from_tier }) {
                    return illegal(format!("PromotionsApplied({from_tier}) in phase {:?}", self.phase));
                }
                let cfg = &self.config().tiers[*from_tier as usize - 1];
                if players.len() != cfg.promote_count || cfg.promote_count == 0 {
                    return illegal(format!("tier {from_tier} promotes {} players, not {}", cfg.promote_count, players.len()));
                }
                let t = self.tier(*from_tier).expect("tier");
                if !t.promoted.is_empty() {
                    return illegal("promotions already applied");
                }
                let distinct: BTreeSet<&PlayerId> = players.iter().collect();
                if distinct.len() != players.len() || players.iter().any(|p| !t.members.contains(p)) {
                    return illegal(format!("promoted players must be distinct members of tier {from_tier}"));
                }
            }
            Event::TournamentCompleted { winner } => {
                let last = self.config.as_ref().map(|c| c.tiers.len() as u32).unwrap_or(0);
                if self.phase != (Phase::TierCompleted { tier: last }) {
                    return illegal(format!("TournamentCompleted in phase {:?}", self.phase));
                }
                if !self.tier(last).expect("final tier").members.contains(winner) {
                    return illegal(format!("winner {winner} did not play the final tier"));
                }
            }
        }
        Ok(())
    }

    fn expect_active(&self, tier: u32) -> Result<&TierRun, StateError> {
        match self.phase {
            Phase::TierActive { tier: t } if t == tier => Ok(self.tier(t).expect("active tier")),
            _ => illegal(format!("tier {tier} is not active (phase {:?})", self.phase)),
        }
    }

    fn expect_open_game(&self, game: &GameRef) -> Result<&GroupRun, StateError> {
        let t = self.expect_active(game.tier)?;
        let g = t.group(game.group).ok_or_else(|| StateError::IllegalTransition(format!("unknown game {game}")))?;
        g.board(game).ok_or_else(|| StateError::IllegalTransition(format!("unknown game {game}")))?;
        Ok(g)
    }

    fn mutate(&mut self, event: &Event) {
        match event {
            Event::TournamentCreated { config, roster, tiers } => {
                self.config = Some(config.clone());
                self.roster = roster.clone();
                self.base_tiers = tiers.clone();
                self.phase = Phase::Created;
            }
            Event::TierStarted { tier, members } => {
                self.tiers.push(TierRun {
                    tier: *tier,
                    members: members.clone(),
                    target_mean: None,
                    groups: Vec::new(),
                    standings: Vec::new(),
                    promoted: Vec::new(),
                    completed: false,
                });
                self.phase = Phase::TierActive { tier: *tier };
            }
            Event::GroupsFormed { tier, target_mean, groups } => {
                let t = self.tier_mut(*tier).expect("checked");
                t.target_mean = Some(*target_mean);
                t.groups = groups
                    .iter()
                    .map(|FormedGroup { group, members, mean_elo }| GroupRun {
                        group: *group,
                        members: members.clone(),
                        mean_elo: *mean_elo,
                        rounds: None,
                        results: BTreeMap::new(),
                        forfeited: BTreeSet::new(),
                    })
                    .collect();
            }
            Event::PairingsPublished { tier, group, rounds } => {
                let t = self.tier_mut(*tier).expect("checked");
                let g = t.groups.iter_mut().find(|g| g.group == *group).expect("checked");
                g.rounds = Some(rounds.clone());
            }
            Event::ResultEntered { game, result, moves } => {
                let t = self.tier_mut(game.tier).expect("checked");
                let g = t.groups.iter_mut().find(|g| g.group == game.group).expect("checked");
                let b = g.board(game).expect("checked").clone();
                g.results.insert(
                    *game,
                    GameRecord { game: *game, white: b.white, black: b.black, result: *result, moves: *moves, forfeit: false },
                );
            }
            Event::PlayerForfeited { tier, player, games, .. } => {
                let t = self.tier_mut(*tier).expect("checked");
                let g = t.groups.iter_mut().find(|g| g.members.contains(player)).expect("checked");
                g.forfeited.insert(player.clone());
                for r in games {
                    let b = g.board(r).expect("checked").clone();
                    let result = if &b.white == player { GameResult::BlackWin } else { GameResult::WhiteWin };
                    g.results.insert(*r, GameRecord { game: *r, white: b.white, black: b.black, result, moves: 0, forfeit: true });
                }
            }
            Event::TieResolvedRandomly { tier, context, players, alternatives } => {
                self.random_ties.push(RandomTieRecord {
                    tier: *tier,
                    context: context.clone(),
                    players: players.clone(),
                    alternatives: *alternatives,
                });
            }
            Event::TierCompleted { tier, standings } => {
                let t = self.tier_mut(*tier).expect("checked");
                t.standings = standings.clone();
                t.completed = true;
                self.phase = Phase::TierCompleted { tier: *tier };
            }
            Event::PromotionsApplied { from_tier, players } => {
                self.tier_mut(*from_tier).expect("checked").promoted = players.clone();
            }
            Event::TournamentCompleted { winner } => {
                self.winner = Some(winner.clone());
                self.phase = Phase::Completed;
            }
        }
    }
}

/// Rebuilds state from a complete log.
pub fn replay<'a>(events: impl IntoIterator<Item = &'a LoggedEvent>) -> Result<TournamentState, StateError> {
    let mut s = TournamentState::default();
    for e in events {
        s.apply_mut(&e.event)?;
    }
    Ok(s)
}
