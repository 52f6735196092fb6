//! Tier Score, pairwise head-to-head score, and the tie-break cascade.
//!
//! A player's Tier Score is `(wins - losses) / games` over the games played in
//! one group, an exact rational in `[-1, +1]`. Players with equal scores are
//! separated, in order, by
//!
//! 1. head-to-head: the winner of their game ranks higher,
//! 2. more wins,
//! 3. fewer moves on average per win,
//! 4. a seeded random draw.
//!
//! Ties among more than two players are ordered with the same pairwise
//! cascade. Head-to-head results that form a cycle inside the tied set are
//! ignored for every pair in the cycle.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{GameRecord, GameResult, PlayerId};
use crate::scalar::ScoreInt;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoringError {
    #[error("no games played")]
    NoGames,
    #[error("game between {white} and {black} is not a game between {a} and {b}")]
    MixedPair { a: PlayerId, b: PlayerId, white: PlayerId, black: PlayerId },
    #[error("player {0} is listed as their own opponent")]
    SelfOpponent(PlayerId),
    #[error("opponent list is empty")]
    NoOpponents,
    #[error("score line for {player} disagrees with the game list: {reason}")]
    InconsistentScores { player: PlayerId, reason: String },
}

/// Exact `(wins - losses) / games`, kept unreduced so the denominator is the
/// number of games played.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TierScore<I> {
    num: I,
    den: I,
}

impl<I: ScoreInt> TierScore<I> {
    pub fn numerator(&self) -> I {
        self.num
    }

    /// Games played.
    pub fn denominator(&self) -> I {
        self.den
    }

    pub fn value(&self) -> Ratio<I> {
        Ratio::new(self.num, self.den)
    }

    pub fn to_f64(&self) -> f64 {
        crate::scalar::ratio_to_f64(&self.value())
    }
}

impl<I: ScoreInt> PartialEq for TierScore<I> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<I: ScoreInt> Eq for TierScore<I> {}

impl<I: ScoreInt> PartialOrd for TierScore<I> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<I: ScoreInt> Ord for TierScore<I> {
    fn cmp(&self, other: &Self) -> Ordering {
        // denominators are positive
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

impl<I: ScoreInt> fmt::Display for TierScore<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

pub fn tier_score<I: ScoreInt>(wins: u32, losses: u32, draws: u32) -> Result<TierScore<I>, ScoringError> {
    let games = wins + losses + draws;
    if games == 0 {
        return Err(ScoringError::NoGames);
    }
    Ok(TierScore {
        num: I::from_count(wins) - I::from_count(losses),
        den: I::from_count(games),
    })
}

/// Anything that records the colors and result of one game.
pub trait HeadToHead {
    fn white(&self) -> &PlayerId;
    fn black(&self) -> &PlayerId;
    fn result(&self) -> GameResult;
    /// Full moves, when known. Forfeits report `None`.
    fn moves(&self) -> Option<u32>;
}

impl HeadToHead for GameRecord {
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
        (!self.forfeit && self.moves > 0).then_some(self.moves)
    }
}

fn winner_of<G: HeadToHead>(g: &G) -> Option<&PlayerId> {
    match g.result() {
        GameResult::WhiteWin => Some(g.white()),
        GameResult::BlackWin => Some(g.black()),
        GameResult::Draw => None,
    }
}

/// `(a's wins - b's wins) / games` over games between `a` and `b`; zero when
/// they never played.
pub fn pairwise_ts<I: ScoreInt, G: HeadToHead>(
    a: &PlayerId,
    b: &PlayerId,
    games: &[G],
) -> Result<Ratio<I>, ScoringError> {
    let refs: Vec<&G> = games.iter().collect();
    pairwise_ts_refs(a, b, &refs)
}

pub(crate) fn pairwise_ts_refs<I: ScoreInt, G: HeadToHead>(
    a: &PlayerId,
    b: &PlayerId,
    games: &[&G],
) -> Result<Ratio<I>, ScoringError> {
    let mut diff = I::zero();
    for g in games {
        let (w, bl) = (g.white(), g.black());
        if !((w == a && bl == b) || (w == b && bl == a)) {
            return Err(ScoringError::MixedPair {
                a: a.clone(),
                b: b.clone(),
                white: w.clone(),
                black: bl.clone(),
            });
        }
        match winner_of(*g) {
            Some(p) if p == a => diff = diff + I::one(),
            Some(_) => diff = diff - I::one(),
            None => {}
        }
    }
    if games.is_empty() {
        return Ok(Ratio::from_integer(I::zero()));
    }
    Ok(Ratio::new(diff, I::from_usize(games.len()).expect("game count fits")))
}

/// Source of head-to-head games between two players.
pub trait PairLookup {
    type Game: HeadToHead;
    fn games_between(&self, a: &PlayerId, b: &PlayerId) -> Vec<&Self::Game>;
}

/// Mean of the pairwise scores of `player` against every listed opponent,
/// counting zero for opponents never played.
pub fn mean_pairwise_ts<I: ScoreInt, D: PairLookup>(
    player: &PlayerId,
    opponents: &[PlayerId],
    db: &D,
) -> Result<Ratio<I>, ScoringError> {
    if opponents.is_empty() {
        return Err(ScoringError::NoOpponents);
    }
    let mut sum = Ratio::from_integer(I::zero());
    for o in opponents {
        if o == player {
            return Err(ScoringError::SelfOpponent(player.clone()));
        }
        sum = sum + pairwise_ts_refs::<I, _>(player, o, &db.games_between(player, o))?;
    }
    Ok(sum / I::from_usize(opponents.len()).expect("opponent count fits"))
}

/// Results of one player within one group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreLine {
    pub player: PlayerId,
    pub wins: u32,
    pub losses: u32,
    pub draws: u32,
    /// Move count of each win; 0 marks a forfeit win.
    pub moves_to_win: Vec<u32>,
}

impl ScoreLine {
    pub fn empty(player: PlayerId) -> Self {
        Self { player, wins: 0, losses: 0, draws: 0, moves_to_win: Vec::new() }
    }

    pub fn games(&self) -> u32 {
        self.wins + self.losses + self.draws
    }

    pub fn tier_score<I: ScoreInt>(&self) -> Result<TierScore<I>, ScoringError> {
        tier_score(self.wins, self.losses, self.draws)
    }

    /// Tier Score value, or zero before the first game.
    pub fn provisional_value<I: ScoreInt>(&self) -> Ratio<I> {
        self.tier_score::<I>().map(|s| s.value()).unwrap_or_else(|_| Ratio::from_integer(I::zero()))
    }

    /// `(sum, count)` over wins actually played on the board.
    pub fn win_moves(&self) -> (u64, u32) {
        self.moves_to_win
            .iter()
            .filter(|&&m| m > 0)
            .fold((0, 0), |(s, c), &m| (s + u64::from(m), c + 1))
    }
}

/// Score lines for `members` computed from `games`, in member order.
pub fn score_lines(members: &[PlayerId], games: &[GameRecord]) -> Vec<ScoreLine> {
    let mut lines: BTreeMap<&PlayerId, ScoreLine> =
        members.iter().map(|p| (p, ScoreLine::empty(p.clone()))).collect();
    for g in games {
        let (w, b) = (&g.white, &g.black);
        let moves = if g.forfeit { 0 } else { g.moves };
        match g.result {
            GameResult::WhiteWin => {
                if let Some(l) = lines.get_mut(w) {
                    l.wins += 1;
                    l.moves_to_win.push(moves);
                }
                if let Some(l) = lines.get_mut(b) {
                    l.losses += 1;
                }
            }
            GameResult::BlackWin => {
                if let Some(l) = lines.get_mut(b) {
                    l.wins += 1;
                    l.moves_to_win.push(moves);
                }
                if let Some(l) = lines.get_mut(w) {
                    l.losses += 1;
                }
            }
            GameResult::Draw => {
                for p in [w, b] {
                    if let Some(l) = lines.get_mut(p) {
                        l.draws += 1;
                    }
                }
            }
        }
    }
    members.iter().map(|p| lines.remove(p).expect("member line")).collect()
}

/// The rule that separated two adjacent players in a ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreakRule {
    /// Different primary score; no tie to break.
    Score,
    /// (i) won their game against each other.
    HeadToHead,
    /// (ii) more wins.
    MoreWins,
    /// (iii) fewer moves per win.
    FewerMoves,
    /// (iv) random draw.
    Random,
}

impl TieBreakRule {
    /// Short label used in standings exports.
    pub fn label(self) -> &'static str {
        match self {
            TieBreakRule::Score => "score",
            TieBreakRule::HeadToHead => "i",
            TieBreakRule::MoreWins => "ii",
            TieBreakRule::FewerMoves => "iii",
            TieBreakRule::Random => "iv",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            TieBreakRule::Score => "higher score",
            TieBreakRule::HeadToHead => "head-to-head win",
            TieBreakRule::MoreWins => "more wins",
            TieBreakRule::FewerMoves => "fewer moves per win",
            TieBreakRule::Random => "random draw",
        }
    }
}

/// Everything the cascade needs to know about one player.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contender<K> {
    pub player: PlayerId,
    pub key: K,
    pub wins: u32,
    /// `(sum, count)` of move counts over wins. `None` when move counts are
    /// unknown, which makes rule (iii) inapplicable.
    pub win_moves: Option<(u64, u32)>,
}

/// Rules (ii) and (iii) between two players; `Greater` means `a` ranks higher.
pub fn compare_by_record<K>(a: &Contender<K>, b: &Contender<K>) -> Option<(Ordering, TieBreakRule)> {
    if a.wins != b.wins {
        return Some((a.wins.cmp(&b.wins), TieBreakRule::MoreWins));
    }
    let ((sa, ca), (sb, cb)) = (a.win_moves?, b.win_moves?);
    // A mean over no wins is +inf.
    let ord = match (ca, cb) {
        (0, 0) => return None,
        (0, _) => Ordering::Less,
        (_, 0) => Ordering::Greater,
        _ => (sb * u64::from(ca)).cmp(&(sa * u64::from(cb))),
    };
    (ord != Ordering::Equal).then_some((ord, TieBreakRule::FewerMoves))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedEntry<K> {
    pub player: PlayerId,
    pub key: K,
    /// How this entry was separated from the one above it; `None` for the top.
    pub separated_by: Option<TieBreakRule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedStanding<K> {
    pub entries: Vec<RankedEntry<K>>,
    /// Each maximal run of adjacent players ordered by rule (iv), top first.
    pub random_ties: Vec<Vec<PlayerId>>,
}

impl<K> RankedStanding<K> {
    pub fn players(&self) -> impl Iterator<Item = &PlayerId> {
        self.entries.iter().map(|e| &e.player)
    }

    pub fn position(&self, p: &PlayerId) -> Option<usize> {
        self.entries.iter().position(|e| &e.player == p)
    }

    /// Whether rule (iv) decided the boundary between position `k - 1` and `k`.
    pub fn random_at_boundary(&self, k: usize) -> bool {
        k > 0
            && k < self.entries.len()
            && self.entries[k].separated_by == Some(TieBreakRule::Random)
    }
}

/// Orders contenders by key (descending) and breaks ties with the cascade.
///
/// `head_to_head(a, b)` returns `Greater` when `a` has the better decisive
/// record against `b`, `Less` for the reverse, and `None` or `Equal` when the
/// pair drew or never met. Pass `|_, _| None` where rule (i) does not apply.
pub fn order_contenders<K, F, R>(
    mut contenders: Vec<Contender<K>>,
    head_to_head: F,
    rng: &mut R,
) -> RankedStanding<K>
where
    K: Ord + Clone,
    F: Fn(&PlayerId, &PlayerId) -> Option<Ordering>,
    R: Rng + ?Sized,
{
    contenders.sort_by(|a, b| b.key.cmp(&a.key).then_with(|| a.player.cmp(&b.player)));
    let mut entries = Vec::with_capacity(contenders.len());
    let mut start = 0;
    while start < contenders.len() {
        let mut end = start + 1;
        while end < contenders.len() && contenders[end].key == contenders[start].key {
            end += 1;
        }
        let block = &contenders[start..end];
        let first_sep = if start == 0 { None } else { Some(TieBreakRule::Score) };
        if block.len() == 1 {
            entries.push(RankedEntry { player: block[0].player.clone(), key: block[0].key.clone(), separated_by: first_sep });
        } else {
            let (order, seps) = resolve_tie(block, &head_to_head, rng);
            for (pos, &i) in order.iter().enumerate() {
                let sep = if pos == 0 { first_sep } else { Some(seps[pos - 1]) };
                entries.push(RankedEntry { player: block[i].player.clone(), key: block[i].key.clone(), separated_by: sep });
            }
        }
        start = end;
    }

    let mut random_ties = Vec::new();
    let mut i = 1;
    while i < entries.len() {
        if entries[i].separated_by == Some(TieBreakRule::Random) {
            let mut run = vec![entries[i - 1].player.clone()];
            while i < entries.len() && entries[i].separated_by == Some(TieBreakRule::Random) {
                run.push(entries[i].player.clone());
                i += 1;
            }
            random_ties.push(run);
        } else {
            i += 1;
        }
    }
    RankedStanding { entries, random_ties }
}

/// Orders one block of equal-key contenders. Returns the order (indices into
/// `block`) and the rule separating each adjacent pair.
fn resolve_tie<K, F, R>(block: &[Contender<K>], head_to_head: &F, rng: &mut R) -> (Vec<usize>, Vec<TieBreakRule>)
where
    F: Fn(&PlayerId, &PlayerId) -> Option<Ordering>,
    R: Rng + ?Sized,
{
    let m = block.len();
    let mut beat = vec![vec![false; m]; m];
    for x in 0..m {
        for y in 0..m {
            if x != y {
                beat[x][y] = head_to_head(&block[x].player, &block[y].player) == Some(Ordering::Greater);
            }
        }
    }
    let mut reach = beat.clone();
    for k in 0..m {
        let via = reach[k].clone();
        for row in reach.iter_mut().filter(|row| row[k]) {
            for (r, &v) in row.iter_mut().zip(&via) {
                *r |= v;
            }
        }
    }

    // decided[x][y] = Some((x ranks above y, rule)) via rules (i)-(iii)
    let mut decided: Vec<Vec<Option<(bool, TieBreakRule)>>> = vec![vec![None; m]; m];
    let mut needs_random = false;
    for x in 0..m {
        for y in 0..m {
            if x == y {
                continue;
            }
            let d = if beat[x][y] && !reach[y][x] {
                Some((true, TieBreakRule::HeadToHead))
            } else if beat[y][x] && !reach[x][y] {
                Some((false, TieBreakRule::HeadToHead))
            } else {
                compare_by_record(&block[x], &block[y]).map(|(o, r)| (o == Ordering::Greater, r))
            };
            needs_random |= d.is_none();
            decided[x][y] = d;
        }
    }

    let draw_lot = |rng: &mut R| {
        let mut perm: Vec<usize> = (0..m).collect();
        perm.shuffle(rng);
        let mut pos = vec![0; m];
        for (p, &i) in perm.iter().enumerate() {
            pos[i] = p;
        }
        pos
    };
    let score = |lot: &Option<Vec<usize>>, x: usize, y: usize| -> (bool, TieBreakRule) {
        match decided[x][y] {
            Some(d) => d,
            None => {
                let lot = lot.as_ref().expect("lot drawn");
                (lot[x] < lot[y], TieBreakRule::Random)
            }
        }
    };
    let mut lot: Option<Vec<usize>> = needs_random.then(|| draw_lot(rng));
    let copeland: Vec<usize> = (0..m).map(|x| (0..m).filter(|&y| y != x && score(&lot, x, y).0).count()).collect();
    // A cycle of deterministic rules leaves equal Copeland scores; lots
    // order those players so that no id is favored.
    let mut sorted = copeland.clone();
    sorted.sort_unstable();
    if lot.is_none() && sorted.windows(2).any(|w| w[0] == w[1]) {
        lot = Some(draw_lot(rng));
    }
    let above = |x: usize, y: usize| score(&lot, x, y);
    let mut insertion: Vec<usize> = (0..m).collect();
    insertion.sort_by(|&a, &b| {
        copeland[b].cmp(&copeland[a]).then_with(|| match &lot {
            Some(l) => l[a].cmp(&l[b]),
            None => a.cmp(&b),
        })
    });

    // Insert into a path where every adjacent pair agrees with `above`.
    let mut path: Vec<usize> = Vec::with_capacity(m);
    for x in insertion {
        if path.is_empty() || above(x, path[0]).0 {
            path.insert(0, x);
            continue;
        }
        let mut at = path.len();
        for i in 0..path.len() - 1 {
            if above(path[i], x).0 && above(x, path[i + 1]).0 {
                at = i + 1;
                break;
            }
        }
        path.insert(at, x);
    }
    let seps = path.windows(2).map(|w| above(w[0], w[1]).1).collect();
    (path, seps)
}

/// Ranks one group by Tier Score and the full cascade.
///
/// `games` are the group's games; every score line must agree with them.
pub fn rank_group<I: ScoreInt, R: Rng + ?Sized>(
    scores: &[ScoreLine],
    games: &[GameRecord],
    rng: &mut R,
) -> Result<crate::scoring::RankedStanding<TierScore<I>>, ScoringError> {
    let members: Vec<PlayerId> = scores.iter().map(|s| s.player.clone()).collect();
    let member_set: BTreeSet<&PlayerId> = members.iter().collect();
    for g in games {
        for p in [&g.white, &g.black] {
            if !member_set.contains(p) {
                return Err(ScoringError::InconsistentScores {
                    player: p.clone(),
                    reason: format!("plays in game {} but has no score line", g.game),
                });
            }
        }
    }
    let recomputed = score_lines(&members, games);
    for (given, actual) in scores.iter().zip(&recomputed) {
        let mut a = given.moves_to_win.clone();
        let mut b = actual.moves_to_win.clone();
        a.sort_unstable();
        b.sort_unstable();
        if (given.wins, given.losses, given.draws) != (actual.wins, actual.losses, actual.draws) || a != b {
            return Err(ScoringError::InconsistentScores {
                player: given.player.clone(),
                reason: format!(
                    "line says {}W/{}L/{}D, games say {}W/{}L/{}D",
                    given.wins, given.losses, given.draws, actual.wins, actual.losses, actual.draws
                ),
            });
        }
    }

    let mut contenders = Vec::with_capacity(scores.len());
    for s in scores {
        contenders.push(Contender {
            player: s.player.clone(),
            key: s.tier_score::<I>()?,
            wins: s.wins,
            win_moves: Some(s.win_moves()),
        });
    }
    let h2h = head_to_head_table(games);
    Ok(order_contenders(contenders, |a, b| h2h_lookup(&h2h, a, b), rng))
}

/// Net decisive results per ordered pair: `table[(a, b)]` is a's wins minus b's wins.
pub(crate) fn head_to_head_table(games: &[GameRecord]) -> BTreeMap<(PlayerId, PlayerId), i64> {
    let mut t = BTreeMap::new();
    for g in games {
        let (w, l) = match g.result {
            GameResult::WhiteWin => (&g.white, &g.black),
            GameResult::BlackWin => (&g.black, &g.white),
            GameResult::Draw => continue,
        };
        *t.entry((w.clone(), l.clone())).or_insert(0) += 1;
        *t.entry((l.clone(), w.clone())).or_insert(0) -= 1;
    }
    t
}

pub(crate) fn h2h_lookup(t: &BTreeMap<(PlayerId, PlayerId), i64>, a: &PlayerId, b: &PlayerId) -> Option<Ordering> {
    t.get(&(a.clone(), b.clone())).map(|n| n.cmp(&0))
}
