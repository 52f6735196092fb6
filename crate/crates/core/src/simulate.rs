//! Monte Carlo evaluation of the format under an Elo game model.
//!
//! Simulated tournaments run through [`Tournament`], the same code path as
//! live play. Replication `i` uses the seed `derive_seed(seed, i)` for both
//! the tournament and its game outcomes, so a report does not depend on how
//! replications are scheduled across threads.

use std::fmt::Write as _;
use std::io;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{EngineError, Tournament};
use crate::event::FixedClock;
use crate::model::{GameResult, Player, PlayerId, TierConfig, TournamentConfig};
use crate::rng::{derive_seed, stream};
use crate::scalar::Probability;
use crate::scheduling::validate_schedule;

/// Outcome model for one game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameModel<F> {
    /// Draw probability before clamping.
    pub draw_base: F,
    /// Elo points added to White's rating.
    pub white_bonus: F,
}

impl<F: Probability> Default for GameModel<F> {
    fn default() -> Self {
        Self { draw_base: F::lit(0.5), white_bonus: F::zero() }
    }
}

impl<F: Probability> GameModel<F> {
    pub fn new(draw_base: F) -> Self {
        Self { draw_base, ..Self::default() }
    }
}

/// Elo expected score of a player rated `a` against one rated `b`.
pub fn expected_score<F: Probability>(a: F, b: F) -> F {
    F::one() / (F::one() + F::lit(10.0).powf((b - a) / F::lit(400.0)))
}

/// `(p_win_a, p_draw, p_win_b)`. The draw probability is clamped so that
/// `p_win_a + p_draw / 2` stays equal to the expected score.
pub fn game_distribution<F: Probability>(a: F, b: F, model: &GameModel<F>) -> (F, F, F) {
    let e = expected_score(a, b);
    let two = F::lit(2.0);
    let draw = model.draw_base.max(F::zero()).min(two * e).min(two * (F::one() - e));
    let win_a = e - draw / two;
    let win_b = F::one() - e - draw / two;
    (win_a.max(F::zero()), draw, win_b.max(F::zero()))
}

fn sample<R: Rng + ?Sized>(white: u32, black: u32, model: &GameModel<f64>, rng: &mut R) -> GameResult {
    let (w, d, _) = game_distribution(f64::from(white) + model.white_bonus, f64::from(black), model);
    let u: f64 = rng.random();
    if u < w {
        GameResult::WhiteWin
    } else if u < w + d {
        GameResult::Draw
    } else {
        GameResult::BlackWin
    }
}

fn sample_moves<R: Rng + ?Sized>(rng: &mut R) -> u32 {
    rng.random_range(20..=80)
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("a seeded knockout needs a power-of-two roster, got {0} players")]
    RosterSizeUnsupported(usize),
    #[error("at least one replication is required")]
    NoReplications,
}

/// Plays one complete tournament with simulated results.
pub fn simulate_one(
    config: &TournamentConfig,
    roster: &[Player],
    model: &GameModel<f64>,
    seed: u64,
) -> Result<Tournament, EngineError> {
    let mut config = config.clone();
    config.seed = seed;
    let mut t = Tournament::create(config, roster.to_vec(), Arc::new(FixedClock(0)))?;
    let mut rng = stream(seed, "games");
    while let Some(tier) = t.state().active_tier() {
        let tier_no = tier.tier;
        let games: Vec<_> = tier
            .groups
            .iter()
            .flat_map(|g| g.scheduled(tier_no).into_iter().map(|(r, b)| (r, b.clone())))
            .collect();
        for (r, b) in games {
            let elo = |p: &PlayerId| t.state().player(p).expect("roster").elo;
            let result = sample(elo(&b.white), elo(&b.black), model, &mut rng);
            let moves = sample_moves(&mut rng);
            t.enter_result(r, result, moves)?;
        }
        t.complete_tier(true)?;
    }
    Ok(t)
}

/// Per-replication figures, indexed like the roster.
#[derive(Debug, Clone)]
struct Replication {
    winner: usize,
    games: Vec<u32>,
    color_diff: Vec<u32>,
    breaks: u32,
}

fn measure(t: &Tournament, roster: &[Player]) -> Replication {
    let state = t.state();
    let index = |p: &PlayerId| roster.iter().position(|r| &r.id == p).expect("roster");
    let mut games = vec![0u32; roster.len()];
    let mut white = vec![0i64; roster.len()];
    for g in state.all_records() {
        let (w, b) = (index(&g.white), index(&g.black));
        games[w] += 1;
        games[b] += 1;
        white[w] += 1;
        white[b] -= 1;
    }
    let breaks = state
        .tiers
        .iter()
        .flat_map(|t| &t.groups)
        .filter_map(|g| g.rounds.as_ref())
        .map(|r| validate_schedule(r).total_breaks)
        .sum();
    Replication {
        winner: index(t.winner().expect("finished tournament")),
        games,
        color_diff: white.iter().map(|d| d.unsigned_abs() as u32).collect(),
        breaks,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerStats {
    pub player: PlayerId,
    pub elo: u32,
    pub wins: u64,
    pub win_freq: f64,
    pub mean_games: f64,
    /// Mean of `|white - black|` over replications.
    pub mean_color_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub format: String,
    pub replications: u64,
    pub seed: u64,
    /// Roster order.
    pub players: Vec<PlayerStats>,
    pub top_elo_player: PlayerId,
    pub top_elo_win_freq: f64,
    pub mean_breaks: f64,
    pub max_breaks: u32,
}

impl SimReport {
    fn fold(format: &str, roster: &[Player], seed: u64, reps: &[Replication]) -> Self {
        let n = reps.len() as f64;
        let mut wins = vec![0u64; roster.len()];
        let mut games = vec![0u64; roster.len()];
        let mut diff = vec![0u64; roster.len()];
        for r in reps {
            wins[r.winner] += 1;
            for i in 0..roster.len() {
                games[i] += u64::from(r.games[i]);
                diff[i] += u64::from(r.color_diff[i]);
            }
        }
        let players: Vec<PlayerStats> = roster
            .iter()
            .enumerate()
            .map(|(i, p)| PlayerStats {
                player: p.id.clone(),
                elo: p.elo,
                wins: wins[i],
                win_freq: wins[i] as f64 / n,
                mean_games: games[i] as f64 / n,
                mean_color_diff: diff[i] as f64 / n,
            })
            .collect();
        let top = players
            .iter()
            .max_by(|a, b| a.elo.cmp(&b.elo).then_with(|| b.player.cmp(&a.player)))
            .expect("non-empty roster");
        SimReport {
            format: format.to_owned(),
            replications: reps.len() as u64,
            seed,
            top_elo_player: top.player.clone(),
            top_elo_win_freq: top.win_freq,
            mean_breaks: reps.iter().map(|r| f64::from(r.breaks)).sum::<f64>() / n,
            max_breaks: reps.iter().map(|r| r.breaks).max().unwrap_or(0),
            players,
        }
    }

    pub fn stats(&self, p: &PlayerId) -> Option<&PlayerStats> {
        self.players.iter().find(|s| &s.player == p)
    }

    /// `player,win_freq,mean_games,mean_color_diff`, six decimals.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["player", "win_freq", "mean_games", "mean_color_diff"])?;
        for s in &self.players {
            w.write_record([
                s.player.to_string(),
                format!("{:.6}", s.win_freq),
                format!("{:.6}", s.mean_games),
                format!("{:.6}", s.mean_color_diff),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "format: {}", self.format);
        let _ = writeln!(s, "replications: {}  seed: {}", self.replications, self.seed);
        let _ = writeln!(s, "top-rated player: {} wins {:.4}", self.top_elo_player, self.top_elo_win_freq);
        let _ = writeln!(s, "breaks per tournament: mean {:.3}, max {}", self.mean_breaks, self.max_breaks);
        let mut ranked: Vec<&PlayerStats> = self.players.iter().collect();
        ranked.sort_by(|a, b| b.wins.cmp(&a.wins).then_with(|| a.player.cmp(&b.player)));
        for p in ranked.iter().take(10) {
            let _ = writeln!(s, "  {:<16} {:>5}  {:.4}", p.player.as_str(), p.elo, p.win_freq);
        }
        s
    }
}

/// Runs `n` simulated tournaments and aggregates them.
pub fn run_replications(
    config: &TournamentConfig,
    roster: &[Player],
    model: &GameModel<f64>,
    n: u64,
    seed: u64,
) -> Result<SimReport, SimError> {
    if n == 0 {
        return Err(SimError::NoReplications);
    }
    let reps = (0..n)
        .into_par_iter()
        .map(|i| simulate_one(config, roster, model, derive_seed(seed, i)).map(|t| measure(&t, roster)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SimReport::fold("multi-tier", roster, seed, &reps))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Baseline {
    /// Everyone plays everyone once; best Tier Score wins.
    RoundRobinAll,
    /// Single elimination seeded by Elo; drawn games are replayed.
    SeededKnockout,
}

impl Baseline {
    pub fn name(self) -> &'static str {
        match self {
            Baseline::RoundRobinAll => "round-robin-all",
            Baseline::SeededKnockout => "seeded-knockout",
        }
    }
}

/// Bracket slots for `n` seeds (0 = strongest), arranged so seeds 0 and 1
/// can only meet in the final.
fn bracket(n: usize) -> Vec<usize> {
    let mut slots = vec![0];
    while slots.len() < n {
        let m = slots.len() * 2;
        slots = slots.iter().flat_map(|&s| [s, m - 1 - s]).collect();
    }
    slots
}

fn knockout(roster: &[Player], model: &GameModel<f64>, seed: u64) -> Replication {
    let mut rng = stream(seed, "knockout");
    let mut seeded: Vec<usize> = (0..roster.len()).collect();
    seeded.sort_by(|&a, &b| roster[b].elo.cmp(&roster[a].elo).then_with(|| roster[a].id.cmp(&roster[b].id)));
    let mut alive: Vec<usize> = bracket(roster.len()).into_iter().map(|s| seeded[s]).collect();
    let mut games = vec![0u32; roster.len()];
    let mut white = vec![0i64; roster.len()];
    while alive.len() > 1 {
        alive = alive
            .chunks(2)
            .map(|pair| {
                // the lower seed (listed first) has White
                let (w, b) = (pair[0], pair[1]);
                loop {
                    games[w] += 1;
                    games[b] += 1;
                    white[w] += 1;
                    white[b] -= 1;
                    match sample(roster[w].elo, roster[b].elo, model, &mut rng) {
                        GameResult::WhiteWin => break w,
                        GameResult::BlackWin => break b,
                        GameResult::Draw => {}
                    }
                }
            })
            .collect();
    }
    Replication {
        winner: alive[0],
        games,
        color_diff: white.iter().map(|d| d.unsigned_abs() as u32).collect(),
        breaks: 0,
    }
}

/// Same metrics for a comparison format.
pub fn run_baseline(
    format: Baseline,
    roster: &[Player],
    model: &GameModel<f64>,
    n: u64,
    seed: u64,
) -> Result<SimReport, SimError> {
    if n == 0 {
        return Err(SimError::NoReplications);
    }
    let reps = match format {
        Baseline::RoundRobinAll => {
            let size = roster.len();
            let config = TournamentConfig::new(vec![TierConfig::new(size, 0).with_max_group_size(size)], seed);
            (0..n)
                .into_par_iter()
                .map(|i| simulate_one(&config, roster, model, derive_seed(seed, i)).map(|t| measure(&t, roster)))
                .collect::<Result<Vec<_>, _>>()?
        }
        Baseline::SeededKnockout => {
            if roster.len() < 2 || !roster.len().is_power_of_two() {
                return Err(SimError::RosterSizeUnsupported(roster.len()));
            }
            (0..n).into_par_iter().map(|i| knockout(roster, model, derive_seed(seed, i))).collect()
        }
    };
    Ok(SimReport::fold(format.name(), roster, seed, &reps))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn expected_score_values() {
        assert!(close(expected_score(2700.0, 2700.0), 0.5));
        assert!(close(expected_score(2800.0, 2400.0), 10.0 / 11.0));
        for (a, b) in [(2500.0, 2731.0), (2890.0, 2100.0), (1000.0, 1001.0)] {
            assert!(close(expected_score(a, b) + expected_score(b, a), 1.0));
        }
        // single precision works the same way
        assert!((expected_score(2800.0f32, 2400.0) - 10.0 / 11.0).abs() < 1e-6);
    }

    #[test]
    fn distribution_values() {
        let m = GameModel::new(0.5);
        let (w, d, l) = game_distribution(2700.0, 2700.0, &m);
        assert!(close(w, 0.25) && close(d, 0.5) && close(l, 0.25));

        let e = expected_score(2750.0, 2600.0);
        let (w, d, l) = game_distribution(2750.0, 2600.0, &GameModel::new(0.0));
        assert!(close(w, e) && d == 0.0 && close(l, 1.0 - e));

        // E = 0.99 needs a rating gap of 400 * log10(99)
        let gap = 400.0 * 99f64.log10();
        let (w, d, l) = game_distribution(2000.0 + gap, 2000.0, &m);
        assert!(close(d, 0.02));
        assert!(close(w, 0.98));
        assert!(close(l, 0.0));
    }

    #[test]
    fn distribution_preserves_expectation() {
        for draw_base in [0.0, 0.2, 0.5, 0.9, 1.0] {
            let m = GameModel::new(draw_base);
            for gap in [-900.0, -250.0, -10.0, 0.0, 33.0, 400.0, 1200.0] {
                let (w, d, l): (f64, f64, f64) = game_distribution(2500.0 + gap, 2500.0, &m);
                assert!((w + d + l - 1.0).abs() < 1e-12);
                assert!([w, d, l].iter().all(|p| (0.0..=1.0).contains(p)));
                assert!((w + d / 2.0 - expected_score(2500.0 + gap, 2500.0)).abs() < 1e-12);
            }
        }
    }

    fn roster(elos: &[u32]) -> Vec<Player> {
        elos.iter().enumerate().map(|(i, &e)| Player::new(format!("p{i}"), format!("P{i}"), e)).collect()
    }

    #[test]
    fn dominant_player_always_wins() {
        let mut elos = vec![2500; 8];
        elos[3] = 4500;
        let r = roster(&elos);
        let cfg = TournamentConfig::new(vec![TierConfig::new(8, 0)], 0);
        let rep = run_replications(&cfg, &r, &GameModel::new(0.0), 1, 17).unwrap();
        assert_eq!(rep.stats(&PlayerId::new("p3")).unwrap().win_freq, 1.0);
    }

    #[test]
    fn report_is_seed_deterministic() {
        let r = roster(&[2600, 2610, 2620, 2630, 2640, 2650, 2660, 2670, 2680, 2690, 2700, 2710]);
        let cfg = TournamentConfig::new(vec![TierConfig::new(6, 2), TierConfig::new(6, 0)], 0);
        let a = run_replications(&cfg, &r, &GameModel::default(), 40, 5).unwrap();
        let b = run_replications(&cfg, &r, &GameModel::default(), 40, 5).unwrap();
        assert_eq!(a, b);
        let total: f64 = a.players.iter().map(|p| p.win_freq).sum();
        assert!((total - 1.0).abs() < 1e-12);
        // base tier players play 5 games, the rest play 7
        assert!(a.stats(&PlayerId::new("p0")).unwrap().mean_games >= 5.0);
        assert_eq!(a.stats(&PlayerId::new("p11")).unwrap().mean_games, 7.0);
    }

    #[test]
    fn simulated_log_replays() {
        let r = roster(&[2600, 2650, 2700, 2750, 2800, 2850]);
        let cfg = TournamentConfig::new(vec![TierConfig::new(3, 1), TierConfig::new(3, 0)], 0);
        let t = simulate_one(&cfg, &r, &GameModel::default(), 99).unwrap();
        let again = Tournament::from_log(t.log().to_vec(), Arc::new(FixedClock(0))).unwrap();
        assert_eq!(again.winner(), t.winner());
    }

    #[test]
    fn bracket_layout() {
        assert_eq!(bracket(2), vec![0, 1]);
        assert_eq!(bracket(4), vec![0, 3, 1, 2]);
        assert_eq!(bracket(8), vec![0, 7, 3, 4, 1, 6, 2, 5]);
    }

    #[test]
    fn knockout_needs_power_of_two() {
        let r = roster(&[2600, 2700, 2800]);
        assert!(matches!(
            run_baseline(Baseline::SeededKnockout, &r, &GameModel::default(), 10, 1),
            Err(SimError::RosterSizeUnsupported(3))
        ));
        assert!(matches!(
            run_replications(&TournamentConfig::new(vec![TierConfig::new(3, 0)], 0), &r, &GameModel::default(), 0, 1),
            Err(SimError::NoReplications)
        ));
    }

    #[test]
    fn knockout_games_are_decisive_in_the_end() {
        let r = roster(&[2600, 2700, 2800, 2900]);
        let rep = run_baseline(Baseline::SeededKnockout, &r, &GameModel::default(), 200, 3).unwrap();
        let total: u64 = rep.players.iter().map(|p| p.wins).sum();
        assert_eq!(total, 200);
        assert!(rep.players.iter().all(|p| p.mean_games >= 1.0));
    }

    #[test]
    fn csv_shape() {
        let r = roster(&[2600, 2700]);
        let cfg = TournamentConfig::new(vec![TierConfig::new(2, 0)], 0);
        let rep = run_replications(&cfg, &r, &GameModel::new(0.0), 4, 1).unwrap();
        let mut out = Vec::new();
        rep.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("player,win_freq,mean_games,mean_color_diff\np0,"));
        assert!(text.lines().nth(1).unwrap().ends_with(",1.000000,1.000000"));
        assert!(rep.summary().contains("replications: 4"));
    }
}
