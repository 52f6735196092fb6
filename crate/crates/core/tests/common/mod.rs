//! Fixtures shared by the integration tests: the top-20 roster of February
//! 2024, hand-authored results, and a brute-force recomputation of a whole
//! tournament from those results.
#![allow(dead_code)]

use std::collections::BTreeMap;

use mtt_core::{GameResult, Player, PlayerId, TierConfig, Tournament, TournamentConfig};

pub fn pid(s: &str) -> PlayerId {
    PlayerId::new(s)
}

pub fn table1() -> Vec<Player> {
    [
        ("carlsen", "M. Carlsen", 2830),
        ("caruana", "F. Caruana", 2804),
        ("nakamura", "H. Nakamura", 2788),
        ("ding", "Ding L.", 2762),
        ("giri", "A. Giri", 2762),
        ("firouzja", "A. Firouzja", 2760),
        ("nepomniachtchi", "I. Nepomniachtchi", 2758),
        ("so", "W. So", 2757),
        ("wei", "Wei Y.", 2755),
        ("dominguez", "L. Dominguez", 2752),
        ("praggnanandhaa", "R. Praggnanandhaa", 2747),
        ("vidit", "Vidit G.", 2747),
        ("abdusattorov", "N. Abdusattorov", 2744),
        ("gukesh", "Gukesh D.", 2743),
        ("keymer", "V. Keymer", 2738),
        ("erigaisi", "A. Erigaisi", 2738),
        ("mvl", "M. Vachier-Lagrave", 2732),
        ("duda", "J.-K. Duda", 2732),
        ("aronian", "L. Aronian", 2725),
        ("mamedyarov", "S. Mamedyarov", 2722),
    ]
    .into_iter()
    .map(|(id, name, elo)| Player::new(id, name, elo))
    .collect()
}

pub fn example1_config(seed: u64) -> TournamentConfig {
    TournamentConfig::new(vec![TierConfig::new(8, 2), TierConfig::new(6, 2), TierConfig::new(6, 0)], seed)
}

/// Imagined current form, best first. Unrelated to rating on purpose.
const FORM: [&str; 20] = [
    "mvl", "gukesh", "so", "carlsen", "keymer", "wei", "nakamura", "aronian", "praggnanandhaa", "ding",
    "duda", "caruana", "vidit", "firouzja", "erigaisi", "giri", "dominguez", "mamedyarov", "nepomniachtchi",
    "abdusattorov",
];

fn form(p: &PlayerId) -> usize {
    FORM.iter().position(|f| *f == p.as_str()).unwrap_or_else(|| p.as_str().bytes().map(usize::from).sum::<usize>() % 97 + 20)
}

/// Winner (None for a draw) and move count of the game between `a` and `b`,
/// whoever has White.
pub fn scripted(a: &PlayerId, b: &PlayerId) -> (Option<PlayerId>, u32) {
    let (i, j) = (form(a).min(form(b)), form(a).max(form(b)));
    let (strong, weak) = if form(a) < form(b) { (a, b) } else { (b, a) };
    let moves = 25 + ((i * 3 + j * 5) % 50) as u32;
    if (i + j) % 3 == 1 {
        (None, moves)
    } else if (i * j) % 11 == 6 {
        (Some(weak.clone()), moves)
    } else {
        (Some(strong.clone()), moves)
    }
}

pub fn scripted_result(white: &PlayerId, black: &PlayerId) -> (GameResult, u32) {
    let (winner, moves) = scripted(white, black);
    let result = match winner {
        None => GameResult::Draw,
        Some(w) if &w == white => GameResult::WhiteWin,
        Some(_) => GameResult::BlackWin,
    };
    (result, moves)
}

/// Enters the scripted result of every game in the active tier.
pub fn play_active_tier(t: &mut Tournament) {
    let tier = t.state().active_tier().expect("active tier").clone();
    for g in &tier.groups {
        for (game, board) in g.scheduled(tier.tier) {
            let (result, moves) = scripted_result(&board.white, &board.black);
            t.enter_result(game, result, moves).unwrap();
        }
    }
}

pub fn play_to_end(t: &mut Tournament) {
    while t.state().active_tier().is_some() {
        play_active_tier(t);
        t.complete_tier(true).unwrap();
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleRow {
    pub player: PlayerId,
    pub wins: u32,
    pub losses: u32,
    pub draws: u32,
}

#[derive(Debug, Clone)]
pub struct OracleTier {
    pub members: Vec<PlayerId>,
    pub rows: Vec<OracleRow>,
    pub promoted: Vec<PlayerId>,
}

/// Recomputes a single-group-per-tier tournament from the scripted results
/// alone: Elo order for tiers, everyone meets everyone once, Tier Score by
/// cross-multiplication, two-way ties by head-to-head, wins, then moves.
/// Panics on anything the fixture is not meant to produce.
pub fn oracle(config: &TournamentConfig, roster: &[Player]) -> (Vec<OracleTier>, PlayerId) {
    let mut by_elo = roster.to_vec();
    by_elo.sort_by_key(|p| p.elo);
    let mut next = 0;
    let mut carried: Vec<PlayerId> = Vec::new();
    let mut tiers = Vec::new();
    for (ti, tc) in config.tiers.iter().enumerate() {
        let mut members: Vec<PlayerId> = by_elo[next..next + tc.base_size].iter().map(|p| p.id.clone()).collect();
        next += tc.base_size;
        members.append(&mut carried);
        assert!(members.len() <= tc.max_group_size, "oracle handles single groups only");

        let mut stats: BTreeMap<PlayerId, (OracleRow, u64, u32)> = members
            .iter()
            .map(|p| (p.clone(), (OracleRow { player: p.clone(), wins: 0, losses: 0, draws: 0 }, 0, 0)))
            .collect();
        for (x, a) in members.iter().enumerate() {
            for b in &members[x + 1..] {
                let (winner, moves) = scripted(a, b);
                match winner {
                    None => {
                        stats.get_mut(a).unwrap().0.draws += 1;
                        stats.get_mut(b).unwrap().0.draws += 1;
                    }
                    Some(w) => {
                        let l = if &w == a { b } else { a };
                        let s = stats.get_mut(&w).unwrap();
                        s.0.wins += 1;
                        s.1 += u64::from(moves);
                        s.2 += 1;
                        stats.get_mut(l).unwrap().0.losses += 1;
                    }
                }
            }
        }
        let ts = |r: &OracleRow| (i64::from(r.wins) - i64::from(r.losses), i64::from(r.wins + r.losses + r.draws));
        let mut rows: Vec<OracleRow> = stats.values().map(|s| s.0.clone()).collect();
        rows.sort_by(|x, y| {
            let ((nx, dx), (ny, dy)) = (ts(x), ts(y));
            (ny * dx).cmp(&(nx * dy))
        });
        // two-way ties only
        let mut i = 0;
        while i < rows.len() {
            let mut j = i + 1;
            while j < rows.len() && ts(&rows[j]).0 * ts(&rows[i]).1 == ts(&rows[i]).0 * ts(&rows[j]).1 {
                j += 1;
            }
            assert!(j - i <= 2, "fixture produced a {}-way tie", j - i);
            if j - i == 2 {
                let (a, b) = (rows[i].player.clone(), rows[i + 1].player.clone());
                let a_first = match scripted(&a, &b).0 {
                    Some(w) => w == a,
                    None => {
                        let (sa, sb) = (&stats[&a], &stats[&b]);
                        if sa.0.wins != sb.0.wins {
                            sa.0.wins > sb.0.wins
                        } else {
                            assert!(sa.2 > 0 && sb.2 > 0, "fixture tie needs move counts");
                            let (ma, mb) = (sa.1 * u64::from(sb.2), sb.1 * u64::from(sa.2));
                            assert_ne!(ma, mb, "fixture tie would need a random draw");
                            ma < mb
                        }
                    }
                };
                if !a_first {
                    rows.swap(i, i + 1);
                }
            }
            i = j;
        }
        let last = ti + 1 == config.tiers.len();
        let promote = if last { 1 } else { tc.promote_count };
        let promoted: Vec<PlayerId> = rows[..promote].iter().map(|r| r.player.clone()).collect();
        carried = promoted.clone();
        tiers.push(OracleTier { members, rows, promoted });
    }
    let winner = tiers.last().unwrap().promoted[0].clone();
    (tiers, winner)
}

/// Raw rows of a random head-to-head history among `roster`: some pairs
/// never meet, others meet up to eight times, and a third of the games have
/// no move count.
pub fn synthetic_history(roster: &[Player], seed: u64) -> Vec<(PlayerId, PlayerId, GameResult, Option<u32>)> {
    use rand::Rng;
    let mut rng = mtt_core::rng::stream(seed, "history");
    let mut rows = Vec::new();
    for (i, a) in roster.iter().enumerate() {
        for b in &roster[i + 1..] {
            let meetings = if rng.random_bool(0.2) { 0 } else { rng.random_range(1..=8) };
            for _ in 0..meetings {
                let (w, bl) = if rng.random_bool(0.5) { (a, b) } else { (b, a) };
                let result = match rng.random_range(0..10) {
                    0..=2 => GameResult::WhiteWin,
                    3..=4 => GameResult::BlackWin,
                    _ => GameResult::Draw,
                };
                let moves = (!rng.random_bool(1.0 / 3.0)).then(|| rng.random_range(20..90));
                rows.push((w.id.clone(), bl.id.clone(), result, moves));
            }
        }
    }
    rows
}

/// Historical replay recomputed from raw rows: per tier, every member's mean
/// pairwise score (exact), sorted descending, and the promoted players.
/// Panics if a promotion boundary is tied, which this oracle does not decide.
pub fn history_oracle(
    rows: &[(PlayerId, PlayerId, GameResult, Option<u32>)],
    roster: &[Player],
    config: &TournamentConfig,
) -> (Vec<Vec<(PlayerId, mtt_core::Ratio)>>, PlayerId) {
    use mtt_core::Ratio;
    let pair_ts = |a: &PlayerId, b: &PlayerId| {
        let (mut diff, mut games) = (0i64, 0i64);
        for (w, bl, r, _) in rows {
            if !((w == a && bl == b) || (w == b && bl == a)) {
                continue;
            }
            games += 1;
            match r {
                GameResult::WhiteWin if w == a => diff += 1,
                GameResult::BlackWin if bl == a => diff += 1,
                GameResult::Draw => {}
                _ => diff -= 1,
            }
        }
        if games == 0 {
            Ratio::from_integer(0)
        } else {
            Ratio::new(diff, games)
        }
    };
    let mut by_elo = roster.to_vec();
    by_elo.sort_by_key(|p| p.elo);
    let mut next = 0;
    let mut carried = Vec::new();
    let mut tiers = Vec::new();
    for (ti, tc) in config.tiers.iter().enumerate() {
        let mut members: Vec<PlayerId> = by_elo[next..next + tc.base_size].iter().map(|p| p.id.clone()).collect();
        next += tc.base_size;
        members.append(&mut carried);
        let opponents = members.len() as i64 - 1;
        let mut table: Vec<(PlayerId, Ratio)> = members
            .iter()
            .map(|a| {
                let sum = members.iter().filter(|b| *b != a).fold(Ratio::from_integer(0), |s, b| s + pair_ts(a, b));
                (a.clone(), sum / opponents)
            })
            .collect();
        table.sort_by_key(|x| std::cmp::Reverse(x.1));
        let promote = if ti + 1 == config.tiers.len() { 1 } else { tc.promote_count };
        if promote < table.len() {
            assert_ne!(table[promote - 1].1, table[promote].1, "tied promotion boundary in tier {}", ti + 1);
        }
        carried = table[..promote].iter().map(|(p, _)| p.clone()).collect();
        tiers.push(table);
    }
    let winner = carried[0].clone();
    (tiers, winner)
}
