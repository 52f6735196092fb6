//! Pairing sheets and standings tables for a running tournament.

use std::io;

use mtt_core::engine::write_standings_csv;
use mtt_core::state::{GroupStanding, TierRun};
use mtt_core::{GameRef, PlayerId};

/// One line of a pairing sheet: a board, or a bye when `game` is `None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairingLine {
    pub game: Option<GameRef>,
    pub round: u32,
    pub group: u32,
    pub white: Option<PlayerId>,
    pub black: Option<PlayerId>,
    pub bye: Option<PlayerId>,
}

/// Pairings of `tier`, round by round, groups in order within a round.
/// `round = None` lists every round.
pub fn pairing_lines(tier: &TierRun, round: Option<u32>) -> Vec<PairingLine> {
    let mut out = Vec::new();
    for g in &tier.groups {
        for r in g.rounds.iter().flatten().filter(|r| round.is_none_or(|n| n == r.round)) {
            for (i, b) in r.boards.iter().enumerate() {
                out.push(PairingLine {
                    game: Some(GameRef { tier: tier.tier, group: g.group, round: r.round, board: i as u32 + 1 }),
                    round: r.round,
                    group: g.group,
                    white: Some(b.white.clone()),
                    black: Some(b.black.clone()),
                    bye: None,
                });
            }
            if let Some(p) = &r.bye {
                out.push(PairingLine { game: None, round: r.round, group: g.group, white: None, black: None, bye: Some(p.clone()) });
            }
        }
    }
    out.sort_by_key(|l| (l.round, l.group, l.game.is_none(), l.game));
    out
}

/// CSV with header `game,round,white,black,bye`.
pub fn write_pairings_csv<W: io::Write>(writer: W, lines: &[PairingLine]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["game", "round", "white", "black", "bye"])?;
    let s = |p: &Option<PlayerId>| p.as_ref().map(|p| p.to_string()).unwrap_or_default();
    for l in lines {
        let game = l.game.map(|g| g.to_string()).unwrap_or_default();
        w.write_record([game, l.round.to_string(), s(&l.white), s(&l.black), s(&l.bye)])?;
    }
    w.flush()?;
    Ok(())
}

/// One standings CSV block per group, separated by blank lines.
pub fn write_standings_blocks<W: io::Write>(mut writer: W, standings: &[GroupStanding]) -> io::Result<()> {
    for (i, g) in standings.iter().enumerate() {
        if i > 0 {
            writeln!(writer)?;
        }
        write_standings_csv(&mut writer, g)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use mtt_core::scheduling::{Board, RoundPairing};
    use mtt_core::state::GroupRun;
    use mtt_core::Ratio;

    fn pid(s: &str) -> PlayerId {
        PlayerId::new(s)
    }

    fn group(group: u32, rounds: Vec<RoundPairing>) -> GroupRun {
        GroupRun {
            group,
            members: Vec::new(),
            mean_elo: Ratio::from_integer(0),
            rounds: Some(rounds),
            results: Default::default(),
            forfeited: Default::default(),
        }
    }

    fn tier() -> TierRun {
        let board = |w: &str, b: &str| Board { white: pid(w), black: pid(b) };
        let g1 = group(
            1,
            vec![
                RoundPairing { round: 1, boards: vec![board("a", "b")], bye: Some(pid("c")) },
                RoundPairing { round: 2, boards: vec![board("c", "a")], bye: Some(pid("b")) },
            ],
        );
        let g2 = group(2, vec![RoundPairing { round: 1, boards: vec![board("x", "y")], bye: None }]);
        TierRun {
            tier: 2,
            members: Vec::new(),
            target_mean: None,
            groups: vec![g1, g2],
            standings: Vec::new(),
            promoted: Vec::new(),
            completed: false,
        }
    }

    #[test]
    fn rounds_interleave_groups() {
        let lines = pairing_lines(&tier(), None);
        let order: Vec<(u32, u32, bool)> = lines.iter().map(|l| (l.round, l.group, l.bye.is_some())).collect();
        assert_eq!(order, vec![(1, 1, false), (1, 1, true), (1, 2, false), (2, 1, false), (2, 1, true)]);
        assert_eq!(pairing_lines(&tier(), Some(2)).len(), 2);
    }

    #[test]
    fn csv_rows() {
        let mut buf = Vec::new();
        write_pairings_csv(&mut buf, &pairing_lines(&tier(), Some(1))).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "game,round,white,black,bye\nt2-g1-r1-b1,1,a,b,\n,1,,,c\nt2-g2-r1-b1,1,x,y,\n");
    }
}
