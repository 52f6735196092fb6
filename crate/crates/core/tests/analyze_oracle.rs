mod common;

use std::collections::BTreeMap;

use common::*;
use mtt_core::analyze::{crosstable, ingest_games, pair_record, replay_historical, HeadToHeadDb, HistoricalGame};
use mtt_core::rng::stream;
use mtt_core::scoring::mean_pairwise_ts;
use mtt_core::{GameResult, Player, PlayerId, Ratio};

fn db_from(rows: &[(PlayerId, PlayerId, GameResult, Option<u32>)]) -> HeadToHeadDb {
    HeadToHeadDb::new(
        rows.iter()
            .map(|(w, b, r, m)| HistoricalGame { white: w.clone(), black: b.clone(), result: *r, moves: *m, date: None })
            .collect(),
    )
}

#[test]
fn twenty_player_replay_matches_oracle() {
    let roster = table1();
    let config = example1_config(0);
    let rows = synthetic_history(&roster, 1209);
    let (expected, winner) = history_oracle(&rows, &roster, &config);
    let report = replay_historical(&db_from(&rows), &roster, &config, &mut stream(5, "replay")).unwrap();
    assert_eq!(report.tiers.len(), expected.len());
    for (tier, want) in report.tiers.iter().zip(&expected) {
        let got: BTreeMap<&PlayerId, Ratio> = tier.rows.iter().map(|r| (&r.player, r.mean_ts)).collect();
        let want_map: BTreeMap<&PlayerId, Ratio> = want.iter().map(|(p, m)| (p, *m)).collect();
        assert_eq!(got, want_map, "tier {}", tier.tier);
        let got_means: Vec<Ratio> = tier.rows.iter().map(|r| r.mean_ts).collect();
        let want_means: Vec<Ratio> = want.iter().map(|(_, m)| *m).collect();
        assert_eq!(got_means, want_means, "tier {} order", tier.tier);
    }
    for (tier, want) in report.tiers.iter().zip(&expected).take(2) {
        let promoted: Vec<&PlayerId> = want.iter().take(2).map(|(p, _)| p).collect();
        assert_eq!(tier.promoted.iter().collect::<Vec<_>>(), promoted);
    }
    assert_eq!(report.winner, winner);
}

#[test]
fn crosstable_matches_a_recount() {
    let roster = table1();
    let rows = synthetic_history(&roster, 7);
    let db = db_from(&rows);
    let ids: Vec<PlayerId> = roster.iter().map(|p| p.id.clone()).collect();
    for ((a, b), rec) in crosstable(&db, &ids) {
        let mut count = (0, 0, 0);
        for (w, bl, r, _) in &rows {
            if !((w == &a && bl == &b) || (w == &b && bl == &a)) {
                continue;
            }
            match (r, w == &a) {
                (GameResult::Draw, _) => count.2 += 1,
                (GameResult::WhiteWin, true) | (GameResult::BlackWin, false) => count.0 += 1,
                _ => count.1 += 1,
            }
        }
        assert_eq!((rec.wins_a, rec.wins_b, rec.draws), count);
        assert_eq!(rec.games, count.0 + count.1 + count.2);
        assert_eq!(pair_record(&db, &b, &a), rec.swapped());
    }
}

#[test]
fn removing_a_pair_zeroes_its_term() {
    let roster: Vec<Player> = table1().into_iter().take(8).collect();
    let ids: Vec<PlayerId> = roster.iter().map(|p| p.id.clone()).collect();
    let rows = synthetic_history(&roster, 3);
    let (a, b) = rows.iter().map(|(w, bl, _, _)| (w.clone(), bl.clone())).next().unwrap();
    let pruned: Vec<_> = rows.iter().filter(|(w, bl, _, _)| !((w == &a && bl == &b) || (w == &b && bl == &a))).cloned().collect();
    let (full, cut) = (db_from(&rows), db_from(&pruned));
    let others = |p: &PlayerId| ids.iter().filter(|q| *q != p).cloned().collect::<Vec<_>>();
    let term = |db: &HeadToHeadDb, x: &PlayerId, y: &PlayerId| mean_pairwise_ts::<i64, _>(x, std::slice::from_ref(y), db).unwrap();
    assert_eq!(term(&cut, &a, &b), Ratio::from_integer(0));
    for (x, y) in [(&a, &b), (&b, &a)] {
        let before = mean_pairwise_ts::<i64, _>(x, &others(x), &full).unwrap();
        let after = mean_pairwise_ts::<i64, _>(x, &others(x), &cut).unwrap();
        assert_eq!(before - after, term(&full, x, y) / 7);
    }
}

#[test]
fn scaling_ratings_changes_nothing_within_tiers() {
    let roster = table1();
    let config = example1_config(0);
    let db = db_from(&synthetic_history(&roster, 11));
    let base = replay_historical(&db, &roster, &config, &mut stream(1, "r")).unwrap();
    for factor in [2u32, 3, 7] {
        let scaled: Vec<Player> = roster.iter().map(|p| Player { elo: p.elo * factor, ..p.clone() }).collect();
        assert_eq!(replay_historical(&db, &scaled, &config, &mut stream(1, "r")).unwrap(), base);
    }
}

#[test]
fn ingest_conserves_rows() {
    let roster: Vec<Player> = table1().into_iter().take(6).collect();
    let rows = synthetic_history(&roster, 5);
    let mut text = String::from("white,black,result,moves,date\n");
    for (i, (w, b, r, m)) in rows.iter().enumerate() {
        let token = if i % 9 == 4 { "1:0" } else { r.token() };
        text.push_str(&format!("{w},{b},{token},{},2020-01-01\n", m.map(|m| m.to_string()).unwrap_or_default()));
    }
    let ing = ingest_games(text.as_bytes()).unwrap();
    assert_eq!(ing.rows, rows.len());
    assert_eq!(ing.db.len() + ing.rejected.len(), rows.len());
    assert_eq!(ing.rejected.len(), (0..rows.len()).filter(|i| i % 9 == 4).count());
}
