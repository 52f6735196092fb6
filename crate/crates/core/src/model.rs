//! Domain types shared by every module, and configuration validation.

use std::collections::BTreeSet;
use std::fmt;
use std::io;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlayerId(pub String);

impl PlayerId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PlayerId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Player {
    pub id: PlayerId,
    pub name: String,
    pub elo: u32,
}

impl Player {
    pub fn new(id: impl Into<String>, name: impl Into<String>, elo: u32) -> Self {
        Self { id: PlayerId::new(id), name: name.into(), elo }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Color {
    White,
    Black,
    Bye,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GameResult {
    WhiteWin,
    BlackWin,
    Draw,
}

impl GameResult {
    pub fn token(self) -> &'static str {
        match self {
            GameResult::WhiteWin => "1-0",
            GameResult::BlackWin => "0-1",
            GameResult::Draw => "1/2-1/2",
        }
    }
}

impl fmt::Display for GameResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown result token {0:?} (expected 1-0, 0-1 or 1/2-1/2)")]
pub struct UnknownResultToken(pub String);

impl FromStr for GameResult {
    type Err = UnknownResultToken;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "1-0" => Ok(GameResult::WhiteWin),
            "0-1" => Ok(GameResult::BlackWin),
            "1/2-1/2" | "½-½" => Ok(GameResult::Draw),
            other => Err(UnknownResultToken(other.to_owned())),
        }
    }
}

/// Address of one scheduled game: tier, group, round and board, all 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GameRef {
    pub tier: u32,
    pub group: u32,
    pub round: u32,
    pub board: u32,
}

impl fmt::Display for GameRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}-g{}-r{}-b{}", self.tier, self.group, self.round, self.board)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed game reference {0:?} (expected t<tier>-g<group>-r<round>-b<board>)")]
pub struct BadGameRef(pub String);

impl FromStr for GameRef {
    type Err = BadGameRef;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BadGameRef(s.to_owned());
        let mut parts = s.trim().split('-');
        let mut field = |prefix: char| -> Result<u32, BadGameRef> {
            let p = parts.next().ok_or_else(bad)?;
            let rest = p.strip_prefix(prefix).ok_or_else(bad)?;
            let n: u32 = rest.parse().map_err(|_| bad())?;
            if n == 0 {
                return Err(bad());
            }
            Ok(n)
        };
        let tier = field('t')?;
        let group = field('g')?;
        let round = field('r')?;
        let board = field('b')?;
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(GameRef { tier, group, round, board })
    }
}

impl Serialize for GameRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GameRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One finished (or forfeited) game.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameRecord {
    pub game: GameRef,
    pub white: PlayerId,
    pub black: PlayerId,
    pub result: GameResult,
    /// Full moves; 0 for a forfeit.
    pub moves: u32,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub forfeit: bool,
}

impl GameRecord {
    pub fn involves(&self, p: &PlayerId) -> bool {
        &self.white == p || &self.black == p
    }

    pub fn winner(&self) -> Option<&PlayerId> {
        match self.result {
            GameResult::WhiteWin => Some(&self.white),
            GameResult::BlackWin => Some(&self.black),
            GameResult::Draw => None,
        }
    }

    pub fn color_of(&self, p: &PlayerId) -> Option<Color> {
        if &self.white == p {
            Some(Color::White)
        } else if &self.black == p {
            Some(Color::Black)
        } else {
            None
        }
    }
}

fn default_max_group_size() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TierConfig {
    #[serde(alias = "baseSize")]
    pub base_size: usize,
    #[serde(alias = "promoteCount")]
    pub promote_count: usize,
    #[serde(default = "default_max_group_size", alias = "maxGroupSize")]
    pub max_group_size: usize,
}

impl TierConfig {
    pub fn new(base_size: usize, promote_count: usize) -> Self {
        Self { base_size, promote_count, max_group_size: default_max_group_size() }
    }

    pub fn with_max_group_size(mut self, max_group_size: usize) -> Self {
        self.max_group_size = max_group_size;
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieBreakMode {
    /// The engine resolves rule (iv) itself.
    #[default]
    Auto,
    /// A director confirms rule (iv) whenever it decides a promotion or the winner.
    Interactive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TournamentConfig {
    /// Tier 1 (lowest rated) first.
    pub tiers: Vec<TierConfig>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, alias = "tieBreakMode")]
    pub tie_break_mode: TieBreakMode,
}

impl TournamentConfig {
    pub fn new(tiers: Vec<TierConfig>, seed: u64) -> Self {
        Self { tiers, seed, tie_break_mode: TieBreakMode::Auto }
    }

    /// Players competing in tier `tier` (1-based): its base players plus those
    /// promoted from the tier below.
    pub fn tier_size(&self, tier: usize) -> usize {
        let base = self.tiers[tier - 1].base_size;
        if tier == 1 {
            base
        } else {
            base + self.tiers[tier - 2].promote_count
        }
    }

    /// Number of round-robin groups tier `tier` is split into.
    pub fn group_count(&self, tier: usize) -> usize {
        let size = self.tier_size(tier);
        let max = self.tiers[tier - 1].max_group_size;
        if size <= max {
            1
        } else {
            size / max
        }
    }

    pub fn final_tier(&self) -> usize {
        self.tiers.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("configuration has no tiers")]
    NoTiers,
    #[error("tier sizes sum to {expected} but the roster has {actual} players")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("tier {tier} would have {size} players; at least 2 are needed")]
    DegenerateTier { tier: usize, size: usize },
    #[error("duplicate player id {0}")]
    DuplicatePlayer(PlayerId),
    #[error("player {0} has a non-positive rating")]
    InvalidRating(PlayerId),
    #[error("tier {tier} has base size 0")]
    EmptyBase { tier: usize },
    #[error("final tier must promote nobody (promote_count = {0})")]
    FinalTierPromotes(usize),
    #[error("tier {tier} promotes {promote} of only {size} players")]
    PromotionTooLarge { tier: usize, promote: usize, size: usize },
    #[error("tier {tier} has max_group_size {size}; at least 2 is needed")]
    InvalidGroupSize { tier: usize, size: usize },
    #[error("tier {tier} has {size} players, not divisible into groups of {group_size}")]
    IndivisibleTier { tier: usize, size: usize, group_size: usize },
}

/// Checks `config` against `roster` and returns it unchanged when valid.
pub fn validate_config(
    config: &TournamentConfig,
    roster: &[Player],
) -> Result<TournamentConfig, ConfigError> {
    if config.tiers.is_empty() {
        return Err(ConfigError::NoTiers);
    }
    let mut seen = BTreeSet::new();
    for p in roster {
        if !seen.insert(&p.id) {
            return Err(ConfigError::DuplicatePlayer(p.id.clone()));
        }
        if p.elo == 0 {
            return Err(ConfigError::InvalidRating(p.id.clone()));
        }
    }
    let expected: usize = config.tiers.iter().map(|t| t.base_size).sum();
    if expected != roster.len() {
        return Err(ConfigError::SizeMismatch { expected, actual: roster.len() });
    }
    let last = config.tiers.len();
    if config.tiers[last - 1].promote_count != 0 {
        return Err(ConfigError::FinalTierPromotes(config.tiers[last - 1].promote_count));
    }
    for (i, t) in config.tiers.iter().enumerate() {
        let tier = i + 1;
        if t.base_size == 0 {
            return Err(ConfigError::EmptyBase { tier });
        }
        let size = config.tier_size(tier);
        if size < 2 {
            return Err(ConfigError::DegenerateTier { tier, size });
        }
        if t.promote_count >= size {
            return Err(ConfigError::PromotionTooLarge { tier, promote: t.promote_count, size });
        }
        if t.max_group_size < 2 {
            return Err(ConfigError::InvalidGroupSize { tier, size: t.max_group_size });
        }
        if size > t.max_group_size && !size.is_multiple_of(t.max_group_size) {
            return Err(ConfigError::IndivisibleTier { tier, size, group_size: t.max_group_size });
        }
    }
    Ok(config.clone())
}

#[derive(Debug, Error)]
pub enum RosterError {
    #[error("roster csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("roster io: {0}")]
    Io(#[from] io::Error),
}

/// Reads a roster CSV with header `id,name,elo`.
pub fn read_roster<R: io::Read>(reader: R) -> Result<Vec<Player>, RosterError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let p: Player = row?;
        out.push(p);
    }
    Ok(out)
}

pub fn write_roster<W: io::Write>(writer: W, roster: &[Player]) -> Result<(), RosterError> {
    let mut w = csv::Writer::from_writer(writer);
    for p in roster {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roster(n: usize) -> Vec<Player> {
        (0..n).map(|i| Player::new(format!("p{i:02}"), format!("Player {i}"), 2700 + i as u32)).collect()
    }

    fn example1() -> TournamentConfig {
        TournamentConfig::new(
            vec![TierConfig::new(8, 2), TierConfig::new(6, 2), TierConfig::new(6, 0)],
            1,
        )
    }

    #[test]
    fn example_one_is_valid() {
        assert!(validate_config(&example1(), &roster(20)).is_ok());
        let c = example1();
        assert_eq!((c.tier_size(1), c.tier_size(2), c.tier_size(3)), (8, 8, 8));
    }

    #[test]
    fn example_two_is_valid() {
        let c = TournamentConfig::new(vec![TierConfig::new(30, 3), TierConfig::new(7, 0)], 1);
        assert!(validate_config(&c, &roster(37)).is_ok());
        assert_eq!(c.group_count(1), 3);
        assert_eq!(c.group_count(2), 1);
        assert_eq!(c.tier_size(2), 10);
    }

    #[test]
    fn size_mismatch() {
        assert_eq!(
            validate_config(&example1(), &roster(19)),
            Err(ConfigError::SizeMismatch { expected: 20, actual: 19 })
        );
    }

    #[test]
    fn duplicates_and_ratings() {
        let mut r = roster(20);
        r[3].id = r[4].id.clone();
        assert_eq!(validate_config(&example1(), &r), Err(ConfigError::DuplicatePlayer(r[4].id.clone())));
        let mut r = roster(20);
        r[0].elo = 0;
        assert!(matches!(validate_config(&example1(), &r), Err(ConfigError::InvalidRating(_))));
    }

    #[test]
    fn degenerate_and_indivisible() {
        let c = TournamentConfig::new(vec![TierConfig::new(1, 0)], 1);
        assert_eq!(validate_config(&c, &roster(1)), Err(ConfigError::DegenerateTier { tier: 1, size: 1 }));
        let c = TournamentConfig::new(
            vec![TierConfig::new(25, 2).with_max_group_size(10), TierConfig::new(3, 0)],
            1,
        );
        assert!(matches!(validate_config(&c, &roster(28)), Err(ConfigError::IndivisibleTier { .. })));
        let c = TournamentConfig::new(vec![TierConfig::new(4, 1)], 1);
        assert_eq!(validate_config(&c, &roster(4)), Err(ConfigError::FinalTierPromotes(1)));
    }

    #[test]
    fn two_player_tiers() {
        let c = TournamentConfig::new(vec![TierConfig::new(1, 1), TierConfig::new(1, 0)], 1);
        assert_eq!(validate_config(&c, &roster(2)), Err(ConfigError::DegenerateTier { tier: 1, size: 1 }));
        let c = TournamentConfig::new(vec![TierConfig::new(2, 1), TierConfig::new(1, 0)], 1);
        assert!(validate_config(&c, &roster(3)).is_ok());
    }

    #[test]
    fn result_tokens() {
        for r in [GameResult::WhiteWin, GameResult::BlackWin, GameResult::Draw] {
            assert_eq!(r.token().parse::<GameResult>().unwrap(), r);
        }
        assert!("2-0".parse::<GameResult>().is_err());
    }

    #[test]
    fn game_refs() {
        let g: GameRef = "t1-g2-r3-b4".parse().unwrap();
        assert_eq!(g, GameRef { tier: 1, group: 2, round: 3, board: 4 });
        assert_eq!(g.to_string(), "t1-g2-r3-b4");
        for bad in ["", "t1-g2-r3", "t0-g1-r1-b1", "x1-g1-r1-b1", "t1-g1-r1-b1-c1", "t1-g1-r1-bx"] {
            assert!(bad.parse::<GameRef>().is_err(), "{bad}");
        }
    }

    #[test]
    fn roster_csv() {
        let text = "id,name,elo\ncarlsen,M. Carlsen,2830\naronian,L. Aronian,2725\n";
        let r = read_roster(text.as_bytes()).unwrap();
        assert_eq!(r[0], Player::new("carlsen", "M. Carlsen", 2830));
        let mut out = Vec::new();
        write_roster(&mut out, &r).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
        assert!(read_roster("id,name,elo\nx,y,abc\n".as_bytes()).is_err());
    }
}
