//! Multi-tier tournaments.
//!
//! Players are seeded into skill tiers by Elo rating. Each tier plays one or
//! more round-robin mini-tournaments; the players with the highest Tier Score
//! move up, and the top player of the final tier wins. The crate covers the
//! whole lifecycle:
//!
//! * [`model`] and [`event`]: domain types and the append-only event log.
//! * [`state`]: the tournament state machine rebuilt from events.
//! * [`scoring`]: Tier Score, pairwise scores and the tie-break cascade.
//! * [`tiering`]: Elo tier assignment and balanced group construction.
//! * [`scheduling`]: color-fair round-robin schedules and their validation.
//! * [`engine`]: commands that drive a tournament from creation to winner.
//! * [`simulate`]: Monte Carlo evaluation under an Elo game model.
//! * [`analyze`]: replay of historical head-to-head data.
//!
//! Score arithmetic is generic over the integer type and probability
//! arithmetic over the float type (see [`scalar`]); the aliases below fix the
//! types used by the engine.

pub mod analyze;
pub mod engine;
pub mod event;
pub mod model;
pub mod rng;
pub mod scalar;
pub mod scheduling;
pub mod scoring;
pub mod simulate;
pub mod state;
pub mod tiering;

pub use engine::{EngineError, TierOutcome, Tournament};
pub use event::{Clock, Event, FixedClock, LoggedEvent, SystemClock};
pub use model::{
    Color, GameRecord, GameRef, GameResult, Player, PlayerId, TieBreakMode, TierConfig,
    TournamentConfig,
};
pub use scoring::{ScoreLine, TieBreakRule};
pub use state::TournamentState;

/// Exact rational used for mean Elo, mean pairwise scores and similar values.
pub type Ratio = num_rational::Ratio<i64>;

/// Tier Score with the engine's integer width.
pub type TierScore = scoring::TierScore<i64>;

/// Game model with `f64` probabilities.
pub type GameModel = simulate::GameModel<f64>;

/// Ranked standing keyed by Tier Score.
pub type RankedStanding = scoring::RankedStanding<TierScore>;
