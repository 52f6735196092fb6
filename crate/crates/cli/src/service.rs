//! HTTP service for live operation of tournaments.
//!
//! Each tournament is one log file `<dir>/<id>.log`. Mutations run against a
//! copy of the tournament, are appended and synced to the log, and only then
//! replace the in-memory copy and get a response. Requests for one tournament
//! are serialized by its own lock; different tournaments never contend.

use std::collections::HashMap;
use std::fs;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use mtt_core::engine::{standings, EngineError, TierOutcome};
use mtt_core::event::{append_log, read_log, write_log};
use mtt_core::model::read_roster;
use mtt_core::state::{GroupStanding, Phase, RandomTieRecord, TierRun};
use mtt_core::{
    Clock, GameRef, GameResult, LoggedEvent, Player, PlayerId, SystemClock, TieBreakMode, TieBreakRule, Tournament,
    TournamentConfig,
};
use serde::{Deserialize, Serialize};

use crate::files::parse_config;
use crate::output::pairing_lines;

type Shared = Arc<tokio::sync::Mutex<Tournament>>;

/// Error body returned with every non-2xx status (and with the 202 that asks
/// for a tie-break confirmation).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ApiErrorBody {
    pub status: u16,
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub missing: Option<Vec<GameRef>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tied_players: Option<Vec<PlayerId>>,
}

#[derive(Debug, Clone)]
pub struct ApiError {
    status: StatusCode,
    body: ApiErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ApiErrorBody {
                status: status.as_u16(),
                code: code.to_owned(),
                message: message.into(),
                missing: None,
                tied_players: None,
            },
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "InvalidRequest", message)
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string())
    }

    fn unknown_tournament(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "UnknownTournament", format!("no tournament {id:?}"))
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let status = match &e {
            EngineError::Config(_) | EngineError::Tiering(_) | EngineError::InvalidMoveCount => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            EngineError::UnknownGame(_) | EngineError::UnknownPlayer(_) => StatusCode::NOT_FOUND,
            EngineError::PendingDecision { .. } => StatusCode::ACCEPTED,
            EngineError::Scheduling(_) | EngineError::Scoring(_) => StatusCode::INTERNAL_SERVER_ERROR,
            EngineError::IllegalTransition(_)
            | EngineError::AlreadyReported(_)
            | EngineError::TierClosed(_)
            | EngineError::IncompleteResults { .. }
            | EngineError::NotActive(_)
            | EngineError::NoActiveTier => StatusCode::CONFLICT,
        };
        let mut err = ApiError::new(status, e.code(), e.to_string());
        match e {
            EngineError::IncompleteResults { missing } => err.body.missing = Some(missing),
            EngineError::PendingDecision { tied, .. } => err.body.tied_players = Some(tied),
            _ => {}
        }
        err
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

/// Log directory plus the tournaments opened so far.
pub struct AppState {
    dir: PathBuf,
    clock: Arc<dyn Clock>,
    open: Mutex<HashMap<String, Shared>>,
}

impl AppState {
    pub fn new(dir: impl Into<PathBuf>, clock: Arc<dyn Clock>) -> Self {
        AppState { dir: dir.into(), clock, open: Mutex::new(HashMap::new()) }
    }

    fn log_path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.log"))
    }

    /// The tournament `id`, loaded from its log on first use.
    fn lookup(&self, id: &str) -> Result<Shared, ApiError> {
        if !safe_name(id) {
            return Err(ApiError::unknown_tournament(id));
        }
        let mut open = self.open.lock().expect("registry lock");
        if let Some(t) = open.get(id) {
            return Ok(t.clone());
        }
        let path = self.log_path(id);
        if !path.is_file() {
            return Err(ApiError::unknown_tournament(id));
        }
        let log = read_log(&path).map_err(ApiError::internal)?;
        let t = Tournament::from_log(log, self.clock.clone())?;
        let shared = Arc::new(tokio::sync::Mutex::new(t));
        open.insert(id.to_owned(), shared.clone());
        Ok(shared)
    }

    async fn read<T>(&self, id: &str, f: impl FnOnce(&Tournament) -> Result<T, ApiError>) -> Result<T, ApiError> {
        let shared = self.lookup(id)?;
        let t = shared.lock().await;
        f(&t)
    }

    /// Runs `f` on a copy; new events are synced to disk before the copy
    /// replaces the live tournament.
    async fn mutate<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut Tournament) -> Result<T, ApiError>,
    ) -> Result<T, ApiError> {
        let shared = self.lookup(id)?;
        let mut live = shared.lock().await;
        let mut next = live.clone();
        let before = next.log().len();
        let out = f(&mut next)?;
        if next.log().len() > before {
            append_log(&self.log_path(id), &next.log()[before..]).map_err(ApiError::internal)?;
            *live = next;
        }
        Ok(out)
    }

    fn resolve_config(&self, name: &str) -> Result<TournamentConfig, ApiError> {
        if !safe_name(name) {
            return Err(ApiError::bad_request(format!("invalid configRef {name:?}")));
        }
        for (ext, toml) in [("json", false), ("toml", true)] {
            let path = self.dir.join("configs").join(format!("{name}.{ext}"));
            if let Ok(text) = fs::read_to_string(&path) {
                return parse_config(&text, toml).map_err(|e| {
                    ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "InvalidConfig", format!("{name}: {e:#}"))
                });
            }
        }
        Err(ApiError::new(StatusCode::NOT_FOUND, "UnknownConfig", format!("no config named {name:?}")))
    }
}

fn safe_name(s: &str) -> bool {
    !s.is_empty() && s.len() <= 128 && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(e.to_string()))
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RosterInput {
    Players(Vec<Player>),
    /// Roster CSV with header `id,name,elo`.
    Csv(String),
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct CreateRequest {
    config_ref: Option<String>,
    config: Option<TournamentConfig>,
    roster: RosterInput,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ResultRequest {
    game_ref: String,
    result: String,
    moves: u32,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ForfeitRequest {
    player: PlayerId,
    #[serde(default)]
    reason: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TieBreakRequest {
    accept: bool,
}

#[derive(Debug, Deserialize)]
struct TierQuery {
    tier: Option<String>,
    round: Option<String>,
    since: Option<String>,
}

fn number<T: std::str::FromStr>(name: &str, v: &Option<String>) -> Result<Option<T>, ApiError> {
    v.as_deref()
        .map(|s| s.parse().map_err(|_| ApiError::bad_request(format!("{name} must be a non-negative integer"))))
        .transpose()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Created {
    pub tournament_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GroupView {
    pub group: u32,
    pub members: Vec<PlayerId>,
    pub mean_elo: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TierView {
    pub tier: u32,
    pub members: Vec<PlayerId>,
    pub groups: Vec<GroupView>,
    pub promoted: Vec<PlayerId>,
    pub completed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Snapshot {
    pub tournament_id: String,
    pub phase: String,
    pub tie_break_mode: TieBreakMode,
    /// Tier in progress, or the last one played.
    pub tier: Option<u32>,
    /// Lowest round of the active tier with an unreported game.
    pub round: Option<u32>,
    pub pending_games: Vec<GameRef>,
    pub tiers: Vec<TierView>,
    pub roster: Vec<Player>,
    pub random_ties: Vec<RandomTieRecord>,
    pub winner: Option<PlayerId>,
    /// Sequence number the next event will get.
    pub next_event: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PairingView {
    pub game_ref: Option<GameRef>,
    pub round: u32,
    pub group: u32,
    pub white: Option<PlayerId>,
    pub black: Option<PlayerId>,
    pub bye: Option<PlayerId>,
    pub result: Option<String>,
    pub moves: Option<u32>,
    pub forfeit: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PairingsView {
    pub tier: u32,
    pub round: Option<u32>,
    pub pairings: Vec<PairingView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RowView {
    pub rank: usize,
    pub player: PlayerId,
    pub wins: u32,
    pub losses: u32,
    pub draws: u32,
    pub ts_num: i64,
    pub ts_den: i64,
    pub ts: f64,
    /// Rule that put this row below the previous one: `score`, `i`..`iv`.
    pub tiebreak: String,
    pub tiebreak_reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GroupStandingView {
    pub group: u32,
    pub rows: Vec<RowView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StandingsView {
    pub tier: u32,
    pub is_final: bool,
    pub groups: Vec<GroupStandingView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OutcomeView {
    pub tier: u32,
    pub standings: Vec<GroupStandingView>,
    pub promoted: Vec<PlayerId>,
    pub winner: Option<PlayerId>,
    pub decisive_random_ties: Vec<Vec<PlayerId>>,
    /// The tier the promoted players now play in, with its new groups.
    pub next_tier: Option<TierView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EventsView {
    pub events: Vec<LoggedEvent>,
    pub next: u64,
}

fn phase_name(p: Phase) -> &'static str {
    match p {
        Phase::New => "new",
        Phase::Created => "created",
        Phase::TierActive { .. } => "tier_active",
        Phase::TierCompleted { .. } => "tier_completed",
        Phase::Completed => "completed",
    }
}

fn tier_view(t: &TierRun) -> TierView {
    TierView {
        tier: t.tier,
        members: t.members.clone(),
        groups: t
            .groups
            .iter()
            .map(|g| GroupView {
                group: g.group,
                members: g.members.clone(),
                mean_elo: *g.mean_elo.numer() as f64 / *g.mean_elo.denom() as f64,
            })
            .collect(),
        promoted: t.promoted.clone(),
        completed: t.completed,
    }
}

fn snapshot(id: &str, t: &Tournament) -> Snapshot {
    let s = t.state();
    let active = s.active_tier();
    Snapshot {
        tournament_id: id.to_owned(),
        phase: phase_name(t.phase()).to_owned(),
        tie_break_mode: s.config.as_ref().map(|c| c.tie_break_mode).unwrap_or_default(),
        tier: s.current_tier().map(|t| t.tier),
        round: active.and_then(TierRun::current_round),
        pending_games: active.map(TierRun::pending).unwrap_or_default(),
        tiers: s.tiers.iter().map(tier_view).collect(),
        roster: s.roster.clone(),
        random_ties: s.random_ties.clone(),
        winner: s.winner.clone(),
        next_event: t.log().len() as u64,
    }
}

fn standing_views(groups: &[GroupStanding]) -> Vec<GroupStandingView> {
    groups
        .iter()
        .map(|g| GroupStandingView {
            group: g.group,
            rows: g
                .rows
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let rule = r.separated_by.unwrap_or(TieBreakRule::Score);
                    RowView {
                        rank: i + 1,
                        player: r.player.clone(),
                        wins: r.wins,
                        losses: r.losses,
                        draws: r.draws,
                        ts_num: r.ts_num,
                        ts_den: r.ts_den,
                        ts: if r.ts_den == 0 { 0.0 } else { r.ts_num as f64 / r.ts_den as f64 },
                        tiebreak: rule.label().to_owned(),
                        tiebreak_reason: rule.describe().to_owned(),
                    }
                })
                .collect(),
        })
        .collect()
}

fn pick_tier(t: &Tournament, requested: Option<u32>) -> Result<&TierRun, ApiError> {
    let s = t.state();
    let tier = match requested {
        Some(n) => s.tier(n),
        None => s.current_tier(),
    };
    tier.ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "UnknownTier", "no such tier"))
}

fn standings_view(t: &Tournament, tier: u32) -> StandingsView {
    let completed = t.state().tier(tier).is_some_and(|r| r.completed);
    StandingsView { tier, is_final: completed, groups: standing_views(&standings(t.state(), tier)) }
}

fn outcome_view(t: &Tournament, o: &TierOutcome) -> OutcomeView {
    OutcomeView {
        tier: o.tier,
        standings: standing_views(&o.standings),
        promoted: o.promoted.clone(),
        winner: o.winner.clone(),
        decisive_random_ties: o.decisive_random_ties.clone(),
        next_tier: t.state().active_tier().filter(|n| n.tier > o.tier).map(tier_view),
    }
}

type Api = Arc<AppState>;

async fn create(State(app): State<Api>, body: Bytes) -> Result<(StatusCode, Json<Created>), ApiError> {
    let req: CreateRequest = parse_body(&body)?;
    let config = match (req.config_ref, req.config) {
        (Some(name), None) => app.resolve_config(&name)?,
        (None, Some(c)) => c,
        (Some(_), Some(_)) => return Err(ApiError::bad_request("give either configRef or config, not both")),
        (None, None) => return Err(ApiError::bad_request("configRef or config is required")),
    };
    let roster = match req.roster {
        RosterInput::Players(p) => p,
        RosterInput::Csv(text) => read_roster(text.as_bytes()).map_err(|e| ApiError::bad_request(e.to_string()))?,
    };
    let t = Tournament::create(config, roster, app.clock.clone())?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    write_log(&app.log_path(&id), t.log()).map_err(ApiError::internal)?;
    app.open.lock().expect("registry lock").insert(id.clone(), Arc::new(tokio::sync::Mutex::new(t)));
    Ok((StatusCode::CREATED, Json(Created { tournament_id: id })))
}

async fn get_snapshot(State(app): State<Api>, Path(id): Path<String>) -> Result<Json<Snapshot>, ApiError> {
    app.read(&id, |t| Ok(Json(snapshot(&id, t)))).await
}

async fn get_pairings(
    State(app): State<Api>,
    Path(id): Path<String>,
    Query(q): Query<TierQuery>,
) -> Result<Json<PairingsView>, ApiError> {
    let tier: Option<u32> = number("tier", &q.tier)?;
    let round: Option<u32> = number("round", &q.round)?;
    app.read(&id, |t| {
        let run = pick_tier(t, tier)?;
        let pairings = pairing_lines(run, round)
            .into_iter()
            .map(|l| {
                let record = l.game.and_then(|g| run.group(l.group).and_then(|grp| grp.results.get(&g)));
                PairingView {
                    game_ref: l.game,
                    round: l.round,
                    group: l.group,
                    white: l.white,
                    black: l.black,
                    bye: l.bye,
                    result: record.map(|r| r.result.token().to_owned()),
                    moves: record.map(|r| r.moves),
                    forfeit: record.is_some_and(|r| r.forfeit),
                }
            })
            .collect();
        Ok(Json(PairingsView { tier: run.tier, round, pairings }))
    })
    .await
}

async fn post_result(
    State(app): State<Api>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<StandingsView>, ApiError> {
    let req: ResultRequest = parse_body(&body)?;
    let game: GameRef = req.game_ref.parse().map_err(|e: mtt_core::model::BadGameRef| ApiError::bad_request(e.to_string()))?;
    let result: GameResult =
        req.result.parse().map_err(|e: mtt_core::model::UnknownResultToken| ApiError::bad_request(e.to_string()))?;
    app.mutate(&id, |t| {
        t.enter_result(game, result, req.moves)?;
        Ok(Json(standings_view(t, game.tier)))
    })
    .await
}

async fn post_forfeit(
    State(app): State<Api>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<StandingsView>, ApiError> {
    let req: ForfeitRequest = parse_body(&body)?;
    app.mutate(&id, |t| {
        t.forfeit(&req.player, &req.reason)?;
        let tier = t.state().current_tier().map(|r| r.tier).unwrap_or(1);
        Ok(Json(standings_view(t, tier)))
    })
    .await
}

async fn complete_tier(State(app): State<Api>, Path(id): Path<String>) -> Result<Json<OutcomeView>, ApiError> {
    app.mutate(&id, |t| {
        let outcome = t.complete_tier(false)?;
        Ok(Json(outcome_view(t, &outcome)))
    })
    .await
}

async fn tiebreak(State(app): State<Api>, Path(id): Path<String>, body: Bytes) -> Result<Json<OutcomeView>, ApiError> {
    let req: TieBreakRequest = parse_body(&body)?;
    if !req.accept {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "InvalidRequest",
            "the draw is seeded; it can be accepted but not declined",
        ));
    }
    app.mutate(&id, |t| {
        match t.clone().complete_tier(false) {
            Err(EngineError::PendingDecision { .. }) => {}
            _ => {
                return Err(ApiError::new(StatusCode::CONFLICT, "NoPendingTieBreak", "no random tie-break is waiting"));
            }
        }
        let outcome = t.complete_tier(true)?;
        Ok(Json(outcome_view(t, &outcome)))
    })
    .await
}

async fn get_standings(
    State(app): State<Api>,
    Path(id): Path<String>,
    Query(q): Query<TierQuery>,
) -> Result<Json<StandingsView>, ApiError> {
    let tier: Option<u32> = number("tier", &q.tier)?;
    app.read(&id, |t| {
        let run = pick_tier(t, tier)?;
        Ok(Json(standings_view(t, run.tier)))
    })
    .await
}

async fn get_events(
    State(app): State<Api>,
    Path(id): Path<String>,
    Query(q): Query<TierQuery>,
) -> Result<Json<EventsView>, ApiError> {
    let since: u64 = number("since", &q.since)?.unwrap_or(0);
    app.read(&id, |t| Ok(Json(EventsView { events: t.events_since(since).to_vec(), next: t.log().len() as u64 })))
        .await
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such endpoint")
}

async fn method_not_allowed() -> ApiError {
    ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "MethodNotAllowed", "method not allowed on this endpoint")
}

pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/tournaments", post(create))
        .route("/tournaments/{id}", get(get_snapshot))
        .route("/tournaments/{id}/pairings", get(get_pairings))
        .route("/tournaments/{id}/results", post(post_result))
        .route("/tournaments/{id}/forfeits", post(post_forfeit))
        .route("/tournaments/{id}/complete-tier", post(complete_tier))
        .route("/tournaments/{id}/tiebreak", post(tiebreak))
        .route("/tournaments/{id}/standings", get(get_standings))
        .route("/tournaments/{id}/events", get(get_events))
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .with_state(app)
}

/// Serves tournaments stored in `dir` until Ctrl-C.
pub async fn serve(dir: PathBuf, addr: SocketAddr) -> anyhow::Result<()> {
    fs::create_dir_all(&dir)?;
    let app = router(Arc::new(AppState::new(dir, Arc::new(SystemClock))));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_engine_error_gets_its_own_code() {
        let g = GameRef { tier: 1, group: 1, round: 2, board: 3 };
        let e: ApiError = EngineError::IncompleteResults { missing: vec![g] }.into();
        assert_eq!(e.status, StatusCode::CONFLICT);
        assert_eq!(e.body.code, "IncompleteResults");
        assert_eq!(e.body.missing, Some(vec![g]));
        let e: ApiError = EngineError::AlreadyReported(g).into();
        assert_eq!((e.status, e.body.code.as_str()), (StatusCode::CONFLICT, "AlreadyReported"));
        let e: ApiError = EngineError::UnknownGame(g).into();
        assert_eq!(e.status, StatusCode::NOT_FOUND);
    }

    #[test]
    fn names_cannot_escape_the_log_dir() {
        assert!(safe_name("3f2a9c"));
        assert!(!safe_name("../etc/passwd"));
        assert!(!safe_name("a.log"));
        assert!(!safe_name(""));
    }
}
