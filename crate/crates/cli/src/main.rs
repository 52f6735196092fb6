use std::io::{self, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use mtt_core::analyze::{ingest_games, replay_historical};
use mtt_core::engine::standings;
use mtt_core::rng::stream;
use mtt_core::scheduling::{round_robin, validate_schedule, write_schedule_csv};
use mtt_core::simulate::{run_baseline, run_replications, Baseline};
use mtt_core::{EngineError, GameModel, GameRef, GameResult, PlayerId, SystemClock, Tournament};
use mtt_cli::files::{create_log, load_config, load_ids, load_roster, open_tournament, persist_since};
use mtt_cli::output::{pairing_lines, write_pairings_csv, write_standings_blocks};

#[derive(Debug, Parser)]
#[command(name = "mtt", version, about = "Run and evaluate multi-tier tournaments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Create a tournament log and print the tier-1 pairings.
    New {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        roster: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print pairings of the current tier (the current round by default).
    Pair {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, conflicts_with = "all")]
        round: Option<u32>,
        /// Every round of the tier.
        #[arg(long)]
        all: bool,
    },
    /// Record a game result.
    Result {
        #[arg(long)]
        log: PathBuf,
        /// Game reference such as t1-g1-r3-b2.
        #[arg(long)]
        game: GameRef,
        /// 1-0, 0-1 or 1/2-1/2.
        #[arg(long)]
        result: GameResult,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        moves: u32,
    },
    /// Withdraw a player; their unplayed games are scored as losses.
    Forfeit {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        player: String,
        #[arg(long, default_value = "")]
        reason: String,
    },
    /// Score the current tier, promote its winners and start the next tier.
    CompleteTier {
        #[arg(long)]
        log: PathBuf,
        /// Accept a random tie-break that decides a promotion or the winner.
        #[arg(long)]
        confirm_random: bool,
    },
    /// Print standings of the current tier (or of --tier).
    Standings {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        tier: Option<u32>,
    },
    /// Monte Carlo evaluation; report CSV on stdout, summary on stderr.
    Simulate {
        #[arg(long, required_unless_present = "baseline")]
        config: Option<PathBuf>,
        #[arg(long)]
        roster: PathBuf,
        #[arg(long)]
        reps: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0.5)]
        draw_base: f64,
        #[arg(long, default_value_t = 0.0)]
        white_bonus: f64,
        /// round-robin-all or seeded-knockout.
        #[arg(long, value_parser = parse_baseline)]
        baseline: Option<Baseline>,
    },
    /// Replay a historical game database through the tier structure.
    Analyze {
        #[arg(long)]
        games: PathBuf,
        #[arg(long)]
        roster: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Print a table instead of CSV.
        #[arg(long)]
        text: bool,
    },
    /// Print a validated round-robin schedule for a group of player ids.
    Schedule {
        #[arg(long)]
        group: PathBuf,
        #[arg(long)]
        seed: u64,
    },
    /// Run the HTTP service. MTT_LOG_DIR, when set, overrides --log-dir.
    Serve {
        #[arg(long)]
        log_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
    },
}

fn parse_baseline(s: &str) -> Result<Baseline, String> {
    match s {
        "round-robin-all" | "roundRobinAll" => Ok(Baseline::RoundRobinAll),
        "seeded-knockout" | "seededKnockout" => Ok(Baseline::SeededKnockout),
        _ => Err("expected round-robin-all or seeded-knockout".to_owned()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn open(log: &Path) -> Result<Tournament> {
    open_tournament(log, Arc::new(SystemClock))
}

fn run(command: Command) -> Result<()> {
    let stdout = io::stdout();
    match command {
        Command::New { config, roster, out } => {
            let config = load_config(&config)?;
            let roster = load_roster(&roster)?;
            let t = Tournament::create(config, roster, Arc::new(SystemClock))?;
            create_log(&out, &t)?;
            let tier = t.state().active_tier().context("no tier started")?;
            write_pairings_csv(stdout.lock(), &pairing_lines(tier, None))?;
        }
        Command::Pair { log, round, all } => {
            let t = open(&log)?;
            let Some(tier) = t.state().current_tier() else { bail!("no tier has started") };
            let round = if all { None } else { round.or_else(|| tier.current_round()) };
            if !all && round.is_none() {
                eprintln!("tier {} has no unreported games", tier.tier);
                return Ok(());
            }
            write_pairings_csv(stdout.lock(), &pairing_lines(tier, round))?;
        }
        Command::Result { log, game, result, moves } => {
            let mut t = open(&log)?;
            let before = t.log().len();
            t.enter_result(game, result, moves)?;
            persist_since(&log, &t, before)?;
        }
        Command::Forfeit { log, player, reason } => {
            let mut t = open(&log)?;
            let before = t.log().len();
            t.forfeit(&PlayerId::new(player), &reason)?;
            persist_since(&log, &t, before)?;
        }
        Command::CompleteTier { log, confirm_random } => {
            let mut t = open(&log)?;
            let before = t.log().len();
            let outcome = match t.complete_tier(confirm_random) {
                Ok(o) => o,
                Err(EngineError::IncompleteResults { missing }) => {
                    for g in &missing {
                        eprintln!("missing {g}");
                    }
                    return Err(EngineError::IncompleteResults { missing }.into());
                }
                Err(e @ EngineError::PendingDecision { .. }) => {
                    bail!("{e}; rerun with --confirm-random to accept the seeded draw")
                }
                Err(e) => return Err(e.into()),
            };
            persist_since(&log, &t, before)?;
            write_standings_blocks(stdout.lock(), &outcome.standings)?;
            let ids = |v: &[PlayerId]| v.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", ");
            if !outcome.promoted.is_empty() {
                eprintln!("promoted from tier {}: {}", outcome.tier, ids(&outcome.promoted));
            }
            if let Some(w) = &outcome.winner {
                eprintln!("winner: {w}");
            }
            for tied in &outcome.decisive_random_ties {
                eprintln!("decided by lot: {}", ids(tied));
            }
        }
        Command::Standings { log, tier } => {
            let t = open(&log)?;
            let tier = match tier {
                Some(n) => n,
                None => t.state().current_tier().context("no tier has started")?.tier,
            };
            let s = standings(t.state(), tier);
            if s.is_empty() {
                bail!("tier {tier} has not started");
            }
            write_standings_blocks(stdout.lock(), &s)?;
        }
        Command::Simulate { config, roster, reps, seed, draw_base, white_bonus, baseline } => {
            if !(0.0..=1.0).contains(&draw_base) {
                bail!("--draw-base must lie in [0, 1]");
            }
            let roster = load_roster(&roster)?;
            let model = GameModel { draw_base, white_bonus };
            let report = match baseline {
                Some(b) => run_baseline(b, &roster, &model, reps, seed)?,
                None => {
                    let config = load_config(config.as_ref().expect("required by clap"))?;
                    run_replications(&config, &roster, &model, reps, seed)?
                }
            };
            report.write_csv(stdout.lock())?;
            eprint!("{}", report.summary());
        }
        Command::Analyze { games, roster, config, seed, text } => {
            let f = std::fs::File::open(&games).with_context(|| format!("reading {}", games.display()))?;
            let ingest = ingest_games(f)?;
            for r in &ingest.rejected {
                eprintln!("{}: line {}: {}", games.display(), r.line, r.reason);
            }
            let roster = load_roster(&roster)?;
            let config = load_config(&config)?;
            let report = replay_historical(&ingest.db, &roster, &config, &mut stream(seed, "analyze"))?;
            if text {
                let names = roster.iter().map(|p| (p.id.clone(), p.name.clone())).collect();
                print!("{}", report.render(&names));
            } else {
                report.write_csv(stdout.lock())?;
            }
        }
        Command::Schedule { group, seed } => {
            let ids = load_ids(&group)?;
            let schedule = round_robin(&ids, &mut stream(seed, "schedule"))?;
            let report = validate_schedule(&schedule);
            if !report.is_clean() {
                bail!("generated schedule failed validation: {:?}", report.violations);
            }
            write_schedule_csv(stdout.lock(), &schedule)?;
        }
        Command::Serve { log_dir, port, bind } => {
            let dir = std::env::var_os("MTT_LOG_DIR").map(PathBuf::from).or(log_dir).unwrap_or_else(|| PathBuf::from("."));
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(mtt_cli::service::serve(dir, SocketAddr::new(bind, port)))?;
        }
    }
    io::stdout().flush()?;
    Ok(())
}
