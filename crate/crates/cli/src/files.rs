//! Reading configs, rosters and logs from disk.

use std::fs::{self, File};
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use mtt_core::event::{append_log, read_log, write_log};
use mtt_core::model::read_roster;
use mtt_core::{Clock, Player, PlayerId, Tournament, TournamentConfig};

/// Parses a tournament config; TOML when the file ends in `.toml`, JSON otherwise.
pub fn parse_config(text: &str, toml: bool) -> Result<TournamentConfig> {
    if toml {
        Ok(::toml::from_str(text)?)
    } else {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn load_config(path: &Path) -> Result<TournamentConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let toml = path.extension().is_some_and(|e| e == "toml");
    parse_config(&text, toml).with_context(|| format!("parsing {}", path.display()))
}

pub fn load_roster(path: &Path) -> Result<Vec<Player>> {
    let f = File::open(path).with_context(|| format!("reading {}", path.display()))?;
    read_roster(f).with_context(|| format!("parsing {}", path.display()))
}

/// Player ids from a CSV: the `id` column if there is one, else the first.
pub fn load_ids(path: &Path) -> Result<Vec<PlayerId>> {
    let f = File::open(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(f);
    let col = rdr.headers()?.iter().position(|h| h == "id").unwrap_or(0);
    let mut ids = Vec::new();
    for row in rdr.records() {
        let row = row.with_context(|| format!("parsing {}", path.display()))?;
        match row.get(col) {
            Some(id) if !id.is_empty() => ids.push(PlayerId::new(id)),
            _ => bail!("{}: row {} has no player id", path.display(), ids.len() + 2),
        }
    }
    Ok(ids)
}

pub fn open_tournament(path: &Path, clock: Arc<dyn Clock>) -> Result<Tournament> {
    let log = read_log(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Tournament::from_log(log, clock)?)
}

/// Writes a new log; refuses to overwrite an existing file.
pub fn create_log(path: &Path, t: &Tournament) -> Result<()> {
    if path.exists() {
        bail!("{} already exists", path.display());
    }
    write_log(path, t.log()).with_context(|| format!("writing {}", path.display()))
}

/// Appends the events `t` gained since it had `before` of them.
pub fn persist_since(path: &Path, t: &Tournament, before: usize) -> Result<()> {
    append_log(path, &t.log()[before..]).with_context(|| format!("writing {}", path.display()))
}
