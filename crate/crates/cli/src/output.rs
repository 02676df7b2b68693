use std::fs;
use std::io::Write;
use std::path::Path;

use barx_core::model::ParameterVector;
use barx_core::sampler::{ChainDraws, DrawStats};
use barx_core::{ModelConfig, PosteriorDraws};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Writes `contents` to a temporary file next to `path` and renames it into
/// place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::other(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// One line of `draws.ndjson`.
#[derive(Debug, Serialize, Deserialize)]
struct DrawRecord {
    chain: usize,
    draw: usize,
    #[serde(flatten)]
    params: ParameterVector,
    #[serde(flatten)]
    stats: DrawStats,
}

pub fn draws_to_ndjson(draws: &PosteriorDraws) -> Result<String, CliError> {
    let mut out = String::new();
    for c in &draws.chains {
        for (i, (p, s)) in c.draws.iter().zip(&c.stats).enumerate() {
            let rec = DrawRecord {
                chain: c.chain,
                draw: i,
                params: p.clone(),
                stats: *s,
            };
            out.push_str(&serde_json::to_string(&rec).map_err(|e| CliError::other(e.to_string()))?);
            out.push('\n');
        }
    }
    Ok(out)
}

/// Per-chain settings recorded in `summary.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainInfo {
    pub chain: usize,
    pub step_size: f64,
    pub mass_diag: Vec<f64>,
    pub warmup_divergences: usize,
}

pub fn read_draws(
    path: &Path,
    model: &ModelConfig,
    chains: &[ChainInfo],
) -> Result<PosteriorDraws, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let mut out: Vec<ChainDraws> = chains
        .iter()
        .map(|c| ChainDraws {
            chain: c.chain,
            draws: Vec::new(),
            z_draws: Vec::new(),
            stats: Vec::new(),
            step_size: c.step_size,
            mass_diag: c.mass_diag.clone(),
            warmup_divergences: c.warmup_divergences,
        })
        .collect();
    for (i, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let rec: DrawRecord = serde_json::from_str(line)
            .map_err(|e| CliError::input(format!("{}: line {}: {e}", path.display(), i + 1)))?;
        rec.params
            .validate(model)
            .map_err(|e| CliError::input(format!("{}: line {}: {e}", path.display(), i + 1)))?;
        let slot = out
            .iter_mut()
            .find(|c| c.chain == rec.chain)
            .ok_or_else(|| {
                CliError::input(format!(
                    "{}: line {}: unknown chain {}",
                    path.display(),
                    i + 1,
                    rec.chain
                ))
            })?;
        slot.draws.push(rec.params);
        slot.stats.push(rec.stats);
    }
    Ok(PosteriorDraws {
        model: model.clone(),
        chains: out,
    })
}
