//! CSV and JSON writers. Every JSON file carries the resolved configuration.

use std::fs;
use std::path::PathBuf;

use cylcurl::MeridianGrid;
use serde::Serialize;

use crate::config::RunConfig;
use crate::{CliError, Command};

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    config: &'a RunConfig,
    result: &'a T,
}

fn path(cfg: &RunConfig, file: &str) -> Result<PathBuf, CliError> {
    let dir = &cfg.output.directory;
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir.join(file))
}

pub fn json<T: Serialize>(cfg: &RunConfig, command: Command, result: &T) -> Result<(), CliError> {
    if !cfg.wants("json") {
        return Ok(());
    }
    let env = Envelope {
        command: command.name(),
        config: cfg,
        result,
    };
    let mut text = serde_json::to_string_pretty(&env).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    let p = path(cfg, &format!("{}.json", command.name()))?;
    fs::write(&p, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display())))
}

pub fn csv(cfg: &RunConfig, file: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    if !cfg.wants("csv") {
        return Ok(());
    }
    let p = path(cfg, file)?;
    let io = |e: csv::Error| CliError::Io(format!("cannot write {}: {e}", p.display()));
    let mut w = csv::Writer::from_path(&p).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

/// `r, z, value` over every node, boundary zeros included.
pub fn field(cfg: &RunConfig, file: &str, grid: &MeridianGrid, interior: &[f64]) -> Result<(), CliError> {
    let full = grid.scatter(interior);
    let rows: Vec<Vec<String>> = (0..grid.num_nodes())
        .map(|n| {
            let (i, j) = grid.node_ij(n);
            vec![num(grid.r(i)), num(grid.z(j)), num(full[n])]
        })
        .collect();
    csv(cfg, file, &["r", "z", "value"], &rows)
}

pub fn grid_mask(cfg: &RunConfig, grid: &MeridianGrid) -> Result<(), CliError> {
    let rows: Vec<Vec<String>> = (0..grid.num_nodes())
        .map(|n| {
            let (i, j) = grid.node_ij(n);
            vec![
                i.to_string(),
                j.to_string(),
                num(grid.r(i)),
                num(grid.z(j)),
                u8::from(grid.is_interior(n)).to_string(),
            ]
        })
        .collect();
    csv(cfg, "grid.csv", &["i", "j", "r", "z", "interior"], &rows)
}

#[derive(Serialize)]
struct Failure<'a> {
    error: &'a str,
}

pub fn write_failure(cfg: &RunConfig, command: Command, message: &str) -> Result<(), CliError> {
    let env = Envelope {
        command: command.name(),
        config: cfg,
        result: &Failure { error: message },
    };
    let mut text = serde_json::to_string_pretty(&env).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    let p = path(cfg, &format!("{}_error.json", command.name()))?;
    fs::write(&p, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display())))
}

/// Shortest round-trip decimal form.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}
