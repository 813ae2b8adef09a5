//! Selection files.
//!
//! Line-delimited JSON: a header echoing the method, config and round count,
//! then one line per round (`{"kind":"round",..}`) and one per chosen
//! trajectory (`{"kind":"weight","id":..,"weight":..}`), ids ascending.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::omp::{Selection, SelectorConfig};
use crate::error::{Error, Result};

pub const SELECTION_FORMAT_VERSION: u32 = 1;

/// A final weighted subset plus the per-round selections that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionFile {
    pub method: String,
    pub trajectory_count: usize,
    pub config: Option<SelectorConfig>,
    pub ids: Vec<usize>,
    pub weights: Vec<f64>,
    pub rounds: Vec<Selection>,
}

impl SelectionFile {
    pub fn validate(&self) -> Result<()> {
        let combined = Selection {
            round: 0,
            ids: self.ids.clone(),
            weights: self.weights.clone(),
            residuals: Vec::new(),
        };
        combined.validate()?;
        if let Some(&id) = self.ids.last() {
            if id >= self.trajectory_count {
                return Err(Error::Validation(format!(
                    "trajectory id {id} out of range for {} trajectories",
                    self.trajectory_count
                )));
            }
        }
        self.rounds.iter().try_for_each(Selection::validate)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format_version: u32,
    method: String,
    trajectory_count: usize,
    round_count: usize,
    record_count: usize,
    config: Option<SelectorConfig>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum Line {
    Round {
        round: usize,
        ids: Vec<usize>,
        weights: Vec<f64>,
        residuals: Vec<f64>,
    },
    Weight {
        id: usize,
        weight: f64,
    },
}

pub fn selection_to_string(file: &SelectionFile) -> String {
    let header = Header {
        format_version: SELECTION_FORMAT_VERSION,
        method: file.method.clone(),
        trajectory_count: file.trajectory_count,
        round_count: file.rounds.len(),
        record_count: file.ids.len(),
        config: file.config.clone(),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    let rounds = file.rounds.iter().map(|s| Line::Round {
        round: s.round,
        ids: s.ids.clone(),
        weights: s.weights.clone(),
        residuals: s.residuals.clone(),
    });
    let weights = file
        .ids
        .iter()
        .zip(&file.weights)
        .map(|(&id, &weight)| Line::Weight { id, weight });
    for line in rounds.chain(weights) {
        out.push_str(&serde_json::to_string(&line).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_selection(file: &SelectionFile, path: &Path) -> Result<()> {
    file.validate()?;
    fs::write(path, selection_to_string(file)).map_err(|e| Error::io(path, e))
}

pub fn read_selection(path: &Path) -> Result<SelectionFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_selection(&text, path)
}

pub fn parse_selection(text: &str, path: &Path) -> Result<SelectionFile> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty selection file".into()))?;
    let header: Header = serde_json::from_str(first).map_err(|e| parse_err(1, e.to_string()))?;
    if header.format_version != SELECTION_FORMAT_VERSION {
        return Err(parse_err(
            1,
            format!("unsupported format_version {}", header.format_version),
        ));
    }
    let mut file = SelectionFile {
        method: header.method,
        trajectory_count: header.trajectory_count,
        config: header.config,
        ids: Vec::new(),
        weights: Vec::new(),
        rounds: Vec::new(),
    };
    for (idx, text) in lines {
        let line: Line = serde_json::from_str(text).map_err(|e| parse_err(idx + 1, e.to_string()))?;
        match line {
            Line::Round {
                round,
                ids,
                weights,
                residuals,
            } => {
                if !file.ids.is_empty() {
                    return Err(parse_err(idx + 1, "round record after weight records".into()));
                }
                file.rounds.push(Selection {
                    round,
                    ids,
                    weights,
                    residuals,
                });
            }
            Line::Weight { id, weight } => {
                file.ids.push(id);
                file.weights.push(weight);
            }
        }
    }
    if file.rounds.len() != header.round_count || file.ids.len() != header.record_count {
        return Err(parse_err(
            text.lines().count(),
            format!(
                "header announces {} rounds and {} records, found {} and {}",
                header.round_count,
                header.record_count,
                file.rounds.len(),
                file.ids.len()
            ),
        ));
    }
    file.validate()?;
    Ok(file)
}
