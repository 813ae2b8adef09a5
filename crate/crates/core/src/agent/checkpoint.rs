//! Per-round parameter snapshots and their on-disk format.
//!
//! A checkpoint file is line-delimited JSON: a header with the round, step and
//! network dimensions, then one `{"name": .., "values": [..]}` line per
//! parameter block.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::params::AgentParams;
use crate::error::{Error, Result};
use crate::numcore::{MlpParams, MlpShape};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;
const BLOCKS: [&str; 4] = ["critic", "actor", "critic_target", "actor_target"];

/// Snapshots keyed by round index `1..=T`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckpointStore {
    rounds: BTreeMap<usize, AgentParams>,
}

impl CheckpointStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rounds must be appended in increasing order with non-decreasing steps.
    pub fn insert(&mut self, round: usize, params: AgentParams) -> Result<()> {
        if round == 0 {
            return Err(Error::InvalidArgument("checkpoint rounds start at 1".into()));
        }
        if let Some((&last_round, last)) = self.rounds.iter().next_back() {
            if round <= last_round || params.step < last.step {
                return Err(Error::InvalidArgument(format!(
                    "checkpoint round {round} (step {}) does not follow round {last_round} (step {})",
                    params.step, last.step
                )));
            }
        }
        self.rounds.insert(round, params);
        Ok(())
    }

    pub fn get(&self, round: usize) -> Result<&AgentParams> {
        self.rounds.get(&round).ok_or(Error::MissingCheckpoint(round))
    }

    pub fn rounds(&self) -> Vec<usize> {
        self.rounds.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &AgentParams)> {
        self.rounds.iter().map(|(r, p)| (*r, p))
    }

    pub fn file_name(round: usize) -> String {
        format!("checkpoint_{round:04}.ckpt.jsonl")
    }

    /// Writes one file per round into `dir` and returns the paths.
    pub fn write_dir(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut paths = Vec::with_capacity(self.len());
        for (round, params) in self.iter() {
            let path = dir.join(Self::file_name(round));
            write_checkpoint(round, params, &path)?;
            paths.push(path);
        }
        Ok(paths)
    }

    /// Loads every `*.ckpt.jsonl` file in `dir`.
    pub fn read_dir(dir: &Path) -> Result<Self> {
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.to_string_lossy().ends_with(".ckpt.jsonl"))
            .collect();
        files.sort();
        let mut loaded: Vec<(usize, AgentParams)> = files.iter().map(|p| read_checkpoint(p)).collect::<Result<_>>()?;
        loaded.sort_by_key(|(r, _)| *r);
        let mut store = Self::new();
        for (round, params) in loaded {
            store.insert(round, params)?;
        }
        Ok(store)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointHeader {
    format_version: u32,
    round: usize,
    step: u64,
    obs_dim: usize,
    act_dim: usize,
    hidden: usize,
    critic_len: usize,
    actor_len: usize,
    action_low: Vec<f64>,
    action_high: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Block {
    name: String,
    values: Vec<f64>,
}

pub fn checkpoint_to_string(round: usize, params: &AgentParams) -> String {
    let header = CheckpointHeader {
        format_version: CHECKPOINT_FORMAT_VERSION,
        round,
        step: params.step,
        obs_dim: params.obs_dim(),
        act_dim: params.act_dim(),
        hidden: params.hidden(),
        critic_len: params.critic.param_count(),
        actor_len: params.actor.param_count(),
        action_low: params.action_low.clone(),
        action_high: params.action_high.clone(),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    let nets = [
        &params.critic,
        &params.actor,
        &params.critic_target,
        &params.actor_target,
    ];
    for (name, net) in BLOCKS.iter().zip(nets) {
        let block = Block {
            name: name.to_string(),
            values: net.flatten(),
        };
        out.push_str(&serde_json::to_string(&block).expect("block serializes"));
        out.push('\n');
    }
    out
}

pub fn write_checkpoint(round: usize, params: &AgentParams, path: &Path) -> Result<()> {
    fs::write(path, checkpoint_to_string(round, params)).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<(usize, AgentParams)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() != 1 + BLOCKS.len() {
        return Err(parse_err(lines.len(), format!("expected {} lines", 1 + BLOCKS.len())));
    }
    let header: CheckpointHeader = serde_json::from_str(lines[0]).map_err(|e| parse_err(1, e.to_string()))?;
    if header.format_version != CHECKPOINT_FORMAT_VERSION {
        return Err(parse_err(
            1,
            format!("unsupported format_version {}", header.format_version),
        ));
    }
    let critic_shape = MlpShape::new(header.obs_dim + header.act_dim, header.hidden, 1);
    let actor_shape = MlpShape::new(header.obs_dim, header.hidden, header.act_dim);
    let mut nets = Vec::with_capacity(BLOCKS.len());
    for (i, name) in BLOCKS.iter().enumerate() {
        let block: Block = serde_json::from_str(lines[i + 1]).map_err(|e| parse_err(i + 2, e.to_string()))?;
        if block.name != *name {
            return Err(parse_err(
                i + 2,
                format!("expected block `{name}`, found `{}`", block.name),
            ));
        }
        let shape = if i % 2 == 0 { critic_shape } else { actor_shape };
        nets.push(MlpParams::unflatten(shape, &block.values).map_err(|e| parse_err(i + 2, e.to_string()))?);
    }
    let mut nets = nets.into_iter();
    let mut next = || nets.next().expect("four blocks");
    let params = AgentParams {
        critic: next(),
        actor: next(),
        critic_target: next(),
        actor_target: next(),
        action_low: header.action_low,
        action_high: header.action_high,
        step: header.step,
    };
    Ok((header.round, params))
}
