//! Line-delimited JSON trajectory files.
//!
//! Line 1 is a header object; every following line holds one trajectory as
//! `{"states": [[..]..], "actions": [[..]..], "rewards": [..], "terminal": [..]}`
//! with `K+1` states for `K` steps. Floats use the shortest decimal that
//! round-trips, so a read of a written file is bit-identical.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::{OfflineDataset, PolicyMix, Provenance, Trajectory};
use super::env::EnvSpec;
use crate::error::{Error, Result};

pub const DATASET_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format_version: u32,
    env: String,
    obs_dim: usize,
    act_dim: usize,
    horizon: usize,
    action_low: Vec<f64>,
    action_high: Vec<f64>,
    gamma: f64,
    r_max: f64,
    trajectory_count: usize,
    seed: u64,
    policy_mix: Vec<PolicyMix>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryRecord {
    states: Vec<Vec<f64>>,
    actions: Vec<Vec<f64>>,
    rewards: Vec<f64>,
    terminal: Vec<bool>,
}

/// Serializes a dataset to its file representation.
pub fn dataset_to_string(ds: &OfflineDataset) -> String {
    let header = Header {
        format_version: DATASET_FORMAT_VERSION,
        env: ds.env.name.clone(),
        obs_dim: ds.env.obs_dim,
        act_dim: ds.env.act_dim,
        horizon: ds.env.horizon,
        action_low: ds.env.action_low.clone(),
        action_high: ds.env.action_high.clone(),
        gamma: ds.gamma,
        r_max: ds.env.r_max,
        trajectory_count: ds.trajectories.len(),
        seed: ds.provenance.seed,
        policy_mix: ds.provenance.policy_mix.clone(),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for traj in &ds.trajectories {
        let record = TrajectoryRecord {
            states: traj.states(),
            actions: traj.transitions().iter().map(|t| t.action.clone()).collect(),
            rewards: traj.rewards(),
            terminal: traj.transitions().iter().map(|t| t.terminal).collect(),
        };
        out.push_str(&serde_json::to_string(&record).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_dataset(ds: &OfflineDataset, path: &Path) -> Result<()> {
    fs::write(path, dataset_to_string(ds)).map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: &Path) -> Result<OfflineDataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text, path)
}

/// Parses file contents; `path` is only used in error messages.
pub fn parse_dataset(text: &str, path: &Path) -> Result<OfflineDataset> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or_else(|| parse_err(1, "empty file".into()))?;
    let header: Header = serde_json::from_str(first).map_err(|e| parse_err(1, e.to_string()))?;
    if header.format_version != DATASET_FORMAT_VERSION {
        return Err(parse_err(
            1,
            format!("unsupported format_version {}", header.format_version),
        ));
    }
    let env = EnvSpec {
        name: header.env,
        obs_dim: header.obs_dim,
        act_dim: header.act_dim,
        horizon: header.horizon,
        action_low: header.action_low,
        action_high: header.action_high,
        r_max: header.r_max,
    };
    let mut trajectories = Vec::with_capacity(header.trajectory_count);
    for (idx, line) in lines {
        let record: TrajectoryRecord = serde_json::from_str(line).map_err(|e| parse_err(idx + 1, e.to_string()))?;
        let i = trajectories.len();
        let traj = Trajectory::from_parts(
            record.states,
            record.actions,
            record.rewards,
            record.terminal,
            header.gamma,
        )
        .map_err(|e| Error::Validation(format!("trajectory {i}: {e}")))?;
        trajectories.push(traj);
    }
    if trajectories.len() != header.trajectory_count {
        return Err(parse_err(
            text.lines().count(),
            format!(
                "header declares {} trajectories, file holds {}",
                header.trajectory_count,
                trajectories.len()
            ),
        ));
    }
    OfflineDataset::new(
        env,
        header.gamma,
        trajectories,
        Provenance {
            seed: header.seed,
            policy_mix: header.policy_mix,
        },
    )
}
