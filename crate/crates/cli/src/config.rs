//! Run configuration: a TOML file with `[run]`, `[env]`, `[train]`,
//! `[select]` and `[compare]` tables. Every key is optional.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use redor::agent::TrainConfig;
use redor::envdata::{EnvSpec, PolicyMix};
use redor::selector::SelectorConfig;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    /// Existing dataset file; generated from `[env]` when absent.
    pub dataset: Option<PathBuf>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seeds: vec![0],
            out: PathBuf::from("runs"),
            dataset: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSection {
    pub name: String,
    pub expert: usize,
    pub random: usize,
    pub expert_noise: f64,
    pub random_noise: f64,
    pub gamma: f64,
    /// Triples the random-trajectory count.
    pub hard: bool,
    /// Seed of the generated dataset, shared by every training seed.
    pub data_seed: u64,
}

impl Default for EnvSection {
    fn default() -> Self {
        Self {
            name: redor::envdata::POINT_MASS.to_string(),
            expert: 50,
            random: 50,
            expert_noise: 0.1,
            random_noise: 1.0,
            gamma: 0.99,
            hard: false,
            data_seed: 0,
        }
    }
}

impl EnvSection {
    pub fn random_count(&self) -> usize {
        if self.hard {
            3 * self.random
        } else {
            self.random
        }
    }

    pub fn mix(&self) -> Vec<PolicyMix> {
        vec![
            PolicyMix::new("expert", self.expert, self.expert_noise),
            PolicyMix::new("random", self.random_count(), self.random_noise),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectSection {
    pub rounds: usize,
    pub top_percent: f64,
    pub tolerance: f64,
    pub lambda: f64,
    /// Per-round cap in trajectories.
    pub budget: Option<usize>,
    /// Per-round cap as a percentage of the trajectory count, used when
    /// `budget` is absent.
    pub budget_percent: Option<f64>,
    /// Steps of the checkpointing pretraining run.
    pub pretrain_steps: usize,
}

impl Default for SelectSection {
    fn default() -> Self {
        let d = SelectorConfig::default();
        Self {
            rounds: d.rounds,
            top_percent: d.top_percent,
            tolerance: d.tolerance,
            lambda: d.lambda,
            budget: None,
            budget_percent: None,
            pretrain_steps: 20_000,
        }
    }
}

impl SelectSection {
    pub fn selector_config(&self, trajectory_count: usize, seed: u64) -> SelectorConfig {
        let budget = self.budget.or_else(|| {
            self.budget_percent
                .map(|p| ((p * trajectory_count as f64 / 100.0 - 1e-9).ceil() as usize).max(1))
        });
        SelectorConfig {
            rounds: self.rounds,
            top_percent: self.top_percent,
            tolerance: self.tolerance,
            lambda: self.lambda,
            budget,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    pub methods: Vec<String>,
    pub eval_every: usize,
    pub eval_episodes: usize,
    /// Subset size for baselines run without a pursuit selection to match.
    pub size: Option<usize>,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            methods: ["redor", "random", "prioritized", "full"].map(String::from).to_vec(),
            eval_every: 2_000,
            eval_episodes: 10,
            size: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub env: EnvSection,
    pub train: TrainConfig,
    pub select: SelectSection,
    pub compare: CompareSection,
}

pub const METHODS: [&str; 5] = ["redor", "random", "prioritized", "top_return", "full"];

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
                toml::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", p.display())))
            }
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |e: redor::Error| CliError::Usage(e.to_string());
        EnvSpec::by_name(&self.env.name).map_err(usage)?;
        if self.env.expert + self.env.random_count() == 0 {
            return Err(CliError::Usage("dataset needs at least one trajectory".into()));
        }
        if !(self.env.gamma > 0.0 && self.env.gamma <= 1.0) {
            return Err(CliError::Usage("env.gamma must lie in (0, 1]".into()));
        }
        self.train.validate().map_err(usage)?;
        self.select.selector_config(1, 0).validate().map_err(usage)?;
        if let Some(p) = self.select.budget_percent {
            if !(p > 0.0 && p <= 100.0) {
                return Err(CliError::Usage("select.budget_percent must lie in (0, 100]".into()));
            }
        }
        if self.select.pretrain_steps < self.select.rounds {
            return Err(CliError::Usage("select.pretrain_steps must be >= select.rounds".into()));
        }
        if self.run.seeds.is_empty() {
            return Err(CliError::Usage("at least one seed is required".into()));
        }
        if self.compare.methods.is_empty() {
            return Err(CliError::Usage("compare.methods must not be empty".into()));
        }
        if let Some(m) = self.compare.methods.iter().find(|m| !METHODS.contains(&m.as_str())) {
            return Err(CliError::Usage(format!(
                "unknown method `{m}`; valid: {}",
                METHODS.join(", ")
            )));
        }
        if self.compare.eval_every == 0 || self.compare.eval_episodes == 0 {
            return Err(CliError::Usage(
                "compare.eval_every and compare.eval_episodes must be >= 1".into(),
            ));
        }
        if let Some(d) = &self.run.dataset {
            if !d.is_file() {
                return Err(CliError::Usage(format!("dataset {} does not exist", d.display())));
            }
        }
        Ok(())
    }

    /// Pretraining shares the training hyperparameters but runs its own step count.
    pub fn pretrain_config(&self) -> TrainConfig {
        TrainConfig {
            steps: self.select.pretrain_steps,
            ..self.train.clone()
        }
    }
}
