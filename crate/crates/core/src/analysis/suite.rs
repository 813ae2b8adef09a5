//! Built-in instances for every probe.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::bounds::measure_bound_constants;
use super::brute::greedy_ratio_check;
use super::cluster::cluster_bound_check;
use super::convergence::{convergence_bound_check, optimum_proxy, subset_descent_run, transition_share_weights};
use super::descent::{monotone_descent_check, QuadraticProblem, StepSchedule};
use super::report::ProbeReport;
use super::submodularity::submodularity_ratio_probe;
use crate::agent::AgentParams;
use crate::envdata::{generate_dataset, EnvSpec, OfflineDataset, PolicyMix};
use crate::error::{Error, Result};
use crate::numcore::dot;
use crate::selector::{build_gradient_table, omp_select, GradientTable, SelectorConfig};

pub const PROBE_NAMES: [&str; 5] = ["submodularity", "convergence", "cluster", "greedy", "descent"];

/// A small point-mass dataset, a freshly initialized agent and the gradient
/// table with every trajectory as a candidate.
pub struct ProbeInstance {
    pub dataset: OfflineDataset,
    pub agent: AgentParams,
    pub table: GradientTable,
}

pub fn probe_instance(seed: u64, trajectories: usize, hidden: usize) -> Result<ProbeInstance> {
    let mut env = EnvSpec::point_mass();
    env.horizon = 8;
    let experts = trajectories / 2;
    let mix = [
        PolicyMix::new("expert", experts, 0.3),
        PolicyMix::new("random", trajectories - experts, 1.0),
    ];
    let dataset = generate_dataset(&env, &mix, 0.99, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let agent = AgentParams::init(&env, hidden, &mut rng);
    let ids: Vec<usize> = (0..dataset.len()).collect();
    let table = build_gradient_table(&dataset, &ids, &agent.critic, 1)?;
    Ok(ProbeInstance { dataset, agent, table })
}

pub const SUBMODULARITY_LAMBDA_SCALES: [f64; 3] = [1e-2, 1.0, 1e2];

pub fn submodularity_suite(seed: u64) -> Result<Vec<ProbeReport>> {
    let inst = probe_instance(seed, 8, 4)?;
    let scale = dot(&inst.table.full_gradient, &inst.table.full_gradient);
    SUBMODULARITY_LAMBDA_SCALES
        .iter()
        .map(|s| {
            let c = measure_bound_constants(&inst.dataset, &inst.agent, inst.table.len(), s * scale)?;
            submodularity_ratio_probe(&inst.table, &c, 100_000, seed)
        })
        .collect()
}

pub const CLUSTER_COUNTS: [usize; 3] = [1, 2, 4];

pub fn cluster_suite(seed: u64) -> Result<Vec<ProbeReport>> {
    let inst = probe_instance(seed, 10, 4)?;
    CLUSTER_COUNTS
        .iter()
        .map(|&k| cluster_bound_check(&inst.table, k, seed))
        .collect()
}

pub fn greedy_suite(seed: u64) -> Result<Vec<ProbeReport>> {
    let inst = probe_instance(seed, 10, 4)?;
    let scale = dot(&inst.table.full_gradient, &inst.table.full_gradient);
    Ok(vec![greedy_ratio_check(&inst.table, 3, 1e-4 * scale, 3)?])
}

pub const CONVERGENCE_STEPS: usize = 40;
pub const CONVERGENCE_LR: f64 = 0.05;

/// Toy runs on the full data, a pursuit-selected subset and a random subset.
pub fn convergence_suite(seed: u64) -> Result<Vec<ProbeReport>> {
    let inst = probe_instance(seed, 10, 4)?;
    let ds = &inst.dataset;
    let init = &inst.agent.critic;
    let optimum = optimum_proxy(ds, init, 10 * CONVERGENCE_STEPS, CONVERGENCE_LR)?;

    let all: Vec<usize> = (0..ds.len()).collect();
    let mut runs = vec![("full", all, transition_share_weights(ds))];

    let cfg = SelectorConfig {
        lambda: 0.0,
        budget: Some(4),
        ..SelectorConfig::default()
    };
    let sel = omp_select(&inst.table, &cfg)?;
    runs.push(("pursuit", sel.ids, sel.weights));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids = sample(&mut rng, ds.len(), 4).into_vec();
    ids.sort_unstable();
    let w = vec![0.25; ids.len()];
    runs.push(("random", ids, w));

    let mut out = Vec::new();
    for (label, ids, weights) in runs {
        if ids.is_empty() {
            continue;
        }
        let log = subset_descent_run(ds, &ids, &weights, init, CONVERGENCE_STEPS, CONVERGENCE_LR)?;
        let mut r = convergence_bound_check(&log, &optimum)?;
        r.instance = format!("{} subset={label} seed={seed}", r.instance);
        out.push(r);
    }
    Ok(out)
}

pub const DESCENT_SCHEDULES: [StepSchedule; 3] = [
    StepSchedule::Constant(1.0),
    StepSchedule::ExactBound,
    StepSchedule::Constant(3.0),
];

pub fn descent_suite(seed: u64) -> Result<Vec<ProbeReport>> {
    let problem = QuadraticProblem::random(40, 5, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids = sample(&mut rng, problem.len(), problem.len() / 2).into_vec();
    ids.sort_unstable();
    let w = vec![1.0 / ids.len() as f64; ids.len()];
    DESCENT_SCHEDULES
        .iter()
        .map(|&s| monotone_descent_check(&problem, &ids, &w, s, 100))
        .collect()
}

/// Runs one named probe family, or every family for `all`.
pub fn run_probe(name: &str, seed: u64) -> Result<Vec<ProbeReport>> {
    match name {
        "submodularity" => submodularity_suite(seed),
        "convergence" => convergence_suite(seed),
        "cluster" => cluster_suite(seed),
        "greedy" => greedy_suite(seed),
        "descent" => descent_suite(seed),
        "all" => {
            let mut out = Vec::new();
            for n in PROBE_NAMES {
                out.extend(run_probe(n, seed)?);
            }
            Ok(out)
        }
        other => Err(Error::UnknownProbe {
            name: other.to_string(),
            valid: format!("all, {}", PROBE_NAMES.join(", ")),
        }),
    }
}
