use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::bounds::BoundConstants;
use super::report::{named, ProbeReport, Relation};
use crate::error::{Error, Result};
use crate::numcore::{dot, norm2};
use crate::selector::{Dictionary, GradientTable};

pub const MAX_PROBE_CANDIDATES: usize = 10;

/// Gain `F(S) = ‖∇L‖² − min_w (‖Σ w_i g_i − ∇L‖² + λ‖w‖²)` for every subset
/// bitmask of the candidates.
pub fn subset_gains(table: &GradientTable, lambda: f64) -> Result<Vec<f64>> {
    let n = table.len();
    if n > MAX_PROBE_CANDIDATES {
        return Err(Error::GuardExceeded(format!(
            "submodularity probe limited to {MAX_PROBE_CANDIDATES} candidates, got {n}"
        )));
    }
    let dict = Dictionary::new(table);
    let max_diag = (0..n).map(|i| dict.gram(i, i)).fold(0.0, f64::max);
    // an exact zero ridge can be singular; a vanishing one keeps the
    // minimum value while staying solvable
    let solve_lambda = if lambda > 0.0 {
        lambda
    } else {
        1e-12 * max_diag.max(f64::MIN_POSITIVE)
    };
    let b = dict.correlations();
    let mut gains = vec![0.0; 1 << n];
    for (mask, gain) in gains.iter_mut().enumerate().skip(1) {
        let support: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let w = dict.ridge(&support, solve_lambda)?;
        *gain = support.iter().zip(&w).map(|(&i, w)| b[i] * w).sum();
    }
    Ok(gains)
}

/// Empirical submodularity ratio against the bound implied by `constants`.
///
/// All nested pairs `S ⊂ T` are scored when there are at most
/// `sample_budget` of them, otherwise a seeded sample plus every pair with
/// `|T \ S| = 1`. Pairs whose joint gain is negligible are skipped.
pub fn submodularity_ratio_probe(
    table: &GradientTable,
    constants: &BoundConstants,
    sample_budget: usize,
    seed: u64,
) -> Result<ProbeReport> {
    let n = table.len();
    let lambda = constants.lambda;
    let gains = subset_gains(table, lambda)?;
    let scale = dot(&table.full_gradient, &table.full_gradient);
    let floor = 1e-12 * scale;

    let mut ratio = 1.0f64;
    let mut scored = 0usize;
    let mut score = |s: usize, t: usize| {
        let joint = gains[t] - gains[s];
        if joint <= floor {
            return;
        }
        let rest = t & !s;
        let singles: f64 = (0..n)
            .filter(|j| rest & (1 << j) != 0)
            .map(|j| gains[s | (1 << j)] - gains[s])
            .sum();
        ratio = ratio.min(singles / joint.max(1e-12));
        scored += 1;
    };

    let full = 1usize << n;
    let pair_count = 3f64.powi(n as i32) - 2f64.powi(n as i32);
    if pair_count <= sample_budget as f64 {
        for t in 1..full {
            let mut s = (t - 1) & t;
            loop {
                score(s, t);
                if s == 0 {
                    break;
                }
                s = (s - 1) & t;
            }
        }
    } else {
        for s in 0..full {
            for j in 0..n {
                if s & (1 << j) == 0 {
                    score(s, s | (1 << j));
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..sample_budget {
            let t: usize = rng.random_range(1..full);
            let s = t & rng.random_range(0..full);
            if s != t {
                score(s, t);
            }
        }
    }

    let bound = constants.submodularity_bound();
    Ok(ProbeReport::new(
        "submodularity_ratio",
        format!("candidates={n} lambda={lambda:e}"),
        named(&[
            ("gradient_norm", norm2(&table.full_gradient)),
            ("u_td", constants.u_td),
            ("u_grad_q", constants.u_grad_q),
            ("subset_cap", constants.n as f64),
            ("lambda", lambda),
            ("pairs_scored", scored as f64),
        ]),
        ratio,
        Relation::AtLeast,
        bound,
        1e-9,
    ))
}
