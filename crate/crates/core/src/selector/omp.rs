//! Regularized orthogonal matching pursuit over trajectory gradients.

use serde::{Deserialize, Serialize};

use super::gradients::GradientTable;
use crate::error::{Error, Result};
use crate::numcore::{axpy, dot, norm2, ridge_solve_gram, RealMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectorConfig {
    /// Checkpoint rounds `T`.
    pub rounds: usize,
    /// Percentage of highest-return trajectories kept as candidates.
    pub top_percent: f64,
    /// Stop once `Err_λ / ‖∇L‖ ≤ tolerance`.
    pub tolerance: f64,
    pub lambda: f64,
    /// Per-round subset cap; `None` means ⌈5% of the trajectory count⌉.
    pub budget: Option<usize>,
    pub seed: u64,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        Self {
            rounds: 50,
            top_percent: 50.0,
            tolerance: 0.01,
            lambda: 1e-4,
            budget: None,
            seed: 0,
        }
    }
}

impl SelectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::InvalidArgument("selector rounds must be >= 1".into()));
        }
        if !(self.top_percent > 0.0 && self.top_percent <= 100.0) {
            return Err(Error::InvalidArgument(format!(
                "top_percent must lie in (0, 100], got {}",
                self.top_percent
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidArgument("lambda must be >= 0".into()));
        }
        if self.budget == Some(0) {
            return Err(Error::InvalidArgument("budget must be >= 1".into()));
        }
        Ok(())
    }

    pub fn budget_for(&self, trajectory_count: usize) -> usize {
        self.budget
            .unwrap_or_else(|| (trajectory_count * 5).div_ceil(100))
            .max(1)
    }
}

/// A weighted subset of trajectories chosen in one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub round: usize,
    /// Trajectory ids, ascending.
    pub ids: Vec<usize>,
    pub weights: Vec<f64>,
    /// `Err_λ` after every pursuit iteration.
    pub residuals: Vec<f64>,
}

impl Selection {
    pub fn validate(&self) -> Result<()> {
        if self.ids.len() != self.weights.len() {
            return Err(Error::Validation(format!(
                "round {}: {} ids but {} weights",
                self.round,
                self.ids.len(),
                self.weights.len()
            )));
        }
        if self.ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation(format!(
                "round {}: ids not unique and ascending",
                self.round
            )));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Validation(format!("round {}: negative weight", self.round)));
        }
        if self.residuals.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Validation(format!(
                "round {}: residual history increases",
                self.round
            )));
        }
        Ok(())
    }
}

/// `‖Σ w_i g_i − g‖₂`.
pub fn residual_error<V: AsRef<[f64]>>(weights: &[f64], gradients: &[V], full: &[f64]) -> f64 {
    let mut r: Vec<f64> = full.iter().map(|v| -v).collect();
    for (w, g) in weights.iter().zip(gradients) {
        axpy(*w, g.as_ref(), &mut r);
    }
    norm2(&r)
}

/// `residual_error + λ·‖w‖²`.
pub fn residual_error_reg<V: AsRef<[f64]>>(weights: &[f64], gradients: &[V], full: &[f64], lambda: f64) -> f64 {
    residual_error(weights, gradients, full) + lambda * dot(weights, weights)
}

/// Candidate vectors with a cached Gram matrix, shared by the pursuit and the
/// exhaustive oracle so both solve identical systems for identical supports.
pub struct Dictionary<'a> {
    table: &'a GradientTable,
    gram: RealMatrix,
    rhs: Vec<f64>,
}

/// Weights on a support (candidate positions, ascending) and their objective.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportFit {
    pub support: Vec<usize>,
    pub weights: Vec<f64>,
    pub err_reg: f64,
}

impl<'a> Dictionary<'a> {
    pub fn new(table: &'a GradientTable) -> Self {
        let n = table.len();
        let mut gram = RealMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = dot(&table.gradients[i], &table.gradients[j]);
                gram.set(i, j, v);
                gram.set(j, i, v);
            }
        }
        let rhs = table.gradients.iter().map(|g| dot(g, &table.full_gradient)).collect();
        Self { table, gram, rhs }
    }

    pub fn table(&self) -> &GradientTable {
        self.table
    }

    fn sub_system(&self, support: &[usize]) -> (RealMatrix, Vec<f64>) {
        let k = support.len();
        let mut g = RealMatrix::zeros(k, k);
        for (a, &i) in support.iter().enumerate() {
            for (b, &j) in support.iter().enumerate() {
                g.set(a, b, self.gram.get(i, j));
            }
        }
        (g, support.iter().map(|&i| self.rhs[i]).collect())
    }

    /// Unconstrained ridge weights on `support`.
    pub fn ridge(&self, support: &[usize], lambda: f64) -> Result<Vec<f64>> {
        let (g, b) = self.sub_system(support);
        ridge_solve_gram(&g, &b, lambda)
    }

    /// `⟨g_i, ∇L⟩` for every candidate position.
    pub fn correlations(&self) -> &[f64] {
        &self.rhs
    }

    /// Candidate Gram entry `⟨g_i, g_j⟩`.
    pub fn gram(&self, i: usize, j: usize) -> f64 {
        self.gram.get(i, j)
    }

    /// Ridge solve, then drop non-positive weights and re-solve on the remaining
    /// support until every weight is positive or the support is empty.
    pub fn fit_nonneg(&self, support: &[usize], lambda: f64) -> Result<SupportFit> {
        let mut support: Vec<usize> = support.to_vec();
        support.sort_unstable();
        loop {
            let weights = self.ridge(&support, lambda)?;
            if weights.iter().all(|w| *w > 0.0) {
                let err_reg = self.err_reg(&support, &weights, lambda);
                return Ok(SupportFit {
                    support,
                    weights,
                    err_reg,
                });
            }
            support = support
                .iter()
                .zip(&weights)
                .filter(|(_, w)| **w > 0.0)
                .map(|(i, _)| *i)
                .collect();
        }
    }

    /// `∇L − Σ w_i g_i` over candidate positions `support`.
    pub fn residual(&self, support: &[usize], weights: &[f64]) -> Vec<f64> {
        let mut r = self.table.full_gradient.clone();
        for (&i, w) in support.iter().zip(weights) {
            axpy(-w, &self.table.gradients[i], &mut r);
        }
        r
    }

    pub fn err_reg(&self, support: &[usize], weights: &[f64], lambda: f64) -> f64 {
        norm2(&self.residual(support, weights)) + lambda * dot(weights, weights)
    }
}

/// Greedy pursuit: pick the unused candidate most correlated with the
/// residual, refit nonnegative ridge weights on the enlarged support, and keep
/// the refit only when it does not raise `Err_λ`.
///
/// Without an explicit `cfg.budget` the cap defaults relative to the
/// candidate count; callers that know the dataset size should set it.
pub fn omp_select(table: &GradientTable, cfg: &SelectorConfig) -> Result<Selection> {
    if table.is_empty() {
        return Err(Error::InvalidArgument("empty candidate set".into()));
    }
    cfg.validate()?;
    let budget = cfg.budget_for(table.len());
    let dict = Dictionary::new(table);
    let full_norm = norm2(&table.full_gradient);
    let n = table.len();

    let mut fit = SupportFit {
        support: Vec::new(),
        weights: Vec::new(),
        err_reg: full_norm,
    };
    let mut residual = table.full_gradient.clone();
    let mut tried = vec![false; n];
    let mut history = Vec::new();

    while full_norm > 0.0 && fit.err_reg / full_norm > cfg.tolerance && fit.support.len() < budget {
        let r_norm = norm2(&residual);
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            if tried[i] {
                continue;
            }
            let corr = dot(&table.gradients[i], &residual).abs();
            let scale = norm2(&table.gradients[i]) * r_norm;
            if !(corr > 1e-14 * scale) {
                continue;
            }
            // strict comparison keeps the lowest id on ties
            if best.is_none_or(|(_, c)| corr > c) {
                best = Some((i, corr));
            }
        }
        let Some((pick, _)) = best else { break };
        tried[pick] = true;

        let mut trial = fit.support.clone();
        trial.push(pick);
        match dict.fit_nonneg(&trial, cfg.lambda) {
            Ok(candidate) if candidate.err_reg <= fit.err_reg => {
                residual = dict.residual(&candidate.support, &candidate.weights);
                for &i in &candidate.support {
                    tried[i] = true;
                }
                fit = candidate;
            }
            Ok(_) | Err(Error::Singular { .. }) => {}
            Err(e) => return Err(e),
        }
        history.push(fit.err_reg);
    }

    Ok(Selection {
        round: table.round,
        ids: fit.support.iter().map(|&i| table.candidates[i]).collect(),
        weights: fit.weights,
        residuals: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(lambda: f64) -> SelectorConfig {
        SelectorConfig {
            lambda,
            tolerance: 1e-9,
            ..SelectorConfig::default()
        }
    }

    fn table(grads: Vec<Vec<f64>>, full: Vec<f64>) -> GradientTable {
        let ids = (0..grads.len()).collect();
        GradientTable::new(1, ids, grads, full).unwrap()
    }

    #[test]
    fn residual_error_cases() {
        let g = [vec![1.0, 0.0], vec![0.0, 1.0]];
        let full = [2.0, 3.0];
        assert_eq!(residual_error(&[2.0, 3.0], &g, &full), 0.0);
        assert_eq!(residual_error(&[2.0, 0.0], &g, &full), 3.0);
        assert_eq!(residual_error(&[0.0, 0.0], &g, &full), 13f64.sqrt());
        assert_eq!(residual_error_reg(&[2.0, 0.0], &g, &full, 0.5), 5.0);
        assert_eq!(residual_error_reg(&[2.0, 0.0], &g, &full, 0.0), 3.0);
        assert_eq!(residual_error_reg(&[0.0, 0.0], &g, &full, 7.0), 13f64.sqrt());
    }

    #[test]
    fn single_exact_candidate() {
        let t = table(vec![vec![1.0, 2.0, 2.0]], vec![1.0, 2.0, 2.0]);
        let s = omp_select(
            &t,
            &SelectorConfig {
                budget: Some(5),
                ..cfg(0.0)
            },
        )
        .unwrap();
        assert_eq!(s.ids, vec![0]);
        assert!((s.weights[0] - 1.0).abs() < 1e-15);
        assert_eq!(s.residuals.len(), 1);
        assert!(s.residuals[0] < 1e-15);
    }

    #[test]
    fn picks_most_correlated_first() {
        let t = table(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 3.0]);
        let s = omp_select(
            &t,
            &SelectorConfig {
                budget: Some(2),
                ..cfg(0.0)
            },
        )
        .unwrap();
        assert_eq!(s.ids, vec![1]);
        assert_eq!(s.weights, vec![3.0]);
        assert_eq!(s.residuals, vec![0.0]);
    }

    #[test]
    fn selects_both_orthogonal_atoms() {
        let t = table(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![2.0, 3.0]);
        let s = omp_select(
            &t,
            &SelectorConfig {
                budget: Some(2),
                ..cfg(0.0)
            },
        )
        .unwrap();
        assert_eq!(s.ids, vec![0, 1]);
        assert_eq!(s.weights, vec![2.0, 3.0]);
        assert_eq!(s.residuals, vec![2.0, 0.0]);
        let one = omp_select(
            &t,
            &SelectorConfig {
                budget: Some(1),
                ..cfg(0.0)
            },
        )
        .unwrap();
        assert_eq!(one.ids, vec![1]);
    }

    #[test]
    fn ties_break_to_lowest_id() {
        let t = table(vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 0.0]);
        let s = omp_select(
            &t,
            &SelectorConfig {
                budget: Some(1),
                ..cfg(0.0)
            },
        )
        .unwrap();
        assert_eq!(s.ids, vec![0]);
    }

    #[test]
    fn anti_correlated_atom_is_never_kept() {
        let t = table(vec![vec![-1.0, 0.0], vec![0.5, 0.5]], vec![1.0, 0.0]);
        let s = omp_select(
            &t,
            &SelectorConfig {
                budget: Some(2),
                ..cfg(0.0)
            },
        )
        .unwrap();
        assert_eq!(s.ids, vec![1]);
        assert!(s.weights.iter().all(|w| *w > 0.0));
        assert!(s.residuals.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn empty_table_is_an_error() {
        let t = GradientTable::new(1, vec![], vec![], vec![1.0]).unwrap();
        assert!(omp_select(
            &t,
            &SelectorConfig {
                budget: Some(1),
                ..cfg(0.0)
            }
        )
        .is_err());
    }

    #[test]
    fn zero_full_gradient_selects_nothing() {
        let t = table(vec![vec![1.0, 0.0]], vec![0.0, 0.0]);
        let s = omp_select(
            &t,
            &SelectorConfig {
                budget: Some(1),
                ..cfg(0.0)
            },
        )
        .unwrap();
        assert!(s.ids.is_empty() && s.residuals.is_empty());
    }

    #[test]
    fn budget_resolution() {
        let c = SelectorConfig::default();
        assert_eq!(c.budget_for(200), 10);
        assert_eq!(c.budget_for(3), 1);
        assert_eq!(SelectorConfig { budget: Some(7), ..c }.budget_for(200), 7);
    }
}
