use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::report::{named, ProbeReport, Relation};
use crate::error::{Error, Result};
use crate::numcore::{axpy, dot, RealMatrix};

/// Least squares `L(θ) = (1/n)·Σ_i ½(x_iᵀθ − y_i)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProblem {
    pub features: RealMatrix,
    pub targets: Vec<f64>,
}

impl QuadraticProblem {
    pub fn new(features: RealMatrix, targets: Vec<f64>) -> Result<Self> {
        if features.rows() != targets.len() || features.rows() == 0 {
            return Err(Error::dim("quadratic targets", features.rows(), targets.len()));
        }
        Ok(Self { features, targets })
    }

    /// Gaussian features with a noisy linear target.
    pub fn random(samples: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
        let truth: Vec<f64> = (0..dim).map(|_| draw()).collect();
        let rows: Vec<Vec<f64>> = (0..samples).map(|_| (0..dim).map(|_| draw()).collect()).collect();
        let targets = rows.iter().map(|r| dot(r, &truth) + 0.5 * draw()).collect();
        let features = RealMatrix::from_rows(&rows, dim).expect("consistent rows");
        Self { features, targets }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    fn sample_residual(&self, i: usize, theta: &[f64]) -> f64 {
        dot(self.features.row(i), theta) - self.targets[i]
    }

    pub fn loss(&self, theta: &[f64]) -> f64 {
        let n = self.len() as f64;
        (0..self.len())
            .map(|i| 0.5 * self.sample_residual(i, theta).powi(2))
            .sum::<f64>()
            / n
    }

    /// Gradient of `Σ_i w_i ½(x_iᵀθ − y_i)²` over `ids`.
    pub fn weighted_gradient(&self, ids: &[usize], weights: &[f64], theta: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        for (&i, &w) in ids.iter().zip(weights) {
            axpy(w * self.sample_residual(i, theta), self.features.row(i), &mut g);
        }
        g
    }

    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let ids: Vec<usize> = (0..self.len()).collect();
        let w = vec![1.0 / self.len() as f64; self.len()];
        self.weighted_gradient(&ids, &w, theta)
    }

    /// Largest eigenvalue of the Hessian `XᵀX / n`, the exact gradient Lipschitz constant.
    pub fn lipschitz(&self) -> f64 {
        let x = DMatrix::from_row_slice(self.len(), self.dim(), self.features.as_slice());
        let h = (x.transpose() * &x) / self.len() as f64;
        h.symmetric_eigenvalues().iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    /// Fixed `α = factor / L`.
    Constant(f64),
    /// `α_t = (2/L)·⟨∇L, ∇L_rdc⟩ / ‖∇L_rdc‖²` each step (no step when negative).
    ExactBound,
}

impl StepSchedule {
    pub fn label(&self) -> String {
        match self {
            Self::Constant(f) => format!("constant({f}/L)"),
            Self::ExactBound => "exact_bound".into(),
        }
    }
}

/// Descent on the weighted subset loss; counts steps that satisfied both
/// descent conditions yet increased the full loss.
pub fn monotone_descent_check(
    problem: &QuadraticProblem,
    ids: &[usize],
    weights: &[f64],
    schedule: StepSchedule,
    steps: usize,
) -> Result<ProbeReport> {
    if ids.len() != weights.len() {
        return Err(Error::dim("subset weights", ids.len(), weights.len()));
    }
    if let Some(&bad) = ids.iter().find(|&&i| i >= problem.len()) {
        return Err(Error::InvalidArgument(format!("sample id {bad} out of range")));
    }
    let lip = problem.lipschitz();
    let mut theta = vec![0.0; problem.dim()];
    let (mut gated, mut checked, mut violations) = (0usize, 0usize, 0usize);
    let mut worst = 0.0f64;
    for _ in 0..steps {
        let full = problem.gradient(&theta);
        let sub = problem.weighted_gradient(ids, weights, &theta);
        let inner = dot(&full, &sub);
        let sub_sq = dot(&sub, &sub);
        if sub_sq == 0.0 {
            break;
        }
        let limit = 2.0 / lip * inner / sub_sq;
        let alpha = match schedule {
            StepSchedule::Constant(f) => f / lip,
            StepSchedule::ExactBound => limit.max(0.0),
        };
        let before = problem.loss(&theta);
        axpy(-alpha, &sub, &mut theta);
        let after = problem.loss(&theta);
        if inner >= 0.0 && alpha <= limit {
            checked += 1;
            let rise = after - before;
            worst = worst.max(rise / before.abs().max(f64::MIN_POSITIVE));
            if rise > 1e-12 * before.abs() {
                violations += 1;
            }
        } else {
            gated += 1;
        }
    }
    Ok(ProbeReport::new(
        "monotone_descent",
        format!(
            "samples={} subset={} schedule={}",
            problem.len(),
            ids.len(),
            schedule.label()
        ),
        named(&[
            ("lipschitz", lip),
            ("checked_steps", checked as f64),
            ("gated_steps", gated as f64),
            ("worst_relative_rise", worst),
        ]),
        violations as f64,
        Relation::AtMost,
        0.0,
        0.0,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lipschitz_of_diagonal_design() {
        let x = RealMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]], 2).unwrap();
        let p = QuadraticProblem::new(x, vec![1.0, 1.0]).unwrap();
        assert!((p.lipschitz() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = QuadraticProblem::random(12, 3, 1);
        let theta = vec![0.3, -0.2, 0.7];
        let g = p.gradient(&theta);
        for k in 0..3 {
            let mut a = theta.clone();
            let mut b = theta.clone();
            a[k] += 1e-6;
            b[k] -= 1e-6;
            let fd = (p.loss(&a) - p.loss(&b)) / 2e-6;
            assert!((fd - g[k]).abs() < 1e-6);
        }
    }

    #[test]
    fn full_data_descent_has_no_violations() {
        let p = QuadraticProblem::random(20, 4, 2);
        let ids: Vec<usize> = (0..20).collect();
        let w = vec![1.0 / 20.0; 20];
        let r = monotone_descent_check(&p, &ids, &w, StepSchedule::Constant(1.0), 50).unwrap();
        assert!(r.passed);
        assert_eq!(r.get("checked_steps"), Some(50.0));
    }

    #[test]
    fn opposed_subset_steps_are_gated() {
        // a subset whose gradient points away from the full gradient
        let x = RealMatrix::from_rows(&[vec![1.0], vec![1.0]], 1).unwrap();
        let p = QuadraticProblem::new(x, vec![1.0, -3.0]).unwrap();
        let r = monotone_descent_check(&p, &[0], &[1.0], StepSchedule::Constant(0.5), 1).unwrap();
        assert_eq!(r.get("gated_steps"), Some(1.0));
        assert_eq!(r.get("checked_steps"), Some(0.0));
        assert!(r.passed);
    }
}
