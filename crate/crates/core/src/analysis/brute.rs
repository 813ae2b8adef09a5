use crate::error::{Error, Result};
use crate::selector::{omp_select, Dictionary, GradientTable, SelectorConfig};

use super::report::{named, ProbeReport, Relation};

pub const MAX_BRUTE_CANDIDATES: usize = 14;
pub const MAX_BRUTE_SUBSET: usize = 4;

/// Exhaustive optimum over every subset of size `1..=k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceOptimum {
    /// Enumerated subset (trajectory ids, ascending).
    pub ids: Vec<usize>,
    /// Weight per id; members dropped by the nonnegativity rule carry 0.
    pub weights: Vec<f64>,
    pub err_reg: f64,
}

fn check_guard(table: &GradientTable, k: usize) -> Result<()> {
    if table.len() > MAX_BRUTE_CANDIDATES || k > MAX_BRUTE_SUBSET {
        return Err(Error::GuardExceeded(format!(
            "exhaustive search limited to {MAX_BRUTE_CANDIDATES} candidates and k <= {MAX_BRUTE_SUBSET}, got {} and {k}",
            table.len()
        )));
    }
    if k == 0 || table.is_empty() {
        return Err(Error::InvalidArgument(
            "exhaustive search needs k >= 1 and a candidate".into(),
        ));
    }
    Ok(())
}

/// Visits every subset of `0..n` with `1..=k` members in lexicographic order.
fn for_each_subset(n: usize, k: usize, mut visit: impl FnMut(&[usize]) -> Result<()>) -> Result<()> {
    fn rec(
        start: usize,
        n: usize,
        k: usize,
        cur: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]) -> Result<()>,
    ) -> Result<()> {
        for i in start..n {
            cur.push(i);
            visit(cur)?;
            if cur.len() < k {
                rec(i + 1, n, k, cur, visit)?;
            }
            cur.pop();
        }
        Ok(())
    }
    rec(0, n, k, &mut Vec::with_capacity(k), &mut visit)
}

pub fn brute_force_optimum(table: &GradientTable, k: usize, lambda: f64) -> Result<BruteForceOptimum> {
    check_guard(table, k)?;
    let dict = Dictionary::new(table);
    let mut best: Option<BruteForceOptimum> = None;
    // lexicographic visiting order means strict improvement keeps the
    // lexicographically smallest minimizer
    for_each_subset(table.len(), k, |subset| {
        // a singular subset spans nothing its nonsingular subsets miss
        let fit = match dict.fit_nonneg(subset, lambda) {
            Ok(fit) => fit,
            Err(Error::Singular { .. }) => return Ok(()),
            Err(e) => return Err(e),
        };
        if best.as_ref().is_none_or(|b| fit.err_reg < b.err_reg) {
            let weights = subset
                .iter()
                .map(|i| fit.support.iter().position(|s| s == i).map_or(0.0, |p| fit.weights[p]))
                .collect();
            best = Some(BruteForceOptimum {
                ids: subset.iter().map(|&i| table.candidates[i]).collect(),
                weights,
                err_reg: fit.err_reg,
            });
        }
        Ok(())
    })?;
    Ok(best.unwrap_or_else(|| BruteForceOptimum {
        ids: Vec::new(),
        weights: Vec::new(),
        err_reg: crate::numcore::norm2(&table.full_gradient),
    }))
}

/// `5(ln K + 2)`, the greedy approximation factor for `K` clusters.
pub fn greedy_ratio_bound(cluster_count: usize) -> f64 {
    5.0 * ((cluster_count.max(1) as f64).ln() + 2.0)
}

/// Compares the pursuit with budget `k` against the exhaustive optimum.
pub fn greedy_ratio_check(table: &GradientTable, k: usize, lambda: f64, cluster_count: usize) -> Result<ProbeReport> {
    check_guard(table, k)?;
    let opt = brute_force_optimum(table, k, lambda)?;
    let cfg = SelectorConfig {
        lambda,
        tolerance: f64::MIN_POSITIVE,
        budget: Some(k),
        ..SelectorConfig::default()
    };
    let sel = omp_select(table, &cfg)?;
    let dict = Dictionary::new(table);
    let support: Vec<usize> = sel
        .ids
        .iter()
        .map(|id| table.candidates.binary_search(id).expect("selected id is a candidate"))
        .collect();
    let greedy = dict.err_reg(&support, &sel.weights, lambda);
    let ratio = greedy.max(1e-12) / opt.err_reg.max(1e-12);
    Ok(ProbeReport::new(
        "greedy_ratio",
        format!(
            "candidates={} k={k} lambda={lambda:e} cluster_count={cluster_count}",
            table.len()
        ),
        named(&[
            ("greedy_err_reg", greedy),
            ("optimal_err_reg", opt.err_reg),
            ("greedy_size", sel.ids.len() as f64),
        ]),
        ratio,
        Relation::AtMost,
        greedy_ratio_bound(cluster_count),
        0.0,
    ))
}
