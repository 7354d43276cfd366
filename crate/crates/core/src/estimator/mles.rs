//! Closed-form maximum-likelihood estimates, likelihood-ratio statistics and
//! hypothesis weights.

use ndarray::Array2;
use rayon::prelude::*;

use crate::estimator::SufficientStats;
use crate::partitions::{PartitionSet, VarianceMode};

/// Relative size of the variance floor.
pub const VARIANCE_FLOOR_SCALE: f64 = 1e-8;

/// Variance estimates under one of the two variance models.
#[derive(Debug, Clone, PartialEq)]
pub enum Variances {
    /// `p x M`: one variance per feature and hypothesis.
    Equal(Array2<f64>),
    /// `p x z_M`: one variance per feature and group component.
    Unequal(Array2<f64>),
}

impl Variances {
    pub fn mode(&self) -> VarianceMode {
        match self {
            Variances::Equal(_) => VarianceMode::Equal,
            Variances::Unequal(_) => VarianceMode::Unequal,
        }
    }

    pub fn as_array(&self) -> &Array2<f64> {
        match self {
            Variances::Equal(a) | Variances::Unequal(a) => a,
        }
    }

    /// Variance used by component `c` of hypothesis `m` for feature `j`.
    #[inline]
    pub fn get(&self, j: usize, m: usize, c: usize) -> f64 {
        match self {
            Variances::Equal(a) => a[[j, m]],
            Variances::Unequal(a) => a[[j, c]],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mles {
    /// `p x z_M` group means.
    pub mu: Array2<f64>,
    pub sigma2: Variances,
    /// Class proportions.
    pub pi: Vec<f64>,
    /// Per-hypothesis admissibility; excluded hypotheses get zero weight.
    pub admissible: Vec<bool>,
    /// Per-feature lower bound applied to every variance.
    pub variance_floor: Vec<f64>,
}

/// Hypotheses whose variance MLE is defined and non-degenerate.
///
/// Equal variance needs `n > G_m`; unequal variance needs two samples in
/// every group. The null is always kept.
pub fn admissible_hypotheses(stats: &SufficientStats, parts: &PartitionSet) -> Vec<bool> {
    let n = stats.n();
    (0..parts.len())
        .map(|m| {
            if m == 0 {
                return true;
            }
            match parts.variance_mode() {
                VarianceMode::Equal => n > parts.groups()[m],
                VarianceMode::Unequal => {
                    let o = parts.offset(m);
                    stats.group_counts()[o..o + parts.groups()[m]]
                        .iter()
                        .all(|&c| c >= 2)
                }
            }
        })
        .collect()
}

/// Means, variances and class proportions from the sufficient statistics.
pub fn fit_mles(stats: &SufficientStats, parts: &PartitionSet) -> Mles {
    let n = stats.n() as f64;
    let p = stats.p();
    let z = parts.total_groups();
    let m_count = parts.len();
    let counts = stats.group_counts();

    let mut mu = stats.sums().clone();
    for (c, mut col) in mu.columns_mut().into_iter().enumerate() {
        let nc = counts[c] as f64;
        col.mapv_inplace(|s| s / nc);
    }

    // Component 0 is the null group, so its centered SS over n is the
    // feature's overall variance MLE.
    let variance_floor: Vec<f64> = (0..p)
        .map(|j| {
            let v = stats.centered_ss()[[j, 0]] / n;
            VARIANCE_FLOOR_SCALE * if v > 0.0 { v } else { 1.0 }
        })
        .collect();

    let css = stats.centered_ss();
    let sigma2 = match parts.variance_mode() {
        VarianceMode::Equal => {
            let mut out = vec![0.0; p * m_count];
            out.par_chunks_mut(m_count).enumerate().for_each(|(j, row)| {
                for (m, v) in row.iter_mut().enumerate() {
                    let o = parts.offset(m);
                    let ss: f64 = (o..o + parts.groups()[m]).map(|c| css[[j, c]]).sum();
                    *v = (ss / n).max(variance_floor[j]);
                }
            });
            Variances::Equal(Array2::from_shape_vec((p, m_count), out).expect("shape"))
        }
        VarianceMode::Unequal => {
            let mut out = vec![0.0; p * z];
            out.par_chunks_mut(z).enumerate().for_each(|(j, row)| {
                for (c, v) in row.iter_mut().enumerate() {
                    *v = (css[[j, c]] / counts[c] as f64).max(variance_floor[j]);
                }
            });
            Variances::Unequal(Array2::from_shape_vec((p, z), out).expect("shape"))
        }
    };

    let pi = stats.class_counts().iter().map(|&c| c as f64 / n).collect();
    Mles {
        mu,
        sigma2,
        pi,
        admissible: admissible_hypotheses(stats, parts),
        variance_floor,
    }
}

/// Likelihood-ratio statistic of hypothesis `m` against the null for
/// feature `j`. Inadmissible hypotheses give `-inf`; the null gives exactly 0.
pub fn lrt(stats: &SufficientStats, mles: &Mles, parts: &PartitionSet, j: usize, m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    if !mles.admissible[m] {
        return f64::NEG_INFINITY;
    }
    let n = stats.n() as f64;
    let null_term = n * mles.sigma2.get(j, 0, 0).ln();
    match &mles.sigma2 {
        Variances::Equal(s) => null_term - n * s[[j, m]].ln(),
        Variances::Unequal(s) => {
            let o = parts.offset(m);
            let alt: f64 = (o..o + parts.groups()[m])
                .map(|c| stats.group_counts()[c] as f64 * s[[j, c]].ln())
                .sum();
            null_term - alt
        }
    }
}

/// `p x M` matrix of likelihood-ratio statistics.
pub fn lrt_matrix(stats: &SufficientStats, mles: &Mles, parts: &PartitionSet) -> Array2<f64> {
    let p = stats.p();
    let m_count = parts.len();
    let mut out = vec![0.0; p * m_count];
    out.par_chunks_mut(m_count).enumerate().for_each(|(j, row)| {
        for (m, v) in row.iter_mut().enumerate() {
            *v = lrt(stats, mles, parts, j, m);
        }
    });
    Array2::from_shape_vec((p, m_count), out).expect("shape")
}

/// Posterior hypothesis weights for one feature: a softmax of
/// `lambda_m / 2 - C * nu_m`. Entries with `lambda = -inf` get weight 0.
pub fn gamma_weights(lambda: &[f64], dof: &[usize], c: f64) -> Vec<f64> {
    debug_assert_eq!(lambda.len(), dof.len());
    let scores: Vec<f64> = lambda
        .iter()
        .zip(dof)
        .map(|(&l, &nu)| {
            if l == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                0.5 * l - c * nu as f64
            }
        })
        .collect();
    crate::softmax(&scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{accumulate_stats, Dataset};
    use crate::partitions::Scheme;
    use ndarray::array;

    fn toy(mode: VarianceMode) -> (SufficientStats, PartitionSet) {
        let d = Dataset::from_raw_labels(array![[0.], [2.], [4.], [6.]], &["1", "1", "2", "2"], None)
            .unwrap();
        let s = PartitionSet::build(2, Scheme::Exhaustive, None, mode).unwrap();
        (accumulate_stats(&d, &s).unwrap(), s)
    }

    #[test]
    fn toy_mles() {
        let (st, s) = toy(VarianceMode::Equal);
        let f = fit_mles(&st, &s);
        assert_eq!(f.mu.row(0).to_vec(), vec![3.0, 1.0, 5.0]);
        assert_eq!(f.sigma2.as_array().row(0).to_vec(), vec![5.0, 1.0]);
        assert_eq!(f.pi, vec![0.5, 0.5]);
        assert_eq!(f.admissible, vec![true, true]);
    }

    #[test]
    fn toy_lrt() {
        let (st, s) = toy(VarianceMode::Equal);
        let f = fit_mles(&st, &s);
        assert_eq!(lrt(&st, &f, &s, 0, 0), 0.0);
        let l = lrt(&st, &f, &s, 0, 1);
        assert!((l - 4.0 * 5f64.ln()).abs() < 1e-12);
        assert!((l - 6.4378).abs() < 1e-4);
    }

    #[test]
    fn toy_unequal() {
        let (st, s) = toy(VarianceMode::Unequal);
        let f = fit_mles(&st, &s);
        assert_eq!(f.sigma2.as_array().row(0).to_vec(), vec![5.0, 1.0, 1.0]);
        // Equal group variances make both models agree.
        let l = lrt(&st, &f, &s, 0, 1);
        assert!((l - 4.0 * 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn constant_feature_hits_floor() {
        let d = Dataset::from_raw_labels(array![[3.], [3.], [3.], [3.]], &["a", "a", "b", "b"], None)
            .unwrap();
        let s = PartitionSet::build(2, Scheme::Exhaustive, None, VarianceMode::Equal).unwrap();
        let st = accumulate_stats(&d, &s).unwrap();
        let f = fit_mles(&st, &s);
        assert!(f.mu.iter().all(|&m| m == 3.0));
        assert!(f.sigma2.as_array().iter().all(|&v| v == VARIANCE_FLOOR_SCALE));
        assert_eq!(lrt(&st, &f, &s, 0, 1), 0.0);
    }

    #[test]
    fn unequal_needs_two_per_group() {
        let d = Dataset::from_raw_labels(array![[1.], [2.], [3.]], &["a", "b", "b"], None).unwrap();
        let s = PartitionSet::build(2, Scheme::Exhaustive, None, VarianceMode::Unequal).unwrap();
        let st = accumulate_stats(&d, &s).unwrap();
        let f = fit_mles(&st, &s);
        assert_eq!(f.admissible, vec![true, false]);
        assert_eq!(lrt(&st, &f, &s, 0, 1), f64::NEG_INFINITY);
        let se = PartitionSet::build(2, Scheme::Exhaustive, None, VarianceMode::Equal).unwrap();
        assert_eq!(fit_mles(&st, &se).admissible, vec![true, true]);
    }

    #[test]
    fn weights() {
        let g = gamma_weights(&[0.0; 5], &[0, 1, 1, 1, 2], 0.0);
        for w in &g {
            assert!((w - 0.2).abs() < 1e-15);
        }
        let g = gamma_weights(&[0.0, 4.0 * 5f64.ln()], &[0, 1], 4f64.ln());
        assert!((g[1] - 25.0 / 29.0).abs() < 1e-12);
        assert!((g[1] - 0.862).abs() < 1e-3);
        let g = gamma_weights(&[0.0, f64::NEG_INFINITY], &[0, 1], 1.0);
        assert_eq!(g, vec![1.0, 0.0]);
        // Huge statistics stay finite.
        let g = gamma_weights(&[0.0, 1e6, 2e6], &[0, 1, 2], 1.0);
        assert!(g.iter().all(|w| w.is_finite()));
        assert_eq!(g[2], 1.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn penalty_monotone(
                lam in proptest::collection::vec(0.0f64..60.0, 4),
                c1 in 0.0f64..20.0,
                dc in 0.0f64..20.0,
            ) {
                let mut lambda = vec![0.0];
                lambda.extend(lam);
                let dof = [0, 1, 1, 1, 2];
                let lo = gamma_weights(&lambda, &dof, c1);
                let hi = gamma_weights(&lambda, &dof, c1 + dc);
                let s: f64 = lo.iter().sum();
                prop_assert!((s - 1.0).abs() < 1e-12);
                prop_assert!(hi[0] >= lo[0] - 1e-15);
                let lo_alt: f64 = lo[1..].iter().sum();
                let hi_alt: f64 = hi[1..].iter().sum();
                prop_assert!(hi_alt <= lo_alt + 1e-12);
            }

            #[test]
            fn penalty_monotone_entrywise_for_equal_dof(
                lam in proptest::collection::vec(0.0f64..60.0, 3),
                c1 in 0.0f64..20.0,
                dc in 0.0f64..20.0,
            ) {
                let mut lambda = vec![0.0];
                lambda.extend(lam);
                let dof = [0, 1, 1, 1];
                let lo = gamma_weights(&lambda, &dof, c1);
                let hi = gamma_weights(&lambda, &dof, c1 + dc);
                for m in 1..4 {
                    prop_assert!(hi[m] <= lo[m] * (1.0 + 1e-12) + 1e-300);
                }
            }
        }
    }
}
