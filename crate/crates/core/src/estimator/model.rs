use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::mles::{fit_mles, gamma_weights, lrt_matrix, Variances};
use crate::estimator::penalty::{PenaltyConfig, PenaltyKind, PriorTermMode};
use crate::estimator::{accumulate_stats, Dataset};
use crate::partitions::{PartitionSet, Scheme, VarianceMode, DEFAULT_K_MAX};

const SIMPLEX_TOL: f64 = 1e-9;

/// A fitted multiDA classifier. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub(crate) parts: PartitionSet,
    pub(crate) penalty: PenaltyConfig,
    pub(crate) prior_term_mode: PriorTermMode,
    pub(crate) n: usize,
    pub(crate) class_names: Vec<String>,
    pub(crate) feature_names: Vec<String>,
    pub(crate) pi: Vec<f64>,
    pub(crate) mu: Array2<f64>,
    pub(crate) sigma2: Variances,
    pub(crate) gamma: Array2<f64>,
    pub(crate) lambda: Array2<f64>,
    pub(crate) variance_floor: Vec<f64>,
}

/// Everything needed to fit, short of the data.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub scheme: Scheme,
    /// Required for [`Scheme::User`]: `K` rows of `M` group labels.
    pub user_matrix: Option<Vec<Vec<i64>>>,
    pub penalty: PenaltyKind,
    pub variance_mode: VarianceMode,
    pub prior_term_mode: PriorTermMode,
    pub k_max: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            scheme: Scheme::Exhaustive,
            user_matrix: None,
            penalty: PenaltyKind::Ebic,
            variance_mode: VarianceMode::Equal,
            prior_term_mode: PriorTermMode::Log,
            k_max: DEFAULT_K_MAX,
        }
    }
}

impl FitOptions {
    pub fn with_variance(mut self, mode: VarianceMode) -> Self {
        self.variance_mode = mode;
        self
    }

    pub fn with_penalty(mut self, penalty: PenaltyKind) -> Self {
        self.penalty = penalty;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn partition_set(&self, k: usize) -> Result<PartitionSet> {
        PartitionSet::build_with_limit(
            k,
            self.scheme,
            self.user_matrix.as_deref(),
            self.variance_mode,
            self.k_max,
        )
    }

    pub fn fit(&self, data: &Dataset) -> Result<FittedModel> {
        let parts = self.partition_set(data.num_classes())?;
        let penalty = PenaltyConfig::resolve(self.penalty, data.n(), data.p())?;
        fit(data, &parts, penalty, self.prior_term_mode)
    }
}

/// Fits the model: sufficient statistics, closed-form MLEs, likelihood-ratio
/// statistics and penalized hypothesis weights for every feature. The
/// variance model is taken from `parts`.
pub fn fit(
    data: &Dataset,
    parts: &PartitionSet,
    penalty: PenaltyConfig,
    prior_term_mode: PriorTermMode,
) -> Result<FittedModel> {
    let k = data.num_classes();
    if data.n() < k + 1 {
        return Err(Error::InvalidData(format!(
            "need at least K + 1 = {} samples, got {}",
            k + 1,
            data.n()
        )));
    }
    let stats = accumulate_stats(data, parts)?;
    let mles = fit_mles(&stats, parts);
    if parts.len() > 1 && mles.admissible[1..].iter().all(|a| !a) {
        log::warn!(
            "every non-null hypothesis is inadmissible (group sizes too small); fitting the null-only model"
        );
    }
    let lambda = lrt_matrix(&stats, &mles, parts);

    let m_count = parts.len();
    let mut gamma = vec![0.0; data.p() * m_count];
    gamma
        .par_chunks_mut(m_count)
        .enumerate()
        .for_each(|(j, row)| {
            let lam = lambda.row(j);
            let w = gamma_weights(lam.as_slice().expect("contiguous"), parts.dof(), penalty.c);
            row.copy_from_slice(&w);
        });

    Ok(FittedModel {
        parts: parts.clone(),
        penalty,
        prior_term_mode,
        n: data.n(),
        class_names: data.class_names().to_vec(),
        feature_names: data.feature_names().to_vec(),
        pi: mles.pi,
        mu: mles.mu,
        sigma2: mles.sigma2,
        gamma: Array2::from_shape_vec((data.p(), m_count), gamma).expect("shape"),
        lambda,
        variance_floor: mles.variance_floor,
    })
}

/// Class probabilities and hard labels for a batch of queries.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// `n* x K`, rows on the simplex.
    pub probabilities: Array2<f64>,
    /// 0-based argmax class per row, ties to the lowest index.
    pub labels: Vec<usize>,
    /// `n* x K` discriminant scores.
    pub eta: Array2<f64>,
}

/// One row of the selected-feature table.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectedFeature {
    pub feature: usize,
    pub name: String,
    /// 0-based hypothesis index.
    pub hypothesis: usize,
    pub weight: f64,
}

fn log_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + d * d / var)
}

impl FittedModel {
    pub fn partition_set(&self) -> &PartitionSet {
        &self.parts
    }

    pub fn variance_mode(&self) -> VarianceMode {
        self.parts.variance_mode()
    }

    pub fn penalty(&self) -> &PenaltyConfig {
        &self.penalty
    }

    pub fn prior_term_mode(&self) -> PriorTermMode {
        self.prior_term_mode
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// `p x z_M` group means.
    pub fn mu(&self) -> &Array2<f64> {
        &self.mu
    }

    pub fn sigma2(&self) -> &Variances {
        &self.sigma2
    }

    /// `p x M` hypothesis weights.
    pub fn gamma(&self) -> &Array2<f64> {
        &self.gamma
    }

    /// `p x M` likelihood-ratio statistics; `-inf` marks inadmissible
    /// hypotheses.
    pub fn lambda(&self) -> &Array2<f64> {
        &self.lambda
    }

    pub fn variance_floor(&self) -> &[f64] {
        &self.variance_floor
    }

    /// Number of features whose most probable hypothesis is not the null.
    pub fn num_discriminative(&self) -> usize {
        self.gamma
            .outer_iter()
            .filter(|row| argmax(row.as_slice().expect("contiguous")) != 0)
            .count()
    }

    /// Features whose most probable hypothesis is non-null with weight at
    /// least `threshold`, heaviest first.
    pub fn selected_features(&self, threshold: f64) -> Vec<SelectedFeature> {
        let mut out: Vec<SelectedFeature> = self
            .gamma
            .outer_iter()
            .enumerate()
            .filter_map(|(j, row)| {
                let row = row.as_slice().expect("contiguous");
                let m = argmax(row);
                (m != 0 && row[m] >= threshold).then(|| SelectedFeature {
                    feature: j,
                    name: self.feature_names[j].clone(),
                    hypothesis: m,
                    weight: row[m],
                })
            })
            .collect();
        out.sort_by(|a, b| b.weight.total_cmp(&a.weight));
        out
    }

    /// Class probabilities for each row of `x`.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Prediction> {
        let p = self.p();
        if x.ncols() != p {
            return Err(Error::DimensionMismatch(format!(
                "query has {} features, model expects p = {p}",
                x.ncols()
            )));
        }
        if let Some(((i, j), v)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite query value {v} at row {}, column {}",
                i + 1,
                j + 1
            )));
        }
        let k = self.num_classes();
        let n_star = x.nrows();
        let parts = &self.parts;
        let z = parts.total_groups();
        let mut hyp_of = vec![0usize; z];
        for m in 0..parts.len() {
            let o = parts.offset(m);
            hyp_of[o..o + parts.groups()[m]].fill(m);
        }
        let prior: Vec<f64> = self
            .pi
            .iter()
            .map(|&pi| self.prior_term_mode.term(pi))
            .collect();

        let mut eta = vec![0.0; n_star * k];
        eta.par_chunks_mut(k).enumerate().for_each(|(i, eta_row)| {
            let mut log_dens = vec![0.0; z];
            for j in 0..p {
                let xj = x[[i, j]];
                for (c, ld) in log_dens.iter_mut().enumerate() {
                    let var = self.sigma2.get(j, hyp_of[c], c);
                    *ld = log_normal_pdf(xj, self.mu[[j, c]], var);
                }
                for m in 0..parts.len() {
                    let g = self.gamma[[j, m]];
                    if g == 0.0 {
                        continue;
                    }
                    for (cls, e) in eta_row.iter_mut().enumerate() {
                        *e += g * log_dens[parts.component(cls, m)];
                    }
                }
            }
            for (e, pr) in eta_row.iter_mut().zip(&prior) {
                *e += pr;
            }
        });

        let eta = Array2::from_shape_vec((n_star, k), eta).expect("shape");
        let mut probabilities = Array2::zeros((n_star, k));
        let mut labels = Vec::with_capacity(n_star);
        for (row, mut out) in eta.outer_iter().zip(probabilities.outer_iter_mut()) {
            let row = row.as_slice().expect("contiguous");
            let probs = crate::softmax(row);
            labels.push(argmax(row));
            for (o, pr) in out.iter_mut().zip(probs) {
                *o = pr;
            }
        }
        Ok(Prediction {
            probabilities,
            labels,
            eta,
        })
    }

    /// Checks every structural and numeric invariant of the model.
    pub fn validate(&self) -> Result<()> {
        let p = self.p();
        let m_count = self.parts.len();
        let k = self.num_classes();
        let z = self.parts.total_groups();
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        if k != self.parts.num_classes() {
            return bad(format!("{k} class names but S has {} rows", self.parts.num_classes()));
        }
        if self.gamma.ncols() != m_count || self.lambda.dim() != (p, m_count) {
            return bad("gamma_hat / lambda shape does not match p x M".into());
        }
        if self.mu.dim() != (p, z) {
            return bad("mu shape does not match p x z_M".into());
        }
        let expected_sigma = match self.parts.variance_mode() {
            VarianceMode::Equal => (p, m_count),
            VarianceMode::Unequal => (p, z),
        };
        if self.sigma2.mode() != self.parts.variance_mode() || self.sigma2.as_array().dim() != expected_sigma {
            return bad("sigma2 shape does not match the variance mode".into());
        }
        if self.feature_names.len() != p || self.variance_floor.len() != p {
            return bad("feature_names / variance_floor length differs from p".into());
        }
        if self.pi.len() != k {
            return bad("pi length differs from K".into());
        }
        if self.pi.iter().any(|&v| !(0.0..=1.0).contains(&v))
            || (self.pi.iter().sum::<f64>() - 1.0).abs() > SIMPLEX_TOL
        {
            return bad("pi is not on the simplex".into());
        }
        if !self.penalty.c.is_finite() || self.penalty.c < 0.0 {
            return bad(format!("penalty constant {} is invalid", self.penalty.c));
        }
        for (j, row) in self.gamma.outer_iter().enumerate() {
            if row.iter().any(|&g| !(0.0..=1.0).contains(&g)) {
                return bad(format!("gamma_hat row {} has entries outside [0, 1]", j + 1));
            }
            let s: f64 = row.sum();
            if (s - 1.0).abs() > SIMPLEX_TOL {
                return bad(format!("gamma_hat row {} sums to {s}", j + 1));
            }
        }
        for (j, row) in self.lambda.outer_iter().enumerate() {
            if row[0] != 0.0 {
                return bad(format!("lambda row {} has non-zero null entry", j + 1));
            }
            if row.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
                return bad(format!("lambda row {} is not finite", j + 1));
            }
        }
        if self.mu.iter().any(|v| !v.is_finite()) {
            return bad("mu has non-finite entries".into());
        }
        for (j, row) in self.sigma2.as_array().outer_iter().enumerate() {
            let floor = self.variance_floor[j];
            if !(floor.is_finite() && floor > 0.0) {
                return bad(format!("variance floor of feature {} is invalid", j + 1));
            }
            if row.iter().any(|&v| !v.is_finite() || v < floor) {
                return bad(format!("sigma2 row {} is below its variance floor", j + 1));
            }
        }
        Ok(())
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}
