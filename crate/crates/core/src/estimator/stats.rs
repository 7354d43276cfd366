use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::Dataset;
use crate::partitions::PartitionSet;

/// Per-feature group sums for every hypothesis.
///
/// Components are laid out per feature with the partition set's offsets:
/// hypothesis `m`, group `g` (1-based) lives at `offset(m) + g - 1`.
/// Besides the raw sums, the within-group centered sum of squares is kept;
/// it is accumulated from per-class two-pass moments so that the variance
/// estimates do not suffer from cancellation on data with a large mean.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    n: usize,
    class_counts: Vec<usize>,
    group_counts: Vec<usize>,
    sums: Array2<f64>,
    centered_ss: Array2<f64>,
}

impl SufficientStats {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.sums.nrows()
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    /// `n_mg` per component; identical for every feature.
    pub fn group_counts(&self) -> &[usize] {
        &self.group_counts
    }

    /// Sum of `x_ij` over the component's samples, `p x z_M`.
    pub fn sums(&self) -> &Array2<f64> {
        &self.sums
    }

    /// `sum (x_ij - mean)^2` over the component's samples, `p x z_M`.
    pub fn centered_ss(&self) -> &Array2<f64> {
        &self.centered_ss
    }

    /// Raw sum of squares of feature `j` over component `c`.
    pub fn sum_sq(&self, j: usize, c: usize) -> f64 {
        let s = self.sums[[j, c]];
        self.centered_ss[[j, c]] + s * s / self.group_counts[c] as f64
    }
}

/// Count, mean and centered sum of squares of one feature within each class.
pub(crate) struct ClassMoments {
    pub sums: Vec<f64>,
    pub means: Vec<f64>,
    pub ss: Vec<f64>,
}

pub(crate) fn class_moments(
    column: ArrayView1<'_, f64>,
    labels: &[usize],
    counts: &[usize],
) -> ClassMoments {
    let k = counts.len();
    let mut sums = vec![0.0; k];
    for (&v, &l) in column.iter().zip(labels) {
        sums[l] += v;
    }
    let means: Vec<f64> = sums
        .iter()
        .zip(counts)
        .map(|(s, &c)| s / c as f64)
        .collect();
    let mut ss = vec![0.0; k];
    for (&v, &l) in column.iter().zip(labels) {
        let d = v - means[l];
        ss[l] += d * d;
    }
    ClassMoments { sums, means, ss }
}

/// Classes in each component, in component order.
pub(crate) fn component_members(parts: &PartitionSet) -> Vec<Vec<usize>> {
    let mut members = vec![Vec::new(); parts.total_groups()];
    for m in 0..parts.len() {
        for k in 0..parts.num_classes() {
            members[parts.component(k, m)].push(k);
        }
    }
    members
}

/// Accumulates the per-(feature, hypothesis, group) sufficient statistics.
pub fn accumulate_stats(data: &Dataset, parts: &PartitionSet) -> Result<SufficientStats> {
    if data.num_classes() != parts.num_classes() {
        return Err(Error::DimensionMismatch(format!(
            "dataset has {} classes but the partition set is built for {}",
            data.num_classes(),
            parts.num_classes()
        )));
    }
    let n = data.n();
    let p = data.p();
    let z = parts.total_groups();
    let members = component_members(parts);
    let counts = data.class_counts();
    let group_counts: Vec<usize> = members
        .iter()
        .map(|cls| cls.iter().map(|&k| counts[k]).sum())
        .collect();

    let xt = data.x().t();
    let labels = data.labels();
    let mut sums = vec![0.0; p * z];
    let mut css = vec![0.0; p * z];
    sums.par_chunks_mut(z)
        .zip(css.par_chunks_mut(z))
        .enumerate()
        .for_each(|(j, (sum_row, css_row))| {
            let mom = class_moments(xt.row(j), labels, counts);
            for (c, cls) in members.iter().enumerate() {
                let s: f64 = cls.iter().map(|&k| mom.sums[k]).sum();
                let mean = s / group_counts[c] as f64;
                let ss: f64 = cls
                    .iter()
                    .map(|&k| {
                        let d = mom.means[k] - mean;
                        mom.ss[k] + counts[k] as f64 * d * d
                    })
                    .sum();
                sum_row[c] = s;
                css_row[c] = ss;
            }
        });

    Ok(SufficientStats {
        n,
        class_counts: counts.to_vec(),
        group_counts,
        sums: Array2::from_shape_vec((p, z), sums).expect("shape"),
        centered_ss: Array2::from_shape_vec((p, z), css).expect("shape"),
    })
}
