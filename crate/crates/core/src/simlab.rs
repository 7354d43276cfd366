//! Simulation scenarios, feature-selection error, and repeated stratified
//! cross-validation.
//!
//! Every generator is a pure function of its [`SimSpec`]: random streams are
//! derived from the `SimSpec` seed, so equal specifications give identical data no
//! matter how work is scheduled.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use ndarray::Array2;
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{argmax, Dataset, FitOptions, FittedModel, PenaltyKind};
use crate::partitions::{PartitionColumn, PartitionSet, Scheme, VarianceMode};

/// A seeded generator on its own stream.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixes several integers into one seed (splitmix64 finalizer per step).
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9E37_79B9_7F4A_7C15;
    for &v in parts {
        h ^= v.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(h << 6).wrapping_add(h >> 2);
        let mut z = h;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Independent features, group means spaced by 2, for selection studies.
    FsConsistency,
    IndEqualVar,
    IndUnequalVar,
    DepEqualCov,
    DepUnequalCov,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::FsConsistency,
        Scenario::IndEqualVar,
        Scenario::IndUnequalVar,
        Scenario::DepEqualCov,
        Scenario::DepUnequalCov,
    ];

    pub fn is_dependent(self) -> bool {
        matches!(self, Scenario::DepEqualCov | Scenario::DepUnequalCov)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::FsConsistency => "fs-consistency",
            Scenario::IndEqualVar => "ind-equal-var",
            Scenario::IndUnequalVar => "ind-unequal-var",
            Scenario::DepEqualCov => "dep-equal-cov",
            Scenario::DepUnequalCov => "dep-unequal-cov",
        })
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.to_string() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scenario `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub scenario: Scenario,
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub discriminative_fraction: f64,
    pub mean_shift: f64,
    /// Group `g` standard deviation is `1 + (g - 1) * variance_scale` in the
    /// unequal-variance scenario.
    pub variance_scale: f64,
    pub block_size: usize,
    /// Fraction of non-zero off-diagonal entries in each covariance factor.
    pub block_density: f64,
    pub seed: u64,
}

impl SimSpec {
    /// Scenario defaults: 10% discriminative features, mean shift 2 for the
    /// selection study and 0.5 otherwise, ten covariance blocks.
    pub fn new(scenario: Scenario, n: usize, p: usize, k: usize, seed: u64) -> Self {
        SimSpec {
            scenario,
            n,
            p,
            k,
            discriminative_fraction: 0.10,
            mean_shift: if scenario == Scenario::FsConsistency { 2.0 } else { 0.5 },
            variance_scale: 1.0,
            block_size: (p / 10).max(1),
            block_density: 0.25,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.k < 2 {
            return bad(format!("need at least 2 classes, got {}", self.k));
        }
        if self.n < self.k {
            return bad(format!("n = {} is smaller than K = {}", self.n, self.k));
        }
        if self.p == 0 {
            return bad("p must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.discriminative_fraction) {
            return bad(format!(
                "discriminative fraction {} outside [0, 1]",
                self.discriminative_fraction
            ));
        }
        if !self.mean_shift.is_finite() || !self.variance_scale.is_finite() || self.variance_scale < 0.0 {
            return bad("mean shift and variance scale must be finite, scale >= 0".into());
        }
        if self.scenario.is_dependent() {
            if self.block_size == 0 || self.block_size > self.p {
                return bad(format!(
                    "block size {} must be in 1..=p ({})",
                    self.block_size, self.p
                ));
            }
            if !self.p.is_multiple_of(self.block_size) {
                return bad(format!(
                    "p = {} is not divisible by block size {}",
                    self.p, self.block_size
                ));
            }
            if !(0.0..=1.0).contains(&self.block_density) {
                return bad(format!("block density {} outside [0, 1]", self.block_density));
            }
        }
        Ok(())
    }
}

/// The hypotheses actually used to generate each feature.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthAssignment {
    /// Exhaustive equal-variance hypothesis set the indices refer to.
    pub hypotheses: PartitionSet,
    /// 0-based true hypothesis per feature.
    pub true_hypothesis: Vec<usize>,
    /// Per-feature group means (one per group of the true hypothesis).
    pub group_means: Vec<Vec<f64>>,
    /// Per-feature group standard deviations (independent scenarios only).
    pub group_sds: Vec<Vec<f64>>,
    pub class_sizes: Vec<usize>,
    /// True when `n` was not divisible by `K` and the remainder went to the
    /// first classes.
    pub uneven_split: bool,
    /// Column `j` of the data is column `permutation[j]` before shuffling
    /// (dependent scenarios only).
    pub permutation: Option<Vec<usize>>,
}

impl TruthAssignment {
    /// `p x M` one-hot matrix of true hypotheses.
    pub fn gamma0(&self) -> Array2<f64> {
        let mut g = Array2::zeros((self.true_hypothesis.len(), self.hypotheses.len()));
        for (j, &m) in self.true_hypothesis.iter().enumerate() {
            g[[j, m]] = 1.0;
        }
        g
    }

    pub fn num_discriminative(&self) -> usize {
        self.true_hypothesis.iter().filter(|&&m| m != 0).count()
    }
}

/// Equal split with the remainder handed to the first classes.
fn class_sizes(n: usize, k: usize) -> (Vec<usize>, bool) {
    let base = n / k;
    let rem = n % k;
    ((0..k).map(|c| base + usize::from(c < rem)).collect(), rem != 0)
}

fn class_labels(sizes: &[usize]) -> Vec<usize> {
    sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &s)| std::iter::repeat_n(c, s))
        .collect()
}

fn sim_dataset(x: Array2<f64>, labels: Vec<usize>, k: usize) -> Result<Dataset> {
    let p = x.ncols();
    Dataset::new(
        x,
        labels,
        (1..=k).map(|c| c.to_string()).collect(),
        (1..=p).map(|j| format!("V{j}")).collect(),
    )
}

/// Independent-feature scenarios. Each discriminative feature draws a
/// non-null hypothesis uniformly; group `g` has mean `(g - 1) * shift`.
pub fn gen_independent(spec: &SimSpec) -> Result<(Dataset, TruthAssignment)> {
    spec.validate()?;
    if spec.scenario.is_dependent() {
        return Err(Error::InvalidArgument(format!(
            "{} is a dependent-feature scenario",
            spec.scenario
        )));
    }
    let hypotheses = PartitionSet::build(spec.k, Scheme::Exhaustive, None, VarianceMode::Equal)?;
    let (sizes, uneven) = class_sizes(spec.n, spec.k);
    let labels = class_labels(&sizes);
    let (n, p) = (spec.n, spec.p);

    let mut rng = stream_rng(spec.seed, 0);
    let d = (spec.discriminative_fraction * p as f64).round() as usize;
    let mut chosen = sample(&mut rng, p, d.min(p)).into_vec();
    chosen.sort_unstable();
    let mut true_hypothesis = vec![0usize; p];
    for &j in &chosen {
        true_hypothesis[j] = rng.random_range(1..hypotheses.len());
    }
    let unequal = spec.scenario == Scenario::IndUnequalVar;
    let mut group_means = Vec::with_capacity(p);
    let mut group_sds = Vec::with_capacity(p);
    for &m in &true_hypothesis {
        let g = hypotheses.groups()[m];
        group_means.push((0..g).map(|i| i as f64 * spec.mean_shift).collect::<Vec<_>>());
        group_sds.push(
            (0..g)
                .map(|i| if unequal { 1.0 + i as f64 * spec.variance_scale } else { 1.0 })
                .collect::<Vec<_>>(),
        );
    }

    let mut x = Array2::zeros((n, p));
    for j in 0..p {
        let col = hypotheses.column(true_hypothesis[j]);
        for (i, &cls) in labels.iter().enumerate() {
            let g = col.labels()[cls] as usize - 1;
            let e: f64 = rng.sample(StandardNormal);
            x[[i, j]] = group_means[j][g] + group_sds[j][g] * e;
        }
    }
    let data = sim_dataset(x, labels, spec.k)?;
    Ok((
        data,
        TruthAssignment {
            hypotheses,
            true_hypothesis,
            group_means,
            group_sds,
            class_sizes: sizes,
            uneven_split: uneven,
            permutation: None,
        },
    ))
}

/// Sparse square factor `B` of one covariance block `B^T B`, stored by
/// column.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseBlock {
    size: usize,
    /// `columns[c]` lists `(row, value)` pairs of column `c`.
    columns: Vec<Vec<(usize, f64)>>,
}

impl SparseBlock {
    /// Diagonal entries are standard normal; each off-diagonal entry is
    /// non-zero (standard normal) with probability `density`.
    pub fn random<R: Rng>(size: usize, density: f64, rng: &mut R) -> Self {
        let mut columns = vec![Vec::new(); size];
        for r in 0..size {
            for (c, col) in columns.iter_mut().enumerate() {
                if r == c || rng.random_bool(density) {
                    col.push((r, rng.sample(StandardNormal)));
                }
            }
        }
        SparseBlock { size, columns }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    /// `(B^T z)_c = sum_r B_rc z_r`.
    pub fn transpose_apply(&self, z: &[f64], out: &mut [f64]) {
        for (o, col) in out.iter_mut().zip(&self.columns) {
            *o = col.iter().map(|&(r, v)| v * z[r]).sum();
        }
    }

    /// Entry `(a, b)` of `B^T B`.
    pub fn covariance(&self, a: usize, b: usize) -> f64 {
        let (ca, cb) = (&self.columns[a], &self.columns[b]);
        let (mut i, mut k, mut s) = (0, 0, 0.0);
        while i < ca.len() && k < cb.len() {
            match ca[i].0.cmp(&cb[k].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => k += 1,
                std::cmp::Ordering::Equal => {
                    s += ca[i].1 * cb[k].1;
                    i += 1;
                    k += 1;
                }
            }
        }
        s
    }
}

/// Block-diagonal covariance `diag(B_1^T B_1, ..., B_L^T B_L)` in
/// unpermuted feature order.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockFactor {
    pub blocks: Vec<SparseBlock>,
}

impl BlockFactor {
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(SparseBlock::size).sum()
    }

    /// Covariance between unpermuted features `a` and `b`.
    pub fn covariance(&self, a: usize, b: usize) -> f64 {
        let size = self.blocks[0].size;
        if a / size != b / size {
            return 0.0;
        }
        self.blocks[a / size].covariance(a % size, b % size)
    }

    /// One draw with covariance `B^T B` and zero mean.
    pub fn sample_into<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        let mut z = Vec::new();
        let mut start = 0;
        for b in &self.blocks {
            z.clear();
            z.extend((0..b.size).map(|_| rng.sample::<f64, _>(StandardNormal)));
            b.transpose_apply(&z, &mut out[start..start + b.size]);
            start += b.size;
        }
    }
}

/// Covariance factor used for class `class` (0-based) by the dependent
/// scenarios; the equal-covariance scenario uses class 0's for everyone.
pub fn dependent_factor(spec: &SimSpec, class: usize) -> Result<BlockFactor> {
    spec.validate()?;
    let which = if spec.scenario == Scenario::DepUnequalCov { class } else { 0 };
    let mut rng = stream_rng(spec.seed, 1 + which as u64);
    let blocks = (0..spec.p / spec.block_size)
        .map(|_| SparseBlock::random(spec.block_size, spec.block_density, &mut rng))
        .collect();
    Ok(BlockFactor { blocks })
}

/// Correlated-feature scenarios. Class `k` is shifted by `mean_shift` on its
/// own contiguous feature range; feature columns are permuted last.
pub fn gen_dependent(spec: &SimSpec) -> Result<(Dataset, TruthAssignment)> {
    spec.validate()?;
    if !spec.scenario.is_dependent() {
        return Err(Error::InvalidArgument(format!(
            "{} is an independent-feature scenario",
            spec.scenario
        )));
    }
    let (n, p, k) = (spec.n, spec.p, spec.k);
    let hypotheses = PartitionSet::build(k, Scheme::Exhaustive, None, VarianceMode::Equal)?;
    let (sizes, uneven) = class_sizes(n, k);
    let labels = class_labels(&sizes);
    let factors: Vec<BlockFactor> = match spec.scenario {
        Scenario::DepUnequalCov => (0..k).map(|c| dependent_factor(spec, c)).collect::<Result<_>>()?,
        _ => vec![dependent_factor(spec, 0)?],
    };

    let per_class = ((spec.discriminative_fraction * p as f64) / k as f64).round() as usize;
    let range_of = |c: usize| c * per_class..((c + 1) * per_class).min(p);

    let mut true_unpermuted = vec![0usize; p];
    let mut means_unpermuted = vec![vec![0.0]; p];
    for c in 0..k {
        let raw: Vec<u8> = (0..k).map(|t| u8::from(t == c)).collect();
        let col = PartitionColumn::canonicalize(&raw);
        let m = hypotheses
            .columns()
            .iter()
            .position(|h| *h == col)
            .expect("exhaustive set holds every partition");
        for j in range_of(c) {
            true_unpermuted[j] = m;
            // Group of class c first when c == 0, else second.
            means_unpermuted[j] = if col.labels()[c] == 1 {
                vec![spec.mean_shift, 0.0]
            } else {
                vec![0.0, spec.mean_shift]
            };
        }
    }

    let mut rng = stream_rng(spec.seed, 0);
    let mut raw = Array2::<f64>::zeros((n, p));
    let mut buf = vec![0.0; p];
    for (i, &cls) in labels.iter().enumerate() {
        let factor = &factors[if factors.len() == 1 { 0 } else { cls }];
        factor.sample_into(&mut rng, &mut buf);
        for j in range_of(cls) {
            buf[j] += spec.mean_shift;
        }
        raw.row_mut(i).assign(&ndarray::ArrayView1::from(&buf[..]));
    }

    let mut perm_rng = stream_rng(spec.seed, 1_000_000);
    let mut permutation: Vec<usize> = (0..p).collect();
    permutation.shuffle(&mut perm_rng);
    let x = raw.select(ndarray::Axis(1), &permutation);
    let true_hypothesis = permutation.iter().map(|&j| true_unpermuted[j]).collect();
    let group_means = permutation.iter().map(|&j| means_unpermuted[j].clone()).collect();

    let data = sim_dataset(x, labels, k)?;
    Ok((
        data,
        TruthAssignment {
            hypotheses,
            true_hypothesis,
            group_means,
            group_sds: Vec::new(),
            class_sizes: sizes,
            uneven_split: uneven,
            permutation: Some(permutation),
        },
    ))
}

/// Dispatches on the scenario.
pub fn generate(spec: &SimSpec) -> Result<(Dataset, TruthAssignment)> {
    if spec.scenario.is_dependent() {
        gen_dependent(spec)
    } else {
        gen_independent(spec)
    }
}

/// Soft selection error against the truth and its decomposition into mass
/// on overfitting hypotheses (strict refinements of the true partition) and
/// on all other wrong hypotheses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionError {
    pub soft: f64,
    pub overfit: f64,
    pub underfit: f64,
    /// `E / (2p)`.
    pub normalized: f64,
    /// `E / M`.
    pub per_hypothesis: f64,
    /// Fraction of features whose most probable hypothesis is wrong.
    pub hard_rate: f64,
}

pub fn selection_error(model: &FittedModel, truth: &TruthAssignment) -> Result<SelectionError> {
    let p = model.p();
    let parts = model.partition_set();
    if truth.true_hypothesis.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "model has p = {p}, truth has {}",
            truth.true_hypothesis.len()
        )));
    }
    if parts.columns() != truth.hypotheses.columns() {
        return Err(Error::DimensionMismatch(format!(
            "model has M = {} hypotheses that differ from the truth's M = {}",
            parts.len(),
            truth.hypotheses.len()
        )));
    }
    let m_count = parts.len();
    let overfits: Vec<Vec<bool>> = (0..m_count)
        .map(|t| {
            (0..m_count)
                .map(|m| parts.column(m).strictly_refines(parts.column(t)))
                .collect()
        })
        .collect();
    let (mut soft, mut over, mut under, mut wrong) = (0.0, 0.0, 0.0, 0usize);
    for (row, &t) in model.gamma().outer_iter().zip(&truth.true_hypothesis) {
        for (m, &g) in row.iter().enumerate() {
            let target = if m == t { 1.0 } else { 0.0 };
            soft += (g - target).abs();
            if m != t {
                if overfits[t][m] {
                    over += 2.0 * g;
                } else {
                    under += 2.0 * g;
                }
            }
        }
        if argmax(row.as_slice().expect("contiguous")) != t {
            wrong += 1;
        }
    }
    Ok(SelectionError {
        soft,
        overfit: over,
        underfit: under,
        normalized: soft / (2.0 * p as f64),
        per_hypothesis: soft / m_count as f64,
        hard_rate: wrong as f64 / p as f64,
    })
}

/// Assigns every sample to one of `folds` folds so that each class is spread
/// as evenly as possible.
pub fn stratified_folds<R: Rng>(labels: &[usize], k: usize, folds: usize, rng: &mut R) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {folds}")));
    }
    let mut by_class = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    if let Some((c, members)) = by_class.iter().enumerate().find(|(_, m)| m.len() < folds) {
        return Err(Error::InvalidData(format!(
            "stratified folding: class {} has {} samples, fewer than {folds} folds",
            c + 1,
            members.len()
        )));
    }
    let mut out = vec![Vec::new(); folds];
    let mut next = 0;
    for members in &mut by_class {
        members.shuffle(rng);
        for &i in members.iter() {
            out[next].push(i);
            next = (next + 1) % folds;
        }
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvRow {
    pub trial: usize,
    pub fold: usize,
    pub n_test: usize,
    pub errors: usize,
    pub error_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvTable {
    pub rows: Vec<CvRow>,
    /// Mean over folds of the fold error rate, per trial.
    pub per_trial: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation across trials (0 for a single trial).
    pub sd: f64,
}

/// Repeated stratified `folds`-fold cross-validation. Trial `t` shuffles with
/// its own stream derived from `seed`, so trials may run in any order.
pub fn cross_validate(data: &Dataset, folds: usize, trials: usize, options: &FitOptions, seed: u64) -> Result<CvTable> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let k = data.num_classes();
    // Fail before spawning work if folding is impossible.
    stratified_folds(data.labels(), k, folds, &mut stream_rng(seed, 0))?;

    let per_trial_rows: Vec<Vec<CvRow>> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<Vec<CvRow>> {
            let mut rng = stream_rng(seed, t as u64);
            let assignment = stratified_folds(data.labels(), k, folds, &mut rng)?;
            let mut rows = Vec::with_capacity(folds);
            for (f, test) in assignment.iter().enumerate() {
                let train: Vec<usize> = assignment
                    .iter()
                    .enumerate()
                    .filter(|&(g, _)| g != f)
                    .flat_map(|(_, idx)| idx.iter().copied())
                    .collect();
                let model = options.fit(&data.select_rows(&train)?)?;
                let x_test = data.x().select(ndarray::Axis(0), test);
                let pred = model.predict(x_test.view())?;
                let errors = pred
                    .labels
                    .iter()
                    .zip(test)
                    .filter(|(&l, &i)| l != data.labels()[i])
                    .count();
                rows.push(CvRow {
                    trial: t,
                    fold: f,
                    n_test: test.len(),
                    errors,
                    error_rate: errors as f64 / test.len() as f64,
                });
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;

    let per_trial: Vec<f64> = per_trial_rows
        .iter()
        .map(|rows| rows.iter().map(|r| r.error_rate).sum::<f64>() / rows.len() as f64)
        .collect();
    let (mean, sd) = mean_sd(&per_trial);
    Ok(CvTable {
        rows: per_trial_rows.into_iter().flatten().collect(),
        per_trial,
        mean,
        sd,
    })
}

pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Result of one simulated fit.
#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub selection: SelectionError,
    pub fit_seconds: f64,
    pub uneven_split: bool,
    pub cv: Option<CvTable>,
}

/// Generates `spec`, fits it with `options`, and scores the selection.
pub fn run_replicate(spec: &SimSpec, options: &FitOptions) -> Result<SimReport> {
    let (data, truth) = generate(spec)?;
    let start = Instant::now();
    let model = options.fit(&data)?;
    let fit_seconds = start.elapsed().as_secs_f64();
    Ok(SimReport {
        selection: selection_error(&model, &truth)?,
        fit_seconds,
        uneven_split: truth.uneven_split,
        cv: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub ns: Vec<usize>,
    pub p: usize,
    pub k: usize,
    pub replicates: usize,
    pub seed: u64,
    pub penalty: PenaltyKind,
    pub variance_mode: VarianceMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyRow {
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub replicate: usize,
    pub report: SimReport,
}

/// Selection-consistency study: `replicates` fits of the fs-consistency
/// scenario for every `n`.
pub fn consistency_sweep(cfg: &SweepConfig) -> Result<Vec<ConsistencyRow>> {
    let options = FitOptions::default()
        .with_penalty(cfg.penalty)
        .with_variance(cfg.variance_mode);
    let jobs: Vec<(usize, usize)> = cfg
        .ns
        .iter()
        .flat_map(|&n| (0..cfg.replicates).map(move |r| (n, r)))
        .collect();
    jobs.into_par_iter()
        .map(|(n, r)| {
            let seed = derive_seed(&[cfg.seed, n as u64, r as u64]);
            let spec = SimSpec::new(Scenario::FsConsistency, n, cfg.p, cfg.k, seed);
            Ok(ConsistencyRow {
                n,
                p: cfg.p,
                k: cfg.k,
                replicate: r,
                report: run_replicate(&spec, &options)?,
            })
        })
        .collect()
}

/// Mean normalized selection error per `n`, in the order of `ns`.
pub fn mean_normalized_by_n(rows: &[ConsistencyRow], ns: &[usize]) -> Vec<f64> {
    ns.iter()
        .map(|&n| {
            let v: Vec<f64> = rows
                .iter()
                .filter(|r| r.n == n)
                .map(|r| r.report.selection.normalized)
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        })
        .collect()
}

pub fn write_consistency_csv<W: Write>(w: W, rows: &[ConsistencyRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "n", "p", "K", "replicate", "E", "E_O", "E_U", "E_over_2p", "E_over_M", "hard_rate",
        "uneven_split", "fit_seconds",
    ])?;
    for r in rows {
        let s = &r.report.selection;
        out.write_record(&[
            r.n.to_string(),
            r.p.to_string(),
            r.k.to_string(),
            r.replicate.to_string(),
            s.soft.to_string(),
            s.overfit.to_string(),
            s.underfit.to_string(),
            s.normalized.to_string(),
            s.per_hypothesis.to_string(),
            s.hard_rate.to_string(),
            r.report.uneven_split.to_string(),
            r.report.fit_seconds.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// One row per (method, trial, fold).
pub fn write_cv_csv<W: Write>(w: W, tables: &[(&str, &CvTable)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["method", "trial", "fold", "n_test", "errors", "error_rate"])?;
    for (method, table) in tables {
        for r in &table.rows {
            out.write_record(&[
                method.to_string(),
                r.trial.to_string(),
                r.fold.to_string(),
                r.n_test.to_string(),
                r.errors.to_string(),
                r.error_rate.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}
