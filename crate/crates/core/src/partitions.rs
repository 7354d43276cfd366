//! Class-partition hypotheses.
//!
//! Each hypothesis is a partition of the `K` classes into `G` groups. A
//! feature following hypothesis `m` has one Gaussian component per group, so
//! classes sharing a group share a mean (and, in the unequal-variance model,
//! a variance). The hypotheses are collected as the columns of a `K x M`
//! matrix whose first column is always the null partition.
//!
//! Columns are stored as restricted-growth strings: the first class is in
//! group 1 and every later class either joins an existing group or opens the
//! next one. Two labelings of the same partition, e.g. `(2,1,1)` and
//! `(1,2,2)`, therefore compare equal after canonicalization.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default largest class count accepted by the exhaustive scheme.
pub const DEFAULT_K_MAX: usize = 12;

/// Number of set partitions of `k` objects, via the Bell triangle.
///
/// Returns `None` when the value overflows `u128` (k > 40 or so).
pub fn bell_number(k: usize) -> Option<u128> {
    if k == 0 {
        return Some(1);
    }
    let mut row: Vec<u128> = vec![1];
    for _ in 1..k {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for v in &row {
            let prev = *next.last().unwrap();
            next.push(prev.checked_add(*v)?);
        }
        row = next;
    }
    row.last().copied()
}

/// Variance model: shared variance per hypothesis (multiLDA) or one variance
/// per group (multiQDA).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum VarianceMode {
    #[default]
    Equal,
    Unequal,
}

impl VarianceMode {
    /// Extra free parameters of a `groups`-group hypothesis over the null.
    pub fn degrees_of_freedom(self, groups: usize) -> usize {
        match self {
            VarianceMode::Equal => groups - 1,
            VarianceMode::Unequal => 2 * (groups - 1),
        }
    }
}

impl fmt::Display for VarianceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VarianceMode::Equal => "equal",
            VarianceMode::Unequal => "unequal",
        })
    }
}

impl std::str::FromStr for VarianceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "equal" | "lda" => Ok(VarianceMode::Equal),
            "unequal" | "qda" => Ok(VarianceMode::Unequal),
            other => Err(Error::InvalidArgument(format!(
                "unknown variance mode `{other}` (expected equal or unequal)"
            ))),
        }
    }
}

/// How the hypothesis columns were chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    Exhaustive,
    OneVsRest,
    Ordinal,
    User,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Exhaustive => "exhaustive",
            Scheme::OneVsRest => "one-vs-rest",
            Scheme::Ordinal => "ordinal",
            Scheme::User => "user",
        })
    }
}

/// One hypothesis: a group label in `1..=G` for every class, in canonical
/// restricted-growth form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartitionColumn {
    labels: Vec<u32>,
    groups: usize,
}

impl PartitionColumn {
    /// Canonicalizes an arbitrary labeling by first appearance. Any distinct
    /// integers are accepted; surjectivity is checked by [`Self::from_user`].
    pub fn canonicalize<T: Copy + Eq + std::hash::Hash>(raw: &[T]) -> Self {
        let mut seen: HashMap<T, u32> = HashMap::new();
        let mut labels = Vec::with_capacity(raw.len());
        for &v in raw {
            let next = seen.len() as u32 + 1;
            labels.push(*seen.entry(v).or_insert(next));
        }
        let groups = seen.len();
        PartitionColumn { labels, groups }
    }

    /// Validates a user-supplied column: labels must be `>= 1` and cover
    /// exactly `1..=max`.
    pub fn from_user(raw: &[i64], column: usize) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InvalidPartition {
                column,
                reason: "column is empty".into(),
            });
        }
        if let Some(bad) = raw.iter().find(|&&v| v < 1) {
            return Err(Error::InvalidPartition {
                column,
                reason: format!("group label {bad} is below 1"),
            });
        }
        let max = *raw.iter().max().unwrap();
        let mut present = vec![false; max as usize];
        for &v in raw {
            present[(v - 1) as usize] = true;
        }
        if let Some(missing) = present.iter().position(|p| !p) {
            return Err(Error::InvalidPartition {
                column,
                reason: format!(
                    "labels are not surjective onto 1..={max}: group {} is empty",
                    missing + 1
                ),
            });
        }
        Ok(Self::canonicalize(raw))
    }

    /// The null partition of `k` classes.
    pub fn null(k: usize) -> Self {
        PartitionColumn {
            labels: vec![1; k],
            groups: 1,
        }
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.labels.len()
    }

    pub fn num_groups(&self) -> usize {
        self.groups
    }

    pub fn is_null(&self) -> bool {
        self.groups == 1
    }

    /// Group (1-based) that class `class` (0-based) falls into.
    pub fn group_of(&self, class: usize) -> Result<u32> {
        self.labels.get(class).copied().ok_or_else(|| {
            Error::InvalidArgument(format!(
                "class index {class} out of range for {} classes",
                self.labels.len()
            ))
        })
    }

    /// True when every group of `self` lies inside a single group of
    /// `coarser`.
    pub fn refines(&self, coarser: &PartitionColumn) -> bool {
        if self.labels.len() != coarser.labels.len() {
            return false;
        }
        let mut owner = vec![0u32; self.groups];
        for (&fine, &coarse) in self.labels.iter().zip(&coarser.labels) {
            let slot = &mut owner[(fine - 1) as usize];
            if *slot == 0 {
                *slot = coarse;
            } else if *slot != coarse {
                return false;
            }
        }
        true
    }

    /// True when `self` refines `coarser` and differs from it.
    pub fn strictly_refines(&self, coarser: &PartitionColumn) -> bool {
        self.groups > coarser.groups && self.refines(coarser)
    }

    fn sort_key_cmp(&self, other: &Self) -> Ordering {
        self.groups
            .cmp(&other.groups)
            .then_with(|| self.labels.cmp(&other.labels))
    }
}

impl fmt::Display for PartitionColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.labels.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

fn sort_columns(columns: &mut [PartitionColumn]) {
    columns.sort_by(|a, b| a.sort_key_cmp(b));
}

/// Every set partition of `k` classes, null first, ordered by group count
/// then lexicographically. Refuses `k > DEFAULT_K_MAX`.
pub fn enumerate_exhaustive(k: usize) -> Result<Vec<PartitionColumn>> {
    enumerate_exhaustive_with_limit(k, DEFAULT_K_MAX)
}

pub fn enumerate_exhaustive_with_limit(k: usize, k_max: usize) -> Result<Vec<PartitionColumn>> {
    if k == 0 {
        return Err(Error::InvalidArgument("class count must be at least 1".into()));
    }
    if k > k_max {
        return Err(Error::TooManyClasses {
            k,
            k_max,
            bell: bell_number(k).map_or_else(|| "overflow".to_string(), |b| b.to_string()),
        });
    }
    // Restricted-growth strings in lexicographic order.
    let mut out = Vec::new();
    let mut labels = vec![1u32; k];
    let mut maxes = vec![1u32; k];
    loop {
        out.push(PartitionColumn {
            labels: labels.clone(),
            groups: maxes[k - 1] as usize,
        });
        let mut i = k - 1;
        loop {
            if i == 0 {
                sort_columns(&mut out);
                return Ok(out);
            }
            if labels[i] <= maxes[i - 1] {
                labels[i] += 1;
                maxes[i] = maxes[i - 1].max(labels[i]);
                for t in i + 1..k {
                    labels[t] = 1;
                    maxes[t] = maxes[i];
                }
                break;
            }
            i -= 1;
        }
    }
}

fn one_vs_rest(k: usize) -> Vec<PartitionColumn> {
    let mut cols = vec![PartitionColumn::null(k)];
    if k >= 2 {
        for singled in 0..k {
            let raw: Vec<u8> = (0..k).map(|c| u8::from(c == singled)).collect();
            cols.push(PartitionColumn::canonicalize(&raw));
        }
    }
    cols
}

fn ordinal(k: usize) -> Vec<PartitionColumn> {
    // Bit t of `cuts` opens a new group at class t + 1.
    (0u64..1 << (k - 1))
        .map(|cuts| {
            let mut label = 1u32;
            let raw: Vec<u32> = (0..k)
                .map(|c| {
                    if c > 0 && cuts & (1 << (c - 1)) != 0 {
                        label += 1;
                    }
                    label
                })
                .collect();
            PartitionColumn::canonicalize(&raw)
        })
        .collect()
}

/// A validated hypothesis matrix with its derived index structures.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSet {
    num_classes: usize,
    columns: Vec<PartitionColumn>,
    scheme: Scheme,
    variance_mode: VarianceMode,
    groups: Vec<usize>,
    dof: Vec<usize>,
    cumulative: Vec<usize>,
}

impl PartitionSet {
    /// Builds the hypothesis set for `k` classes. `user_matrix` is required
    /// for [`Scheme::User`] and must be absent otherwise; it is given as `k`
    /// rows of `M` integers.
    pub fn build(
        k: usize,
        scheme: Scheme,
        user_matrix: Option<&[Vec<i64>]>,
        variance_mode: VarianceMode,
    ) -> Result<Self> {
        Self::build_with_limit(k, scheme, user_matrix, variance_mode, DEFAULT_K_MAX)
    }

    pub fn build_with_limit(
        k: usize,
        scheme: Scheme,
        user_matrix: Option<&[Vec<i64>]>,
        variance_mode: VarianceMode,
        k_max: usize,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("class count must be at least 1".into()));
        }
        let columns = match (scheme, user_matrix) {
            (Scheme::User, None) => {
                return Err(Error::InvalidArgument(
                    "user scheme requires a partition matrix".into(),
                ))
            }
            (Scheme::User, Some(rows)) => user_columns(k, rows)?,
            (_, Some(_)) => {
                return Err(Error::InvalidArgument(format!(
                    "a partition matrix was supplied with the {scheme} scheme"
                )))
            }
            (Scheme::Exhaustive, None) => enumerate_exhaustive_with_limit(k, k_max)?,
            (Scheme::OneVsRest, None) => one_vs_rest(k),
            (Scheme::Ordinal, None) => ordinal(k),
        };
        Ok(Self::from_columns(k, columns, scheme, variance_mode))
    }

    /// Deduplicates, prepends the null column when missing, sorts, and
    /// derives `G`, `nu` and `z`. Columns must already be canonical.
    fn from_columns(
        k: usize,
        mut columns: Vec<PartitionColumn>,
        scheme: Scheme,
        variance_mode: VarianceMode,
    ) -> Self {
        if !columns.iter().any(PartitionColumn::is_null) {
            columns.push(PartitionColumn::null(k));
        }
        sort_columns(&mut columns);
        columns.dedup();
        let groups: Vec<usize> = columns.iter().map(PartitionColumn::num_groups).collect();
        let dof = groups
            .iter()
            .map(|&g| variance_mode.degrees_of_freedom(g))
            .collect();
        let cumulative = groups
            .iter()
            .scan(0, |acc, &g| {
                *acc += g;
                Some(*acc)
            })
            .collect();
        PartitionSet {
            num_classes: k,
            columns,
            scheme,
            variance_mode,
            groups,
            dof,
            cumulative,
        }
    }

    /// Number of classes `K`.
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Number of hypotheses `M`.
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn columns(&self) -> &[PartitionColumn] {
        &self.columns
    }

    pub fn column(&self, m: usize) -> &PartitionColumn {
        &self.columns[m]
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn variance_mode(&self) -> VarianceMode {
        self.variance_mode
    }

    /// `G`: group count per hypothesis.
    pub fn groups(&self) -> &[usize] {
        &self.groups
    }

    /// `nu`: degrees of freedom over the null per hypothesis.
    pub fn dof(&self) -> &[usize] {
        &self.dof
    }

    /// `z`: cumulative group counts; `z[M-1]` is the total number of
    /// per-feature group components.
    pub fn cumulative_groups(&self) -> &[usize] {
        &self.cumulative
    }

    /// Total number of group components per feature (`z_M`).
    pub fn total_groups(&self) -> usize {
        self.cumulative.last().copied().unwrap_or(0)
    }

    /// 0-based position of hypothesis `m`'s first group in a per-feature
    /// component array.
    pub fn offset(&self, m: usize) -> usize {
        self.cumulative[m] - self.groups[m]
    }

    /// 0-based component index used by class `class` under hypothesis `m`.
    #[inline]
    pub fn component(&self, class: usize, m: usize) -> usize {
        self.offset(m) + self.columns[m].labels[class] as usize - 1
    }

    /// The 1-based allocation matrix `A` (`K` rows of `M`), with
    /// `a_km = z_m - (G_m - S_km)`.
    pub fn allocation_matrix(&self) -> Vec<Vec<usize>> {
        (0..self.num_classes)
            .map(|k| (0..self.len()).map(|m| self.component(k, m) + 1).collect())
            .collect()
    }

    /// The hypothesis matrix `S` as `K` rows of `M` labels.
    pub fn matrix(&self) -> Vec<Vec<u32>> {
        (0..self.num_classes)
            .map(|k| self.columns.iter().map(|c| c.labels[k]).collect())
            .collect()
    }

    /// Rebuilds a set from a stored matrix, requiring it to already be in
    /// canonical sorted form so that per-hypothesis arrays stay aligned.
    pub fn from_stored_matrix(
        rows: &[Vec<i64>],
        scheme: Scheme,
        variance_mode: VarianceMode,
    ) -> Result<Self> {
        let k = rows.len();
        let raw_columns = transpose_user(k, rows)?;
        let mut columns = Vec::with_capacity(raw_columns.len());
        for (m, raw) in raw_columns.iter().enumerate() {
            let col = PartitionColumn::from_user(raw, m + 1)?;
            if col.labels.iter().zip(raw).any(|(&a, &b)| i64::from(a) != b) {
                return Err(Error::InvalidPartition {
                    column: m + 1,
                    reason: "stored column is not in canonical form".into(),
                });
            }
            columns.push(col);
        }
        let set = Self::from_columns(k, columns.clone(), scheme, variance_mode);
        if set.columns != columns {
            return Err(Error::InvalidPartition {
                column: 1,
                reason: "stored columns are not sorted, unique, and null-first".into(),
            });
        }
        Ok(set)
    }
}

fn transpose_user(k: usize, rows: &[Vec<i64>]) -> Result<Vec<Vec<i64>>> {
    if rows.len() != k {
        return Err(Error::InvalidPartition {
            column: 0,
            reason: format!("matrix has {} rows, expected K = {k}", rows.len()),
        });
    }
    let m = rows.first().map_or(0, Vec::len);
    if m == 0 {
        return Err(Error::InvalidPartition {
            column: 0,
            reason: "matrix has zero columns".into(),
        });
    }
    if let Some(r) = rows.iter().position(|r| r.len() != m) {
        return Err(Error::InvalidPartition {
            column: 0,
            reason: format!("row {} has {} entries, expected {m}", r + 1, rows[r].len()),
        });
    }
    Ok((0..m).map(|c| rows.iter().map(|r| r[c]).collect()).collect())
}

fn user_columns(k: usize, rows: &[Vec<i64>]) -> Result<Vec<PartitionColumn>> {
    transpose_user(k, rows)?
        .iter()
        .enumerate()
        .map(|(m, raw)| PartitionColumn::from_user(raw, m + 1))
        .collect()
}

/// Group (1-based) of class `class` (0-based) under `column`.
pub fn group_index(class: usize, column: &PartitionColumn) -> Result<u32> {
    column.group_of(class)
}

/// Allocation matrix of an arbitrary `K x M` label matrix, canonical or not:
/// `a_km = z_m - (G_m - S_km)` with `G_m` the largest label in column `m`.
pub fn allocation_from_matrix(s: &[Vec<u32>]) -> Vec<Vec<usize>> {
    let m_count = s.first().map_or(0, Vec::len);
    let mut z = Vec::with_capacity(m_count);
    let mut groups = Vec::with_capacity(m_count);
    let mut total = 0usize;
    for m in 0..m_count {
        let g = s.iter().map(|row| row[m]).max().unwrap_or(0) as usize;
        total += g;
        groups.push(g);
        z.push(total);
    }
    s.iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(m, &label)| z[m] - (groups[m] - label as usize))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[u32]) -> PartitionColumn {
        PartitionColumn::canonicalize(v)
    }

    #[test]
    fn allocation_formula_matches_set() {
        for k in 2..=5 {
            let set = PartitionSet::build(k, Scheme::Exhaustive, None, VarianceMode::Equal).unwrap();
            assert_eq!(allocation_from_matrix(&set.matrix()), set.allocation_matrix());
        }
        let s = vec![vec![1, 1, 1, 2, 1], vec![1, 2, 1, 1, 2], vec![1, 1, 2, 1, 3]];
        assert_eq!(
            allocation_from_matrix(&s),
            vec![vec![1, 2, 4, 7, 8], vec![1, 3, 4, 6, 9], vec![1, 2, 5, 6, 10]]
        );
    }

    /// Independent generator: insert element `i` into each existing block or
    /// a new one.
    fn brute_force_partitions(k: usize) -> Vec<Vec<Vec<usize>>> {
        if k == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for part in brute_force_partitions(k - 1) {
            for b in 0..part.len() {
                let mut p = part.clone();
                p[b].push(k - 1);
                out.push(p);
            }
            let mut p = part.clone();
            p.push(vec![k - 1]);
            out.push(p);
        }
        out
    }

    #[test]
    fn exhaustive_counts_small() {
        assert_eq!(enumerate_exhaustive(2).unwrap().len(), 2);
        assert_eq!(enumerate_exhaustive(5).unwrap().len(), brute_force_partitions(5).len());
        assert_eq!(brute_force_partitions(5).len(), 52);
        assert_eq!(enumerate_exhaustive(1).unwrap(), vec![PartitionColumn::null(1)]);
    }

    #[test]
    fn exhaustive_matches_brute_force_sets() {
        for k in 1..=6 {
            let mut expected: Vec<PartitionColumn> = brute_force_partitions(k)
                .into_iter()
                .map(|blocks| {
                    let mut raw = vec![0usize; k];
                    for (b, block) in blocks.iter().enumerate() {
                        for &e in block {
                            raw[e] = b;
                        }
                    }
                    PartitionColumn::canonicalize(&raw)
                })
                .collect();
            sort_columns(&mut expected);
            assert_eq!(enumerate_exhaustive(k).unwrap(), expected, "k = {k}");
        }
    }

    #[test]
    fn three_class_matrix() {
        let set = PartitionSet::build(3, Scheme::Exhaustive, None, VarianceMode::Equal).unwrap();
        assert_eq!(
            set.matrix(),
            vec![vec![1, 1, 1, 1, 1], vec![1, 1, 2, 2, 2], vec![1, 2, 1, 2, 3]]
        );
        assert_eq!(set.groups(), &[1, 2, 2, 2, 3]);
        assert_eq!(set.dof(), &[0, 1, 1, 1, 2]);
        assert_eq!(set.cumulative_groups(), &[1, 3, 5, 7, 10]);
    }

    #[test]
    fn unequal_variance_doubles_dof() {
        let set = PartitionSet::build(3, Scheme::Exhaustive, None, VarianceMode::Unequal).unwrap();
        assert_eq!(set.dof(), &[0, 2, 2, 2, 4]);
    }

    #[test]
    fn k_max_guard() {
        let err = enumerate_exhaustive(13).unwrap_err();
        assert!(err.to_string().contains("27644437"), "{err}");
        assert!(enumerate_exhaustive_with_limit(4, 3).unwrap_err().to_string().contains("B_4 = 15"));
        assert!(enumerate_exhaustive(0).is_err());
    }

    #[test]
    fn one_vs_rest_and_ordinal() {
        let ovr = PartitionSet::build(3, Scheme::OneVsRest, None, VarianceMode::Equal).unwrap();
        assert_eq!(ovr.len(), 4);
        assert_eq!(ovr.groups(), &[1, 2, 2, 2]);
        assert_eq!(ovr.dof(), &[0, 1, 1, 1]);
        let ord = PartitionSet::build(3, Scheme::Ordinal, None, VarianceMode::Equal).unwrap();
        let labels: Vec<Vec<u32>> = ord.columns().iter().map(|c| c.labels().to_vec()).collect();
        assert_eq!(labels, vec![vec![1, 1, 1], vec![1, 1, 2], vec![1, 2, 2], vec![1, 2, 3]]);
        for k in 1..=7 {
            let ord = PartitionSet::build(k, Scheme::Ordinal, None, VarianceMode::Equal).unwrap();
            assert_eq!(ord.len(), 1 << (k - 1));
        }
    }

    #[test]
    fn user_matrix_is_canonicalized_and_null_prepended() {
        let rows = vec![vec![2, 1, 2], vec![1, 2, 1], vec![1, 2, 1]];
        let set = PartitionSet::build(3, Scheme::User, Some(&rows), VarianceMode::Equal).unwrap();
        // (2,1,1), (1,2,2), (2,1,1) all collapse to (1,2,2).
        assert_eq!(set.len(), 2);
        assert!(set.column(0).is_null());
        assert_eq!(set.column(1).labels(), &[1, 2, 2]);
    }

    #[test]
    fn user_matrix_errors() {
        let non_surjective = vec![vec![1, 1], vec![1, 3], vec![1, 3]];
        let err = PartitionSet::build(3, Scheme::User, Some(&non_surjective), VarianceMode::Equal)
            .unwrap_err();
        assert!(matches!(err, Error::InvalidPartition { column: 2, .. }), "{err}");
        let wrong_rows = vec![vec![1], vec![1]];
        assert!(PartitionSet::build(3, Scheme::User, Some(&wrong_rows), VarianceMode::Equal).is_err());
        let empty: Vec<Vec<i64>> = vec![vec![], vec![], vec![]];
        assert!(PartitionSet::build(3, Scheme::User, Some(&empty), VarianceMode::Equal).is_err());
        assert!(PartitionSet::build(3, Scheme::User, None, VarianceMode::Equal).is_err());
        assert!(PartitionSet::build(3, Scheme::Exhaustive, Some(&wrong_rows), VarianceMode::Equal).is_err());
    }

    #[test]
    fn group_index_lookup() {
        assert_eq!(group_index(2, &col(&[1, 1, 2])).unwrap(), 2);
        assert_eq!(group_index(0, &PartitionColumn::null(3)).unwrap(), 1);
        assert_eq!(group_index(1, &col(&[1, 2, 3])).unwrap(), 2);
        assert!(group_index(3, &col(&[1, 2, 3])).is_err());
    }

    #[test]
    fn refinement() {
        let null = PartitionColumn::null(3);
        let two = col(&[1, 1, 2]);
        let full = col(&[1, 2, 3]);
        assert!(two.strictly_refines(&null));
        assert!(full.strictly_refines(&two));
        assert!(!two.strictly_refines(&two));
        assert!(!col(&[1, 2, 1]).refines(&two));
        assert!(!null.strictly_refines(&full));
    }

    #[test]
    fn stored_matrix_must_be_canonical() {
        let set = PartitionSet::build(3, Scheme::Exhaustive, None, VarianceMode::Equal).unwrap();
        let rows: Vec<Vec<i64>> = set
            .matrix()
            .iter()
            .map(|r| r.iter().map(|&v| i64::from(v)).collect())
            .collect();
        let back = PartitionSet::from_stored_matrix(&rows, Scheme::Exhaustive, VarianceMode::Equal).unwrap();
        assert_eq!(back, set);
        let mut swapped = rows.clone();
        for r in &mut swapped {
            r.swap(1, 2);
        }
        assert!(PartitionSet::from_stored_matrix(&swapped, Scheme::Exhaustive, VarianceMode::Equal).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn canonicalize_is_idempotent(raw in proptest::collection::vec(0u8..6, 1..9)) {
                let once = PartitionColumn::canonicalize(&raw);
                let twice = PartitionColumn::canonicalize(once.labels());
                prop_assert_eq!(&once, &twice);
                prop_assert_eq!(once.labels()[0], 1);
                let mut max = 0;
                for &l in once.labels() {
                    prop_assert!(l <= max + 1);
                    max = max.max(l);
                }
                prop_assert_eq!(max as usize, once.num_groups());
            }

            #[test]
            fn relabeling_is_invisible(raw in proptest::collection::vec(0u8..5, 1..8), shift in 1u8..50) {
                let relabeled: Vec<u8> = raw.iter().map(|v| v.wrapping_mul(7).wrapping_add(shift)).collect();
                prop_assert_eq!(PartitionColumn::canonicalize(&raw), PartitionColumn::canonicalize(&relabeled));
            }

            #[test]
            fn allocation_columns_have_g_distinct_values(k in 1usize..6, scheme_idx in 0usize..3) {
                let scheme = [Scheme::Exhaustive, Scheme::OneVsRest, Scheme::Ordinal][scheme_idx];
                let set = PartitionSet::build(k, scheme, None, VarianceMode::Equal).unwrap();
                let a = set.allocation_matrix();
                for m in 0..set.len() {
                    let mut vals: Vec<usize> = a.iter().map(|r| r[m]).collect();
                    vals.sort_unstable();
                    vals.dedup();
                    prop_assert_eq!(vals.len(), set.groups()[m]);
                    prop_assert!(vals.iter().all(|&v| v >= 1 && v <= set.total_groups()));
                }
                prop_assert!(set.column(0).is_null());
                prop_assert_eq!(set.dof()[0], 0);
            }
        }
    }
}
