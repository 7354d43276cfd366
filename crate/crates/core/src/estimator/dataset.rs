use std::collections::HashMap;

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};

/// A labeled `n x p` sample matrix.
///
/// Class labels are stored as 0-based indices into `class_names`; the
/// original labels are kept so predictions can be decoded.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    labels: Vec<usize>,
    class_names: Vec<String>,
    feature_names: Vec<String>,
    class_counts: Vec<usize>,
}

impl Dataset {
    /// Builds a dataset from pre-encoded labels in `0..class_names.len()`.
    ///
    /// Every class must be observed at least once and `x` must be finite.
    pub fn new(
        x: Array2<f64>,
        labels: Vec<usize>,
        class_names: Vec<String>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let (n, p) = x.dim();
        if n == 0 || p == 0 {
            return Err(Error::InvalidData(format!("empty matrix ({n} x {p})")));
        }
        if labels.len() != n {
            return Err(Error::InvalidData(format!(
                "{} labels for {n} samples",
                labels.len()
            )));
        }
        if feature_names.len() != p {
            return Err(Error::InvalidData(format!(
                "{} feature names for {p} features",
                feature_names.len()
            )));
        }
        let k = class_names.len();
        let mut class_counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            if l >= k {
                return Err(Error::InvalidData(format!(
                    "sample {} has class index {l}, but only {k} classes are named",
                    i + 1
                )));
            }
            class_counts[l] += 1;
        }
        if let Some(empty) = class_counts.iter().position(|&c| c == 0) {
            return Err(Error::InvalidData(format!(
                "class `{}` has no samples",
                class_names[empty]
            )));
        }
        check_finite(&x)?;
        Ok(Dataset {
            x,
            labels,
            class_names,
            feature_names,
            class_counts,
        })
    }

    /// Encodes arbitrary string labels in order of first appearance.
    pub fn from_raw_labels<S: AsRef<str>>(
        x: Array2<f64>,
        raw_labels: &[S],
        feature_names: Option<Vec<String>>,
    ) -> Result<Self> {
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut class_names = Vec::new();
        let labels = raw_labels
            .iter()
            .map(|l| {
                let l = l.as_ref();
                *index.entry(l).or_insert_with(|| {
                    class_names.push(l.to_string());
                    class_names.len() - 1
                })
            })
            .collect();
        let p = x.ncols();
        let feature_names = feature_names.unwrap_or_else(|| default_feature_names(p));
        Self::new(x, labels, class_names, feature_names)
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    /// 0-based class index per sample.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Samples at `rows`, keeping the full class list. Fails if a class ends
    /// up empty.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let x = self.x.select(Axis(0), rows);
        let labels = rows.iter().map(|&r| self.labels[r]).collect();
        Self::new(
            x,
            labels,
            self.class_names.clone(),
            self.feature_names.clone(),
        )
    }

    /// Features at `columns`, in the given order.
    pub fn select_features(&self, columns: &[usize]) -> Result<Self> {
        let x = self.x.select(Axis(1), columns);
        let names = columns
            .iter()
            .map(|&c| self.feature_names[c].clone())
            .collect();
        Self::new(x, self.labels.clone(), self.class_names.clone(), names)
    }
}

pub(crate) fn default_feature_names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("V{j}")).collect()
}

pub(crate) fn check_finite(x: &Array2<f64>) -> Result<()> {
    if let Some(((i, j), v)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidData(format!(
            "non-finite value {v} at row {}, column {}",
            i + 1,
            j + 1
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn first_appearance_encoding() {
        let d = Dataset::from_raw_labels(array![[0.], [2.], [4.], [6.]], &["b", "b", "a", "a"], None)
            .unwrap();
        assert_eq!(d.class_names(), &["b".to_string(), "a".to_string()]);
        assert_eq!(d.labels(), &[0, 0, 1, 1]);
        assert_eq!(d.class_counts(), &[2, 2]);
        assert_eq!(d.feature_names(), &["V1".to_string()]);
    }

    #[test]
    fn rejects_empty_class_and_nan() {
        let err = Dataset::new(
            array![[0.], [1.]],
            vec![0, 0],
            vec!["a".into(), "b".into()],
            vec!["f".into()],
        )
        .unwrap_err();
        assert!(err.to_string().contains("`b` has no samples"));
        assert!(Dataset::from_raw_labels(array![[0.], [f64::NAN]], &["a", "b"], None).is_err());
    }

    #[test]
    fn select_rows_keeps_classes() {
        let d = Dataset::from_raw_labels(array![[0.], [2.], [4.], [6.]], &["a", "a", "b", "b"], None)
            .unwrap();
        let sub = d.select_rows(&[1, 2]).unwrap();
        assert_eq!(sub.n(), 2);
        assert_eq!(sub.num_classes(), 2);
        assert!(d.select_rows(&[0, 1]).is_err());
    }
}
