//! CSV ingestion, feature filters, and model persistence.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{
    check_finite, default_feature_names, Dataset, FittedModel, PenaltyConfig, PriorTermMode,
    Variances,
};
use crate::partitions::{PartitionSet, Scheme, VarianceMode};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Which column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    /// 0-based column index.
    Index(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvSchema {
    pub has_header: bool,
    pub label_column: Option<LabelColumn>,
    pub delimiter: u8,
}

impl CsvSchema {
    /// Header row with a `label` column, comma separated.
    pub fn training() -> Self {
        CsvSchema {
            has_header: true,
            label_column: Some(LabelColumn::Name("label".into())),
            delimiter: b',',
        }
    }

    /// Header row, comma separated; a `label` column is dropped if present.
    pub fn prediction() -> Self {
        Self::training()
    }

    fn reader<R: Read>(&self, rdr: R) -> csv::Reader<R> {
        csv::ReaderBuilder::new()
            .has_headers(self.has_header)
            .delimiter(self.delimiter)
            .trim(csv::Trim::All)
            .from_reader(rdr)
    }
}

struct RawTable {
    header: Option<Vec<String>>,
    rows: Vec<csv::StringRecord>,
    first_line: usize,
}

fn read_table(path: &Path, schema: &CsvSchema) -> Result<RawTable> {
    let file = File::open(path)?;
    let mut rdr = schema.reader(BufReader::new(file));
    let header = if schema.has_header {
        Some(rdr.headers()?.iter().map(str::to_string).collect())
    } else {
        None
    };
    let rows = rdr.records().collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(RawTable {
        header,
        rows,
        first_line: if schema.has_header { 2 } else { 1 },
    })
}

fn resolve_label(table: &RawTable, label: &LabelColumn, path: &Path) -> Result<Option<usize>> {
    match label {
        LabelColumn::Index(i) => Ok(Some(*i)),
        LabelColumn::Name(name) => match &table.header {
            Some(h) => Ok(h.iter().position(|c| c == name)),
            None => Err(Error::InvalidArgument(format!(
                "{}: label column `{name}` requested by name but the file has no header",
                path.display()
            ))),
        },
    }
}

fn column_name(table: &RawTable, c: usize) -> String {
    table
        .header
        .as_ref()
        .and_then(|h| h.get(c).cloned())
        .unwrap_or_else(|| format!("#{}", c + 1))
}

fn parse_cell(s: &str) -> std::result::Result<f64, String> {
    let lower = s.to_ascii_lowercase();
    if s.is_empty() || matches!(lower.as_str(), "na" | "nan" | "null" | "?") {
        return Err(format!("missing value `{s}`"));
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(v) => Err(format!("non-finite value `{v}`")),
        Err(_) => Err(format!("non-numeric value `{s}`")),
    }
}

/// Parses the numeric cells of `table`, skipping `skip` (the label column).
fn numeric_matrix(table: &RawTable, skip: Option<usize>, path: &Path) -> Result<(Array2<f64>, Vec<usize>)> {
    let width = match (&table.header, table.rows.first()) {
        (Some(h), _) => h.len(),
        (None, Some(r)) => r.len(),
        (None, None) => 0,
    };
    let cols: Vec<usize> = (0..width).filter(|&c| Some(c) != skip).collect();
    let n = table.rows.len();
    let mut data = Vec::with_capacity(n * cols.len());
    for (r, rec) in table.rows.iter().enumerate() {
        let line = r + table.first_line;
        if rec.len() != width {
            return Err(Error::Parse {
                path: path.display().to_string(),
                row: line,
                column: "-".into(),
                reason: format!("expected {width} fields, found {}", rec.len()),
            });
        }
        for &c in &cols {
            let v = parse_cell(&rec[c]).map_err(|reason| Error::Parse {
                path: path.display().to_string(),
                row: line,
                column: column_name(table, c),
                reason,
            })?;
            data.push(v);
        }
    }
    let x = Array2::from_shape_vec((n, cols.len()), data).expect("shape");
    Ok((x, cols))
}

fn feature_names(table: &RawTable, cols: &[usize]) -> Vec<String> {
    match &table.header {
        Some(h) => cols.iter().map(|&c| h[c].clone()).collect(),
        None => default_feature_names(cols.len()),
    }
}

/// Reads a labeled training matrix. Labels are encoded in order of first
/// appearance and features keep the file's column order.
pub fn load_dataset(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let label = schema
        .label_column
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("training data needs a label column".into()))?;
    let table = read_table(path, schema)?;
    let label_idx = resolve_label(&table, label, path)?.ok_or_else(|| {
        Error::InvalidData(format!("{}: no label column {label:?}", path.display()))
    })?;
    if table.rows.is_empty() {
        return Err(Error::InvalidData(format!("{}: no data rows", path.display())));
    }
    let mut labels = Vec::with_capacity(table.rows.len());
    for (r, rec) in table.rows.iter().enumerate() {
        match rec.get(label_idx) {
            Some(l) if !l.is_empty() && !l.eq_ignore_ascii_case("na") => labels.push(l.to_string()),
            _ => {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    row: r + table.first_line,
                    column: column_name(&table, label_idx),
                    reason: "missing label".into(),
                })
            }
        }
    }
    let (x, cols) = numeric_matrix(&table, Some(label_idx), path)?;
    if cols.is_empty() {
        return Err(Error::InvalidData(format!("{}: no feature columns", path.display())));
    }
    let names = feature_names(&table, &cols);
    let data = Dataset::from_raw_labels(x, &labels, Some(names))?;
    if data.num_classes() < 2 {
        return Err(Error::InvalidData(format!(
            "{}: fewer than 2 classes",
            path.display()
        )));
    }
    Ok(data)
}

/// Reads an unlabeled query matrix; the schema's label column, when present
/// in the file, is ignored.
pub fn load_matrix(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<(Array2<f64>, Vec<String>)> {
    let path = path.as_ref();
    let table = read_table(path, schema)?;
    let skip = match &schema.label_column {
        Some(LabelColumn::Name(_)) if table.header.is_none() => None,
        Some(l) => resolve_label(&table, l, path)?,
        None => None,
    };
    let (x, cols) = numeric_matrix(&table, skip, path)?;
    let names = feature_names(&table, &cols);
    Ok((x, names))
}

/// Writes `data` with a header of feature names followed by a `label`
/// column holding the original class labels. Numbers use the shortest
/// representation that parses back to the same value.
pub fn write_dataset(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = data.feature_names().iter().map(String::as_str).collect();
    header.push("label");
    w.write_record(&header)?;
    for (row, &l) in data.x().outer_iter().zip(data.labels()) {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        rec.push(data.class_names()[l].clone());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a user partition matrix: `K` rows of `M` integers, no header.
pub fn load_partition_matrix(path: impl AsRef<Path>) -> Result<Vec<Vec<i64>>> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)?;
    let mut rows = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, s)| {
                s.parse::<i64>().map_err(|_| Error::Parse {
                    path: path.display().to_string(),
                    row: r + 1,
                    column: format!("#{}", c + 1),
                    reason: format!("`{s}` is not an integer"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Feature filters used before fitting expression-style data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterRule {
    /// Drop features whose median absolute deviation is exactly zero.
    ZeroMad,
    /// Drop features whose every class median is below the threshold.
    ClassMedianBelow(f64),
}

/// Median with the midpoint convention for even counts. Sorts `v`.
pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn keeps(column: ndarray::ArrayView1<'_, f64>, labels: &[usize], k: usize, rule: FilterRule) -> bool {
    match rule {
        FilterRule::ZeroMad => {
            let mut v = column.to_vec();
            let med = median(&mut v);
            let mut dev: Vec<f64> = v.iter().map(|x| (x - med).abs()).collect();
            median(&mut dev) != 0.0
        }
        FilterRule::ClassMedianBelow(t) => (0..k).any(|cls| {
            let mut v: Vec<f64> = column
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == cls)
                .map(|(&x, _)| x)
                .collect();
            median(&mut v) >= t
        }),
    }
}

/// Applies `rule` and returns the filtered dataset with the original indices
/// of the kept features.
pub fn filter_features(data: &Dataset, rule: FilterRule) -> Result<(Dataset, Vec<usize>)> {
    if let FilterRule::ClassMedianBelow(t) = rule {
        if !t.is_finite() {
            return Err(Error::InvalidArgument(format!("median threshold {t} is not finite")));
        }
    }
    let k = data.num_classes();
    let kept: Vec<usize> = data
        .x()
        .axis_iter(Axis(1))
        .enumerate()
        .filter(|(_, col)| keeps(col.view(), data.labels(), k, rule))
        .map(|(j, _)| j)
        .collect();
    if kept.is_empty() {
        return Err(Error::InvalidData(format!(
            "all {} features were removed by the filter",
            data.p()
        )));
    }
    Ok((data.select_features(&kept)?, kept))
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    #[serde(rename = "K")]
    k: usize,
    n: usize,
    p: usize,
    class_label_map: Vec<String>,
    scheme: Scheme,
    #[serde(rename = "S")]
    s: Vec<Vec<i64>>,
    variance_mode: VarianceMode,
    penalty: PenaltyConfig,
    prior_term_mode: PriorTermMode,
    pi: Vec<f64>,
    feature_names: Vec<String>,
    variance_floor: Vec<f64>,
    gamma_hat: Vec<Vec<f64>>,
    /// `null` marks an inadmissible hypothesis.
    lambda: Vec<Vec<Option<f64>>>,
    mu: Vec<Vec<f64>>,
    sigma2: Vec<Vec<f64>>,
}

fn rows_of(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.outer_iter().map(|r| r.to_vec()).collect()
}

fn array_from_rows(name: &str, rows: Vec<Vec<f64>>, cols: usize) -> Result<Array2<f64>> {
    let n = rows.len();
    if let Some(j) = rows.iter().position(|r| r.len() != cols) {
        return Err(Error::InvalidModel(format!(
            "{name} row {} has {} entries, expected {cols}",
            j + 1,
            rows[j].len()
        )));
    }
    Ok(Array2::from_shape_vec((n, cols), rows.into_iter().flatten().collect()).expect("shape"))
}

pub fn model_to_json(model: &FittedModel) -> Result<String> {
    let parts = model.partition_set();
    let file = ModelFile {
        schema_version: MODEL_SCHEMA_VERSION,
        k: model.num_classes(),
        n: model.n(),
        p: model.p(),
        class_label_map: model.class_names().to_vec(),
        scheme: parts.scheme(),
        s: parts
            .matrix()
            .into_iter()
            .map(|r| r.into_iter().map(i64::from).collect())
            .collect(),
        variance_mode: parts.variance_mode(),
        penalty: model.penalty().clone(),
        prior_term_mode: model.prior_term_mode(),
        pi: model.pi().to_vec(),
        feature_names: model.feature_names().to_vec(),
        variance_floor: model.variance_floor().to_vec(),
        gamma_hat: rows_of(model.gamma()),
        lambda: model
            .lambda()
            .outer_iter()
            .map(|r| r.iter().map(|&v| v.is_finite().then_some(v)).collect())
            .collect(),
        mu: rows_of(model.mu()),
        sigma2: rows_of(model.sigma2().as_array()),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn model_from_json(text: &str) -> Result<FittedModel> {
    let file: ModelFile = serde_json::from_str(text)?;
    if file.schema_version != MODEL_SCHEMA_VERSION {
        return Err(Error::InvalidModel(format!(
            "unsupported schema_version {} (expected {MODEL_SCHEMA_VERSION})",
            file.schema_version
        )));
    }
    let parts = PartitionSet::from_stored_matrix(&file.s, file.scheme, file.variance_mode)
        .map_err(|e| Error::InvalidModel(e.to_string()))?;
    if parts.num_classes() != file.k || file.class_label_map.len() != file.k {
        return Err(Error::InvalidModel("K disagrees with S or class_label_map".into()));
    }
    let p = file.p;
    for (name, len) in [
        ("gamma_hat", file.gamma_hat.len()),
        ("lambda", file.lambda.len()),
        ("mu", file.mu.len()),
        ("sigma2", file.sigma2.len()),
    ] {
        if len != p {
            return Err(Error::InvalidModel(format!("{name} has {len} rows, expected p = {p}")));
        }
    }
    let penalty = PenaltyConfig::new(&file.penalty.kind, file.penalty.c)
        .map_err(|e| Error::InvalidModel(e.to_string()))?;
    let m_count = parts.len();
    let z = parts.total_groups();
    let lambda_rows: Vec<Vec<f64>> = file
        .lambda
        .into_iter()
        .map(|r| r.into_iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect())
        .collect();
    let sigma_cols = match file.variance_mode {
        VarianceMode::Equal => m_count,
        VarianceMode::Unequal => z,
    };
    let sigma = array_from_rows("sigma2", file.sigma2, sigma_cols)?;
    let sigma2 = match file.variance_mode {
        VarianceMode::Equal => Variances::Equal(sigma),
        VarianceMode::Unequal => Variances::Unequal(sigma),
    };
    let model = FittedModel {
        parts,
        penalty,
        prior_term_mode: file.prior_term_mode,
        n: file.n,
        class_names: file.class_label_map,
        feature_names: file.feature_names,
        pi: file.pi,
        mu: array_from_rows("mu", file.mu, z)?,
        sigma2,
        gamma: array_from_rows("gamma_hat", file.gamma_hat, m_count)?,
        lambda: array_from_rows("lambda", lambda_rows, m_count)?,
        variance_floor: file.variance_floor,
    };
    check_finite(model.gamma()).map_err(|e| Error::InvalidModel(e.to_string()))?;
    model.validate()?;
    Ok(model)
}

pub fn save_model(model: &FittedModel, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(model_to_json(model)?.as_bytes())?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<FittedModel> {
    let text = std::fs::read_to_string(path)?;
    model_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::FitOptions;
    use ndarray::array;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_toy_file() {
        let f = write_tmp("x,label\n0,a\n2,a\n4,b\n6,b\n");
        let d = load_dataset(f.path(), &CsvSchema::training()).unwrap();
        assert_eq!((d.n(), d.p(), d.num_classes()), (4, 1, 2));
        assert_eq!(d.x().column(0).to_vec(), vec![0., 2., 4., 6.]);
        assert_eq!(d.feature_names(), &["x".to_string()]);
    }

    #[test]
    fn label_may_be_anywhere() {
        let f = write_tmp("label;g1;g2\nB;1;2\nA;3;4\n");
        let schema = CsvSchema {
            delimiter: b';',
            ..CsvSchema::training()
        };
        let d = load_dataset(f.path(), &schema).unwrap();
        assert_eq!(d.class_names(), &["B".to_string(), "A".to_string()]);
        assert_eq!(d.x(), &array![[1., 2.], [3., 4.]]);
        let f = write_tmp("1,x\n2,y\n5,x\n");
        let schema = CsvSchema {
            has_header: false,
            label_column: Some(LabelColumn::Index(1)),
            delimiter: b',',
        };
        let d = load_dataset(f.path(), &schema).unwrap();
        assert_eq!(d.feature_names(), &["V1".to_string()]);
    }

    #[test]
    fn rejects_na_with_location() {
        let f = write_tmp("x,y,label\n0,1,a\n2,NA,b\n");
        let err = load_dataset(f.path(), &CsvSchema::training()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 3") && msg.contains("column y") && msg.contains("missing"), "{msg}");
        let f = write_tmp("x,label\nfoo,a\n2,b\n");
        assert!(load_dataset(f.path(), &CsvSchema::training()).unwrap_err().to_string().contains("non-numeric"));
    }

    #[test]
    fn rejects_single_class_and_missing_label() {
        let f = write_tmp("x,label\n0,a\n2,a\n");
        assert!(load_dataset(f.path(), &CsvSchema::training()).unwrap_err().to_string().contains("fewer than 2 classes"));
        let f = write_tmp("x,label\n0,a\n2,\n");
        assert!(load_dataset(f.path(), &CsvSchema::training()).unwrap_err().to_string().contains("missing label"));
        let f = write_tmp("x,y\n0,1\n");
        assert!(load_dataset(f.path(), &CsvSchema::training()).is_err());
    }

    #[test]
    fn unlabeled_query() {
        let f = write_tmp("x\n1.5\n-2\n");
        let (x, names) = load_matrix(f.path(), &CsvSchema::prediction()).unwrap();
        assert_eq!(x, array![[1.5], [-2.0]]);
        assert_eq!(names, vec!["x".to_string()]);
        let f = write_tmp("x,label\n1.5,a\n");
        let (x, _) = load_matrix(f.path(), &CsvSchema::prediction()).unwrap();
        assert_eq!(x, array![[1.5]]);
    }

    #[test]
    fn dataset_write_read_is_exact() {
        let x = array![[0.1, 1.0 / 3.0], [1e-300, -7.25e12], [std::f64::consts::PI, 2.0]];
        let d = Dataset::from_raw_labels(x, &["u", "v", "u"], None).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_dataset(f.path(), &d).unwrap();
        let back = load_dataset(f.path(), &CsvSchema::training()).unwrap();
        assert_eq!(back, d);
    }

    fn three_class(cols: Vec<[f64; 6]>) -> Dataset {
        let p = cols.len();
        let x = Array2::from_shape_fn((6, p), |(i, j)| cols[j][i]);
        Dataset::from_raw_labels(x, &["a", "a", "b", "b", "c", "c"], None).unwrap()
    }

    #[test]
    fn zero_mad_filter() {
        let d = three_class(vec![[5.; 6], [1., 2., 3., 4., 5., 6.], [1., 1., 1., 1., 9., 9.]]);
        let (f, kept) = filter_features(&d, FilterRule::ZeroMad).unwrap();
        // Third feature: median 1, deviations (0,0,0,0,8,8) -> MAD 0.
        assert_eq!(kept, vec![1]);
        assert_eq!(f.p(), 1);
        let (again, kept2) = filter_features(&f, FilterRule::ZeroMad).unwrap();
        assert_eq!(again, f);
        assert_eq!(kept2, vec![0]);
    }

    #[test]
    fn class_median_filter() {
        // Class medians (6.9, 6.5, 5.0) and (7.2, 6.5, 5.0).
        let d = three_class(vec![
            [6.8, 7.0, 6.4, 6.6, 5.0, 5.0],
            [7.0, 7.4, 6.4, 6.6, 4.0, 6.0],
        ]);
        let (_, kept) = filter_features(&d, FilterRule::ClassMedianBelow(7.0)).unwrap();
        assert_eq!(kept, vec![1]);
        let d = three_class(vec![[1.; 6]]);
        assert!(filter_features(&d, FilterRule::ClassMedianBelow(7.0)).is_err());
        assert!(filter_features(&d, FilterRule::ClassMedianBelow(f64::NAN)).is_err());
    }

    #[test]
    fn median_convention() {
        assert_eq!(median(&mut [3., 1., 2.]), 2.0);
        assert_eq!(median(&mut [4., 1., 2., 3.]), 2.5);
    }

    fn toy_model() -> FittedModel {
        let d = Dataset::from_raw_labels(array![[0.], [2.], [4.], [6.]], &["1", "1", "2", "2"], None)
            .unwrap();
        FitOptions::default().fit(&d).unwrap()
    }

    #[test]
    fn model_round_trip() {
        let m = toy_model();
        let back = model_from_json(&model_to_json(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn truncated_model_is_parse_error() {
        let text = model_to_json(&toy_model()).unwrap();
        let err = model_from_json(&text[..text.len() / 2]).unwrap_err();
        assert!(matches!(err, Error::Json(_)), "{err}");
    }

    #[test]
    fn tampered_gamma_is_rejected() {
        let text = model_to_json(&toy_model()).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["gamma_hat"][0] = serde_json::json!([0.1, 0.7]);
        let err = model_from_json(&v.to_string()).unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)), "{err}");
        v["gamma_hat"][0] = serde_json::json!([0.2, 0.8]);
        v["schema_version"] = serde_json::json!(99);
        assert!(model_from_json(&v.to_string()).unwrap_err().to_string().contains("schema_version"));
    }

    #[test]
    fn partition_matrix_csv() {
        let f = write_tmp("1,1,2\n1,2,1\n2,2,1\n");
        let rows = load_partition_matrix(f.path()).unwrap();
        assert_eq!(rows, vec![vec![1, 1, 2], vec![1, 2, 1], vec![2, 2, 1]]);
        let f = write_tmp("1,x\n");
        assert!(load_partition_matrix(f.path()).is_err());
    }
}
