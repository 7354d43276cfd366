use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use multida::data_io::{CsvSchema, FilterRule, LabelColumn};
use multida::simlab::Scenario;
use multida::{PenaltyKind, PriorTermMode, Scheme, VarianceMode};

#[derive(Debug, Parser)]
#[command(name = "multida", version, about = "Diagonal discriminant analysis with hypothesis-weighted feature selection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads for fitting and prediction (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// Seed for every random choice; drawn and logged when omitted.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Only log warnings and errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model and write it with its selected-feature table.
    Train(TrainArgs),
    /// Class probabilities for a query matrix.
    Predict(PredictArgs),
    /// Repeated stratified cross-validation.
    Cv(CvArgs),
    /// Run a simulation study.
    Simulate(SimulateArgs),
    /// Print the hypothesis matrix and its derived quantities.
    Partitions(PartitionsArgs),
    /// Drop features by a preprocessing rule.
    Filter(FilterArgs),
}

/// How the partition hypotheses are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum SchemeArg {
    Exhaustive,
    OneVsRest,
    Ordinal,
    User(PathBuf),
}

impl FromStr for SchemeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exhaustive" => Ok(SchemeArg::Exhaustive),
            "onevsrest" | "one-vs-rest" => Ok(SchemeArg::OneVsRest),
            "ordinal" => Ok(SchemeArg::Ordinal),
            _ => match s.strip_prefix("user:") {
                Some(path) if !path.is_empty() => Ok(SchemeArg::User(path.into())),
                _ => Err(format!(
                    "unknown scheme `{s}` (expected exhaustive, onevsrest, ordinal or user:<path>)"
                )),
            },
        }
    }
}

impl SchemeArg {
    pub fn scheme(&self) -> Scheme {
        match self {
            SchemeArg::Exhaustive => Scheme::Exhaustive,
            SchemeArg::OneVsRest => Scheme::OneVsRest,
            SchemeArg::Ordinal => Scheme::Ordinal,
            SchemeArg::User(_) => Scheme::User,
        }
    }
}

fn parse_penalty(s: &str) -> Result<PenaltyKind, String> {
    s.parse().map_err(|e: multida::Error| e.to_string())
}

fn parse_variance(s: &str) -> Result<VarianceMode, String> {
    s.parse().map_err(|e: multida::Error| e.to_string())
}

fn parse_prior(s: &str) -> Result<PriorTermMode, String> {
    s.parse().map_err(|e: multida::Error| e.to_string())
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse().map_err(|e: multida::Error| e.to_string())
}

fn parse_rule(s: &str) -> Result<FilterRule, String> {
    if s == "zero-mad" {
        return Ok(FilterRule::ZeroMad);
    }
    match s.strip_prefix("class-median:").map(str::parse::<f64>) {
        Some(Ok(t)) if t.is_finite() => Ok(FilterRule::ClassMedianBelow(t)),
        _ => Err(format!("unknown rule `{s}` (expected zero-mad or class-median:<t>)")),
    }
}

fn parse_delimiter(s: &str) -> Result<u8, String> {
    match s {
        "\\t" | "tab" => Ok(b'\t'),
        _ if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        _ => Err(format!("delimiter must be a single ASCII character, got `{s}`")),
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelFlags {
    /// ebic, bic, aic or custom:<C>.
    #[arg(long, default_value = "ebic", value_parser = parse_penalty)]
    pub penalty: PenaltyKind,

    /// equal (multiLDA) or unequal (multiQDA).
    #[arg(long, default_value = "equal", value_parser = parse_variance)]
    pub variance: VarianceMode,

    /// exhaustive, onevsrest, ordinal or user:<path to K x M CSV>.
    #[arg(long, default_value = "exhaustive")]
    pub scheme: SchemeArg,

    /// Class-prior term in the discriminant: log or plogp.
    #[arg(long = "prior-term", default_value = "log", value_parser = parse_prior)]
    pub prior_term: PriorTermMode,
}

#[derive(Debug, Clone, Args)]
pub struct CsvFlags {
    /// Name of the label column.
    #[arg(long, default_value = "label", conflicts_with = "label_index")]
    pub label: String,

    /// 1-based position of the label column, instead of a name.
    #[arg(long)]
    pub label_index: Option<usize>,

    /// Field delimiter (a single character, or `tab`).
    #[arg(long, default_value = ",", value_parser = parse_delimiter)]
    pub delimiter: u8,

    /// The file has no header row.
    #[arg(long)]
    pub no_header: bool,
}

impl CsvFlags {
    pub fn schema(&self) -> Result<CsvSchema, String> {
        let label_column = match self.label_index {
            Some(0) => return Err("--label-index is 1-based".into()),
            Some(i) => LabelColumn::Index(i - 1),
            None => LabelColumn::Name(self.label.clone()),
        };
        Ok(CsvSchema {
            has_header: !self.no_header,
            label_column: Some(label_column),
            delimiter: self.delimiter,
        })
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training CSV.
    pub data: PathBuf,
    #[command(flatten)]
    pub model: ModelFlags,
    #[command(flatten)]
    pub csv: CsvFlags,
    /// Model file to write.
    #[arg(long, default_value = "model.json")]
    pub out: PathBuf,
    /// Selected-feature table (defaults to `<out>.selected.csv`).
    #[arg(long)]
    pub selected: Option<PathBuf>,
    /// Minimum non-null weight for the selected-feature table.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model file written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Query CSV; a label column, if present, is ignored.
    pub data: PathBuf,
    #[command(flatten)]
    pub csv: CsvFlags,
    /// Output CSV (`-` for standard output).
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    /// Labelled CSV.
    pub data: PathBuf,
    #[command(flatten)]
    pub model: ModelFlags,
    #[command(flatten)]
    pub csv: CsvFlags,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    /// Output CSV, one row per trial and fold (`-` for standard output).
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// fs-consistency, ind-equal-var, ind-unequal-var, dep-equal-cov or
    /// dep-unequal-cov.
    #[arg(long, default_value = "fs-consistency", value_parser = parse_scenario)]
    pub scenario: Scenario,
    /// Sample sizes (default 50,100,...,500 for fs-consistency, else 100).
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// Features (default 500 for fs-consistency, else 2000).
    #[arg(long)]
    pub p: Option<usize>,
    /// Classes (default 3 for fs-consistency, else 4).
    #[arg(long)]
    pub k: Option<usize>,
    /// Replicates per sample size (fs-consistency).
    #[arg(long, default_value_t = 20)]
    pub replicates: usize,
    /// Cross-validation folds (prediction scenarios).
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Cross-validation trials (prediction scenarios).
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    /// Fraction of discriminative features.
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Mean shift between neighbouring groups.
    #[arg(long)]
    pub shift: Option<f64>,
    /// Covariance block size (dependent scenarios; default p/10).
    #[arg(long)]
    pub block_size: Option<usize>,
    /// Fraction of non-zero off-diagonal factor entries.
    #[arg(long)]
    pub density: Option<f64>,
    /// Penalty (fs-consistency).
    #[arg(long, default_value = "ebic", value_parser = parse_penalty)]
    pub penalty: PenaltyKind,
    /// Variance model (fs-consistency).
    #[arg(long, default_value = "equal", value_parser = parse_variance)]
    pub variance: VarianceMode,
    /// Output CSV (`-` for standard output).
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PartitionsArgs {
    /// Number of classes.
    #[arg(long)]
    pub k: usize,
    /// exhaustive, onevsrest, ordinal or user:<path>.
    #[arg(long, default_value = "exhaustive")]
    pub scheme: SchemeArg,
    #[arg(long, default_value = "equal", value_parser = parse_variance)]
    pub variance: VarianceMode,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Labelled CSV.
    pub data: PathBuf,
    #[command(flatten)]
    pub csv: CsvFlags,
    /// zero-mad or class-median:<t>.
    #[arg(long, value_parser = parse_rule)]
    pub rule: FilterRule,
    /// Filtered dataset CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!("onevsrest".parse::<SchemeArg>().unwrap(), SchemeArg::OneVsRest);
        assert_eq!(
            "user:s.csv".parse::<SchemeArg>().unwrap(),
            SchemeArg::User("s.csv".into())
        );
        assert!("user:".parse::<SchemeArg>().is_err());
        assert!("random".parse::<SchemeArg>().is_err());
    }

    #[test]
    fn rule_parsing() {
        assert_eq!(parse_rule("class-median:7").unwrap(), FilterRule::ClassMedianBelow(7.0));
        assert!(parse_rule("class-median:x").is_err());
        assert_eq!(parse_delimiter("tab").unwrap(), b'\t');
        assert!(parse_delimiter(";;").is_err());
    }
}
