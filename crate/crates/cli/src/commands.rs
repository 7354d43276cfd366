use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::info;
use multida::data_io::{
    filter_features, load_dataset, load_matrix, load_model, load_partition_matrix, save_model,
    write_dataset, CsvSchema,
};
use multida::simlab::{
    consistency_sweep, cross_validate, generate, write_consistency_csv, write_cv_csv, Scenario,
    SimSpec, SweepConfig,
};
use multida::{FitOptions, FittedModel, PartitionSet, VarianceMode};

use crate::args::{
    CvArgs, FilterArgs, ModelFlags, PartitionsArgs, PredictArgs, SchemeArg, SimulateArgs, TrainArgs,
};

/// A failure carrying its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl From<multida::Error> for CliError {
    fn from(e: multida::Error) -> Self {
        let code = match e {
            multida::Error::Numeric(_) => 3,
            _ => 2,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError {
            code: 2,
            message: e.to_string(),
        }
    }
}

impl From<String> for CliError {
    fn from(message: String) -> Self {
        CliError { code: 2, message }
    }
}

pub type CliResult = Result<(), CliError>;

fn open_out(path: &Path) -> Result<Box<dyn Write>, CliError> {
    if path.as_os_str() == "-" {
        Ok(Box::new(BufWriter::new(io::stdout().lock())))
    } else {
        let f = File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(Box::new(BufWriter::new(f)))
    }
}

fn user_matrix(scheme: &SchemeArg) -> Result<Option<Vec<Vec<i64>>>, CliError> {
    match scheme {
        SchemeArg::User(path) => Ok(Some(load_partition_matrix(path)?)),
        _ => Ok(None),
    }
}

fn fit_options(flags: &ModelFlags) -> Result<FitOptions, CliError> {
    Ok(FitOptions {
        scheme: flags.scheme.scheme(),
        user_matrix: user_matrix(&flags.scheme)?,
        penalty: flags.penalty,
        variance_mode: flags.variance,
        prior_term_mode: flags.prior_term,
        ..FitOptions::default()
    })
}

fn log_model_flags(flags: &ModelFlags) {
    let scheme = match &flags.scheme {
        SchemeArg::User(p) => format!("user:{}", p.display()),
        other => other.scheme().to_string(),
    };
    info!(
        "penalty={} variance={} scheme={scheme} prior-term={}",
        flags.penalty, flags.variance, flags.prior_term
    );
}

fn method_name(mode: VarianceMode) -> &'static str {
    match mode {
        VarianceMode::Equal => "multiLDA",
        VarianceMode::Unequal => "multiQDA",
    }
}

pub fn train(args: &TrainArgs) -> CliResult {
    log_model_flags(&args.model);
    let schema = args.csv.schema()?;
    let data = load_dataset(&args.data, &schema)?;
    let opts = fit_options(&args.model)?;
    let model = opts.fit(&data)?;
    save_model(&model, &args.out)?;

    let selected_path = args.selected.clone().unwrap_or_else(|| {
        let mut s = args.out.clone().into_os_string();
        s.push(".selected.csv");
        PathBuf::from(s)
    });
    write_selected(&model, args.threshold, &selected_path)?;

    let mut out = io::stdout().lock();
    writeln!(out, "n = {}", model.n())?;
    writeln!(out, "p = {}", model.p())?;
    writeln!(out, "K = {}", model.num_classes())?;
    writeln!(out, "M = {}", model.partition_set().len())?;
    writeln!(out, "method = {}", method_name(model.variance_mode()))?;
    writeln!(out, "penalty = {} (C = {})", model.penalty().kind, model.penalty().c)?;
    writeln!(out, "selected = {}", model.num_discriminative())?;
    writeln!(out, "model = {}", args.out.display())?;
    writeln!(out, "selected_table = {}", selected_path.display())?;
    Ok(())
}

fn write_selected(model: &FittedModel, threshold: f64, path: &Path) -> CliResult {
    let rows = model.selected_features(threshold);
    let mut w = csv::Writer::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let parts = model.partition_set();
    let io_err = |e: csv::Error| CliError::from(e.to_string());
    w.write_record(["feature", "name", "hypothesis", "partition", "weight"])
        .map_err(io_err)?;
    for r in rows {
        let partition = parts
            .column(r.hypothesis)
            .labels()
            .iter()
            .map(u32::to_string)
            .collect::<Vec<_>>()
            .join("-");
        w.write_record(&[
            (r.feature + 1).to_string(),
            r.name.clone(),
            (r.hypothesis + 1).to_string(),
            partition,
            r.weight.to_string(),
        ])
        .map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn predict(args: &PredictArgs) -> CliResult {
    let model = load_model(&args.model)?;
    let schema = args.csv.schema()?;
    let (x, _) = load_matrix(&args.data, &schema)?;
    if x.ncols() != model.p() {
        return Err(CliError::from(format!(
            "{}: query has {} features, model expects p = {}",
            args.data.display(),
            x.ncols(),
            model.p()
        )));
    }
    let pred = model.predict(x.view())?;
    let mut w = csv::Writer::from_writer(open_out(&args.out)?);
    let mut header = vec!["label".to_string()];
    header.extend(model.class_names().iter().map(|c| format!("p_{c}")));
    let csv_err = |e: csv::Error| CliError::from(e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for (label, row) in pred.labels.iter().zip(pred.probabilities.outer_iter()) {
        let mut rec = vec![model.class_names()[*label].clone()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    info!("predicted {} rows", pred.labels.len());
    Ok(())
}

pub fn cv(args: &CvArgs, seed: u64) -> CliResult {
    log_model_flags(&args.model);
    info!("folds={} trials={}", args.folds, args.trials);
    let data = load_dataset(&args.data, &args.csv.schema()?)?;
    let opts = fit_options(&args.model)?;
    let table = cross_validate(&data, args.folds, args.trials, &opts, seed)?;
    write_cv_csv(open_out(&args.out)?, &[(method_name(opts.variance_mode), &table)])?;
    info!("mean error {:.4} (sd {:.4}) over {} trials", table.mean, table.sd, args.trials);
    Ok(())
}

pub fn simulate(args: &SimulateArgs, seed: u64) -> CliResult {
    let selection = args.scenario == Scenario::FsConsistency;
    let p = args.p.unwrap_or(if selection { 500 } else { 2000 });
    let k = args.k.unwrap_or(if selection { 3 } else { 4 });
    let ns = if !args.n.is_empty() {
        args.n.clone()
    } else if selection {
        (1..=10).map(|i| 50 * i).collect()
    } else {
        vec![100]
    };
    info!("scenario={} n={ns:?} p={p} K={k}", args.scenario);
    let base = |n: usize, seed: u64| {
        let mut spec = SimSpec::new(args.scenario, n, p, k, seed);
        if let Some(f) = args.fraction {
            spec.discriminative_fraction = f;
        }
        if let Some(s) = args.shift {
            spec.mean_shift = s;
        }
        if let Some(b) = args.block_size {
            spec.block_size = b;
        }
        if let Some(d) = args.density {
            spec.block_density = d;
        }
        spec
    };

    if selection {
        if args.fraction.is_some() || args.shift.is_some() {
            return Err(CliError::from(
                "--fraction and --shift apply to the prediction scenarios only".to_string(),
            ));
        }
        info!(
            "replicates={} penalty={} variance={}",
            args.replicates, args.penalty, args.variance
        );
        let rows = consistency_sweep(&SweepConfig {
            ns,
            p,
            k,
            replicates: args.replicates,
            seed,
            penalty: args.penalty,
            variance_mode: args.variance,
        })?;
        write_consistency_csv(open_out(&args.out)?, &rows)?;
        return Ok(());
    }

    info!("folds={} trials={}", args.folds, args.trials);
    let lda = FitOptions::default().with_variance(VarianceMode::Equal);
    let qda = FitOptions::default().with_variance(VarianceMode::Unequal);
    let mut w = csv::Writer::from_writer(open_out(&args.out)?);
    let csv_err = |e: csv::Error| CliError::from(e.to_string());
    w.write_record(["scenario", "n", "p", "K", "method", "trial", "fold", "n_test", "errors", "error_rate"])
        .map_err(csv_err)?;
    for &n in &ns {
        let spec = base(n, seed);
        let (data, truth) = generate(&spec)?;
        if truth.uneven_split {
            info!("n = {n} is not divisible by K = {k}; the first classes get one extra sample");
        }
        for (name, opts) in [("multiLDA", &lda), ("multiQDA", &qda)] {
            let table = cross_validate(&data, args.folds, args.trials, opts, seed)?;
            info!("n={n} {name}: mean error {:.4} (sd {:.4})", table.mean, table.sd);
            for r in &table.rows {
                w.write_record(&[
                    args.scenario.to_string(),
                    n.to_string(),
                    p.to_string(),
                    k.to_string(),
                    name.to_string(),
                    r.trial.to_string(),
                    r.fold.to_string(),
                    r.n_test.to_string(),
                    r.errors.to_string(),
                    r.error_rate.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn print_matrix<W: Write>(out: &mut W, title: &str, rows: &[Vec<String>]) -> io::Result<()> {
    writeln!(out, "{title}")?;
    for r in rows {
        writeln!(out, "{}", r.join(" "))?;
    }
    writeln!(out)
}

fn row<T: ToString>(v: &[T]) -> Vec<String> {
    v.iter().map(T::to_string).collect()
}

pub fn partitions(args: &PartitionsArgs) -> CliResult {
    let user = user_matrix(&args.scheme)?;
    let set = PartitionSet::build(args.k, args.scheme.scheme(), user.as_deref(), args.variance)?;
    let mut out = io::stdout().lock();
    writeln!(
        out,
        "K = {} scheme = {} variance = {} M = {}\n",
        set.num_classes(),
        set.scheme(),
        set.variance_mode(),
        set.len()
    )?;
    let s: Vec<Vec<String>> = set.matrix().iter().map(|r| row(r)).collect();
    print_matrix(&mut out, "S", &s)?;
    print_matrix(&mut out, "G", &[row(set.groups())])?;
    print_matrix(&mut out, "nu", &[row(set.dof())])?;
    print_matrix(&mut out, "z", &[row(set.cumulative_groups())])?;
    let a: Vec<Vec<String>> = set.allocation_matrix().iter().map(|r| row(r)).collect();
    print_matrix(&mut out, "A", &a)?;
    Ok(())
}

pub fn filter(args: &FilterArgs) -> CliResult {
    let schema: CsvSchema = args.csv.schema()?;
    let data = load_dataset(&args.data, &schema)?;
    let (kept, _) = filter_features(&data, args.rule)?;
    write_dataset(&args.out, &kept)?;
    info!("kept {} of {} features", kept.p(), data.p());
    Ok(())
}
