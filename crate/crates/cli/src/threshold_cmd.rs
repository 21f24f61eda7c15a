use std::path::PathBuf;

use clap::{Args, Subcommand};
use serde::Serialize;

use genbound::bound_math::{Nats, Probability};
use genbound::inductive::deviation_bound_grid;
use genbound::report::Confidence;
use genbound::threshold::{CellGrid, GridOptions, LabeledDataset, DEFAULT_CAP};

use crate::error::{usage, CliResult};
use crate::io::{emit, read_csv, CsvData};

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Training CSV (features in (0,1), integer labels).
    #[arg(long)]
    pub data: PathBuf,
    /// Unlabeled shadow patterns for the transductive grid.
    #[arg(long)]
    pub shadow: Option<PathBuf>,
    /// Number of label classes; defaults to max label + 1.
    #[arg(long)]
    pub label_count: Option<usize>,
    /// Cap on the enumeration cost.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    pub cap: f64,
}

#[derive(Debug, Subcommand)]
pub enum ThresholdCmd {
    /// Build the grid and report the Gibbs posterior at λ.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
    },
    /// Per-row label distribution of the Gibbs posterior.
    Predict {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        lambda: f64,
        /// Patterns to classify (a `y` column is ignored).
        #[arg(long)]
        input: PathBuf,
    },
    /// Empirical dimension sup_β β[π_exp(−βr)(r) − r_min].
    Dimension {
        #[command(flatten)]
        data: DataArgs,
        /// Comma-separated β grid; defaults to powers of 2 up to 16N.
        #[arg(long, value_delimiter = ',')]
        betas: Option<Vec<f64>>,
    },
    /// Deviation bound for the Gibbs posterior at λ with its exact KL divergence.
    Bound {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        /// Ratio of the geometric λ grid of the deviation bound.
        #[arg(long, default_value_t = 1.1)]
        alpha: f64,
    },
}

fn load(a: &DataArgs) -> CliResult<CellGrid> {
    let train = read_csv(&a.data)?;
    let labels = train.class_labels()?;
    let count = a.label_count.unwrap_or_else(|| labels.iter().max().map_or(1, |m| m + 1));
    let mut ds = LabeledDataset::new(train.features, labels, count)?;
    let transductive = a.shadow.is_some();
    if let Some(s) = &a.shadow {
        let shadow = read_csv(s)?;
        ds = ds.with_shadow(shadow.features, None)?;
    }
    Ok(CellGrid::build(&ds, GridOptions { transductive, cap: a.cap })?)
}

#[derive(Serialize)]
struct FitReport {
    n: usize,
    h: usize,
    label_count: usize,
    vertices: usize,
    lambda: f64,
    log_partition: f64,
    gibbs_risk: f64,
    kl_to_prior: f64,
    r_min: f64,
}

#[derive(Serialize)]
struct PredictReport {
    lambda: f64,
    probabilities: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct DimensionReport {
    d_e: f64,
    beta: f64,
    r_min: f64,
}

fn check_lambda(l: f64) -> CliResult<()> {
    if l >= 0.0 && l.is_finite() {
        Ok(())
    } else {
        usage("--lambda must be finite and non-negative")
    }
}

pub fn run(cmd: &ThresholdCmd) -> CliResult<()> {
    match cmd {
        ThresholdCmd::Fit { data, lambda } => {
            check_lambda(*lambda)?;
            let g = load(data)?;
            emit(&FitReport {
                n: g.n_train(),
                h: g.dim(),
                label_count: g.label_count(),
                vertices: g.n_vertices(),
                lambda: *lambda,
                log_partition: g.log_partition(*lambda),
                gibbs_risk: g.gibbs_risk(*lambda),
                kl_to_prior: g.kl_between_gibbs(*lambda, 0.0),
                r_min: g.erm().1,
            })
        }
        ThresholdCmd::Predict { data, lambda, input } => {
            check_lambda(*lambda)?;
            let g = load(data)?;
            let CsvData { features, .. } = read_csv(input)?;
            let probabilities = features.iter().map(|x| g.predict_proba(*lambda, x)).collect::<Result<_, _>>()?;
            emit(&PredictReport { lambda: *lambda, probabilities })
        }
        ThresholdCmd::Dimension { data, betas } => {
            let g = load(data)?;
            let grid = betas.clone().unwrap_or_else(|| {
                let top = 16.0 * g.n_train() as f64;
                std::iter::successors(Some(1.0), |b| Some(b * 2.0)).take_while(|&b| b <= top).collect()
            });
            let (d_e, beta) = g.empirical_dimension(&grid)?;
            emit(&DimensionReport { d_e, beta, r_min: g.erm().1 })
        }
        ThresholdCmd::Bound { data, lambda, epsilon, alpha } => {
            check_lambda(*lambda)?;
            let g = load(data)?;
            let risk = g.gibbs_risk(*lambda);
            let kl = g.kl_between_gibbs(*lambda, 0.0);
            let rep = deviation_bound_grid(
                g.n_train() as u64,
                Probability::new(risk.clamp(0.0, 1.0))?,
                Nats::new(kl.max(0.0))?,
                Confidence::new(*epsilon)?,
                *alpha,
            )?
            .extra("gibbs_risk", risk)
            .extra("kl", kl)
            .extra("posterior_lambda", *lambda);
            emit(&rep)
        }
    }
}
