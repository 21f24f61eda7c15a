use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use genbound::relative::{effective_temperature, select, ModelSet, PosteriorSpec, SelectionConfig, SelectionReport};
use genbound::report::Confidence;
use genbound::threshold::{GridOptions, LabeledDataset, DEFAULT_CAP};

use crate::error::{usage, CliResult};
use crate::io::{emit, read_csv};

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Sub-models as feature subsets (1-based), e.g. "1;2;1,2".
    #[arg(long)]
    pub models: String,
    /// Model prior weights μ, comma-separated; uniform by default.
    #[arg(long, value_delimiter = ',')]
    pub mu: Option<Vec<f64>>,
    /// Inverse temperatures of the candidate posteriors (must lie on the grid).
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Vec<f64>,
    /// Parameter grid carrying ν; defaults to powers of 2 up to N.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 2.0)]
    pub zeta: f64,
    /// Scan λ₁ over {0, γ/8, …, γ} in the effective-temperature search.
    #[arg(long)]
    pub full_scan: bool,
    /// Also report the effective inverse temperature of every posterior.
    #[arg(long)]
    pub temperatures: bool,
    #[arg(long)]
    pub label_count: Option<usize>,
}

#[derive(Serialize)]
struct Output {
    #[serde(flatten)]
    report: SelectionReport,
    /// 1-based features of each registered sub-model.
    models: Vec<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    temperatures: Option<Vec<f64>>,
}

fn parse_models(s: &str, dim: usize) -> CliResult<Vec<Vec<usize>>> {
    s.split(';')
        .map(|part| {
            part.split(',')
                .map(|f| match f.trim().parse::<usize>() {
                    Ok(j) if j >= 1 && j <= dim => Ok(j - 1),
                    _ => usage(format!("invalid feature '{f}' in --models (expected 1..={dim})")),
                })
                .collect()
        })
        .collect()
}

pub fn run(a: &SelectArgs) -> CliResult<()> {
    let d = read_csv(&a.data)?;
    let labels = d.class_labels()?;
    let count = a.label_count.unwrap_or_else(|| labels.iter().max().map_or(1, |m| m + 1));
    let subsets = parse_models(&a.models, d.dim())?;
    let ds = LabeledDataset::new(d.features, labels, count)?;
    let models = ModelSet::build(&ds, &subsets, a.mu.clone(), GridOptions { transductive: false, cap: DEFAULT_CAP })?;
    let mut cfg = SelectionConfig::default_for(ds.n_train(), Confidence::new(a.epsilon)?);
    if let Some(g) = &a.grid {
        cfg.grid = g.clone();
    }
    cfg.zeta = a.zeta;
    cfg.full_scan = a.full_scan;
    if a.lambdas.is_empty() {
        return usage("--lambdas must list at least one inverse temperature");
    }
    let posteriors: Vec<PosteriorSpec> = (0..subsets.len())
        .flat_map(|model| a.lambdas.iter().map(move |&lambda| PosteriorSpec { model, lambda }))
        .collect();
    let report = select(&models, &posteriors, &cfg)?;
    let temperatures = if a.temperatures {
        Some(report.ordered.iter().map(|&p| effective_temperature(&models, p, &cfg)).collect::<Result<Vec<_>, _>>()?)
    } else {
        None
    };
    emit(&Output { report, models: subsets.iter().map(|s| s.iter().map(|j| j + 1).collect()).collect(), temperatures })
}
