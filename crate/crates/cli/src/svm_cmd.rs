use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use genbound::bound_math::Probability;
use genbound::report::Confidence;
use genbound::svm::{
    gram, inductive_margin_bound, margin_counts, margin_to_h, radius_sq, solve_box, solve_canonical, svm_transductive_bound,
    Kernel, SolverOptions, SvmModel,
};

use crate::error::{usage, CliError, CliResult};
use crate::io::{emit, read_csv, write_json_file};

/// Serialized model: kernel descriptor, support points with labels and
/// multipliers, bias and box parameter (null for the canonical solution).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub kernel: Kernel,
    pub support_points: Vec<Vec<f64>>,
    pub labels: Vec<i8>,
    pub alphas: Vec<f64>,
    pub b: f64,
    pub c: Option<f64>,
}

impl ModelRecord {
    fn model(&self) -> CliResult<SvmModel> {
        let m = self.support_points.len();
        if self.labels.len() != m || self.alphas.len() != m {
            return usage("model record: support points, labels and alphas differ in length");
        }
        self.kernel.validate()?;
        Ok(SvmModel {
            kernel: self.kernel.clone(),
            support_points: self.support_points.clone(),
            coef: self.alphas.iter().zip(&self.labels).map(|(a, &y)| a * y as f64).collect(),
            b: self.b,
            c: self.c,
        })
    }

    fn load(path: &PathBuf) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SvmBoundMethod {
    /// Transductive bound for the margin model ℛ_h.
    Trans,
    /// Margin quantile bound over all h.
    Margin,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 2_000_000)]
    pub max_iter: usize,
}

#[derive(Debug, Subcommand)]
pub enum SvmCmd {
    /// Train and write a model record.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// linear | gaussian[:s] | poly:c0,c1,... | exp[:s]
        #[arg(long, default_value = "linear")]
        kernel: String,
        /// Box parameter; omit for the canonical (hard-margin) solution.
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Training error, margin, margin index and radius of a model on a dataset.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Transductive or margin quantile bound for a trained model.
    Bound {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Shadow patterns; their count must be a multiple k·N of the training size.
        #[arg(long)]
        shadow: Option<PathBuf>,
        /// Shadow ratio when no shadow file is given.
        #[arg(long)]
        k: Option<u64>,
        #[arg(long, value_enum, default_value_t = SvmBoundMethod::Trans)]
        method: SvmBoundMethod,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
    },
}

#[derive(Serialize)]
struct TrainReport {
    n: usize,
    support: usize,
    b: f64,
    c: Option<f64>,
    objective: f64,
    kkt_residual: f64,
    iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h_margin: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    radius_sq: Option<f64>,
}

#[derive(Serialize)]
struct EvalReport {
    n: usize,
    errors: usize,
    error_rate: f64,
    margin: f64,
    norm_sq: f64,
    radius_sq: f64,
    h_margin: u64,
}

pub fn run(cmd: &SvmCmd) -> CliResult<()> {
    match cmd {
        SvmCmd::Train { data, kernel, c, model, solver } => {
            let d = read_csv(data)?;
            let y = d.signed_labels()?;
            let kernel: Kernel = kernel.parse()?;
            let g = gram(&kernel, &d.features);
            let opts = SolverOptions { tol: solver.tol, max_iter: solver.max_iter };
            let (sol, margin) = match c {
                Some(c) => (solve_box(&g, &y, *c, opts)?, None),
                None => {
                    let (s, m) = solve_canonical(&g, &y, opts)?;
                    (s, Some(m))
                }
            };
            let record = ModelRecord {
                kernel,
                support_points: sol.support.iter().map(|&i| d.features[i].clone()).collect(),
                labels: sol.support.iter().map(|&i| y[i]).collect(),
                alphas: sol.support.iter().map(|&i| sol.alpha[i]).collect(),
                b: sol.b,
                c: sol.c,
            };
            write_json_file(model, &record)?;
            emit(&TrainReport {
                n: y.len(),
                support: sol.support.len(),
                b: sol.b,
                c: sol.c,
                objective: sol.objective,
                kkt_residual: sol.kkt_residual,
                iterations: sol.iterations,
                margin: margin.map(|m| m.margin),
                h_margin: margin.map(|m| m.h_margin),
                radius_sq: margin.map(|m| m.radius_sq),
            })
        }
        SvmCmd::Eval { model, data } => {
            let rec = ModelRecord::load(model)?;
            let m = rec.model()?;
            let d = read_csv(data)?;
            let y = d.signed_labels()?;
            let errors = d.features.iter().zip(&y).filter(|(x, &l)| m.classify(x) != l).count();
            let norm_sq = m.norm_sq();
            let margin = norm_sq.sqrt().recip();
            let r2 = radius_sq(&d.features, &m.kernel)?;
            let h_margin = if r2 > 0.0 && margin.is_finite() { margin_to_h(margin, r2.sqrt(), y.len() as u64)? } else { 1 };
            emit(&EvalReport {
                n: y.len(),
                errors,
                error_rate: errors as f64 / y.len() as f64,
                margin,
                norm_sq,
                radius_sq: r2,
                h_margin,
            })
        }
        SvmCmd::Bound { model, data, shadow, k, method, epsilon } => {
            let m = ModelRecord::load(model)?.model()?;
            let d = read_csv(data)?;
            let y = d.signed_labels()?;
            let n = y.len() as u64;
            let eps = Confidence::new(*epsilon)?;
            let mut all = d.features.clone();
            let k = match (shadow, k) {
                (Some(s), _) => {
                    let sh = read_csv(s)?;
                    if sh.features.len() as u64 % n != 0 || sh.features.is_empty() {
                        return usage("shadow size must be a positive multiple of the training size");
                    }
                    all.extend(sh.features);
                    (all.len() as u64 - n) / n
                }
                (None, Some(k)) if *k >= 1 => *k,
                _ => return usage("give --shadow or --k >= 1"),
            };
            let radius = radius_sq(&all, &m.kernel)?.sqrt();
            let errors = d.features.iter().zip(&y).filter(|(x, &l)| m.classify(x) != l).count() as u64;
            let rep = match method {
                SvmBoundMethod::Trans => {
                    let margin = m.norm_sq().sqrt().recip();
                    let h = if radius > 0.0 { margin_to_h(margin, radius, n)? } else { 1 };
                    svm_transductive_bound(n, k, Probability::from_counts(errors, n)?, h, eps)?
                        .extra("margin", margin)
                        .extra("radius", radius)
                }
                SvmBoundMethod::Margin => {
                    let counts = margin_counts(&m, &d.features, &y, radius, n)?;
                    inductive_margin_bound(n, k, &counts, eps, None)?.extra("radius", radius)
                }
            };
            emit(&rep.extra("training_errors", errors as f64))
        }
    }
}
