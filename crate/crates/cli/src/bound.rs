use clap::{Args, ValueEnum};

use genbound::bound_math::{quadratic_inversion, Nats, Probability};
use genbound::inductive::{
    deviation_bound, deviation_bound_grid, dim_margin_risk, local_bound, local_bound_beta, mean_risk_bound_opt,
    single_rule_bound, sqrt_risk_bound,
};
use genbound::report::Confidence;
use genbound::svm::svm_transductive_bound;
use genbound::transductive::{
    default_etas, eta_correction, inductive_gaussian, inductive_grid_bound, inductive_main_bound, iid_k1_bound,
    iid_k1_gaussian, trans_bound, trans_bound_k1, trans_bound_k1_exch, vapnik_baseline, vc_trace_log, FixedComplexity,
    ShadowScan, TraceComplexity, VcDimension,
};
use genbound::BoundReport;

use crate::error::{usage, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Method {
    SingleRule,
    Deviation,
    DeviationGrid,
    MeanRiskOpt,
    SqrtRisk,
    DimMargin,
    Local,
    LocalBeta,
    QuadraticInversion,
    Trans,
    TransK1,
    TransK1Exch,
    EtaCorrection,
    InductiveMain,
    InductiveGrid,
    InductiveGaussian,
    IidK1,
    IidK1Gaussian,
    VapnikBaseline,
    SvmTrans,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long, value_enum)]
    pub method: Method,
    /// Training sample size N.
    #[arg(long)]
    pub n: Option<u64>,
    /// Training error count (sets r = errors / N).
    #[arg(long, conflicts_with = "r")]
    pub errors: Option<u64>,
    /// Training error rate (or r_min, q).
    #[arg(long)]
    pub r: Option<f64>,
    /// Shadow-sample ratio.
    #[arg(long)]
    pub k: Option<u64>,
    /// VC dimension (or margin model index for svm_trans).
    #[arg(long)]
    pub h: Option<u64>,
    /// Complexity in nats (overrides --h).
    #[arg(long)]
    pub d: Option<f64>,
    #[arg(long)]
    pub kl: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Grid ratio (deviation_grid, inductive_grid) or local-bound α.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub eta: f64,
    /// Empirical dimension.
    #[arg(long)]
    pub d_e: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub extra_kl: f64,
    /// Coefficients of a x² + b x = B (quadratic_inversion).
    #[arg(long)]
    pub qa: Option<f64>,
    #[arg(long)]
    pub qb: Option<f64>,
    #[arg(long)]
    pub qbig: Option<f64>,
    /// Largest shadow ratio scanned by the inductive bounds.
    #[arg(long, default_value_t = 100)]
    pub k_max: u64,
}

fn need<T: Copy>(v: Option<T>, name: &str, method: Method) -> CliResult<T> {
    v.map_or_else(|| usage(format!("--{name} is required for method {method:?}")), Ok)
}

impl BoundArgs {
    fn n(&self) -> CliResult<u64> {
        need(self.n, "n", self.method)
    }

    fn rate(&self) -> CliResult<Probability> {
        match (self.errors, self.r) {
            (Some(e), _) => Ok(Probability::from_counts(e, self.n()?)?),
            (None, Some(r)) => Ok(Probability::new(r)?),
            (None, None) => usage(format!("--errors or --r is required for method {:?}", self.method)),
        }
    }

    /// d when given, else the VC trace bound h(log(m/h)+1) at m points.
    fn trace(&self, m: u64) -> CliResult<f64> {
        match (self.d, self.h) {
            (Some(d), _) => Ok(d),
            (None, Some(h)) => Ok(vc_trace_log(h, m)?.value()),
            _ => usage(format!("--d or --h is required for method {:?}", self.method)),
        }
    }

    fn complexity(&self) -> CliResult<Box<dyn TraceComplexity>> {
        match (self.d, self.h) {
            (Some(d), _) => Ok(Box::new(FixedComplexity(d))),
            (None, Some(h)) => Ok(Box::new(VcDimension(h))),
            _ => usage(format!("--d or --h is required for method {:?}", self.method)),
        }
    }
}

pub fn run(a: &BoundArgs) -> CliResult<BoundReport> {
    let eps = Confidence::new(a.epsilon)?;
    let m = a.method;
    let scan = ShadowScan { k_max: a.k_max, etas: None };
    let rep = match m {
        Method::SingleRule => single_rule_bound(a.n()?, a.rate()?, eps)?,
        Method::Deviation => {
            deviation_bound(a.n()?, a.rate()?, Nats::new(need(a.kl, "kl", m)?)?, eps, need(a.lambda, "lambda", m)?)?
        }
        Method::DeviationGrid => deviation_bound_grid(
            a.n()?,
            a.rate()?,
            Nats::new(need(a.kl, "kl", m)?)?,
            eps,
            a.alpha.unwrap_or(1.1),
        )?,
        Method::MeanRiskOpt => mean_risk_bound_opt(a.n()?, a.rate()?, Nats::new(need(a.kl, "kl", m)?)?)?,
        Method::SqrtRisk => sqrt_risk_bound(a.n()?, a.rate()?, need(a.d, "d", m)?)?,
        Method::DimMargin => dim_margin_risk(a.n()?, a.rate()?, need(a.d, "d", m)?, a.eta)?,
        Method::Local => local_bound(
            a.n()?,
            need(a.alpha, "alpha", m)?,
            need(a.gamma, "gamma", m)?,
            eps,
            a.rate()?,
            need(a.d_e, "d-e", m)?,
            a.extra_kl,
        )?,
        Method::LocalBeta => {
            local_bound_beta(a.n()?, need(a.beta, "beta", m)?, eps, a.rate()?, need(a.d_e, "d-e", m)?, a.extra_kl)?
        }
        Method::QuadraticInversion => {
            let (qa, qb, qc) = (need(a.qa, "qa", m)?, need(a.qb, "qb", m)?, need(a.qbig, "qbig", m)?);
            BoundReport::new("quadratic_inversion", quadratic_inversion(qa, qb, qc)?)
                .input("a", qa)
                .input("b", qb)
                .input("B", qc)
        }
        Method::Trans => {
            let (n, k) = (a.n()?, need(a.k, "k", m)?);
            trans_bound(n, k, a.rate()?, a.trace((k + 1) * n)?, eps)?
        }
        Method::TransK1 => {
            let n = a.n()?;
            trans_bound_k1(n, a.rate()?, a.trace(2 * n)?, eps)?
        }
        Method::TransK1Exch => {
            let n = a.n()?;
            trans_bound_k1_exch(n, a.rate()?, a.trace(2 * n)?, eps)?
        }
        Method::EtaCorrection => {
            let n = a.n()?;
            BoundReport::new("eta_correction", eta_correction(n, eps, &default_etas(n))?.value())
                .input("n", n as f64)
                .input("epsilon", eps.value())
        }
        Method::InductiveMain => inductive_main_bound(a.n()?, a.rate()?, a.complexity()?.as_ref(), eps, &scan)?,
        Method::InductiveGrid => {
            inductive_grid_bound(a.n()?, a.rate()?, a.complexity()?.as_ref(), eps, a.alpha.unwrap_or(1.1), &scan)?
        }
        Method::InductiveGaussian => inductive_gaussian(a.n()?, a.rate()?, a.complexity()?.as_ref(), eps, &scan)?,
        Method::IidK1 => iid_k1_bound(a.n()?, a.rate()?, a.complexity()?.as_ref(), eps, None)?,
        Method::IidK1Gaussian => iid_k1_gaussian(a.n()?, a.rate()?, a.complexity()?.as_ref(), eps, None)?,
        Method::VapnikBaseline => vapnik_baseline(a.n()?, a.rate()?, a.complexity()?.as_ref(), eps)?,
        Method::SvmTrans => svm_transductive_bound(a.n()?, need(a.k, "k", m)?, a.rate()?, need(a.h, "h", m)?, eps)?,
    };
    Ok(rep)
}
