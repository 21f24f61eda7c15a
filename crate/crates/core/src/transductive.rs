//! Vapnik-type bounds built on a shadow sample: transductive bounds on the
//! shadow error rate, and the inductive bounds obtained by integrating the
//! shadow sample out through a decreasing η-sequence.

use crate::bound_math::{a_of_lambda, phi_inv, Nats, Probability};
use crate::error::{domain, Error, Result};
use crate::inductive::sqrt_risk_value;
use crate::optim::{minimize_lambda, Minimum};
use crate::report::{check_n, check_nonneg, BoundReport, Confidence};

/// −log π[Δ] as a function of the extended sample size m = (k+1)N.
pub trait TraceComplexity {
    fn log_trace(&self, m: u64) -> f64;
}

/// VC upper bound h log(e m / h) on the log trace count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VcDimension(pub u64);

impl TraceComplexity for VcDimension {
    fn log_trace(&self, m: u64) -> f64 {
        if self.0 == 0 {
            return 0.0;
        }
        if self.0 >= m {
            return m as f64 * std::f64::consts::LN_2;
        }
        vc_log(self.0, m)
    }
}

/// A complexity that does not depend on the shadow sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedComplexity(pub f64);

impl TraceComplexity for FixedComplexity {
    fn log_trace(&self, _m: u64) -> f64 {
        self.0
    }
}

impl<F: Fn(u64) -> f64> TraceComplexity for F {
    fn log_trace(&self, m: u64) -> f64 {
        self(m)
    }
}

fn vc_log(h: u64, m: u64) -> f64 {
    let h = h as f64;
    h * ((m as f64 / h).ln() + 1.0)
}

/// h log(e m / h).
pub fn vc_trace_log(h: u64, m: u64) -> Result<Nats> {
    if h == 0 || h > m {
        return domain(format!("vc_trace_log: requires 1 <= h <= m (h={h}, m={m})"));
    }
    Nats::new(vc_log(h, m))
}

/// log(j(j+1)) + j log(e m / j).
pub fn compression_log(j: u64, m: u64) -> Result<Nats> {
    if j == 0 || j > m {
        return domain(format!("compression_log: requires 1 <= j <= m (j={j}, m={m})"));
    }
    let jf = j as f64;
    Nats::new((jf * (jf + 1.0)).ln() + vc_log(j, m))
}

/// Scan settings for the shadow-sample ratio k and the η-sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowScan {
    pub k_max: u64,
    /// Strictly decreasing sequence in (0, 1); `None` selects the default
    /// (1/log(10N), 1/(10N)).
    pub etas: Option<Vec<f64>>,
}

impl Default for ShadowScan {
    fn default() -> Self {
        Self { k_max: 100, etas: None }
    }
}

impl ShadowScan {
    fn etas_for(&self, n: u64) -> Vec<f64> {
        self.etas.clone().unwrap_or_else(|| default_etas(n))
    }
}

/// (1/log(10N), 1/(10N)).
pub fn default_etas(n: u64) -> Vec<f64> {
    let ten_n = 10.0 * n as f64;
    vec![1.0 / ten_n.ln(), 1.0 / ten_n]
}

/// log J − log η₁ + Σ η_j log(η_j/η_{j+1}) + η_J log(ε η_J / J).
pub fn eta_correction(n: u64, eps: Confidence, etas: &[f64]) -> Result<Nats> {
    check_n(n)?;
    if etas.is_empty() {
        return domain("eta_correction: empty eta sequence");
    }
    if etas[0] >= 1.0 || etas.iter().any(|&e| !(e > 0.0)) || etas.windows(2).any(|w| w[1] >= w[0]) {
        return domain("eta_correction: etas must be strictly decreasing in (0, 1)");
    }
    let j = etas.len() as f64;
    let last = etas[etas.len() - 1];
    let mut v = j.ln() - etas[0].ln();
    for w in etas.windows(2) {
        v += w[0] * (w[0] / w[1]).ln();
    }
    v += last * (eps.value() * last / j).ln();
    Nats::new(v.max(0.0))
}

fn check_k(k: u64) -> Result<()> {
    if k == 0 {
        Err(Error::Validation("shadow ratio k must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// (k+1)/k · inf_λ [1 − exp(−λ r₁/N − (d − log ε)/N)] / (1 − e^{−λ/N}) − r₁/k.
pub fn trans_bound(n: u64, k: u64, r1: Probability, d: f64, eps: Confidence) -> Result<BoundReport> {
    check_n(n)?;
    check_k(k)?;
    check_nonneg("d", d)?;
    let (nf, kf, r) = (n as f64, k as f64, r1.value());
    let c = d + eps.neg_log();
    let scale = (kf + 1.0) / kf;
    let tag = |b: BoundReport| {
        b.input("n", nf).input("k", kf).input("r1", r).input("d", d).input("epsilon", eps.value())
    };
    if r == 0.0 {
        return Ok(tag(BoundReport::new("trans", scale * -(-c / nf).exp_m1())));
    }
    let m = minimize_lambda(|l| (-(l * r + c) / nf).exp_m1() / (-l / nf).exp_m1(), n);
    Ok(tag(BoundReport::new("trans", scale * m.value - r / kf).lambda(m.x)))
}

fn feasible(method: &str, m: Minimum, finish: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
    let v = finish(m.value);
    if !v.is_finite() || v >= 1.0 {
        return Err(Error::Infeasible(format!(
            "{method}: no lambda gives a positive denominator and a bound below 1"
        )));
    }
    Ok((v, m.x))
}

/// 2 inf_λ [r₁ + (d − log ε)/λ] / (1 − A(λ)) − r₁ (equal training and shadow sizes).
pub fn trans_bound_k1(n: u64, r1: Probability, d: f64, eps: Confidence) -> Result<BoundReport> {
    check_n(n)?;
    check_nonneg("d", d)?;
    let r = r1.value();
    let c = d + eps.neg_log();
    let m = minimize_lambda(
        |l| {
            let den = 1.0 - a_of_lambda(n, l).unwrap_or(f64::NAN);
            if den > 0.0 {
                (r + c / l) / den
            } else {
                f64::INFINITY
            }
        },
        n,
    );
    let (v, l) = feasible("trans_k1", m, |x| 2.0 * x - r)?;
    Ok(BoundReport::new("trans_k1", v)
        .lambda(l)
        .input("n", n as f64)
        .input("r1", r)
        .input("d", d)
        .input("epsilon", eps.value()))
}

/// Exchangeable refinement:
/// inf_λ [r₁(1 + A) + 2(d − log ε)/λ] / [1 − A(1 − 2r₁)].
pub fn trans_bound_k1_exch(n: u64, r1: Probability, d: f64, eps: Confidence) -> Result<BoundReport> {
    check_n(n)?;
    check_nonneg("d", d)?;
    let r = r1.value();
    let c = d + eps.neg_log();
    let m = minimize_lambda(
        |l| {
            let a = a_of_lambda(n, l).unwrap_or(f64::NAN);
            let den = 1.0 - a * (1.0 - 2.0 * r);
            if den > 0.0 {
                (r * (1.0 + a) + 2.0 * c / l) / den
            } else {
                f64::INFINITY
            }
        },
        n,
    );
    let (v, l) = feasible("trans_k1_exch", m, |x| x)?;
    Ok(BoundReport::new("trans_k1_exch", v)
        .lambda(l)
        .input("n", n as f64)
        .input("r1", r)
        .input("d", d)
        .input("epsilon", eps.value()))
}

fn shadow_inputs(b: BoundReport, n: u64, r1: f64, eps: Confidence) -> BoundReport {
    b.input("n", n as f64).input("r1", r1).input("epsilon", eps.value())
}

/// Inductive bound from the η-sequence construction, optimized over k and λ.
pub fn inductive_main_bound(
    n: u64,
    r1: Probability,
    complexity: &dyn TraceComplexity,
    eps: Confidence,
    scan: &ShadowScan,
) -> Result<BoundReport> {
    check_n(n)?;
    let etas = scan.etas_for(n);
    let ec = eta_correction(n, eps, &etas)?.value();
    let eta_j = etas[etas.len() - 1];
    let (nf, r) = (n as f64, r1.value());
    let mut best: Option<(f64, u64, f64)> = None;
    for k in 1..=scan.k_max {
        let kf = k as f64;
        let d = complexity.log_trace((k + 1) * n) + eps.neg_log() + ec + (kf * (kf + 1.0)).ln();
        let base = r + eta_j * (1.0 - r);
        let m = minimize_lambda(|l| phi_inv(l / nf, base + d / l), n);
        let v = (kf + 1.0) / kf * m.value - r / kf;
        if best.map_or(true, |b| v < b.0) {
            best = Some((v, k, m.x));
        }
    }
    let (v, k, l) = best.ok_or_else(|| Error::Validation("k_max must be at least 1".into()))?;
    Ok(shadow_inputs(BoundReport::new("inductive_main", v).k(k).lambda(l), n, r, eps)
        .extra("eta_correction", ec))
}

/// Union bound over k and the geometric λ grid α^j, j ≥ 1.
pub fn inductive_grid_bound(
    n: u64,
    r1: Probability,
    complexity: &dyn TraceComplexity,
    eps: Confidence,
    alpha: f64,
    scan: &ShadowScan,
) -> Result<BoundReport> {
    check_n(n)?;
    if !(alpha > 1.0) {
        return domain("inductive_grid_bound: alpha must exceed 1");
    }
    let (nf, r) = (n as f64, r1.value());
    let limit = 1e3 * nf;
    let mut best: Option<(f64, u64, u64)> = None;
    for k in 1..=scan.k_max {
        let kf = k as f64;
        let dk = complexity.log_trace((k + 1) * n) + eps.neg_log();
        let mut j = 1u64;
        loop {
            let lambda = alpha.powi(j as i32);
            let jf = j as f64;
            let pen = (kf * (kf + 1.0) * jf * (jf + 1.0)).ln();
            let num = -(-(lambda * r) / nf - (dk + pen) / nf).exp_m1();
            let den = kf / (kf + 1.0) * -(-lambda / nf).exp_m1();
            let v = num / den - r / kf;
            if best.map_or(true, |b| v < b.0) {
                best = Some((v, k, j));
            }
            if lambda > limit || j >= 100_000 {
                break;
            }
            j += 1;
        }
    }
    let (v, k, j) = best.ok_or_else(|| Error::Validation("k_max must be at least 1".into()))?;
    Ok(shadow_inputs(
        BoundReport::new("inductive_grid", v).k(k).lambda(alpha.powi(j as i32)),
        n,
        r,
        eps,
    )
    .input("alpha", alpha))
}

/// Gaussian relaxation of the inductive bound, optimized over k.
pub fn inductive_gaussian(
    n: u64,
    r1: Probability,
    complexity: &dyn TraceComplexity,
    eps: Confidence,
    scan: &ShadowScan,
) -> Result<BoundReport> {
    check_n(n)?;
    let etas = scan.etas_for(n);
    let ec = eta_correction(n, eps, &etas)?.value();
    let eta_j = etas[etas.len() - 1];
    let (nf, r) = (n as f64, r1.value());
    let q = (r + eta_j).min(1.0);
    let mut best: Option<(f64, u64)> = None;
    for k in 1..=scan.k_max {
        let kf = k as f64;
        let d = complexity.log_trace((k + 1) * n) + eps.neg_log() + (kf * (kf + 1.0)).ln() + ec;
        let v = (kf + 1.0) / kf * sqrt_risk_value(nf, q, d) - r / kf;
        if best.map_or(true, |b| v < b.0) {
            best = Some((v, k));
        }
    }
    let (v, k) = best.ok_or_else(|| Error::Validation("k_max must be at least 1".into()))?;
    Ok(shadow_inputs(BoundReport::new("inductive_gaussian", v).k(k), n, r, eps).extra("eta_correction", ec))
}

fn d_one(n: u64, complexity: &dyn TraceComplexity, eps: Confidence, etas: &[f64]) -> Result<f64> {
    Ok(complexity.log_trace(2 * n) + eps.neg_log() + eta_correction(n, eps, etas)?.value())
}

/// inf_λ [(1 + A)r₁ + 2d″₁/λ + 2η_J(1−r₁)] / [1 − A(1 − 2r₁)].
pub fn iid_k1_bound(
    n: u64,
    r1: Probability,
    complexity: &dyn TraceComplexity,
    eps: Confidence,
    etas: Option<&[f64]>,
) -> Result<BoundReport> {
    check_n(n)?;
    let etas = etas.map(<[f64]>::to_vec).unwrap_or_else(|| default_etas(n));
    let d1 = d_one(n, complexity, eps, &etas)?;
    let eta_j = etas[etas.len() - 1];
    let r = r1.value();
    let m = minimize_lambda(
        |l| {
            let a = a_of_lambda(n, l).unwrap_or(f64::NAN);
            let den = 1.0 - a * (1.0 - 2.0 * r);
            if den > 0.0 {
                ((1.0 + a) * r + 2.0 * d1 / l + 2.0 * eta_j * (1.0 - r)) / den
            } else {
                f64::INFINITY
            }
        },
        n,
    );
    let (v, l) = feasible("iid_k1", m, |x| x)?;
    Ok(shadow_inputs(BoundReport::new("iid_k1", v).lambda(l), n, r, eps).extra("d1", d1))
}

/// Closed-form Gaussian relaxation of [`iid_k1_bound`].
pub fn iid_k1_gaussian(
    n: u64,
    r1: Probability,
    complexity: &dyn TraceComplexity,
    eps: Confidence,
    etas: Option<&[f64]>,
) -> Result<BoundReport> {
    check_n(n)?;
    let etas = etas.map(<[f64]>::to_vec).unwrap_or_else(|| default_etas(n));
    let d1 = d_one(n, complexity, eps, &etas)?;
    let eta_j = etas[etas.len() - 1];
    let (nf, r) = (n as f64, r1.value());
    let dn = d1 / nf;
    let s = 1.0 - 2.0 * r;
    let v = r + dn * s + 2.0 * eta_j + (4.0 * dn * (1.0 - r) * r + dn * dn * s * s + 4.0 * dn * s * eta_j).sqrt();
    Ok(shadow_inputs(BoundReport::new("iid_k1_gaussian", v), n, r, eps).extra("d1", d1))
}

/// r₁ + 2d_V/N + √(4 d_V r₁/N + 4 d_V²/N²) with d_V = log trace(2N) + log(4/ε).
pub fn vapnik_baseline(
    n: u64,
    r1: Probability,
    complexity: &dyn TraceComplexity,
    eps: Confidence,
) -> Result<BoundReport> {
    check_n(n)?;
    let nf = n as f64;
    let r = r1.value();
    let dv = complexity.log_trace(2 * n) + (4.0 / eps.value()).ln();
    let dn = dv / nf;
    let v = r + 2.0 * dn + (4.0 * dn * r + 4.0 * dn * dn).sqrt();
    Ok(shadow_inputs(BoundReport::new("vapnik", v), n, r, eps).extra("d_v", dv))
}
