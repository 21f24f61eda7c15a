//! Inductive deviation bounds: single-rule and posterior deviation bounds,
//! unbiased mean-risk bounds, dimension-based bounds and local bounds.

use serde::{Deserialize, Serialize};

use crate::bound_math::{phi_inv, quadratic_inversion, Nats, Probability};
use crate::error::{domain, Result};
use crate::optim::minimize_lambda;
use crate::report::{check_n, check_nonneg, BoundReport, Confidence};

/// inf over λ > 0 of Φ⁻¹_{λ/N}(r − log(ε)/λ).
pub fn single_rule_bound(n: u64, r: Probability, eps: Confidence) -> Result<BoundReport> {
    check_n(n)?;
    let nf = n as f64;
    let (r, c) = (r.value(), eps.neg_log());
    let report = if r == 0.0 {
        // λ-free numerator: the infimum is the λ → ∞ limit.
        BoundReport::new("single_rule", -(-c / nf).exp_m1())
    } else {
        let m = minimize_lambda(|l| phi_inv(l / nf, r + c / l), n);
        BoundReport::new("single_rule", m.value).lambda(m.x)
    };
    Ok(report.input("n", nf).input("r", r).input("epsilon", eps.value()))
}

/// Φ⁻¹_{λ/N}(r + (kl − log ε)/λ) at a fixed λ; the linear relaxation is
/// reported under `linear`.
pub fn deviation_bound(
    n: u64,
    r: Probability,
    kl: Nats,
    eps: Confidence,
    lambda: f64,
) -> Result<BoundReport> {
    check_n(n)?;
    if !(lambda > 0.0) {
        return domain("deviation_bound: lambda must be positive");
    }
    let nf = n as f64;
    let q = r.value() + (kl.value() + eps.neg_log()) / lambda;
    let linear = lambda / (nf * -(-lambda / nf).exp_m1()) * q;
    Ok(BoundReport::new("deviation", phi_inv(lambda / nf, q))
        .lambda(lambda)
        .input("n", nf)
        .input("r", r.value())
        .input("kl", kl.value())
        .input("epsilon", eps.value())
        .extra("linear", linear))
}

/// Union bound over the geometric grid λ = α^k, k ≥ 0, with penalty
/// log[(k+1)(k+2)]; the closed form 1 − exp(−(kl − log ε)/N) when r = 0.
pub fn deviation_bound_grid(
    n: u64,
    r: Probability,
    kl: Nats,
    eps: Confidence,
    alpha: f64,
) -> Result<BoundReport> {
    check_n(n)?;
    if !(alpha > 1.0) {
        return domain("deviation_bound_grid: alpha must exceed 1");
    }
    let nf = n as f64;
    let d = kl.value() + eps.neg_log();
    let tag = |b: BoundReport| {
        b.input("n", nf)
            .input("r", r.value())
            .input("kl", kl.value())
            .input("epsilon", eps.value())
            .input("alpha", alpha)
    };
    if r.value() == 0.0 {
        return Ok(tag(BoundReport::new("deviation_grid", -(-d / nf).exp_m1())));
    }
    let mut best = (f64::INFINITY, 0u64);
    let limit = 1e3 * nf;
    let mut k = 0u64;
    loop {
        let lambda = alpha.powi(k as i32);
        let pen = (((k + 1) * (k + 2)) as f64).ln();
        let v = phi_inv(lambda / nf, r.value() + (d + pen) / lambda);
        if v < best.0 {
            best = (v, k);
        }
        if lambda > limit || k >= 100_000 {
            break;
        }
        k += 1;
    }
    Ok(tag(BoundReport::new("deviation_grid", best.0)
        .lambda(alpha.powi(best.1 as i32))
        .k(best.1)))
}

/// (1 − exp(−(λq + kl)/N)) / (1 − exp(−λ/N)).
pub fn mean_risk_bound(n: u64, q: f64, kl: f64, lambda: f64) -> Result<f64> {
    check_n(n)?;
    if !(lambda > 0.0) {
        return domain("mean_risk_bound: lambda must be positive");
    }
    let nf = n as f64;
    Ok((-(lambda * q + kl) / nf).exp_m1() / (-lambda / nf).exp_m1())
}

/// Mean-risk bound at λ = √(2N kl / (q(1−q))).
pub fn mean_risk_bound_opt(n: u64, q: Probability, kl: Nats) -> Result<BoundReport> {
    check_n(n)?;
    let (qv, k) = (q.value(), kl.value());
    let tag = |b: BoundReport| b.input("n", n as f64).input("q", qv).input("kl", k);
    if k == 0.0 {
        return Ok(tag(BoundReport::new("mean_risk_opt", qv)));
    }
    if qv <= 0.0 || qv >= 1.0 {
        return domain("mean_risk_bound_opt: q must lie in (0, 1) when kl > 0");
    }
    let lambda = (2.0 * n as f64 * k / (qv * (1.0 - qv))).sqrt();
    let v = mean_risk_bound(n, qv, k, lambda)?;
    Ok(tag(BoundReport::new("mean_risk_opt", v).lambda(lambda)))
}

/// (1+2d/N)⁻¹ [q + d/N + √(2dq(1−q)/N + d²/N²)] when q + √(d/2N) ≤ 1/2,
/// otherwise q + √(d/2N).
pub fn sqrt_risk_bound(n: u64, q: Probability, d: f64) -> Result<BoundReport> {
    check_n(n)?;
    check_nonneg("d", d)?;
    let v = sqrt_risk_value(n as f64, q.value(), d);
    Ok(BoundReport::new("sqrt_risk", v).input("n", n as f64).input("q", q.value()).input("d", d))
}

pub(crate) fn sqrt_risk_value(nf: f64, q: f64, d: f64) -> f64 {
    let hoeffding = q + (d / (2.0 * nf)).sqrt();
    if hoeffding <= 0.5 {
        let dn = d / nf;
        (q + dn + (2.0 * dn * q * (1.0 - q) + dn * dn).sqrt()) / (1.0 + 2.0 * dn)
    } else {
        hoeffding
    }
}

/// r_min + η + 4d_η/N + 2√(2d_η(r_min+η)/N + 4d_η²/N²).
pub fn dim_margin_risk(n: u64, r_min: Probability, d_eta: f64, eta: f64) -> Result<BoundReport> {
    check_n(n)?;
    check_nonneg("d_eta", d_eta)?;
    check_nonneg("eta", eta)?;
    let nf = n as f64;
    let base = r_min.value() + eta;
    let dn = d_eta / nf;
    let v = base + 4.0 * dn + 2.0 * (2.0 * dn * base + 4.0 * dn * dn).sqrt();
    Ok(BoundReport::new("dim_margin", v)
        .input("n", nf)
        .input("r_min", r_min.value())
        .input("d_eta", d_eta)
        .input("eta", eta))
}

fn check_local_order(alpha: f64, gamma: f64) -> Result<()> {
    if !(0.0 <= gamma && gamma < alpha && alpha < 1.0) {
        return domain("local bound: requires 0 <= gamma < alpha < 1");
    }
    Ok(())
}

/// Nonlinear inversion with the γ → 0 limit (1 − e^{−αM})/α.
fn local_inversion(alpha: f64, gamma: f64, m: f64) -> Result<f64> {
    if !m.is_finite() {
        return Ok(m);
    }
    if gamma == 0.0 {
        return Ok(-(-alpha * m).exp_m1() / alpha);
    }
    quadratic_inversion(alpha, gamma, m)
}

/// Local bound: linear form M and its quadratic inversion (the reported bound).
pub fn local_bound(
    n: u64,
    alpha: f64,
    gamma: f64,
    eps: Confidence,
    r_min: Probability,
    d_e: f64,
    extra_kl: f64,
) -> Result<BoundReport> {
    check_n(n)?;
    check_local_order(alpha, gamma)?;
    check_nonneg("d_e", d_e)?;
    check_nonneg("extra_kl", extra_kl)?;
    let nf = n as f64;
    let gap = alpha - gamma;
    let slope = -((1.0 - alpha) * (1.0 + gamma)).ln() / gap;
    let dim_term = if d_e == 0.0 {
        0.0
    } else if gamma == 0.0 {
        f64::INFINITY
    } else {
        d_e * (-(-alpha).ln_1p() / gamma.ln_1p()).ln()
    };
    let m = slope * r_min.value() + (dim_term + extra_kl + 2.0 * eps.neg_log()) / (nf * gap);
    let nonlinear = local_inversion(alpha, gamma, m)?;
    Ok(BoundReport::new("local", nonlinear)
        .input("n", nf)
        .input("alpha", alpha)
        .input("gamma", gamma)
        .input("epsilon", eps.value())
        .input("r_min", r_min.value())
        .input("d_e", d_e)
        .input("extra_kl", extra_kl)
        .extra("linear", m))
}

/// Local bound parametrized by the inverse temperature β.
pub fn local_bound_beta(
    n: u64,
    beta: f64,
    eps: Confidence,
    r_min: Probability,
    d_e: f64,
    extra_kl: f64,
) -> Result<BoundReport> {
    check_n(n)?;
    check_nonneg("beta", beta)?;
    check_nonneg("d_e", d_e)?;
    check_nonneg("extra_kl", extra_kl)?;
    let nf = n as f64;
    let x = beta / nf;
    let denom = nf * (2.0 - x.exp() - (-2.0 * x).exp());
    let num = beta * r_min.value() + d_e * std::f64::consts::LN_2 + extra_kl + 2.0 * eps.neg_log();
    let v = if beta == 0.0 {
        f64::INFINITY
    } else if denom <= 0.0 {
        return domain("local_bound_beta: 2 - exp(beta/N) - exp(-2 beta/N) must be positive");
    } else {
        num / denom
    };
    Ok(BoundReport::new("local_beta", v)
        .input("n", nf)
        .input("beta", beta)
        .input("epsilon", eps.value())
        .input("r_min", r_min.value())
        .input("d_e", d_e)
        .input("extra_kl", extra_kl))
}

/// Statistics of a partially localized posterior: an index posterior ν over
/// models and conditional posteriors ρ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialLocalStats {
    /// ν ρ(r).
    pub mean_risk: f64,
    /// K(ν, μ).
    pub index_kl: f64,
    /// ν{K[ρ, π_{(1+γ)^{−Nr}}]}.
    pub local_kl: f64,
}

/// Partially local bound: B₂ (under `linear`) and its quadratic inversion.
pub fn partially_local_bound(
    n: u64,
    alpha: f64,
    gamma: f64,
    eps: Confidence,
    stats: &PartialLocalStats,
) -> Result<BoundReport> {
    check_n(n)?;
    check_local_order(alpha, gamma)?;
    check_nonneg("index_kl", stats.index_kl)?;
    check_nonneg("local_kl", stats.local_kl)?;
    Probability::new(stats.mean_risk)?;
    let nf = n as f64;
    let gap = alpha - gamma;
    let slope = -((1.0 - alpha) * (1.0 + gamma)).ln() / gap;
    let b2 = slope * stats.mean_risk
        + (2.0 * stats.index_kl + stats.local_kl + 2.0 * eps.neg_log()) / (nf * gap);
    let nonlinear = local_inversion(alpha, gamma, b2)?;
    Ok(BoundReport::new("partially_local", nonlinear)
        .input("n", nf)
        .input("alpha", alpha)
        .input("gamma", gamma)
        .input("epsilon", eps.value())
        .input("mean_risk", stats.mean_risk)
        .input("index_kl", stats.index_kl)
        .input("local_kl", stats.local_kl)
        .extra("linear", b2))
}
