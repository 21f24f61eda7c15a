//! Scalar building blocks shared by every bound: the Φ/Ψ/Ξ transforms,
//! Bernoulli information quantities, combinatorial counts and the quadratic
//! inversion used by local bounds.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Below this magnitude of the scale parameter, series expansions replace the
/// closed forms.
const SERIES_CUTOFF: f64 = 1e-6;

/// A rate in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::Validation(format!("probability {value} outside [0, 1]")))
        }
    }

    /// Error rate `errors / n`.
    pub fn from_counts(errors: u64, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Validation("sample size must be positive".into()));
        }
        if errors > n {
            return Err(Error::Validation(format!("{errors} errors out of {n} points")));
        }
        Ok(Self(errors as f64 / n as f64))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// A non-negative quantity in natural-log units.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Nats(f64);

impl Nats {
    pub fn new(value: f64) -> Result<Self> {
        if value >= 0.0 {
            Ok(Self(value))
        } else {
            Err(Error::Validation(format!("nats value {value} is negative or NaN")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Nats {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Nats> for f64 {
    fn from(n: Nats) -> f64 {
        n.0
    }
}

/// Φ_a(p) = −a⁻¹ log(1 − (1 − e^{−a}) p).
pub fn phi(a: f64, p: f64) -> f64 {
    if a.abs() < SERIES_CUTOFF {
        let p2 = p * p;
        return p + a * (p2 - p) / 2.0 + a * a * (p / 6.0 - p2 / 2.0 + p2 * p / 3.0);
    }
    let u = -(-a).exp_m1();
    -(-u * p).ln_1p() / a
}

/// Φ_a⁻¹(q) = (1 − e^{−aq}) / (1 − e^{−a}), extended to every real q.
pub fn phi_inv(a: f64, q: f64) -> f64 {
    if a.abs() < SERIES_CUTOFF {
        return q + a * q * (1.0 - q) / 2.0 + a * a * q * (1.0 / 12.0 - q / 4.0 + q * q / 6.0);
    }
    (-a * q).exp_m1() / (-a).exp_m1()
}

/// Ψ_a(p, m) = −a⁻¹ log(1 − sinh(a)(p − m tanh(a/2))).
pub fn psi(a: f64, p: f64, m: f64) -> Result<f64> {
    if a == 0.0 {
        return Ok(p);
    }
    let x = a.sinh() * (p - m * (a / 2.0).tanh());
    if x >= 1.0 {
        return domain(format!("psi: log argument {} is not positive", 1.0 - x));
    }
    Ok(-(-x).ln_1p() / a)
}

/// Ξ_a(q) = (1 − e^{−aq}) / tanh(a).
pub fn xi(a: f64, q: f64) -> Result<f64> {
    if a == 0.0 {
        return domain("xi: scale parameter must be nonzero");
    }
    if a.abs() < SERIES_CUTOFF {
        return Ok(q - a * q * q / 2.0 + a * a * (q * q * q / 6.0 + q / 3.0));
    }
    Ok(-(-a * q).exp_m1() / a.tanh())
}

/// F_{γ,α}(x) = −N log(1 − tanh(γ/N) x) − α x.
pub fn big_f(n: u64, gamma: f64, alpha: f64, x: f64) -> Result<f64> {
    let nf = n as f64;
    let t = (gamma / nf).tanh();
    if t * x >= 1.0 {
        return domain("big_f: tanh(gamma/N) x must be below 1");
    }
    Ok(-nf * (-t * x).ln_1p() - alpha * x)
}

/// The unique x ≥ 0 with F_{γ,α}(x) = y, in the monotone regime α < N tanh(γ/N).
pub fn big_f_inv(n: u64, gamma: f64, alpha: f64, y: f64) -> Result<f64> {
    let nf = n as f64;
    let t = (gamma / nf).tanh();
    if !(gamma > 0.0) || alpha >= nf * t {
        return domain("big_f_inv: requires alpha < N tanh(gamma/N)");
    }
    if y < 0.0 {
        return domain("big_f_inv: target must be non-negative");
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let f = |x: f64| -nf * (-t * x).ln_1p() - alpha * x;
    let (mut lo, mut hi) = (0.0_f64, (1.0 - 1e-12) / t);
    if f(hi) < y {
        return domain("big_f_inv: target outside the image of F");
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-9 * hi {
            break;
        }
    }
    // Newton polish from the upper end: F is convex, so iterates stay in the bracket.
    let mut x = hi;
    for _ in 0..50 {
        let fx = f(x) - y;
        let df = nf * t / (1.0 - t * x) - alpha;
        let step = fx / df;
        let next = (x - step).clamp(lo, hi);
        if (next - x).abs() <= 1e-15 * x.max(1e-300) {
            x = next;
            break;
        }
        x = next;
    }
    Ok(x)
}

/// Numerically stable log cosh.
pub fn log_cosh(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 1e-4 {
        let x2 = ax * ax;
        return x2 / 2.0 - x2 * x2 / 12.0 + x2 * x2 * x2 / 45.0;
    }
    if ax < 20.0 {
        // cosh x − 1 = 2 sinh²(x/2)
        let s = (ax / 2.0).sinh();
        return (2.0 * s * s).ln_1p();
    }
    ax + (-2.0 * ax).exp().ln_1p() - std::f64::consts::LN_2
}

/// A(λ) = (2N/λ) log cosh(λ/2N).
pub fn a_of_lambda(n: u64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return domain("a_of_lambda: lambda must be positive");
    }
    let x = lambda / (2.0 * n as f64);
    if x < 1e-4 {
        let x2 = x * x;
        return Ok(x / 2.0 - x * x2 / 12.0 + x * x2 * x2 / 45.0);
    }
    Ok(log_cosh(x) / x)
}

/// (a−b)/(2ab) (√(1 + 4ab/(a−b)² (1 − e^{−(a−b)B})) − 1).
pub fn quadratic_inversion(a: f64, b: f64, big_b: f64) -> Result<f64> {
    if !(b > 0.0) || b >= a {
        return domain("quadratic_inversion: requires 0 < b < a");
    }
    let d = a - b;
    let u = -(-d * big_b).exp_m1();
    let s = 4.0 * a * b / (d * d) * u;
    if s < -1.0 {
        return domain("quadratic_inversion: negative discriminant");
    }
    // √(1+s) − 1 written without cancellation.
    Ok(d / (2.0 * a * b) * s / ((1.0 + s).sqrt() + 1.0))
}

/// Σ_{k=0}^{h} C(n, k), i.e. 2^n when n ≤ h. `None` on u128 overflow.
pub fn binom_tail_phi(n: u64, h: u64) -> Option<u128> {
    if n <= h {
        return 1u128.checked_shl(n as u32).filter(|_| n < 128);
    }
    let mut term: u128 = 1;
    let mut sum: u128 = 1;
    for k in 1..=h {
        term = term.checked_mul((n - k + 1) as u128)? / k as u128;
        sum = sum.checked_add(term)?;
    }
    Some(sum)
}

/// log Σ_{k=0}^{h} C(n, k), computed in log domain.
pub fn log_binom_tail_phi(n: u64, h: u64) -> f64 {
    if n <= h {
        return n as f64 * std::f64::consts::LN_2;
    }
    let terms = log_binom_terms(n, h, 1.0);
    log_sum_exp(&terms)
}

/// log C(n, k) + k log w for k = 0..=h.
pub(crate) fn log_binom_terms(n: u64, h: u64, w: f64) -> Vec<f64> {
    let lw = w.ln();
    let mut out = Vec::with_capacity(h as usize + 1);
    let mut lc = 0.0;
    out.push(0.0);
    for k in 1..=h.min(n) {
        lc += ((n - k + 1) as f64).ln() - (k as f64).ln();
        out.push(lc + k as f64 * lw);
    }
    out
}

/// n H(h/n), capped at n log 2 once h ≥ n/2 so that it bounds log Σ_{k≤h} C(n,k).
pub fn entropy_bound(n: u64, h: u64) -> Nats {
    let nf = n as f64;
    let p = (h as f64 / nf).min(0.5);
    let ent = if p <= 0.0 {
        0.0
    } else {
        -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
    };
    Nats(nf * ent)
}

/// Bernoulli Kullback-Leibler divergence K(p, q).
pub fn kl_bernoulli(p: Probability, q: Probability) -> Result<Nats> {
    let (p, q) = (p.value(), q.value());
    if p == q {
        return Ok(Nats(0.0));
    }
    if q <= 0.0 || q >= 1.0 {
        return domain("kl_bernoulli: q must lie in (0, 1)");
    }
    let xlog = |x: f64, y: f64| if x == 0.0 { 0.0 } else { x * (x / y).ln() };
    Ok(Nats((xlog(p, q) + xlog(1.0 - p, 1.0 - q)).max(0.0)))
}

/// Stable log Σ exp(x_i); −∞ for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn prob(x: f64) -> Probability {
        Probability::new(x).unwrap()
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi(0.0, 0.3), 0.3);
        assert_eq!(phi(2.0, 0.0), 0.0);
        assert_relative_eq!(phi(2.0, 1.0), 1.0, epsilon = 1e-15);
        let expected = (4.0f64 / 3.0).ln() / 2f64.ln();
        assert_relative_eq!(phi(2f64.ln(), 0.5), expected, max_relative = 1e-14);
        assert_relative_eq!(expected, 0.415037, epsilon = 1e-6);
    }

    #[test]
    fn phi_series_matches_closed_form_near_cutoff() {
        for &p in &[0.01, 0.3, 0.5, 0.9] {
            for &a in &[9.9e-7, -9.9e-7] {
                let u = -(-a as f64).exp_m1();
                let direct = -(-u * p).ln_1p() / a;
                assert_relative_eq!(phi(a, p), direct, max_relative = 1e-12);
                let direct_inv = (-a * p).exp_m1() / (-a as f64).exp_m1();
                assert_relative_eq!(phi_inv(a, p), direct_inv, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn phi_inv_examples_and_round_trip() {
        assert_eq!(phi_inv(0.7, 0.0), 0.0);
        assert_relative_eq!(phi_inv(1.0, 1.0), 1.0, epsilon = 1e-15);
        // (1 − e^{−aq})/(1 − e^{−a}) evaluated independently
        let a = 0.234;
        let q: f64 = 0.219680;
        let oracle = (1.0 - (-a * q).exp()) / (1.0 - (-a as f64).exp());
        assert_relative_eq!(phi_inv(a, q), oracle, max_relative = 1e-12);
        assert_relative_eq!(oracle, 0.240159, epsilon = 1e-6);
        for &a in &[-3.0, -0.1, 1e-8, 0.01, 1.0, 5.0] {
            for i in 1..100 {
                let q = i as f64 / 100.0;
                assert_relative_eq!(phi(a, phi_inv(a, q)), q, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn phi_monotone_and_ordered() {
        for &a in &[-2.0, 0.5, 3.0] {
            let mut prev = -1.0;
            for i in 0..=100 {
                let p = i as f64 / 100.0;
                let v = phi(a, p);
                assert!(v > prev);
                prev = v;
                if a > 0.0 {
                    assert!(v <= p + 1e-15);
                } else {
                    assert!(v >= p - 1e-15);
                }
            }
        }
    }

    #[test]
    fn phi_inv_nondecreasing_in_lambda() {
        let n = 1000.0;
        for &q in &[0.05, 0.3, 0.7] {
            let mut prev = 0.0;
            for i in 0..200 {
                let lambda = 0.01 * 1.1f64.powi(i);
                let v = phi_inv(lambda / n, q);
                assert!(v >= prev - 1e-15);
                prev = v;
            }
        }
    }

    #[test]
    fn gaussian_gap_lemma() {
        for i in 1..=40 {
            let a = i as f64 * 0.05;
            for j in 0..=100 {
                let p = j as f64 / 100.0;
                let gap = p - phi(a, p);
                let cap = if p <= 0.5 { a / 2.0 * p * (1.0 - p) } else { a / 8.0 };
                assert!(gap <= cap + 1e-14, "a={a} p={p}");
            }
        }
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi(0.5, 0.0, 0.0).unwrap(), 0.0);
        let m = 0.4;
        let p = m * 0.25f64.tanh();
        assert!(psi(0.5, p, m).unwrap().abs() < 1e-15);
        let oracle = -2.0 * (1.0 - 0.5f64.sinh() * (0.3 - 0.4 * 0.25f64.tanh())).ln();
        assert_relative_eq!(psi(0.5, 0.3, 0.4).unwrap(), oracle, max_relative = 1e-13);
        assert!((oracle - 0.2224).abs() < 1e-4);
        assert!(matches!(psi(5.0, 1.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn xi_examples() {
        assert_eq!(xi(0.5, 0.0).unwrap(), 0.0);
        let oracle = (1.0 - (-1f64).exp()) / 1f64.tanh();
        assert_relative_eq!(xi(1.0, 1.0).unwrap(), oracle, max_relative = 1e-14);
        assert!((oracle - 0.830).abs() < 1e-3);
        assert!(xi(0.0, 0.3).is_err());
        for &a in &[1e-7, 0.01, 0.3, 2.0] {
            for &q in &[-0.5, 0.0, 0.2, 0.9, 1.5] {
                assert!(xi(a, q).unwrap() <= a / a.tanh() * q + 1e-12);
            }
        }
    }

    #[test]
    fn big_f_examples_and_inverse() {
        assert_eq!(big_f(1000, 300.0, 100.0, 0.0).unwrap(), 0.0);
        assert_eq!(big_f_inv(1000, 300.0, 100.0, 0.0).unwrap(), 0.0);
        let oracle = -1000.0 * (1.0 - 0.3f64.tanh() * 0.1).ln() - 10.0;
        assert_relative_eq!(big_f(1000, 300.0, 100.0, 0.1).unwrap(), oracle, max_relative = 1e-13);
        assert!((oracle - 19.564).abs() < 1e-3);
        for &x in &[1e-6, 0.01, 0.5, 2.0, 3.2] {
            let y = big_f(1000, 300.0, 100.0, x).unwrap();
            let back = big_f_inv(1000, 300.0, 100.0, y).unwrap();
            assert_relative_eq!(back, x, max_relative = 1e-10);
            let slope = 1000.0 * 0.3f64.tanh() - 100.0;
            assert!(y >= slope * x - 1e-9);
        }
        assert!(big_f_inv(1000, 300.0, 1000.0, 1.0).is_err());
    }

    #[test]
    fn a_of_lambda_examples() {
        assert!(a_of_lambda(1000, 1e-9).unwrap() < 1e-12);
        assert_relative_eq!(
            a_of_lambda(1000, 2000.0).unwrap(),
            1f64.cosh().ln(),
            max_relative = 1e-14
        );
        assert!(a_of_lambda(10, 0.0).is_err());
        for i in 0..300 {
            let lambda = 1e-3 * 1.08f64.powi(i);
            let v = a_of_lambda(1000, lambda).unwrap();
            assert!(v <= lambda / 4000.0 * (1.0 + 1e-15), "lambda={lambda} A={v}");
        }
        // series and closed form agree across the switch
        let x: f64 = 0.99e-4;
        let closed = x.cosh().ln() / x;
        assert_relative_eq!(a_of_lambda(1, 2.0 * x).unwrap(), closed, max_relative = 1e-8);
    }

    #[test]
    fn quadratic_inversion_examples() {
        assert_eq!(quadratic_inversion(0.5, 0.2, 0.0).unwrap(), 0.0);
        let v = quadratic_inversion(0.5, 0.2, 0.1).unwrap();
        assert!((v - 0.096).abs() < 6e-4, "{v}");
        let (a, b, bb) = (0.5f64, 0.2f64, 0.1f64);
        let oracle = (a - b) / (2.0 * a * b)
            * ((1.0 + 4.0 * a * b / (a - b).powi(2) * (1.0 - (-(a - b) * bb).exp())).sqrt() - 1.0);
        assert_relative_eq!(v, oracle, max_relative = 1e-12);
        assert!(quadratic_inversion(0.2, 0.5, 0.1).is_err());
        assert!(quadratic_inversion(0.5, 0.0, 0.1).is_err());
    }

    #[test]
    fn binomial_counts() {
        assert_eq!(binom_tail_phi(3, 5), Some(8));
        assert_eq!(binom_tail_phi(4, 2), Some(11));
        assert!(entropy_bound(4, 2).value() >= 11f64.ln());
        assert_relative_eq!(entropy_bound(4, 2).value(), 4.0 * 2f64.ln(), max_relative = 1e-15);
        for n in 2..40u64 {
            for h in 0..n {
                let lhs = binom_tail_phi(n, h).unwrap();
                let rhs = binom_tail_phi(n - 1, h).unwrap()
                    + if h > 0 { binom_tail_phi(n - 1, h - 1).unwrap() } else { 0 };
                assert_eq!(lhs, rhs);
            }
            for h in 0..=n + 2 {
                let exact = binom_tail_phi(n, h).unwrap() as f64;
                assert!(exact.ln() <= entropy_bound(n, h).value() + 1e-12, "n={n} h={h}");
                assert_relative_eq!(log_binom_tail_phi(n, h), exact.ln(), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_bernoulli(prob(0.3), prob(0.3)).unwrap().value(), 0.0);
        let v = kl_bernoulli(prob(0.2), prob(0.5)).unwrap().value();
        let oracle = 0.2 * 0.4f64.ln() + 0.8 * 1.6f64.ln();
        assert_relative_eq!(v, oracle, max_relative = 1e-14);
        assert!((v - 0.19274).abs() < 1e-5);
        assert!(kl_bernoulli(prob(0.2), prob(0.0)).is_err());
        assert_eq!(kl_bernoulli(prob(0.0), prob(0.0)).unwrap().value(), 0.0);
    }

    #[test]
    fn newtypes_reject_bad_values() {
        assert!(Probability::new(1.1).is_err());
        assert!(Probability::new(f64::NAN).is_err());
        assert!(Nats::new(-1e-9).is_err());
        assert_eq!(Probability::from_counts(3, 10).unwrap().value(), 0.3);
        assert!(Probability::from_counts(11, 10).is_err());
    }
}
