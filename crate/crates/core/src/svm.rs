//! Kernels, dual SVM solvers and margin-based bounds.
//!
//! The dual is solved by two-coordinate ascent on the maximal violating
//! pair, which keeps Σ αᵢyᵢ = 0 exactly. The hard-margin (canonical) problem
//! is reached by doubling the box parameter until no multiplier sits on it.

use std::f64::consts::{E, LN_2};
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bound_math::{log_binom_terms, log_sum_exp, Probability};
use crate::error::{domain, Error, Result};
use crate::report::{BoundReport, Confidence};
use crate::transductive::trans_bound;

/// Real-valued map g used by rank-one kernels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "snake_case")]
pub enum ScalarMap {
    Coordinate { index: usize },
    /// ⟨w, x⟩ + offset.
    Affine { weights: Vec<f64>, offset: f64 },
}

impl ScalarMap {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ScalarMap::Coordinate { index } => x.get(*index).copied().unwrap_or(0.0),
            ScalarMap::Affine { weights, offset } => {
                weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + offset
            }
        }
    }
}

/// Positive symmetric kernels closed under the usual combinators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kernel", rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    /// a K₁ + K₂ with a ≥ 0.
    ScaledSum { a: f64, k1: Box<Kernel>, k2: Box<Kernel> },
    Product { k1: Box<Kernel>, k2: Box<Kernel> },
    /// g(x) g(x′).
    RankOne { g: ScalarMap },
    /// Σ_p c_p K^p with c_p ≥ 0.
    Polynomial { coeffs: Vec<f64>, inner: Box<Kernel> },
    /// exp(K).
    Exponential { inner: Box<Kernel> },
    /// exp(−‖x − x′‖² / s²).
    Gaussian { scale: f64 },
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        match self {
            Kernel::Linear | Kernel::RankOne { .. } => Ok(()),
            Kernel::ScaledSum { a, k1, k2 } => {
                if !(*a >= 0.0 && a.is_finite()) {
                    return Err(Error::Validation("scaled-sum weight must be finite and non-negative".into()));
                }
                k1.validate()?;
                k2.validate()
            }
            Kernel::Product { k1, k2 } => {
                k1.validate()?;
                k2.validate()
            }
            Kernel::Polynomial { coeffs, inner } => {
                if coeffs.is_empty() || coeffs.iter().any(|c| !(*c >= 0.0 && c.is_finite())) {
                    return Err(Error::Validation("polynomial coefficients must be finite and non-negative".into()));
                }
                inner.validate()
            }
            Kernel::Exponential { inner } => inner.validate(),
            Kernel::Gaussian { scale } => {
                if *scale > 0.0 && scale.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Validation("gaussian scale must be positive".into()))
                }
            }
        }
    }

    pub fn eval(&self, x: &[f64], z: &[f64]) -> f64 {
        match self {
            Kernel::Linear => x.iter().zip(z).map(|(a, b)| a * b).sum(),
            Kernel::ScaledSum { a, k1, k2 } => a * k1.eval(x, z) + k2.eval(x, z),
            Kernel::Product { k1, k2 } => k1.eval(x, z) * k2.eval(x, z),
            Kernel::RankOne { g } => g.eval(x) * g.eval(z),
            Kernel::Polynomial { coeffs, inner } => {
                let k = inner.eval(x, z);
                coeffs.iter().rev().fold(0.0, |acc, c| acc * k + c)
            }
            Kernel::Exponential { inner } => inner.eval(x, z).exp(),
            Kernel::Gaussian { scale } => {
                let d: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d / (scale * scale)).exp()
            }
        }
    }
}

/// Parses `linear`, `gaussian[:s]`, `poly:c0,c1,...` (over the linear kernel)
/// and `exp[:s]` (exp(⟨x,x′⟩/s²)).
impl FromStr for Kernel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Validation(format!("unrecognized kernel '{s}'"));
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let scale = |a: Option<&str>| -> Result<f64> {
            a.map_or(Ok(1.0), |v| v.trim().parse::<f64>().map_err(|_| bad()))
        };
        let k = match name.trim() {
            "linear" if arg.is_none() => Kernel::Linear,
            "gaussian" => Kernel::Gaussian { scale: scale(arg)? },
            "poly" => {
                let coeffs = arg
                    .ok_or_else(bad)?
                    .split(',')
                    .map(|c| c.trim().parse::<f64>().map_err(|_| bad()))
                    .collect::<Result<Vec<_>>>()?;
                Kernel::Polynomial { coeffs, inner: Box::new(Kernel::Linear) }
            }
            "exp" => {
                let s = scale(arg)?;
                if !(s > 0.0) {
                    return Err(bad());
                }
                Kernel::Exponential {
                    inner: Box::new(Kernel::ScaledSum {
                        a: 1.0 / (s * s),
                        k1: Box::new(Kernel::Linear),
                        k2: Box::new(Kernel::Polynomial { coeffs: vec![0.0], inner: Box::new(Kernel::Linear) }),
                    }),
                }
            }
            _ => return Err(bad()),
        };
        k.validate()?;
        Ok(k)
    }
}

pub fn gram(kernel: &Kernel, points: &[Vec<f64>]) -> DMatrix<f64> {
    let n = points.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(&points[i], &points[j]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Dual solution α with bias b; decision x ↦ Σ αᵢyᵢK(xᵢ,x) − b.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub b: f64,
    /// Box parameter; `None` for the canonical (hard-margin) problem.
    pub c: Option<f64>,
    /// Σ αᵢ − ½ αᵀQα.
    pub objective: f64,
    pub kkt_residual: f64,
    /// Indices with αᵢ > 0.
    pub support: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 2_000_000 }
    }
}

fn check_problem(gram: &DMatrix<f64>, y: &[i8]) -> Result<()> {
    let n = y.len();
    if gram.nrows() != n || gram.ncols() != n {
        return Err(Error::Validation("Gram matrix and label vector sizes differ".into()));
    }
    if y.iter().any(|&v| v != 1 && v != -1) {
        return Err(Error::Validation("labels must be -1 or +1".into()));
    }
    if !(y.contains(&1) && y.contains(&-1)) {
        return Err(Error::Validation("both classes must be present".into()));
    }
    if gram.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("Gram matrix must be finite".into()));
    }
    Ok(())
}

struct Smo<'a> {
    k: &'a DMatrix<f64>,
    y: Vec<f64>,
    alpha: Vec<f64>,
    /// ∇ of ½αᵀQα − Σα.
    grad: Vec<f64>,
    c: f64,
}

impl<'a> Smo<'a> {
    fn new(k: &'a DMatrix<f64>, y: &[i8], alpha: Vec<f64>, c: f64) -> Self {
        let y: Vec<f64> = y.iter().map(|&v| v as f64).collect();
        let n = y.len();
        let grad = (0..n)
            .map(|i| (0..n).map(|j| y[i] * y[j] * k[(i, j)] * alpha[j]).sum::<f64>() - 1.0)
            .collect();
        Self { k, y, alpha, grad, c }
    }

    fn up(&self, i: usize) -> bool {
        if self.y[i] > 0.0 { self.alpha[i] < self.c } else { self.alpha[i] > 0.0 }
    }
    fn low(&self, i: usize) -> bool {
        if self.y[i] > 0.0 { self.alpha[i] > 0.0 } else { self.alpha[i] < self.c }
    }

    /// Maximal violating pair and its violation; lowest index on ties.
    fn select(&self) -> (Option<usize>, Option<usize>, f64) {
        let (mut i, mut j) = (None, None);
        let (mut big, mut small) = (f64::NEG_INFINITY, f64::INFINITY);
        for t in 0..self.y.len() {
            let v = -self.y[t] * self.grad[t];
            if self.up(t) && v > big {
                big = v;
                i = Some(t);
            }
            if self.low(t) && v < small {
                small = v;
                j = Some(t);
            }
        }
        (i, j, (big - small).max(0.0))
    }

    fn step(&mut self, i: usize, j: usize, viol: f64) {
        let k = self.k;
        let eta = (k[(i, i)] + k[(j, j)] - 2.0 * k[(i, j)]).max(1e-12);
        let cap_i = if self.y[i] > 0.0 { self.c - self.alpha[i] } else { self.alpha[i] };
        let cap_j = if self.y[j] > 0.0 { self.alpha[j] } else { self.c - self.alpha[j] };
        let t = (viol / eta).min(cap_i).min(cap_j);
        let (yi, yj) = (self.y[i], self.y[j]);
        self.alpha[i] += yi * t;
        self.alpha[j] -= yj * t;
        // snap to the box when the step is clipped or lands within rounding of it
        let delta = 1e-12 * self.c.max(1.0);
        for (q, hit_upper) in [(i, (t == cap_i) == (yi > 0.0)), (j, (t == cap_j) == (yj < 0.0))] {
            if (q == i && t == cap_i) || (q == j && t == cap_j) {
                self.alpha[q] = if hit_upper { self.c } else { 0.0 };
            } else if self.alpha[q] > self.c - delta {
                self.alpha[q] = self.c;
            } else if self.alpha[q] < delta {
                self.alpha[q] = 0.0;
            }
        }
        for q in 0..self.y.len() {
            self.grad[q] += self.y[q] * t * (k[(q, i)] - k[(q, j)]);
        }
    }

    fn objective(&self) -> f64 {
        // Σα − ½αᵀQα = −½ Σ αᵢ(∇ᵢ − 1)
        -0.5 * self.alpha.iter().zip(&self.grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>()
    }

    fn run(&mut self, opts: SolverOptions, mut trace: Option<&mut Vec<f64>>) -> (usize, f64, bool) {
        let mut it = 0;
        loop {
            let (i, j, viol) = self.select();
            let (i, j) = match (i, j) {
                (Some(i), Some(j)) if viol > opts.tol => (i, j),
                _ => return (it, viol, true),
            };
            if it >= opts.max_iter {
                return (it, viol, false);
            }
            self.step(i, j, viol);
            it += 1;
            if let Some(tr) = trace.as_deref_mut() {
                tr.push(self.objective());
            }
        }
    }

    fn bias(&self) -> f64 {
        let n = self.y.len();
        // ⟨w, xᵢ⟩ = yᵢ(∇ᵢ + 1)
        let wx = |i: usize| self.y[i] * (self.grad[i] + 1.0);
        let interior: Vec<usize> = (0..n).filter(|&i| self.alpha[i] > 0.0 && self.alpha[i] < self.c).collect();
        if !interior.is_empty() {
            return interior.iter().map(|&i| wx(i) - self.y[i]).sum::<f64>() / interior.len() as f64;
        }
        let sup = (0..n)
            .filter(|&i| self.alpha[i] > 0.0 && self.y[i] > 0.0)
            .map(|i| wx(i) - 1.0)
            .fold(f64::NEG_INFINITY, f64::max);
        if sup.is_finite() {
            return sup;
        }
        // midpoint of the feasible bias interval
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..n {
            let v = wx(i) - self.y[i];
            if self.up(i) == (self.y[i] > 0.0) {
                hi = hi.min(v);
            } else {
                lo = lo.max(v);
            }
        }
        if lo.is_finite() && hi.is_finite() { 0.5 * (lo + hi) } else if lo.is_finite() { lo } else { hi }
    }

    fn solution(&self, iterations: usize, viol: f64, converged: bool, c: Option<f64>) -> DualSolution {
        DualSolution {
            alpha: self.alpha.clone(),
            b: self.bias(),
            c,
            objective: self.objective(),
            kkt_residual: viol,
            support: (0..self.y.len()).filter(|&i| self.alpha[i] > 0.0).collect(),
            iterations,
            converged,
        }
    }
}

/// Maximizes Σα − ½αᵀQα over 0 ≤ α ≤ C, Σαy = 0.
pub fn solve_box(gram: &DMatrix<f64>, y: &[i8], c: f64, opts: SolverOptions) -> Result<DualSolution> {
    check_problem(gram, y)?;
    if !(c > 0.0 && c.is_finite()) {
        return domain("box parameter C must be positive and finite");
    }
    solve_box_from(gram, y, c, vec![0.0; y.len()], opts, None)
}

fn solve_box_from(
    gram: &DMatrix<f64>,
    y: &[i8],
    c: f64,
    alpha: Vec<f64>,
    opts: SolverOptions,
    trace: Option<&mut Vec<f64>>,
) -> Result<DualSolution> {
    let mut smo = Smo::new(gram, y, alpha, c);
    let (it, viol, ok) = smo.run(opts, trace);
    let sol = smo.solution(it, viol, ok, Some(c));
    if ok {
        Ok(sol)
    } else {
        Err(Error::IterationLimit { iterations: it, violation: viol, solution: Box::new(sol) })
    }
}

/// Margin summary of a canonical solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    /// 1/‖w‖.
    pub margin: f64,
    pub norm_sq: f64,
    pub h_margin: u64,
    pub radius_sq: f64,
}

pub const C_CAP: f64 = 1e8;

/// Hard-margin solution by box escalation C = 1, 2, 4, … up to 10⁸, with
/// the canonical bias ½[max_{y=−1}⟨w,x⟩ + min_{y=+1}⟨w,x⟩].
pub fn solve_canonical(gram: &DMatrix<f64>, y: &[i8], opts: SolverOptions) -> Result<(DualSolution, MarginReport)> {
    check_problem(gram, y)?;
    let n = y.len();
    let mut c = 1.0;
    let mut alpha = vec![0.0; n];
    loop {
        let sol = solve_box_from(gram, y, c, alpha, opts, None)?;
        let at_bound = sol.alpha.iter().any(|&a| a >= c * (1.0 - 1e-12));
        if !at_bound {
            let wx = |i: usize| (0..n).map(|j| sol.alpha[j] * y[j] as f64 * gram[(i, j)]).sum::<f64>();
            let mut max_neg = f64::NEG_INFINITY;
            let mut min_pos = f64::INFINITY;
            for i in 0..n {
                let v = wx(i);
                if y[i] > 0 {
                    min_pos = min_pos.min(v);
                } else {
                    max_neg = max_neg.max(v);
                }
            }
            let norm_sq = (0..n).map(|i| sol.alpha[i] * y[i] as f64 * wx(i)).sum::<f64>();
            if !(norm_sq > 0.0) {
                return Err(Error::NonSeparable(c));
            }
            let margin = norm_sq.sqrt().recip();
            let radius_sq = radius_sq_gram(gram);
            let h_margin = if radius_sq > 0.0 { margin_to_h(margin, radius_sq.sqrt(), n as u64)? } else { 1 };
            let sol = DualSolution { b: 0.5 * (max_neg + min_pos), c: None, ..sol };
            return Ok((sol, MarginReport { margin, norm_sq, h_margin, radius_sq }));
        }
        if c >= C_CAP {
            return Err(Error::NonSeparable(c));
        }
        // Multipliers on the box tend to scale with C; starting from 2α keeps
        // the equality constraint and makes escalation geometric.
        let next = (2.0 * c).min(C_CAP);
        alpha = sol.alpha.iter().map(|a| a * next / c).collect();
        c = next;
    }
}

/// Trained classifier restricted to its support vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub support_points: Vec<Vec<f64>>,
    /// αᵢyᵢ for each support point.
    pub coef: Vec<f64>,
    pub b: f64,
    pub c: Option<f64>,
}

impl SvmModel {
    pub fn from_solution(kernel: Kernel, points: &[Vec<f64>], y: &[i8], sol: &DualSolution) -> Self {
        Self {
            kernel,
            support_points: sol.support.iter().map(|&i| points[i].clone()).collect(),
            coef: sol.support.iter().map(|&i| sol.alpha[i] * y[i] as f64).collect(),
            b: sol.b,
            c: sol.c,
        }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_points.iter().zip(&self.coef).map(|(s, c)| c * self.kernel.eval(s, x)).sum::<f64>() - self.b
    }

    /// sign of the decision, with sign(0) = +1.
    pub fn classify(&self, x: &[f64]) -> i8 {
        if self.decision(x) >= 0.0 { 1 } else { -1 }
    }

    /// ‖w‖².
    pub fn norm_sq(&self) -> f64 {
        let g = gram(&self.kernel, &self.support_points);
        let c = nalgebra::DVector::from_column_slice(&self.coef);
        (c.transpose() * &g * &c)[(0, 0)]
    }
}

/// max_i [K(xᵢ,xᵢ) − (2/m)Σⱼ K(xᵢ,xⱼ)] + (1/m²)ΣΣK, floored at 0.
pub fn radius_sq_gram(g: &DMatrix<f64>) -> f64 {
    let m = g.nrows();
    if m == 0 {
        return 0.0;
    }
    let mf = m as f64;
    let total = g.sum() / (mf * mf);
    (0..m)
        .map(|i| g[(i, i)] - 2.0 / mf * g.row(i).sum())
        .fold(f64::NEG_INFINITY, f64::max)
        .max(-total)
        + total
}

pub fn radius_sq(points: &[Vec<f64>], kernel: &Kernel) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Validation("radius of an empty point set".into()));
    }
    Ok(radius_sq_gram(&gram(kernel, points)))
}

/// γ_{2m} = (2m−1)^{−1/2}, γ_{2m+1} = [2m(1 − (2m+1)^{−2})]^{−1/2}; γ₁ = +∞.
pub fn margin_gamma(h: u64) -> Result<f64> {
    if h == 0 {
        return domain("margin_gamma: h must be at least 1");
    }
    let hf = h as f64;
    Ok(if h % 2 == 0 {
        (hf - 1.0).powf(-0.5)
    } else if h == 1 {
        f64::INFINITY
    } else {
        ((hf - 1.0) * (1.0 - 1.0 / (hf * hf))).powf(-0.5)
    })
}

/// min{h ≥ 1 : radius·γ_h ≤ margin}, capped at `cap`.
pub fn margin_to_h(margin: f64, radius: f64, cap: u64) -> Result<u64> {
    if !(margin > 0.0 && radius > 0.0) {
        return domain("margin_to_h: margin and radius must be positive");
    }
    if cap == 0 {
        return domain("margin_to_h: cap must be at least 1");
    }
    for h in 1..=cap {
        if radius * margin_gamma(h)? <= margin {
            return Ok(h);
        }
    }
    Ok(cap)
}

/// Var(x₁..xₙ) against the supplied shattering margin γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub variance: f64,
    pub gamma: f64,
    /// Var/γ².
    pub ratio: f64,
    /// n−1 (n even) or (n−1)(n²−1)/n² (n odd).
    pub lower: f64,
    /// ratio / lower; at least 1 for a genuine shattering margin.
    pub slack: f64,
    pub holds: bool,
}

pub fn variance_margin_check(points: &[Vec<f64>], gamma: f64) -> Result<VarianceReport> {
    let n = points.len();
    if n < 2 {
        return Err(Error::Validation("variance check needs at least two points".into()));
    }
    if !(gamma > 0.0) {
        return domain("variance check: gamma must be positive");
    }
    let d = points[0].len();
    let nf = n as f64;
    let mean: Vec<f64> = (0..d).map(|j| points.iter().map(|p| p[j]).sum::<f64>() / nf).collect();
    let variance = points
        .iter()
        .map(|p| p.iter().zip(&mean).map(|(a, m)| (a - m) * (a - m)).sum::<f64>())
        .sum::<f64>()
        / nf;
    let lower = if n % 2 == 0 { nf - 1.0 } else { (nf - 1.0) * (nf * nf - 1.0) / (nf * nf) };
    let ratio = variance / (gamma * gamma);
    Ok(VarianceReport { variance, gamma, ratio, lower, slack: ratio / lower, holds: ratio >= lower * (1.0 - 1e-12) })
}

/// Both forms of the separated-set size bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FatShatteringBound {
    /// log[(b−1)(b−2)n]{log[Σ_{i=1}^h C(n,i)(b−2)^i]/log 2 + 1} + log 2.
    pub sum_form: f64,
    /// log[(b−1)(b−2)n]{h[log((b−2)n/h) + 1]/log 2 + 1} + log 2.
    pub closed_form: f64,
}

pub fn fat_shattering_log_m(n: u64, b: u64, h: u64) -> Result<FatShatteringBound> {
    if b < 3 {
        return domain("fat shattering bound requires b >= 3");
    }
    if h == 0 || h > n {
        return domain("fat shattering bound requires 1 <= h <= n");
    }
    let (nf, bf, hf) = (n as f64, b as f64, h as f64);
    let lead = ((bf - 1.0) * (bf - 2.0) * nf).ln();
    let terms = log_binom_terms(n, h, bf - 2.0);
    let sum = log_sum_exp(&terms[1..]);
    Ok(FatShatteringBound {
        sum_form: lead * (sum / LN_2 + 1.0) + LN_2,
        closed_form: lead * (hf * (((bf - 2.0) * nf / hf).ln() + 1.0) / LN_2 + 1.0) + LN_2,
    })
}

/// Complexity h log(e(k+1)N/h) + log[h(h+1)] of the margin model of index h.
pub fn svm_complexity(n: u64, k: u64, h: u64) -> f64 {
    let hf = h as f64;
    hf * (E * ((k + 1) * n) as f64 / hf).ln() + (hf * (hf + 1.0)).ln()
}

/// Transductive bound for an SVM of the margin model ℛ_h.
pub fn svm_transductive_bound(n: u64, k: u64, r1: Probability, h: u64, eps: Confidence) -> Result<BoundReport> {
    if h == 0 || h > n {
        return domain("svm bound requires 1 <= h <= N");
    }
    let mut rep = trans_bound(n, k, r1, svm_complexity(n, k, h), eps)?;
    rep.method = "svm_trans".into();
    Ok(rep.input("h", h as f64))
}

/// log[20(k+1)N]{h/log 2 · log(4e(k+1)N/h) + 1} + log[2h(h+1)].
pub fn margin_quantile_complexity(n: u64, k: u64, h: u64) -> f64 {
    let m = ((k + 1) * n) as f64;
    let hf = h as f64;
    (20.0 * m).ln() * (hf / LN_2 * (4.0 * E * m / hf).ln() + 1.0) + (2.0 * hf * (hf + 1.0)).ln()
}

/// Margin quantile bound: inf over h and λ, with `counts[h−1]` the number of
/// training points with g(X)Y ≤ 4Rγ_h. `nu_r` is the prior weight ν(R_max)
/// of the clipped-radius variant.
pub fn inductive_margin_bound(
    n: u64,
    k: u64,
    counts: &[u64],
    eps: Confidence,
    nu_r: Option<f64>,
) -> Result<BoundReport> {
    if counts.is_empty() {
        return Err(Error::Validation("margin counts must cover at least h = 1".into()));
    }
    if counts.iter().any(|&c| c > n) {
        return Err(Error::Validation("margin counts cannot exceed N".into()));
    }
    let penalty = match nu_r {
        None => 0.0,
        Some(v) if v > 0.0 && v <= 1.0 => -v.ln(),
        Some(_) => return domain("nu(R_max) must lie in (0, 1]"),
    };
    let mut best: Option<(BoundReport, u64)> = None;
    for (idx, &c) in counts.iter().enumerate() {
        let h = idx as u64 + 1;
        let d = margin_quantile_complexity(n, k, h) + penalty;
        let rep = trans_bound(n, k, Probability::from_counts(c, n)?, d, eps)?;
        if best.as_ref().map_or(true, |(b, _)| rep.bound < b.bound) {
            best = Some((rep, h));
        }
    }
    let (rep, h) = best.unwrap();
    let mut out = BoundReport::new("svm_margin", rep.bound)
        .input("n", n as f64)
        .input("k", k as f64)
        .input("epsilon", eps.value())
        .extra("h", h as f64)
        .extra("count", counts[h as usize - 1] as f64);
    if let Some(l) = rep.lambda_opt {
        out = out.lambda(l);
    }
    if penalty > 0.0 {
        out = out.extra("radius_penalty", penalty);
    }
    Ok(out)
}

/// counts[h−1] = #{i : g(xᵢ)yᵢ ≤ 4Rγ_h} with g = decision/‖w‖, for h = 1..=h_max.
pub fn margin_counts(model: &SvmModel, points: &[Vec<f64>], y: &[i8], radius: f64, h_max: u64) -> Result<Vec<u64>> {
    if points.len() != y.len() {
        return Err(Error::Validation("points and labels differ in length".into()));
    }
    let norm = model.norm_sq().sqrt();
    if !(norm > 0.0) {
        return domain("margin counts need a nonzero weight vector");
    }
    let scores: Vec<f64> = points.iter().zip(y).map(|(x, &l)| model.decision(x) / norm * l as f64).collect();
    (1..=h_max)
        .map(|h| {
            let t = 4.0 * radius * margin_gamma(h)?;
            Ok(scores.iter().filter(|&&s| s <= t).count() as u64)
        })
        .collect()
}
