//! Classification by thresholding: each of the h measurements is compared to a
//! threshold, and the resulting binary code selects a label. Thresholds range
//! over the intervals between consecutive sorted training values, so the
//! parameter space reduces to a finite grid of vertices, each with a labeling
//! of the 2^h cells. All Gibbs-posterior quantities are computed exactly by
//! enumerating the vertices and factorizing over cells.

use serde::{Deserialize, Serialize};

use crate::bound_math::log_sum_exp;
use crate::error::{Error, Result};

/// Default cap on |T|·2^h·|Y|.
pub const DEFAULT_CAP: f64 = 1e8;

/// Patterns in [0,1]^h with labels on the first `n_train` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    patterns: Vec<Vec<f64>>,
    labels: Vec<usize>,
    shadow_labels: Option<Vec<usize>>,
    n_train: usize,
    dim: usize,
    label_count: usize,
}

fn check_patterns(patterns: &[Vec<f64>], dim: usize) -> Result<()> {
    for (i, p) in patterns.iter().enumerate() {
        if p.len() != dim {
            return Err(Error::Validation(format!("row {i} has {} coordinates, expected {dim}", p.len())));
        }
        if let Some(v) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Validation(format!("row {i}: coordinate {v} outside [0, 1]")));
        }
    }
    Ok(())
}

fn check_labels(labels: &[usize], label_count: usize) -> Result<()> {
    if let Some(y) = labels.iter().find(|&&y| y >= label_count) {
        return Err(Error::Validation(format!("label {y} outside 0..{label_count}")));
    }
    Ok(())
}

impl LabeledDataset {
    pub fn new(patterns: Vec<Vec<f64>>, labels: Vec<usize>, label_count: usize) -> Result<Self> {
        if patterns.is_empty() {
            return Err(Error::Validation("dataset has no training rows".into()));
        }
        if patterns.len() != labels.len() {
            return Err(Error::Validation("pattern and label counts differ".into()));
        }
        if label_count == 0 {
            return Err(Error::Validation("label_count must be positive".into()));
        }
        let dim = patterns[0].len();
        if dim == 0 {
            return Err(Error::Validation("patterns must have at least one coordinate".into()));
        }
        check_patterns(&patterns, dim)?;
        check_labels(&labels, label_count)?;
        let n_train = patterns.len();
        Ok(Self { patterns, labels, shadow_labels: None, n_train, dim, label_count })
    }

    /// Appends shadow rows. Their labels, if any, are never used by bounds.
    pub fn with_shadow(mut self, patterns: Vec<Vec<f64>>, labels: Option<Vec<usize>>) -> Result<Self> {
        check_patterns(&patterns, self.dim)?;
        if let Some(l) = &labels {
            if l.len() != patterns.len() {
                return Err(Error::Validation("shadow pattern and label counts differ".into()));
            }
            check_labels(l, self.label_count)?;
        }
        self.patterns.truncate(self.n_train);
        self.patterns.extend(patterns);
        self.shadow_labels = labels;
        Ok(self)
    }

    pub fn n_train(&self) -> usize {
        self.n_train
    }
    pub fn n_shadow(&self) -> usize {
        self.patterns.len() - self.n_train
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn label_count(&self) -> usize {
        self.label_count
    }
    pub fn patterns(&self) -> &[Vec<f64>] {
        &self.patterns
    }
    pub fn train_patterns(&self) -> &[Vec<f64>] {
        &self.patterns[..self.n_train]
    }
    pub fn shadow_patterns(&self) -> &[Vec<f64>] {
        &self.patterns[self.n_train..]
    }
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
    pub fn shadow_labels(&self) -> Option<&[usize]> {
        self.shadow_labels.as_deref()
    }

    /// Restriction to a subset of the coordinates.
    pub fn select_features(&self, features: &[usize]) -> Result<Self> {
        if features.is_empty() || features.iter().any(|&f| f >= self.dim) {
            return Err(Error::Validation(format!("feature subset {features:?} invalid for h={}", self.dim)));
        }
        let patterns = self.patterns.iter().map(|p| features.iter().map(|&f| p[f]).collect()).collect();
        Ok(Self { patterns, dim: features.len(), ..self.clone() })
    }
}

/// Threshold intervals of one coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    /// Interval lower ends.
    pub lo: Vec<f64>,
    /// Interval upper ends.
    pub hi: Vec<f64>,
    /// A training point whose boundary rank is ≥ `cut[k]` answers 1 on interval k.
    cut: Vec<usize>,
}

impl Axis {
    fn build(values: &mut Vec<f64>) -> (Self, Vec<f64>) {
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        let (mut lo, mut hi, mut cut) = (Vec::new(), Vec::new(), Vec::new());
        for k in 0..=values.len() {
            let a = if k == 0 { 0.0 } else { values[k - 1] };
            let b = if k == values.len() { 1.0 } else { values[k] };
            if b > a {
                lo.push(a);
                hi.push(b);
                cut.push(k);
            }
        }
        (Self { lo, hi, cut }, values.clone())
    }

    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }

    pub fn midpoint(&self, k: usize) -> f64 {
        0.5 * (self.lo[k] + self.hi[k])
    }

    /// Fraction of interval k whose thresholds t satisfy x ≥ t.
    fn upper_fraction(&self, k: usize, x: f64) -> f64 {
        ((x - self.lo[k]) / (self.hi[k] - self.lo[k])).clamp(0.0, 1.0)
    }
}

/// A concrete parameter: a grid vertex and one label per cell code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub vertex: usize,
    pub labels: Vec<usize>,
}

/// Per-cell label counts of a reference parameter's disagreement, used for m′.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    /// Same layout as the grid's label counts.
    counts: Vec<u32>,
    /// Training error count of the reference.
    errors: usize,
}

impl Reference {
    pub fn error_rate(&self, n: usize) -> f64 {
        self.errors as f64 / n as f64
    }
}

/// Exact Gibbs summary at one (λ, ξ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tilt {
    pub log_z: f64,
    pub mean_r: f64,
    pub mean_m: f64,
}

/// Cell decomposition of the threshold model with per-vertex label counters.
#[derive(Debug, Clone)]
pub struct CellGrid {
    axes: Vec<Axis>,
    dim: usize,
    label_count: usize,
    n_train: usize,
    transductive: bool,
    n_vertices: usize,
    log_weights: Vec<f64>,
    /// Boundary rank of each training point on each axis (row-major n × h).
    ranks: Vec<usize>,
    train_labels: Vec<usize>,
    offsets: Vec<usize>,
    codes: Vec<u32>,
    counts: Vec<u32>,
}

/// Options for [`CellGrid::build`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    pub transductive: bool,
    pub cap: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self { transductive: false, cap: DEFAULT_CAP }
    }
}

impl CellGrid {
    pub fn build(data: &LabeledDataset, opts: GridOptions) -> Result<Self> {
        let h = data.dim();
        if h > 30 {
            return Err(Error::Capacity { cost: 2f64.powi(h as i32), cap: opts.cap });
        }
        let source = if opts.transductive { data.patterns() } else { data.train_patterns() };
        let mut axes = Vec::with_capacity(h);
        let mut bounds = Vec::with_capacity(h);
        for j in 0..h {
            let mut vals: Vec<f64> = source.iter().map(|p| p[j]).collect();
            let (axis, b) = Axis::build(&mut vals);
            axes.push(axis);
            bounds.push(b);
        }
        let n_vertices_f: f64 = axes.iter().map(|a| a.len() as f64).product();
        let cost = n_vertices_f * 2f64.powi(h as i32) * data.label_count() as f64;
        if cost > opts.cap {
            return Err(Error::Capacity { cost, cap: opts.cap });
        }
        let n_vertices = n_vertices_f as usize;
        let n = data.n_train();
        let mut ranks = Vec::with_capacity(n * h);
        for p in data.train_patterns() {
            for j in 0..h {
                let r = bounds[j].binary_search_by(|v| v.partial_cmp(&p[j]).unwrap()).unwrap();
                ranks.push(r);
            }
        }
        let mut grid = Self {
            axes,
            dim: h,
            label_count: data.label_count(),
            n_train: n,
            transductive: opts.transductive,
            n_vertices,
            log_weights: Vec::with_capacity(n_vertices),
            ranks,
            train_labels: data.labels().to_vec(),
            offsets: Vec::with_capacity(n_vertices + 1),
            codes: Vec::new(),
            counts: Vec::new(),
        };
        grid.fill_tables();
        Ok(grid)
    }

    fn fill_tables(&mut self) {
        let ny = self.label_count;
        let uniform = -(self.n_vertices as f64).ln();
        let mut digits = vec![0usize; self.dim];
        let mut point_codes = vec![0u32; self.n_train];
        let mut order: Vec<usize> = (0..self.n_train).collect();
        self.offsets.push(0);
        for _ in 0..self.n_vertices {
            let lw = if self.transductive {
                uniform
            } else {
                digits.iter().enumerate().map(|(j, &k)| (self.axes[j].hi[k] - self.axes[j].lo[k]).ln()).sum()
            };
            self.log_weights.push(lw);
            self.codes_at(&digits, &mut point_codes);
            order.sort_by_key(|&i| point_codes[i]);
            let mut prev: Option<u32> = None;
            for &i in &order {
                let c = point_codes[i];
                if prev != Some(c) {
                    self.codes.push(c);
                    self.counts.extend(std::iter::repeat(0).take(ny));
                    prev = Some(c);
                }
                let base = self.counts.len() - ny;
                self.counts[base + self.train_labels[i]] += 1;
            }
            self.offsets.push(self.codes.len());
            self.advance(&mut digits);
        }
    }

    fn advance(&self, digits: &mut [usize]) {
        for j in (0..self.dim).rev() {
            digits[j] += 1;
            if digits[j] < self.axes[j].len() {
                return;
            }
            digits[j] = 0;
        }
    }

    fn codes_at(&self, digits: &[usize], out: &mut [u32]) {
        let h = self.dim;
        for (i, code) in out.iter_mut().enumerate() {
            let mut c = 0u32;
            for j in 0..h {
                if self.ranks[i * h + j] >= self.axes[j].cut[digits[j]] {
                    c |= 1 << j;
                }
            }
            *code = c;
        }
    }

    /// Interval index per axis of vertex `t` (axis 0 most significant).
    pub fn vertex_digits(&self, mut t: usize) -> Vec<usize> {
        let mut d = vec![0; self.dim];
        for j in (0..self.dim).rev() {
            let r = self.axes[j].len();
            d[j] = t % r;
            t /= r;
        }
        d
    }

    /// Midpoint thresholds of vertex `t`.
    pub fn vertex_thresholds(&self, t: usize) -> Vec<f64> {
        self.vertex_digits(t).iter().enumerate().map(|(j, &k)| self.axes[j].midpoint(k)).collect()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }
    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }
    pub fn n_train(&self) -> usize {
        self.n_train
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn label_count(&self) -> usize {
        self.label_count
    }
    pub fn is_transductive(&self) -> bool {
        self.transductive
    }
    /// Prior weight (volume or uniform mass) of vertex `t`.
    pub fn weight(&self, t: usize) -> f64 {
        self.log_weights[t].exp()
    }
    /// Number of nonempty cells at vertex `t`.
    pub fn occupied_cells(&self, t: usize) -> usize {
        self.offsets[t + 1] - self.offsets[t]
    }

    fn cell_counts(&self, cell: usize) -> &[u32] {
        &self.counts[cell * self.label_count..(cell + 1) * self.label_count]
    }

    /// Exact Gibbs pass: log π[exp(−λr + ξ m′(·,θ))] and the tilted means of r and m′.
    pub fn tilt(&self, lambda: f64, xi: f64, reference: Option<&Reference>) -> Tilt {
        let ny = self.label_count;
        let nf = self.n_train as f64;
        let log_ny = (ny as f64).ln();
        let mut log_mass = Vec::with_capacity(self.n_vertices);
        let mut er = Vec::with_capacity(self.n_vertices);
        let mut em = Vec::with_capacity(self.n_vertices);
        let mut e = vec![0.0; ny];
        for t in 0..self.n_vertices {
            let (mut lm, mut r, mut m) = (self.log_weights[t], 0.0, 0.0);
            for cell in self.offsets[t]..self.offsets[t + 1] {
                let n = self.cell_counts(cell);
                let b: u32 = n.iter().sum();
                for y in 0..ny {
                    let mut v = -lambda * (b - n[y]) as f64 / nf;
                    if let Some(rf) = reference {
                        v += xi * rf.counts[cell * ny + y] as f64 / nf;
                    }
                    e[y] = v;
                }
                let lse = log_sum_exp(&e);
                lm += lse - log_ny;
                for y in 0..ny {
                    let p = (e[y] - lse).exp();
                    r += p * (b - n[y]) as f64;
                    if let Some(rf) = reference {
                        m += p * rf.counts[cell * ny + y] as f64;
                    }
                }
            }
            log_mass.push(lm);
            er.push(r / nf);
            em.push(m / nf);
        }
        let log_z = log_sum_exp(&log_mass);
        let (mut mean_r, mut mean_m) = (0.0, 0.0);
        for t in 0..self.n_vertices {
            let w = (log_mass[t] - log_z).exp();
            mean_r += w * er[t];
            mean_m += w * em[t];
        }
        Tilt { log_z, mean_r, mean_m }
    }

    /// log π[exp(−λ r)].
    pub fn log_partition(&self, lambda: f64) -> f64 {
        self.tilt(lambda, 0.0, None).log_z
    }

    /// π_exp(−λr)(r).
    pub fn gibbs_risk(&self, lambda: f64) -> f64 {
        self.tilt(lambda, 0.0, None).mean_r
    }

    /// log π[exp(−λ r + ξ m′(·,θ))].
    pub fn joint_log_mgf(&self, lambda: f64, xi: f64, reference: &Reference) -> f64 {
        self.tilt(lambda, xi, Some(reference)).log_z
    }

    /// π_exp(−λr)[m′(·,θ)].
    pub fn gibbs_m_prime(&self, lambda: f64, reference: &Reference) -> f64 {
        self.tilt(lambda, 0.0, Some(reference)).mean_m
    }

    /// K(π_exp(−ar), π_exp(−br)) = (b−a) π_exp(−ar)(r) + log Z(b) − log Z(a).
    pub fn kl_between_gibbs(&self, a: f64, b: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        let ta = self.tilt(a, 0.0, None);
        ((b - a) * ta.mean_r + self.log_partition(b) - ta.log_z).max(0.0)
    }

    /// Empirical risk minimizer; ties go to the smallest vertex, then the smallest label.
    pub fn erm(&self) -> (Theta, f64) {
        let mut best = (usize::MAX, 0usize);
        for t in 0..self.n_vertices {
            let err: usize = (self.offsets[t]..self.offsets[t + 1])
                .map(|c| {
                    let n = self.cell_counts(c);
                    (n.iter().sum::<u32>() - n.iter().max().unwrap()) as usize
                })
                .sum();
            if err < best.0 {
                best = (err, t);
            }
        }
        let t = best.1;
        let mut labels = vec![0usize; 1 << self.dim];
        for c in self.offsets[t]..self.offsets[t + 1] {
            let n = self.cell_counts(c);
            let top = *n.iter().max().unwrap();
            labels[self.codes[c] as usize] = n.iter().position(|&v| v == top).unwrap();
        }
        (Theta { vertex: t, labels }, best.0 as f64 / self.n_train as f64)
    }

    /// Training error indicators of θ.
    pub fn theta_errors(&self, theta: &Theta) -> Result<Vec<bool>> {
        if theta.vertex >= self.n_vertices || theta.labels.len() != 1 << self.dim {
            return Err(Error::Validation("parameter does not belong to this grid".into()));
        }
        let digits = self.vertex_digits(theta.vertex);
        let mut codes = vec![0u32; self.n_train];
        self.codes_at(&digits, &mut codes);
        Ok(codes
            .iter()
            .zip(&self.train_labels)
            .map(|(&c, &y)| theta.labels[c as usize] != y)
            .collect())
    }

    /// Reference table for m′(·,θ) from θ's per-point training errors.
    pub fn reference(&self, errors: &[bool]) -> Result<Reference> {
        if errors.len() != self.n_train {
            return Err(Error::Validation("error vector length differs from training size".into()));
        }
        let ny = self.label_count;
        let mut counts = vec![0u32; self.counts.len()];
        let mut digits = vec![0usize; self.dim];
        let mut codes = vec![0u32; self.n_train];
        for t in 0..self.n_vertices {
            self.codes_at(&digits, &mut codes);
            let cells = &self.codes[self.offsets[t]..self.offsets[t + 1]];
            for i in 0..self.n_train {
                let local = cells.binary_search(&codes[i]).expect("training point maps to an occupied cell");
                let cell = self.offsets[t] + local;
                for y in 0..ny {
                    if (y != self.train_labels[i]) != errors[i] {
                        counts[cell * ny + y] += 1;
                    }
                }
            }
            self.advance(&mut digits);
        }
        Ok(Reference { counts, errors: errors.iter().filter(|&&e| e).count() })
    }

    /// log of the prior mass of the atoms achieving the minimal empirical risk.
    pub fn log_erm_mass(&self) -> f64 {
        let (_, r_min) = self.erm();
        let target = (r_min * self.n_train as f64).round() as u32;
        let log_ny = (self.label_count as f64).ln();
        let mut terms = Vec::new();
        for t in 0..self.n_vertices {
            let mut err = 0u32;
            let mut lm = self.log_weights[t];
            for c in self.offsets[t]..self.offsets[t + 1] {
                let n = self.cell_counts(c);
                let top = *n.iter().max().unwrap();
                err += n.iter().sum::<u32>() - top;
                lm += (n.iter().filter(|&&v| v == top).count() as f64).ln() - log_ny;
            }
            if err == target {
                terms.push(lm);
            }
        }
        log_sum_exp(&terms)
    }

    /// max over the grid of β (π_exp(−βr)(r) − r_min), with the maximizing β.
    pub fn empirical_dimension(&self, beta_grid: &[f64]) -> Result<(f64, f64)> {
        if beta_grid.is_empty() || beta_grid.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(Error::Validation("beta grid must be nonempty, positive and finite".into()));
        }
        let (_, r_min) = self.erm();
        let mut best = (0.0, beta_grid[0]);
        for &b in beta_grid {
            let v = b * (self.gibbs_risk(b) - r_min);
            if v > best.0 {
                best = (v, b);
            }
        }
        Ok(best)
    }

    /// sup_θ m′(θ,θ̂) − x [r(θ) − r(θ̂)].
    pub fn empirical_margin_fn(&self, x: f64, reference: &Reference) -> f64 {
        let ny = self.label_count;
        let nf = self.n_train as f64;
        let mut best = f64::NEG_INFINITY;
        for t in 0..self.n_vertices {
            let mut s = 0.0;
            for c in self.offsets[t]..self.offsets[t + 1] {
                let n = self.cell_counts(c);
                let b: u32 = n.iter().sum();
                s += (0..ny)
                    .map(|y| reference.counts[c * ny + y] as f64 - x * (b - n[y]) as f64)
                    .fold(f64::NEG_INFINITY, f64::max);
            }
            best = best.max(s / nf);
        }
        best + x * reference.errors as f64 / nf
    }

    /// Gibbs predictive distribution of the label of a new pattern.
    pub fn predict_proba(&self, lambda: f64, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim || x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Validation("query pattern must lie in [0,1]^h".into()));
        }
        let ny = self.label_count;
        let nf = self.n_train as f64;
        let log_ny = (ny as f64).ln();
        let mut log_mass = Vec::with_capacity(self.n_vertices);
        let mut per_vertex = Vec::with_capacity(self.n_vertices * ny);
        let mut digits = vec![0usize; self.dim];
        let mut e = vec![0.0; ny];
        for t in 0..self.n_vertices {
            // Distribution of the query's cell code under thresholds drawn in Δ_t.
            let mut code_mass: Vec<(u32, f64)> = vec![(0, 1.0)];
            for j in 0..self.dim {
                let f1 = if self.transductive {
                    if x[j] >= self.axes[j].midpoint(digits[j]) { 1.0 } else { 0.0 }
                } else {
                    self.axes[j].upper_fraction(digits[j], x[j])
                };
                let mut next = Vec::with_capacity(code_mass.len() * 2);
                for &(c, w) in &code_mass {
                    if f1 > 0.0 {
                        next.push((c | 1 << j, w * f1));
                    }
                    if f1 < 1.0 {
                        next.push((c, w * (1.0 - f1)));
                    }
                }
                code_mass = next;
            }
            let cells = &self.codes[self.offsets[t]..self.offsets[t + 1]];
            let mut lm = self.log_weights[t];
            for cell in self.offsets[t]..self.offsets[t + 1] {
                let n = self.cell_counts(cell);
                let b: u32 = n.iter().sum();
                for y in 0..ny {
                    e[y] = -lambda * (b - n[y]) as f64 / nf;
                }
                lm += log_sum_exp(&e) - log_ny;
            }
            let mut q = vec![0.0; ny];
            for &(c, w) in &code_mass {
                match cells.binary_search(&c) {
                    Ok(local) => {
                        let n = self.cell_counts(self.offsets[t] + local);
                        for y in 0..ny {
                            e[y] = lambda * n[y] as f64 / nf;
                        }
                        let lse = log_sum_exp(&e);
                        for y in 0..ny {
                            q[y] += w * (e[y] - lse).exp();
                        }
                    }
                    Err(_) => q.iter_mut().for_each(|v| *v += w / ny as f64),
                }
            }
            log_mass.push(lm);
            per_vertex.extend(q);
            self.advance(&mut digits);
        }
        let log_z = log_sum_exp(&log_mass);
        let mut out = vec![0.0; ny];
        for t in 0..self.n_vertices {
            let w = (log_mass[t] - log_z).exp();
            for y in 0..ny {
                out[y] += w * per_vertex[t * ny + y];
            }
        }
        let s: f64 = out.iter().sum();
        out.iter_mut().for_each(|v| *v /= s);
        Ok(out)
    }
}

/// A Gibbs posterior π_exp(−λr) on a grid, with its cached log-partition.
#[derive(Debug, Clone, Copy)]
pub struct GibbsHandle<'a> {
    pub grid: &'a CellGrid,
    pub lambda: f64,
    pub log_partition: f64,
}

impl<'a> GibbsHandle<'a> {
    pub fn new(grid: &'a CellGrid, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Validation(format!("inverse temperature {lambda} must be finite and >= 0")));
        }
        Ok(Self { grid, lambda, log_partition: grid.log_partition(lambda) })
    }

    pub fn risk(&self) -> f64 {
        self.grid.gibbs_risk(self.lambda)
    }

    pub fn m_prime(&self, reference: &Reference) -> f64 {
        self.grid.gibbs_m_prime(self.lambda, reference)
    }

    /// K(this posterior, prior) = −λ π_λ(r) − log Z(λ).
    pub fn kl_to_prior(&self) -> f64 {
        self.grid.kl_between_gibbs(self.lambda, 0.0)
    }
}
