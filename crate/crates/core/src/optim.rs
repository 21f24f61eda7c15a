//! Deterministic one-dimensional minimization over the inverse temperature λ:
//! a log-spaced grid scan followed by golden-section refinement around the
//! best grid point.

/// Number of log-spaced grid points.
pub const GRID_POINTS: usize = 512;
/// Golden-section iterations after the grid scan.
pub const GOLDEN_ITERS: usize = 60;

/// Result of a scalar minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimizes `f` over `[lo, hi]` (`0 < lo < hi`). NaN values count as +∞.
/// Ties on the grid resolve to the smallest x.
pub fn minimize_log_grid<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Minimum {
    let (llo, lhi) = (lo.ln(), hi.ln());
    let step = (lhi - llo) / (GRID_POINTS - 1) as f64;
    let at = |i: usize| (llo + step * i as f64).exp();
    let mut best = 0;
    let mut best_v = f64::INFINITY;
    for i in 0..GRID_POINTS {
        let v = sanitize(f(at(i)));
        if v < best_v {
            best_v = v;
            best = i;
        }
    }
    if !best_v.is_finite() {
        return Minimum { x: at(best), value: best_v };
    }
    let mut a = llo + step * best.saturating_sub(1) as f64;
    let mut b = llo + step * (best + 1).min(GRID_POINTS - 1) as f64;
    let g = |t: f64| sanitize(f(t.exp()));
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (g(c), g(d));
    let mut out = Minimum { x: at(best), value: best_v };
    for _ in 0..GOLDEN_ITERS {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = g(d);
        }
        for (t, v) in [(c, fc), (d, fd)] {
            if v < out.value {
                out = Minimum { x: t.exp(), value: v };
            }
        }
    }
    out
}

/// Standard λ search range for a sample of size `n`: `[1e-2, 20 n]`.
pub fn lambda_range(n: u64) -> (f64, f64) {
    (1e-2, 20.0 * n as f64)
}

/// Minimizes `f` over the standard λ range for sample size `n`.
pub fn minimize_lambda<F: Fn(f64) -> f64>(f: F, n: u64) -> Minimum {
    let (lo, hi) = lambda_range(n);
    minimize_log_grid(f, lo, hi)
}
