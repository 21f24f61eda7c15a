use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{usage, CliResult};
use crate::io::{write_csv, CsvData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    /// Features uniform on (0,1); label 1 iff f1 > 0.5, flipped with probability `noise`.
    Threshold,
    /// Two Gaussian clouds in the plane with ±1 labels.
    Svm,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub h: usize,
    #[arg(long, value_enum, default_value_t = Kind::Threshold)]
    pub kind: Kind,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Omit the label column.
    #[arg(long)]
    pub unlabeled: bool,
    /// Output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn generate(a: &GenerateArgs) -> CliResult<CsvData> {
    if a.n == 0 || a.h == 0 {
        return usage("--n and --h must be positive");
    }
    if !(0.0..=1.0).contains(&a.noise) {
        return usage("--noise must lie in [0, 1]");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut features = Vec::with_capacity(a.n);
    let mut labels = Vec::with_capacity(a.n);
    for _ in 0..a.n {
        let (x, clean): (Vec<f64>, i64) = match a.kind {
            Kind::Threshold => {
                // keep values strictly inside (0,1) at a fixed resolution
                let x: Vec<f64> = (0..a.h).map(|_| (rng.gen_range(1..10_000) as f64) / 10_000.0).collect();
                let y = (x[0] > 0.5) as i64;
                (x, y)
            }
            Kind::Svm => {
                let y = if rng.gen::<bool>() { 1 } else { -1 };
                let x = (0..a.h)
                    .map(|j| {
                        let centre = if j == 0 { y as f64 } else { 0.0 };
                        // Box-Muller
                        let (u, v): (f64, f64) = (rng.gen_range(f64::EPSILON..1.0), rng.gen());
                        let z = (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos();
                        ((centre + 0.5 * z) * 1e6).round() / 1e6
                    })
                    .collect();
                (x, y)
            }
        };
        let flip = rng.gen::<f64>() < a.noise;
        let y = match (a.kind, flip) {
            (_, false) => clean,
            (Kind::Threshold, true) => 1 - clean,
            (Kind::Svm, true) => -clean,
        };
        features.push(x);
        labels.push(y);
    }
    Ok(CsvData { features, labels: (!a.unlabeled).then_some(labels) })
}

pub fn run(a: &GenerateArgs) -> CliResult<()> {
    let data = generate(a)?;
    match &a.out {
        Some(p) => write_csv(&data, std::fs::File::create(p)?),
        None => write_csv(&data, std::io::stdout().lock()),
    }
}
