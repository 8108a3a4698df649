//! Characterization protocols: cycle benchmarking, cross-talk bounding,
//! parity-scan phase calibration, Rabi flopping and the ac-Zeeman sweep.

pub mod cb;
pub mod crosstalk;
pub mod parity;
pub mod rabi;
pub mod zeeman;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

/// Binomial standard error with the Laplace-smoothed estimate (k+1)/(n+2),
/// so that zero or full counts still carry a finite σ.
pub fn binomial_sigma(k: u64, n: u64) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    let p = (k as f64 + 1.0) / (n as f64 + 2.0);
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Parametric resample of a count k out of n.
pub(crate) fn resample_count<R: Rng + ?Sized>(k: u64, n: u64, rng: &mut R) -> u64 {
    if n == 0 {
        return 0;
    }
    let p = (k as f64 / n as f64).clamp(0.0, 1.0);
    Binomial::new(n, p).expect("p lies in [0, 1]").sample(rng)
}

/// Sample standard deviation; NaN for fewer than two values.
pub fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return f64::NAN;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}
