//! Monte Carlo homodyne oracle.
//!
//! Outcomes of the joint quadrature are drawn from the exact Gaussian law of
//! the network output and the sensitivity is re-estimated from samples alone.
//! Randomness comes from ChaCha20 streams keyed by `(seed, batch)`, so
//! results do not depend on the number of worker threads.

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::gaussian::GaussianState;
use crate::pipeline::{joint_quadrature_coeffs, network_state};
use crate::sensitivity::{sensitivity, NetworkConfig, ProbeParams};

const BATCH: usize = 1 << 16;
/// Smallest sample count considered a reportable run.
pub const MIN_REPORTED_SAMPLES: usize = 10_000;

/// Settings of one Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McRun {
    pub n_samples: usize,
    pub rng_seed: u64,
    /// Common phase at which the sensitivity is estimated.
    pub phi0: f64,
    /// Half-width of the central difference for the mean slope.
    pub d_phi: f64,
}

impl McRun {
    pub fn new(n_samples: usize, rng_seed: u64) -> Self {
        Self {
            n_samples,
            rng_seed,
            phi0: 0.0,
            d_phi: 1e-3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 {
            return invalid("at least two samples are needed for a variance");
        }
        if !(1e-4..=1e-2).contains(&self.d_phi) {
            return invalid(format!("phase step {} outside [1e-4, 1e-2]", self.d_phi));
        }
        if !self.phi0.is_finite() {
            return invalid("operating phase must be finite");
        }
        if self.n_samples < MIN_REPORTED_SAMPLES {
            warn!(
                "{} samples is below the {MIN_REPORTED_SAMPLES} used for reported runs",
                self.n_samples
            );
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub delta_phi_sq_hat: f64,
    pub std_error: f64,
    pub z_score_vs_analytic: f64,
    /// Closed-form value the estimate is compared with.
    pub analytic: f64,
    pub slope_hat: f64,
    pub variance_hat: f64,
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `n` independent draws of `Σ c_k r̂_k` (mean `c·d`, variance `½cᵀVc`).
pub fn sample_joint_quadrature(
    state: &GaussianState<f64>,
    coeffs: &[f64],
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n == 0 {
        return invalid("sample count must be positive");
    }
    let (mean, var) = state.quadrature_stats(coeffs)?;
    if !(var > 0.0) {
        return Err(Error::InvalidState(format!(
            "quadrature variance {var} is not positive"
        )));
    }
    let sd = var.sqrt();
    let mut out = vec![0.0; n];
    out.par_chunks_mut(BATCH)
        .enumerate()
        .for_each(|(batch, chunk)| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(batch as u64);
            for x in chunk.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *x = mean + sd * z;
            }
        });
    Ok(out)
}

/// Sample mean and unbiased sample variance, accumulated batchwise with
/// compensated sums and reduced in batch order.
pub fn sample_moments(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.len() < 2 {
        return invalid("at least two samples are needed for a variance");
    }
    let n = xs.len() as f64;
    let partial = |f: &(dyn Fn(f64) -> f64 + Sync)| -> f64 {
        let parts: Vec<f64> = xs
            .par_chunks(BATCH)
            .map(|chunk| {
                let mut s = KahanSum::default();
                chunk.iter().for_each(|&x| s.add(f(x)));
                s.value()
            })
            .collect();
        let mut total = KahanSum::default();
        parts.into_iter().for_each(|p| total.add(p));
        total.value()
    };
    let mean = partial(&|x| x) / n;
    let var = partial(&|x| (x - mean) * (x - mean)) / (n - 1.0);
    Ok((mean, var))
}

/// Decorrelates the seeds of the three sample sets of one estimate.
fn derived_seed(seed: u64, k: u64) -> u64 {
    seed ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Re-derives `Δφ²` from simulated homodyne records.
///
/// The slope of the sample mean is a central difference between runs at
/// `phi0 ± d_phi`; the variance comes from a third run at `phi0`. The
/// standard error follows from the delta method.
pub fn estimate_sensitivity_mc(
    config: &NetworkConfig<f64>,
    params: &ProbeParams<f64>,
    run: &McRun,
) -> Result<McEstimate> {
    run.validate()?;
    config.validate()?;
    let m = config.m;
    let coeffs = joint_quadrature_coeffs::<f64>(m);
    let draw = |phi: f64, k: u64| -> Result<(f64, f64)> {
        let state = network_state(config, params, &vec![phi; m], 0.0)?;
        let xs = sample_joint_quadrature(
            &state,
            &coeffs,
            run.n_samples,
            derived_seed(run.rng_seed, k),
        )?;
        sample_moments(&xs)
    };
    let (mean_up, var_up) = draw(run.phi0 + run.d_phi, 1)?;
    let (mean_down, var_down) = draw(run.phi0 - run.d_phi, 2)?;
    let (_, var0) = draw(run.phi0, 3)?;

    let n = run.n_samples as f64;
    let slope = (mean_up - mean_down) / (2.0 * run.d_phi);
    let slope_se = ((var_up + var_down) / n).sqrt() / (2.0 * run.d_phi);
    if slope.abs() < 3.0 * slope_se {
        return Err(Error::InsufficientSignal(format!(
            "slope {slope:.3e} is within 3σ ({slope_se:.3e}) of zero"
        )));
    }
    let var_se = var0 * (2.0 / (n - 1.0)).sqrt();
    let est = var0 / (slope * slope);
    let d_var = 1.0 / (slope * slope);
    let d_slope = -2.0 * var0 / (slope * slope * slope);
    let std_error = ((d_var * var_se).powi(2) + (d_slope * slope_se).powi(2)).sqrt();
    let analytic = sensitivity(config, params)?;
    Ok(McEstimate {
        delta_phi_sq_hat: est,
        std_error,
        z_score_vs_analytic: (est - analytic) / std_error,
        analytic,
        slope_hat: slope,
        variance_hat: var0,
    })
}
