//! Exact Gaussian simulation of the gyroscope networks.
//!
//! Sensor `j` owns modes `(2j, 2j+1)` for its counter-propagating pair
//! `(a_j, b_j)`. Nothing here uses the small-angle approximation, so the
//! results double as an independent check of the closed forms.

use crate::error::{invalid, Error, Result};
use crate::gaussian::GaussianState;
use crate::scalar::{c, Real};
use crate::sensitivity::{NetworkConfig, ProbeParams, Seeding, Topology};

/// Output state of the network just before homodyne detection.
///
/// `thermal_nbar` puts a weak thermal state (instead of vacuum) on the unused
/// input ports of the entangled network's beamsplitter fans; pass zero for
/// the ideal network.
pub fn network_state<T: Real>(
    config: &NetworkConfig<T>,
    params: &ProbeParams<T>,
    phases: &[T],
    thermal_nbar: T,
) -> Result<GaussianState<T>> {
    config.validate()?;
    let m = config.m;
    if phases.len() != m {
        return invalid(format!("expected {m} phases, got {}", phases.len()));
    }
    if thermal_nbar < T::zero() {
        return invalid("thermal occupation must be nonnegative");
    }
    let mut state = GaussianState::vacuum(2 * m)?;
    match config.topology {
        Topology::Entangled => {
            state = state.displace(0, params.amp)?;
            if config.seeding == Seeding::Double {
                state = state.displace(1, params.amp)?;
            }
            state = state.two_mode_squeeze(0, 1, params.r)?;
            if thermal_nbar > T::zero() {
                for mode in 2..2 * m {
                    state = state.prepare_thermal(mode, thermal_nbar)?;
                }
            }
            let arm_a: Vec<usize> = (0..m).map(|j| 2 * j).collect();
            let arm_b: Vec<usize> = (0..m).map(|j| 2 * j + 1).collect();
            state = state.symmetric_bs_network(0, &arm_a)?;
            state = state.symmetric_bs_network(1, &arm_b)?;
        }
        Topology::Separable => {
            for j in 0..m {
                state = state.displace(2 * j, params.amp)?;
                if config.seeding == Seeding::Double {
                    state = state.displace(2 * j + 1, params.amp)?;
                }
                state = state.two_mode_squeeze(2 * j, 2 * j + 1, params.r)?;
            }
        }
    }
    for (j, &phi) in phases.iter().enumerate() {
        state = state.sagnac_phase(2 * j, 2 * j + 1, phi)?;
    }
    for mode in 0..2 * m {
        state = state.loss_channel(mode, config.eta)?;
    }
    Ok(state)
}

/// Coefficients of `Y₊ = Σ_j (Y_{a_j} + Y_{b_j})/√2` over `2m` modes.
pub fn joint_quadrature_coeffs<T: Real>(m: usize) -> Vec<T> {
    let w = T::one() / c::<T>(2.0).sqrt();
    (0..4 * m)
        .map(|k| if k % 2 == 1 { w } else { T::zero() })
        .collect()
}

/// Exact mean and variance of `Y₊` at the given phases.
pub fn pipeline_stats<T: Real>(
    config: &NetworkConfig<T>,
    params: &ProbeParams<T>,
    phases: &[T],
) -> Result<(T, T)> {
    let state = network_state(config, params, phases, T::zero())?;
    state.quadrature_stats(&joint_quadrature_coeffs(config.m))
}

/// `Δφ²` by error propagation through the exact pipeline: the slope of
/// `⟨Y₊⟩` is a central difference at `phi0 ± probe` (all sensors shifted
/// together) and the variance is taken at `phi0`.
pub fn pipeline_sensitivity<T: Real>(
    config: &NetworkConfig<T>,
    params: &ProbeParams<T>,
    phi0: T,
    probe: T,
) -> Result<T> {
    if !(probe > T::zero()) {
        return invalid("finite-difference probe must be positive");
    }
    let m = config.m;
    let (up, _) = pipeline_stats(config, params, &vec![phi0 + probe; m])?;
    let (down, _) = pipeline_stats(config, params, &vec![phi0 - probe; m])?;
    let (_, var) = pipeline_stats(config, params, &vec![phi0; m])?;
    let slope = (up - down) / (c::<T>(2.0) * probe);
    if slope == T::zero() {
        return Err(Error::DegenerateEstimator(
            "pipeline mean does not respond to the phase".into(),
        ));
    }
    Ok(var / (slope * slope))
}
