//! Closed-form phase sensitivities of the four network configurations.
//!
//! All sensitivities are variances `Δφ²` of the average phase
//! `φ = (1/M) Σ φ_j`, obtained by linear error propagation of the joint
//! quadrature `Y₊ = Σ_j (Y_{a_j} + Y_{b_j})/√2`. The closed forms are the
//! small-angle (`sin φ ≈ φ`) limits; they are accurate to `O(φ²)` and are
//! documented as valid for `|φ_j| ≤ 0.05`.

use crate::error::{invalid, Error, Result};
use crate::scalar::{c, Real};

/// How the gyroscopes share the probe light.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Topology {
    /// One amplifier, both beams fanned out over all sensors.
    Entangled,
    /// One amplifier per sensor.
    Separable,
}

/// Whether one or both amplifier inputs carry a coherent seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Seeding {
    Single,
    Double,
}

impl std::fmt::Display for Topology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Topology::Entangled => "entangled",
            Topology::Separable => "separable",
        })
    }
}

impl std::fmt::Display for Seeding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Seeding::Single => "single",
            Seeding::Double => "double",
        })
    }
}

/// Network layout and photon budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkConfig<T: Real> {
    /// Number of gyroscopes.
    pub m: usize,
    /// Per-channel transmissivity.
    pub eta: T,
    /// Mean photons reaching each gyroscope, `N = η N_tot / M` (entangled)
    /// or `η N_tot` of its own amplifier (separable).
    pub n: T,
    pub topology: Topology,
    pub seeding: Seeding,
}

impl<T: Real> NetworkConfig<T> {
    pub fn new(m: usize, eta: T, n: T, topology: Topology, seeding: Seeding) -> Result<Self> {
        let cfg = Self {
            m,
            eta,
            n,
            topology,
            seeding,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn entangled(m: usize, eta: T, n: T) -> Result<Self> {
        Self::new(m, eta, n, Topology::Entangled, Seeding::Single)
    }

    pub fn separable(m: usize, eta: T, n: T) -> Result<Self> {
        Self::new(m, eta, n, Topology::Separable, Seeding::Single)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return invalid("the network needs at least one gyroscope");
        }
        check_eta(self.eta)?;
        if !(self.n > T::zero()) || !self.n.is_finite() {
            return invalid("photon budget per sensor must be positive");
        }
        Ok(())
    }

    pub fn with_topology(self, topology: Topology) -> Self {
        Self { topology, ..self }
    }

    pub fn with_seeding(self, seeding: Seeding) -> Self {
        Self { seeding, ..self }
    }

    pub fn with_n(self, n: T) -> Self {
        Self { n, ..self }
    }

    /// Photons that one amplifier must emit (before loss) to meet the budget:
    /// `MN/η` for the shared amplifier, `N/η` for each separable one.
    pub fn source_photons(&self) -> T {
        match self.topology {
            Topology::Entangled => T::from_usize_lossy(self.m) * self.n / self.eta,
            Topology::Separable => self.n / self.eta,
        }
    }
}

/// Amplifier gain and seed amplitude (α entangled, β separable).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeParams<T: Real> {
    pub r: T,
    pub amp: T,
}

impl<T: Real> ProbeParams<T> {
    pub fn new(r: T, amp: T) -> Result<Self> {
        if !(r >= T::zero()) || !r.is_finite() {
            return invalid("squeezing parameter must be finite and nonnegative");
        }
        if !(amp >= T::zero()) || !amp.is_finite() {
            return invalid("seed amplitude must be finite and nonnegative");
        }
        Ok(Self { r, amp })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityReport<T: Real> {
    pub delta_phi_sq: T,
    pub snl: T,
    /// `Δφ²_separable / Δφ²_entangled`, when both were evaluated.
    pub ratio_r: Option<T>,
    /// `10 log₁₀(SNL / Δφ²)`.
    pub enhancement_db: T,
    pub squeezing_db: T,
}

impl<T: Real> SensitivityReport<T> {
    pub fn new(delta_phi_sq: T, snl: T, r: T, ratio_r: Option<T>) -> Result<Self> {
        Ok(Self {
            delta_phi_sq,
            snl,
            ratio_r,
            enhancement_db: to_db(snl / delta_phi_sq)?,
            squeezing_db: squeezing_db(r),
        })
    }
}

/// Sagnac loop geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GyroGeometry<T: Real> {
    pub area: T,
    pub wavelength: T,
    pub light_speed: T,
}

impl<T: Real> GyroGeometry<T> {
    pub fn new(area: T, wavelength: T, light_speed: T) -> Result<Self> {
        if !(area > T::zero() && wavelength > T::zero() && light_speed > T::zero()) {
            return invalid("loop area, wavelength and light speed must be positive");
        }
        Ok(Self {
            area,
            wavelength,
            light_speed,
        })
    }
}

pub(crate) fn check_eta<T: Real>(eta: T) -> Result<()> {
    if !(eta > T::zero() && eta <= T::one()) {
        return invalid(format!("transmissivity {} outside (0, 1]", eta.as_f64()));
    }
    Ok(())
}

/// `1/η − 1 + e^{-2r}`, the noise factor shared by every homodyne form.
fn noise_factor<T: Real>(r: T, eta: T) -> T {
    (-c::<T>(2.0) * r).exp() + T::one() / eta - T::one()
}

/// Derivative of `⟨Y₊⟩` with respect to the average phase at `φ = 0`.
pub fn mean_slope<T: Real>(config: &NetworkConfig<T>, params: &ProbeParams<T>) -> T {
    let m = T::from_usize_lossy(config.m);
    let seeds = match config.seeding {
        Seeding::Single => T::one(),
        Seeding::Double => c::<T>(2.0),
    };
    let spread = match config.topology {
        Topology::Entangled => m.sqrt(),
        Topology::Separable => m,
    };
    -(config.eta.sqrt() * params.amp * params.r.exp() * spread * seeds)
}

/// Small-angle mean and variance of the joint quadrature `Y₊`.
pub fn joint_quadrature_stats<T: Real>(
    config: &NetworkConfig<T>,
    params: &ProbeParams<T>,
    phases: &[T],
) -> Result<(T, T)> {
    config.validate()?;
    if phases.len() != config.m {
        return invalid(format!(
            "expected {} phases, got {}",
            config.m,
            phases.len()
        ));
    }
    let m = T::from_usize_lossy(config.m);
    let avg = phases.iter().fold(T::zero(), |a, &p| a + p) / m;
    let mean = mean_slope(config, params) * avg;
    let half_m = m * c::<T>(0.5);
    let variance = half_m + half_m * config.eta * ((-c::<T>(2.0) * params.r).exp() - T::one());
    Ok((mean, variance))
}

/// `Δφ² = Var / slope²`.
pub fn error_propagation<T: Real>(variance: T, mean_slope: T) -> Result<T> {
    if mean_slope == T::zero() || !mean_slope.is_finite() {
        return Err(Error::DegenerateEstimator(
            "mean of the estimator does not depend on the phase".into(),
        ));
    }
    Ok(variance / (mean_slope * mean_slope))
}

/// Mode-entangled network, single seed; independent of the sensor count.
pub fn sensitivity_entangled<T: Real>(r: T, alpha: T, eta: T) -> Result<T> {
    check_eta(eta)?;
    if !(alpha > T::zero()) {
        return Err(Error::DegenerateEstimator(
            "seed amplitude α must be positive".into(),
        ));
    }
    Ok(noise_factor(r, eta) / (c::<T>(2.0) * alpha * alpha * (c::<T>(2.0) * r).exp()))
}

/// Separable network of `m` independent amplifiers, single seed.
pub fn sensitivity_separable<T: Real>(r: T, beta: T, eta: T, m: usize) -> Result<T> {
    check_eta(eta)?;
    if m == 0 {
        return invalid("the network needs at least one gyroscope");
    }
    if !(beta > T::zero()) {
        return Err(Error::DegenerateEstimator(
            "seed amplitude β must be positive".into(),
        ));
    }
    Ok(noise_factor(r, eta)
        / (c::<T>(2.0) * beta * beta * T::from_usize_lossy(m) * (c::<T>(2.0) * r).exp()))
}

/// Double-seeded variant: one quarter of the single-seed form.
pub fn sensitivity_double_seed<T: Real>(
    topology: Topology,
    r: T,
    amp: T,
    eta: T,
    m: usize,
) -> Result<T> {
    let single = match topology {
        Topology::Entangled => sensitivity_entangled(r, amp, eta)?,
        Topology::Separable => sensitivity_separable(r, amp, eta, m)?,
    };
    Ok(single * c::<T>(0.25))
}

/// Closed form for any configuration.
pub fn sensitivity<T: Real>(config: &NetworkConfig<T>, params: &ProbeParams<T>) -> Result<T> {
    config.validate()?;
    match config.seeding {
        Seeding::Single => match config.topology {
            Topology::Entangled => sensitivity_entangled(params.r, params.amp, config.eta),
            Topology::Separable => {
                sensitivity_separable(params.r, params.amp, config.eta, config.m)
            }
        },
        Seeding::Double => {
            sensitivity_double_seed(config.topology, params.r, params.amp, config.eta, config.m)
        }
    }
}

/// Shot-noise limit `1/(2MN)`.
pub fn snl<T: Real>(m: usize, n: T) -> Result<T> {
    if m == 0 || !(n > T::zero()) {
        return invalid("shot-noise limit needs M ≥ 1 and N > 0");
    }
    Ok(T::one() / (c::<T>(2.0) * T::from_usize_lossy(m) * n))
}

/// Photons leaving one amplifier.
///
/// Single seed: `α² cosh 2r + 2 sinh² r`. Double seed (equal in-phase seeds
/// on both inputs): `2α² e^{2r} + 2 sinh² r`.
pub fn total_photons<T: Real>(r: T, amp: T, seeding: Seeding) -> T {
    let two = c::<T>(2.0);
    let vac = two * r.sinh() * r.sinh();
    match seeding {
        Seeding::Single => amp * amp * (two * r).cosh() + vac,
        Seeding::Double => two * amp * amp * (two * r).exp() + vac,
    }
}

/// Photons reaching each gyroscope after loss.
pub fn photons_per_sensor<T: Real>(config: &NetworkConfig<T>, params: &ProbeParams<T>) -> T {
    let emitted = config.eta * total_photons(params.r, params.amp, config.seeding);
    match config.topology {
        Topology::Entangled => emitted / T::from_usize_lossy(config.m),
        Topology::Separable => emitted,
    }
}

/// Seed amplitude that meets the photon budget of `config` at gain `r`.
pub fn amplitude_for_budget<T: Real>(config: &NetworkConfig<T>, r: T) -> Result<T> {
    config.validate()?;
    let two = c::<T>(2.0);
    let spare = config.source_photons() - two * r.sinh() * r.sinh();
    let per_amp2 = match config.seeding {
        Seeding::Single => (two * r).cosh(),
        Seeding::Double => two * (two * r).exp(),
    };
    if spare < T::zero() {
        return Err(Error::InfeasibleConstraint(format!(
            "squeezing r = {} alone exceeds the photon budget",
            r.as_f64()
        )));
    }
    Ok((spare / per_amp2).sqrt())
}

/// Largest gain compatible with the budget: `2 sinh² r ≤ N_source`.
pub fn max_squeezing<T: Real>(config: &NetworkConfig<T>) -> T {
    (config.source_photons() * c::<T>(0.5)).sqrt().asinh()
}

/// `R = Δφ²_separable / Δφ²_entangled`.
pub fn sensitivity_ratio<T: Real>(s_sep: T, s_ent: T) -> Result<T> {
    if !(s_sep > T::zero() && s_ent > T::zero()) {
        return invalid("sensitivity ratio needs positive inputs");
    }
    Ok(s_sep / s_ent)
}

/// `10 log₁₀ ratio`.
pub fn to_db<T: Real>(ratio: T) -> Result<T> {
    if !(ratio > T::zero()) {
        return invalid("decibels need a positive ratio");
    }
    Ok(c::<T>(10.0) * ratio.log10())
}

/// Squeezing in dB, `10 log₁₀ e^{2r}`.
pub fn squeezing_db<T: Real>(r: T) -> T {
    c::<T>(20.0) / T::ln_10() * r
}

/// Sagnac conversion `Ω = λ c Δφ / (8π A)`.
pub fn angular_velocity<T: Real>(delta_phi: T, geom: &GyroGeometry<T>) -> T {
    geom.wavelength * geom.light_speed / (c::<T>(8.0) * T::pi() * geom.area) * delta_phi
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn joint_stats_examples() {
        let cfg = NetworkConfig::<f64>::entangled(4, 1.0, 1.0).unwrap();
        let p = ProbeParams::new(0.0, 1.0).unwrap();
        let (mean, var) = joint_quadrature_stats(&cfg, &p, &[0.01; 4]).unwrap();
        assert!((mean + 0.02).abs() < 1e-15);
        assert!((var - 2.0).abs() < 1e-15);

        let p1 = ProbeParams::new(1.0, 2.0).unwrap();
        let (_, var) = joint_quadrature_stats(&cfg, &p1, &[0.0; 4]).unwrap();
        assert!(rel(var, 2.0 * (-2.0f64).exp()) < 1e-14);
        assert!((var - 0.27067).abs() < 1e-5);

        let sep = cfg.with_topology(Topology::Separable);
        let (mean, _) = joint_quadrature_stats(&sep, &p, &[0.01; 4]).unwrap();
        assert!((mean + 0.04).abs() < 1e-15);
        assert!(joint_quadrature_stats(&sep, &p, &[0.01; 3]).is_err());
    }

    #[test]
    fn error_propagation_cases() {
        assert_eq!(error_propagation(0.5, 1.0).unwrap(), 0.5);
        assert!(matches!(
            error_propagation(0.5, 0.0),
            Err(Error::DegenerateEstimator(_))
        ));
        let (v, s) = (0.37, -1.9);
        assert!(
            rel(
                error_propagation(4.0 * v, 2.0 * s).unwrap(),
                error_propagation(v, s).unwrap()
            ) < 1e-15
        );

        // r = 0 coherent entangled probe at the full budget gives the SNL.
        let (m, n) = (4usize, 2.5);
        let cfg = NetworkConfig::entangled(m, 1.0, n).unwrap();
        let alpha = (m as f64 * n).sqrt();
        let p = ProbeParams::new(0.0, alpha).unwrap();
        let (_, var) = joint_quadrature_stats(&cfg, &p, &[0.0; 4]).unwrap();
        let dphi = error_propagation(var, mean_slope(&cfg, &p)).unwrap();
        assert!(rel(dphi, 1.0 / (2.0 * m as f64 * n)) < 1e-15);
    }

    #[test]
    fn entangled_closed_form() {
        assert_eq!(sensitivity_entangled(0.0, 1.0, 1.0).unwrap(), 0.5);
        let (m, n) = (3.0, 7.0);
        assert!(
            rel(
                sensitivity_entangled(0.0, (m * n as f64).sqrt(), 1.0).unwrap(),
                1.0 / (2.0 * m * n)
            ) < 1e-15
        );
        assert!(sensitivity_entangled(0.5, 0.0, 1.0).is_err());
        assert!(sensitivity_entangled(0.5, 1.0, 0.0).is_err());
    }

    #[test]
    fn separable_closed_form() {
        let v = sensitivity_separable(1.0, 2.0, 0.9, 4).unwrap();
        assert!(rel(v, 1.0423e-3) < 1e-4);
        let half = sensitivity_separable(1.0, 2.0, 0.9, 8).unwrap();
        assert!(rel(half, v / 2.0) < 1e-15);
        for m in 1..6 {
            let n = 3.0f64;
            assert!(
                rel(
                    sensitivity_separable(0.0, n.sqrt(), 1.0, m).unwrap(),
                    1.0 / (2.0 * m as f64 * n)
                ) < 1e-15
            );
        }
        assert!(sensitivity_separable(1.0, 0.0, 0.9, 4).is_err());
    }

    #[test]
    fn double_seed_quarters() {
        assert_eq!(
            sensitivity_double_seed(Topology::Entangled, 0.0f64, 1.0, 1.0, 1).unwrap(),
            0.125
        );
        let ds = sensitivity_double_seed(Topology::Separable, 1.0, 2.0, 0.9, 4).unwrap();
        assert!(rel(ds, 2.6057e-4) < 1e-4);
        let single = SensitivityReport::<f64>::new(0.01, 0.05, 0.0, None).unwrap();
        let double = SensitivityReport::new(0.0025, 0.05, 0.0, None).unwrap();
        assert!((double.enhancement_db - single.enhancement_db - 6.0206).abs() < 1e-4);
    }

    #[test]
    fn snl_and_photons() {
        assert!(rel(snl(4, 20.0f64).unwrap(), 0.00625) < 1e-15);
        assert_eq!(snl(1, 0.5f64).unwrap(), 1.0);
        assert!((snl(4, 2.53f64).unwrap() - 0.049407).abs() < 1e-6);
        assert!(snl(0, 1.0).is_err());

        assert_eq!(total_photons(0.0f64, 3.0, Seeding::Single), 9.0);
        assert!((total_photons(1.0f64, 0.0, Seeding::Single) - 2.7622).abs() < 1e-4);
        assert!((total_photons(1.0f64, 2.0, Seeding::Single) - 17.811).abs() < 1e-3);
        assert_eq!(total_photons(0.0f64, 3.0, Seeding::Double), 18.0);
    }

    #[test]
    fn budget_inversion_round_trips() {
        for topology in [Topology::Entangled, Topology::Separable] {
            for seeding in [Seeding::Single, Seeding::Double] {
                let cfg = NetworkConfig::new(3, 0.93, 5.0, topology, seeding).unwrap();
                let amp = amplitude_for_budget(&cfg, 0.6).unwrap();
                let p = ProbeParams::new(0.6, amp).unwrap();
                assert!(rel(photons_per_sensor(&cfg, &p), 5.0) < 1e-13);
            }
        }
        let cfg = NetworkConfig::entangled(1, 1.0, 1.0).unwrap();
        assert!(matches!(
            amplitude_for_budget(&cfg, 3.0),
            Err(Error::InfeasibleConstraint(_))
        ));
    }

    #[test]
    fn decibel_conventions() {
        assert!((to_db(2.86f64).unwrap() - 4.56).abs() < 5e-3);
        assert!((to_db(23.22f64).unwrap() - 13.66).abs() < 5e-3);
        assert!((squeezing_db(1.13f64) - 9.81).abs() < 1e-2);
        assert!(to_db(0.0f64).is_err());
        assert!((sensitivity_ratio(3.0f64, 3.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(sensitivity_ratio(-1.0, 3.0).is_err());
    }

    #[test]
    fn angular_velocity_conversion() {
        let g = GyroGeometry::new(1.0, 1550e-9, 3e8).unwrap();
        assert_eq!(angular_velocity(0.0, &g), 0.0);
        assert!(rel(angular_velocity(1e-6, &g), 1.850e-5) < 1e-3);
        let g2 = GyroGeometry::new(2.0, 1550e-9, 3e8).unwrap();
        assert!(
            rel(
                angular_velocity(1e-6, &g2),
                angular_velocity(1e-6, &g) / 2.0
            ) < 1e-15
        );
        assert!(GyroGeometry::new(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn monotone_in_transmissivity() {
        let mut prev = f64::INFINITY;
        for k in 1..=20 {
            let eta = k as f64 / 20.0;
            let v = sensitivity_entangled(0.8, 2.0, eta).unwrap();
            assert!(v <= prev);
            prev = v;
        }
    }
}
