//! Optimal squeezing and seed amplitude under a fixed photon budget.
//!
//! With the seed amplitude eliminated through the budget, the single-seed
//! homodyne sensitivity of both topologies reduces to one function
//! `g(K, η; r)` with `K = MN` (entangled) or `K = N` (separable). Its
//! stationarity condition is a polynomial in `u = e^{2r}`, solved here by a
//! bracketed scan, bisection, and a Newton polish.

use log::warn;

use crate::error::{Error, Result};
use crate::qcrb::{closed_form_entangled_qcrb, closed_form_separable_qcrb};
use crate::scalar::{c, Real};
use crate::sensitivity::{
    amplitude_for_budget, check_eta, max_squeezing, photons_per_sensor, sensitivity, snl, to_db,
    NetworkConfig, ProbeParams, Seeding, Topology,
};

const SCAN_POINTS: usize = 512;

/// An optimized operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimumPoint<T: Real> {
    pub r_opt: T,
    pub amp_opt: T,
    pub delta_phi_sq: T,
    /// Stationarity polynomial at the root, relative to the magnitude of its
    /// terms. `None` for searches that have no implicit equation.
    pub implicit_residual: Option<T>,
    /// Photons per sensor at the optimum minus the budget `N`.
    pub constraint_residual: T,
    /// The minimum sits on the edge of the admissible range of `r`.
    pub boundary: bool,
    /// Computed outside the regime the closed forms were derived for.
    pub unvalidated: bool,
}

/// Location and height of the maximum of `R(N)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioPeak<T: Real> {
    pub n_peak: T,
    pub r_peak: T,
    /// Entangled optimal squeezing at the peak.
    pub r_at_peak: T,
    /// `SNL / Δφ²_e` at the peak.
    pub snl_gain: T,
    pub enhancement_db_vs_snl: T,
    /// The maximum lies on an end of the search interval.
    pub boundary: bool,
}

/// Terms `(ηuQ, −4Ku², −η²(u−1)²(u³+3u−2))` of the stationarity polynomial.
fn stationarity_terms<T: Real>(u: T, k: T, eta: T) -> [T; 3] {
    let (one, two) = (T::one(), c::<T>(2.0));
    let q = two * (k - one) * (two * u - u * u) - c::<T>(6.0) * k + u.powi(4) + one;
    let um1 = u - one;
    [
        eta * u * q,
        -c::<T>(4.0) * k * u * u,
        -eta * eta * um1 * um1 * (u * u * u + c::<T>(3.0) * u - two),
    ]
}

/// Stationarity polynomial `P(u)` of `g(K, η; r)` with `u = e^{2r}`.
pub fn stationarity_polynomial<T: Real>(u: T, k: T, eta: T) -> T {
    stationarity_terms(u, k, eta)
        .iter()
        .fold(T::zero(), |a, &t| a + t)
}

/// `P(u)` divided by the sum of the magnitudes of its terms.
pub fn relative_stationarity_residual<T: Real>(u: T, k: T, eta: T) -> T {
    let terms = stationarity_terms(u, k, eta);
    let scale = terms.iter().fold(T::zero(), |a, &t| a + t.abs());
    if scale == T::zero() {
        T::zero()
    } else {
        stationarity_polynomial(u, k, eta) / scale
    }
}

fn stationarity_derivative<T: Real>(u: T, k: T, eta: T) -> T {
    let (one, two, three) = (T::one(), c::<T>(2.0), c::<T>(3.0));
    let q = two * (k - one) * (two * u - u * u) - c::<T>(6.0) * k + u.powi(4) + one;
    let dq = two * (k - one) * (two - two * u) + c::<T>(4.0) * u * u * u;
    let um1 = u - one;
    eta * (q + u * dq)
        - c::<T>(8.0) * k * u
        - eta
            * eta
            * (two * um1 * (u * u * u + three * u - two) + um1 * um1 * (three * u * u + three))
}

/// Single-seed sensitivity with the amplitude eliminated by the budget `k`
/// photons per amplifier (before loss): `(e^{-2r}+1/η−1)cosh2r / (2e^{2r}(k/η − 2sinh²r))`.
fn reduced_sensitivity<T: Real>(r: T, k: T, eta: T) -> T {
    let two = c::<T>(2.0);
    let spare = k / eta - two * r.sinh() * r.sinh();
    if spare <= T::zero() {
        return T::infinity();
    }
    let amp2 = spare / (two * r).cosh();
    ((-two * r).exp() + T::one() / eta - T::one()) / (two * amp2 * (two * r).exp())
}

/// Admissible gain interval `[1, u_max]`, `u_max + 1/u_max = 2 + 2k/η`.
fn u_max<T: Real>(k: T, eta: T) -> T {
    let cc = c::<T>(2.0) + c::<T>(2.0) * k / eta;
    (cc + (cc * cc - c::<T>(4.0)).sqrt()) * c::<T>(0.5)
}

/// Root of `P` in `[lo, hi]` given a sign change; bisection to a narrow
/// bracket, then Newton steps that never leave it.
fn polish_root<T: Real>(mut lo: T, mut hi: T, k: T, eta: T) -> T {
    let p = |u: T| stationarity_polynomial(u, k, eta);
    let mut plo = p(lo);
    for _ in 0..200 {
        let mid = (lo + hi) * c::<T>(0.5);
        if mid <= lo || mid >= hi || (hi - lo) <= T::eps() * c::<T>(64.0) * hi {
            break;
        }
        let pm = p(mid);
        if pm == T::zero() {
            return mid;
        }
        if (pm > T::zero()) == (plo > T::zero()) {
            lo = mid;
            plo = pm;
        } else {
            hi = mid;
        }
    }
    let mut u = (lo + hi) * c::<T>(0.5);
    for _ in 0..8 {
        let d = stationarity_derivative(u, k, eta);
        if d == T::zero() {
            break;
        }
        let next = u - p(u) / d;
        if !(next >= lo && next <= hi) {
            break;
        }
        if p(next).abs() >= p(u).abs() {
            break;
        }
        u = next;
    }
    u
}

/// Minimizer of `g(k, η; r)`: the stationary point with the smallest `g`.
fn solve_reduced<T: Real>(k: T, eta: T) -> Result<(T, T)> {
    let one = T::one();
    let hi = u_max(k, eta);
    // Scan uniformly in r = ½ ln u, which resolves both small and large gains.
    let log_hi = hi.ln();
    let mut roots = Vec::new();
    let mut prev_u = one;
    let mut prev_p = stationarity_polynomial(one, k, eta);
    for i in 1..=SCAN_POINTS {
        let u = if i == SCAN_POINTS {
            hi
        } else {
            (log_hi * T::from_usize_lossy(i) / T::from_usize_lossy(SCAN_POINTS)).exp()
        };
        let pu = stationarity_polynomial(u, k, eta);
        if pu == T::zero() {
            roots.push(u);
        } else if (pu > T::zero()) != (prev_p > T::zero()) && prev_p != T::zero() {
            roots.push(polish_root(prev_u, u, k, eta));
        }
        prev_u = u;
        prev_p = pu;
    }
    let best = roots
        .into_iter()
        .map(|u| {
            let r = u.ln() * c::<T>(0.5);
            (u, reduced_sensitivity(r, k, eta))
        })
        .filter(|(_, g)| g.is_finite())
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    match best {
        Some((u, _)) => Ok((
            u.ln() * c::<T>(0.5),
            relative_stationarity_residual(u, k, eta),
        )),
        None => Err(Error::NoRoot {
            lo: 0.0,
            hi: (log_hi * c::<T>(0.5)).as_f64(),
        }),
    }
}

fn finish<T: Real>(
    config: &NetworkConfig<T>,
    r: T,
    implicit_residual: Option<T>,
    boundary: bool,
) -> Result<OptimumPoint<T>> {
    let amp = amplitude_for_budget(config, r)?;
    let params = ProbeParams::new(r, amp)?;
    Ok(OptimumPoint {
        r_opt: r,
        amp_opt: amp,
        delta_phi_sq: sensitivity(config, &params)?,
        implicit_residual,
        constraint_residual: photons_per_sensor(config, &params) - config.n,
        boundary,
        unvalidated: false,
    })
}

fn check_inputs<T: Real>(n: T, m: usize, eta: T) -> Result<()> {
    check_eta(eta)?;
    if m == 0 {
        return Err(Error::InvalidArgument(
            "the network needs at least one gyroscope".into(),
        ));
    }
    if !(n > T::zero()) || !n.is_finite() {
        return Err(Error::InvalidArgument(
            "photon budget per sensor must be positive".into(),
        ));
    }
    Ok(())
}

/// Optimal single-seed entangled network with `n` photons per sensor.
pub fn solve_entangled<T: Real>(n: T, m: usize, eta: T) -> Result<OptimumPoint<T>> {
    check_inputs(n, m, eta)?;
    let config = NetworkConfig::entangled(m, eta, n)?;
    let (r, residual) = solve_reduced(T::from_usize_lossy(m) * n, eta)?;
    finish(&config, r, Some(residual), false)
}

/// Optimal single-seed separable network; the optimal gain does not depend
/// on `m`.
pub fn solve_separable<T: Real>(n: T, m: usize, eta: T) -> Result<OptimumPoint<T>> {
    check_inputs(n, m, eta)?;
    let config = NetworkConfig::separable(m, eta, n)?;
    let (r, residual) = solve_reduced(n, eta)?;
    finish(&config, r, Some(residual), false)
}

/// Homodyne sensitivity of `config` at gain `r`, amplitude fixed by the budget.
pub fn constrained_sensitivity<T: Real>(config: &NetworkConfig<T>, r: T) -> Result<T> {
    let amp = amplitude_for_budget(config, r)?;
    sensitivity(config, &ProbeParams::new(r, amp)?)
}

/// Dispatches to the appropriate search for the configuration's seeding.
pub fn optimize<T: Real>(config: &NetworkConfig<T>) -> Result<OptimumPoint<T>> {
    match (config.seeding, config.topology) {
        (Seeding::Single, Topology::Entangled) => solve_entangled(config.n, config.m, config.eta),
        (Seeding::Single, Topology::Separable) => solve_separable(config.n, config.m, config.eta),
        (Seeding::Double, _) => optimize_double_seed(config),
    }
}

/// Golden-section search of `f` on `[lo, hi]` after a coarse scan that picks
/// the basin of the global minimum. Returns `(x, f(x), on_boundary)`.
pub(crate) fn minimize_scalar<T: Real>(f: impl Fn(T) -> T, lo: T, hi: T, tol: T) -> (T, T, bool) {
    let n = 256usize;
    let step = (hi - lo) / T::from_usize_lossy(n);
    let xs: Vec<T> = (0..=n)
        .map(|i| lo + step * T::from_usize_lossy(i))
        .collect();
    let mut best = 0usize;
    let mut best_f = T::infinity();
    for (i, &x) in xs.iter().enumerate() {
        let fx = f(x);
        if fx < best_f {
            best_f = fx;
            best = i;
        }
    }
    let mut a = xs[best.saturating_sub(1)];
    let mut b = xs[(best + 1).min(n)];
    let inv_phi = (c::<T>(5.0).sqrt() - T::one()) * c::<T>(0.5);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while (b - a) > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
        if b - a <= T::eps() * c::<T>(4.0) * (a.abs() + b.abs()) {
            break;
        }
    }
    let mut x = (a + b) * c::<T>(0.5);
    let mut fx = f(x);
    // Keep the scan's value if it beats the refined one (flat or kinked ends).
    if best_f < fx {
        x = xs[best];
        fx = best_f;
    }
    let edge = tol * c::<T>(10.0);
    let boundary = (x - lo) <= edge || (hi - x) <= edge;
    (x, fx, boundary)
}

/// Optimal double-seeded configuration (golden-section search; no implicit
/// equation is available).
pub fn optimize_double_seed<T: Real>(config: &NetworkConfig<T>) -> Result<OptimumPoint<T>> {
    config.validate()?;
    let config = config.with_seeding(Seeding::Double);
    let r_max = max_squeezing(&config);
    let f = |r: T| constrained_sensitivity(&config, r).unwrap_or_else(|_| T::infinity());
    let (r, _, boundary) = minimize_scalar(f, T::zero(), r_max, c::<T>(1e-10) * (T::one() + r_max));
    finish(&config, r, None, boundary)
}

/// Quantum Cramér-Rao bound of `config` at gain `r` with the amplitude fixed
/// by the single-seed budget.
pub fn constrained_qcrb<T: Real>(config: &NetworkConfig<T>, r: T) -> Result<T> {
    let amp = amplitude_for_budget(&config.with_seeding(Seeding::Single), r)?;
    match config.topology {
        Topology::Entangled => closed_form_entangled_qcrb(r, amp, config.eta),
        Topology::Separable => closed_form_separable_qcrb(r, amp, config.eta),
    }
}

/// Minimizes the closed-form two-sensor QCRB over `r` under the photon
/// budget. Other sensor counts are computed but flagged as unvalidated.
pub fn optimize_qcrb<T: Real>(config: &NetworkConfig<T>) -> Result<OptimumPoint<T>> {
    config.validate()?;
    let config = config.with_seeding(Seeding::Single);
    let unvalidated = config.m != 2;
    if unvalidated {
        warn!(
            "QCRB closed forms are derived for two sensors; M = {} is unvalidated",
            config.m
        );
    }
    let r_max = max_squeezing(&config);
    let f = |r: T| constrained_qcrb(&config, r).unwrap_or_else(|_| T::infinity());
    let (r, best, boundary) = minimize_scalar(&f, T::zero(), r_max, c::<T>(1e-9));
    if !boundary {
        let h = c::<T>(1e-5) * (T::one() + r);
        let slack = best * c::<T>(1e-12);
        if f(r - h) + slack < best || f(r + h) + slack < best {
            return Err(Error::NumericalDomain(format!(
                "QCRB search did not settle at a local minimum near r = {}",
                r.as_f64()
            )));
        }
    }
    let amp = amplitude_for_budget(&config, r)?;
    let params = ProbeParams::new(r, amp)?;
    Ok(OptimumPoint {
        r_opt: r,
        amp_opt: amp,
        delta_phi_sq: best,
        implicit_residual: None,
        constraint_residual: photons_per_sensor(&config, &params) - config.n,
        boundary,
        unvalidated,
    })
}

/// `R(N) = Δφ²_s / Δφ²_e` with both topologies optimized.
pub fn optimized_ratio<T: Real>(n: T, m: usize, eta: T) -> Result<T> {
    let e = solve_entangled(n, m, eta)?;
    let s = solve_separable(n, m, eta)?;
    Ok(s.delta_phi_sq / e.delta_phi_sq)
}

/// Maximizes `R(N)` over `[n_lo, n_hi]`. At `η = 1` the ratio grows without
/// an interior maximum, which is reported through the `boundary` flag.
pub fn find_ratio_peak<T: Real>(m: usize, eta: T, n_lo: T, n_hi: T) -> Result<RatioPeak<T>> {
    check_inputs(n_lo, m, eta)?;
    if !(n_hi > n_lo) {
        return Err(Error::InvalidArgument(
            "empty photon-number interval".into(),
        ));
    }
    // Search in ln N so that the coarse scan is even across decades.
    let f = |x: T| -optimized_ratio(x.exp(), m, eta).unwrap_or_else(|_| T::neg_infinity());
    let (x, neg_r, _) = minimize_scalar(f, n_lo.ln(), n_hi.ln(), c::<T>(1e-9));
    let n_peak = x.exp();
    let edge = c::<T>(1e-6);
    let boundary = (n_peak / n_lo).ln() <= edge || (n_hi / n_peak).ln() <= edge;
    if boundary {
        warn!(
            "ratio maximum lies on the search boundary at N = {}",
            n_peak.as_f64()
        );
    }
    let e = solve_entangled(n_peak, m, eta)?;
    let gain = snl(m, n_peak)? / e.delta_phi_sq;
    Ok(RatioPeak {
        n_peak,
        r_peak: -neg_r,
        r_at_peak: e.r_opt,
        snl_gain: gain,
        enhancement_db_vs_snl: to_db(gain)?,
        boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lossless_entangled_root() {
        let (n, m) = (5.0f64, 3usize);
        let opt = solve_entangled(n, m, 1.0).unwrap();
        let k = m as f64 * n;
        let u = (2.0 * opt.r_opt).exp();
        assert!(opt.implicit_residual.unwrap().abs() < 1e-12);
        let alpha = (2.0 * u * (k - (2.0 * opt.r_opt).cosh() + 1.0) / (u * u + 1.0)).sqrt();
        assert!(((opt.amp_opt - alpha) / alpha).abs() < 1e-12);
        assert!(opt.constraint_residual.abs() < 1e-12 * n);
    }

    #[test]
    fn paper_operating_point() {
        let opt = solve_entangled(2.53f64, 4, 0.95).unwrap();
        assert!((opt.r_opt - 1.13).abs() < 0.01);
        let gain = snl(4, 2.53).unwrap() / opt.delta_phi_sq;
        assert!((to_db(gain).unwrap() - 9.28).abs() < 0.05);
    }

    #[test]
    fn separable_gain_ignores_sensor_count() {
        let a = solve_separable(20.0f64, 4, 0.9).unwrap();
        let b = solve_entangled(20.0f64, 1, 0.9).unwrap();
        assert!((a.r_opt - b.r_opt).abs() < 1e-12);
        assert!(a.implicit_residual.unwrap().abs() < 1e-9);
        assert!(a.constraint_residual.abs() < 1e-9 * 20.0);
        let c1 = solve_separable(20.0f64, 1, 0.9).unwrap();
        assert!((c1.delta_phi_sq / a.delta_phi_sq - 4.0).abs() < 1e-12);
    }

    #[test]
    fn optimum_beats_its_neighbours_and_the_snl() {
        for &(n, m, eta) in &[
            (1.0, 2, 0.9),
            (20.0, 4, 0.95),
            (100.0, 10, 1.0),
            (0.01, 1, 0.5),
        ] {
            for topology in [Topology::Entangled, Topology::Separable] {
                let cfg = NetworkConfig::new(m, eta, n, topology, Seeding::Single).unwrap();
                let opt = optimize(&cfg).unwrap();
                for s in [0.99, 1.01] {
                    let v = constrained_sensitivity(&cfg, opt.r_opt * s).unwrap();
                    assert!(v >= opt.delta_phi_sq * (1.0 - 1e-10));
                }
                assert!(opt.delta_phi_sq <= constrained_sensitivity(&cfg, 0.0).unwrap());
            }
        }
    }

    #[test]
    fn scan_agrees_with_direct_minimization() {
        let cfg = NetworkConfig::entangled(4, 0.9, 7.0f64).unwrap();
        let opt = optimize(&cfg).unwrap();
        let f = |r: f64| constrained_sensitivity(&cfg, r).unwrap_or(f64::INFINITY);
        let (r, _, _) = minimize_scalar(f, 0.0, max_squeezing(&cfg), 1e-12);
        assert!((r - opt.r_opt).abs() < 1e-5);
    }

    #[test]
    fn double_seed_optimum() {
        let cfg =
            NetworkConfig::new(4, 0.95, 20.0f64, Topology::Entangled, Seeding::Double).unwrap();
        let opt = optimize(&cfg).unwrap();
        assert!(opt.implicit_residual.is_none());
        assert!(opt.constraint_residual.abs() < 1e-9 * 20.0);
        assert!(!opt.boundary);
        let single = optimize(&cfg.with_seeding(Seeding::Single)).unwrap();
        assert!(opt.delta_phi_sq < single.delta_phi_sq);
    }

    #[test]
    fn qcrb_optimum_is_monotone_in_budget() {
        let a = optimize_qcrb(&NetworkConfig::entangled(2, 0.95, 20.0f64).unwrap()).unwrap();
        let b = optimize_qcrb(&NetworkConfig::entangled(2, 0.95, 40.0f64).unwrap()).unwrap();
        assert!(b.delta_phi_sq < a.delta_phi_sq);
        let s = optimize_qcrb(&NetworkConfig::separable(2, 0.95, 20.0f64).unwrap()).unwrap();
        assert!(a.delta_phi_sq < s.delta_phi_sq);
        assert!(!a.unvalidated);
        let big = optimize_qcrb(&NetworkConfig::entangled(3, 0.95, 20.0f64).unwrap()).unwrap();
        assert!(big.unvalidated);
    }

    #[test]
    fn ratio_peaks() {
        let p = find_ratio_peak(4, 0.95f64, 0.1, 100.0).unwrap();
        assert!((p.n_peak - 2.53).abs() < 0.05);
        assert!((p.r_peak - 2.21).abs() < 0.02);
        assert!(!p.boundary);
        let q = find_ratio_peak(4, 0.99f64, 0.1, 100.0).unwrap();
        assert!(q.n_peak > p.n_peak);
        let lossless = find_ratio_peak(4, 1.0f64, 0.1, 100.0).unwrap();
        assert!(lossless.boundary);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(solve_entangled(0.0f64, 4, 0.9).is_err());
        assert!(solve_entangled(1.0f64, 0, 0.9).is_err());
        assert!(solve_separable(1.0f64, 4, 1.5).is_err());
        assert!(find_ratio_peak(4, 0.9f64, 5.0, 1.0).is_err());
    }
}
