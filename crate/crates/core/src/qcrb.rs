//! Quantum Fisher information and Cramér-Rao bounds for two gyroscopes.
//!
//! The output state of each gyroscope is described by its sum mode
//! `c_j = (a_j + b_j)/√2`, which carries the coherent signal and rotates by
//! the Sagnac phase. The Fisher matrix is evaluated through the symmetric
//! logarithmic derivative expanded in the Williamson frame of the covariance.

use log::warn;
use nalgebra::{DMatrix, DVector, Matrix2};

use crate::error::{invalid, Error, Result};
use crate::gaussian::{williamson, GaussianState, SymplecticForm};
use crate::optimizer::{optimize_qcrb, solve_entangled, solve_separable};
use crate::pipeline::network_state;
use crate::scalar::{c, Real};
use crate::sensitivity::{check_eta, NetworkConfig, ProbeParams};

/// Largest phase for which the first-order moments are trusted.
pub const SMALL_ANGLE_LIMIT: f64 = 0.05;
/// Largest thermal occupation accepted at the beamsplitter vacuum ports.
pub const MAX_THERMAL: f64 = 1e-4;
/// Default thermal occupation used to regularize pure modes.
pub const DEFAULT_THERMAL: f64 = 1e-6;

/// Denominators `v_j v_k ∓ 1` below this magnitude are treated as singular.
const SINGULAR_DENOMINATOR: f64 = 1e-12;
/// Projections below this (relative to the largest) are roundoff.
const NEGLIGIBLE_PROJECTION: f64 = 1e-10;

/// Operating point of the two-gyroscope entangled network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamPoint<T: Real> {
    pub phi1: T,
    pub phi2: T,
    pub r: T,
    pub alpha: T,
    pub eta: T,
    pub epsilon_thermal: T,
}

impl<T: Real> ParamPoint<T> {
    /// Zero phases and the default regularization.
    pub fn new(r: T, alpha: T, eta: T) -> Result<Self> {
        let p = Self {
            phi1: T::zero(),
            phi2: T::zero(),
            r,
            alpha,
            eta,
            epsilon_thermal: c(DEFAULT_THERMAL),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_phases(self, phi1: T, phi2: T) -> Self {
        Self { phi1, phi2, ..self }
    }

    pub fn with_thermal(self, epsilon_thermal: T) -> Self {
        Self {
            epsilon_thermal,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_eta(self.eta)?;
        ProbeParams::new(self.r, self.alpha)?;
        if !(self.epsilon_thermal >= T::zero() && self.epsilon_thermal <= c(MAX_THERMAL)) {
            return invalid(format!(
                "thermal regularization {} outside [0, {MAX_THERMAL}]",
                self.epsilon_thermal.as_f64()
            ));
        }
        if !(self.phi1.is_finite() && self.phi2.is_finite()) {
            return invalid("phases must be finite");
        }
        let limit = c::<T>(SMALL_ANGLE_LIMIT);
        if self.phi1.abs() > limit || self.phi2.abs() > limit {
            warn!(
                "phases ({}, {}) exceed the small-angle regime |φ| ≤ {SMALL_ANGLE_LIMIT}",
                self.phi1.as_f64(),
                self.phi2.as_f64()
            );
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QfiResult<T: Real> {
    /// Fisher matrix for `(φ₁, φ₂)`.
    pub f: Matrix2<T>,
    /// `1/F_φ` with `F_φ = Σ_ij F_ij`, the information on the common phase.
    pub qcrb_avg_phase: T,
    /// `wᵀF⁻¹w` with `w = (½, ½)`, treating the phase difference as a
    /// nuisance parameter; `None` if `F` is singular.
    pub qcrb_weighted: Option<T>,
    pub symplectic_eigenvalues: Vec<T>,
    /// Thermal noise was injected at the vacuum ports.
    pub regularized: bool,
}

/// Sum-mode state of both gyroscopes, built from the exact network.
pub fn build_output_state<T: Real>(p: &ParamPoint<T>) -> Result<GaussianState<T>> {
    p.validate()?;
    let config = NetworkConfig::entangled(2, p.eta, T::one())?;
    let params = ProbeParams::new(p.r, p.alpha)?;
    let full = network_state(&config, &params, &[p.phi1, p.phi2], p.epsilon_thermal)?;
    full.balanced_beamsplitter(0, 1)?
        .balanced_beamsplitter(2, 3)?
        .reduce(&[0, 2])
}

/// `p = (η/2)(e^{2r}−1)`, `q = (η/2)(e^{−2r}−1)`.
pub fn pq<T: Real>(r: T, eta: T) -> (T, T) {
    let half_eta = eta * c::<T>(0.5);
    let two_r = c::<T>(2.0) * r;
    (
        half_eta * (two_r.exp() - T::one()),
        half_eta * ((-two_r).exp() - T::one()),
    )
}

/// First-order (in the phases) moments of the sum modes.
pub fn linearized_moments<T: Real>(p: &ParamPoint<T>) -> (DVector<T>, DMatrix<T>) {
    let amp = (p.eta * c::<T>(0.5)).sqrt() * p.r.exp() * p.alpha;
    let d = DVector::from_vec(vec![
        amp * p.phi1.cos(),
        -amp * p.phi1.sin(),
        amp * p.phi2.cos(),
        -amp * p.phi2.sin(),
    ]);
    let (pp, q) = pq(p.r, p.eta);
    let (f1, f2) = (p.phi1, p.phi2);
    let one = T::one();
    #[rustfmt::skip]
    let v = DMatrix::from_row_slice(4, 4, &[
        pp + one,         (q - pp) * f1,    pp,               q * f1 - pp * f2,
        (q - pp) * f1,    q + one,          q * f2 - pp * f1, q,
        pp,               q * f2 - pp * f1, pp + one,         (q - pp) * f2,
        q * f1 - pp * f2, q,                (q - pp) * f2,    q + one,
    ]);
    (d, v)
}

/// Generator of the Sagnac rotation of sensor `i`'s sum mode.
fn rotation_generator<T: Real>(i: usize) -> DMatrix<T> {
    let mut g = DMatrix::zeros(4, 4);
    g[(2 * i, 2 * i + 1)] = T::one();
    g[(2 * i + 1, 2 * i)] = -T::one();
    g
}

/// Phase derivatives of the moments: the sum mode of sensor `i` turns by
/// `R(φ_i)`, so `∂_i V = G_i V + V G_iᵀ` and `∂_i d = G_i d`.
pub fn analytic_derivatives<T: Real>(
    state: &GaussianState<T>,
) -> (Vec<DVector<T>>, Vec<DMatrix<T>>) {
    let (d, v) = (state.displacement(), state.covariance());
    (0..2)
        .map(|i| {
            let g = rotation_generator::<T>(i);
            let gv = &g * v;
            (&g * d, &gv + gv.transpose())
        })
        .unzip()
}

/// Central-difference phase derivatives of the exact state.
pub fn finite_difference_derivatives<T: Real>(
    p: &ParamPoint<T>,
    step: T,
) -> Result<(Vec<DVector<T>>, Vec<DMatrix<T>>)> {
    let mut dds = Vec::with_capacity(2);
    let mut dvs = Vec::with_capacity(2);
    for i in 0..2 {
        let shift = |s: T| {
            if i == 0 {
                p.with_phases(p.phi1 + s, p.phi2)
            } else {
                p.with_phases(p.phi1, p.phi2 + s)
            }
        };
        let up = build_output_state(&shift(step))?;
        let down = build_output_state(&shift(-step))?;
        let scale = T::one() / (c::<T>(2.0) * step);
        dds.push((up.displacement() - down.displacement()) * scale);
        dvs.push((up.covariance() - down.covariance()) * scale);
    }
    Ok((dds, dvs))
}

/// Orthonormal 2×2 basis `{J, σz, I, σx}/√2`, indexed by `l`; conjugation by
/// the symplectic form multiplies element `l` by `−(−1)^l`.
fn pauli_basis<T: Real>() -> [Matrix2<T>; 4] {
    let h = T::one() / c::<T>(2.0).sqrt();
    let (o, z) = (h, T::zero());
    [
        Matrix2::new(z, o, -o, z),
        Matrix2::new(o, z, z, -o),
        Matrix2::new(o, z, z, o),
        Matrix2::new(z, o, o, z),
    ]
}

/// Quadratic part `A` of the symmetric logarithmic derivative, solving
/// `∂V = V A V + Ω A Ω`, expanded in the Williamson frame `S V Sᵀ = W`.
pub fn sld_quadratic<T: Real>(s: &DMatrix<T>, nus: &[T], dv: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = nus.len();
    let b = s * dv * s.transpose();
    let scale = b
        .iter()
        .fold(T::zero(), |a, &x| a.max(x.abs()))
        .max(T::one());
    let basis = pauli_basis::<T>();
    let mut lt = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            let block = b.fixed_view::<2, 2>(2 * j, 2 * k).into_owned();
            let mut acc = Matrix2::zeros();
            for (l, m) in basis.iter().enumerate() {
                let a = m.component_mul(&block).sum();
                if a.abs() <= c::<T>(NEGLIGIBLE_PROJECTION) * scale {
                    continue;
                }
                let sign = if l % 2 == 0 { T::one() } else { -T::one() };
                let den = nus[j] * nus[k] - sign;
                if den.abs() < c::<T>(SINGULAR_DENOMINATOR) {
                    return Err(Error::Singularity {
                        j,
                        k,
                        l,
                        denominator: den.as_f64(),
                    });
                }
                acc += m * (a / den);
            }
            lt.fixed_view_mut::<2, 2>(2 * j, 2 * k).copy_from(&acc);
        }
    }
    Ok(s.transpose() * lt * s)
}

/// Fisher matrix of a Gaussian family given its moments and derivatives:
/// `F_ij = ½ tr(∂_i V A_j) + 2 ∂_i dᵀ V⁻¹ ∂_j d`.
pub fn fisher_from_moments<T: Real>(
    v: &DMatrix<T>,
    dds: &[DVector<T>],
    dvs: &[DMatrix<T>],
) -> Result<(DMatrix<T>, Vec<T>)> {
    if dds.len() != dvs.len() {
        return invalid("mismatched derivative lists");
    }
    let wil = williamson(v)?;
    let v_inv = v
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NumericalDomain("covariance is not positive definite".into()))?
        .inverse();
    let sld: Vec<DMatrix<T>> = dvs
        .iter()
        .map(|dv| sld_quadratic(&wil.s, &wil.symplectic_eigenvalues, dv))
        .collect::<Result<_>>()?;
    let k = dds.len();
    let mut f = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let quad = (&dvs[i] * &sld[j]).trace() * c::<T>(0.5);
            let lin = c::<T>(2.0) * dds[i].dot(&(&v_inv * &dds[j]));
            f[(i, j)] = quad + lin;
        }
    }
    let f = (&f + f.transpose()) * c::<T>(0.5);
    Ok((f, wil.symplectic_eigenvalues))
}

fn assemble<T: Real>(f: DMatrix<T>, nus: Vec<T>, regularized: bool) -> Result<QfiResult<T>> {
    let f = Matrix2::new(f[(0, 0)], f[(0, 1)], f[(1, 0)], f[(1, 1)]);
    let total = f.sum();
    if !(total > T::zero()) {
        return Err(Error::DegenerateProbe(
            "the state carries no information on the common phase".into(),
        ));
    }
    let w = nalgebra::Vector2::new(c::<T>(0.5), c::<T>(0.5));
    let qcrb_weighted = f.try_inverse().map(|inv| w.dot(&(inv * w)));
    Ok(QfiResult {
        f,
        qcrb_avg_phase: T::one() / total,
        qcrb_weighted,
        symplectic_eigenvalues: nus,
        regularized,
    })
}

/// Fisher matrix of the two-gyroscope output with analytic derivatives.
pub fn qfi_matrix<T: Real>(p: &ParamPoint<T>) -> Result<QfiResult<T>> {
    let state = build_output_state(p)?;
    let (dds, dvs) = analytic_derivatives(&state);
    let (f, nus) = fisher_from_moments(state.covariance(), &dds, &dvs)?;
    assemble(f, nus, p.epsilon_thermal > T::zero())
}

/// Same as [`qfi_matrix`] with finite-difference derivatives.
pub fn qfi_matrix_finite_difference<T: Real>(p: &ParamPoint<T>, step: T) -> Result<QfiResult<T>> {
    let state = build_output_state(p)?;
    let (dds, dvs) = finite_difference_derivatives(p, step)?;
    let (f, nus) = fisher_from_moments(state.covariance(), &dds, &dvs)?;
    assemble(f, nus, p.epsilon_thermal > T::zero())
}

/// `(1−η+ηe^{2r}, 1−η+ηe^{−2r})`: quadrature noise of the anti-squeezed and
/// squeezed joint modes after loss.
fn noise_pair<T: Real>(r: T, eta: T) -> (T, T) {
    let one = T::one();
    let two_r = c::<T>(2.0) * r;
    (
        one - eta + eta * two_r.exp(),
        one - eta + eta * (-two_r).exp(),
    )
}

fn guard<T: Real>(value: T, what: &str) -> Result<T> {
    if value.is_finite() && value > T::zero() {
        Ok(value)
    } else {
        Err(Error::DegenerateProbe(format!(
            "{what} has a vanishing denominator"
        )))
    }
}

/// Closed-form entangled QCRB
/// `AB / (2η[e^{2r}α²A + η sinh²2r])`.
pub fn closed_form_entangled_qcrb<T: Real>(r: T, alpha: T, eta: T) -> Result<T> {
    check_eta(eta)?;
    let (a, b) = noise_pair(r, eta);
    let s2 = (c::<T>(2.0) * r).sinh();
    let den = c::<T>(2.0) * eta * ((c::<T>(2.0) * r).exp() * alpha * alpha * a + eta * s2 * s2);
    guard(a * b / den, "entangled QCRB")
}

/// Lossless entangled QCRB `1/(2[e^{4r}α² + sinh²2r])`.
pub fn lossless_entangled_qcrb<T: Real>(r: T, alpha: T) -> Result<T> {
    let s2 = (c::<T>(2.0) * r).sinh();
    let den = c::<T>(2.0) * ((c::<T>(4.0) * r).exp() * alpha * alpha + s2 * s2);
    guard(T::one() / den, "entangled QCRB")
}

/// Entangled QCRB obtained from the exact Fisher information of the
/// sum-mode state, `1/[2ηα²e^{2r}/B + 4η² sinh²2r/(1+AB)]`. Coincides with
/// [`closed_form_entangled_qcrb`] at `η = 1` or `r = 0`.
pub fn exact_entangled_qcrb<T: Real>(r: T, alpha: T, eta: T) -> Result<T> {
    check_eta(eta)?;
    let (a, b) = noise_pair(r, eta);
    let two = c::<T>(2.0);
    let s2 = (two * r).sinh();
    let info = two * eta * alpha * alpha * (two * r).exp() / b
        + c::<T>(4.0) * eta * eta * s2 * s2 / (T::one() + a * b);
    guard(T::one() / info, "entangled QCRB")
}

/// Closed-form separable QCRB for two gyroscopes,
/// `(1/4η)[e^{2r}β²/B + 2η sinh²2r/(AB+1)]⁻¹`.
pub fn closed_form_separable_qcrb<T: Real>(r: T, beta: T, eta: T) -> Result<T> {
    check_eta(eta)?;
    let (a, b) = noise_pair(r, eta);
    let s2 = (c::<T>(2.0) * r).sinh();
    let bracket = (c::<T>(2.0) * r).exp() * beta * beta / b
        + c::<T>(2.0) * eta * s2 * s2 / (a * b + T::one());
    guard(T::one() / (c::<T>(4.0) * eta * bracket), "separable QCRB")
}

/// Lossless separable QCRB `1/(4[e^{4r}β² + sinh²2r])`.
pub fn lossless_separable_qcrb<T: Real>(r: T, beta: T) -> Result<T> {
    let s2 = (c::<T>(2.0) * r).sinh();
    let den = c::<T>(4.0) * ((c::<T>(4.0) * r).exp() * beta * beta + s2 * s2);
    guard(T::one() / den, "separable QCRB")
}

/// One row of the four-way comparison at fixed photon budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderingRow<T: Real> {
    pub n: T,
    pub entangled_qcrb: T,
    pub entangled: T,
    pub separable_qcrb: T,
    pub separable: T,
    /// `Δφ²_{e,cr} ≤ Δφ²_e ≤ Δφ²_{s,cr} ≤ Δφ²_s`.
    pub ordered: bool,
}

/// Optimized QCRBs and homodyne sensitivities of both two-sensor networks
/// over a photon-budget grid.
pub fn qcrb_ordering_sweep<T: Real>(eta: T, n_grid: &[T]) -> Result<Vec<OrderingRow<T>>> {
    n_grid
        .iter()
        .map(|&n| {
            let ecr = optimize_qcrb(&NetworkConfig::entangled(2, eta, n)?)?.delta_phi_sq;
            let scr = optimize_qcrb(&NetworkConfig::separable(2, eta, n)?)?.delta_phi_sq;
            let e = solve_entangled(n, 2, eta)?.delta_phi_sq;
            let s = solve_separable(n, 2, eta)?.delta_phi_sq;
            let ordered = ecr <= e && e <= scr && scr <= s;
            if !ordered {
                warn!("sensitivity ordering violated at N = {}", n.as_f64());
            }
            Ok(OrderingRow {
                n,
                entangled_qcrb: ecr,
                entangled: e,
                separable_qcrb: scr,
                separable: s,
                ordered,
            })
        })
        .collect()
}

/// Symplectic form of the two-mode sum state, for callers assembling their
/// own moments.
pub fn two_mode_form<T: Real>() -> DMatrix<T> {
    SymplecticForm::<T>::new(2).into_matrix()
}
