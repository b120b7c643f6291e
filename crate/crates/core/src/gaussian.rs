//! Multimode Gaussian states and the symplectic maps of the gyroscope network.
//!
//! Quadratures are `X = (a + a†)/√2`, `Y = -i(a - a†)/√2`, ordered
//! `(x₀, y₀, x₁, y₁, …)`. The covariance matrix is the symmetrized
//! second moment `V_jk = ⟨{Δr_j, Δr_k}⟩`, so the vacuum has `V = I` and a
//! single quadrature of the vacuum has variance ½.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, Error, Result};
use crate::scalar::{c, Real};

/// Commutation form `Ω = ⊕ [[0, 1], [-1, 0]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm<T: Real> {
    omega: DMatrix<T>,
}

impl<T: Real> SymplecticForm<T> {
    pub fn new(num_modes: usize) -> Self {
        let n = 2 * num_modes;
        let mut omega = DMatrix::zeros(n, n);
        for k in 0..num_modes {
            omega[(2 * k, 2 * k + 1)] = T::one();
            omega[(2 * k + 1, 2 * k)] = -T::one();
        }
        Self { omega }
    }

    pub fn num_modes(&self) -> usize {
        self.omega.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.omega
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.omega
    }

    /// Whether `S Ω Sᵀ = Ω` entrywise to `tol`.
    pub fn preserved_by(&self, s: &DMatrix<T>, tol: T) -> bool {
        let image = s * &self.omega * s.transpose();
        max_abs_diff(&image, &self.omega) <= tol
    }
}

/// Williamson normal form `S V Sᵀ = W` with `S` symplectic.
#[derive(Debug, Clone)]
pub struct WilliamsonResult<T: Real> {
    /// `diag(v₁, v₁, v₂, v₂, …)`, ascending.
    pub w: DMatrix<T>,
    pub s: DMatrix<T>,
    /// One entry per mode, ascending.
    pub symplectic_eigenvalues: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState<T: Real> {
    d: DVector<T>,
    v: DMatrix<T>,
}

impl<T: Real> GaussianState<T> {
    pub fn vacuum(num_modes: usize) -> Result<Self> {
        if num_modes == 0 {
            return invalid("a Gaussian state needs at least one mode");
        }
        let n = 2 * num_modes;
        Ok(Self {
            d: DVector::zeros(n),
            v: DMatrix::identity(n, n),
        })
    }

    /// Product of thermal states with `nbar` mean photons per mode.
    pub fn thermal(num_modes: usize, nbar: T) -> Result<Self> {
        if nbar < T::zero() {
            return invalid("thermal photon number must be nonnegative");
        }
        let mut state = Self::vacuum(num_modes)?;
        state.v *= T::one() + c::<T>(2.0) * nbar;
        Ok(state)
    }

    /// Builds a state from raw moments; `v` must be symmetric.
    pub fn from_moments(d: DVector<T>, v: DMatrix<T>) -> Result<Self> {
        if d.len() == 0 || d.len() % 2 != 0 {
            return invalid(format!(
                "displacement length {} is not a positive even number",
                d.len()
            ));
        }
        if v.nrows() != d.len() || v.ncols() != d.len() {
            return invalid(format!(
                "covariance is {}x{} but displacement has length {}",
                v.nrows(),
                v.ncols(),
                d.len()
            ));
        }
        let scale = v.amax().max(T::one());
        let tol = c::<T>(1e-12).max(c::<T>(64.0) * T::eps()) * scale;
        if max_abs_diff(&v, &v.transpose()) > tol {
            return invalid("covariance matrix is not symmetric");
        }
        let v = (&v + v.transpose()) * c::<T>(0.5);
        Ok(Self { d, v })
    }

    pub fn num_modes(&self) -> usize {
        self.d.len() / 2
    }

    pub fn displacement(&self) -> &DVector<T> {
        &self.d
    }

    pub fn covariance(&self) -> &DMatrix<T> {
        &self.v
    }

    pub fn into_moments(self) -> (DVector<T>, DMatrix<T>) {
        (self.d, self.v)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.num_modes() {
            return invalid(format!(
                "mode {mode} out of range for {} modes",
                self.num_modes()
            ));
        }
        Ok(())
    }

    fn check_pair(&self, a: usize, b: usize) -> Result<()> {
        self.check_mode(a)?;
        self.check_mode(b)?;
        if a == b {
            return invalid(format!(
                "two-mode operation needs distinct modes, got {a} twice"
            ));
        }
        Ok(())
    }

    /// Applies a symplectic matrix acting on the listed modes (in order),
    /// identity elsewhere.
    pub fn apply_local_symplectic(&self, modes: &[usize], local: &DMatrix<T>) -> Result<Self> {
        if local.nrows() != 2 * modes.len() || local.ncols() != 2 * modes.len() {
            return invalid("local symplectic matrix does not match the mode list");
        }
        for (i, &m) in modes.iter().enumerate() {
            self.check_mode(m)?;
            if modes[..i].contains(&m) {
                return invalid(format!("mode {m} listed twice"));
            }
        }
        let n = self.d.len();
        let mut s = DMatrix::identity(n, n);
        for (i, &mi) in modes.iter().enumerate() {
            for (k, &mk) in modes.iter().enumerate() {
                for p in 0..2 {
                    for q in 0..2 {
                        s[(2 * mi + p, 2 * mk + q)] = local[(2 * i + p, 2 * k + q)];
                    }
                }
            }
        }
        Ok(self.apply_symplectic(&s))
    }

    /// `d → S d`, `V → S V Sᵀ` for a full-size matrix.
    pub fn apply_symplectic(&self, s: &DMatrix<T>) -> Self {
        let d = s * &self.d;
        let v = s * &self.v * s.transpose();
        let v = (&v + v.transpose()) * c::<T>(0.5);
        Self { d, v }
    }

    /// Two-mode squeezer `a → a cosh r + b† sinh r`, `b → b cosh r + a† sinh r`.
    pub fn two_mode_squeeze(&self, mode_a: usize, mode_b: usize, r: T) -> Result<Self> {
        self.check_pair(mode_a, mode_b)?;
        if !r.is_finite() {
            return invalid("squeezing parameter must be finite");
        }
        let (ch, sh) = (r.cosh(), r.sinh());
        let z = T::zero();
        #[rustfmt::skip]
        let local = DMatrix::from_row_slice(4, 4, &[
            ch, z,   sh,  z,
            z,  ch,  z,  -sh,
            sh, z,   ch,  z,
            z, -sh,  z,   ch,
        ]);
        self.apply_local_symplectic(&[mode_a, mode_b], &local)
    }

    /// Coherent displacement with a real amplitude, `⟨a⟩ += amplitude`.
    pub fn displace(&self, mode: usize, amplitude: T) -> Result<Self> {
        self.check_mode(mode)?;
        if amplitude < T::zero() || !amplitude.is_finite() {
            return invalid("seed amplitude must be finite and nonnegative");
        }
        let mut out = self.clone();
        out.d[2 * mode] += c::<T>(2.0).sqrt() * amplitude;
        Ok(out)
    }

    /// Replaces one mode by a thermal state with `nbar` photons, removing its
    /// correlations with the rest. Used to model weakly populated input ports.
    pub fn prepare_thermal(&self, mode: usize, nbar: T) -> Result<Self> {
        self.check_mode(mode)?;
        if nbar < T::zero() {
            return invalid("thermal photon number must be nonnegative");
        }
        let mut out = self.clone();
        let n = self.d.len();
        for idx in [2 * mode, 2 * mode + 1] {
            out.d[idx] = T::zero();
            for k in 0..n {
                out.v[(idx, k)] = T::zero();
                out.v[(k, idx)] = T::zero();
            }
            out.v[(idx, idx)] = T::one() + c::<T>(2.0) * nbar;
        }
        Ok(out)
    }

    /// Lossless symmetric network: port `input_mode` is split evenly over
    /// `output_modes`. Realized by the Householder reflection whose first
    /// column is `(1/√M, …, 1/√M)`; the remaining ports are the other listed
    /// modes in order.
    pub fn symmetric_bs_network(&self, input_mode: usize, output_modes: &[usize]) -> Result<Self> {
        let m = output_modes.len();
        if m == 0 {
            return invalid("beamsplitter network needs at least one output mode");
        }
        for (i, &o) in output_modes.iter().enumerate() {
            self.check_mode(o)?;
            if output_modes[..i].contains(&o) {
                return invalid(format!("mode {o} repeated in beamsplitter network"));
            }
        }
        if !output_modes.contains(&input_mode) {
            return invalid(format!(
                "input mode {input_mode} is not one of the network ports"
            ));
        }
        if m == 1 {
            return Ok(self.clone());
        }
        let ports: Vec<usize> = std::iter::once(input_mode)
            .chain(output_modes.iter().copied().filter(|&o| o != input_mode))
            .collect();
        let h = uniform_householder::<T>(m);

        let n = self.d.len();
        let mut s = DMatrix::zeros(n, n);
        let mut touched = vec![false; self.num_modes()];
        for (i, &out_mode) in output_modes.iter().enumerate() {
            touched[out_mode] = true;
            for (k, &in_mode) in ports.iter().enumerate() {
                s[(2 * out_mode, 2 * in_mode)] = h[(i, k)];
                s[(2 * out_mode + 1, 2 * in_mode + 1)] = h[(i, k)];
            }
        }
        for (mode, used) in touched.iter().enumerate() {
            if !used {
                s[(2 * mode, 2 * mode)] = T::one();
                s[(2 * mode + 1, 2 * mode + 1)] = T::one();
            }
        }
        Ok(self.apply_symplectic(&s))
    }

    /// Exact Sagnac coupling `ã = cos φ a − i sin φ b`, `b̃ = cos φ b − i sin φ a`.
    pub fn sagnac_phase(&self, mode_a: usize, mode_b: usize, phi: T) -> Result<Self> {
        self.check_pair(mode_a, mode_b)?;
        let (s, co) = phi.sin_cos();
        let z = T::zero();
        #[rustfmt::skip]
        let local = DMatrix::from_row_slice(4, 4, &[
            co,  z,   z,   s,
            z,   co, -s,   z,
            z,   s,   co,  z,
            -s,  z,   z,   co,
        ]);
        self.apply_local_symplectic(&[mode_a, mode_b], &local)
    }

    /// Pure-loss channel of transmissivity `eta ∈ (0, 1]`.
    pub fn loss_channel(&self, mode: usize, eta: T) -> Result<Self> {
        if !(eta > T::zero() && eta <= T::one()) {
            return invalid("transmissivity must lie in (0, 1]");
        }
        self.attenuate(mode, eta)
    }

    /// Total loss: the mode is replaced by vacuum.
    pub fn loss_to_vacuum(&self, mode: usize) -> Result<Self> {
        self.attenuate(mode, T::zero())
    }

    fn attenuate(&self, mode: usize, eta: T) -> Result<Self> {
        self.check_mode(mode)?;
        let mut out = self.clone();
        let t = eta.sqrt();
        let n = self.d.len();
        for idx in [2 * mode, 2 * mode + 1] {
            out.d[idx] *= t;
            for k in 0..n {
                out.v[(idx, k)] *= t;
                out.v[(k, idx)] *= t;
            }
            out.v[(idx, idx)] += T::one() - eta;
        }
        Ok(out)
    }

    /// Balanced beamsplitter mapping `(a, b)` to `((a+b)/√2, (a−b)/√2)`.
    pub fn balanced_beamsplitter(&self, mode_a: usize, mode_b: usize) -> Result<Self> {
        self.check_pair(mode_a, mode_b)?;
        let h = T::one() / c::<T>(2.0).sqrt();
        let z = T::zero();
        #[rustfmt::skip]
        let local = DMatrix::from_row_slice(4, 4, &[
            h, z,  h,  z,
            z, h,  z,  h,
            h, z, -h,  z,
            z, h,  z, -h,
        ]);
        self.apply_local_symplectic(&[mode_a, mode_b], &local)
    }

    /// Reduced state of the listed modes, in the listed order.
    pub fn reduce(&self, modes: &[usize]) -> Result<Self> {
        if modes.is_empty() {
            return invalid("cannot reduce to zero modes");
        }
        let mut idx = Vec::with_capacity(2 * modes.len());
        for (i, &m) in modes.iter().enumerate() {
            self.check_mode(m)?;
            if modes[..i].contains(&m) {
                return invalid(format!("mode {m} listed twice"));
            }
            idx.push(2 * m);
            idx.push(2 * m + 1);
        }
        let d = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.d[i]));
        let v = DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.v[(idx[i], idx[j])]);
        Ok(Self { d, v })
    }

    /// Mean and single-operator variance of `Σ c_k r̂_k`.
    pub fn quadrature_stats(&self, coeffs: &[T]) -> Result<(T, T)> {
        if coeffs.len() != self.d.len() {
            return invalid(format!(
                "coefficient vector has length {}, state needs {}",
                coeffs.len(),
                self.d.len()
            ));
        }
        let cv = DVector::from_column_slice(coeffs);
        let mean = cv.dot(&self.d);
        let var = (cv.transpose() * &self.v * &cv)[(0, 0)] * c::<T>(0.5);
        Ok((mean, var))
    }

    pub fn mode_photon_number(&self, mode: usize) -> Result<T> {
        self.check_mode(mode)?;
        let (x, y) = (2 * mode, 2 * mode + 1);
        let quarter = c::<T>(0.25);
        let half = c::<T>(0.5);
        Ok((self.v[(x, x)] + self.v[(y, y)]) * quarter
            + (self.d[x] * self.d[x] + self.d[y] * self.d[y]) * half
            - half)
    }

    pub fn total_photon_number(&self) -> T {
        (0..self.num_modes()).fold(T::zero(), |acc, m| {
            acc + self.mode_photon_number(m).expect("mode in range")
        })
    }

    pub fn symplectic_eigenvalues(&self) -> Result<Vec<T>> {
        symplectic_eigenvalues(&self.v)
    }

    /// Checks `V + iΩ ≥ 0` through the symplectic spectrum.
    pub fn check_uncertainty(&self, tol: T) -> Result<()> {
        let nu = self.symplectic_eigenvalues()?;
        match nu.iter().find(|&&x| x < T::one() - tol) {
            Some(x) => Err(Error::InvalidState(format!(
                "symplectic eigenvalue {} violates the uncertainty relation",
                x.as_f64()
            ))),
            None => Ok(()),
        }
    }
}

fn uniform_householder<T: Real>(m: usize) -> DMatrix<T> {
    let u = T::one() / T::from_usize_lossy(m).sqrt();
    let mut v = DVector::from_element(m, -u);
    v[0] += T::one();
    let norm2 = v.norm_squared();
    let mut h = DMatrix::identity(m, m);
    h -= &v * v.transpose() * (c::<T>(2.0) / norm2);
    h
}

pub(crate) fn max_abs_diff<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> T {
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |m, (x, y)| m.max((*x - *y).abs()))
}

/// `V^p` for symmetric positive-definite `V`.
pub(crate) fn spd_power<T: Real>(v: &DMatrix<T>, p: T) -> Result<DMatrix<T>> {
    let eig = SymmetricEigen::new(v.clone());
    let floor = T::eps() * v.amax().max(T::one());
    if let Some(bad) = eig.eigenvalues.iter().find(|&&l| l <= floor) {
        return Err(Error::NumericalDomain(format!(
            "matrix is not positive definite (eigenvalue {:e})",
            bad.as_f64()
        )));
    }
    let powered = eig.eigenvalues.map(|l| l.powf(p));
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&powered) * q.transpose())
}

fn check_even_square<T: Real>(v: &DMatrix<T>) -> Result<usize> {
    if v.nrows() != v.ncols() || v.nrows() == 0 || v.nrows() % 2 != 0 {
        return invalid(format!(
            "{}x{} is not a covariance shape",
            v.nrows(),
            v.ncols()
        ));
    }
    Ok(v.nrows() / 2)
}

/// Symplectic spectrum of a positive-definite covariance, ascending.
pub fn symplectic_eigenvalues<T: Real>(v: &DMatrix<T>) -> Result<Vec<T>> {
    let modes = check_even_square(v)?;
    let root = spd_power(v, c::<T>(0.5))?;
    let omega = SymplecticForm::<T>::new(modes).into_matrix();
    let k = &root * omega * &root;
    // −K² is symmetric with every v² appearing twice.
    let g = -(&k * &k);
    let g = (&g + g.transpose()) * c::<T>(0.5);
    let mut ev: Vec<T> = SymmetricEigen::new(g)
        .eigenvalues
        .iter()
        .map(|&l| l.max(T::zero()).sqrt())
        .collect();
    ev.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    Ok(ev.chunks(2).map(|p| (p[0] + p[1]) * c::<T>(0.5)).collect())
}

/// Williamson decomposition of a symmetric positive-definite covariance.
///
/// With `K = V^{-1/2} Ω V^{-1/2}` (antisymmetric, eigenvalues `±i/v_j`), an
/// orthogonal `R` bringing `K` to `⊕ (1/v_j) [[0,1],[-1,0]]` gives
/// `S = W^{1/2} R V^{-1/2}`.
pub fn williamson<T: Real>(v: &DMatrix<T>) -> Result<WilliamsonResult<T>> {
    let modes = check_even_square(v)?;
    let n = 2 * modes;
    let inv_root = spd_power(v, c::<T>(-0.5))?;
    let omega = SymplecticForm::<T>::new(modes).into_matrix();
    let k = &inv_root * &omega * &inv_root;
    let g = k.transpose() * &k;
    let g = (&g + g.transpose()) * c::<T>(0.5);
    let eig = SymmetricEigen::new(g);

    // Largest 1/v² first gives ascending symplectic eigenvalues.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("finite eigenvalues")
    });

    let mut basis: Vec<DVector<T>> = Vec::with_capacity(n);
    let mut nus = Vec::with_capacity(modes);
    for &i in &order {
        if basis.len() == n {
            break;
        }
        let mut u = eig.eigenvectors.column(i).into_owned();
        // Two Gram-Schmidt passes against the pairs already chosen.
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dot(&u);
                u -= b * proj;
            }
        }
        let norm = u.norm();
        if norm < c::<T>(0.5) {
            continue;
        }
        u /= norm;
        let ku = &k * &u;
        let ku_norm = ku.norm();
        if ku_norm <= T::zero() {
            return Err(Error::NumericalDomain("degenerate symplectic pair".into()));
        }
        let w = -ku / ku_norm;
        let coupling = u.dot(&(&k * &w));
        nus.push(T::one() / coupling);
        basis.push(u);
        basis.push(w);
    }
    if basis.len() != n {
        return Err(Error::NumericalDomain(
            "could not assemble a symplectic basis".into(),
        ));
    }
    let mut r = DMatrix::zeros(n, n);
    for (row, b) in basis.iter().enumerate() {
        r.set_row(row, &b.transpose());
    }
    let w = DMatrix::from_diagonal(&DVector::from_iterator(n, nus.iter().flat_map(|&x| [x, x])));
    let w_half = w.map(|x| x.sqrt());
    let s = w_half * r * inv_root;
    Ok(WilliamsonResult {
        w,
        s,
        symplectic_eigenvalues: nus,
    })
}

/// `S = W^{1/2} R V^{-1/2}` for a caller-supplied orthogonal `R` and
/// Williamson diagonal `w_diag` (one entry per mode).
pub fn williamson_with_rotation<T: Real>(
    v: &DMatrix<T>,
    rotation: &DMatrix<T>,
    w_diag: &[T],
) -> Result<WilliamsonResult<T>> {
    let modes = check_even_square(v)?;
    if rotation.shape() != v.shape() || w_diag.len() != modes {
        return invalid("rotation or Williamson diagonal does not match the covariance");
    }
    let n = 2 * modes;
    let inv_root = spd_power(v, c::<T>(-0.5))?;
    let w = DMatrix::from_diagonal(&DVector::from_iterator(
        n,
        w_diag.iter().flat_map(|&x| [x, x]),
    ));
    let s = w.map(|x| x.sqrt()) * rotation * inv_root;
    Ok(WilliamsonResult {
        w,
        s,
        symplectic_eigenvalues: w_diag.to_vec(),
    })
}

/// Rotation bringing the two-sensor output covariance (at zero phase) to
/// `diag{1, 1, γ, γ}`: the difference mode `(c₁ − c₂)/√2` first, then the
/// sum mode, X before Y in each.
pub fn two_sensor_rotation<T: Real>() -> DMatrix<T> {
    let h = T::one() / c::<T>(2.0).sqrt();
    let z = T::zero();
    #[rustfmt::skip]
    let r = DMatrix::from_row_slice(4, 4, &[
        h, z, -h,  z,
        z, h,  z, -h,
        h, z,  h,  z,
        z, h,  z,  h,
    ]);
    r
}
