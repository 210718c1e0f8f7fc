//! Collective-spin Hilbert space in the Dicke basis.
//!
//! Basis ket `|E_k⟩` (k = 0..=N) has k atoms in the upper state and is the
//! J_z eigenstate with eigenvalue `m = k - J`, `J = N/2`. All operators act on
//! the (N+1)-dimensional symmetric subspace.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{invalid, Error, Result};

/// Largest ensemble accepted by [`OperatorSet::new`]. The dense J_x
/// eigenvector cache is `(N+1)^2` doubles, 134 MB at the cap.
pub const MAX_ATOMS: usize = 4096;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct EnsembleDims {
    n_atoms: usize,
}

impl EnsembleDims {
    pub fn new(n_atoms: usize) -> Result<Self> {
        if n_atoms == 0 || n_atoms > MAX_ATOMS {
            return Err(Error::Dimension {
                n: n_atoms,
                cap: MAX_ATOMS,
            });
        }
        Ok(Self { n_atoms })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn dim(&self) -> usize {
        self.n_atoms + 1
    }

    /// Total spin J = N/2 (exact in binary floating point).
    pub fn j(&self) -> f64 {
        self.n_atoms as f64 / 2.0
    }

    /// J_z eigenvalue of basis index `k`.
    pub fn m(&self, k: usize) -> f64 {
        k as f64 - self.j()
    }

    pub fn is_even(&self) -> bool {
        self.n_atoms % 2 == 0
    }
}

impl TryFrom<usize> for EnsembleDims {
    type Error = Error;

    fn try_from(n: usize) -> Result<Self> {
        Self::new(n)
    }
}

impl From<EnsembleDims> for usize {
    fn from(d: EnsembleDims) -> usize {
        d.n_atoms
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            _ => Err(invalid("axis", format!("expected x, y or z, got `{s}`"))),
        }
    }
}

/// A ±1 multiplier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = Error;

    fn try_from(v: i8) -> Result<Self> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            _ => Err(invalid("sign", format!("must be +1 or -1, got {v}"))),
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

/// Elementary protocol step.
///
/// * `Rotate` applies `exp(-i·angle·J_axis)`.
/// * `Squeeze` applies `exp(+i·sign·mu·J_z²)`; `sign = -1` is the squeezing
///   factor, `sign = +1` its inverse.
/// * `DarkPhase` applies `exp(-i·sign·fraction·φ·J_z)` where φ is the scan
///   phase bound at run time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Pulse {
    Rotate { axis: Axis, angle: f64 },
    Squeeze { mu: f64, sign: Sign },
    DarkPhase { fraction: f64, sign: Sign },
}

impl Pulse {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Pulse::Rotate { angle, .. } if !angle.is_finite() => {
                Err(invalid("angle", format!("rotation angle must be finite, got {angle}")))
            }
            Pulse::Squeeze { mu, .. } if !mu.is_finite() => {
                Err(invalid("mu", format!("squeeze strength must be finite, got {mu}")))
            }
            Pulse::DarkPhase { fraction, .. } if !(fraction > 0.0 && fraction <= 1.0) => Err(
                invalid("fraction", format!("dark-phase fraction must lie in (0, 1], got {fraction}")),
            ),
            _ => Ok(()),
        }
    }
}

/// Pure state over the Dicke basis.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinState {
    dims: EnsembleDims,
    amps: Vec<Complex64>,
}

impl SpinState {
    /// The basis ket `|E_k⟩`.
    pub fn dicke(dims: EnsembleDims, k: usize) -> Result<Self> {
        if k > dims.n_atoms() {
            return Err(Error::IndexOutOfRange {
                index: k,
                max: dims.n_atoms(),
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dims.dim()];
        amps[k] = Complex64::new(1.0, 0.0);
        Ok(Self { dims, amps })
    }

    /// `|E_0⟩ = |-ẑ⟩`, all atoms in the lower state.
    pub fn ground(dims: EnsembleDims) -> Self {
        Self::dicke(dims, 0).expect("index 0 is always valid")
    }

    /// Wraps raw amplitudes. The vector must have length N+1 and unit norm
    /// within 1e-9.
    pub fn from_amplitudes(dims: EnsembleDims, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != dims.dim() {
            return Err(invalid(
                "amps",
                format!("expected {} amplitudes, got {}", dims.dim(), amps.len()),
            ));
        }
        let state = Self { dims, amps };
        let norm = state.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(invalid("amps", format!("state norm is {norm}, expected 1")));
        }
        Ok(state)
    }

    pub fn dims(&self) -> EnsembleDims {
        self.dims
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amp(&self, k: usize) -> Complex64 {
        self.amps[k]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `|amps[k]|²` for every k.
    pub fn populations(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &SpinState) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    fn check(&self, ops: &OperatorSet) -> Result<()> {
        if self.dims != ops.dims {
            return Err(Error::DimensionMismatch {
                state: self.dims.n_atoms(),
                ops: ops.dims.n_atoms(),
            });
        }
        Ok(())
    }

    /// In-place `exp(-i·angle·J_axis)`.
    pub fn rotate(&mut self, ops: &OperatorSet, axis: Axis, angle: f64) -> Result<()> {
        self.check(ops)?;
        if angle == 0.0 {
            return Ok(());
        }
        match axis {
            Axis::Z => self.diagonal_phase(|m| -angle * m),
            Axis::X => ops.jx_eigen.evolve(&mut self.amps, angle),
            Axis::Y => {
                // e^{-iθJ_y} = R e^{-iθJ_x} R†, R = e^{-i(π/2)J_z}
                self.diagonal_phase(|m| FRAC_PI_2 * m);
                ops.jx_eigen.evolve(&mut self.amps, angle);
                self.diagonal_phase(|m| -FRAC_PI_2 * m);
            }
        }
        Ok(())
    }

    /// In-place `exp(+i·sign·mu·J_z²)`.
    pub fn twist(&mut self, ops: &OperatorSet, mu: f64, sign: Sign) -> Result<()> {
        self.check(ops)?;
        let s = sign.value() * mu;
        for (a, &m2) in self.amps.iter_mut().zip(&ops.jz_sq) {
            *a *= Complex64::from_polar(1.0, s * m2);
        }
        Ok(())
    }

    /// In-place `exp(-i·sign·phase·J_z)`.
    pub fn dark_phase(&mut self, ops: &OperatorSet, phase: f64, sign: Sign) -> Result<()> {
        self.check(ops)?;
        let s = sign.value() * phase;
        self.diagonal_phase(|m| -s * m);
        Ok(())
    }

    fn diagonal_phase(&mut self, angle_of_m: impl Fn(f64) -> f64) {
        let dims = self.dims;
        for (k, a) in self.amps.iter_mut().enumerate() {
            *a *= Complex64::from_polar(1.0, angle_of_m(dims.m(k)));
        }
    }
}

/// Spectral factorisation of a real symmetric operator, `A = V diag(λ) Vᵀ`.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl Eigensystem {
    /// `ψ ← V e^{-iθλ} Vᵀ ψ`.
    fn evolve(&self, amps: &mut [Complex64], theta: f64) {
        let re = DVector::from_iterator(amps.len(), amps.iter().map(|a| a.re));
        let im = DVector::from_iterator(amps.len(), amps.iter().map(|a| a.im));
        let c_re = self.vectors.tr_mul(&re);
        let c_im = self.vectors.tr_mul(&im);
        let (mut d_re, mut d_im) = (c_re.clone(), c_im.clone());
        for (k, &lambda) in self.values.iter().enumerate() {
            let p = Complex64::from_polar(1.0, -theta * lambda);
            let c = Complex64::new(c_re[k], c_im[k]) * p;
            d_re[k] = c.re;
            d_im[k] = c.im;
        }
        let out_re = &self.vectors * d_re;
        let out_im = &self.vectors * d_im;
        for (k, a) in amps.iter_mut().enumerate() {
            *a = Complex64::new(out_re[k], out_im[k]);
        }
    }
}

/// Cached Dicke-basis representation of J_x, J_y, J_z.
///
/// J_x and J_y are tridiagonal and stored through their ladder coefficients
/// `A_{J,m} = sqrt((J-m)(J+m+1))`; dense forms are built on request.
#[derive(Clone, Debug)]
pub struct OperatorSet {
    dims: EnsembleDims,
    /// `ladder[k] = A_{J,m}` at `m = k - J`, the `|E_k⟩ → |E_{k+1}⟩` coefficient.
    ladder: Vec<f64>,
    jz: Vec<f64>,
    jz_sq: Vec<f64>,
    jx_eigen: Eigensystem,
}

impl OperatorSet {
    pub fn new(dims: EnsembleDims) -> Self {
        let n = dims.n_atoms();
        let ladder: Vec<f64> = (0..n).map(|k| (((n - k) * (k + 1)) as f64).sqrt()).collect();
        let jz: Vec<f64> = (0..=n).map(|k| dims.m(k)).collect();
        let jz_sq = jz.iter().map(|m| m * m).collect();

        let mut jx = DMatrix::<f64>::zeros(n + 1, n + 1);
        for (k, &a) in ladder.iter().enumerate() {
            jx[(k + 1, k)] = 0.5 * a;
            jx[(k, k + 1)] = 0.5 * a;
        }
        let eig = SymmetricEigen::new(jx);
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let vectors = DMatrix::from_fn(n + 1, n + 1, |r, c| eig.eigenvectors[(r, order[c])]);
        // The spectrum of J_x is exactly -J..=J; snap to it so that 2π
        // rotations are periodic to rounding.
        let values: Vec<f64> = order
            .iter()
            .enumerate()
            .map(|(c, &idx)| {
                let exact = dims.m(c);
                debug_assert!((eig.eigenvalues[idx] - exact).abs() < 1e-6 * (1.0 + dims.j()));
                exact
            })
            .collect();

        Self {
            dims,
            ladder,
            jz,
            jz_sq,
            jx_eigen: Eigensystem { values, vectors },
        }
    }

    pub fn dims(&self) -> EnsembleDims {
        self.dims
    }

    pub fn ladder(&self) -> &[f64] {
        &self.ladder
    }

    /// Diagonal of J_z.
    pub fn jz(&self) -> &[f64] {
        &self.jz
    }

    /// Diagonal of J_z².
    pub fn jz_sq(&self) -> &[f64] {
        &self.jz_sq
    }

    pub fn jx_eigensystem(&self) -> &Eigensystem {
        &self.jx_eigen
    }

    /// Eigenvalues and (complex) eigenvectors of J_y, obtained from the J_x
    /// factorisation through `V_y = e^{-i(π/2)J_z} V_x`.
    pub fn jy_eigensystem(&self) -> (Vec<f64>, DMatrix<Complex64>) {
        let d = self.dims.dim();
        let v = DMatrix::from_fn(d, d, |r, c| {
            Complex64::from_polar(1.0, -FRAC_PI_2 * self.jz[r]) * self.jx_eigen.vectors[(r, c)]
        });
        (self.jx_eigen.values.clone(), v)
    }

    pub fn jx_dense(&self) -> DMatrix<Complex64> {
        let d = self.dims.dim();
        let mut m = DMatrix::zeros(d, d);
        for (k, &a) in self.ladder.iter().enumerate() {
            m[(k + 1, k)] = Complex64::new(0.5 * a, 0.0);
            m[(k, k + 1)] = Complex64::new(0.5 * a, 0.0);
        }
        m
    }

    pub fn jy_dense(&self) -> DMatrix<Complex64> {
        let d = self.dims.dim();
        let mut m = DMatrix::zeros(d, d);
        for (k, &a) in self.ladder.iter().enumerate() {
            // ⟨E_{k+1}|J_y|E_k⟩ = A/(2i)
            m[(k + 1, k)] = -I * (0.5 * a);
            m[(k, k + 1)] = I * (0.5 * a);
        }
        m
    }

    pub fn jz_dense(&self) -> DMatrix<Complex64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.dims.dim(),
            self.jz.iter().map(|&m| Complex64::new(m, 0.0)),
        ))
    }

    /// `J_x ψ` via the tridiagonal structure.
    pub fn apply_jx(&self, amps: &[Complex64]) -> Vec<Complex64> {
        self.ladder_apply(amps, Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0))
    }

    /// `J_y ψ` via the tridiagonal structure.
    pub fn apply_jy(&self, amps: &[Complex64]) -> Vec<Complex64> {
        self.ladder_apply(amps, -I * 0.5, I * 0.5)
    }

    pub fn apply_jz(&self, amps: &[Complex64]) -> Vec<Complex64> {
        amps.iter().zip(&self.jz).map(|(a, &m)| a * m).collect()
    }

    // out[k+1] += lower·A_k·ψ[k]; out[k] += upper·A_k·ψ[k+1]
    fn ladder_apply(&self, amps: &[Complex64], lower: Complex64, upper: Complex64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
        for (k, &a) in self.ladder.iter().enumerate() {
            out[k + 1] += lower * a * amps[k];
            out[k] += upper * a * amps[k + 1];
        }
        out
    }

    /// Largest entry of `|[J_x, J_y] - i J_z|`.
    pub fn commutator_residual(&self) -> f64 {
        let (x, y, z) = (self.jx_dense(), self.jy_dense(), self.jz_dense());
        let c = &x * &y - &y * &x - z * I;
        c.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest entry of `|V diag(λ) Vᵀ - J_x|`.
    pub fn jx_reconstruction_residual(&self) -> f64 {
        let e = &self.jx_eigen;
        let d = self.dims.dim();
        let lam = DMatrix::from_diagonal(&DVector::from_column_slice(&e.values));
        let rec = &e.vectors * lam * e.vectors.transpose();
        let jx = self.jx_dense();
        (0..d)
            .flat_map(|r| (0..d).map(move |c| (r, c)))
            .map(|(r, c)| (rec[(r, c)] - jx[(r, c)].re).abs())
            .fold(0.0, f64::max)
    }
}

/// Builds the operator cache for an ensemble.
pub fn build_operator_set(dims: EnsembleDims) -> OperatorSet {
    OperatorSet::new(dims)
}

/// `ln k!` for k = 0..=n.
pub(crate) fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Magnitudes `sqrt(C(N,k)) cos^{N-k}(θ/2) sin^k(θ/2)` for k = 0..=N, computed
/// in the log domain. Index k corresponds to basis ket `|E_{N-k}⟩`.
pub fn css_magnitudes(dims: EnsembleDims, theta: f64) -> Vec<f64> {
    let n = dims.n_atoms();
    let (s, c) = (0.5 * theta).sin_cos();
    let (s, c) = (s.abs(), c.abs());
    if s == 0.0 || c == 0.0 {
        let mut out = vec![0.0; n + 1];
        out[if s == 0.0 { 0 } else { n }] = 1.0;
        return out;
    }
    let lf = ln_factorials(n);
    let (ls, lc) = (s.ln(), c.ln());
    let logs: Vec<f64> = (0..=n)
        .map(|k| 0.5 * (lf[n] - lf[k] - lf[n - k]) + (n - k) as f64 * lc + k as f64 * ls)
        .collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
    out.iter_mut().for_each(|v| *v /= norm);
    out
}

/// Coherent spin state with every spin along (θ, φ).
pub fn css_state(dims: EnsembleDims, theta: f64, phi: f64) -> Result<SpinState> {
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(invalid("theta", format!("must lie in [0, π], got {theta}")));
    }
    if !phi.is_finite() {
        return Err(invalid("phi", format!("must be finite, got {phi}")));
    }
    let n = dims.n_atoms();
    let mags = css_magnitudes(dims, theta);
    let mut amps = vec![Complex64::new(0.0, 0.0); dims.dim()];
    for (k, &b) in mags.iter().enumerate() {
        amps[n - k] = Complex64::from_polar(b, k as f64 * phi);
    }
    Ok(SpinState { dims, amps })
}

pub fn apply_rotation(state: &SpinState, ops: &OperatorSet, axis: Axis, angle: f64) -> Result<SpinState> {
    let mut out = state.clone();
    out.rotate(ops, axis, angle)?;
    Ok(out)
}

pub fn apply_oats(state: &SpinState, ops: &OperatorSet, mu: f64, sign: Sign) -> Result<SpinState> {
    let mut out = state.clone();
    out.twist(ops, mu, sign)?;
    Ok(out)
}

pub fn apply_dark_phase(state: &SpinState, ops: &OperatorSet, phase: f64, sign: Sign) -> Result<SpinState> {
    let mut out = state.clone();
    out.dark_phase(ops, phase, sign)?;
    Ok(out)
}
