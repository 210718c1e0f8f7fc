//! Signals, noise, phase-gradient sensitivity and the excess-noise scaling
//! table.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::dicke::{EnsembleDims, OperatorSet, SpinState};
use crate::error::{invalid, Error, Result};
use crate::protocol::{run, Detection, ProtocolSpec};

/// ΔS below `DEGENERATE_FLOOR · N` leaves Λ undefined.
pub const DEGENERATE_FLOOR: f64 = 1e-9;

pub const NORMALIZATION_NOTE: &str = "Γ ≡ 1: Λ is a dimensionless inverse phase uncertainty";

pub fn expect_jz(state: &SpinState) -> f64 {
    let d = state.dims();
    state
        .amps()
        .iter()
        .enumerate()
        .map(|(k, a)| a.norm_sqr() * d.m(k))
        .sum()
}

/// Centred second moment of J_z.
pub fn variance_jz(state: &SpinState) -> f64 {
    let d = state.dims();
    let mean = expect_jz(state);
    state
        .amps()
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let dm = d.m(k) - mean;
            a.norm_sqr() * dm * dm
        })
        .sum()
}

pub fn collective_population(state: &SpinState, index: usize) -> Result<f64> {
    let max = state.dims().n_atoms();
    if index > max {
        return Err(Error::IndexOutOfRange { index, max });
    }
    Ok(state.amp(index).norm_sqr())
}

pub fn collective_distribution(state: &SpinState) -> Vec<f64> {
    state.populations()
}

/// `Σ_{m=-J}^{J-1} (J-m)·P(E_{J+m})`, the CSD reconstruction of `⟨J - J_z⟩`.
pub fn csd_weighted_sum(state: &SpinState) -> f64 {
    let d = state.dims();
    let j = d.j();
    (0..d.n_atoms())
        .map(|k| (j - d.m(k)) * state.amp(k).norm_sqr())
        .sum()
}

/// Signal and its variance for the chosen read-out.
pub fn measure(state: &SpinState, detection: Detection) -> Result<(f64, f64)> {
    match detection {
        Detection::Cd => Ok((expect_jz(state), variance_jz(state))),
        Detection::SpinUp => Ok((state.dims().j() + expect_jz(state), variance_jz(state))),
        Detection::Csd { index } => {
            let p = collective_population(state, index)?;
            Ok((p, (p * (1.0 - p)).max(0.0)))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FringePoint {
    pub phi: f64,
    pub signal: f64,
    pub sds: f64,
    pub pgs: f64,
}

/// Finite-difference step for ∂_φ: resolves a fringe of period 2π/N.
pub fn pgs_step(dims: EnsembleDims) -> f64 {
    1e-4_f64.min(std::f64::consts::PI / (200.0 * dims.n_atoms() as f64))
}

fn signal_at(
    spec: &ProtocolSpec,
    dims: EnsembleDims,
    ops: &OperatorSet,
    phi: f64,
    mu: Option<f64>,
) -> Result<f64> {
    let s = run(spec, dims, ops, phi, mu)?;
    Ok(measure(&s, spec.detection)?.0)
}

/// Central difference with one Richardson step.
fn phase_gradient(
    spec: &ProtocolSpec,
    dims: EnsembleDims,
    ops: &OperatorSet,
    phi: f64,
    mu: Option<f64>,
) -> Result<f64> {
    let h = pgs_step(dims);
    let central = |h: f64| -> Result<f64> {
        Ok((signal_at(spec, dims, ops, phi + h, mu)? - signal_at(spec, dims, ops, phi - h, mu)?)
            / (2.0 * h))
    };
    let d1 = central(h)?;
    let d2 = central(h / 2.0)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

fn fringe_point(
    spec: &ProtocolSpec,
    dims: EnsembleDims,
    ops: &OperatorSet,
    phi: f64,
    mu: Option<f64>,
) -> Result<FringePoint> {
    let state = run(spec, dims, ops, phi, mu)?;
    let (signal, var) = measure(&state, spec.detection)?;
    Ok(FringePoint {
        phi,
        signal,
        sds: var.max(0.0).sqrt(),
        pgs: phase_gradient(spec, dims, ops, phi, mu)?,
    })
}

fn check_grid(name: &'static str, grid: &[f64]) -> Result<()> {
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(invalid(name, "grid values must be finite"));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid(name, "grid must be sorted ascending"));
    }
    Ok(())
}

/// Evaluates the fringe on every grid point in parallel; output order follows
/// the grid.
pub fn fringe_scan(
    spec: &ProtocolSpec,
    dims: EnsembleDims,
    ops: &OperatorSet,
    phi_grid: &[f64],
    mu_override: Option<f64>,
) -> Result<Vec<FringePoint>> {
    check_grid("phi", phi_grid)?;
    spec.detection.validate(dims)?;
    phi_grid
        .par_iter()
        .map(|&phi| fringe_point(spec, dims, ops, phi, mu_override))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityResult {
    /// `None` when ΔS is below the degenerate floor.
    pub lambda: Option<f64>,
    pub phi_star: f64,
    pub mu: Option<f64>,
    pub pgs: f64,
    pub sds: f64,
    pub normalization: String,
}

impl SensitivityResult {
    fn from_point(p: &FringePoint, dims: EnsembleDims, mu: Option<f64>) -> Self {
        let floor = DEGENERATE_FLOOR * dims.n_atoms() as f64;
        Self {
            lambda: (p.sds >= floor).then(|| (p.pgs / p.sds).abs()),
            phi_star: p.phi,
            mu,
            pgs: p.pgs,
            sds: p.sds,
            normalization: NORMALIZATION_NOTE.to_string(),
        }
    }

    /// Λ divided by `scale` (N for the Heisenberg-limit normalisation).
    pub fn normalized(&self, scale: f64) -> Option<f64> {
        self.lambda.map(|l| l / scale)
    }
}

/// Λ = |∂_φS| / ΔS at one phase.
pub fn sensitivity_at(
    spec: &ProtocolSpec,
    dims: EnsembleDims,
    ops: &OperatorSet,
    phi: f64,
    mu_override: Option<f64>,
) -> Result<SensitivityResult> {
    spec.detection.validate(dims)?;
    let p = fringe_point(spec, dims, ops, phi, mu_override)?;
    Ok(SensitivityResult::from_point(&p, dims, mu_override))
}

/// The default sensitivity window: 2001 points on (0, π/2].
pub fn default_phi_window() -> Vec<f64> {
    let n = 2001;
    (1..=n).map(|i| FRAC_PI_2 * i as f64 / n as f64).collect()
}

/// Best defined Λ over `window`, or an undefined entry if every point is
/// degenerate. Ties keep the smallest φ.
pub fn max_sensitivity(
    spec: &ProtocolSpec,
    dims: EnsembleDims,
    ops: &OperatorSet,
    window: &[f64],
    mu_override: Option<f64>,
) -> Result<SensitivityResult> {
    check_grid("phi_window", window)?;
    if window.is_empty() {
        return Err(invalid("phi_window", "window is empty"));
    }
    spec.detection.validate(dims)?;
    let results: Vec<SensitivityResult> = window
        .par_iter()
        .map(|&phi| sensitivity_at(spec, dims, ops, phi, mu_override))
        .collect::<Result<_>>()?;
    let best = results
        .iter()
        .filter(|r| r.lambda.is_some())
        .fold(None::<&SensitivityResult>, |acc, r| match acc {
            Some(a) if a.lambda >= r.lambda => Some(a),
            _ => Some(r),
        });
    Ok(match best {
        Some(r) => r.clone(),
        None => SensitivityResult {
            lambda: None,
            phi_star: f64::NAN,
            mu: mu_override,
            pgs: f64::NAN,
            sds: f64::NAN,
            normalization: NORMALIZATION_NOTE.to_string(),
        },
    })
}

/// Λ(μ) as the maximum over the φ window for each μ.
pub fn sensitivity_scan_mu(
    spec: &ProtocolSpec,
    dims: EnsembleDims,
    ops: &OperatorSet,
    mu_grid: &[f64],
    phi_window: &[f64],
) -> Result<Vec<SensitivityResult>> {
    check_grid("mu", mu_grid)?;
    if mu_grid.iter().any(|&m| !(0.0..=FRAC_PI_2 + 1e-12).contains(&m)) {
        return Err(invalid("mu", "values must lie in [0, π/2]"));
    }
    mu_grid
        .iter()
        .map(|&mu| max_sensitivity(spec, dims, ops, phi_window, Some(mu)))
        .collect()
}

/// Root-mean-square of the even- and odd-N sensitivities.
pub fn parity_average(lambda_even: f64, lambda_odd: f64) -> Result<f64> {
    if !(lambda_even >= 0.0 && lambda_odd >= 0.0) {
        return Err(invalid("lambda", "sensitivities must be non-negative"));
    }
    Ok(((lambda_even * lambda_even + lambda_odd * lambda_odd) / 2.0).sqrt())
}

/// Full width at half maximum of the central fringe around φ = 0.
///
/// The half level sits midway between the signal at φ = 0 and the
/// trapezoid mean of the whole grid; crossings are linearly interpolated.
pub fn central_fwhm(phis: &[f64], signal: &[f64]) -> Option<f64> {
    if phis.len() != signal.len() || phis.len() < 3 {
        return None;
    }
    let centre = phis
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))?
        .0;
    let span = phis[phis.len() - 1] - phis[0];
    let mean = phis
        .windows(2)
        .zip(signal.windows(2))
        .map(|(p, s)| (p[1] - p[0]) * (s[0] + s[1]) / 2.0)
        .sum::<f64>()
        / span;
    let peak = signal[centre];
    let half = (peak + mean) / 2.0;
    let above = |v: f64| (v - half) * (peak - half) > 0.0;
    let interp = |i: usize, j: usize| {
        let t = (half - signal[i]) / (signal[j] - signal[i]);
        phis[i] + t * (phis[j] - phis[i])
    };
    let right = (centre..phis.len() - 1).find(|&i| above(signal[i]) && !above(signal[i + 1]))?;
    let left = (1..=centre).rev().find(|&i| above(signal[i]) && !above(signal[i - 1]))?;
    Some(interp(right, right + 1) - interp(left, left - 1))
}

/// Protocol scaling relative to CRAIN for the excess-noise comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModelRow {
    pub protocol: String,
    pub pgs_scale: f64,
    pub sds_scale: f64,
}

/// CRAIN, TACT, ESP, CD-SCAIN and CSD-SCAIN at ensemble size `n`.
pub fn noise_model_table(n: f64) -> Vec<NoiseModelRow> {
    let row = |p: &str, pgs_scale: f64, sds_scale: f64| NoiseModelRow {
        protocol: p.to_string(),
        pgs_scale,
        sds_scale,
    };
    vec![
        row("CRAIN", 1.0, 1.0),
        row("TACT", 1.0, 1.0 / (n / 2.0).sqrt()),
        row("ESP", (n / 2.0).sqrt(), 1.0),
        row("CD-SCAIN", n, n.sqrt()),
        row("CSD-SCAIN", 1.0, 1.0 / n.sqrt()),
    ]
}

impl NoiseModelRow {
    pub fn validate(&self) -> Result<()> {
        if !(self.pgs_scale > 0.0 && self.sds_scale > 0.0) {
            return Err(invalid("noise_model", "scales must be positive"));
        }
        Ok(())
    }

    pub fn pgs(&self, n: f64) -> f64 {
        self.pgs_scale * n / 2.0
    }

    /// Quantum projection noise at the operating point.
    pub fn sds_qpn(&self, n: f64) -> f64 {
        self.sds_scale * n.sqrt() / 2.0
    }

    pub fn lambda_qpn(&self, n: f64) -> f64 {
        self.pgs(n) / self.sds_qpn(n)
    }

    /// Λ with excess noise ΔS_EN added in quadrature.
    pub fn lambda(&self, n: f64, delta_s_en: f64) -> f64 {
        let rho = delta_s_en / self.sds_qpn(n);
        self.lambda_qpn(n) / (1.0 + rho * rho).sqrt()
    }

    /// ΔS_EN at which Λ has dropped by √2.
    pub fn crossover(&self, n: f64) -> f64 {
        self.sds_qpn(n)
    }

    /// ΔS_EN at which Λ falls to `target`; `None` if it starts below.
    pub fn noise_for_lambda(&self, n: f64, target: f64) -> Option<f64> {
        let r = self.lambda_qpn(n) / target;
        (r > 1.0).then(|| self.sds_qpn(n) * (r * r - 1.0).sqrt())
    }

    /// ΔS_EN at which Λ falls to √(N/2).
    pub fn usefulness_limit(&self, n: f64) -> Option<f64> {
        self.noise_for_lambda(n, (n / 2.0).sqrt())
    }
}

pub fn excess_noise_curve(row: &NoiseModelRow, n_atoms: f64, en_grid: &[f64]) -> Result<Vec<f64>> {
    row.validate()?;
    if !(n_atoms >= 1.0) {
        return Err(invalid("n_atoms", "must be at least 1"));
    }
    Ok(en_grid.iter().map(|&en| row.lambda(n_atoms, en)).collect())
}
