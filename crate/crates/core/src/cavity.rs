//! Cavity-feedback one-axis twisting: design formulas and the fidelity
//! budget for cavity decay and spontaneous emission.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{invalid, Error, Result};

/// Geometric constant for ⁸⁷Rb in `𝒞 = 𝒜/(A·T)`, m².
pub const AREA_CONSTANT: f64 = 3.6e-12;

/// Reference point of the engineering form of χ.
pub mod reference {
    pub const POWER: f64 = 1e-3;
    pub const MODE_SIDE: f64 = 20e-6;
    pub const MIRROR_T: f64 = 1e-5;
    pub const DELTA_TILDE: f64 = 100.0;
    pub const CHI: f64 = 1e8;
}

fn default_delta_tilde() -> f64 {
    reference::DELTA_TILDE
}
fn default_power() -> f64 {
    reference::POWER
}
fn default_mode_side() -> f64 {
    reference::MODE_SIDE
}
fn default_mirror_t() -> f64 {
    reference::MIRROR_T
}
fn default_cooperativity() -> f64 {
    cooperativity_from_geometry(reference::MODE_SIDE, reference::MIRROR_T)
}

/// Cavity and probe parameters. Rates in 1/s, lengths in m, power in W.
///
/// The microscopic rates have no reference values and stay unset unless a
/// formula needs them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityParams {
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default = "default_delta_tilde")]
    pub delta_tilde: f64,
    #[serde(default)]
    pub xi_sq: Option<f64>,
    #[serde(default = "default_cooperativity")]
    pub cooperativity: f64,
    #[serde(default)]
    pub gamma_sp: Option<f64>,
    #[serde(default)]
    pub delta_opt: Option<f64>,
    #[serde(default = "default_mirror_t")]
    pub mirror_t: f64,
    #[serde(default = "default_mode_side")]
    pub mode_side_d: f64,
    #[serde(default = "default_power")]
    pub power: f64,
}

impl Default for CavityParams {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

fn required(name: &'static str, v: Option<f64>) -> Result<f64> {
    v.ok_or_else(|| invalid(name, "required for this quantity"))
}

impl CavityParams {
    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("kappa", self.kappa),
            ("xi_sq", self.xi_sq),
            ("gamma_sp", self.gamma_sp),
            ("cooperativity", Some(self.cooperativity)),
            ("mirror_t", Some(self.mirror_t)),
            ("mode_side_d", Some(self.mode_side_d)),
            ("power", Some(self.power)),
        ];
        for (name, v) in nonneg {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(invalid(name, format!("must be finite and non-negative, got {v}")));
                }
            }
        }
        if !self.delta_tilde.is_finite() {
            return Err(invalid("delta_tilde", "must be finite"));
        }
        Ok(())
    }

    /// Probe detuning δ = δ̃·κ/2.
    pub fn delta(&self) -> Result<f64> {
        Ok(self.delta_tilde * required("kappa", self.kappa)? / 2.0)
    }
}

/// `𝒞 = 𝒜/(D²·T)` for a square mode of side `D`.
pub fn cooperativity_from_geometry(mode_side_d: f64, mirror_t: f64) -> f64 {
    AREA_CONSTANT / (mode_side_d * mode_side_d * mirror_t)
}

/// Intracavity field `ζ = √(κ/2)·ξ/(κ/2 − iδ)`.
pub fn steady_state_amplitude(p: &CavityParams) -> Result<Complex64> {
    let kappa = required("kappa", p.kappa)?;
    if kappa <= 0.0 {
        return Err(invalid("kappa", "must be positive"));
    }
    let xi = required("xi_sq", p.xi_sq)?.sqrt();
    let half = kappa / 2.0;
    Ok(Complex64::new(half.sqrt() * xi, 0.0) / Complex64::new(half, -p.delta()?))
}

fn lorentz_shape(delta_tilde: f64) -> f64 {
    let d2 = 1.0 + delta_tilde * delta_tilde;
    delta_tilde / (d2 * d2)
}

/// `χ = δ̃(1+δ̃²)⁻²|ξ|²ε̃²` with ε̃ the single-photon light shift over κ/2.
pub fn squeezing_rate_from_light_shift(delta_tilde: f64, xi_sq: f64, eps_tilde: f64) -> f64 {
    lorentz_shape(delta_tilde) * xi_sq * eps_tilde * eps_tilde
}

/// `χ = δ̃(1+δ̃²)⁻²|ξ|²𝒞²(Γ/Δ)²`. Odd in δ̃.
pub fn squeezing_rate_chi(p: &CavityParams) -> Result<f64> {
    let delta_opt = required("delta_opt", p.delta_opt)?;
    if delta_opt == 0.0 {
        return Err(invalid("delta_opt", "optical detuning must be nonzero"));
    }
    let ratio = required("gamma_sp", p.gamma_sp)? / delta_opt;
    Ok(lorentz_shape(p.delta_tilde) * required("xi_sq", p.xi_sq)? * p.cooperativity.powi(2) * ratio * ratio)
}

/// Engineering form scaled from the reference point:
/// `χ ≈ 10⁸ (δ̃_o/δ̃)³ (P/P_o)² (D_o/D)⁴ (T_o/T)²` s⁻¹.
pub fn squeezing_rate_engineering(delta_tilde: f64, power: f64, mode_side_d: f64, mirror_t: f64) -> Result<f64> {
    if delta_tilde == 0.0 {
        return Err(invalid("delta_tilde", "must be nonzero"));
    }
    if !(mode_side_d > 0.0 && mirror_t > 0.0) {
        return Err(invalid("geometry", "mode side and transmittivity must be positive"));
    }
    use reference as r;
    Ok(r::CHI
        * (r::DELTA_TILDE / delta_tilde).powi(3)
        * (power / r::POWER).powi(2)
        * (r::MODE_SIDE / mode_side_d).powi(4)
        * (r::MIRROR_T / mirror_t).powi(2))
}

pub fn squeezing_rate_engineering_for(p: &CavityParams) -> Result<f64> {
    squeezing_rate_engineering(p.delta_tilde, p.power, p.mode_side_d, p.mirror_t)
}

/// Time to accumulate twist `mu_target` (π/2 for the cat state).
pub fn squeezing_time(chi: f64, mu_target: f64) -> Result<f64> {
    if !(chi > 0.0) {
        return Err(invalid("chi", format!("must be positive, got {chi}")));
    }
    Ok(mu_target / chi)
}

/// Photons scattered per atom per second, `(χ/2𝒞)(1+δ̃²)/|δ̃|`.
pub fn scattering_rate(cooperativity: f64, delta_tilde: f64, chi: f64) -> Result<f64> {
    if cooperativity <= 0.0 {
        return Err(invalid("cooperativity", "must be positive"));
    }
    if delta_tilde == 0.0 {
        return Err(invalid("delta_tilde", "must be nonzero"));
    }
    Ok(chi / (2.0 * cooperativity) * (1.0 + delta_tilde * delta_tilde) / delta_tilde.abs())
}

/// Dephasing rate of the effective Lindblad term, `γ = 2χ/δ̃`.
pub fn dephasing_rate(chi: f64, delta_tilde: f64) -> f64 {
    2.0 * chi / delta_tilde
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub jy_mean: f64,
    pub jx_sq: f64,
    pub jy_sq: f64,
    pub jz_mean: f64,
    pub jz_sq: f64,
}

impl MomentSet {
    /// Moments of the CSS along +y at the start of the twist.
    pub fn css_plus_y(j: f64) -> Self {
        Self {
            jy_mean: j,
            jx_sq: j / 2.0,
            jy_sq: j * j,
            jz_mean: 0.0,
            jz_sq: j / 2.0,
        }
    }

    pub fn var_jx(&self) -> f64 {
        self.jx_sq
    }

    pub fn var_jy(&self) -> f64 {
        self.jy_sq - self.jy_mean * self.jy_mean
    }
}

/// Exact solution of the moment equations under `L = √γ J_z` alone.
pub fn decay_moments(initial: &MomentSet, gamma: f64, t: f64) -> Result<MomentSet> {
    if t < 0.0 {
        return Err(invalid("t", "time must be non-negative"));
    }
    let gt = gamma * t;
    if gt < 0.0 {
        return Err(invalid("gamma", "γt must be non-negative"));
    }
    let sum = initial.jx_sq + initial.jy_sq;
    let diff = (initial.jx_sq - initial.jy_sq) * (-2.0 * gt).exp();
    Ok(MomentSet {
        jy_mean: initial.jy_mean * (-gt / 2.0).exp(),
        jx_sq: (sum + diff) / 2.0,
        jy_sq: (sum - diff) / 2.0,
        jz_mean: initial.jz_mean,
        jz_sq: initial.jz_sq,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityBudget {
    pub n_atoms: f64,
    pub cooperativity: f64,
    pub delta_tilde: f64,
    pub gamma_t: f64,
    pub ds_cav_sq: f64,
    pub ds_se_sq: f64,
    pub dn_cav: f64,
    pub dn_se: f64,
    /// Fractional loss of coherent atoms Θ.
    pub theta_frac: f64,
    /// Ñ = N(1−Θ).
    pub n_eff: f64,
    /// Full expression evaluated at φ_o = π/(2Ñ).
    pub f_linear: f64,
    pub f_db: f64,
    /// First-order expansion in Θ.
    pub f_eq38_linear: f64,
    /// Closed form `(π²/(32𝒞_N))^{1/4}` valid at the optimal detuning.
    pub theta_closed: f64,
    /// `N/(1+2Θ+8Θ²+32Θ³)` with the closed-form Θ.
    pub f_closed_linear: f64,
    pub f_closed_db: f64,
    pub f_ideal_db: f64,
}

pub fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Θ at the optimal detuning, `(π²/(32𝒞_N))^{1/4}`.
pub fn theta_closed_form(n_atoms: f64, cooperativity: f64) -> f64 {
    (PI * PI / (32.0 * n_atoms * cooperativity)).powf(0.25)
}

pub fn improvement_factor(n_atoms: f64, cooperativity: f64, delta_tilde: f64, chi_t: f64) -> Result<FidelityBudget> {
    if !(n_atoms >= 1.0) {
        return Err(invalid("n_atoms", "must be at least 1"));
    }
    if !(cooperativity > 0.0) {
        return Err(invalid("cooperativity", "must be positive"));
    }
    if !(delta_tilde > 0.0) {
        return Err(invalid("delta_tilde", "must be positive"));
    }
    let n = n_atoms;
    let gamma_t = 2.0 * chi_t / delta_tilde;
    let ds_cav_sq = n * n * gamma_t / 2.0;
    let dn_cav = n * gamma_t / 2.0;
    let ds_se_sq = n * chi_t / (8.0 * cooperativity) * delta_tilde.abs();
    let dn_se = ds_se_sq.sqrt();
    let theta = (dn_cav + dn_se) / n;
    if theta >= 1.0 {
        return Err(Error::BudgetInvalid { theta });
    }
    let n_eff = n * (1.0 - theta);
    let f_linear = 1.0 / (4.0 * n / n_eff.powi(4) * (n_eff * n_eff / 4.0 + ds_cav_sq + ds_se_sq));
    let f_eq38_linear = 1.0
        / ((1.0 + 2.0 * theta) / n
            + 2.0 * PI / (n * n)
                * (1.0 + 4.0 * theta)
                * (n / delta_tilde.abs() + delta_tilde.abs() / (8.0 * cooperativity)));
    let tc = theta_closed_form(n, cooperativity);
    let f_closed_linear = n / (1.0 + 2.0 * tc + 8.0 * tc * tc + 32.0 * tc.powi(3));
    Ok(FidelityBudget {
        n_atoms: n,
        cooperativity,
        delta_tilde,
        gamma_t,
        ds_cav_sq,
        ds_se_sq,
        dn_cav,
        dn_se,
        theta_frac: theta,
        n_eff,
        f_linear,
        f_db: db(f_linear),
        f_eq38_linear,
        theta_closed: tc,
        f_closed_linear,
        f_closed_db: db(f_closed_linear),
        f_ideal_db: db(n),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalDetuning {
    pub delta_tilde: f64,
    /// Set when 𝒞_N < 1, outside the regime the optimum was derived for.
    pub warning: Option<String>,
}

/// `|δ̃| = √(8𝒞_N)`.
pub fn optimal_detuning(n_atoms: f64, cooperativity: f64) -> Result<OptimalDetuning> {
    let cn = n_atoms * cooperativity;
    if !(cn > 0.0) {
        return Err(invalid("cooperativity", "collective cooperativity must be positive"));
    }
    Ok(OptimalDetuning {
        delta_tilde: (8.0 * cn).sqrt(),
        warning: (cn < 1.0).then(|| format!("collective cooperativity {cn} < 1: optimum assumes 𝒞_N >> 1")),
    })
}

/// Budget at the optimal detuning with `χt = π/2`.
pub fn optimal_budget(n_atoms: f64, cooperativity: f64) -> Result<FidelityBudget> {
    let d = optimal_detuning(n_atoms, cooperativity)?;
    improvement_factor(n_atoms, cooperativity, d.delta_tilde, FRAC_PI_2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Separation {
    pub distance: f64,
    pub distinguishable: bool,
}

/// `𝒟 = v·t`; a scattered photon can tell the arms apart once 𝒟 ≥ λ_P.
pub fn wavepacket_separation(recoil_velocity: f64, duration: f64, photon_wavelength: f64) -> Result<Separation> {
    if recoil_velocity < 0.0 || duration < 0.0 || photon_wavelength < 0.0 {
        return Err(invalid("separation", "inputs must be non-negative"));
    }
    let distance = recoil_velocity * duration;
    Ok(Separation {
        distance,
        distinguishable: distance >= photon_wavelength,
    })
}

/// Duration at which the separation reaches one wavelength.
pub fn distinguishability_time(recoil_velocity: f64, photon_wavelength: f64) -> Result<f64> {
    if !(recoil_velocity > 0.0) {
        return Err(invalid("recoil_velocity", "must be positive"));
    }
    Ok(photon_wavelength / recoil_velocity)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(kappa: f64, delta_tilde: f64, xi_sq: f64) -> CavityParams {
        CavityParams {
            kappa: Some(kappa),
            delta_tilde,
            xi_sq: Some(xi_sq),
            gamma_sp: Some(1.0),
            delta_opt: Some(10.0),
            ..Default::default()
        }
    }

    #[test]
    fn resonant_amplitude() {
        let p = params(4.0, 0.0, 2.0);
        let z = steady_state_amplitude(&p).unwrap();
        assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let p = params(3.0, 0.0, 5.0);
        assert!((steady_state_amplitude(&p).unwrap().norm_sqr() - 2.0 * 5.0 / 3.0).abs() < 1e-12);
        let far = params(4.0, 1e9, 2.0);
        assert!(steady_state_amplitude(&far).unwrap().norm() < 1e-8);
        assert!(steady_state_amplitude(&params(0.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn default_cooperativity_is_reference() {
        let p = CavityParams::default();
        assert!((p.cooperativity - 900.0).abs() < 1e-9);
        assert!((cooperativity_from_geometry(200e-6, 1e-4) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn chi_is_odd_and_cubic() {
        let p = params(1.0, 3.0, 1e6);
        let mut q = p.clone();
        q.delta_tilde = -3.0;
        assert_eq!(squeezing_rate_chi(&p).unwrap(), -squeezing_rate_chi(&q).unwrap());
        let a = squeezing_rate_engineering(100.0, 1e-3, 20e-6, 1e-5).unwrap();
        let b = squeezing_rate_engineering(200.0, 1e-3, 20e-6, 1e-5).unwrap();
        assert!((a - 1e8).abs() < 1e-6);
        assert!((b / a - 0.125).abs() < 1e-15);
        let mut z = p.clone();
        z.delta_opt = Some(0.0);
        assert!(squeezing_rate_chi(&z).is_err());
    }

    #[test]
    fn light_shift_form_agrees() {
        // ε̃ = 𝒞Γ/Δ gives the cooperativity form
        let p = params(1.0, 0.7, 1e5);
        let eps = p.cooperativity * 1.0 / 10.0;
        let a = squeezing_rate_from_light_shift(0.7, 1e5, eps);
        assert!((a - squeezing_rate_chi(&p).unwrap()).abs() < 1e-9 * a.abs());
    }

    #[test]
    fn scattering_limits() {
        assert!((scattering_rate(5.0, 1.0, 7.0).unwrap() - 7.0 / 5.0).abs() < 1e-15);
        let big = scattering_rate(5.0, 1e4, 7.0).unwrap();
        assert!((big / (7.0 * 1e4 / 10.0) - 1.0).abs() < 1e-7);
        assert_eq!(scattering_rate(5.0, 2.0, 0.0).unwrap(), 0.0);
        assert!(scattering_rate(0.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn moments() {
        let m0 = MomentSet::css_plus_y(20.0);
        assert_eq!(decay_moments(&m0, 1.0, 0.0).unwrap(), m0);
        let m = decay_moments(&m0, 0.01, 1.0).unwrap();
        assert!((m.jy_mean - 20.0 * (-0.005f64).exp()).abs() < 1e-12);
        assert!((m.jx_sq + m.jy_sq - m0.jx_sq - m0.jy_sq).abs() < 1e-9);
        assert!(decay_moments(&m0, 1.0, -1.0).is_err());
    }

    #[test]
    fn budget_limits() {
        let b = improvement_factor(1e4, 1e12, 8e8f64.sqrt() * 1e4, FRAC_PI_2).unwrap();
        assert!((b.f_linear / 1e4 - 1.0).abs() < 1e-3);
        let b = optimal_budget(1e7, 0.01).unwrap();
        assert!((b.delta_tilde - 8e5f64.sqrt()).abs() < 1e-9);
        assert!((b.theta_closed - 0.0419).abs() < 1e-4);
        assert!(b.f_linear <= 1e7);
        assert!(matches!(improvement_factor(10.0, 1e-6, 1.0, FRAC_PI_2), Err(Error::BudgetInvalid { .. })));
    }

    #[test]
    fn detuning() {
        assert!((optimal_detuning(1.0, 0.125).unwrap().delta_tilde - 1.0).abs() < 1e-15);
        let a = optimal_detuning(100.0, 1.0).unwrap().delta_tilde;
        let b = optimal_detuning(200.0, 1.0).unwrap().delta_tilde;
        assert!((b / a - 2f64.sqrt()).abs() < 1e-14);
        assert!(optimal_detuning(1.0, 0.5).unwrap().warning.is_some());
        assert!(optimal_detuning(10.0, 0.5).unwrap().warning.is_none());
    }

    #[test]
    fn separations() {
        let s = wavepacket_separation(0.2e-6, 0.15e-6, 780e-9).unwrap();
        assert!((s.distance - 0.03e-12).abs() < 1e-16);
        assert!(!s.distinguishable);
        let s = wavepacket_separation(12e-3, 0.15e-6, 780e-9).unwrap();
        assert!((s.distance - 1.8e-9).abs() < 1e-13);
        let t = distinguishability_time(12e-3, 780e-9).unwrap();
        assert!((t - 65e-6).abs() < 1e-9);
    }

    #[test]
    fn params_json() {
        let p = CavityParams::from_json(r#"{"power": 0.01, "kappa": 1e6}"#).unwrap();
        assert_eq!(p.power, 0.01);
        assert_eq!(p.delta_tilde, 100.0);
        assert!(CavityParams::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(CavityParams::from_json(r#"{"power": -1}"#).is_err());
    }
}
