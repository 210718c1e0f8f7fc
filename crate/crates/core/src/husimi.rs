//! Husimi quasi-probability distribution on the Bloch sphere.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

use crate::dicke::{css_magnitudes, SpinState};
use crate::error::{invalid, Result};

/// Row-major (θ outer, φ inner) grid. θ spans [0, π] inclusive, φ spans
/// [0, 2π) with the endpoint dropped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereGrid {
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
}

impl SphereGrid {
    pub fn uniform(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < 2 || n_phi < 2 {
            return Err(invalid("grid", "need at least 2 points per axis"));
        }
        let thetas = (0..n_theta)
            .map(|i| PI * i as f64 / (n_theta - 1) as f64)
            .collect();
        let phis = (0..n_phi).map(|j| 2.0 * PI * j as f64 / n_phi as f64).collect();
        Ok(Self { thetas, phis })
    }

    /// One-degree figure grid.
    pub fn default_figure() -> Self {
        Self::uniform(181, 361).expect("static grid")
    }

    pub fn from_axes(thetas: Vec<f64>, phis: Vec<f64>) -> Result<Self> {
        let g = Self { thetas, phis };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let inc = |v: &[f64]| v.len() >= 2 && v.windows(2).all(|w| w[1] > w[0]);
        if !inc(&self.thetas) || !inc(&self.phis) {
            return Err(invalid("grid", "axes must be strictly increasing with at least 2 points"));
        }
        if self.thetas[0] < 0.0 || *self.thetas.last().unwrap() > PI + 1e-12 {
            return Err(invalid("grid", "θ must lie in [0, π]"));
        }
        if self.phis[0] < 0.0 || *self.phis.last().unwrap() >= 2.0 * PI {
            return Err(invalid("grid", "φ must lie in [0, 2π)"));
        }
        Ok(())
    }

    pub fn n_theta(&self) -> usize {
        self.thetas.len()
    }

    pub fn n_phi(&self) -> usize {
        self.phis.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QpdField {
    pub grid: SphereGrid,
    /// Row-major, `n_theta × n_phi`.
    pub values: Vec<f64>,
    pub n_atoms: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QpdSidecar {
    pub n_theta: usize,
    pub n_phi: usize,
    pub n_atoms: usize,
    pub stage_label: String,
}

/// Per-θ coefficients `c_k = conj(ψ_{N-k})·|Φ_k(θ)|` so that the overlap is
/// the polynomial `Σ c_k e^{ikφ}`.
fn row_coefficients(state: &SpinState, theta: f64) -> Vec<Complex64> {
    let d = state.dims();
    let n = d.n_atoms();
    css_magnitudes(d, theta)
        .into_iter()
        .enumerate()
        .map(|(k, m)| state.amp(n - k).conj() * m)
        .collect()
}

fn horner(coeffs: &[Complex64], phi: f64) -> Complex64 {
    let z = Complex64::from_polar(1.0, phi);
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// `|⟨Ψ|Φ(θ,φ)⟩|²`.
pub fn evaluate_qpd_point(state: &SpinState, theta: f64, phi: f64) -> f64 {
    horner(&row_coefficients(state, theta), phi).norm_sqr()
}

pub fn qpd_field(state: &SpinState, grid: &SphereGrid) -> Result<QpdField> {
    grid.validate()?;
    let values = grid
        .thetas
        .par_iter()
        .flat_map_iter(|&theta| {
            let c = row_coefficients(state, theta);
            grid.phis
                .iter()
                .map(|&phi| horner(&c, phi).norm_sqr())
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(QpdField {
        grid: grid.clone(),
        values,
        n_atoms: state.dims().n_atoms(),
    })
}

impl QpdField {
    pub fn at(&self, i_theta: usize, i_phi: usize) -> f64 {
        self.values[i_theta * self.grid.n_phi() + i_phi]
    }

    /// `(N+1)/(4π) Σ Q sinθ Δθ Δφ`, which is 1 for a uniform grid fine enough
    /// to resolve the state.
    pub fn normalization(&self) -> f64 {
        let g = &self.grid;
        let dth = (g.thetas[g.n_theta() - 1] - g.thetas[0]) / (g.n_theta() - 1) as f64;
        let dph = 2.0 * PI / g.n_phi() as f64;
        let sum: f64 = g
            .thetas
            .iter()
            .enumerate()
            .map(|(i, th)| {
                th.sin() * self.values[i * g.n_phi()..(i + 1) * g.n_phi()].iter().sum::<f64>()
            })
            .sum();
        (self.n_atoms as f64 + 1.0) / (4.0 * PI) * sum * dth * dph
    }

    /// Grid indices and value of the global maximum (first on ties).
    pub fn argmax(&self) -> (usize, usize, f64) {
        let (idx, v) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        (idx / self.grid.n_phi(), idx % self.grid.n_phi(), v)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "theta,phi,q")?;
        for (i, th) in self.grid.thetas.iter().enumerate() {
            for (j, ph) in self.grid.phis.iter().enumerate() {
                writeln!(w, "{:.16e},{:.16e},{:.16e}", th, ph, self.at(i, j))?;
            }
        }
        Ok(())
    }

    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    pub fn sidecar(&self, stage_label: &str) -> QpdSidecar {
        QpdSidecar {
            n_theta: self.grid.n_theta(),
            n_phi: self.grid.n_phi(),
            n_atoms: self.n_atoms,
            stage_label: stage_label.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dicke::{css_state, EnsembleDims, OperatorSet, Sign};
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn self_overlap_is_one() {
        let d = EnsembleDims::new(25).unwrap();
        let s = css_state(d, 1.1, 2.3).unwrap();
        assert!((evaluate_qpd_point(&s, 1.1, 2.3) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ground_state_poles() {
        let d = EnsembleDims::new(10).unwrap();
        let s = SpinState::ground(d);
        assert!(evaluate_qpd_point(&s, 0.0, 0.3) < 1e-15);
        assert!((evaluate_qpd_point(&s, PI, 0.3) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cat_state_half_weight_at_pole() {
        let d = EnsembleDims::new(6).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut a = vec![Complex64::new(0.0, 0.0); 7];
        a[0] = Complex64::new(r, 0.0);
        a[6] = Complex64::new(0.0, r);
        let s = SpinState::from_amplitudes(d, a).unwrap();
        assert!((evaluate_qpd_point(&s, 0.0, 1.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn plus_y_lobe_peak() {
        let d = EnsembleDims::new(20).unwrap();
        let s = css_state(d, FRAC_PI_2, FRAC_PI_2).unwrap();
        let f = qpd_field(&s, &SphereGrid::default_figure()).unwrap();
        let (i, j, v) = f.argmax();
        assert_eq!(i, 90);
        // φ step is 2π/361, so the nearest column sits just off π/2
        assert!((f.grid.phis[j] - FRAC_PI_2).abs() < PI / 361.0);
        assert!(v > 0.9999 && v <= 1.0);
        assert!(f.values.iter().all(|&q| (0.0..=1.0 + 1e-12).contains(&q)));
    }

    #[test]
    fn squeezed_even_state_has_equal_lobes() {
        let d = EnsembleDims::new(10).unwrap();
        let ops = OperatorSet::new(d);
        let mut s = SpinState::ground(d);
        s.rotate(&ops, crate::dicke::Axis::X, FRAC_PI_2).unwrap();
        s.twist(&ops, FRAC_PI_2, Sign::Minus).unwrap();
        let a = evaluate_qpd_point(&s, FRAC_PI_2, FRAC_PI_2);
        let b = evaluate_qpd_point(&s, FRAC_PI_2, 3.0 * FRAC_PI_2);
        assert!((a - b).abs() < 1e-9);
        assert!((a - 0.5).abs() < 1e-6);
    }

    #[test]
    fn quadrature_normalization() {
        let d = EnsembleDims::new(12).unwrap();
        let s = css_state(d, 0.7, 4.0).unwrap();
        let f = qpd_field(&s, &SphereGrid::uniform(181, 361).unwrap()).unwrap();
        assert!((f.normalization() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn grid_validation() {
        assert!(SphereGrid::uniform(1, 5).is_err());
        assert!(SphereGrid::from_axes(vec![0.0, 0.0], vec![0.0, 1.0]).is_err());
        assert!(SphereGrid::from_axes(vec![0.0, 1.0], vec![0.0, 2.0 * PI]).is_err());
    }

    #[test]
    fn exports() {
        let d = EnsembleDims::new(2).unwrap();
        let f = qpd_field(&SpinState::ground(d), &SphereGrid::uniform(3, 4).unwrap()).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 13);
        assert_eq!(f.to_le_bytes().len(), 12 * 8);
        let sc = serde_json::to_string(&f.sidecar("A")).unwrap();
        assert_eq!(sc, r#"{"n_theta":3,"n_phi":4,"n_atoms":2,"stage_label":"A"}"#);
    }
}
