//! Brute-force reference: the same pulse sequence on the full `2^N`
//! product space of spin-½ atoms, each rotated independently.
//!
//! Basis index bit `i` set means atom `i` is up. The symmetric Dicke state
//! with `k` up spins is the equal-weight sum over bitstrings of weight `k`,
//! divided by `√C(N,k)`.

use num_complex::Complex64;

use super::ProtocolSpec;
use crate::dicke::{Axis, EnsembleDims, Pulse, SpinState};
use crate::error::{Error, Result};

pub const ORACLE_MAX_ATOMS: usize = 4;

/// Single-atom 2×2 unitary, rows/columns ordered (down, up).
fn single_rotation(axis: Axis, angle: f64) -> [[Complex64; 2]; 2] {
    let c = Complex64::new((angle / 2.0).cos(), 0.0);
    let s = (angle / 2.0).sin();
    let zero = Complex64::new(0.0, 0.0);
    match axis {
        Axis::X => {
            let mis = Complex64::new(0.0, -s);
            [[c, mis], [mis, c]]
        }
        Axis::Y => {
            let s = Complex64::new(s, 0.0);
            [[c, s], [-s, c]]
        }
        Axis::Z => [
            [Complex64::from_polar(1.0, angle / 2.0), zero],
            [zero, Complex64::from_polar(1.0, -angle / 2.0)],
        ],
    }
}

fn apply_single(psi: &mut [Complex64], atom: usize, u: &[[Complex64; 2]; 2]) {
    let bit = 1usize << atom;
    for b in 0..psi.len() {
        if b & bit == 0 {
            let down = psi[b];
            let up = psi[b | bit];
            psi[b] = u[0][0] * down + u[0][1] * up;
            psi[b | bit] = u[1][0] * down + u[1][1] * up;
        }
    }
}

fn m_of(b: usize, n: usize) -> f64 {
    b.count_ones() as f64 - n as f64 / 2.0
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Product-space state after the full sequence, starting from all atoms down.
pub fn oracle_product_state(
    spec: &ProtocolSpec,
    n_atoms: usize,
    phi: f64,
    mu_override: Option<f64>,
) -> Result<Vec<Complex64>> {
    if n_atoms == 0 || n_atoms > ORACLE_MAX_ATOMS {
        return Err(Error::OracleTooLarge(n_atoms));
    }
    spec.validate()?;
    let mut psi = vec![Complex64::new(0.0, 0.0); 1 << n_atoms];
    psi[0] = Complex64::new(1.0, 0.0);
    for pulse in &spec.pulses {
        match *pulse {
            Pulse::Rotate { axis, angle } => {
                let u = single_rotation(axis, angle);
                for atom in 0..n_atoms {
                    apply_single(&mut psi, atom, &u);
                }
            }
            Pulse::Squeeze { mu, sign } => {
                let mu = mu_override.unwrap_or(mu);
                for (b, a) in psi.iter_mut().enumerate() {
                    let m = m_of(b, n_atoms);
                    *a *= Complex64::from_polar(1.0, sign.value() * mu * m * m);
                }
            }
            Pulse::DarkPhase { fraction, sign } => {
                for (b, a) in psi.iter_mut().enumerate() {
                    let m = m_of(b, n_atoms);
                    *a *= Complex64::from_polar(1.0, -sign.value() * fraction * phi * m);
                }
            }
        }
    }
    Ok(psi)
}

/// Projection of a product-space state onto the symmetric subspace, plus the
/// probability left outside it.
pub fn project_symmetric(psi: &[Complex64], n_atoms: usize) -> (Vec<Complex64>, f64) {
    let mut amps = vec![Complex64::new(0.0, 0.0); n_atoms + 1];
    for (b, &a) in psi.iter().enumerate() {
        amps[b.count_ones() as usize] += a;
    }
    for (k, a) in amps.iter_mut().enumerate() {
        *a /= binomial(n_atoms, k).sqrt();
    }
    let inside: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    let total: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
    (amps, (total - inside).max(0.0))
}

/// Runs `spec` on the product space and returns the Dicke-basis state.
pub fn oracle_run(
    spec: &ProtocolSpec,
    dims: EnsembleDims,
    phi: f64,
    mu_override: Option<f64>,
) -> Result<SpinState> {
    let n = dims.n_atoms();
    let psi = oracle_product_state(spec, n, phi, mu_override)?;
    let (amps, _leak) = project_symmetric(&psi, n);
    SpinState::from_amplitudes(dims, amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dicke::OperatorSet;
    use crate::protocol::{builtin, run, ProtocolId, ProtocolParams};

    #[test]
    fn rejects_large_ensembles() {
        let spec = builtin(ProtocolId::Crain, &ProtocolParams::default()).unwrap();
        let d = EnsembleDims::new(5).unwrap();
        assert!(matches!(oracle_run(&spec, d, 0.0, None), Err(Error::OracleTooLarge(5))));
    }

    #[test]
    fn stays_symmetric() {
        let spec = builtin(ProtocolId::Scain, &ProtocolParams::default()).unwrap();
        let psi = oracle_product_state(&spec, 4, 0.3, None).unwrap();
        let (_, leak) = project_symmetric(&psi, 4);
        assert!(leak < 1e-12);
    }

    #[test]
    fn single_atom_rotations_agree_with_collective() {
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            let spec = ProtocolSpec {
                name: "r".into(),
                pulses: vec![
                    Pulse::Rotate { axis: Axis::X, angle: 0.4 },
                    Pulse::Rotate { axis, angle: 1.1 },
                ],
                detection: crate::protocol::Detection::Cd,
            };
            for n in 1..=4 {
                let d = EnsembleDims::new(n).unwrap();
                let ops = OperatorSet::new(d);
                let a = oracle_run(&spec, d, 0.0, None).unwrap();
                let b = run(&spec, d, &ops, 0.0, None).unwrap();
                let diff: f64 = a
                    .amps()
                    .iter()
                    .zip(b.amps())
                    .map(|(x, y)| (x - y).norm())
                    .fold(0.0, f64::max);
                assert!(diff < 1e-12, "{axis:?} N={n}: {diff}");
            }
        }
    }
}
