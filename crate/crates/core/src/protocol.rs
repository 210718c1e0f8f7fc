//! Interferometer and clock protocols as ordered pulse sequences.
//!
//! Pulses are listed in application order, i.e. right-to-left relative to the
//! written operator products. Every protocol starts from `|E_0⟩ = |-ẑ⟩`.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::dicke::{Axis, EnsembleDims, OperatorSet, Pulse, Sign, SpinState};
use crate::error::{invalid, Error, Result};

pub mod oracle;

pub use oracle::oracle_run;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ProtocolId {
    /// Conventional Raman interferometer: π/2 – dark – π – dark – π/2.
    Crain,
    /// Schrödinger-cat interferometer.
    Scain,
    /// Conventional Ramsey clock.
    Cac,
    /// Collective-state clock: CAC pulses read out on `|E_N⟩`.
    Cosac,
    /// Schrödinger-cat clock.
    Scac,
}

impl ProtocolId {
    pub const ALL: [ProtocolId; 5] = [
        ProtocolId::Crain,
        ProtocolId::Scain,
        ProtocolId::Cac,
        ProtocolId::Cosac,
        ProtocolId::Scac,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolId::Crain => "CRAIN",
            ProtocolId::Scain => "SCAIN",
            ProtocolId::Cac => "CAC",
            ProtocolId::Cosac => "COSAC",
            ProtocolId::Scac => "SCAC",
        }
    }
}

impl fmt::Display for ProtocolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProtocolId::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownProtocol(s.to_string()))
    }
}

/// Which observable is read out at the end of a protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Detection {
    /// Conventional detection, signal `⟨J_z⟩`.
    Cd,
    /// Conventional detection reported as the upper-state atom count
    /// `J + ⟨J_z⟩`.
    SpinUp,
    /// Collective-state detection, signal `|⟨E_index|ψ⟩|²`.
    Csd { index: usize },
}

impl Detection {
    pub fn validate(&self, dims: EnsembleDims) -> Result<()> {
        match *self {
            Detection::Csd { index } if index > dims.n_atoms() => Err(Error::IndexOutOfRange {
                index,
                max: dims.n_atoms(),
            }),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub mu: f64,
    /// Auxiliary rotation axis, x or y.
    pub ara: Axis,
    /// Corrective rotation sign: +1 redoes, -1 undoes the first auxiliary
    /// rotation.
    pub xi: Sign,
    /// `None` picks the protocol's default read-out.
    pub detection: Option<Detection>,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            mu: FRAC_PI_2,
            ara: Axis::X,
            xi: Sign::Minus,
            detection: None,
        }
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() {
            return Err(invalid("mu", format!("must be finite, got {}", self.mu)));
        }
        if self.ara == Axis::Z {
            return Err(invalid("ara", "auxiliary rotation axis must be x or y"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub name: String,
    pub pulses: Vec<Pulse>,
    pub detection: Detection,
}

impl ProtocolSpec {
    pub fn from_json(s: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Indices of pulses that bind the scan phase φ.
    pub fn phase_pulses(&self) -> Vec<usize> {
        self.pulses
            .iter()
            .enumerate()
            .filter(|(_, p)| matches!(p, Pulse::DarkPhase { .. }))
            .map(|(i, _)| i)
            .collect()
    }

    /// Indices of pulses that bind μ.
    pub fn squeeze_pulses(&self) -> Vec<usize> {
        self.pulses
            .iter()
            .enumerate()
            .filter(|(_, p)| matches!(p, Pulse::Squeeze { .. }))
            .map(|(i, _)| i)
            .collect()
    }

    /// Checks every pulse, plus the dark-zone structure implied by a built-in
    /// name: SCAIN/CRAIN carry two half-phase zones of opposite sign, the
    /// clocks a single full-phase zone.
    pub fn validate(&self) -> Result<()> {
        for p in &self.pulses {
            p.validate()?;
        }
        let darks: Vec<(f64, Sign)> = self
            .pulses
            .iter()
            .filter_map(|p| match *p {
                Pulse::DarkPhase { fraction, sign } => Some((fraction, sign)),
                _ => None,
            })
            .collect();
        let malformed = |reason: &str| Error::MalformedProtocol {
            name: self.name.clone(),
            reason: reason.to_string(),
        };
        match self.name.parse::<ProtocolId>() {
            Ok(ProtocolId::Scain | ProtocolId::Crain) => {
                let ok = darks.len() == 2
                    && darks.iter().all(|&(f, _)| f == 0.5)
                    && darks[0].1 != darks[1].1;
                if !ok {
                    return Err(malformed(
                        "expected exactly two dark zones with fraction 1/2 and opposite signs",
                    ));
                }
            }
            Ok(ProtocolId::Scac | ProtocolId::Cac | ProtocolId::Cosac) => {
                if darks.len() != 1 || darks[0].0 != 1.0 {
                    return Err(malformed("expected exactly one dark zone with fraction 1"));
                }
            }
            Err(_) => {}
        }
        Ok(())
    }

    /// Copy with the first `n` pulses only (stage truncation).
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n > self.pulses.len() {
            return Err(invalid(
                "stage",
                format!("protocol `{}` has only {} pulses", self.name, self.pulses.len()),
            ));
        }
        Ok(Self {
            name: self.name.clone(),
            pulses: self.pulses[..n].to_vec(),
            detection: self.detection,
        })
    }

    /// Number of pulses applied before stage letter `A`, `B`, … (A is the
    /// initial state).
    pub fn stage_pulse_count(&self, stage: char) -> Result<usize> {
        let s = stage.to_ascii_uppercase();
        if !s.is_ascii_uppercase() {
            return Err(invalid("stage", format!("expected a letter, got `{stage}`")));
        }
        let n = (s as u8 - b'A') as usize;
        if n > self.pulses.len() {
            let last = (b'A' + self.pulses.len() as u8) as char;
            return Err(invalid(
                "stage",
                format!("protocol `{}` has stages A..={last}, got `{stage}`", self.name),
            ));
        }
        Ok(n)
    }
}

fn rot(axis: Axis, angle: f64) -> Pulse {
    Pulse::Rotate { axis, angle }
}

/// Built-in protocol sequences.
pub fn builtin(id: ProtocolId, params: &ProtocolParams) -> Result<ProtocolSpec> {
    params.validate()?;
    let ProtocolParams { mu, ara, xi, .. } = *params;
    let half = |sign| Pulse::DarkPhase { fraction: 0.5, sign };
    let full = Pulse::DarkPhase {
        fraction: 1.0,
        sign: Sign::Plus,
    };
    let squeeze = Pulse::Squeeze { mu, sign: Sign::Minus };
    let unsqueeze = Pulse::Squeeze { mu, sign: Sign::Plus };

    let (pulses, default_detection) = match id {
        ProtocolId::Crain => (
            vec![
                rot(Axis::X, FRAC_PI_2),
                half(Sign::Plus),
                rot(Axis::X, PI),
                half(Sign::Minus),
                rot(Axis::X, FRAC_PI_2),
            ],
            Detection::Cd,
        ),
        ProtocolId::Scain => (
            vec![
                rot(Axis::X, FRAC_PI_2),
                squeeze,
                rot(ara, FRAC_PI_2),
                half(Sign::Plus),
                rot(Axis::X, PI),
                half(Sign::Minus),
                rot(ara, xi.value() * FRAC_PI_2),
                unsqueeze,
                rot(Axis::X, FRAC_PI_2),
            ],
            Detection::Cd,
        ),
        ProtocolId::Cac => (
            vec![rot(Axis::X, FRAC_PI_2), full, rot(Axis::X, FRAC_PI_2)],
            Detection::SpinUp,
        ),
        ProtocolId::Cosac => (
            vec![rot(Axis::X, FRAC_PI_2), full, rot(Axis::X, FRAC_PI_2)],
            Detection::Csd { index: usize::MAX },
        ),
        ProtocolId::Scac => (
            vec![
                rot(Axis::X, FRAC_PI_2),
                squeeze,
                rot(ara, FRAC_PI_2),
                full,
                rot(ara, xi.value() * FRAC_PI_2),
                unsqueeze,
                rot(Axis::X, FRAC_PI_2),
            ],
            Detection::Cd,
        ),
    };
    let spec = ProtocolSpec {
        name: id.name().to_string(),
        pulses,
        detection: params.detection.unwrap_or(default_detection),
    };
    spec.validate()?;
    Ok(spec)
}

/// Default collective-state read-out index: `|E_0⟩` for the interferometers,
/// `|E_N⟩` for the clocks.
pub fn default_csd_index(id: ProtocolId, dims: EnsembleDims) -> usize {
    match id {
        ProtocolId::Crain | ProtocolId::Scain => 0,
        ProtocolId::Cac | ProtocolId::Cosac | ProtocolId::Scac => dims.n_atoms(),
    }
}

/// Built-in bound to an ensemble size; resolves the COSAC placeholder index.
pub fn builtin_for(id: ProtocolId, params: &ProtocolParams, dims: EnsembleDims) -> Result<ProtocolSpec> {
    let mut spec = builtin(id, params)?;
    if let Detection::Csd { index } = spec.detection {
        if index == usize::MAX {
            spec.detection = Detection::Csd {
                index: default_csd_index(id, dims),
            };
        }
    }
    spec.detection.validate(dims)?;
    Ok(spec)
}

/// Applies one pulse with the scan phase `phi` and optional μ override.
pub fn apply_pulse(
    state: &mut SpinState,
    ops: &OperatorSet,
    pulse: &Pulse,
    phi: f64,
    mu_override: Option<f64>,
) -> Result<()> {
    match *pulse {
        Pulse::Rotate { axis, angle } => state.rotate(ops, axis, angle),
        Pulse::Squeeze { mu, sign } => state.twist(ops, mu_override.unwrap_or(mu), sign),
        Pulse::DarkPhase { fraction, sign } => state.dark_phase(ops, fraction * phi, sign),
    }
}

/// Runs the full sequence from `|E_0⟩`.
pub fn run(
    spec: &ProtocolSpec,
    dims: EnsembleDims,
    ops: &OperatorSet,
    phi: f64,
    mu_override: Option<f64>,
) -> Result<SpinState> {
    if ops.dims() != dims {
        return Err(Error::DimensionMismatch {
            state: dims.n_atoms(),
            ops: ops.dims().n_atoms(),
        });
    }
    let mut state = SpinState::ground(dims);
    for p in &spec.pulses {
        apply_pulse(&mut state, ops, p, phi, mu_override)?;
    }
    Ok(state)
}

/// States after every pulse; element 0 is the initial state (stage A).
pub fn run_stages(
    spec: &ProtocolSpec,
    dims: EnsembleDims,
    ops: &OperatorSet,
    phi: f64,
    mu_override: Option<f64>,
) -> Result<Vec<SpinState>> {
    let mut state = SpinState::ground(dims);
    let mut out = Vec::with_capacity(spec.pulses.len() + 1);
    out.push(state.clone());
    for p in &spec.pulses {
        apply_pulse(&mut state, ops, p, phi, mu_override)?;
        out.push(state.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scain_params() -> ProtocolParams {
        ProtocolParams::default()
    }

    #[test]
    fn scain_matches_operator_product() {
        let spec = builtin(ProtocolId::Scain, &scain_params()).unwrap();
        assert_eq!(spec.pulses.len(), 9);
        let mu = FRAC_PI_2;
        let want = vec![
            rot(Axis::X, FRAC_PI_2),
            Pulse::Squeeze { mu, sign: Sign::Minus },
            rot(Axis::X, FRAC_PI_2),
            Pulse::DarkPhase { fraction: 0.5, sign: Sign::Plus },
            rot(Axis::X, PI),
            Pulse::DarkPhase { fraction: 0.5, sign: Sign::Minus },
            rot(Axis::X, -FRAC_PI_2),
            Pulse::Squeeze { mu, sign: Sign::Plus },
            rot(Axis::X, FRAC_PI_2),
        ];
        assert_eq!(spec.pulses, want);
        assert_eq!(spec.detection, Detection::Cd);
    }

    #[test]
    fn crain_is_five_pulses() {
        let spec = builtin(ProtocolId::Crain, &scain_params()).unwrap();
        assert_eq!(spec.pulses.len(), 5);
        assert_eq!(spec.pulses[2], rot(Axis::X, PI));
        assert!(spec.squeeze_pulses().is_empty());
        assert_eq!(spec.phase_pulses(), vec![1, 3]);
    }

    #[test]
    fn scac_matches_operator_product() {
        let spec = builtin(ProtocolId::Scac, &scain_params()).unwrap();
        assert_eq!(spec.pulses.len(), 7);
        assert_eq!(spec.pulses[3], Pulse::DarkPhase { fraction: 1.0, sign: Sign::Plus });
        assert_eq!(spec.pulses[4], rot(Axis::X, -FRAC_PI_2));
    }

    #[test]
    fn ara_y_and_xi_plus() {
        let p = ProtocolParams {
            ara: Axis::Y,
            xi: Sign::Plus,
            ..Default::default()
        };
        let spec = builtin(ProtocolId::Scain, &p).unwrap();
        assert_eq!(spec.pulses[2], rot(Axis::Y, FRAC_PI_2));
        assert_eq!(spec.pulses[6], rot(Axis::Y, FRAC_PI_2));
    }

    #[test]
    fn cosac_resolves_detection_index() {
        let d = EnsembleDims::new(7).unwrap();
        let spec = builtin_for(ProtocolId::Cosac, &scain_params(), d).unwrap();
        assert_eq!(spec.detection, Detection::Csd { index: 7 });
        let cac = builtin_for(ProtocolId::Cac, &scain_params(), d).unwrap();
        assert_eq!(cac.pulses, spec.pulses);
    }

    #[test]
    fn unknown_protocol() {
        assert!(matches!("esp".parse::<ProtocolId>(), Err(Error::UnknownProtocol(_))));
        assert_eq!("scain".parse::<ProtocolId>().unwrap(), ProtocolId::Scain);
    }

    #[test]
    fn structure_validation() {
        let mut spec = builtin(ProtocolId::Scain, &scain_params()).unwrap();
        spec.pulses.remove(5);
        assert!(matches!(spec.validate(), Err(Error::MalformedProtocol { .. })));
        let mut spec = builtin(ProtocolId::Scac, &scain_params()).unwrap();
        spec.pulses[3] = Pulse::DarkPhase { fraction: 0.5, sign: Sign::Plus };
        assert!(spec.validate().is_err());
        // custom names are only checked pulse by pulse
        spec.name = "custom".into();
        assert!(spec.validate().is_ok());
    }

    #[test]
    fn json_round_trip() {
        let spec = builtin(ProtocolId::Scain, &scain_params()).unwrap();
        let back = ProtocolSpec::from_json(&spec.to_json().unwrap()).unwrap();
        assert_eq!(back, spec);
        let js = r#"{"name":"custom","pulses":[{"kind":"rotate","axis":"x","angle":1.0},
            {"kind":"dark_phase","fraction":1.0,"sign":1}],"detection":{"mode":"csd","index":2}}"#;
        let spec = ProtocolSpec::from_json(js).unwrap();
        assert_eq!(spec.detection, Detection::Csd { index: 2 });
    }

    #[test]
    fn stages() {
        let spec = builtin(ProtocolId::Scain, &scain_params()).unwrap();
        assert_eq!(spec.stage_pulse_count('A').unwrap(), 0);
        assert_eq!(spec.stage_pulse_count('d').unwrap(), 3);
        assert_eq!(spec.stage_pulse_count('J').unwrap(), 9);
        assert!(spec.stage_pulse_count('K').is_err());
        assert_eq!(spec.truncated(3).unwrap().pulses.len(), 3);
    }

    #[test]
    fn crain_at_zero_phase_returns_to_ground() {
        for n in [1, 2, 5, 40] {
            let d = EnsembleDims::new(n).unwrap();
            let ops = OperatorSet::new(d);
            let spec = builtin(ProtocolId::Crain, &scain_params()).unwrap();
            let s = run(&spec, d, &ops, 0.0, None).unwrap();
            assert!((s.populations()[0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn scain_even_final_populations() {
        let d = EnsembleDims::new(40).unwrap();
        let ops = OperatorSet::new(d);
        let spec = builtin(ProtocolId::Scain, &scain_params()).unwrap();
        for phi in [0.0, 0.01, -0.037, PI / 80.0] {
            let p = run(&spec, d, &ops, phi, None).unwrap().populations();
            let c = (40.0 * phi / 2.0).cos().powi(2);
            assert!((p[0] - c).abs() < 1e-10);
            assert!((p[40] - (1.0 - c)).abs() < 1e-10);
            assert!(p[1..40].iter().all(|&x| x < 1e-10));
        }
    }

    #[test]
    fn scac_equal_split_at_quarter_fringe() {
        let d = EnsembleDims::new(40).unwrap();
        let ops = OperatorSet::new(d);
        let spec = builtin(ProtocolId::Scac, &scain_params()).unwrap();
        let p = run(&spec, d, &ops, PI / 80.0, None).unwrap().populations();
        assert!((p[0] - 0.5).abs() < 1e-10);
        assert!((p[40] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn mu_override_replaces_both_squeezes() {
        let d = EnsembleDims::new(6).unwrap();
        let ops = OperatorSet::new(d);
        let spec = builtin(ProtocolId::Scain, &scain_params()).unwrap();
        let mut zero = spec.clone();
        for p in zero.pulses.iter_mut() {
            if let Pulse::Squeeze { mu, .. } = p {
                *mu = 0.3;
            }
        }
        let a = run(&spec, d, &ops, 0.2, Some(0.3)).unwrap();
        let b = run(&zero, d, &ops, 0.2, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn run_stages_ends_at_run() {
        let d = EnsembleDims::new(8).unwrap();
        let ops = OperatorSet::new(d);
        let spec = builtin(ProtocolId::Scac, &scain_params()).unwrap();
        let stages = run_stages(&spec, d, &ops, 0.1, None).unwrap();
        assert_eq!(stages.len(), 8);
        assert_eq!(stages.last().unwrap(), &run(&spec, d, &ops, 0.1, None).unwrap());
    }
}
