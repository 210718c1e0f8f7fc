//! A protocol defined in JSON: CRAIN-style sequence with y-axis beam
//! splitters, read out on |E_0⟩.

use catspin::observables::fringe_scan;
use catspin::{EnsembleDims, OperatorSet, ProtocolSpec};

const SPEC: &str = r#"{
  "name": "y-raman",
  "pulses": [
    {"kind": "rotate", "axis": "y", "angle": 1.5707963267948966},
    {"kind": "dark_phase", "fraction": 0.5, "sign": 1},
    {"kind": "rotate", "axis": "x", "angle": 3.141592653589793},
    {"kind": "dark_phase", "fraction": 0.5, "sign": -1},
    {"kind": "rotate", "axis": "y", "angle": 1.5707963267948966}
  ],
  "detection": {"mode": "csd", "index": 0}
}"#;

fn main() -> catspin::Result<()> {
    let spec = ProtocolSpec::from_json(SPEC)?;
    let dims = EnsembleDims::new(6)?;
    let ops = OperatorSet::new(dims);
    let grid: Vec<f64> = (0..=8).map(|i| i as f64 * 0.25).collect();
    for p in fringe_scan(&spec, dims, &ops, &grid, None)? {
        let closed = (p.phi / 2.0).sin().powi(12);
        println!("φ = {:.2}  P(E0) = {:.5}  sin^2N(φ/2) = {closed:.5}  pgs = {:+.5}", p.phi, p.signal, p.pgs);
    }
    Ok(())
}
