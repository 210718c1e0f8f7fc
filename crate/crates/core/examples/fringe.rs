//! SCAIN fringes for even N against the closed-form law, next to CRAIN.

use catspin::observables::fringe_scan;
use catspin::{builtin_for, EnsembleDims, OperatorSet, ProtocolId, ProtocolParams};
use std::f64::consts::PI;

fn main() -> catspin::Result<()> {
    let n = 40;
    let dims = EnsembleDims::new(n)?;
    let ops = OperatorSet::new(dims);
    let params = ProtocolParams::default();
    let scain = builtin_for(ProtocolId::Scain, &params, dims)?;
    let crain = builtin_for(ProtocolId::Crain, &params, dims)?;

    let grid: Vec<f64> = (0..=20).map(|i| -PI / 20.0 + PI / 200.0 * i as f64).collect();
    let a = fringe_scan(&scain, dims, &ops, &grid, None)?;
    let b = fringe_scan(&crain, dims, &ops, &grid, None)?;

    println!("{:>9} {:>10} {:>10} {:>10}", "phi", "scain", "-N/2cosNφ", "crain");
    for (p, q) in a.iter().zip(&b) {
        let law = -(n as f64) / 2.0 * (n as f64 * p.phi).cos();
        println!("{:>9.5} {:>10.5} {:>10.5} {:>10.5}", p.phi, p.signal, law, q.signal);
    }
    Ok(())
}
