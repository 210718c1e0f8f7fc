//! Husimi distribution at each SCAIN stage: peak direction and the
//! sphere-quadrature normalisation.

use catspin::husimi::{qpd_field, SphereGrid};
use catspin::protocol::run_stages;
use catspin::{builtin_for, EnsembleDims, OperatorSet, ProtocolId, ProtocolParams};
use std::f64::consts::PI;

fn main() -> catspin::Result<()> {
    let n = 40;
    let dims = EnsembleDims::new(n)?;
    let ops = OperatorSet::new(dims);
    let spec = builtin_for(ProtocolId::Scain, &ProtocolParams::default(), dims)?;
    let phi = PI / (2.0 * n as f64);
    let grid = SphereGrid::default_figure();

    for (i, state) in run_stages(&spec, dims, &ops, phi, None)?.iter().enumerate() {
        let field = qpd_field(state, &grid)?;
        let (it, ip, q) = field.argmax();
        println!(
            "stage {}  peak Q = {:.3} at θ = {:6.1}°, φ = {:6.1}°  norm = {:.5}",
            (b'A' + i as u8) as char,
            q,
            grid.thetas[it].to_degrees(),
            grid.phis[ip].to_degrees(),
            field.normalization()
        );
    }
    Ok(())
}
