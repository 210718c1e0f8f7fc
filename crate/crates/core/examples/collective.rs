//! Collective-state populations through the SCAIN sequence, even and odd N.

use catspin::protocol::run_stages;
use catspin::{builtin_for, EnsembleDims, OperatorSet, ProtocolId, ProtocolParams};
use std::f64::consts::PI;

fn main() -> catspin::Result<()> {
    for n in [40, 41] {
        let dims = EnsembleDims::new(n)?;
        let ops = OperatorSet::new(dims);
        let spec = builtin_for(ProtocolId::Scain, &ProtocolParams::default(), dims)?;
        println!("N = {n}, φ = π/80");
        for (i, s) in run_stages(&spec, dims, &ops, PI / 80.0, None)?.iter().enumerate() {
            let p = s.populations();
            let occupied = p.iter().filter(|&&x| x > 1e-6).count();
            println!(
                "  {}: P(E0) = {:.4}  P(EN) = {:.4}  occupied states = {occupied}",
                (b'A' + i as u8) as char,
                p[0],
                p[n]
            );
        }
    }
    Ok(())
}
