//! Collective-basis propagation against the 2^N product-space oracle.

use catspin::protocol::{oracle_run, ProtocolId};
use catspin::{builtin_for, run, EnsembleDims, OperatorSet, ProtocolParams};

fn main() -> catspin::Result<()> {
    for n in 1..=4 {
        let dims = EnsembleDims::new(n)?;
        let ops = OperatorSet::new(dims);
        let mut worst = 0.0f64;
        for id in ProtocolId::ALL {
            let spec = builtin_for(id, &ProtocolParams::default(), dims)?;
            for phi in [-1.3, 0.2, 2.9] {
                let a = run(&spec, dims, &ops, phi, None)?;
                let b = oracle_run(&spec, dims, phi, None)?;
                let d = a.amps().iter().zip(b.amps()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
                worst = worst.max(d);
            }
        }
        println!("N = {n}: max amplitude difference {worst:.2e}");
    }
    Ok(())
}
