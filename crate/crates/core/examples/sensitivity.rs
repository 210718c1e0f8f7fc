//! Peak Λ/N versus squeezing strength for N = 40 and 41.
//!
//! Uses a coarser φ window than the CLI default so it finishes quickly.

use catspin::observables::sensitivity_scan_mu;
use catspin::{builtin_for, EnsembleDims, OperatorSet, ProtocolId, ProtocolParams};
use std::f64::consts::FRAC_PI_2;

fn main() -> catspin::Result<()> {
    let mus: Vec<f64> = (0..=10).map(|i| FRAC_PI_2 * i as f64 / 10.0).collect();
    let window: Vec<f64> = (1..=400).map(|i| FRAC_PI_2 * i as f64 / 400.0).collect();
    for n in [40, 41] {
        let dims = EnsembleDims::new(n)?;
        let ops = OperatorSet::new(dims);
        let spec = builtin_for(ProtocolId::Scain, &ProtocolParams::default(), dims)?;
        let rows = sensitivity_scan_mu(&spec, dims, &ops, &mus, &window)?;
        println!("N = {n}");
        for r in rows {
            let l = r.normalized(n as f64).map_or("undefined".into(), |v| format!("{v:.4}"));
            println!("  mu/pi = {:.2}  Λ/N = {l}", r.mu.unwrap() / std::f64::consts::PI);
        }
    }
    println!("SQL/N for N = 41: {:.4}", 1.0 / 41f64.sqrt());
    Ok(())
}
