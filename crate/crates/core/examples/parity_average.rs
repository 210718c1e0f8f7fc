//! Sensitivity averaged over even and odd ensembles approaches HL/√2.

use catspin::observables::parity_average;

fn main() -> catspin::Result<()> {
    for n in [40.0, 1e2, 1e4, 1e6] {
        let avg = parity_average(n, f64::sqrt(n))?;
        println!("N = {n:>9}  average = {avg:>14.4}  ratio to N/√2 = {:.6}", avg / (n / 2f64.sqrt()));
    }
    Ok(())
}
