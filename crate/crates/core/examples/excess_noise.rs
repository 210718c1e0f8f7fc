//! Robustness to excess noise for the five protocol scalings.

use catspin::observables::noise_model_table;

fn main() {
    let n = 1e4;
    println!("N = {n}");
    println!("{:<10} {:>10} {:>12} {:>14}", "protocol", "Λ_QPN", "crossover", "Λ=√(N/2) at");
    for r in noise_model_table(n) {
        let useful = r.usefulness_limit(n).map_or("-".to_string(), |u| format!("{u:.4e}"));
        println!("{:<10} {:>10.2} {:>12.4e} {:>14}", r.protocol, r.lambda_qpn(n), r.crossover(n), useful);
    }
}
