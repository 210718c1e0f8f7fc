//! Cavity squeezing design numbers and the improvement-factor budget.

use catspin::cavity::{
    cooperativity_from_geometry, distinguishability_time, optimal_budget, squeezing_rate_engineering,
    squeezing_time, wavepacket_separation,
};
use std::f64::consts::FRAC_PI_2;

fn main() -> catspin::Result<()> {
    let cases = [
        ("reference", 1e-3, 20e-6, 1e-5),
        ("D = 10 D_o, T = 10 T_o", 1e-3, 200e-6, 1e-4),
        ("  and P = 10 mW", 1e-2, 200e-6, 1e-4),
    ];
    for (label, p, d, t) in cases {
        let chi = squeezing_rate_engineering(100.0, p, d, t)?;
        println!(
            "{label:<24} C = {:8.2}  χ = {chi:9.3e} /s  t_SC = {:9.3e} s",
            cooperativity_from_geometry(d, t),
            squeezing_time(chi, FRAC_PI_2)?
        );
    }

    let b = optimal_budget(1e7, 0.01)?;
    println!("\nN = 1e7, C = 0.01, δ̃ = {:.1}", b.delta_tilde);
    println!("  Θ pipeline = {:.4}   Θ closed form = {:.4}", b.theta_frac, b.theta_closed);
    println!("  F = {:.3} dB (closed form {:.3} dB, ideal {:.1} dB)", b.f_db, b.f_closed_db, b.f_ideal_db);

    let s = wavepacket_separation(12e-3, 0.15e-6, 780e-9)?;
    println!("\nSCAIN squeeze: separation {:.2e} m, distinguishable: {}", s.distance, s.distinguishable);
    println!("dark zone for 𝒟 = λ_P: {:.1} µs", distinguishability_time(12e-3, 780e-9)? * 1e6);
    Ok(())
}
