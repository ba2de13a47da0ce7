// Sideband amplitudes of a single phase modulator, and the drive that
// empties the carrier.

use polfreq::error::Result;
use polfreq::freqbin::{bessel_j, bessel_j0_first_zero, eom_operator, BinLattice, ModIndex, PhaseSign};

pub fn run() -> Result<f64> {
    let zero = ModIndex::new(bessel_j0_first_zero())?;
    let j1 = bessel_j(1, zero)?;
    println!("first zero of J0: {:.12}", zero.value());
    println!("|J1|^2 there: {:.6}", j1 * j1);

    let lattice = BinLattice::default();
    for theta in [0.5, 1.0, zero.value()] {
        let op = eom_operator(ModIndex::new(theta)?, PhaseSign::Plus, &lattice)?;
        let powers: Vec<String> = (-2..=2)
            .map(|k| format!("{:+}: {:.4}", k, op.entry(k, 0).norm_sqr()))
            .collect();
        println!("theta = {theta:.3}  {}", powers.join("  "));
    }
    Ok(j1 * j1)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run().map(|_| ())
}
