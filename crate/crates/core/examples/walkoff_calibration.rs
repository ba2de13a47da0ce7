// Calibrating the velocity-mismatch model so the counterpropagating index is
// 0.2 at the 25 GHz bin spacing, and the fast-axis index for a 13 dB
// carrier-to-sideband contrast.

use std::f64::consts::PI;

use polfreq::device::{calibrate_walkoff, effective_counter_index, fast_axis_index};
use polfreq::error::Result;
use polfreq::freqbin::{bessel_j, ModIndex};

pub fn run() -> Result<f64> {
    let theta_co = ModIndex::carrier_depletion();
    let omega = 2.0 * PI * 25e9;
    let tau = calibrate_walkoff(theta_co, ModIndex::new(0.2)?, omega)?;
    println!("walk-off time: {:.4} ps", tau * 1e12);
    for ghz in [17.0, 20.0, 25.0, 27.0] {
        let theta = effective_counter_index(theta_co, 2.0 * PI * ghz * 1e9, tau)?;
        let j1 = bessel_j(1, theta)?;
        println!(
            "  {ghz:4.1} GHz: counter index {:.4}, conversion {:.5}",
            theta.value(),
            j1 * j1
        );
    }
    let fast = fast_axis_index(13.0)?;
    println!("fast-axis index for 13 dB contrast: {:.6}", fast.value());
    Ok(tau)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run().map(|_| ())
}
