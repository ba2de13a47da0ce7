// Preparing the Bell-synthesis inputs with a half-wave plate, and what a
// finite-extinction splitter lets through.

use std::f64::consts::FRAC_PI_8;

use polfreq::error::Result;
use polfreq::polarization::{pbs_port, pdle, waveplate, Axis, JonesVector, PbsPort, Retarder};

pub fn run() -> Result<f64> {
    let h = JonesVector::horizontal();
    let d = waveplate(Retarder::Half, FRAC_PI_8) * h;
    let a = waveplate(Retarder::Half, -FRAC_PI_8) * h;
    println!(
        "HWP(+22.5 deg)|H> overlap with |D>: {:.12}",
        d.overlap(&JonesVector::diagonal())
    );
    println!(
        "HWP(-22.5 deg)|H> overlap with |A>: {:.12}",
        a.overlap(&JonesVector::antidiagonal())
    );

    let r = waveplate(Retarder::Quarter, 0.0) * JonesVector::diagonal();
    println!("QWP(0)|D> overlap with |R>: {:.12}", r.overlap(&JonesVector::right()));

    let leak = (pbs_port(PbsPort::Transmit, 25.0)? * JonesVector::vertical()).norm_squared();
    println!("25 dB splitter: V leaks {leak:.2e} into the transmit port");

    let balanced = pdle(Axis::H, 0.2695)? * JonesVector::diagonal();
    println!(
        "PDLE on H: |H|^2 = {:.4}, |V|^2 = {:.4}",
        balanced.h().norm_sqr(),
        balanced.v().norm_sqr()
    );
    Ok(d.overlap(&JonesVector::diagonal()))
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run().map(|_| ())
}
