// Conversion of bin 0 into bin 1 across the RF band, with and without the
// walk-off model for the counterpropagating direction.

use polfreq::device::DeviceParams;
use polfreq::error::Result;
use polfreq::experiments::{sweep, Direction, RfRange, SweepRow};

pub fn run() -> Result<Vec<SweepRow>> {
    let range = RfRange::default();
    let paper = sweep(&DeviceParams::paper(), &range)?;
    let walkoff = DeviceParams {
        walkoff_time_s: Some(3.69e-11),
        ..DeviceParams::ideal()
    };
    let modeled = sweep(&walkoff, &range)?;
    println!("f/GHz   co      counter  counter(walk-off)");
    for (p, m) in paper.chunks(2).zip(modeled.chunks(2)) {
        let pick = |rows: &[SweepRow], d| {
            rows.iter()
                .find(|r| r.direction == d)
                .map_or(f64::NAN, |r| r.bin1_power)
        };
        println!(
            "{:5.1}  {:.4}  {:.5}  {:.5}",
            p[0].rf_frequency_ghz,
            pick(p, Direction::Co),
            pick(p, Direction::Counter),
            pick(m, Direction::Counter)
        );
    }
    Ok(paper)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run().map(|_| ())
}
