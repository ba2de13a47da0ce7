// All four Bell states from product inputs, reconstructed by tomography of
// simulated counts.

use polfreq::device::{bell_targets, build_cnot, DeviceParams};
use polfreq::error::Result;
use polfreq::measurement::{simulate_counts, Exposure, ProjectorSetting};
use polfreq::qubits::DensityMatrix;
use polfreq::tomography::{fidelity, sample_posterior, summarize, Stat, TomoConfig};

pub fn run() -> Result<Vec<Stat>> {
    let gate = build_cnot(&DeviceParams::paper())?;
    let settings = ProjectorSetting::tomographic_set();
    let mut out = Vec::new();
    for (seed, (input, target, ket)) in bell_targets().into_iter().enumerate() {
        let (state, _) = gate.apply_qubits(&input.ket())?;
        let exact = fidelity(&DensityMatrix::from_pure(&state)?, &ket)?;
        let records = simulate_counts(&state, &settings, &Exposure::new(1e6, 10.0, seed as u64)?)?;
        let posterior = sample_posterior(&records, &TomoConfig::with_seed(seed as u64))?;
        let s = summarize(&posterior.samples, &ket)?;
        println!(
            "{} -> {:<4} exact {:.4}  tomography {}  purity {:.4}  acceptance {:.2}",
            input.label(),
            target.label(),
            exact,
            s.fidelity.percent(),
            s.purity.mean,
            posterior.diagnostics.acceptance_rate
        );
        out.push(s.fidelity);
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run().map(|_| ())
}
