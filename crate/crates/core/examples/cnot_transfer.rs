// Builds the gate from its optical parts and prints the postselected 4x4
// transfer matrix for both presets.

use polfreq::device::{build_cnot, Preset};
use polfreq::error::Result;
use polfreq::qubits::BASIS_LABELS;

pub fn run() -> Result<[f64; 4]> {
    let mut success = [0.0; 4];
    for preset in [Preset::Ideal, Preset::Paper] {
        let gate = build_cnot(&preset.params()?)?;
        println!("{} preset, rows = output, columns = input:", preset.name());
        let u = gate.subspace_operator();
        for r in 0..4 {
            let row: Vec<String> = (0..4)
                .map(|c| format!("{:+.4}{:+.4}i", u[(r, c)].re, u[(r, c)].im))
                .collect();
            println!("  {}  {}", BASIS_LABELS[r], row.join("  "));
        }
        for (label, p) in gate.success_probability_map() {
            println!("  success |{label}>: {p:.4}");
        }
        success = gate.success_probabilities();
    }
    Ok(success)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run().map(|_| ())
}
