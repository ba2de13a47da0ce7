// Computational-basis truth table: exact, and from simulated counts.

use polfreq::device::{build_cnot, DeviceParams};
use polfreq::error::Result;
use polfreq::measurement::{truth_table, truth_table_analytic, Exposure, TruthTable};
use polfreq::qubits::BASIS_LABELS;

fn show(name: &str, t: &TruthTable) {
    println!("{name}: average correct {:.4}", t.average_correct);
    for (label, row) in BASIS_LABELS.iter().zip(&t.probabilities) {
        let cells: Vec<String> = row.iter().map(|p| format!("{p:.4}")).collect();
        println!("  |{label}> -> {}", cells.join(" "));
    }
}

pub fn run() -> Result<TruthTable> {
    let ideal = build_cnot(&DeviceParams::ideal())?;
    show("ideal, analytic", &truth_table_analytic(&ideal)?);

    let paper = build_cnot(&DeviceParams::paper())?;
    show("paper, analytic", &truth_table_analytic(&paper)?);
    let sampled = truth_table(&paper, &Exposure::new(1e6, 10.0, 7)?)?;
    show("paper, sampled", &sampled);
    Ok(sampled)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run().map(|_| ())
}
