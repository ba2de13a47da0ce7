// Round trip through the counts CSV: write simulated records, read them
// back as if they came from the lab, and reconstruct.

use polfreq::device::BellState;
use polfreq::error::Result;
use polfreq::measurement::{read_counts_csv, simulate_counts, write_counts_csv, Exposure, ProjectorSetting};
use polfreq::qubits::DensityMatrix;
use polfreq::tomography::{reconstruct, TomoConfig, TomographyReport};

pub fn run() -> Result<TomographyReport> {
    // A Werner-like state: 90% psi-, 10% white noise.
    let psi = BellState::PsiMinus.ket();
    let pure = DensityMatrix::from_pure(&psi)?;
    let rho = DensityMatrix::new(pure.matrix().scale(0.9) + DensityMatrix::maximally_mixed().matrix().scale(0.1))?;

    let records = simulate_counts(
        &rho,
        &ProjectorSetting::tomographic_set(),
        &Exposure::new(2e4, 5.0, 42)?,
    )?;
    let mut csv = Vec::new();
    write_counts_csv(&records, &mut csv)?;
    println!(
        "{}",
        String::from_utf8_lossy(&csv)
            .lines()
            .take(4)
            .collect::<Vec<_>>()
            .join("\n")
    );

    let ingested = read_counts_csv(&csv[..])?;
    let report = reconstruct(&ingested, &psi, &TomoConfig::with_seed(42))?;
    println!(
        "fidelity to psi-: {:.4} +- {:.4} (true {:.4}), purity {:.4} (true {:.4})",
        report.fidelity.mean,
        report.fidelity.std,
        rho.expectation(&psi),
        report.purity.mean,
        rho.purity()
    );
    Ok(report)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run().map(|_| ())
}
