//! End-to-end experiments behind the `polfreq` command: RF sweep, truth
//! table, Bell synthesis with tomography, and tomography of a counts file.
//!
//! Each `cmd_*` function writes its data files plus a `manifest.json` into
//! the configured output directory and returns the manifest.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::device::{build_cnot, BellInput, BellState, DeviceParams, Preset};
use crate::error::{Error, Result};
use crate::freqbin::{eom_operator, ModIndex, PhaseSign};
use crate::measurement::{
    read_counts_csv, simulate_counts, truth_table, truth_table_analytic, write_counts_csv, Exposure, ProjectorSetting,
    TruthTable,
};
use crate::qubits::{DensityMatrix, BASIS_LABELS};
use crate::tomography::{reconstruct, TomoConfig, TomographyReport};

pub const MANIFEST_FILE: &str = "manifest.json";

/// A preset name or a full parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeviceSpec {
    Preset(String),
    Params(Box<DeviceParams>),
}

impl DeviceSpec {
    pub fn resolve(&self) -> Result<DeviceParams> {
        match self {
            DeviceSpec::Preset(name) => Preset::from_name(name)?.params(),
            DeviceSpec::Params(p) => {
                p.validate()?;
                Ok((**p).clone())
            }
        }
    }
}

impl Default for DeviceSpec {
    fn default() -> Self {
        DeviceSpec::Preset(Preset::Ideal.name().into())
    }
}

/// Sampler settings; the seed comes from the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomoSettings {
    pub n_samples: usize,
    pub burn_in: usize,
    pub thinning: Option<usize>,
    pub max_thinning: usize,
    pub pcn_beta: f64,
}

impl Default for TomoSettings {
    fn default() -> Self {
        let d = TomoConfig::default();
        TomoSettings {
            n_samples: d.n_samples,
            burn_in: d.burn_in,
            thinning: d.thinning,
            max_thinning: d.max_thinning,
            pcn_beta: d.pcn_beta,
        }
    }
}

impl TomoSettings {
    pub fn with_seed(&self, seed: u64) -> TomoConfig {
        TomoConfig {
            n_samples: self.n_samples,
            burn_in: self.burn_in,
            thinning: self.thinning,
            max_thinning: self.max_thinning,
            pcn_beta: self.pcn_beta,
            seed,
        }
    }
}

/// RF sweep range in GHz, inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfRange {
    pub start_ghz: f64,
    pub stop_ghz: f64,
    pub step_ghz: f64,
}

impl Default for RfRange {
    fn default() -> Self {
        RfRange {
            start_ghz: 17.0,
            stop_ghz: 27.0,
            step_ghz: 1.0,
        }
    }
}

impl RfRange {
    pub fn points(&self) -> Result<Vec<f64>> {
        let RfRange {
            start_ghz,
            stop_ghz,
            step_ghz,
        } = *self;
        if !(start_ghz.is_finite() && stop_ghz.is_finite() && step_ghz > 0.0 && start_ghz <= stop_ghz) {
            return Err(Error::Usage(format!(
                "empty RF range {start_ghz}..{stop_ghz} GHz step {step_ghz}"
            )));
        }
        if !(start_ghz > 0.0) {
            return Err(Error::Usage("RF frequencies must be > 0".into()));
        }
        let n = ((stop_ghz - start_ghz) / step_ghz + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|i| start_ghz + i as f64 * step_ghz).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub device: DeviceSpec,
    /// Detected count rate, s⁻¹.
    pub flux: f64,
    /// Integration time per analyzer setting, s.
    pub duration: f64,
    /// Required before any command runs.
    pub seed: Option<u64>,
    pub output_path: PathBuf,
    /// Exact Born probabilities instead of sampled counts.
    pub analytic: bool,
    /// Bell preparation such as `D:w0`.
    pub input: Option<String>,
    /// Bell target label for `tomo`, e.g. `phi+`.
    pub target: Option<String>,
    /// Counts CSV read by `tomo`.
    pub counts: Option<PathBuf>,
    pub rf: RfRange,
    pub tomography: TomoSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            device: DeviceSpec::default(),
            flux: 1e6,
            duration: 10.0,
            seed: None,
            output_path: PathBuf::from("out"),
            analytic: false,
            input: None,
            target: None,
            counts: None,
            rf: RfRange::default(),
            tomography: TomoSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        ExperimentConfig::from_json(&fs::read_to_string(path)?)
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Usage("a seed is required (--seed or \"seed\" in the config)".into()))
    }

    pub fn exposure(&self) -> Result<Exposure> {
        Exposure::new(self.flux, self.duration, self.seed()?)
    }

    fn bell_input(&self) -> Result<BellInput> {
        BellInput::parse(
            self.input
                .as_deref()
                .ok_or_else(|| Error::Usage("bell needs an input such as --input D:w0".into()))?,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: ExperimentConfig,
    /// The device actually simulated, after preset resolution.
    pub device: Option<DeviceParams>,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<OutputDigest>,
}

struct Run {
    command: &'static str,
    config: ExperimentConfig,
    device: Option<DeviceParams>,
    started_at: String,
    dir: PathBuf,
    outputs: Vec<OutputDigest>,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl Run {
    fn start(command: &'static str, config: &ExperimentConfig, device: Option<DeviceParams>) -> Result<Self> {
        config.seed()?;
        fs::create_dir_all(&config.output_path)?;
        Ok(Run {
            command,
            config: config.clone(),
            device,
            started_at: now(),
            dir: config.output_path.clone(),
            outputs: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.outputs.push(OutputDigest {
            file: name.into(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    fn finish(self) -> Result<RunManifest> {
        let manifest = RunManifest {
            command: self.command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: self.config,
            device: self.device,
            started_at: self.started_at,
            finished_at: now(),
            outputs: self.outputs,
        };
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        fs::write(self.dir.join(MANIFEST_FILE), text)?;
        Ok(manifest)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Co,
    Counter,
}

impl Direction {
    pub fn label(self) -> &'static str {
        match self {
            Direction::Co => "co",
            Direction::Counter => "counter",
        }
    }
}

/// Output powers of a single `ω0` input, normalized to the total output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "rf_frequency_GHz")]
    pub rf_frequency_ghz: f64,
    pub direction: Direction,
    pub bin0_power: f64,
    pub bin1_power: f64,
}

fn single_pass(theta: ModIndex, sign: PhaseSign, params: &DeviceParams) -> Result<(f64, f64)> {
    let lattice = params.lattice;
    let op = eom_operator(theta, sign, &lattice)?;
    let from = params.computational_offset;
    let total: f64 = lattice.bins().map(|b| op.entry(b, from).norm_sqr()).sum();
    Ok((
        op.entry(from, from).norm_sqr() / total,
        op.entry(from + 1, from).norm_sqr() / total,
    ))
}

/// Conversion of `ω0` into `ω1` for both propagation directions.
pub fn sweep(params: &DeviceParams, range: &RfRange) -> Result<Vec<SweepRow>> {
    params.validate()?;
    let mut rows = Vec::new();
    for f in range.points()? {
        let omega = 2.0 * std::f64::consts::PI * f * 1e9;
        for (direction, theta, sign) in [
            (Direction::Co, params.theta_co, params.phase_sign_co),
            (
                Direction::Counter,
                params.counter_index_at(omega)?,
                params.phase_sign_counter,
            ),
        ] {
            let (bin0_power, bin1_power) = single_pass(theta, sign, params)?;
            rows.push(SweepRow {
                rf_frequency_ghz: f,
                direction,
                bin0_power,
                bin1_power,
            });
        }
    }
    Ok(rows)
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    w.into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

/// `sweep.csv`: `rf_frequency_GHz,direction,bin0_power,bin1_power`.
pub fn cmd_sweep(config: &ExperimentConfig) -> Result<RunManifest> {
    let params = config.device.resolve()?;
    let rows = sweep(&params, &config.rf)?;
    let mut run = Run::start("sweep", config, Some(params))?;
    run.write("sweep.csv", &csv_bytes(&rows)?)?;
    run.finish()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthTableReport {
    pub mode: String,
    pub average_correct: f64,
    /// `probabilities[input][output]` in `00, 01, 10, 11` order.
    pub probabilities: [[f64; 4]; 4],
    /// Bandpass survival of each computational input.
    pub success_probabilities: [f64; 4],
}

#[derive(Serialize)]
struct TruthRow<'a> {
    input: &'a str,
    p00: f64,
    p01: f64,
    p10: f64,
    p11: f64,
}

pub fn run_truth_table(config: &ExperimentConfig) -> Result<(TruthTable, TruthTableReport)> {
    let gate = build_cnot(&config.device.resolve()?)?;
    let (table, mode) = if config.analytic {
        (truth_table_analytic(&gate)?, "analytic")
    } else {
        (truth_table(&gate, &config.exposure()?)?, "sampled")
    };
    let report = TruthTableReport {
        mode: mode.into(),
        average_correct: table.average_correct,
        probabilities: table.probabilities,
        success_probabilities: gate.success_probabilities(),
    };
    Ok((table, report))
}

/// `truth_table.csv` (`input,p00,p01,p10,p11`) and `truth_table.json`.
pub fn cmd_truth_table(config: &ExperimentConfig) -> Result<RunManifest> {
    let params = config.device.resolve()?;
    let mut run = Run::start("truth-table", config, Some(params))?;
    let (table, report) = run_truth_table(config)?;
    let rows: Vec<TruthRow> = BASIS_LABELS
        .iter()
        .zip(table.probabilities)
        .map(|(input, p)| TruthRow {
            input,
            p00: p[0],
            p01: p[1],
            p10: p[2],
            p11: p[3],
        })
        .collect();
    run.write("truth_table.csv", &csv_bytes(&rows)?)?;
    run.write(
        "truth_table.json",
        (serde_json::to_string_pretty(&report)? + "\n").as_bytes(),
    )?;
    run.finish()
}

/// Result of a Bell run; `records` is empty in analytic mode.
#[derive(Debug, Clone)]
pub struct BellRun {
    pub input: BellInput,
    pub target: BellState,
    pub records: Vec<crate::measurement::CountRecord>,
    pub report: TomographyReport,
}

pub fn run_bell(config: &ExperimentConfig) -> Result<BellRun> {
    let input = config.bell_input()?;
    let target = input.target();
    let seed = config.seed()?;
    let gate = build_cnot(&config.device.resolve()?)?;
    let (out, _) = gate.apply_qubits(&input.ket())?;
    if config.analytic {
        let rho = DensityMatrix::from_pure(&out)?;
        return Ok(BellRun {
            input,
            target,
            records: Vec::new(),
            report: TomographyReport::exact(&rho, &target.ket(), seed)?,
        });
    }
    let records = simulate_counts(&out, &ProjectorSetting::tomographic_set(), &config.exposure()?)?;
    let report = reconstruct(&records, &target.ket(), &config.tomography.with_seed(seed))?;
    Ok(BellRun {
        input,
        target,
        records,
        report,
    })
}

/// `counts.csv` (sampled mode only) and `report.json`.
pub fn cmd_bell(config: &ExperimentConfig) -> Result<RunManifest> {
    let params = config.device.resolve()?;
    let mut run = Run::start("bell", config, Some(params))?;
    let bell = run_bell(config)?;
    if !bell.records.is_empty() {
        let mut buf = Vec::new();
        write_counts_csv(&bell.records, &mut buf)?;
        run.write("counts.csv", &buf)?;
    }
    run.write("report.json", (bell.report.to_json()? + "\n").as_bytes())?;
    run.finish()
}

pub fn run_tomo(config: &ExperimentConfig) -> Result<TomographyReport> {
    let path = config
        .counts
        .as_ref()
        .ok_or_else(|| Error::Usage("tomo needs --counts <csv>".into()))?;
    let target = BellState::from_label(
        config
            .target
            .as_deref()
            .ok_or_else(|| Error::Usage("tomo needs --target such as phi+".into()))?,
    )?;
    let records = read_counts_csv(fs::File::open(path)?)?;
    reconstruct(&records, &target.ket(), &config.tomography.with_seed(config.seed()?))
}

/// `report.json` from an existing counts file.
pub fn cmd_tomo(config: &ExperimentConfig) -> Result<RunManifest> {
    let mut run = Run::start("tomo", config, None)?;
    let report = run_tomo(config)?;
    run.write("report.json", (report.to_json()? + "\n").as_bytes())?;
    run.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rf_range() {
        assert_eq!(RfRange::default().points().unwrap().len(), 11);
        let bad = RfRange {
            start_ghz: 27.0,
            stop_ghz: 17.0,
            step_ghz: 1.0,
        };
        assert!(matches!(bad.points(), Err(Error::Usage(_))));
        let zero_step = RfRange {
            step_ghz: 0.0,
            ..RfRange::default()
        };
        assert!(zero_step.points().is_err());
    }

    #[test]
    fn ideal_sweep_is_flat() {
        let rows = sweep(&DeviceParams::ideal(), &RfRange::default()).unwrap();
        assert_eq!(rows.len(), 22);
        for r in &rows {
            match r.direction {
                Direction::Co => assert!((r.bin1_power - 0.2695).abs() < 1e-4),
                Direction::Counter => {
                    assert_eq!(r.bin1_power, 0.0);
                    assert_eq!(r.bin0_power, 1.0);
                }
            }
        }
    }

    #[test]
    fn calibrated_counter_rows_stay_below_one_percent() {
        let rows = sweep(&DeviceParams::paper(), &RfRange::default()).unwrap();
        assert!(rows
            .iter()
            .filter(|r| r.direction == Direction::Counter)
            .all(|r| r.bin1_power < 0.01));
    }

    #[test]
    fn walkoff_model_varies_with_frequency() {
        let params = DeviceParams {
            walkoff_time_s: Some(3.69e-11),
            ..DeviceParams::ideal()
        };
        let rows = sweep(&params, &RfRange::default()).unwrap();
        let counter: Vec<f64> = rows
            .iter()
            .filter(|r| r.direction == Direction::Counter)
            .map(|r| r.bin1_power)
            .collect();
        assert!(counter.windows(2).any(|w| (w[0] - w[1]).abs() > 1e-6));
    }

    #[test]
    fn config_parsing() {
        let c = ExperimentConfig::from_json(r#"{"device": "paper", "seed": 3}"#).unwrap();
        assert_eq!(c.device.resolve().unwrap(), DeviceParams::paper());
        assert_eq!(c.flux, 1e6);
        let inline = serde_json::json!({ "device": DeviceParams::ideal(), "seed": 1 });
        let c = ExperimentConfig::from_json(&inline.to_string()).unwrap();
        assert_eq!(c.device.resolve().unwrap(), DeviceParams::ideal());
        let bad = ExperimentConfig::from_json(r#"{"device": "nope"}"#).unwrap();
        assert!(bad.device.resolve().is_err());
        assert!(ExperimentConfig::from_json(r#"{"sed": 3}"#).is_err());
        assert!(matches!(ExperimentConfig::default().seed(), Err(Error::Usage(_))));
    }

    #[test]
    fn commands_refuse_without_seed() {
        let dir = tempfile::tempdir().unwrap();
        let config = ExperimentConfig {
            output_path: dir.path().into(),
            ..ExperimentConfig::default()
        };
        assert!(matches!(cmd_sweep(&config), Err(Error::Usage(_))));
        assert!(!dir.path().join(MANIFEST_FILE).exists());
    }

    #[test]
    fn analytic_bell_reports() {
        for (input, target, _) in crate::device::bell_targets() {
            let config = ExperimentConfig {
                analytic: true,
                seed: Some(0),
                input: Some(input.label()),
                ..ExperimentConfig::default()
            };
            let run = run_bell(&config).unwrap();
            assert_eq!(run.target, target);
            assert!((run.report.fidelity.mean - 1.0).abs() < 1e-10);
            assert!(run.records.is_empty());
        }
    }
}
