//! Projective analyzer settings, Born-rule probabilities and Poisson count
//! simulation.
//!
//! Each degree of freedom is measured in three mutually unbiased bases, six
//! states in all, giving 36 product projectors. The frequency analyzer is
//! treated as an ideal projector onto superpositions of the two bins.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use nalgebra::Matrix4;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::device::TransferResult;
use crate::error::{Error, Result};
use crate::qubits::{basis_ket, product_ket, DensityMatrix, Ket};

/// Slack allowed on Born probabilities before clamping to `[0, 1]`.
const PROBABILITY_SLACK: f64 = 1e-12;
/// Slack allowed on the norm of a pure input state.
const NORM_TOLERANCE: f64 = 1e-10;

/// Ideal output index for each computational input, `|ab⟩ → |a, a⊕b⟩`.
pub const CNOT_TARGETS: [usize; 4] = [0, 1, 3, 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mub {
    Z,
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolSetting {
    H,
    V,
    D,
    A,
    R,
    L,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FreqSetting {
    /// `|ω0⟩`
    W0,
    /// `|ω1⟩`
    W1,
    /// `(|ω0⟩ + |ω1⟩)/√2`
    Plus,
    /// `(|ω0⟩ - |ω1⟩)/√2`
    Minus,
    /// `(|ω0⟩ + i|ω1⟩)/√2`
    PlusI,
    /// `(|ω0⟩ - i|ω1⟩)/√2`
    MinusI,
}

/// Amplitudes of the six standard qubit states, indexed like the enums above.
fn mub_vector(index: usize) -> [Complex64; 2] {
    let a = FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    match index {
        0 => [c(1.0, 0.0), c(0.0, 0.0)],
        1 => [c(0.0, 0.0), c(1.0, 0.0)],
        2 => [c(a, 0.0), c(a, 0.0)],
        3 => [c(a, 0.0), c(-a, 0.0)],
        4 => [c(a, 0.0), c(0.0, a)],
        _ => [c(a, 0.0), c(0.0, -a)],
    }
}

fn mub_of(index: usize) -> Mub {
    match index / 2 {
        0 => Mub::Z,
        1 => Mub::X,
        _ => Mub::Y,
    }
}

impl PolSetting {
    pub const ALL: [PolSetting; 6] = [
        PolSetting::H,
        PolSetting::V,
        PolSetting::D,
        PolSetting::A,
        PolSetting::R,
        PolSetting::L,
    ];

    pub fn vector(self) -> [Complex64; 2] {
        mub_vector(self as usize)
    }

    pub fn basis(self) -> Mub {
        mub_of(self as usize)
    }

    pub fn label(self) -> &'static str {
        ["H", "V", "D", "A", "R", "L"][self as usize]
    }
}

impl FreqSetting {
    pub const ALL: [FreqSetting; 6] = [
        FreqSetting::W0,
        FreqSetting::W1,
        FreqSetting::Plus,
        FreqSetting::Minus,
        FreqSetting::PlusI,
        FreqSetting::MinusI,
    ];

    pub fn vector(self) -> [Complex64; 2] {
        mub_vector(self as usize)
    }

    pub fn basis(self) -> Mub {
        mub_of(self as usize)
    }

    pub fn label(self) -> &'static str {
        ["w0", "w1", "w0+w1", "w0-w1", "w0+iw1", "w0-iw1"][self as usize]
    }
}

impl FromStr for PolSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolSetting::ALL
            .into_iter()
            .find(|p| p.label() == s.trim())
            .ok_or_else(|| Error::domain(format!("unknown polarization setting `{s}`")))
    }
}

impl FromStr for FreqSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FreqSetting::ALL
            .into_iter()
            .find(|f| f.label() == s.trim())
            .ok_or_else(|| Error::domain(format!("unknown frequency setting `{s}`")))
    }
}

/// One analyzer configuration, `|p⟩⟨p| ⊗ |f⟩⟨f|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProjectorSetting {
    pub pol: PolSetting,
    pub freq: FreqSetting,
}

impl ProjectorSetting {
    pub fn new(pol: PolSetting, freq: FreqSetting) -> Self {
        ProjectorSetting { pol, freq }
    }

    /// The 36 tomography settings, polarization-major.
    pub fn tomographic_set() -> Vec<ProjectorSetting> {
        PolSetting::ALL
            .into_iter()
            .flat_map(|p| FreqSetting::ALL.into_iter().map(move |f| ProjectorSetting::new(p, f)))
            .collect()
    }

    /// `{H, V} × {ω0, ω1}` in `|00⟩, |01⟩, |10⟩, |11⟩` order.
    pub fn computational_set() -> [ProjectorSetting; 4] {
        [
            ProjectorSetting::new(PolSetting::H, FreqSetting::W0),
            ProjectorSetting::new(PolSetting::H, FreqSetting::W1),
            ProjectorSetting::new(PolSetting::V, FreqSetting::W0),
            ProjectorSetting::new(PolSetting::V, FreqSetting::W1),
        ]
    }

    pub fn ket(&self) -> Ket {
        product_ket(self.pol.vector(), self.freq.vector())
    }

    pub fn projector(&self) -> Matrix4<Complex64> {
        let k = self.ket();
        k * k.adjoint()
    }

    /// The product basis this setting belongs to.
    pub fn basis_pair(&self) -> (Mub, Mub) {
        (self.pol.basis(), self.freq.basis())
    }
}

impl fmt::Display for ProjectorSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.pol.label(), self.freq.label())
    }
}

/// Anything the analyzer can measure.
pub trait BornRule {
    fn born_probability(&self, setting: &ProjectorSetting) -> Result<f64>;
}

fn clamp_probability(p: f64) -> Result<f64> {
    if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&p) {
        return Err(Error::domain(format!("probability {p} outside [0, 1]")));
    }
    Ok(p.clamp(0.0, 1.0))
}

impl BornRule for Ket {
    fn born_probability(&self, setting: &ProjectorSetting) -> Result<f64> {
        let norm = self.norm_squared();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::domain(format!("state norm² {norm} is not 1")));
        }
        clamp_probability(setting.ket().dotc(self).norm_sqr())
    }
}

impl BornRule for DensityMatrix {
    fn born_probability(&self, setting: &ProjectorSetting) -> Result<f64> {
        clamp_probability(self.expectation(&setting.ket()))
    }
}

/// `Tr(ρ Π)` with the positivity and trace of `rho` checked first.
pub fn born_probability_matrix(rho: &Matrix4<Complex64>, setting: &ProjectorSetting) -> Result<f64> {
    DensityMatrix::new(*rho)?.born_probability(setting)
}

/// Counts registered with one analyzer setting.
#[derive(Debug, Clone, PartialEq)]
pub struct CountRecord {
    pub setting: ProjectorSetting,
    pub duration_s: f64,
    pub counts: u64,
    /// Detected rate used to simulate the record; absent for ingested data.
    pub flux: Option<f64>,
}

/// Source brightness and integration time for a simulated exposure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exposure {
    /// Detected count rate of the prepared state, s⁻¹.
    pub flux: f64,
    /// Integration time per setting, s.
    pub duration: f64,
    pub seed: u64,
}

impl Exposure {
    pub fn new(flux: f64, duration: f64, seed: u64) -> Result<Self> {
        let e = Exposure { flux, duration, seed };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.flux.is_finite() && self.flux > 0.0) {
            return Err(Error::domain(format!("flux must be > 0, got {}", self.flux)));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::domain(format!("duration must be > 0, got {}", self.duration)));
        }
        Ok(())
    }
}

/// One independent random stream per (seed, record index).
fn record_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn poisson_draw(mean: f64, rng: &mut ChaCha20Rng) -> Result<u64> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|e| Error::domain(format!("Poisson mean {mean}: {e}")))?;
    Ok(dist.sample(rng) as u64)
}

/// Poisson counts with mean `flux · duration · p` for each setting.
/// Record `i` draws from its own stream so the result does not depend on
/// evaluation order.
pub fn simulate_counts<S: BornRule + ?Sized>(
    state: &S,
    settings: &[ProjectorSetting],
    exposure: &Exposure,
) -> Result<Vec<CountRecord>> {
    simulate_counts_with_stream(state, settings, exposure, 0)
}

pub(crate) fn simulate_counts_with_stream<S: BornRule + ?Sized>(
    state: &S,
    settings: &[ProjectorSetting],
    exposure: &Exposure,
    stream_base: u64,
) -> Result<Vec<CountRecord>> {
    exposure.validate()?;
    settings
        .iter()
        .enumerate()
        .map(|(i, setting)| {
            let p = state.born_probability(setting)?;
            let mut rng = record_rng(exposure.seed, stream_base + i as u64);
            let counts = poisson_draw(exposure.flux * exposure.duration * p, &mut rng)?;
            Ok(CountRecord {
                setting: *setting,
                duration_s: exposure.duration,
                counts,
                flux: Some(exposure.flux),
            })
        })
        .collect()
}

pub const CSV_HEADER: [&str; 4] = ["pol_setting", "freq_setting", "duration_s", "counts"];

pub fn write_counts_csv<W: Write>(records: &[CountRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in records {
        w.write_record([
            r.setting.pol.label().to_string(),
            r.setting.freq.label().to_string(),
            r.duration_s.to_string(),
            r.counts.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_counts_csv<R: Read>(input: R) -> Result<Vec<CountRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let parse_err = |e: csv::Error| Error::Parse {
        line: e.position().map_or(0, |p| p.line()),
        message: e.to_string(),
    };
    let header = reader.headers().map_err(parse_err)?.clone();
    if header.iter().map(str::trim).ne(CSV_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{}`", CSV_HEADER.join(",")),
        });
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(parse_err)?;
        let line = row.position().map_or(0, |p| p.line());
        let fail = |message: String| Error::Parse { line, message };
        let pol: PolSetting = row[0].parse().map_err(|e: Error| fail(e.to_string()))?;
        let freq: FreqSetting = row[1].parse().map_err(|e: Error| fail(e.to_string()))?;
        let duration_s: f64 = row[2]
            .trim()
            .parse()
            .map_err(|_| fail(format!("invalid duration `{}`", &row[2])))?;
        if !(duration_s.is_finite() && duration_s > 0.0) {
            return Err(fail(format!("duration must be > 0, got {duration_s}")));
        }
        let counts: u64 = row[3]
            .trim()
            .parse()
            .map_err(|_| fail(format!("invalid count `{}`", &row[3])))?;
        records.push(CountRecord {
            setting: ProjectorSetting::new(pol, freq),
            duration_s,
            counts,
            flux: None,
        });
    }
    if records.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "no count records".into(),
        });
    }
    Ok(records)
}

/// Row-normalized output probabilities for the four computational inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthTable {
    /// `probabilities[input][output]`, both in `|00⟩..|11⟩` order.
    pub probabilities: [[f64; 4]; 4],
    /// Mean of the four ideal-outcome probabilities.
    pub average_correct: f64,
}

impl TruthTable {
    fn from_rows(rows: [[f64; 4]; 4]) -> Self {
        let average_correct = rows.iter().zip(CNOT_TARGETS).map(|(row, j)| row[j]).sum::<f64>() / 4.0;
        TruthTable {
            probabilities: rows,
            average_correct,
        }
    }

    pub fn argmax(&self, input: usize) -> usize {
        let row = &self.probabilities[input];
        (0..4).fold(0, |best, j| if row[j] > row[best] { j } else { best })
    }
}

fn normalize_row(values: [f64; 4], input: usize) -> Result<[f64; 4]> {
    let total: f64 = values.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate(format!(
            "no counts recorded for input |{}⟩",
            crate::qubits::BASIS_LABELS[input]
        )));
    }
    Ok(values.map(|v| v / total))
}

/// Exact truth table (infinite-count limit).
pub fn truth_table_analytic(gate: &TransferResult) -> Result<TruthTable> {
    let settings = ProjectorSetting::computational_set();
    let mut rows = [[0.0; 4]; 4];
    for (input, row) in rows.iter_mut().enumerate() {
        let (out, _) = gate.apply_qubits(&basis_ket(input))?;
        let mut probs = [0.0; 4];
        for (p, s) in probs.iter_mut().zip(&settings) {
            *p = out.born_probability(s)?;
        }
        *row = normalize_row(probs, input)?;
    }
    Ok(TruthTable::from_rows(rows))
}

/// Sampled truth table: each input is measured in the four computational
/// settings for `exposure.duration` and the counts normalized per row.
pub fn truth_table(gate: &TransferResult, exposure: &Exposure) -> Result<TruthTable> {
    let settings = ProjectorSetting::computational_set();
    let mut rows = [[0.0; 4]; 4];
    for (input, row) in rows.iter_mut().enumerate() {
        let (out, _) = gate.apply_qubits(&basis_ket(input))?;
        let records = simulate_counts_with_stream(&out, &settings, exposure, 4 * input as u64)?;
        let mut counts = [0.0; 4];
        for (c, r) in counts.iter_mut().zip(&records) {
            *c = r.counts as f64;
        }
        *row = normalize_row(counts, input)?;
    }
    Ok(TruthTable::from_rows(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{build_cnot, BellState, DeviceParams};

    fn exposure(seed: u64) -> Exposure {
        Exposure::new(1e6, 10.0, seed).unwrap()
    }

    #[test]
    fn projector_examples() {
        let p = ProjectorSetting::new(PolSetting::H, FreqSetting::W0).projector();
        assert_eq!(p, basis_ket(0) * basis_ket(0).adjoint());

        let phi = BellState::PhiPlus.ket();
        let s = ProjectorSetting::new(PolSetting::D, FreqSetting::Plus);
        // |⟨D,+|Φ+⟩|² = |(1/2)(1/√2)(1 + 1)|² = 1/2
        assert!((phi.born_probability(&s).unwrap() - 0.5).abs() < 1e-15);
        let s = ProjectorSetting::new(PolSetting::H, FreqSetting::W1);
        assert_eq!(phi.born_probability(&s).unwrap(), 0.0);
        let z = ProjectorSetting::new(PolSetting::H, FreqSetting::W0);
        assert!((basis_ket(0).born_probability(&z).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn maximally_mixed_is_flat() {
        let rho = DensityMatrix::maximally_mixed();
        for s in ProjectorSetting::tomographic_set() {
            assert!((rho.born_probability(&s).unwrap() - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_unnormalized_inputs() {
        let s = ProjectorSetting::new(PolSetting::H, FreqSetting::W0);
        assert!(basis_ket(0).scale(2.0).born_probability(&s).is_err());
        assert!(born_probability_matrix(&Matrix4::identity(), &s).is_err());
        assert!(born_probability_matrix(&Matrix4::identity().scale(0.25), &s).is_ok());
    }

    #[test]
    fn projector_set_structure() {
        let set = ProjectorSetting::tomographic_set();
        assert_eq!(set.len(), 36);
        for s in &set {
            let p = s.projector();
            assert!((p * p - p).iter().all(|z| z.norm() < 1e-12));
            assert!((p.trace().re - 1.0).abs() < 1e-12);
        }
        for vectors in [
            PolSetting::ALL.map(|p| p.vector()),
            FreqSetting::ALL.map(|f| f.vector()),
        ] {
            for pair in vectors.chunks(2) {
                let inner = pair[0][0].conj() * pair[1][0] + pair[0][1].conj() * pair[1][1];
                assert!(inner.norm() < 1e-15);
            }
            // unbiased across bases
            for i in 0..6 {
                for j in 0..6 {
                    if i / 2 != j / 2 {
                        let inner = vectors[i][0].conj() * vectors[j][0] + vectors[i][1].conj() * vectors[j][1];
                        assert!((inner.norm_sqr() - 0.5).abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn zero_probability_gives_zero_counts() {
        let s = [ProjectorSetting::new(PolSetting::V, FreqSetting::W0)];
        for seed in 0..20 {
            let r = simulate_counts(&basis_ket(0), &s, &exposure(seed)).unwrap();
            assert_eq!(r[0].counts, 0);
        }
    }

    #[test]
    fn unit_probability_counts_within_five_sigma() {
        let s = [ProjectorSetting::new(PolSetting::H, FreqSetting::W0)];
        for seed in 0..100 {
            let c = simulate_counts(&basis_ket(0), &s, &exposure(seed)).unwrap()[0].counts as f64;
            assert!((c - 1e7).abs() < 5.0 * 1e7f64.sqrt());
        }
    }

    #[test]
    fn seeded_runs_repeat() {
        let set = ProjectorSetting::tomographic_set();
        let a = simulate_counts(&BellState::PsiMinus.ket(), &set, &exposure(3)).unwrap();
        let b = simulate_counts(&BellState::PsiMinus.ket(), &set, &exposure(3)).unwrap();
        let c = simulate_counts(&BellState::PsiMinus.ket(), &set, &exposure(4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn counts_do_not_depend_on_order() {
        let set = ProjectorSetting::tomographic_set();
        let rho = DensityMatrix::maximally_mixed();
        let all = simulate_counts(&rho, &set, &exposure(5)).unwrap();
        let tail = simulate_counts_with_stream(&rho, &set[10..], &exposure(5), 10).unwrap();
        assert_eq!(&all[10..], &tail[..]);
    }

    #[test]
    fn empirical_mean_matches() {
        let s = [ProjectorSetting::new(PolSetting::D, FreqSetting::W0)];
        let e0 = Exposure::new(50.0, 0.1, 0).unwrap();
        let p = 0.5;
        let mean = e0.flux * e0.duration * p;
        let n = 10_000u64;
        let total: u64 = (0..n)
            .map(|seed| simulate_counts(&basis_ket(0), &s, &Exposure { seed, ..e0 }).unwrap()[0].counts)
            .sum();
        let emp = total as f64 / n as f64;
        let se = (mean / n as f64).sqrt();
        assert!((emp - mean).abs() < 3.0 * se, "{emp} vs {mean}");
    }

    #[test]
    fn csv_roundtrip_and_errors() {
        let set = ProjectorSetting::tomographic_set();
        let recs = simulate_counts(&BellState::PhiMinus.ket(), &set, &exposure(9)).unwrap();
        let mut buf = Vec::new();
        write_counts_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("pol_setting,freq_setting,duration_s,counts\n"));
        let back = read_counts_csv(&buf[..]).unwrap();
        assert_eq!(back.len(), 36);
        for (a, b) in recs.iter().zip(&back) {
            assert_eq!((a.setting, a.duration_s, a.counts), (b.setting, b.duration_s, b.counts));
        }

        let truncated = "pol_setting,freq_setting,duration_s,counts\nH,w0,10,5\nH,w1,10\n";
        match read_counts_csv(truncated.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let bad = "pol_setting,freq_setting,duration_s,counts\nH,w0,10,5\nQ,w1,10,3\n";
        assert!(matches!(
            read_counts_csv(bad.as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
        let zero = "pol_setting,freq_setting,duration_s,counts\nH,w0,0,5\n";
        assert!(matches!(
            read_counts_csv(zero.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(read_counts_csv("a,b\n".as_bytes()).is_err());
    }

    #[test]
    fn ideal_truth_table() {
        let gate = build_cnot(&DeviceParams::ideal()).unwrap();
        let t = truth_table_analytic(&gate).unwrap();
        assert_eq!(t.average_correct, 1.0);
        assert!((t.probabilities[2][3] - 1.0).abs() < 1e-15);
        let sampled = truth_table(&gate, &exposure(7)).unwrap();
        assert_eq!(sampled.average_correct, 1.0);
    }

    #[test]
    fn calibrated_truth_table_brackets_measurement() {
        let gate = build_cnot(&DeviceParams::paper()).unwrap();
        let t = truth_table(&gate, &exposure(7)).unwrap();
        assert!((0.98..=0.995).contains(&t.average_correct), "{}", t.average_correct);
        for (input, &want) in CNOT_TARGETS.iter().enumerate() {
            assert_eq!(t.argmax(input), want);
            assert!((t.probabilities[input].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn unit_ket() -> impl Strategy<Value = Ket> {
            proptest::collection::vec(-1.0f64..1.0, 8)
                .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
                .prop_map(|v| {
                    let k = Ket::from_fn(|i, _| Complex64::new(v[2 * i], v[2 * i + 1]));
                    k.unscale(k.norm())
                })
        }

        proptest! {
            #[test]
            fn complete_bases_sum_to_one(ket in unit_ket(), pb in 0usize..3, fb in 0usize..3) {
                let total: f64 = (0..2)
                    .flat_map(|i| (0..2).map(move |j| (i, j)))
                    .map(|(i, j)| {
                        let s = ProjectorSetting::new(PolSetting::ALL[2 * pb + i], FreqSetting::ALL[2 * fb + j]);
                        ket.born_probability(&s).unwrap()
                    })
                    .sum();
                prop_assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }
}
