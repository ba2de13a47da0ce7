//! Bayesian two-qubit state tomography with a preconditioned Crank–Nicolson
//! sampler.
//!
//! States are parameterized as `ρ = AA†/Tr(AA†)` with `A` a 4×4 matrix of
//! independent standard complex normals. The likelihood conditions on the
//! total counts in each measured basis pair, so the source brightness never
//! enters.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Matrix4, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{CountRecord, Mub, ProjectorSetting};
use crate::qubits::{DensityMatrix, Ket, MatrixParts};

/// Probability floor inside the likelihood.
pub const PROBABILITY_FLOOR: f64 = 1e-12;
/// Acceptance target for the burn-in adaptation.
pub const TARGET_ACCEPTANCE: f64 = 0.25;
/// Below this production acceptance rate a convergence warning is raised.
pub const MIN_ACCEPTANCE: f64 = 0.01;

const ADAPT_BATCH: usize = 100;
const AUTOCORR_THRESHOLD: f64 = 0.2;
const RNG_STREAM: u64 = 1 << 63;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomoConfig {
    pub n_samples: usize,
    /// Proposals spent adapting `pcn_beta` before it is frozen.
    pub burn_in: usize,
    /// Keep every `thinning`-th state; `None` picks the lag from a pilot run.
    pub thinning: Option<usize>,
    /// Upper bound for the automatic lag.
    pub max_thinning: usize,
    /// Initial step size, in `(0, 1]`.
    pub pcn_beta: f64,
    pub seed: u64,
}

impl Default for TomoConfig {
    fn default() -> Self {
        TomoConfig {
            n_samples: 1024,
            burn_in: 20_000,
            thinning: None,
            max_thinning: 1000,
            pcn_beta: 0.1,
            seed: 0,
        }
    }
}

impl TomoConfig {
    pub fn with_seed(seed: u64) -> Self {
        TomoConfig {
            seed,
            ..TomoConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::domain("n_samples must be >= 1"));
        }
        if !(self.pcn_beta > 0.0 && self.pcn_beta <= 1.0) {
            return Err(Error::domain(format!(
                "pcn_beta must lie in (0, 1], got {}",
                self.pcn_beta
            )));
        }
        if self.thinning == Some(0) || self.max_thinning == 0 {
            return Err(Error::domain("thinning must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSample {
    pub rho: DensityMatrix,
    pub log_likelihood: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Fraction of production proposals accepted.
    pub acceptance_rate: f64,
    /// Frozen step size.
    pub pcn_beta: f64,
    pub thinning: usize,
    /// Set when the acceptance rate fell below [`MIN_ACCEPTANCE`].
    pub warning: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Posterior {
    pub samples: Vec<PosteriorSample>,
    pub diagnostics: Diagnostics,
}

/// Records sharing one product basis, with repeated settings merged.
#[derive(Debug, Clone)]
struct Group {
    kets: Vec<Ket>,
    counts: Vec<f64>,
    durations: Vec<f64>,
    total: f64,
}

/// Count data prepared for repeated likelihood evaluation.
#[derive(Debug, Clone)]
pub struct Likelihood {
    groups: Vec<Group>,
}

impl Likelihood {
    pub fn new(records: &[CountRecord]) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::domain("no count records"));
        }
        let mut merged: BTreeMap<(Mub, Mub), BTreeMap<ProjectorSetting, (f64, f64)>> = BTreeMap::new();
        for r in records {
            if !(r.duration_s.is_finite() && r.duration_s > 0.0) {
                return Err(Error::domain(format!(
                    "record {} has non-positive duration {}",
                    r.setting, r.duration_s
                )));
            }
            let slot = merged
                .entry(r.setting.basis_pair())
                .or_default()
                .entry(r.setting)
                .or_insert((0.0, 0.0));
            slot.0 += r.counts as f64;
            slot.1 += r.duration_s;
        }
        let groups = merged
            .into_values()
            .map(|members| {
                let kets = members.keys().map(ProjectorSetting::ket).collect();
                let counts: Vec<f64> = members.values().map(|v| v.0).collect();
                let durations = members.values().map(|v| v.1).collect();
                Group {
                    kets,
                    total: counts.iter().sum(),
                    counts,
                    durations,
                }
            })
            .collect();
        Ok(Likelihood { groups })
    }

    /// Log-likelihood up to a `ρ`-independent constant.
    pub fn evaluate(&self, rho: &DensityMatrix) -> f64 {
        self.evaluate_with(|k| rho.expectation(k))
    }

    /// Same as [`evaluate`](Self::evaluate) for `ρ ∝ AA†`, without forming `ρ`.
    fn evaluate_factor(&self, a: &Matrix4<Complex64>) -> f64 {
        let ah = a.adjoint();
        let tr: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        self.evaluate_with(|k| (ah * k).norm_squared() / tr)
    }

    fn evaluate_with(&self, prob: impl Fn(&Ket) -> f64) -> f64 {
        let mut ll = 0.0;
        for g in &self.groups {
            // A basis seen through one setting carries no information once
            // its total is conditioned on.
            if g.total == 0.0 || g.kets.len() < 2 {
                continue;
            }
            let mut norm = 0.0;
            for ((k, &n), &d) in g.kets.iter().zip(&g.counts).zip(&g.durations) {
                let w = prob(k).max(PROBABILITY_FLOOR) * d;
                norm += w;
                if n > 0.0 {
                    ll += n * w.ln();
                }
            }
            ll -= g.total * norm.ln();
        }
        ll
    }

    /// Least-squares linear inversion projected onto the physical states.
    /// `None` when no basis group holds any counts.
    pub fn linear_inversion(&self) -> Option<DensityMatrix> {
        let basis = pauli_basis();
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for g in &self.groups {
            let rates: Vec<f64> = g.counts.iter().zip(&g.durations).map(|(n, d)| n / d).collect();
            let sum: f64 = rates.iter().sum();
            if g.total == 0.0 || g.kets.len() < 2 {
                continue;
            }
            for (k, r) in g.kets.iter().zip(rates) {
                rows.push(basis.iter().map(|b| k.dotc(&(b * k)).re / 4.0).collect::<Vec<_>>());
                rhs.push(r / sum);
            }
        }
        if rows.is_empty() {
            return None;
        }
        let m = DMatrix::from_fn(rows.len(), 16, |i, j| rows[i][j]);
        let coeffs = m.svd(true, true).solve(&DVector::from_vec(rhs), 1e-10).ok()?;
        let mut raw = Matrix4::zeros();
        for (b, c) in basis.iter().zip(coeffs.iter()) {
            raw += b.scale(c / 4.0);
        }
        let eig = SymmetricEigen::new((raw + raw.adjoint()).scale(0.5));
        let clipped = eig.eigenvalues.map(|x| x.max(0.0));
        let total = clipped.sum();
        if !(total > 0.0) {
            return None;
        }
        let diag = Matrix4::from_diagonal(&clipped.map(|x| Complex64::new(x / total, 0.0)));
        let rho = eig.eigenvectors * diag * eig.eigenvectors.adjoint();
        DensityMatrix::new((rho + rho.adjoint()).scale(0.5)).ok()
    }
}

/// `σ_a ⊗ σ_b` for `a, b ∈ {I, X, Y, Z}`.
fn pauli_basis() -> Vec<Matrix4<Complex64>> {
    let o = Complex64::new(0.0, 0.0);
    let l = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let paulis = [[[l, o], [o, l]], [[o, l], [l, o]], [[o, -i], [i, o]], [[l, o], [o, -l]]];
    let mut out = Vec::with_capacity(16);
    for a in &paulis {
        for b in &paulis {
            out.push(Matrix4::from_fn(|r, c| a[r / 2][c / 2] * b[r % 2][c % 2]));
        }
    }
    out
}

pub fn log_likelihood(rho: &DensityMatrix, records: &[CountRecord]) -> Result<f64> {
    Ok(Likelihood::new(records)?.evaluate(rho))
}

fn gaussian_matrix(rng: &mut ChaCha20Rng) -> Matrix4<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Matrix4::from_fn(|_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * s, im * s)
    })
}

/// Square-root factor of `ρ` with the prior's typical scale `E Tr(AA†) = 16`.
fn factor_of(rho: &DensityMatrix) -> Matrix4<Complex64> {
    let eig = SymmetricEigen::new(*rho.matrix());
    let root = eig.eigenvalues.map(|x| Complex64::new(x.max(0.0).sqrt() * 4.0, 0.0));
    eig.eigenvectors * Matrix4::from_diagonal(&root) * eig.eigenvectors.adjoint()
}

struct Chain<'a> {
    like: &'a Likelihood,
    a: Matrix4<Complex64>,
    ll: f64,
    beta: f64,
    rng: ChaCha20Rng,
}

impl Chain<'_> {
    fn step(&mut self) -> bool {
        let xi = gaussian_matrix(&mut self.rng);
        let keep = (1.0 - self.beta * self.beta).sqrt();
        let proposal = self.a.scale(keep) + xi.scale(self.beta);
        let ll = self.like.evaluate_factor(&proposal);
        let u: f64 = self.rng.random();
        if ll >= self.ll || u.ln() < ll - self.ll {
            self.a = proposal;
            self.ll = ll;
            true
        } else {
            false
        }
    }
}

/// Smallest lag at which the autocorrelation of `trace` drops below the threshold.
fn decorrelation_lag(trace: &[f64], max_lag: usize) -> usize {
    let n = trace.len();
    let mean = trace.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = trace.iter().map(|x| x - mean).collect();
    let var: f64 = centered.iter().map(|x| x * x).sum();
    if var <= 0.0 {
        return 1;
    }
    let limit = max_lag.min(n / 4).max(1);
    for lag in 1..=limit {
        let c: f64 = centered[..n - lag]
            .iter()
            .zip(&centered[lag..])
            .map(|(a, b)| a * b)
            .sum();
        if c / var < AUTOCORR_THRESHOLD {
            return lag;
        }
    }
    limit
}

/// Draws `config.n_samples` states from the posterior given `records`.
pub fn sample_posterior(records: &[CountRecord], config: &TomoConfig) -> Result<Posterior> {
    config.validate()?;
    let like = Likelihood::new(records)?;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    rng.set_stream(RNG_STREAM);

    let a = match like.linear_inversion() {
        Some(rho) => {
            let mixed = rho.matrix().scale(0.99) + DensityMatrix::maximally_mixed().matrix().scale(0.01);
            factor_of(&DensityMatrix::new(mixed)?)
        }
        None => gaussian_matrix(&mut rng),
    };
    let ll = like.evaluate_factor(&a);
    let mut chain = Chain {
        like: &like,
        a,
        ll,
        beta: config.pcn_beta,
        rng,
    };

    let mut accepted = 0usize;
    for i in 0..config.burn_in {
        accepted += chain.step() as usize;
        if (i + 1) % ADAPT_BATCH == 0 {
            let rate = accepted as f64 / ADAPT_BATCH as f64;
            let batch = (i / ADAPT_BATCH) as f64;
            let gain = 2.0 / (1.0 + batch / 20.0).sqrt();
            chain.beta = (chain.beta * (gain * (rate - TARGET_ACCEPTANCE)).exp()).clamp(1e-6, 1.0);
            accepted = 0;
        }
    }

    let thinning = match config.thinning {
        Some(t) => t,
        None => {
            let pilot_len = (20 * config.max_thinning).max(2000);
            let mut trace = Vec::with_capacity(pilot_len);
            for _ in 0..pilot_len {
                chain.step();
                trace.push(chain.ll);
            }
            decorrelation_lag(&trace, config.max_thinning)
        }
    };

    let mut samples = Vec::with_capacity(config.n_samples);
    let mut accepted = 0usize;
    let mut proposals = 0usize;
    while samples.len() < config.n_samples {
        for _ in 0..thinning {
            accepted += chain.step() as usize;
            proposals += 1;
        }
        samples.push(PosteriorSample {
            rho: DensityMatrix::from_factor(&chain.a)?,
            log_likelihood: chain.ll,
        });
    }
    let acceptance_rate = accepted as f64 / proposals as f64;
    let warning = (acceptance_rate < MIN_ACCEPTANCE).then(|| {
        format!("pCN acceptance rate {acceptance_rate:.4} below {MIN_ACCEPTANCE}; the chain may not have converged")
    });
    Ok(Posterior {
        samples,
        diagnostics: Diagnostics {
            acceptance_rate,
            pcn_beta: chain.beta,
            thinning,
            warning,
        },
    })
}

/// `⟨ψ|ρ|ψ⟩`
pub fn fidelity(rho: &DensityMatrix, target: &Ket) -> Result<f64> {
    let n = target.norm_squared();
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::domain(format!("target norm² {n} is not 1")));
    }
    Ok(rho.expectation(target).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator); zero for one sample.
    pub std: f64,
}

impl Stat {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("statistics of an empty set"));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Ok(Stat { mean, std })
    }

    /// Percent with the uncertainty on the last digit, e.g. `98.8(3)%`.
    pub fn percent(&self) -> String {
        format!("{}%", parenthetical(100.0 * self.mean, 100.0 * self.std))
    }
}

/// `value(u)` with one significant digit of uncertainty: `0.988(3)`.
pub fn parenthetical(value: f64, uncertainty: f64) -> String {
    if !(uncertainty.is_finite() && uncertainty > 0.0) {
        return format!("{value:.1}(0)");
    }
    let mut decimals = -uncertainty.log10().floor() as i32;
    let mut digit = (uncertainty * 10f64.powi(decimals)).round() as i64;
    if digit == 10 {
        decimals -= 1;
        digit = 1;
    }
    if decimals <= 0 {
        let unit = 10f64.powi(-decimals);
        let v = (value / unit).round() * unit;
        return format!("{v:.0}({})", digit as f64 * unit);
    }
    format!("{value:.prec$}({digit})", prec = decimals as usize)
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub mean_rho: DensityMatrix,
    pub fidelity: Stat,
    pub purity: Stat,
}

pub fn summarize(samples: &[PosteriorSample], target: &Ket) -> Result<Summary> {
    if samples.is_empty() {
        return Err(Error::domain("cannot summarize an empty sample list"));
    }
    let fids = samples
        .iter()
        .map(|s| fidelity(&s.rho, target))
        .collect::<Result<Vec<_>>>()?;
    let purities: Vec<f64> = samples.iter().map(|s| s.rho.purity()).collect();
    Ok(Summary {
        mean_rho: DensityMatrix::mean(samples.iter().map(|s| &s.rho))?,
        fidelity: Stat::from_values(&fids)?,
        purity: Stat::from_values(&purities)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDiagnostics {
    /// `None` for exact (analytic) reports.
    pub acceptance_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// JSON report consumed by the plotting tools.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyReport {
    pub mean_rho: MatrixParts,
    pub fidelity: Stat,
    pub purity: Stat,
    pub n_samples: usize,
    pub seed: u64,
    pub diagnostics: ReportDiagnostics,
}

impl TomographyReport {
    pub fn from_posterior(posterior: &Posterior, target: &Ket, seed: u64) -> Result<Self> {
        let s = summarize(&posterior.samples, target)?;
        Ok(TomographyReport {
            mean_rho: s.mean_rho.to_parts(),
            fidelity: s.fidelity,
            purity: s.purity,
            n_samples: posterior.samples.len(),
            seed,
            diagnostics: ReportDiagnostics {
                acceptance_rate: Some(posterior.diagnostics.acceptance_rate),
                warning: posterior.diagnostics.warning.clone(),
            },
        })
    }

    /// Report for a known state, with zero spread.
    pub fn exact(rho: &DensityMatrix, target: &Ket, seed: u64) -> Result<Self> {
        Ok(TomographyReport {
            mean_rho: rho.to_parts(),
            fidelity: Stat {
                mean: fidelity(rho, target)?,
                std: 0.0,
            },
            purity: Stat {
                mean: rho.purity(),
                std: 0.0,
            },
            n_samples: 0,
            seed,
            diagnostics: ReportDiagnostics {
                acceptance_rate: None,
                warning: None,
            },
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Samples the posterior and summarizes it against `target`.
pub fn reconstruct(records: &[CountRecord], target: &Ket, config: &TomoConfig) -> Result<TomographyReport> {
    let posterior = sample_posterior(records, config)?;
    TomographyReport::from_posterior(&posterior, target, config.seed)
}
