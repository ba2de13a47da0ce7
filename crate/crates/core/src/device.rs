//! The Sagnac-loop gate: polarization picks the propagation direction through a
//! traveling-wave phase modulator, so only one polarization is frequency-shifted.
//!
//! Transfer model, applied right to left on `pol ⊗ lattice`:
//!
//! ```text
//! loss · PDLE(H) · e^{iφ on V} · [[E_counter·c, -E_counter·s], [E_fast·s, E_co·c]]
//! ```
//!
//! The loop splitter sends H clockwise (against the RF wave, `E_counter`) and V
//! counterclockwise (with the RF wave, `E_co`). Input misalignment and finite
//! splitter extinction both rotate light into the wrong arm; they combine into
//! a single angle `α = misalignment + atan(leak)` with `c = cos α`, `s = sin α`.
//! Each arm exits with its own polarization label. The wavelength-selective
//! switch is applied last as a mask onto the two computational bins.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix4, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freqbin::{bessel_j, eom_operator, BinLattice, BinOperator, ModIndex, PhaseSign};
use crate::polarization::{leak_amplitude, Axis, JonesVector};
use crate::qubits::{normalized, Ket, BASIS_LABELS};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Photon state on polarization ⊗ frequency-bin lattice. H block first.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridState {
    lattice: BinLattice,
    amplitudes: DVector<Complex64>,
}

impl HybridState {
    pub fn zeros(lattice: BinLattice) -> Self {
        HybridState {
            lattice,
            amplitudes: DVector::zeros(2 * lattice.len()),
        }
    }

    pub fn from_amplitudes(lattice: BinLattice, amplitudes: DVector<Complex64>) -> Result<Self> {
        if amplitudes.len() != 2 * lattice.len() {
            return Err(Error::domain(format!(
                "expected {} amplitudes, got {}",
                2 * lattice.len(),
                amplitudes.len()
            )));
        }
        Ok(HybridState { lattice, amplitudes })
    }

    /// `|pol, bin⟩`
    pub fn basis(lattice: BinLattice, pol: Axis, bin: i32) -> Result<Self> {
        let mut state = HybridState::zeros(lattice);
        let idx = state.index(pol, bin)?;
        state.amplitudes[idx] = Complex64::new(1.0, 0.0);
        Ok(state)
    }

    /// `jones ⊗ |bin⟩`
    pub fn product(lattice: BinLattice, jones: &JonesVector, bin: i32) -> Result<Self> {
        let mut state = HybridState::zeros(lattice);
        let h = state.index(Axis::H, bin)?;
        let v = state.index(Axis::V, bin)?;
        state.amplitudes[h] = jones.h();
        state.amplitudes[v] = jones.v();
        Ok(state)
    }

    /// Embeds a computational-subspace ket, with the qubit bins at `offset`, `offset + 1`.
    pub fn from_qubits(lattice: BinLattice, ket: &Ket, offset: i32) -> Result<Self> {
        let mut state = HybridState::zeros(lattice);
        for (i, idx) in subspace_indices(&lattice, offset)?.into_iter().enumerate() {
            state.amplitudes[idx] = ket[i];
        }
        Ok(state)
    }

    pub fn lattice(&self) -> &BinLattice {
        &self.lattice
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn index(&self, pol: Axis, bin: i32) -> Result<usize> {
        hybrid_index(&self.lattice, pol, bin)
    }

    pub fn amplitude(&self, pol: Axis, bin: i32) -> Complex64 {
        self.index(pol, bin).map_or(ZERO, |i| self.amplitudes[i])
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// Amplitudes on the computational subspace.
    pub fn qubits(&self, offset: i32) -> Result<Ket> {
        let idx = subspace_indices(&self.lattice, offset)?;
        Ok(Ket::from_fn(|i, _| self.amplitudes[idx[i]]))
    }

    /// Probability of finding the photon in `bin`, summed over polarization.
    pub fn bin_power(&self, bin: i32) -> f64 {
        self.amplitude(Axis::H, bin).norm_sqr() + self.amplitude(Axis::V, bin).norm_sqr()
    }
}

fn hybrid_index(lattice: &BinLattice, pol: Axis, bin: i32) -> Result<usize> {
    let pos = lattice
        .position(bin)
        .ok_or_else(|| Error::domain(format!("bin {bin} is outside the lattice")))?;
    Ok(match pol {
        Axis::H => pos,
        Axis::V => lattice.len() + pos,
    })
}

/// Hybrid-space indices of `|H,o⟩, |H,o+1⟩, |V,o⟩, |V,o+1⟩`.
fn subspace_indices(lattice: &BinLattice, offset: i32) -> Result<[usize; 4]> {
    Ok([
        hybrid_index(lattice, Axis::H, offset)?,
        hybrid_index(lattice, Axis::H, offset + 1)?,
        hybrid_index(lattice, Axis::V, offset)?,
        hybrid_index(lattice, Axis::V, offset + 1)?,
    ])
}

/// Physical knobs of the gate. Serialized as the device JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    /// Copropagating (V, counterclockwise) modulation index.
    pub theta_co: ModIndex,
    /// Counterpropagating (H, clockwise) modulation index.
    pub theta_counter: ModIndex,
    pub phase_sign_co: PhaseSign,
    pub phase_sign_counter: PhaseSign,
    /// Power transmission of the PDLE on H.
    pub pdle_transmission: f64,
    /// Loop splitter extinction; `None` is an ideal splitter.
    pub pbs_extinction_db: Option<f64>,
    /// Input polarization error, radians.
    pub misalignment_angle: f64,
    /// Modulation seen by misrouted copropagating light on the fiber fast axis.
    /// `None` treats it like the slow axis.
    pub theta_fast: Option<ModIndex>,
    pub insertion_loss_db: f64,
    /// Phase of the counterclockwise arm relative to the clockwise arm.
    #[serde(default)]
    pub relative_phase: f64,
    /// RF/optical walk-off time in the modulator. When set, the counterpropagating
    /// index follows the velocity-mismatch model instead of `theta_counter`.
    #[serde(default)]
    pub walkoff_time_s: Option<f64>,
    /// Lower computational bin; the qubit lives in bins `offset` and `offset + 1`.
    #[serde(default)]
    pub computational_offset: i32,
    pub lattice: BinLattice,
}

impl Default for DeviceParams {
    fn default() -> Self {
        DeviceParams::ideal()
    }
}

impl DeviceParams {
    /// Carrier-depleting copropagating drive, no counterpropagating modulation,
    /// perfect optics, and the PDLE set to `|J_1|²` to balance the two arms.
    pub fn ideal() -> Self {
        let theta_co = ModIndex::carrier_depletion();
        let j1 = bessel_j(1, theta_co).expect("order 1 is in range");
        DeviceParams {
            theta_co,
            theta_counter: ModIndex::ZERO,
            phase_sign_co: PhaseSign::Plus,
            phase_sign_counter: PhaseSign::Plus,
            pdle_transmission: j1 * j1,
            pbs_extinction_db: None,
            misalignment_angle: 0.0,
            theta_fast: None,
            insertion_loss_db: 0.0,
            relative_phase: 0.0,
            walkoff_time_s: None,
            computational_offset: 0,
            lattice: BinLattice::default(),
        }
    }

    /// Calibration preset: residual counterpropagating index 0.2, 25 dB
    /// splitter extinction and 0.02 rad input misalignment.
    pub fn paper() -> Self {
        DeviceParams {
            theta_counter: ModIndex::new(0.2).expect("in range"),
            pbs_extinction_db: Some(25.0),
            misalignment_angle: 0.02,
            ..DeviceParams::ideal()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let params: DeviceParams = serde_json::from_str(text)?;
        params.validate()?;
        Ok(params)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Shifts the copropagating drive away from its current value.
    pub fn with_theta_offset(mut self, delta: f64) -> Result<Self> {
        self.theta_co = ModIndex::new(self.theta_co.value() + delta)?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.lattice.validate()?;
        if !(0.0..=1.0).contains(&self.pdle_transmission) {
            return Err(Error::domain(format!(
                "pdle_transmission {} outside [0, 1]",
                self.pdle_transmission
            )));
        }
        if let Some(db) = self.pbs_extinction_db {
            leak_amplitude(db)?;
        }
        if !(self.insertion_loss_db.is_finite() && self.insertion_loss_db >= 0.0) {
            return Err(Error::domain(format!(
                "insertion_loss_db must be finite and >= 0, got {}",
                self.insertion_loss_db
            )));
        }
        if !self.misalignment_angle.is_finite() || !self.relative_phase.is_finite() {
            return Err(Error::domain("angles must be finite"));
        }
        if let Some(t) = self.walkoff_time_s {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::domain(format!("walkoff_time_s must be > 0, got {t}")));
            }
        }
        let off = self.computational_offset;
        if !self.lattice.contains(off) || !self.lattice.contains(off + 1) {
            return Err(Error::domain(format!(
                "computational bins {off}, {} leave the lattice",
                off + 1
            )));
        }
        Ok(())
    }

    /// Counterpropagating index actually used at the lattice spacing.
    pub fn counter_index(&self) -> Result<ModIndex> {
        self.counter_index_at(self.lattice.spacing)
    }

    /// Counterpropagating index at RF angular frequency `delta_omega`.
    pub fn counter_index_at(&self, delta_omega: f64) -> Result<ModIndex> {
        match self.walkoff_time_s {
            Some(t) => effective_counter_index(self.theta_co, delta_omega, t),
            None => Ok(self.theta_counter),
        }
    }

    /// Combined rotation into the wrong arm, radians.
    pub fn crosstalk_angle(&self) -> Result<f64> {
        let leak = match self.pbs_extinction_db {
            Some(db) => leak_amplitude(db)?,
            None => 0.0,
        };
        Ok(self.misalignment_angle + leak.atan())
    }

    pub fn insertion_amplitude(&self) -> f64 {
        10f64.powf(-self.insertion_loss_db / 20.0)
    }
}

/// Shipped device presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Ideal,
    Paper,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Ideal => "ideal",
            Preset::Paper => "paper",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "ideal" => Ok(Preset::Ideal),
            "paper" => Ok(Preset::Paper),
            other => Err(Error::Usage(format!("unknown preset `{other}` (expected ideal|paper)"))),
        }
    }

    pub fn json(self) -> &'static str {
        match self {
            Preset::Ideal => include_str!("../presets/ideal.json"),
            Preset::Paper => include_str!("../presets/paper.json"),
        }
    }

    pub fn params(self) -> Result<DeviceParams> {
        DeviceParams::from_json(self.json())
    }
}

/// Velocity-mismatch suppression of a traveling-wave modulator:
/// `θ_co · |sinc(Δω τ / 2)|`.
pub fn effective_counter_index(theta_co: ModIndex, delta_omega: f64, walkoff_time: f64) -> Result<ModIndex> {
    if !(walkoff_time.is_finite() && walkoff_time > 0.0) {
        return Err(Error::domain(format!("walkoff time must be > 0, got {walkoff_time}")));
    }
    let x = 0.5 * delta_omega * walkoff_time;
    let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
    ModIndex::new(theta_co.value() * sinc.abs())
}

/// Walk-off time that yields `target` at `delta_omega`, taking the root of the
/// sinc's main lobe.
pub fn calibrate_walkoff(theta_co: ModIndex, target: ModIndex, delta_omega: f64) -> Result<f64> {
    if !(target.value() < theta_co.value()) {
        return Err(Error::domain("target index must be below the copropagating index"));
    }
    if !(delta_omega > 0.0) {
        return Err(Error::domain("RF frequency must be > 0"));
    }
    let f = |x: f64| theta_co.value() * x.sin() / x - target.value();
    let x = bisect(f, 1e-12, PI, 200);
    Ok(2.0 * x / delta_omega)
}

/// Index giving `contrast_db` between the carrier and the first sideband,
/// `10 log10(J_0² / J_1²)`.
pub fn fast_axis_index(contrast_db: f64) -> Result<ModIndex> {
    if !(contrast_db.is_finite() && contrast_db > 0.0) {
        return Err(Error::domain("contrast must be a positive number of dB"));
    }
    let zero = ModIndex::carrier_depletion().value();
    let contrast = |t: f64| -> f64 {
        let m = ModIndex::new(t).expect("bracket lies inside the index range");
        let j0 = bessel_j(0, m).unwrap_or(0.0);
        let j1 = bessel_j(1, m).unwrap_or(0.0);
        10.0 * (j0 * j0 / (j1 * j1)).log10() - contrast_db
    };
    ModIndex::new(bisect(contrast, 1e-9, zero - 1e-9, 200))
}

/// Root of a function that is positive at `lo` and negative at `hi`.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A built gate.
#[derive(Debug, Clone)]
pub struct TransferResult {
    params: DeviceParams,
    operator: DMatrix<Complex64>,
    subspace: Matrix4<Complex64>,
    success: [f64; 4],
}

impl TransferResult {
    pub fn params(&self) -> &DeviceParams {
        &self.params
    }

    pub fn lattice(&self) -> &BinLattice {
        &self.params.lattice
    }

    /// Full-lattice operator before the bandpass mask.
    pub fn operator(&self) -> &DMatrix<Complex64> {
        &self.operator
    }

    /// The gate restricted to the computational subspace after the bandpass.
    pub fn subspace_operator(&self) -> &Matrix4<Complex64> {
        &self.subspace
    }

    /// Probability that a computational input survives the bandpass (and loss),
    /// in `|00⟩, |01⟩, |10⟩, |11⟩` order.
    pub fn success_probabilities(&self) -> [f64; 4] {
        self.success
    }

    pub fn success_probability_map(&self) -> BTreeMap<&'static str, f64> {
        BASIS_LABELS.iter().copied().zip(self.success).collect()
    }

    /// Postselected, renormalized output for a computational-subspace input.
    pub fn apply_qubits(&self, input: &Ket) -> Result<(Ket, f64)> {
        let out = self.subspace * input;
        let p = out.norm_squared();
        if p < 1e-300 {
            return Err(Error::Degenerate("no amplitude survives the bandpass".into()));
        }
        Ok((normalized(&out)?, p / input.norm_squared()))
    }
}

/// Assembles the gate from its optical elements.
pub fn build_cnot(params: &DeviceParams) -> Result<TransferResult> {
    params.validate()?;
    let lattice = params.lattice;
    let n = lattice.len();

    let counter = eom_operator(params.counter_index()?, params.phase_sign_counter, &lattice)?;
    let co = eom_operator(params.theta_co, params.phase_sign_co, &lattice)?;
    let fast = match params.theta_fast {
        Some(theta) => eom_operator(theta, params.phase_sign_co, &lattice)?,
        None => co.clone(),
    };

    let (s, c) = params.crosstalk_angle()?.sin_cos();
    let arm_phase = Complex64::from_polar(1.0, params.relative_phase);
    let mut loop_op = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
    place(&mut loop_op, 0, 0, &counter, Complex64::new(c, 0.0));
    place(&mut loop_op, 0, n, &counter, Complex64::new(-s, 0.0));
    place(&mut loop_op, n, 0, &fast, arm_phase * s);
    place(&mut loop_op, n, n, &co, arm_phase * c);

    // A fast-axis branch that differs from the slow axis breaks exact
    // unitarity; rescale so the loop never amplifies.
    if params.theta_fast.is_some() && s != 0.0 {
        let gram = loop_op.adjoint() * &loop_op;
        let top = SymmetricEigen::new(gram).eigenvalues.max();
        if top > 1.0 {
            loop_op.unscale_mut(top.sqrt());
        }
    }

    let pdle_amp = params.pdle_transmission.sqrt();
    let loss = params.insertion_amplitude();
    let mut operator = loop_op;
    for (row, mut r) in operator.row_iter_mut().enumerate() {
        let scale = if row < n { pdle_amp * loss } else { loss };
        r.scale_mut(scale);
    }

    let idx = subspace_indices(&lattice, params.computational_offset)?;
    let subspace = Matrix4::from_fn(|r, c| operator[(idx[r], idx[c])]);
    let mut success = [0.0; 4];
    for (j, s) in success.iter_mut().enumerate() {
        *s = (0..4).map(|i| subspace[(i, j)].norm_sqr()).sum();
    }

    Ok(TransferResult {
        params: params.clone(),
        operator,
        subspace,
        success,
    })
}

fn place(target: &mut DMatrix<Complex64>, row: usize, col: usize, block: &BinOperator, scale: Complex64) {
    let m = block.matrix();
    let mut view = target.view_mut((row, col), m.shape());
    view.zip_apply(m, |t, b| *t = b * scale);
}

/// Output of [`apply`].
#[derive(Debug, Clone)]
pub struct Applied {
    pub state: HybridState,
    /// Probability that the photon lands in the computational bins.
    pub success_probability: f64,
}

/// Propagates `state` through the gate. With `postselect`, the bandpass is
/// applied and the survivor renormalized; otherwise the raw full-lattice
/// output is returned.
pub fn apply(state: &HybridState, result: &TransferResult, postselect: bool) -> Result<Applied> {
    if state.lattice() != result.lattice() {
        return Err(Error::domain("state and gate use different lattices"));
    }
    let out = result.operator() * state.amplitudes();
    let idx = subspace_indices(result.lattice(), result.params().computational_offset)?;
    let kept: f64 = idx.iter().map(|&i| out[i].norm_sqr()).sum();
    let input_norm = state.norm_squared();
    if !postselect {
        return Ok(Applied {
            state: HybridState::from_amplitudes(*result.lattice(), out)?,
            success_probability: if input_norm > 0.0 { kept / input_norm } else { 0.0 },
        });
    }
    if kept < 1e-300 {
        return Err(Error::Degenerate(
            "postselection failed: no amplitude in the computational bins".into(),
        ));
    }
    let mut masked = DVector::zeros(out.len());
    let norm = kept.sqrt();
    for &i in &idx {
        masked[i] = out[i] / norm;
    }
    Ok(Applied {
        state: HybridState::from_amplitudes(*result.lattice(), masked)?,
        success_probability: kept / input_norm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BellState {
    #[serde(rename = "phi+")]
    PhiPlus,
    #[serde(rename = "phi-")]
    PhiMinus,
    #[serde(rename = "psi+")]
    PsiPlus,
    #[serde(rename = "psi-")]
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiPlus,
        BellState::PsiMinus,
    ];

    pub fn ket(self) -> Ket {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        let (v0, v1, v2, v3) = match self {
            BellState::PhiPlus => (a, 0.0, 0.0, a),
            BellState::PhiMinus => (a, 0.0, 0.0, -a),
            BellState::PsiPlus => (0.0, a, a, 0.0),
            BellState::PsiMinus => (0.0, a, -a, 0.0),
        };
        nalgebra::Vector4::new(v0, v1, v2, v3).map(|x| Complex64::new(x, 0.0))
    }

    pub fn label(self) -> &'static str {
        match self {
            BellState::PhiPlus => "phi+",
            BellState::PhiMinus => "phi-",
            BellState::PsiPlus => "psi+",
            BellState::PsiMinus => "psi-",
        }
    }

    pub fn from_label(s: &str) -> Result<Self> {
        BellState::ALL
            .into_iter()
            .find(|b| b.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Usage(format!("unknown Bell target `{s}` (phi+|phi-|psi+|psi-)")))
    }
}

/// One of the four product inputs `{D, A} ⊗ {ω0, ω1}` that the gate
/// entangles into a Bell state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BellInput {
    pub diagonal: bool,
    pub bin: u8,
}

impl BellInput {
    pub const ALL: [BellInput; 4] = [
        BellInput { diagonal: true, bin: 0 },
        BellInput {
            diagonal: false,
            bin: 0,
        },
        BellInput { diagonal: true, bin: 1 },
        BellInput {
            diagonal: false,
            bin: 1,
        },
    ];

    /// Parses `D:w0`, `A:w1`, ...
    pub fn parse(s: &str) -> Result<Self> {
        let (pol, freq) = s
            .split_once(':')
            .ok_or_else(|| Error::Usage(format!("input `{s}` must look like D:w0")))?;
        let diagonal = match pol {
            "D" | "d" => true,
            "A" | "a" => false,
            other => return Err(Error::Usage(format!("input polarization `{other}` must be D or A"))),
        };
        let bin = match freq {
            "w0" | "ω0" => 0,
            "w1" | "ω1" => 1,
            other => return Err(Error::Usage(format!("input frequency `{other}` must be w0 or w1"))),
        };
        Ok(BellInput { diagonal, bin })
    }

    pub fn label(self) -> String {
        format!("{}:w{}", if self.diagonal { "D" } else { "A" }, self.bin)
    }

    pub fn jones(self) -> JonesVector {
        if self.diagonal {
            JonesVector::diagonal()
        } else {
            JonesVector::antidiagonal()
        }
    }

    pub fn ket(self) -> Ket {
        let j = self.jones();
        let one = Complex64::new(1.0, 0.0);
        let freq = if self.bin == 0 { [one, ZERO] } else { [ZERO, one] };
        crate::qubits::product_ket([j.h(), j.v()], freq)
    }

    /// Ideal gate output. The minus sign in the gate's `|11⟩ → -|10⟩` row
    /// swaps which polarization superposition yields `Ψ+` and `Ψ-`.
    pub fn target(self) -> BellState {
        match (self.diagonal, self.bin) {
            (true, 0) => BellState::PhiPlus,
            (false, 0) => BellState::PhiMinus,
            (true, _) => BellState::PsiMinus,
            (false, _) => BellState::PsiPlus,
        }
    }
}

/// The four Bell kets and the input that synthesizes each.
pub fn bell_targets() -> [(BellInput, BellState, Ket); 4] {
    BellInput::ALL.map(|input| (input, input.target(), input.target().ket()))
}
