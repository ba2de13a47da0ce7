//! Bessel-function numerics and the electro-optic phase modulator as an
//! operator on a truncated lattice of frequency bins.
//!
//! A sinusoidal phase `exp(i θ sin(Δω t))` scatters light in bin `m` into bin
//! `m + k` with amplitude `J_k(θ)`. The lattice keeps bins `-K..=K` around the
//! carrier; bins 0 and 1 carry the frequency qubit.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest Bessel order the evaluator accepts.
pub const MAX_ORDER: i32 = 64;

/// Largest modulation index accepted by [`ModIndex`].
pub const MAX_MOD_INDEX: f64 = 4.0;

/// Sideband power allowed to fall outside the lattice.
pub const TRUNCATION_BUDGET: f64 = 1e-10;

/// Crossover between the ascending series and Miller's recurrence.
const SERIES_LIMIT: f64 = 2.0;

/// Peak phase deviation of a sinusoidal drive, in radians.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ModIndex(f64);

impl ModIndex {
    pub const ZERO: ModIndex = ModIndex(0.0);

    pub fn new(theta: f64) -> Result<Self> {
        if !theta.is_finite() || !(0.0..=MAX_MOD_INDEX).contains(&theta) {
            return Err(Error::domain(format!(
                "modulation index {theta} outside [0, {MAX_MOD_INDEX}]"
            )));
        }
        Ok(ModIndex(theta))
    }

    /// The index that empties the carrier bin, `J_0(θ) = 0`.
    pub fn carrier_depletion() -> Self {
        ModIndex(bessel_j0_first_zero())
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for ModIndex {
    type Error = Error;

    fn try_from(theta: f64) -> Result<Self> {
        ModIndex::new(theta)
    }
}

impl From<ModIndex> for f64 {
    fn from(m: ModIndex) -> f64 {
        m.0
    }
}

/// Orientation of the modulation phase relative to the optical field.
///
/// `Plus` is `exp(+i θ sin Δω t)`, giving `J_k` on a shift of `+k` bins.
/// `Minus` flips the phase, which is the same as `J_{-k}` on a shift of `+k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum PhaseSign {
    Plus,
    Minus,
}

impl PhaseSign {
    pub fn as_i32(self) -> i32 {
        match self {
            PhaseSign::Plus => 1,
            PhaseSign::Minus => -1,
        }
    }
}

impl TryFrom<i8> for PhaseSign {
    type Error = Error;

    fn try_from(v: i8) -> Result<Self> {
        match v {
            1 => Ok(PhaseSign::Plus),
            -1 => Ok(PhaseSign::Minus),
            other => Err(Error::domain(format!("phase sign must be +1 or -1, got {other}"))),
        }
    }
}

impl From<PhaseSign> for i8 {
    fn from(s: PhaseSign) -> i8 {
        s.as_i32() as i8
    }
}

/// Bins `-half_width..=half_width` spaced by `spacing` around `center`.
/// Frequencies are angular, in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinLattice {
    pub half_width: usize,
    pub spacing: f64,
    pub center: f64,
}

impl Default for BinLattice {
    fn default() -> Self {
        BinLattice {
            half_width: 12,
            spacing: 2.0 * PI * 25e9,
            center: 2.0 * PI * 192.0e12,
        }
    }
}

impl BinLattice {
    pub fn new(half_width: usize, spacing: f64, center: f64) -> Result<Self> {
        let lattice = BinLattice {
            half_width,
            spacing,
            center,
        };
        lattice.validate()?;
        Ok(lattice)
    }

    pub fn with_half_width(half_width: usize) -> Result<Self> {
        BinLattice::new(half_width, BinLattice::default().spacing, BinLattice::default().center)
    }

    pub fn validate(&self) -> Result<()> {
        if self.half_width < 2 {
            return Err(Error::domain(format!(
                "lattice half-width must be >= 2, got {}",
                self.half_width
            )));
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(Error::domain(format!("bin spacing must be > 0, got {}", self.spacing)));
        }
        if !self.center.is_finite() {
            return Err(Error::domain("lattice center must be finite"));
        }
        Ok(())
    }

    /// Number of bins kept, `2K + 1`.
    pub fn len(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row/column position of `bin`, or `None` if it lies off the lattice.
    pub fn position(&self, bin: i32) -> Option<usize> {
        let k = self.half_width as i64;
        let b = bin as i64;
        (-k..=k).contains(&b).then(|| (b + k) as usize)
    }

    pub fn contains(&self, bin: i32) -> bool {
        self.position(bin).is_some()
    }

    pub fn bins(&self) -> impl Iterator<Item = i32> {
        let k = self.half_width as i32;
        -k..=k
    }

    /// Angular frequency of `bin`.
    pub fn frequency(&self, bin: i32) -> f64 {
        self.center + f64::from(bin) * self.spacing
    }
}

/// Amplitude transfer matrix over lattice bins; entry `(to, from)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinOperator {
    lattice: BinLattice,
    matrix: DMatrix<Complex64>,
}

impl BinOperator {
    pub fn identity(lattice: BinLattice) -> Self {
        let n = lattice.len();
        BinOperator {
            lattice,
            matrix: DMatrix::identity(n, n),
        }
    }

    pub fn lattice(&self) -> &BinLattice {
        &self.lattice
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    /// Amplitude carried from bin `from` into bin `to`; zero off the lattice.
    pub fn entry(&self, to: i32, from: i32) -> Complex64 {
        match (self.lattice.position(to), self.lattice.position(from)) {
            (Some(r), Some(c)) => self.matrix[(r, c)],
            _ => Complex64::new(0.0, 0.0),
        }
    }

    /// Operator product `self · rhs` (apply `rhs` first).
    pub fn compose(&self, rhs: &BinOperator) -> Result<BinOperator> {
        if self.lattice != rhs.lattice {
            return Err(Error::domain("cannot compose operators on different lattices"));
        }
        Ok(BinOperator {
            lattice: self.lattice,
            matrix: &self.matrix * &rhs.matrix,
        })
    }
}

/// Bessel function of the first kind, `J_order(theta)`.
pub fn bessel_j(order: i32, theta: ModIndex) -> Result<f64> {
    if order.abs() > MAX_ORDER {
        return Err(Error::domain(format!(
            "Bessel order {order} outside supported range |order| <= {MAX_ORDER}"
        )));
    }
    let n = order.unsigned_abs();
    let value = bessel_j_nonneg(n, theta.value());
    Ok(if order < 0 && n % 2 == 1 { -value } else { value })
}

fn bessel_j_nonneg(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x <= SERIES_LIMIT {
        bessel_series(n, x)
    } else {
        bessel_miller(n, x)
    }
}

/// Ascending series `Σ (-1)^m (x/2)^(2m+n) / (m! (m+n)!)`.
fn bessel_series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / f64::from(k);
    }
    let q = half * half;
    let mut sum = term;
    let mut m = 0.0;
    loop {
        m += 1.0;
        term *= -q / (m * (m + f64::from(n)));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() || term == 0.0 {
            break;
        }
    }
    sum
}

/// Miller's downward recurrence normalized by `J_0 + 2 Σ J_2k = 1`.
fn bessel_miller(n: u32, x: f64) -> f64 {
    let start = {
        let s = n.max(x.ceil() as u32) + 40;
        s + s % 2
    };
    let mut above = 0.0_f64;
    let mut current = 1e-30_f64;
    let mut norm = 0.0_f64;
    let mut wanted = if n == start { current } else { 0.0 };
    let mut k = start;
    while k > 0 {
        if k % 2 == 0 {
            norm += 2.0 * current;
        }
        let below = 2.0 * f64::from(k) / x * current - above;
        above = current;
        current = below;
        k -= 1;
        if k == n {
            wanted = current;
        }
        if current.abs() > 1e250 {
            current *= 1e-250;
            above *= 1e-250;
            norm *= 1e-250;
            wanted *= 1e-250;
        }
    }
    norm += current;
    wanted / norm
}

/// First positive zero of `J_0`, found by bisection on [`bessel_j`].
pub fn bessel_j0_first_zero() -> f64 {
    static ROOT: OnceLock<f64> = OnceLock::new();
    *ROOT.get_or_init(|| {
        let j0 = |x: f64| bessel_j_nonneg(0, x);
        let (mut lo, mut hi) = (2.0_f64, 3.0_f64);
        debug_assert!(j0(lo) > 0.0 && j0(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if j0(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if j0(lo).abs() <= j0(hi).abs() {
            lo
        } else {
            hi
        }
    })
}

/// Sideband power `Σ_{|k| > half_width} J_k(θ)²` lost to lattice truncation.
pub fn tail_power(theta: ModIndex, half_width: usize) -> f64 {
    let start = half_width as i32 + 1;
    (start..=MAX_ORDER)
        .map(|k| bessel_j_nonneg(k as u32, theta.value()).powi(2))
        .sum::<f64>()
        * 2.0
}

/// Smallest half-width whose truncation tail stays under [`TRUNCATION_BUDGET`].
pub fn required_half_width(theta: ModIndex) -> usize {
    (2..MAX_ORDER as usize)
        .find(|&k| tail_power(theta, k) < TRUNCATION_BUDGET)
        .unwrap_or(MAX_ORDER as usize)
}

/// The phase modulator as an operator on `lattice`.
///
/// Entry `(m + k, m)` is `J_k(θ)` for [`PhaseSign::Plus`] and `J_{-k}(θ)` for
/// [`PhaseSign::Minus`]. Amplitude that would leave the lattice is dropped, so
/// the lattice must be wide enough for the truncation budget.
pub fn eom_operator(theta: ModIndex, sign: PhaseSign, lattice: &BinLattice) -> Result<BinOperator> {
    lattice.validate()?;
    let tail = tail_power(theta, lattice.half_width);
    if tail >= TRUNCATION_BUDGET {
        return Err(Error::Truncation {
            theta: theta.value(),
            half_width: lattice.half_width,
            tail,
            required_half_width: required_half_width(theta),
        });
    }
    let k_max = lattice.half_width as i32;
    let amplitudes: Vec<f64> = (-2 * k_max..=2 * k_max)
        .map(|k| {
            if k.abs() > MAX_ORDER {
                Ok(0.0)
            } else {
                bessel_j(k * sign.as_i32(), theta)
            }
        })
        .collect::<Result<_>>()?;
    let n = lattice.len();
    let matrix = DMatrix::from_fn(n, n, |row, col| {
        let shift = row as i32 - col as i32;
        Complex64::new(amplitudes[(shift + 2 * k_max) as usize], 0.0)
    });
    Ok(BinOperator {
        lattice: *lattice,
        matrix,
    })
}

/// Power fraction moved from `from_bin` into `to_bin`, `|J_{to-from}(θ)|²`.
pub fn conversion_efficiency(theta: ModIndex, from_bin: i32, to_bin: i32) -> Result<f64> {
    let shift = to_bin
        .checked_sub(from_bin)
        .ok_or_else(|| Error::domain("bin difference overflows"))?;
    Ok(bessel_j(shift, theta)?.powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(theta: f64) -> ModIndex {
        ModIndex::new(theta).unwrap()
    }

    /// `J_n(x) = (1/π) ∫_0^π cos(n t - x sin t) dt`, trapezoid over the full period.
    fn quadrature_j(n: i32, x: f64) -> f64 {
        let steps = 512;
        let h = 2.0 * PI / steps as f64;
        (0..steps)
            .map(|i| {
                let t = i as f64 * h;
                (f64::from(n) * t - x * t.sin()).cos()
            })
            .sum::<f64>()
            * h
            / (2.0 * PI)
    }

    #[test]
    fn j0_at_origin_is_one() {
        assert_eq!(bessel_j(0, ModIndex::ZERO).unwrap(), 1.0);
        assert_eq!(bessel_j(5, ModIndex::ZERO).unwrap(), 0.0);
    }

    #[test]
    fn matches_quadrature_oracle() {
        for &x in &[0.05, 0.2, 1.0, 1.99, 2.0, 2.01, 2.405, 3.0, 3.832, 4.0] {
            for n in -20..=20 {
                let got = bessel_j(n, m(x)).unwrap();
                let want = quadrature_j(n, x);
                assert!((got - want).abs() < 1e-13, "J_{n}({x}): {got} vs {want}");
            }
        }
    }

    #[test]
    fn frozen_values() {
        // mpmath, 30 digits
        let j1 = bessel_j(1, m(2.405)).unwrap();
        assert!((j1 - 0.519_109_833_970_755_9).abs() < 1e-14);
        assert!((j1 * j1 - 0.2695).abs() < 1e-4);
        let j1_small = bessel_j(1, m(0.2)).unwrap();
        assert!((j1_small - 0.099_500_832_639_236_0).abs() < 1e-15);
        assert!(j1_small * j1_small < 0.01);
    }

    #[test]
    fn order_out_of_range() {
        assert!(matches!(bessel_j(65, m(1.0)), Err(Error::Domain(_))));
        assert!(matches!(bessel_j(-65, m(1.0)), Err(Error::Domain(_))));
        assert!(bessel_j(64, m(1.0)).is_ok());
    }

    #[test]
    fn mod_index_guard() {
        assert!(ModIndex::new(-0.1).is_err());
        assert!(ModIndex::new(4.01).is_err());
        assert!(ModIndex::new(f64::NAN).is_err());
        assert!(ModIndex::new(4.0).is_ok());
    }

    #[test]
    fn first_zero() {
        // bisection on the quadrature oracle
        let (mut lo, mut hi) = (2.0, 3.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if quadrature_j(0, mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let root = bessel_j0_first_zero();
        assert!((root - 2.404_825_558).abs() < 1e-9);
        assert!((root - 0.5 * (lo + hi)).abs() < 1e-12);
        assert!(bessel_j(0, m(root)).unwrap().powi(2) < 1e-16);
        assert!(root > 2.40 && root < 2.41);
    }

    #[test]
    fn truncation_at_default_width() {
        for &x in &[0.0, 0.2, 1.0, 2.405, 2.5] {
            let kept: f64 = (-12..=12).map(|k| bessel_j(k, m(x)).unwrap().powi(2)).sum();
            assert!(kept >= 1.0 - 1e-10, "theta {x}: kept {kept}");
        }
    }

    #[test]
    fn eom_entries() {
        let lattice = BinLattice::default();
        let id = eom_operator(ModIndex::ZERO, PhaseSign::Plus, &lattice).unwrap();
        assert_eq!(id, BinOperator::identity(lattice));

        let op = eom_operator(m(2.405), PhaseSign::Plus, &lattice).unwrap();
        assert!((op.entry(1, 0).re - 0.519_109_833_970_755_9).abs() < 1e-14);
        assert!(op.entry(0, 0).norm() < 1e-4);
        assert!((op.entry(0, 1).re + 0.519_109_833_970_755_9).abs() < 1e-14);

        let flipped = eom_operator(m(2.405), PhaseSign::Minus, &lattice).unwrap();
        assert_eq!(flipped.entry(1, 0), op.entry(0, 1));
        assert_eq!(op.entry(20, 0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn eom_column_norms_subunitary() {
        let lattice = BinLattice::default();
        let op = eom_operator(m(2.5), PhaseSign::Plus, &lattice).unwrap();
        for col in op.matrix().column_iter() {
            assert!(col.norm_squared() <= 1.0 + 1e-12);
        }
        let center = op.matrix().column(lattice.position(0).unwrap()).norm_squared();
        assert!((center - 1.0).abs() < 1e-10);
    }

    #[test]
    fn narrow_lattice_is_rejected() {
        let lattice = BinLattice::with_half_width(4).unwrap();
        match eom_operator(m(2.405), PhaseSign::Plus, &lattice) {
            Err(Error::Truncation {
                required_half_width, ..
            }) => {
                assert!(required_half_width > 4);
                let ok = BinLattice::with_half_width(required_half_width).unwrap();
                assert!(eom_operator(m(2.405), PhaseSign::Plus, &ok).is_ok());
                let short = BinLattice::with_half_width(required_half_width - 1).unwrap();
                assert!(eom_operator(m(2.405), PhaseSign::Plus, &short).is_err());
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn lattice_validation() {
        assert!(BinLattice::with_half_width(1).is_err());
        assert!(BinLattice::new(4, 0.0, 0.0).is_err());
        let l = BinLattice::with_half_width(3).unwrap();
        assert_eq!(l.len(), 7);
        assert_eq!(l.position(-3), Some(0));
        assert_eq!(l.position(4), None);
    }

    #[test]
    fn conversion_examples() {
        let eff = conversion_efficiency(m(2.405), 0, 1).unwrap();
        assert!((eff - 0.2695).abs() < 1e-4);
        let stay = conversion_efficiency(m(0.2), 0, 0).unwrap();
        assert!((stay - 0.980_149_445_657_974).abs() < 1e-14);
        assert_eq!(conversion_efficiency(ModIndex::ZERO, 0, 1).unwrap(), 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn reflection_symmetry(k in 0i32..=16, idx in 0usize..3) {
                let theta = m([0.2, 1.0, 2.405][idx]);
                let pos = bessel_j(k, theta).unwrap();
                let neg = bessel_j(-k, theta).unwrap();
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                prop_assert_eq!(neg, sign * pos);
            }

            #[test]
            fn translation_invariance(theta in 0.0f64..4.0, from in -20i32..20, to in -20i32..20, c in -20i32..20) {
                let t = m(theta);
                let a = conversion_efficiency(t, from, to).unwrap();
                let b = conversion_efficiency(t, from + c, to + c).unwrap();
                prop_assert_eq!(a, b);
            }

            #[test]
            fn opposite_signs_cancel(theta in 0.0f64..2.5) {
                let lattice = BinLattice::with_half_width(16).unwrap();
                let up = eom_operator(m(theta), PhaseSign::Plus, &lattice).unwrap();
                let down = eom_operator(m(theta), PhaseSign::Minus, &lattice).unwrap();
                let prod = up.compose(&down).unwrap();
                for to in -8..=8 {
                    for from in -8..=8 {
                        let want = if to == from { 1.0 } else { 0.0 };
                        prop_assert!((prod.entry(to, from) - Complex64::new(want, 0.0)).norm() < 1e-9);
                    }
                }
            }
        }
    }
}
