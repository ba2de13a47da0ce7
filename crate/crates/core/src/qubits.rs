//! Two-qubit states on the computational subspace `{|00⟩, |01⟩, |10⟩, |11⟩}`,
//! with the polarization as the first (control) qubit and the frequency bin
//! as the second (target) qubit.

use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Ket = Vector4<Complex64>;

/// Tolerance on Hermiticity, trace and negative eigenvalues.
pub const DENSITY_TOLERANCE: f64 = 1e-10;

pub const BASIS_LABELS: [&str; 4] = ["00", "01", "10", "11"];

/// Computational basis vector `|index⟩`.
pub fn basis_ket(index: usize) -> Ket {
    let mut k = Ket::zeros();
    k[index] = Complex64::new(1.0, 0.0);
    k
}

/// Kronecker product of a polarization pair and a frequency pair.
pub fn product_ket(pol: [Complex64; 2], freq: [Complex64; 2]) -> Ket {
    Ket::new(pol[0] * freq[0], pol[0] * freq[1], pol[1] * freq[0], pol[1] * freq[1])
}

pub fn normalized(ket: &Ket) -> Result<Ket> {
    let n = ket.norm();
    if n < 1e-150 {
        return Err(Error::Degenerate("cannot normalize a zero state".into()));
    }
    Ok(ket.unscale(n))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Matrix4<Complex64>);

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(m: Matrix4<Complex64>) -> Result<Self> {
        let herm = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > DENSITY_TOLERANCE {
            return Err(Error::domain(format!("matrix is not Hermitian (defect {herm:.3e})")));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > DENSITY_TOLERANCE || tr.im.abs() > DENSITY_TOLERANCE {
            return Err(Error::domain(format!("trace {tr} is not 1")));
        }
        let min = SymmetricEigen::new(m).eigenvalues.min();
        if min < -DENSITY_TOLERANCE {
            return Err(Error::domain(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(DensityMatrix(m))
    }

    /// `A A† / Tr(A A†)`, positive and unit-trace by construction.
    pub fn from_factor(a: &Matrix4<Complex64>) -> Result<Self> {
        let g = a * a.adjoint();
        let tr = g.trace().re;
        if !(tr > 0.0) {
            return Err(Error::Degenerate("factor has zero norm".into()));
        }
        Ok(DensityMatrix(hermitize(&g.unscale(tr))))
    }

    pub fn from_pure(ket: &Ket) -> Result<Self> {
        let k = normalized(ket)?;
        Ok(DensityMatrix(k * k.adjoint()))
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix(Matrix4::identity().scale(0.25))
    }

    /// Convex combination with equal weights.
    pub fn mean<'a>(items: impl IntoIterator<Item = &'a DensityMatrix>) -> Result<Self> {
        let mut sum = Matrix4::zeros();
        let mut n = 0usize;
        for rho in items {
            sum += rho.0;
            n += 1;
        }
        if n == 0 {
            return Err(Error::domain("mean of an empty set of density matrices"));
        }
        Ok(DensityMatrix(sum.unscale(n as f64)))
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// `Tr(ρ²)`
    pub fn purity(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `⟨ψ|ρ|ψ⟩`
    pub fn expectation(&self, ket: &Ket) -> f64 {
        ket.dotc(&(self.0 * ket)).re
    }

    pub fn eigenvalues(&self) -> Vector4<f64> {
        SymmetricEigen::new(self.0).eigenvalues
    }

    pub fn to_parts(&self) -> MatrixParts {
        let mut re = [[0.0; 4]; 4];
        let mut im = [[0.0; 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                re[r][c] = self.0[(r, c)].re;
                im[r][c] = self.0[(r, c)].im;
            }
        }
        MatrixParts { re, im }
    }
}

fn hermitize(m: &Matrix4<Complex64>) -> Matrix4<Complex64> {
    (m + m.adjoint()).scale(0.5)
}

/// Row-major real and imaginary parts, the JSON layout of density matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixParts {
    pub re: [[f64; 4]; 4],
    pub im: [[f64; 4]; 4],
}

impl MatrixParts {
    pub fn to_matrix(&self) -> Matrix4<Complex64> {
        Matrix4::from_fn(|r, c| Complex64::new(self.re[r][c], self.im[r][c]))
    }
}
