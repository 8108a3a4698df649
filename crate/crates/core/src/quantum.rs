//! Exact two-qubit state algebra.
//!
//! Basis ordering is |↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩ with ion 1 as the left tensor
//! factor. |↑⟩ is the bright state and σz|↑⟩ = +|↑⟩.
//!
//! Global phases are kept in storage. Comparisons that should ignore them go
//! through [`equal_up_to_phase4`] / [`equal_up_to_phase2`].

use std::fmt;

use nalgebra::{DMatrix, Matrix2, Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;
pub type Ket4 = Vector4<C64>;

/// Rejection threshold for unitarity / Hermiticity checks on inputs.
pub const VALIDATION_TOL: f64 = 1e-10;
pub const STATE_TOL: f64 = 1e-10;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// One of the two register ions. Serialized as `1` or `2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Ion {
    One,
    Two,
}

impl Ion {
    pub const BOTH: [Ion; 2] = [Ion::One, Ion::Two];

    pub fn from_number(n: usize) -> Result<Self> {
        match n {
            1 => Ok(Ion::One),
            2 => Ok(Ion::Two),
            other => Err(Error::InvalidIon(other)),
        }
    }

    /// 1-based label.
    pub fn number(self) -> usize {
        self.index() + 1
    }

    /// 0-based index into per-ion arrays.
    pub fn index(self) -> usize {
        match self {
            Ion::One => 0,
            Ion::Two => 1,
        }
    }

    pub fn other(self) -> Ion {
        match self {
            Ion::One => Ion::Two,
            Ion::Two => Ion::One,
        }
    }
}

impl TryFrom<u8> for Ion {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        Ion::from_number(v as usize)
    }
}

impl From<Ion> for u8 {
    fn from(ion: Ion) -> u8 {
        ion.number() as u8
    }
}

impl fmt::Display for Ion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.number())
    }
}

pub fn identity2() -> Mat2 {
    Mat2::identity()
}

pub fn identity4() -> Mat4 {
    Mat4::identity()
}

pub fn sigma_x() -> Mat2 {
    Mat2::new(ZERO, ONE, ONE, ZERO)
}

pub fn sigma_y() -> Mat2 {
    Mat2::new(ZERO, -I, I, ZERO)
}

pub fn sigma_z() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, -ONE)
}

/// Kronecker product a ⊗ b, `a` acting on ion 1.
pub fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    Mat4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

fn max_abs_deviation<I: Iterator<Item = C64>>(entries: I) -> f64 {
    entries.map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn unitarity_deviation2(u: &Mat2) -> f64 {
    max_abs_deviation((u.adjoint() * u - identity2()).iter().copied())
}

pub fn unitarity_deviation4(u: &Mat4) -> f64 {
    max_abs_deviation((u.adjoint() * u - identity4()).iter().copied())
}

fn check_unitary2(u: &Mat2) -> Result<()> {
    let deviation = unitarity_deviation2(u);
    if deviation > VALIDATION_TOL || deviation.is_nan() {
        return Err(Error::NotUnitary { deviation });
    }
    Ok(())
}

pub(crate) fn check_unitary4(u: &Mat4) -> Result<()> {
    let deviation = unitarity_deviation4(u);
    if deviation > VALIDATION_TOL || deviation.is_nan() {
        return Err(Error::NotUnitary { deviation });
    }
    Ok(())
}

/// Lift a single-ion operator to the register: U⊗I for ion 1, I⊗U for ion 2.
pub fn embed_single(u: &Mat2, ion: Ion) -> Result<Mat4> {
    check_unitary2(u)?;
    Ok(embed_unchecked(u, ion))
}

pub(crate) fn embed_unchecked(u: &Mat2, ion: Ion) -> Mat4 {
    match ion {
        Ion::One => kron(u, &identity2()),
        Ion::Two => kron(&identity2(), u),
    }
}

/// exp(−i·scale·H) for Hermitian `H` of any dimension, via eigendecomposition.
pub fn exp_hermitian(h: &DMatrix<C64>, scale: f64) -> Result<DMatrix<C64>> {
    if h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            rows: h.nrows(),
            cols: h.ncols(),
        });
    }
    let deviation = max_abs_deviation((h - h.adjoint()).iter().copied());
    if deviation > VALIDATION_TOL || deviation.is_nan() {
        return Err(Error::NotHermitian { deviation });
    }
    let eig = h.clone().symmetric_eigen();
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|lambda| C64::from_polar(1.0, -scale * lambda)));
    let v = &eig.eigenvectors;
    Ok(v * phases * v.adjoint())
}

pub fn exp_hermitian2(h: &Mat2, scale: f64) -> Result<Mat2> {
    let d = exp_hermitian(&DMatrix::from_iterator(2, 2, h.iter().copied()), scale)?;
    Ok(Mat2::from_iterator(d.iter().copied()))
}

pub fn exp_hermitian4(h: &Mat4, scale: f64) -> Result<Mat4> {
    let d = exp_hermitian(&DMatrix::from_iterator(4, 4, h.iter().copied()), scale)?;
    Ok(Mat4::from_iterator(d.iter().copied()))
}

fn phase_aligned_distance<'a, I>(a: I, b: I) -> f64
where
    I: Iterator<Item = &'a C64> + Clone,
{
    // Align on the overlap ⟨a,b⟩ then take the largest entrywise gap.
    let overlap: C64 = a.clone().zip(b.clone()).map(|(x, y)| x.conj() * y).sum();
    if overlap.norm() < 1e-300 {
        return f64::INFINITY;
    }
    let phase = overlap / overlap.norm();
    a.zip(b).map(|(x, y)| (x * phase - y).norm()).fold(0.0, f64::max)
}

/// Largest entrywise difference between `a` and `b` after removing the best global phase.
pub fn phase_distance4(a: &Mat4, b: &Mat4) -> f64 {
    phase_aligned_distance(a.iter(), b.iter())
}

pub fn phase_distance2(a: &Mat2, b: &Mat2) -> f64 {
    phase_aligned_distance(a.iter(), b.iter())
}

pub fn equal_up_to_phase4(a: &Mat4, b: &Mat4, tol: f64) -> bool {
    phase_distance4(a, b) <= tol
}

pub fn equal_up_to_phase2(a: &Mat2, b: &Mat2, tol: f64) -> bool {
    phase_distance2(a, b) <= tol
}

pub fn max_entry_distance4(a: &Mat4, b: &Mat4) -> f64 {
    max_abs_deviation((a - b).iter().copied())
}

pub fn max_entry_distance2(a: &Mat2, b: &Mat2) -> f64 {
    max_abs_deviation((a - b).iter().copied())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    fn from_density(rho: &Mat2) -> Self {
        let off = rho[(0, 1)];
        BlochVector {
            x: 2.0 * off.re,
            y: -2.0 * off.im,
            z: (rho[(0, 0)] - rho[(1, 1)]).re,
        }
    }
}

/// State of the two-ion register.
#[derive(Debug, Clone, PartialEq)]
pub enum TwoQubitState {
    Pure(Ket4),
    Mixed(Mat4),
}

impl TwoQubitState {
    /// |↑↑⟩, both ions bright.
    pub fn up_up() -> Self {
        TwoQubitState::Pure(Ket4::new(ONE, ZERO, ZERO, ZERO))
    }

    pub fn basis(index: usize) -> Self {
        let mut ket = Ket4::zeros();
        ket[index] = ONE;
        TwoQubitState::Pure(ket)
    }

    pub fn pure(amplitudes: Ket4) -> Result<Self> {
        let s = TwoQubitState::Pure(amplitudes);
        s.validate()?;
        Ok(s)
    }

    pub fn mixed(rho: Mat4) -> Result<Self> {
        let s = TwoQubitState::Mixed(rho);
        s.validate()?;
        Ok(s)
    }

    pub fn maximally_mixed() -> Self {
        TwoQubitState::Mixed(identity4() * C64::new(0.25, 0.0))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TwoQubitState::Pure(ket) => {
                let norm = ket.norm();
                if !norm.is_finite() || (norm - 1.0).abs() > STATE_TOL {
                    return Err(Error::InvalidState(format!("norm {norm} differs from 1")));
                }
            }
            TwoQubitState::Mixed(rho) => {
                let trace = rho.trace();
                if !trace.re.is_finite() || (trace - ONE).norm() > STATE_TOL {
                    return Err(Error::InvalidState(format!("trace {trace} differs from 1")));
                }
                let herm = max_abs_deviation((rho - rho.adjoint()).iter().copied());
                if herm > STATE_TOL {
                    return Err(Error::InvalidState(format!("density matrix not Hermitian ({herm:.3e})")));
                }
                let min_eig = rho
                    .symmetric_eigenvalues()
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min);
                if min_eig < -STATE_TOL {
                    return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:.3e}")));
                }
            }
        }
        Ok(())
    }

    pub fn density(&self) -> Mat4 {
        match self {
            TwoQubitState::Pure(ket) => ket * ket.adjoint(),
            TwoQubitState::Mixed(rho) => *rho,
        }
    }

    pub fn to_mixed(&self) -> Self {
        TwoQubitState::Mixed(self.density())
    }

    pub fn is_pure_repr(&self) -> bool {
        matches!(self, TwoQubitState::Pure(_))
    }

    /// U|ψ⟩ or UρU†.
    pub fn apply(&self, u: &Mat4) -> Result<Self> {
        check_unitary4(u)?;
        Ok(self.apply_unchecked(u))
    }

    pub(crate) fn apply_unchecked(&self, u: &Mat4) -> Self {
        match self {
            TwoQubitState::Pure(ket) => TwoQubitState::Pure(u * ket),
            TwoQubitState::Mixed(rho) => TwoQubitState::Mixed(u * rho * u.adjoint()),
        }
    }

    /// ρ → (1−p)ρ + p·I/4.
    pub fn depolarize(&self, p: f64) -> Self {
        if p == 0.0 {
            return self.clone();
        }
        let rho = self.density();
        TwoQubitState::Mixed(rho * C64::new(1.0 - p, 0.0) + identity4() * C64::new(p / 4.0, 0.0))
    }

    /// ρ → (1−p)ρ + p·ZρZ with Z acting on `ion`.
    pub fn dephase(&self, ion: Ion, p: f64) -> Self {
        if p == 0.0 {
            return self.clone();
        }
        let z = embed_unchecked(&sigma_z(), ion);
        let rho = self.density();
        TwoQubitState::Mixed(rho * C64::new(1.0 - p, 0.0) + (z * rho * z) * C64::new(p, 0.0))
    }

    /// (p↑↑, p↑↓, p↓↑, p↓↓).
    pub fn populations(&self) -> [f64; 4] {
        let mut p = [0.0; 4];
        for (i, pi) in p.iter_mut().enumerate() {
            *pi = match self {
                TwoQubitState::Pure(ket) => ket[i].norm_sqr(),
                TwoQubitState::Mixed(rho) => rho[(i, i)].re.max(0.0),
            };
        }
        p
    }

    pub fn purity(&self) -> f64 {
        match self {
            TwoQubitState::Pure(ket) => ket.norm_squared().powi(2),
            TwoQubitState::Mixed(rho) => (rho * rho).trace().re,
        }
    }

    /// ⟨ψ|ρ|ψ⟩ against a pure target.
    pub fn fidelity_with(&self, target: &Ket4) -> f64 {
        match self {
            TwoQubitState::Pure(ket) => target.dotc(ket).norm_sqr(),
            TwoQubitState::Mixed(rho) => (target.adjoint() * rho * target)[(0, 0)].re,
        }
    }

    /// Single-ion density matrix after tracing out the other ion.
    pub fn reduced_density(&self, ion: Ion) -> Mat2 {
        let rho = self.density();
        Mat2::from_fn(|a, b| {
            (0..2)
                .map(|c| match ion {
                    Ion::One => rho[(2 * a + c, 2 * b + c)],
                    Ion::Two => rho[(2 * c + a, 2 * c + b)],
                })
                .sum()
        })
    }

    pub fn reduced_bloch(&self, ion: Ion) -> BlochVector {
        BlochVector::from_density(&self.reduced_density(ion))
    }

    pub fn marginal_purity(&self, ion: Ion) -> f64 {
        let r = self.reduced_bloch(ion).norm();
        0.5 * (1.0 + r * r)
    }

    /// von Neumann entropy (nats) of the single-ion marginal.
    pub fn marginal_entropy(&self, ion: Ion) -> f64 {
        let r = self.reduced_bloch(ion).norm().min(1.0);
        [(1.0 + r) / 2.0, (1.0 - r) / 2.0]
            .iter()
            .filter(|&&l| l > 0.0)
            .map(|&l| -l * l.ln())
            .sum()
    }
}
