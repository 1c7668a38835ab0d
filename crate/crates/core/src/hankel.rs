//! Hankel matrices of Fourier data, the Gaussian modulation matrix `E(u)`,
//! and the dense singular-value kernel.
//!
//! For data on `q = -K..=K`, the `(K+1)×(K+1)` Hankel matrix has entry
//! `(i, j) = Y(ω_{-K+i+j})`. Multiplying entrywise by
//! `E(u)_{ij} = exp(u ω_{-K+i+j}²)` cancels the Gaussian envelope when `u`
//! equals the modulation parameter `v`, leaving a matrix of rank `k`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::{FourierData, FourierGrid};

/// Largest admissible `u Ω²`. Beyond this `exp(u Ω²)` is within a few orders
/// of magnitude of `f64::MAX` and products with data can overflow.
pub const MODULATION_EXPONENT_LIMIT: f64 = 300.0;

#[derive(Debug, Clone, PartialEq)]
pub struct HankelMatrix(DMatrix<Complex64>);

impl HankelMatrix {
    /// Builds from `2K+1` values ordered `q = -K..=K`.
    pub fn from_values(values: &[Complex64]) -> Result<Self> {
        if values.len() < 3 || values.len() % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "Hankel input needs an odd length >= 3, got {}",
                values.len()
            )));
        }
        let size = values.len() / 2 + 1;
        Ok(Self(DMatrix::from_fn(size, size, |i, j| values[i + j])))
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    /// Entrywise product with a modulation matrix of the same size.
    pub fn modulate(&self, e: &ModulationMatrix) -> DMatrix<Complex64> {
        assert_eq!(self.size(), e.size(), "modulation size mismatch");
        self.0.zip_map(&e.0, |y, m| y * m)
    }
}

/// Real Hankel matrix with entries `exp(u ω_{-K+i+j}²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationMatrix(DMatrix<f64>);

impl ModulationMatrix {
    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

pub fn hankel(data: &FourierData) -> Result<HankelMatrix> {
    if data.values().len() != data.grid().len() {
        return Err(Error::LengthMismatch {
            expected: data.grid().len(),
            got: data.values().len(),
        });
    }
    HankelMatrix::from_values(data.values())
}

/// Rejects `u` whose largest modulation factor `exp(|u| Ω²)` would exceed
/// [`MODULATION_EXPONENT_LIMIT`].
pub fn check_modulation_range(grid: &FourierGrid, u: f64) -> Result<()> {
    let exponent = u.abs() * grid.cutoff() * grid.cutoff();
    if !u.is_finite() || exponent > MODULATION_EXPONENT_LIMIT {
        return Err(Error::ModulationOverflow {
            u,
            cutoff: grid.cutoff(),
            exponent,
            limit: MODULATION_EXPONENT_LIMIT,
        });
    }
    Ok(())
}

pub fn modulation(grid: &FourierGrid, u: f64) -> Result<ModulationMatrix> {
    check_modulation_range(grid, u)?;
    let w = grid.frequencies();
    let size = grid.half_count() + 1;
    Ok(ModulationMatrix(DMatrix::from_fn(size, size, |i, j| {
        (u * w[i + j] * w[i + j]).exp()
    })))
}

/// `E(u) ∘ Hankel(data)`.
pub fn modulated_hankel(data: &FourierData, u: f64) -> Result<DMatrix<Complex64>> {
    let h = hankel(data)?;
    let e = modulation(data.grid(), u)?;
    Ok(h.modulate(&e))
}

/// Thin SVD with singular values sorted descending and left singular
/// vectors permuted to match.
pub struct SortedSvd {
    pub singular_values: Vec<f64>,
    pub left: DMatrix<Complex64>,
}

fn check_finite(matrix: &DMatrix<Complex64>) -> Result<()> {
    if matrix.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

fn to_faer(matrix: &DMatrix<Complex64>) -> faer::Mat<Complex64> {
    faer::Mat::from_fn(matrix.nrows(), matrix.ncols(), |i, j| matrix[(i, j)])
}

pub fn sorted_svd(matrix: &DMatrix<Complex64>) -> Result<SortedSvd> {
    check_finite(matrix)?;
    let svd = to_faer(matrix).thin_svd().map_err(|_| Error::SvdNoConvergence)?;
    let u = svd.U();
    let s = svd.S().column_vector();
    let singular_values = (0..s.nrows()).map(|i| s[i].re.max(0.0)).collect();
    let left = DMatrix::from_fn(u.nrows(), u.ncols(), |r, c| u[(r, c)]);
    Ok(SortedSvd {
        singular_values,
        left,
    })
}

/// All singular values, descending.
pub fn singular_values(matrix: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    check_finite(matrix)?;
    let mut values: Vec<f64> = to_faer(matrix)
        .singular_values()
        .map_err(|_| Error::SvdNoConvergence)?
        .into_iter()
        .map(|s| s.max(0.0))
        .collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Singular values of `E(u) ∘ Hankel(data)`, descending.
pub fn modulated_singular_values(data: &FourierData, u: f64) -> Result<Vec<f64>> {
    singular_values(&modulated_hankel(data, u)?)
}

/// Orthonormal basis of the left singular subspace belonging to singular
/// values `k+1..=K+1` (the noise subspace).
pub fn music_subspace(matrix: &DMatrix<Complex64>, order: usize) -> Result<DMatrix<Complex64>> {
    let size = matrix.nrows();
    if order == 0 || order >= size {
        return Err(Error::OrderOutOfRange { order, size });
    }
    let svd = sorted_svd(matrix)?;
    Ok(svd.left.columns(order, size - order).into_owned())
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(matrix: &DMatrix<Complex64>) -> Result<f64> {
    Ok(singular_values(matrix)?.first().copied().unwrap_or(0.0))
}
