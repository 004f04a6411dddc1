//! Kronecker powers, lifted vectors and the hierarchy of lifted generators.
//!
//! If `x(t)` solves `ẋ = Ax`, then `⊗ⁱx(t)` solves `ξ̇ = 𝒜ᵢξ` where
//! `𝒜₁ = A` and `𝒜ᵢ = Iₙ ⊗ 𝒜ᵢ₋₁ + A ⊗ I_{nⁱ⁻¹}`. A quadratic Lyapunov
//! function of the lifted system is a degree-`2i` homogeneous polynomial
//! Lyapunov function of the original one.
//!
//! Everything lives in the full `nⁱ`-dimensional Kronecker space with dense
//! storage.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::system::LtiSystem;

/// Largest lifted dimension `nⁱ` accepted by default.
pub const DEFAULT_DIMENSION_CAP: usize = 4096;

/// `nⁱ`, rejected when it overflows or exceeds `cap`.
pub fn lifted_dim(n: usize, level: usize, cap: usize) -> Result<usize> {
    if level < 1 {
        return Err(Error::InvalidLevel(level));
    }
    match n.checked_pow(level as u32) {
        Some(dim) if dim <= cap => Ok(dim),
        Some(dim) => Err(Error::DimensionCap { dim, cap }),
        None => Err(Error::DimensionCap { dim: usize::MAX, cap }),
    }
}

/// Kronecker product with block `(r, s)` equal to `a[r, s]·b`.
pub fn kron_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// `⊗¹A = A`, `⊗ⁱA = A ⊗ (⊗ⁱ⁻¹A)`.
pub fn kron_power(a: &DMatrix<f64>, level: usize) -> Result<DMatrix<f64>> {
    if level < 1 {
        return Err(Error::InvalidLevel(level));
    }
    let mut acc = a.clone();
    for _ in 1..level {
        acc = a.kronecker(&acc);
    }
    Ok(acc)
}

/// `⊗ⁱx` for a column vector.
pub fn lift_vector(x: &DVector<f64>, level: usize) -> Result<DVector<f64>> {
    if level < 1 {
        return Err(Error::InvalidLevel(level));
    }
    let mut acc = x.clone();
    for _ in 1..level {
        acc = x.kronecker(&acc);
    }
    Ok(acc)
}

fn ensure_square(a: &DMatrix<f64>) -> Result<()> {
    if a.is_square() {
        Ok(())
    } else {
        Err(Error::NotSquare {
            what: "A".into(),
            rows: a.nrows(),
            cols: a.ncols(),
        })
    }
}

/// One step of the recursion: `Iₙ ⊗ prev + A ⊗ I_{dim(prev)}`.
fn next_generator(a: &DMatrix<f64>, prev: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let inner = prev.nrows();
    let dim = n * inner;
    let mut out = DMatrix::zeros(dim, dim);
    for p in 0..n {
        // diagonal blocks carry prev
        out.view_mut((p * inner, p * inner), (inner, inner)).copy_from(prev);
        for q in 0..n {
            let apq = a[(p, q)];
            if apq != 0.0 {
                for r in 0..inner {
                    out[(p * inner + r, q * inner + r)] += apq;
                }
            }
        }
    }
    out
}

/// Generators `𝒜₁ … 𝒜ᵢ`, assembled bottom-up so each level reuses the previous one.
pub fn hierarchy_ladder(a: &DMatrix<f64>, level: usize, cap: usize) -> Result<Vec<DMatrix<f64>>> {
    ensure_square(a)?;
    lifted_dim(a.nrows(), level, cap)?;
    let mut ladder = Vec::with_capacity(level);
    ladder.push(a.clone());
    for _ in 1..level {
        let next = next_generator(a, ladder.last().unwrap());
        ladder.push(next);
    }
    Ok(ladder)
}

/// The level-`i` generator `𝒜ᵢ`. Linear in the entries of `a`.
pub fn hierarchy_matrix(a: &DMatrix<f64>, level: usize) -> Result<DMatrix<f64>> {
    hierarchy_matrix_capped(a, level, DEFAULT_DIMENSION_CAP)
}

pub fn hierarchy_matrix_capped(a: &DMatrix<f64>, level: usize, cap: usize) -> Result<DMatrix<f64>> {
    let mut ladder = hierarchy_ladder(a, level, cap)?;
    Ok(ladder.pop().unwrap())
}

/// Level `i` of the hierarchy together with the lifted input and output maps.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyLevel {
    pub level: usize,
    pub dim: usize,
    /// `𝒜ᵢ`
    pub a_mat: DMatrix<f64>,
    /// `𝐛ᵢ = ⊗ⁱb`
    pub b_vec: DVector<f64>,
    /// `𝐜ᵢ = ⊗ⁱc`, used as a row vector
    pub c_vec: DVector<f64>,
}

impl HierarchyLevel {
    /// Bundles an already-lifted generator with lifted input/output maps.
    pub fn from_parts(
        level: usize,
        a_mat: DMatrix<f64>,
        b_vec: DVector<f64>,
        c_vec: DVector<f64>,
    ) -> Result<Self> {
        ensure_square(&a_mat)?;
        let dim = a_mat.nrows();
        if b_vec.len() != dim {
            return Err(Error::mismatch("lifted b", dim, b_vec.len()));
        }
        if c_vec.len() != dim {
            return Err(Error::mismatch("lifted c", dim, c_vec.len()));
        }
        Ok(HierarchyLevel {
            level,
            dim,
            a_mat,
            b_vec,
            c_vec,
        })
    }
}

pub fn build_level(sys: &LtiSystem, level: usize) -> Result<HierarchyLevel> {
    build_level_capped(sys, level, DEFAULT_DIMENSION_CAP)
}

pub fn build_level_capped(sys: &LtiSystem, level: usize, cap: usize) -> Result<HierarchyLevel> {
    let a_mat = hierarchy_matrix_capped(&sys.a, level, cap)?;
    let b_vec = lift_vector(&sys.b, level)?;
    let c_vec = lift_vector(&sys.c, level)?;
    HierarchyLevel::from_parts(level, a_mat, b_vec, c_vec)
}
