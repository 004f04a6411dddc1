//! Single-input single-output state-space systems.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `ẋ = Ax + bu`, `y = cx` with a scalar input and output.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    pub name: String,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    /// Output map, stored as a column but used as a row vector.
    pub c: DVector<f64>,
}

/// Polytopic LTV family `ẋ = (A + λ(t)Δ)x + bu` with `λ(t) ∈ [-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertainSystem {
    pub name: String,
    pub a: DMatrix<f64>,
    pub delta: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
}

fn check_finite(what: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

fn check_shapes(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            what: "A".into(),
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let n = a.nrows();
    if n == 0 {
        return Err(Error::mismatch("A", "at least one state", 0));
    }
    if b.len() != n {
        return Err(Error::mismatch("b", n, b.len()));
    }
    if c.len() != n {
        return Err(Error::mismatch("c", n, c.len()));
    }
    check_finite("A", a.as_slice())?;
    check_finite("b", b.as_slice())?;
    check_finite("c", c.as_slice())
}

impl LtiSystem {
    pub fn new(name: impl Into<String>, a: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>) -> Result<Self> {
        check_shapes(&a, &b, &c)?;
        Ok(LtiSystem {
            name: name.into(),
            a,
            b,
            c,
        })
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// The same system viewed as an interval family with zero uncertainty.
    pub fn to_uncertain(&self) -> UncertainSystem {
        let n = self.order();
        UncertainSystem {
            name: self.name.clone(),
            a: self.a.clone(),
            delta: DMatrix::zeros(n, n),
            b: self.b.clone(),
            c: self.c.clone(),
        }
    }
}

impl UncertainSystem {
    pub fn new(
        name: impl Into<String>,
        a: DMatrix<f64>,
        delta: DMatrix<f64>,
        b: DVector<f64>,
        c: DVector<f64>,
    ) -> Result<Self> {
        check_shapes(&a, &b, &c)?;
        if delta.shape() != a.shape() {
            return Err(Error::mismatch(
                "Delta",
                format!("{}x{}", a.nrows(), a.ncols()),
                format!("{}x{}", delta.nrows(), delta.ncols()),
            ));
        }
        check_finite("Delta", delta.as_slice())?;
        Ok(UncertainSystem {
            name: name.into(),
            a,
            delta,
            b,
            c,
        })
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// The nominal member `λ ≡ 0`.
    pub fn nominal(&self) -> LtiSystem {
        LtiSystem {
            name: self.name.clone(),
            a: self.a.clone(),
            b: self.b.clone(),
            c: self.c.clone(),
        }
    }

    /// The frozen member `A + λΔ`.
    pub fn frozen(&self, lambda: f64) -> LtiSystem {
        LtiSystem {
            name: format!("{}[lambda={lambda}]", self.name),
            a: &self.a + &self.delta * lambda,
            b: self.b.clone(),
            c: self.c.clone(),
        }
    }

    pub fn has_uncertainty(&self) -> bool {
        self.delta.iter().any(|&v| v != 0.0)
    }
}
