//! Concrete magnitude bounds and envelopes derived from certificates.
//!
//! With `𝒫` certifying level `i`, the invariant sublevel set through `⊗ⁱb`
//! touches the hyperplane `𝐜ᵢξ = const` at
//! `h̄ = (𝐜ᵢ𝒫⁻¹𝐜ᵢᵀ)^{1/(2i)} · (𝐛ᵢᵀ𝒫𝐛ᵢ)^{1/(2i)}`.
//! Both factors are evaluated in log space so large levels do not overflow.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::certificates::{checked_inverse, lifted_vertices, DifferenceSystem, LyapunovCertificate};
use crate::error::{Error, Result};
use crate::export::write_json;
use crate::kron::{kron_power, lift_vector, HierarchyLevel, DEFAULT_DIMENSION_CAP};
use crate::linalg::{cholesky_quadratic_inverse, quadratic_form};
use crate::sim::{expm, impulse_at};
use crate::system::{LtiSystem, UncertainSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeKind {
    ConstantImpulse,
    Step,
    Exponential,
    Difference,
    Tail,
}

impl EnvelopeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EnvelopeKind::ConstantImpulse => "constant_impulse",
            EnvelopeKind::Step => "step",
            EnvelopeKind::Exponential => "exponential",
            EnvelopeKind::Difference => "difference",
            EnvelopeKind::Tail => "tail",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvelopeCenter {
    Zero,
    Constant(f64),
    /// `ce^{At}b` of the nominal system.
    Nominal(LtiSystem),
}

/// `|y(t) − center(t)| ≤ e^{−α(t − t_start)}·magnitude` for `t ≥ t_start`.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub kind: EnvelopeKind,
    pub magnitude: f64,
    pub alpha: f64,
    pub t_start: f64,
    pub center: EnvelopeCenter,
    pub certificate_ref: String,
}

impl Envelope {
    pub fn radius_at(&self, t: f64) -> f64 {
        if self.alpha == 0.0 {
            self.magnitude
        } else {
            self.magnitude * (-self.alpha * (t - self.t_start)).exp()
        }
    }

    pub fn center_values(&self, times: &[f64]) -> Vec<f64> {
        match &self.center {
            EnvelopeCenter::Zero => vec![0.0; times.len()],
            EnvelopeCenter::Constant(c) => vec![*c; times.len()],
            EnvelopeCenter::Nominal(sys) => impulse_at(sys, times, "nominal").values,
        }
    }

    /// Deterministic JSON with 17 significant digits.
    pub fn write_json<W: Write>(&self, w: W) -> std::io::Result<()> {
        #[derive(Serialize)]
        struct Center<'a> {
            #[serde(rename = "type")]
            kind: &'a str,
            data: serde_json::Value,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            kind: EnvelopeKind,
            magnitude: f64,
            alpha: f64,
            t_start: f64,
            center: Center<'a>,
            certificate_ref: &'a str,
        }
        let center = match &self.center {
            EnvelopeCenter::Zero => Center {
                kind: "zero",
                data: serde_json::Value::Null,
            },
            EnvelopeCenter::Constant(c) => Center {
                kind: "constant",
                data: serde_json::json!(c),
            },
            EnvelopeCenter::Nominal(sys) => Center {
                kind: "nominal_impulse",
                data: serde_json::json!({
                    "A": rows(&sys.a),
                    "b": sys.b.as_slice(),
                    "c": sys.c.as_slice(),
                }),
            },
        };
        write_json(
            w,
            &Doc {
                kind: self.kind,
                magnitude: self.magnitude,
                alpha: self.alpha,
                t_start: self.t_start,
                center,
                certificate_ref: &self.certificate_ref,
            },
        )
    }
}

pub(crate) fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// `(𝐜𝒫⁻¹𝐜ᵀ)^{1/(2i)} (𝐛ᵀ𝒫𝐛)^{1/(2i)}` for an arbitrary pair of lifted vectors.
pub fn lifted_bound(p: &DMatrix<f64>, b_lift: &DVector<f64>, c_lift: &DVector<f64>, level: usize) -> Result<f64> {
    if level < 1 {
        return Err(Error::InvalidLevel(level));
    }
    let d = p.nrows();
    if b_lift.len() != d {
        return Err(Error::mismatch("lifted b", d, b_lift.len()));
    }
    if c_lift.len() != d {
        return Err(Error::mismatch("lifted c", d, c_lift.len()));
    }
    let cpc = cholesky_quadratic_inverse(p, c_lift)
        .ok_or_else(|| Error::NumericalFailure("certificate matrix is not positive definite".into()))?;
    let bpb = quadratic_form(p, b_lift);
    if cpc == 0.0 || bpb <= 0.0 {
        return Ok(0.0);
    }
    let two_i = 2.0 * level as f64;
    Ok(((cpc.ln() + bpb.ln()) / two_i).exp())
}

fn check_level(cert: &LyapunovCertificate, level: &HierarchyLevel) -> Result<()> {
    if cert.level != level.level {
        return Err(Error::LevelMismatch {
            certificate: cert.level,
            level: level.level,
        });
    }
    if cert.dim() != level.dim {
        return Err(Error::mismatch("certificate dimension", level.dim, cert.dim()));
    }
    Ok(())
}

/// Global bound `|h(t)| ≤ h̄`. Certificates for a positive shift also qualify.
pub fn impulse_bound(cert: &LyapunovCertificate, level: &HierarchyLevel) -> Result<Envelope> {
    check_level(cert, level)?;
    if cert.alpha < 0.0 {
        return Err(Error::VertexMismatch(format!(
            "a certificate for alpha = {} only supports a growing envelope",
            cert.alpha
        )));
    }
    Ok(Envelope {
        kind: EnvelopeKind::ConstantImpulse,
        magnitude: lifted_bound(&cert.p_mat, &level.b_vec, &level.c_vec, level.level)?,
        alpha: 0.0,
        t_start: 0.0,
        center: EnvelopeCenter::Zero,
        certificate_ref: cert.label(),
    })
}

/// `|s(t) + cA⁻¹b| ≤ s̄` with `𝐀ᵢ𝐛ᵢ` in place of `𝐛ᵢ`.
pub fn step_bound(cert: &LyapunovCertificate, level: &HierarchyLevel, sys: &LtiSystem) -> Result<Envelope> {
    check_level(cert, level)?;
    let a_inv = checked_inverse(&sys.a)?;
    let shifted = kron_power(&a_inv, level.level)? * &level.b_vec;
    let center = -sys.c.dot(&(&a_inv * &sys.b));
    Ok(Envelope {
        kind: EnvelopeKind::Step,
        magnitude: lifted_bound(&cert.p_mat, &shifted, &level.c_vec, level.level)?,
        alpha: 0.0,
        t_start: 0.0,
        center: EnvelopeCenter::Constant(center),
        certificate_ref: cert.label(),
    })
}

fn check_vertices(cert: &LyapunovCertificate, expected: &[DMatrix<f64>]) -> Result<()> {
    let matches = cert.vertices.len() == expected.len()
        && cert.vertices.iter().zip(expected).all(|(a, b)| {
            a.shape() == b.shape() && (a - b).amax() <= 1e-12 * b.amax().max(1.0)
        });
    if matches {
        Ok(())
    } else {
        Err(Error::VertexMismatch(format!(
            "certificate does not certify the shifted vertices for alpha = {}",
            cert.alpha
        )))
    }
}

/// `|h(t)| ≤ e^{−αt}h̄` for every admissible `λ(t)`.
pub fn exponential_impulse_envelope(
    cert: &LyapunovCertificate,
    level: &HierarchyLevel,
    sys: &UncertainSystem,
) -> Result<Envelope> {
    check_level(cert, level)?;
    check_vertices(cert, &lifted_vertices(sys, level.level, cert.alpha, false, DEFAULT_DIMENSION_CAP.max(level.dim))?)?;
    Ok(Envelope {
        kind: EnvelopeKind::Exponential,
        magnitude: lifted_bound(&cert.p_mat, &level.b_vec, &level.c_vec, level.level)?,
        alpha: cert.alpha,
        t_start: 0.0,
        center: EnvelopeCenter::Zero,
        certificate_ref: cert.label(),
    })
}

/// `|h(t) − ce^{At}b| ≤ e^{−αt}h̄` from a certificate of the augmented vertices.
pub fn difference_envelope(
    cert: &LyapunovCertificate,
    diff: &DifferenceSystem,
    sys: &UncertainSystem,
) -> Result<Envelope> {
    if cert.level != diff.level {
        return Err(Error::LevelMismatch {
            certificate: cert.level,
            level: diff.level,
        });
    }
    if cert.dim() != diff.dim() {
        return Err(Error::mismatch("certificate dimension", diff.dim(), cert.dim()));
    }
    check_vertices(cert, &lifted_vertices(sys, diff.level, cert.alpha, true, DEFAULT_DIMENSION_CAP.max(diff.dim()))?)?;
    Ok(Envelope {
        kind: EnvelopeKind::Difference,
        magnitude: lifted_bound(&cert.p_mat, &diff.b_bar, &diff.c_bar, diff.level)?,
        alpha: cert.alpha,
        t_start: 0.0,
        center: EnvelopeCenter::Nominal(sys.nominal()),
        certificate_ref: cert.label(),
    })
}

/// Bound on `y(t)` for `t ≥ t0` restarted from the state `x(t0)`.
pub fn tail_bound(
    cert: &LyapunovCertificate,
    level: &HierarchyLevel,
    state_at_t0: &DVector<f64>,
    t0: f64,
) -> Result<Envelope> {
    check_level(cert, level)?;
    if !t0.is_finite() || t0 < 0.0 {
        return Err(Error::InvalidArgument(format!("restart time must be finite and nonnegative, got {t0}")));
    }
    let lifted = lift_vector(state_at_t0, level.level)?;
    Ok(Envelope {
        kind: EnvelopeKind::Tail,
        magnitude: lifted_bound(&cert.p_mat, &lifted, &level.c_vec, level.level)?,
        alpha: cert.alpha,
        t_start: t0,
        center: EnvelopeCenter::Zero,
        certificate_ref: cert.label(),
    })
}

/// Tail of the step response from `t0`, using the deviation `x(t0) + A⁻¹b` from equilibrium.
pub fn step_tail_bound(
    cert: &LyapunovCertificate,
    level: &HierarchyLevel,
    sys: &LtiSystem,
    t0: f64,
) -> Result<Envelope> {
    let a_inv = checked_inverse(&sys.a)?;
    let v = &a_inv * &sys.b;
    // x(t0) − x_eq = e^{At0}A⁻¹b
    let deviation = expm(&sys.a, t0) * &v;
    let mut env = tail_bound(cert, level, &deviation, t0)?;
    env.center = EnvelopeCenter::Constant(-sys.c.dot(&v));
    Ok(env)
}
