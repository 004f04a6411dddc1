//! Lyapunov certificate programs and their solution.
//!
//! Every program searches a symmetric `Q ≻ 0` on the lifted space with
//! `MᵀQ + QM ⪯ −ε_stab·I` for each vertex matrix `M`. The impulse and step
//! programs additionally normalize `vᵀQv ≤ 1` and minimize `wQ⁻¹wᵀ` through
//! the epigraph `[[t, w], [wᵀ, Q]] ⪰ 0`.
//!
//! Returned certificates are re-validated by eigensolves that do not use any
//! solver state.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kron::{hierarchy_matrix_capped, kron_power, lift_vector, HierarchyLevel, DEFAULT_DIMENSION_CAP};
use crate::linalg::{cholesky_quadratic_inverse, singular_values, spectral_abscissa, spectral_norm, sym_eigenvalues};
use crate::sdp::{self, Block, Program, Settings};
use crate::system::{LtiSystem, UncertainSystem};

/// Environment variable overriding the interior-point iteration cap.
pub const MAX_ITERS_ENV: &str = "LYAPBOUND_MAX_ITERS";

/// `vᵀQv ≤ bound`
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub v: DVector<f64>,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    Feasibility,
    /// Minimize `wQ⁻¹wᵀ` via the Schur-complement epigraph.
    Epigraph { w: DVector<f64> },
}

/// A fully assembled certificate program. Not mutated after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub level: usize,
    pub alpha: f64,
    pub dim: usize,
    pub objective: Objective,
    pub linear_constraints: Vec<LinearConstraint>,
    /// Each `M` imposes `MᵀQ + QM ⪯ −eps_stab·I`.
    pub vertices: Vec<DMatrix<f64>>,
    pub eps_stab: f64,
    /// Absolute floor `Q ⪰ eps_pd·I`.
    pub eps_pd: f64,
    /// `tr Q̂ ≤ trace_cap·dim` in the normalized variable `Q̂ = ‖v‖²Q`.
    pub trace_cap: f64,
}

/// Knobs shared by the solve and bisection routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub max_iter: usize,
    pub tol_gap: f64,
    pub tol_feas: f64,
    /// Relative PD floor; `eps_pd = pd_floor / ‖v‖²` for the normalizing vector `v`.
    pub pd_floor: f64,
    /// Non-strict by default.
    pub eps_stab: f64,
    pub trace_cap: f64,
    pub dimension_cap: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        let max_iter = std::env::var(MAX_ITERS_ENV)
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(100);
        SolveOptions {
            max_iter,
            tol_gap: 1e-11,
            tol_feas: 1e-10,
            pd_floor: 1e-8,
            eps_stab: 0.0,
            trace_cap: 1e4,
            dimension_cap: DEFAULT_DIMENSION_CAP,
        }
    }
}

impl SolveOptions {
    fn settings(&self) -> Settings {
        Settings {
            max_iter: self.max_iter,
            tol_gap: self.tol_gap,
            tol_feas: self.tol_feas,
            ..Settings::default()
        }
    }
}

/// Independent residual check of a candidate certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    /// `max|P − Pᵀ| / max|P|` before symmetrization.
    pub asymmetry: f64,
    /// `λ_min(P) − eps_pd`
    pub pd_margin: f64,
    /// `λ_max(MᵀP + PM) + eps_stab` per vertex; must not exceed the tolerance.
    pub lyapunov_max_eigenvalues: Vec<f64>,
    pub lyapunov_tolerances: Vec<f64>,
}

impl Residuals {
    pub fn passed(&self) -> bool {
        self.asymmetry <= 1e-9
            && self.pd_margin >= 0.0
            && self
                .lyapunov_max_eigenvalues
                .iter()
                .zip(&self.lyapunov_tolerances)
                .all(|(v, tol)| v <= tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub status: String,
    pub iterations: usize,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub relative_gap: f64,
    /// Optimal epigraph variable `t*`, when the objective is epigraph form.
    pub epigraph_value: Option<f64>,
    pub residuals: Residuals,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovCertificate {
    pub level: usize,
    /// Gram matrix `𝒫ᵢ`.
    pub p_mat: DMatrix<f64>,
    pub alpha: f64,
    /// Lifted vertex matrices certified by `p_mat`.
    pub vertices: Vec<DMatrix<f64>>,
    /// `w𝒫ᵢ⁻¹wᵀ` recomputed from `p_mat`.
    pub objective_value: Option<f64>,
    pub report: SolverReport,
}

impl LyapunovCertificate {
    pub fn dim(&self) -> usize {
        self.p_mat.nrows()
    }

    /// Short deterministic label used to reference a certificate from envelopes.
    pub fn label(&self) -> String {
        format!("level{}-alpha{}", self.level, self.alpha)
    }
}

fn check_vertex_dims(vertices: &[DMatrix<f64>], dim: usize) -> Result<()> {
    for (k, m) in vertices.iter().enumerate() {
        if m.shape() != (dim, dim) {
            return Err(Error::mismatch(
                format!("vertex {k}"),
                format!("{dim}x{dim}"),
                format!("{}x{}", m.nrows(), m.ncols()),
            ));
        }
    }
    Ok(())
}

fn check_len(what: &str, v: &DVector<f64>, dim: usize) -> Result<()> {
    if v.len() == dim {
        Ok(())
    } else {
        Err(Error::mismatch(what, dim, v.len()))
    }
}

/// Impulse-bound program for one or more vertex levels sharing a dimension.
pub fn build_impulse_program(
    levels: &[HierarchyLevel],
    b_lift: &DVector<f64>,
    c_lift: &DVector<f64>,
) -> Result<SdpProblem> {
    let first = levels
        .first()
        .ok_or_else(|| Error::InvalidArgument("at least one vertex level is required".into()))?;
    let dim = first.dim;
    let vertices: Vec<DMatrix<f64>> = levels.iter().map(|l| l.a_mat.clone()).collect();
    check_vertex_dims(&vertices, dim)?;
    if levels.iter().any(|l| l.level != first.level) {
        return Err(Error::InvalidArgument("vertex levels differ".into()));
    }
    check_len("lifted b", b_lift, dim)?;
    check_len("lifted c", c_lift, dim)?;
    let opts = SolveOptions::default();
    Ok(SdpProblem {
        level: first.level,
        alpha: 0.0,
        dim,
        objective: Objective::Epigraph { w: c_lift.clone() },
        linear_constraints: vec![LinearConstraint {
            v: b_lift.clone(),
            bound: 1.0,
        }],
        vertices,
        eps_stab: opts.eps_stab,
        eps_pd: default_eps_pd(b_lift, opts.pd_floor),
        trace_cap: opts.trace_cap,
    })
}

fn default_eps_pd(v: &DVector<f64>, floor: f64) -> f64 {
    let n2 = v.norm_squared();
    if n2 > 0.0 {
        floor / n2
    } else {
        floor
    }
}

/// `⊗ⁱ(A⁻¹)`, rejecting singular or numerically singular `A`.
pub fn inverse_lift(a: &DMatrix<f64>, level: usize) -> Result<DMatrix<f64>> {
    let inv = checked_inverse(a)?;
    kron_power(&inv, level)
}

pub(crate) fn checked_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            what: "A".into(),
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let sv = singular_values(a);
    let smax = sv.first().copied().unwrap_or(0.0);
    let smin = sv.last().copied().unwrap_or(0.0);
    let rcond = if smax > 0.0 { smin / smax } else { 0.0 };
    if !(rcond > 1e-13) {
        return Err(Error::SingularDynamics { rcond });
    }
    a.clone()
        .try_inverse()
        .ok_or(Error::SingularDynamics { rcond })
}

/// Step-bound program: the impulse program with `(𝐀ᵢ𝐛ᵢ)ᵀQ(𝐀ᵢ𝐛ᵢ) ≤ 1`.
pub fn build_step_program(
    level: &HierarchyLevel,
    a_inv_lift: &DMatrix<f64>,
    b_lift: &DVector<f64>,
    c_lift: &DVector<f64>,
) -> Result<SdpProblem> {
    let dim = level.dim;
    check_vertex_dims(std::slice::from_ref(a_inv_lift), dim)?;
    check_len("lifted b", b_lift, dim)?;
    check_len("lifted c", c_lift, dim)?;
    let shifted_b = a_inv_lift * b_lift;
    let mut problem = build_impulse_program(std::slice::from_ref(level), &shifted_b, c_lift)?;
    problem.eps_pd = default_eps_pd(&shifted_b, SolveOptions::default().pd_floor);
    Ok(problem)
}

/// `(A + Δ + αI, A − Δ + αI)`
pub fn shift_vertices(sys: &UncertainSystem, alpha: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = sys.order();
    let shift = DMatrix::<f64>::identity(n, n) * alpha;
    (&sys.a + &sys.delta + &shift, &sys.a - &sys.delta + shift)
}

/// Augmented data for bounding `h(t) − ce^{At}b`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceSystem {
    pub level: usize,
    /// `blockdiag(A + Δ, A)`
    pub a_plus: DMatrix<f64>,
    /// `blockdiag(A − Δ, A)`
    pub a_minus: DMatrix<f64>,
    /// `⊗ⁱ[b; b]`
    pub b_bar: DVector<f64>,
    /// `⊗ⁱ[c, −c]`
    pub c_bar: DVector<f64>,
}

impl DifferenceSystem {
    pub fn dim(&self) -> usize {
        self.b_bar.len()
    }

    /// `(A₊ + αI, A₋ + αI)`
    pub fn shifted(&self, alpha: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = self.a_plus.nrows();
        let shift = DMatrix::<f64>::identity(n, n) * alpha;
        (&self.a_plus + &shift, &self.a_minus + shift)
    }
}

fn block_diag(top: &DMatrix<f64>, bottom: &DMatrix<f64>) -> DMatrix<f64> {
    let (n1, n2) = (top.nrows(), bottom.nrows());
    let mut out = DMatrix::zeros(n1 + n2, n1 + n2);
    out.view_mut((0, 0), (n1, n1)).copy_from(top);
    out.view_mut((n1, n1), (n2, n2)).copy_from(bottom);
    out
}

pub fn build_difference_vertices(sys: &UncertainSystem, level: usize) -> Result<DifferenceSystem> {
    let a_plus = block_diag(&(&sys.a + &sys.delta), &sys.a);
    let a_minus = block_diag(&(&sys.a - &sys.delta), &sys.a);
    let n = sys.order();
    let mut stacked_b = DVector::zeros(2 * n);
    let mut stacked_c = DVector::zeros(2 * n);
    for k in 0..n {
        stacked_b[k] = sys.b[k];
        stacked_b[n + k] = sys.b[k];
        stacked_c[k] = sys.c[k];
        stacked_c[n + k] = -sys.c[k];
    }
    Ok(DifferenceSystem {
        level,
        a_plus,
        a_minus,
        b_bar: lift_vector(&stacked_b, level)?,
        c_bar: lift_vector(&stacked_c, level)?,
    })
}

/// Eigenvalue checks of `P − eps_pd·I` and `−(MᵀP + PM) − eps_stab·I`.
pub fn validate_certificate(
    p_raw: &DMatrix<f64>,
    vertices: &[DMatrix<f64>],
    eps_pd: f64,
    eps_stab: f64,
) -> (DMatrix<f64>, Residuals) {
    let scale = p_raw.amax().max(f64::MIN_POSITIVE);
    let asymmetry = (p_raw - p_raw.transpose()).amax() / scale;
    let p = (p_raw + p_raw.transpose()) * 0.5;
    let p_eigs = sym_eigenvalues(&p);
    let p_norm = p_eigs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let pd_margin = p_eigs.min() - eps_pd;
    let mut maxes = Vec::with_capacity(vertices.len());
    let mut tols = Vec::with_capacity(vertices.len());
    for m in vertices {
        let mp = m.transpose() * &p;
        let lyap = &mp + mp.transpose();
        maxes.push(sym_eigenvalues(&lyap).max() + eps_stab);
        tols.push(1e-7 * p_norm * spectral_norm(m));
    }
    (
        p,
        Residuals {
            asymmetry,
            pd_margin,
            lyapunov_max_eigenvalues: maxes,
            lyapunov_tolerances: tols,
        },
    )
}

/// Normalization applied before handing a problem to the interior-point method.
struct Scaling {
    /// `Q̂ = q_scale·Q`
    q_scale: f64,
    /// `M̂ = m_scale·M`
    m_scale: f64,
    /// `ŵ = w / w_norm`
    w_norm: f64,
}

fn to_program(problem: &SdpProblem) -> (Program, Scaling) {
    let q_scale = problem
        .linear_constraints
        .iter()
        .map(|lc| lc.v.norm_squared())
        .fold(0.0, f64::max);
    let q_scale = if q_scale > 0.0 { q_scale } else { 1.0 };
    let m_norm = problem.vertices.iter().map(|m| m.norm()).fold(0.0, f64::max);
    let m_scale = if m_norm > 0.0 { 1.0 / m_norm } else { 1.0 };
    let dim = problem.dim;

    let mut blocks = vec![Block::Floor {
        floor: problem.eps_pd * q_scale,
    }];
    for m in &problem.vertices {
        blocks.push(Block::Lyapunov {
            m: m * m_scale,
            margin: problem.eps_stab * q_scale * m_scale,
            tau_coef: 0.0,
        });
    }
    for lc in &problem.linear_constraints {
        blocks.push(Block::Quadratic {
            v: &lc.v / q_scale.sqrt(),
            rhs: lc.bound,
        });
    }
    blocks.push(Block::Trace {
        cap: problem.trace_cap * dim as f64,
    });
    let mut w_norm = 1.0;
    let with_tau = match &problem.objective {
        Objective::Feasibility => false,
        Objective::Epigraph { w } => {
            let n = w.norm();
            w_norm = if n > 0.0 { n } else { 1.0 };
            blocks.push(Block::Epigraph { w: w / w_norm });
            true
        }
    };
    (
        Program {
            dim,
            with_tau,
            blocks,
        },
        Scaling {
            q_scale,
            m_scale,
            w_norm,
        },
    )
}

fn validate_problem(problem: &SdpProblem, cap: usize) -> Result<()> {
    if problem.dim == 0 {
        return Err(Error::InvalidArgument("empty decision matrix".into()));
    }
    if problem.dim > cap {
        return Err(Error::DimensionCap {
            dim: problem.dim,
            cap,
        });
    }
    if problem.vertices.is_empty() {
        return Err(Error::InvalidArgument("at least one vertex matrix is required".into()));
    }
    check_vertex_dims(&problem.vertices, problem.dim)?;
    for lc in &problem.linear_constraints {
        check_len("linear constraint vector", &lc.v, problem.dim)?;
    }
    if let Objective::Epigraph { w } = &problem.objective {
        check_len("objective vector", w, problem.dim)?;
    }
    if !(problem.eps_pd > 0.0) || problem.eps_stab < 0.0 {
        return Err(Error::InvalidArgument(
            "need eps_pd > 0 and eps_stab >= 0".into(),
        ));
    }
    Ok(())
}

/// Solves a certificate program with the default options.
pub fn solve(problem: &SdpProblem) -> Result<LyapunovCertificate> {
    solve_with(problem, &SolveOptions::default())
}

pub fn solve_with(problem: &SdpProblem, opts: &SolveOptions) -> Result<LyapunovCertificate> {
    validate_problem(problem, opts.dimension_cap)?;

    // a vertex with an eigenvalue in the open right half-plane admits no certificate
    for (k, m) in problem.vertices.iter().enumerate() {
        let sa = spectral_abscissa(m);
        let slack = 1e-12 * m.norm().max(1.0);
        if sa > slack || (problem.eps_stab > 0.0 && sa >= -slack) {
            return Err(Error::Infeasible(format!(
                "vertex {k} has spectral abscissa {sa:.6e}; no Lyapunov certificate exists"
            )));
        }
    }

    let (program, scaling) = to_program(problem);
    let sol = sdp::solve(&program, &opts.settings());
    let solver_message = if sol.message.is_empty() {
        sol.status.as_str().to_string()
    } else {
        format!("{}: {}", sol.status.as_str(), sol.message)
    };

    if sol.status.converged() {
        let p_raw = &sol.q / scaling.q_scale;
        let (p, residuals) = validate_certificate(&p_raw, &problem.vertices, problem.eps_pd, problem.eps_stab);
        if residuals.passed() {
            let (objective_value, epigraph_value) = match &problem.objective {
                Objective::Feasibility => (None, None),
                Objective::Epigraph { w } => {
                    let recomputed = cholesky_quadratic_inverse(&p, w);
                    let t = sol.tau * scaling.w_norm * scaling.w_norm * scaling.q_scale;
                    (recomputed, Some(t))
                }
            };
            return Ok(LyapunovCertificate {
                level: problem.level,
                p_mat: p,
                alpha: problem.alpha,
                vertices: problem.vertices.clone(),
                objective_value,
                report: SolverReport {
                    status: sol.status.as_str().to_string(),
                    iterations: sol.iterations,
                    primal_infeasibility: sol.primal_infeasibility,
                    dual_infeasibility: sol.dual_infeasibility,
                    relative_gap: sol.relative_gap,
                    epigraph_value,
                    residuals,
                },
            });
        }
    }

    // separate infeasibility from numerical trouble with the always-feasible margin program
    let margin = feasibility_margin(&problem.vertices, problem.dim, opts)?;
    let needed = problem.eps_stab * scaling.m_scale;
    if margin.value >= -needed - 1e-9 {
        Err(Error::Infeasible(format!(
            "best common Lyapunov margin {:.3e} (normalized) does not reach the required {:.3e}; solver: {}",
            margin.value, -needed, solver_message
        )))
    } else {
        Err(Error::NumericalFailure(format!(
            "a certificate exists (normalized margin {:.3e}) but the solve did not produce a valid one; solver: {}",
            margin.value, solver_message
        )))
    }
}

/// Result of the margin program `min s` s.t. `M̂ᵀQ + QM̂ ⪯ sI`, `Q ⪰ μI`, `tr Q ≤ dim`
/// with `M̂ = M / max‖M‖_F`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityMargin {
    pub value: f64,
    pub status: String,
    pub iterations: usize,
}

/// Floor on `Q` in the margin program, relative to `tr Q = dim`.
const MARGIN_FLOOR: f64 = 1e-6;

pub fn feasibility_margin(vertices: &[DMatrix<f64>], dim: usize, opts: &SolveOptions) -> Result<FeasibilityMargin> {
    if vertices.is_empty() {
        return Err(Error::InvalidArgument("at least one vertex matrix is required".into()));
    }
    check_vertex_dims(vertices, dim)?;
    let m_norm = vertices.iter().map(|m| m.norm()).fold(0.0, f64::max);
    let m_scale = if m_norm > 0.0 { 1.0 / m_norm } else { 1.0 };
    let mut blocks: Vec<Block> = vertices
        .iter()
        .map(|m| Block::Lyapunov {
            m: m * m_scale,
            margin: 0.0,
            tau_coef: 1.0,
        })
        .collect();
    blocks.push(Block::Floor { floor: MARGIN_FLOOR });
    blocks.push(Block::Trace { cap: dim as f64 });
    let program = Program {
        dim,
        with_tau: true,
        blocks,
    };
    let sol = sdp::solve(&program, &opts.settings());
    if !sol.status.converged() {
        return Err(Error::NumericalFailure(format!(
            "margin program did not converge: {} {}",
            sol.status.as_str(),
            sol.message
        )));
    }
    Ok(FeasibilityMargin {
        value: sol.tau,
        status: sol.status.as_str().to_string(),
        iterations: sol.iterations,
    })
}

/// Bisection settings for [`max_alpha`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaSearch {
    /// Defaults to `[−2, 2]·|spectral abscissa of A|`.
    pub interval: Option<(f64, f64)>,
    pub tol: f64,
    pub max_iter: usize,
    /// Strict margin in normalized units: `α` is feasible iff the margin is below `−margin`.
    pub margin: f64,
    /// Bound `h(t) − ce^{At}b` (augmented vertices) instead of `h(t)`.
    pub difference: bool,
}

impl Default for AlphaSearch {
    fn default() -> Self {
        AlphaSearch {
            interval: None,
            tol: 1e-3,
            max_iter: 60,
            margin: 1e-7,
            difference: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaFrontier {
    /// Largest `α` found feasible.
    pub alpha: f64,
    /// Smallest `α` found (or known) infeasible.
    pub infeasible_above: f64,
    pub bisection_steps: usize,
    /// `(α, normalized margin)` for every program solved.
    pub evaluations: Vec<(f64, f64)>,
}

/// Lifted vertex matrices at shift `alpha` (plain or augmented).
pub fn lifted_vertices(
    sys: &UncertainSystem,
    level: usize,
    alpha: f64,
    difference: bool,
    cap: usize,
) -> Result<Vec<DMatrix<f64>>> {
    let (plus, minus) = if difference {
        build_difference_vertices(sys, level)?.shifted(alpha)
    } else {
        shift_vertices(sys, alpha)
    };
    Ok(vec![
        hierarchy_matrix_capped(&plus, level, cap)?,
        hierarchy_matrix_capped(&minus, level, cap)?,
    ])
}

pub fn max_alpha(sys: &UncertainSystem, level: usize, search: &AlphaSearch) -> Result<AlphaFrontier> {
    max_alpha_with(sys, level, search, &SolveOptions::default())
}

pub fn max_alpha_with(
    sys: &UncertainSystem,
    level: usize,
    search: &AlphaSearch,
    opts: &SolveOptions,
) -> Result<AlphaFrontier> {
    if !(search.tol > 0.0) {
        return Err(Error::InvalidArgument("bisection tolerance must be positive".into()));
    }
    let (lo0, hi0) = match search.interval {
        Some(iv) => iv,
        None => {
            let sa = spectral_abscissa(&sys.a).abs();
            let r = if sa > 1e-12 { 2.0 * sa } else { 1.0 };
            (-r, r)
        }
    };
    if !(lo0 < hi0) {
        return Err(Error::InvalidArgument(format!("empty alpha interval [{lo0}, {hi0}]")));
    }
    // lifted(M + αI) = lifted(M) + iα·I
    let base = lifted_vertices(sys, level, 0.0, search.difference, opts.dimension_cap)?;
    let dim = base[0].nrows();
    let shift = level as f64;
    let mut evaluations = Vec::new();
    let mut feasible = |alpha: f64| -> Result<bool> {
        let verts: Vec<DMatrix<f64>> = base
            .iter()
            .map(|m| m + DMatrix::<f64>::identity(dim, dim) * (shift * alpha))
            .collect();
        let value = match feasibility_margin(&verts, dim, opts) {
            Ok(m) => m.value,
            // no converged margin is treated as not certified
            Err(Error::NumericalFailure(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        evaluations.push((alpha, value));
        Ok(value < -search.margin)
    };

    if !feasible(lo0)? {
        return Err(Error::NoFeasibleAlpha { alpha: lo0 });
    }
    // every vertex must be Hurwitz after the shift
    let unshifted = if search.difference {
        let d = build_difference_vertices(sys, 1)?;
        vec![d.a_plus, d.a_minus]
    } else {
        let (p, m) = shift_vertices(sys, 0.0);
        vec![p, m]
    };
    let spectral_limit = -unshifted.iter().map(spectral_abscissa).fold(f64::NEG_INFINITY, f64::max);
    let mut lo = lo0;
    let mut hi = hi0.min(spectral_limit);
    if hi <= lo {
        hi = lo + search.tol;
    } else if hi == hi0 && feasible(hi)? {
        return Ok(AlphaFrontier {
            alpha: hi,
            infeasible_above: f64::INFINITY,
            bisection_steps: 0,
            evaluations,
        });
    }
    let mut steps = 0;
    while hi - lo > search.tol && steps < search.max_iter {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
        steps += 1;
    }
    Ok(AlphaFrontier {
        alpha: lo,
        infeasible_above: hi,
        bisection_steps: steps,
        evaluations,
    })
}

/// Level data plus certificate for `h(t)` of an LTI system.
pub fn certify_impulse(
    sys: &LtiSystem,
    level: usize,
    opts: &SolveOptions,
) -> Result<(HierarchyLevel, LyapunovCertificate)> {
    let lvl = crate::kron::build_level_capped(sys, level, opts.dimension_cap)?;
    let mut problem = build_impulse_program(std::slice::from_ref(&lvl), &lvl.b_vec, &lvl.c_vec)?;
    apply_options(&mut problem, opts, &lvl.b_vec);
    Ok((lvl, solve_with(&problem, opts)?))
}

/// Certificate for both vertices `A ± Δ + αI`; the returned level holds the nominal generator.
pub fn certify_robust_impulse(
    sys: &UncertainSystem,
    level: usize,
    alpha: f64,
    opts: &SolveOptions,
) -> Result<(HierarchyLevel, LyapunovCertificate)> {
    let nominal = crate::kron::build_level_capped(&sys.nominal(), level, opts.dimension_cap)?;
    let vertices = lifted_vertices(sys, level, alpha, false, opts.dimension_cap)?;
    let levels: Vec<HierarchyLevel> = vertices
        .into_iter()
        .map(|m| HierarchyLevel::from_parts(level, m, nominal.b_vec.clone(), nominal.c_vec.clone()))
        .collect::<Result<_>>()?;
    let mut problem = build_impulse_program(&levels, &nominal.b_vec, &nominal.c_vec)?;
    problem.alpha = alpha;
    apply_options(&mut problem, opts, &nominal.b_vec);
    Ok((nominal, solve_with(&problem, opts)?))
}

/// Certificate for the augmented vertices `A₊ + αI`, `A₋ + αI`.
pub fn certify_difference(
    sys: &UncertainSystem,
    level: usize,
    alpha: f64,
    opts: &SolveOptions,
) -> Result<(DifferenceSystem, LyapunovCertificate)> {
    crate::kron::lifted_dim(2 * sys.order(), level, opts.dimension_cap)?;
    let diff = build_difference_vertices(sys, level)?;
    let vertices = lifted_vertices(sys, level, alpha, true, opts.dimension_cap)?;
    let levels: Vec<HierarchyLevel> = vertices
        .into_iter()
        .map(|m| HierarchyLevel::from_parts(level, m, diff.b_bar.clone(), diff.c_bar.clone()))
        .collect::<Result<_>>()?;
    let mut problem = build_impulse_program(&levels, &diff.b_bar, &diff.c_bar)?;
    problem.alpha = alpha;
    apply_options(&mut problem, opts, &diff.b_bar);
    Ok((diff, solve_with(&problem, opts)?))
}

/// Level data plus certificate for the step response of an LTI system.
pub fn certify_step(
    sys: &LtiSystem,
    level: usize,
    opts: &SolveOptions,
) -> Result<(HierarchyLevel, LyapunovCertificate)> {
    let lvl = crate::kron::build_level_capped(sys, level, opts.dimension_cap)?;
    let a_inv = inverse_lift(&sys.a, level)?;
    let mut problem = build_step_program(&lvl, &a_inv, &lvl.b_vec, &lvl.c_vec)?;
    let shifted_b = &a_inv * &lvl.b_vec;
    apply_options(&mut problem, opts, &shifted_b);
    Ok((lvl, solve_with(&problem, opts)?))
}

fn apply_options(problem: &mut SdpProblem, opts: &SolveOptions, normalizer: &DVector<f64>) {
    problem.eps_stab = opts.eps_stab;
    problem.eps_pd = default_eps_pd(normalizer, opts.pd_floor);
    problem.trace_cap = opts.trace_cap;
}
