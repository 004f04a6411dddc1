//! Primal-dual interior-point method for linear matrix inequalities in one
//! symmetric matrix variable `Q` plus an optional scalar `τ`.
//!
//! The decision vector is `y = (Q entries on and below the diagonal, τ)`.
//! Each block is an affine map `Z(y) = C − Σ yₖAₖ` required to be PSD. The
//! method maximizes `−τ` (or just seeks a point of the intersection when there
//! is no `τ`) with the Nesterov–Todd direction and a Mehrotra
//! predictor–corrector. The Schur complement `Hₖₗ = ⟨Aₖ, W Aₗ W⟩` is assembled
//! from closed-form rank-2 expansions of each block, so no block ever stores
//! its constraint matrices.

use faer::linalg::solvers::Solve;
use nalgebra::{DMatrix, DVector};

use crate::linalg::{svd, sym_eigenvalues};

/// Ordering of the lower triangle of a `dim × dim` symmetric matrix.
#[derive(Debug, Clone)]
pub(crate) struct SvecLayout {
    dim: usize,
    pairs: Vec<(usize, usize)>,
}

impl SvecLayout {
    pub(crate) fn new(dim: usize) -> Self {
        let mut pairs = Vec::with_capacity(dim * (dim + 1) / 2);
        for a in 0..dim {
            for b in 0..=a {
                pairs.push((a, b));
            }
        }
        SvecLayout { dim, pairs }
    }

    pub(crate) fn len(&self) -> usize {
        self.pairs.len()
    }

    fn index(a: usize, b: usize) -> usize {
        a * (a + 1) / 2 + b
    }

    /// Half weight on the diagonal: `Eₐₐ = eₐeₐᵀ`, `Eₐᵦ = eₐeᵦᵀ + eᵦeₐᵀ`.
    fn weight(&self, k: usize) -> f64 {
        let (a, b) = self.pairs[k];
        if a == b {
            0.5
        } else {
            1.0
        }
    }

    pub(crate) fn to_matrix(&self, y: &[f64]) -> DMatrix<f64> {
        let mut q = DMatrix::zeros(self.dim, self.dim);
        for (k, &(a, b)) in self.pairs.iter().enumerate() {
            q[(a, b)] = y[k];
            q[(b, a)] = y[k];
        }
        q
    }

    #[cfg(test)]
    fn from_matrix(&self, q: &DMatrix<f64>) -> Vec<f64> {
        self.pairs.iter().map(|&(a, b)| 0.5 * (q[(a, b)] + q[(b, a)])).collect()
    }
}

/// One PSD constraint `Z(Q, τ) ⪰ 0`.
#[derive(Debug, Clone)]
pub(crate) enum Block {
    /// `Q − floor·I`
    Floor { floor: f64 },
    /// `−(MᵀQ + QM) − margin·I + tau_coef·τ·I`
    Lyapunov {
        m: DMatrix<f64>,
        margin: f64,
        tau_coef: f64,
    },
    /// `[[τ, wᵀ], [w, Q]]`
    Epigraph { w: DVector<f64> },
    /// `rhs − vᵀQv` (1×1)
    Quadratic { v: DVector<f64>, rhs: f64 },
    /// `cap − tr Q` (1×1)
    Trace { cap: f64 },
}

/// Row-major copy for cache-friendly row access in the Schur loops.
struct Rows {
    n: usize,
    data: Vec<f64>,
}

impl Rows {
    fn new(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut data = Vec::with_capacity(n * m.ncols());
        for r in 0..n {
            for c in 0..m.ncols() {
                data.push(m[(r, c)]);
            }
        }
        Rows { n: m.ncols(), data }
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.n..(r + 1) * self.n]
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Adds `2·f_p·f_q·Σⱼ(uⱼ[c]vⱼ[d] + uⱼ[d]vⱼ[c])` to the lower part of column `q`.
fn accumulate_column(
    h: &mut [f64],
    m: usize,
    layout: &SvecLayout,
    q: usize,
    scale: f64,
    terms: &[(&[f64], &[f64])],
) {
    let (a, b) = layout.pairs[q];
    let fq = layout.weight(q);
    let col = &mut h[q * m..q * m + layout.len()];
    for c in a..layout.dim {
        let d_start = if c == a { b } else { 0 };
        let base = SvecLayout::index(c, 0);
        for d in d_start..=c {
            let mut val = 0.0;
            for (u, v) in terms {
                val += u[c] * v[d] + u[d] * v[c];
            }
            let fp = if c == d { 0.5 } else { 1.0 };
            col[base + d] += 2.0 * fp * fq * scale * val;
        }
    }
}

impl Block {
    pub(crate) fn size(&self, dim: usize) -> usize {
        match self {
            Block::Floor { .. } | Block::Lyapunov { .. } => dim,
            Block::Epigraph { .. } => dim + 1,
            Block::Quadratic { .. } | Block::Trace { .. } => 1,
        }
    }

    /// `Z(y)` when `with_const`, otherwise only its linear part `−Aᵀy`.
    pub(crate) fn affine(&self, q: &DMatrix<f64>, tau: f64, with_const: bool) -> DMatrix<f64> {
        let k = if with_const { 1.0 } else { 0.0 };
        let dim = q.nrows();
        match self {
            Block::Floor { floor } => q - DMatrix::identity(dim, dim) * (floor * k),
            Block::Lyapunov {
                m,
                margin,
                tau_coef,
            } => {
                let mq = m.transpose() * q;
                let mut z = -(&mq + mq.transpose());
                let shift = tau_coef * tau - margin * k;
                for i in 0..dim {
                    z[(i, i)] += shift;
                }
                z
            }
            Block::Epigraph { w } => {
                let mut z = DMatrix::zeros(dim + 1, dim + 1);
                z[(0, 0)] = tau;
                for i in 0..dim {
                    z[(0, i + 1)] = w[i] * k;
                    z[(i + 1, 0)] = w[i] * k;
                }
                z.view_mut((1, 1), (dim, dim)).copy_from(q);
                z
            }
            Block::Quadratic { v, rhs } => {
                DMatrix::from_element(1, 1, rhs * k - (v.transpose() * q * v)[(0, 0)])
            }
            Block::Trace { cap } => DMatrix::from_element(1, 1, cap * k - q.trace()),
        }
    }

    /// `out[k] += ⟨Aₖ, X⟩`.
    pub(crate) fn adjoint(&self, x: &DMatrix<f64>, layout: &SvecLayout, tau_index: Option<usize>, out: &mut [f64]) {
        match self {
            Block::Floor { .. } => {
                for (k, &(a, b)) in layout.pairs.iter().enumerate() {
                    out[k] -= 2.0 * layout.weight(k) * x[(a, b)];
                }
            }
            Block::Lyapunov { m, tau_coef, .. } => {
                let mx = m * x;
                let n = &mx + mx.transpose();
                for (k, &(a, b)) in layout.pairs.iter().enumerate() {
                    out[k] += 2.0 * layout.weight(k) * n[(a, b)];
                }
                if let Some(t) = tau_index {
                    out[t] -= tau_coef * x.trace();
                }
            }
            Block::Epigraph { .. } => {
                for (k, &(a, b)) in layout.pairs.iter().enumerate() {
                    out[k] -= 2.0 * layout.weight(k) * x[(a + 1, b + 1)];
                }
                if let Some(t) = tau_index {
                    out[t] -= x[(0, 0)];
                }
            }
            Block::Quadratic { v, .. } => {
                let s = x[(0, 0)];
                for (k, &(a, b)) in layout.pairs.iter().enumerate() {
                    out[k] += s * 2.0 * layout.weight(k) * v[a] * v[b];
                }
            }
            Block::Trace { .. } => {
                let s = x[(0, 0)];
                for (k, &(a, b)) in layout.pairs.iter().enumerate() {
                    if a == b {
                        out[k] += s;
                    }
                }
            }
        }
    }

    /// Largest Frobenius norm over the constraint matrices `Aₖ` (starting-point heuristic).
    fn max_constraint_norm(&self, dim: usize) -> f64 {
        match self {
            Block::Floor { .. } | Block::Epigraph { .. } => 2f64.sqrt(),
            Block::Lyapunov { m, tau_coef, .. } => {
                (2.0 * 2f64.sqrt() * m.norm()).max(tau_coef.abs() * (dim as f64).sqrt())
            }
            Block::Quadratic { v, .. } => 2.0 * v.amax() * v.amax(),
            Block::Trace { .. } => 1.0,
        }
    }

    /// Adds `⟨Aₖ, W Aₗ W⟩` to the lower triangle of the column-major `h`.
    fn add_schur(&self, w: &DMatrix<f64>, layout: &SvecLayout, tau_index: Option<usize>, h: &mut [f64], m: usize) {
        let nq = layout.len();
        match self {
            Block::Floor { .. } => {
                let rows = Rows::new(w);
                for q in 0..nq {
                    let (a, b) = layout.pairs[q];
                    accumulate_column(h, m, layout, q, 1.0, &[(rows.row(a), rows.row(b))]);
                }
            }
            Block::Epigraph { .. } => {
                let dim = layout.dim;
                let inner = Rows::new(&w.view((1, 1), (dim, dim)).into_owned());
                for q in 0..nq {
                    let (a, b) = layout.pairs[q];
                    accumulate_column(h, m, layout, q, 1.0, &[(inner.row(a), inner.row(b))]);
                }
                if let Some(t) = tau_index {
                    for (q, &(a, b)) in layout.pairs.iter().enumerate() {
                        h[q * m + t] += 2.0 * layout.weight(q) * w[(0, a + 1)] * w[(0, b + 1)];
                    }
                    h[t * m + t] += w[(0, 0)] * w[(0, 0)];
                }
            }
            Block::Lyapunov { m: mat, tau_coef, .. } => {
                // G = W Mᵀ, K = M W Mᵀ
                let g = w * mat.transpose();
                let k = mat * &g;
                let g_rows = Rows::new(&g);
                let g_cols = Rows::new(&g.transpose());
                let w_rows = Rows::new(w);
                let k_rows = Rows::new(&k);
                for q in 0..nq {
                    let (a, b) = layout.pairs[q];
                    let terms = [
                        (k_rows.row(a), w_rows.row(b)),
                        (g_rows.row(b), g_cols.row(a)),
                        (k_rows.row(b), w_rows.row(a)),
                        (g_rows.row(a), g_cols.row(b)),
                    ];
                    accumulate_column(h, m, layout, q, 1.0, &terms);
                }
                if let Some(t) = tau_index {
                    if *tau_coef != 0.0 {
                        let w2 = w * w;
                        let mw2 = mat * &w2;
                        let n = &mw2 + mw2.transpose();
                        for (q, &(a, b)) in layout.pairs.iter().enumerate() {
                            h[q * m + t] -= tau_coef * 2.0 * layout.weight(q) * n[(a, b)];
                        }
                        h[t * m + t] += tau_coef * tau_coef * w.norm_squared();
                    }
                }
            }
            Block::Quadratic { v, .. } => {
                let omega2 = w[(0, 0)] * w[(0, 0)];
                let beta: Vec<f64> = layout
                    .pairs
                    .iter()
                    .enumerate()
                    .map(|(k, &(a, b))| 2.0 * layout.weight(k) * v[a] * v[b])
                    .collect();
                for q in 0..nq {
                    let s = omega2 * beta[q];
                    if s == 0.0 {
                        continue;
                    }
                    let col = &mut h[q * m..q * m + nq];
                    for p in q..nq {
                        col[p] += s * beta[p];
                    }
                }
            }
            Block::Trace { .. } => {
                let omega2 = w[(0, 0)] * w[(0, 0)];
                for a in 0..layout.dim {
                    let q = SvecLayout::index(a, a);
                    for c in a..layout.dim {
                        h[q * m + SvecLayout::index(c, c)] += omega2;
                    }
                }
            }
        }
    }
}

/// A program in the decision `(Q, τ)`.
#[derive(Debug, Clone)]
pub(crate) struct Program {
    pub dim: usize,
    /// When set, minimize `τ`; otherwise pure feasibility.
    pub with_tau: bool,
    pub blocks: Vec<Block>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Settings {
    pub max_iter: usize,
    pub tol_gap: f64,
    pub tol_feas: f64,
    /// Accepted as reduced accuracy when the method stalls, measured on the
    /// residuals and on complementarity.
    pub tol_loose: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            max_iter: 100,
            tol_gap: 1e-9,
            tol_feas: 1e-9,
            tol_loose: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Status {
    Optimal,
    Inaccurate,
    MaxIterations,
    NumericalError,
}

impl Status {
    pub(crate) fn as_str(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Inaccurate => "inaccurate",
            Status::MaxIterations => "max_iterations",
            Status::NumericalError => "numerical_error",
        }
    }

    pub(crate) fn converged(self) -> bool {
        matches!(self, Status::Optimal | Status::Inaccurate)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Solution {
    pub status: Status,
    pub q: DMatrix<f64>,
    pub tau: f64,
    pub iterations: usize,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub relative_gap: f64,
    pub message: String,
}

/// Nesterov–Todd scaling `W = GGᵀ` with `G⁻¹XG⁻ᵀ = GᵀZG = diag(d)`.
struct NtScaling {
    g: DMatrix<f64>,
    g_inv: DMatrix<f64>,
    d: DVector<f64>,
    w: DMatrix<f64>,
}

impl NtScaling {
    /// With `X = LₓLₓᵀ`, `Z = L_zL_zᵀ` and `L_zᵀLₓ = U diag(d) Vᵀ`, the scaling is
    /// `G = LₓV diag(d)^{-1/2}` and `G⁻¹ = diag(d)^{-1/2} UᵀL_zᵀ`. The SVD keeps `d`
    /// positive even when `X` and `Z` are badly conditioned near the optimum.
    fn new(x: &DMatrix<f64>, z: &DMatrix<f64>) -> Option<Self> {
        let n = x.nrows();
        let lx = x.clone().cholesky()?.l();
        let lz = z.clone().cholesky()?.l();
        let (u, d, v) = svd(&(lz.transpose() * &lx))?;
        if d.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return None;
        }
        let mut g = &lx * v;
        for j in 0..n {
            let s = 1.0 / d[j].sqrt();
            g.column_mut(j).scale_mut(s);
        }
        let mut g_inv = u.transpose() * lz.transpose();
        for i in 0..n {
            let s = 1.0 / d[i].sqrt();
            g_inv.row_mut(i).scale_mut(s);
        }
        let mut w = &g * g.transpose();
        symmetrize(&mut w);
        Some(NtScaling { g, g_inv, d, w })
    }

    fn scaled_primal(&self, dx: &DMatrix<f64>) -> DMatrix<f64> {
        let mut t = &self.g_inv * dx * self.g_inv.transpose();
        symmetrize(&mut t);
        t
    }

    fn scaled_dual(&self, dz: &DMatrix<f64>) -> DMatrix<f64> {
        let mut t = self.g.transpose() * dz * &self.g;
        symmetrize(&mut t);
        t
    }

    /// Largest step keeping `diag(d) + α·scaled` PSD.
    fn max_step(&self, scaled: &DMatrix<f64>) -> f64 {
        let n = scaled.nrows();
        let mut t = scaled.clone();
        for i in 0..n {
            for j in 0..n {
                t[(i, j)] /= (self.d[i] * self.d[j]).sqrt();
            }
        }
        let lmin = sym_eigenvalues(&t).min();
        if lmin.is_nan() {
            0.0
        } else if lmin >= 0.0 {
            f64::INFINITY
        } else {
            -1.0 / lmin
        }
    }

    /// Solves `diag(d)∘Y = r` (Jordan product) and maps back: `G Y Gᵀ`.
    fn unscale_rhs(&self, r: &DMatrix<f64>) -> DMatrix<f64> {
        let n = r.nrows();
        let mut y = r.clone();
        for i in 0..n {
            for j in 0..n {
                y[(i, j)] = 2.0 * r[(i, j)] / (self.d[i] + self.d[j]);
            }
        }
        let mut out = &self.g * y * self.g.transpose();
        symmetrize(&mut out);
        out
    }
}

struct Factor {
    llt: faer::linalg::solvers::Llt<f64>,
}

impl Factor {
    fn new(h: &mut [f64], m: usize) -> Option<Self> {
        let max_diag = (0..m).map(|i| h[i * m + i].abs()).fold(0.0, f64::max).max(1e-300);
        for attempt in 0..6 {
            let mat = faer::MatRef::from_column_major_slice(h, m, m);
            if let Ok(llt) = mat.llt(faer::Side::Lower) {
                return Some(Factor { llt });
            }
            let reg = max_diag * 10f64.powi(-14 + 2 * attempt);
            for i in 0..m {
                h[i * m + i] += reg;
            }
        }
        None
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let b = faer::Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        let x = self.llt.solve(&b);
        (0..rhs.len()).map(|i| x[(i, 0)]).collect()
    }
}

fn dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct Direction {
    dy: Vec<f64>,
    dx: Vec<DMatrix<f64>>,
    dz: Vec<DMatrix<f64>>,
}

struct Workspace<'a> {
    program: &'a Program,
    layout: &'a SvecLayout,
    tau_index: Option<usize>,
    m: usize,
}

impl Workspace<'_> {
    fn split(&self, y: &[f64]) -> (DMatrix<f64>, f64) {
        let q = self.layout.to_matrix(&y[..self.layout.len()]);
        let tau = self.tau_index.map_or(0.0, |t| y[t]);
        (q, tau)
    }

    fn adjoint_all(&self, mats: &[DMatrix<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (blk, x) in self.program.blocks.iter().zip(mats) {
            blk.adjoint(x, self.layout, self.tau_index, &mut out);
        }
        out
    }

    /// `A(W Aᵀ(dy) W)` summed over blocks, without forming the Schur matrix.
    fn apply_schur(&self, scalings: &[NtScaling], dy: &[f64]) -> Vec<f64> {
        let (dq, dtau) = self.split(dy);
        let t: Vec<DMatrix<f64>> = self
            .program
            .blocks
            .iter()
            .zip(scalings)
            .map(|(blk, s)| -(&s.w * blk.affine(&dq, dtau, false) * &s.w))
            .collect();
        self.adjoint_all(&t)
    }

    fn direction(
        &self,
        factor: &Factor,
        scalings: &[NtScaling],
        rp: &[f64],
        rd: &[DMatrix<f64>],
        rx: Vec<DMatrix<f64>>,
    ) -> Direction {
        let t: Vec<DMatrix<f64>> = rx
            .iter()
            .zip(rd)
            .zip(scalings)
            .map(|((rx, rd), s)| rx - &s.w * rd * &s.w)
            .collect();
        let at = self.adjoint_all(&t);
        let rhs: Vec<f64> = rp.iter().zip(&at).map(|(a, b)| a - b).collect();
        let mut dy = factor.solve(&rhs);
        // W is badly conditioned near the optimum and the assembled Schur matrix
        // (possibly regularized) loses digits, so refine against the operator
        // itself for as long as that actually lowers the residual
        let residual = |dy: &[f64]| -> Vec<f64> {
            let hdy = self.apply_schur(scalings, dy);
            rhs.iter().zip(&hdy).map(|(r, h)| r - h).collect()
        };
        let mut res = residual(&dy);
        for _ in 0..3 {
            let cand: Vec<f64> = dy.iter().zip(factor.solve(&res)).map(|(d, c)| d + c).collect();
            let cand_res = residual(&cand);
            if norm(&cand_res) >= norm(&res) {
                break;
            }
            dy = cand;
            res = cand_res;
        }
        let (dq, dtau) = self.split(&dy);
        let mut dx = Vec::with_capacity(rx.len());
        let mut dz = Vec::with_capacity(rx.len());
        for (((blk, rx), rd), s) in self.program.blocks.iter().zip(rx).zip(rd).zip(scalings) {
            // ΔZ = R_d − AᵀΔy and −AᵀΔy is the linear part of the block map
            let mut dzk = rd + blk.affine(&dq, dtau, false);
            symmetrize(&mut dzk);
            let mut dxk = rx - &s.w * &dzk * &s.w;
            symmetrize(&mut dxk);
            dx.push(dxk);
            dz.push(dzk);
        }
        Direction { dy, dx, dz }
    }
}

/// Iterations without halving the merit before the solve gives up.
const STALL_ITERS: usize = 25;

pub(crate) fn solve(program: &Program, settings: &Settings) -> Solution {
    let layout = SvecLayout::new(program.dim);
    let nq = layout.len();
    let tau_index = program.with_tau.then_some(nq);
    let m = nq + usize::from(program.with_tau);
    let ws = Workspace {
        program,
        layout: &layout,
        tau_index,
        m,
    };

    // maximize bᵀy with b = −e_τ
    let mut bvec = vec![0.0; m];
    if let Some(t) = tau_index {
        bvec[t] = -1.0;
    }
    let b_norm = norm(&bvec);

    let zero_q = DMatrix::zeros(program.dim, program.dim);
    let consts: Vec<DMatrix<f64>> = program
        .blocks
        .iter()
        .map(|blk| blk.affine(&zero_q, 0.0, true))
        .collect();
    let c_norm = consts.iter().map(|c| c.norm_squared()).sum::<f64>().sqrt();
    let total_size: usize = program.blocks.iter().map(|b| b.size(program.dim)).sum();

    let mut xs = Vec::with_capacity(program.blocks.len());
    let mut zs = Vec::with_capacity(program.blocks.len());
    for (blk, c) in program.blocks.iter().zip(&consts) {
        let n = blk.size(program.dim);
        let nf = n as f64;
        let a_norm = blk.max_constraint_norm(program.dim);
        let xi = 10f64.max(nf.sqrt()).max(nf * (1.0 + b_norm / (1.0 + a_norm)));
        let eta = 10f64.max(nf.sqrt()).max(a_norm).max(c.norm());
        xs.push(DMatrix::identity(n, n) * xi);
        zs.push(DMatrix::identity(n, n) * eta);
    }
    let mut y = vec![0.0; m];

    let mut best = None;
    let mut progress = (f64::INFINITY, 0);
    let mut status = Status::MaxIterations;
    let mut message = String::new();
    let mut iterations = 0;
    let (mut pinf, mut dinf, mut gap) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);

    for iter in 0..settings.max_iter {
        iterations = iter;
        let (q, tau) = ws.split(&y);
        let rd: Vec<DMatrix<f64>> = program
            .blocks
            .iter()
            .zip(&zs)
            .map(|(blk, z)| {
                let mut r = blk.affine(&q, tau, true) - z;
                symmetrize(&mut r);
                r
            })
            .collect();
        let ax = ws.adjoint_all(&xs);
        let rp: Vec<f64> = bvec.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let pobj: f64 = consts.iter().zip(&xs).map(|(c, x)| dot(c, x)).sum();
        let dobj: f64 = bvec.iter().zip(&y).map(|(b, y)| b * y).sum();
        let xz: f64 = xs.iter().zip(&zs).map(|(x, z)| dot(x, z)).sum();
        let mu = xz / total_size as f64;
        pinf = norm(&rp) / (1.0 + b_norm);
        dinf = rd.iter().map(|r| r.norm_squared()).sum::<f64>().sqrt() / (1.0 + c_norm);
        let denom = 1.0 + pobj.abs() + dobj.abs();
        gap = ((pobj - dobj).abs() / denom).max(xz / denom);

        // Once X stalls slightly infeasible, pobj − dobj is dominated by yᵀr_p and
        // overstates how far the dual point is from optimal. The fallback therefore
        // ranks iterates by complementarity instead.
        let merit = pinf.max(dinf).max(xz / denom);
        if best.as_ref().map_or(true, |(bm, _, _)| merit < *bm) {
            best = Some((merit, y.clone(), iter));
        }
        if merit < 0.5 * progress.0 {
            progress = (merit, iter);
        } else if iter - progress.1 >= STALL_ITERS {
            message = format!("no progress since iteration {}", progress.1);
            break;
        }

        if pinf <= settings.tol_feas && dinf <= settings.tol_feas && gap <= settings.tol_gap {
            status = Status::Optimal;
            break;
        }

        let scalings: Option<Vec<NtScaling>> =
            xs.iter().zip(&zs).map(|(x, z)| NtScaling::new(x, z)).collect();
        let Some(scalings) = scalings else {
            status = Status::NumericalError;
            message = format!("lost positive definiteness at iteration {iter}");
            break;
        };

        let mut h = vec![0.0; m * m];
        for (blk, s) in program.blocks.iter().zip(&scalings) {
            blk.add_schur(&s.w, &layout, tau_index, &mut h, m);
        }
        let Some(factor) = Factor::new(&mut h, m) else {
            status = Status::NumericalError;
            message = format!("Schur complement factorization failed at iteration {iter}");
            break;
        };

        // predictor
        let rx: Vec<DMatrix<f64>> = xs.iter().map(|x| -x).collect();
        let aff = ws.direction(&factor, &scalings, &rp, &rd, rx);
        let dxt: Vec<DMatrix<f64>> = scalings.iter().zip(&aff.dx).map(|(s, d)| s.scaled_primal(d)).collect();
        let dzt: Vec<DMatrix<f64>> = scalings.iter().zip(&aff.dz).map(|(s, d)| s.scaled_dual(d)).collect();
        let ap = scalings
            .iter()
            .zip(&dxt)
            .map(|(s, d)| s.max_step(d))
            .fold(1.0, f64::min);
        let ad = scalings
            .iter()
            .zip(&dzt)
            .map(|(s, d)| s.max_step(d))
            .fold(1.0, f64::min);
        let xz_aff: f64 = xs
            .iter()
            .zip(&zs)
            .zip(aff.dx.iter().zip(&aff.dz))
            .map(|((x, z), (dx, dz))| dot(&(x + dx * ap), &(z + dz * ad)))
            .sum();
        let sigma = (xz_aff / xz).clamp(0.0, 1.0).powi(3);

        // corrector
        let target = sigma * mu;
        let rx: Vec<DMatrix<f64>> = scalings
            .iter()
            .zip(dxt.iter().zip(&dzt))
            .map(|(s, (dx, dz))| {
                let n = s.d.len();
                let cross = dx * dz;
                let mut r = -(&cross + cross.transpose()) * 0.5;
                for i in 0..n {
                    r[(i, i)] += target - s.d[i] * s.d[i];
                }
                s.unscale_rhs(&r)
            })
            .collect();
        let dir = ws.direction(&factor, &scalings, &rp, &rd, rx);

        let gamma = 0.98;
        let ap = scalings
            .iter()
            .zip(&dir.dx)
            .map(|(s, d)| s.max_step(&s.scaled_primal(d)))
            .fold(f64::INFINITY, f64::min);
        let ad = scalings
            .iter()
            .zip(&dir.dz)
            .map(|(s, d)| s.max_step(&s.scaled_dual(d)))
            .fold(f64::INFINITY, f64::min);
        let ap = (gamma * ap).min(1.0);
        let ad = (gamma * ad).min(1.0);
        if ap < 1e-10 && ad < 1e-10 {
            status = Status::NumericalError;
            message = format!("step length collapsed at iteration {iter}");
            break;
        }
        // The eigenvalue step bound is exact only up to rounding; near the optimum
        // the new iterate can still fail Cholesky, so back off until it does not.
        let (mut ap, mut ad) = (ap, ad);
        let mut accepted = None;
        for _ in 0..30 {
            let nx: Vec<DMatrix<f64>> = xs.iter().zip(&dir.dx).map(|(x, dx)| x + dx * ap).collect();
            let nz: Vec<DMatrix<f64>> = zs.iter().zip(&dir.dz).map(|(z, dz)| z + dz * ad).collect();
            if nx.iter().chain(&nz).all(|m| m.clone().cholesky().is_some()) {
                accepted = Some((nx, nz));
                break;
            }
            ap *= 0.5;
            ad *= 0.5;
        }
        let Some((nx, nz)) = accepted else {
            status = Status::NumericalError;
            message = format!("lost positive definiteness at iteration {iter}");
            break;
        };
        xs = nx;
        zs = nz;
        for (yi, dyi) in y.iter_mut().zip(&dir.dy) {
            *yi += ad * dyi;
        }
        iterations = iter + 1;
    }

    if status != Status::Optimal {
        if let Some((merit, yb, it)) = best {
            if merit <= settings.tol_loose {
                y = yb;
                iterations = it;
                status = Status::Inaccurate;
            }
        }
        if message.is_empty() && status == Status::MaxIterations {
            message = format!("iteration cap {} reached", settings.max_iter);
        }
    }

    let (q, tau) = ws.split(&y);
    Solution {
        status,
        q,
        tau,
        iterations,
        primal_infeasibility: pinf,
        dual_infeasibility: dinf,
        relative_gap: gap,
        message,
    }
}
