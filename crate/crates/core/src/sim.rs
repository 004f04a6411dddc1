//! Reference trajectories: exact LTI responses through the matrix exponential
//! and fixed-step RK4 for switched members of the polytopic family.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::Envelope;
use crate::certificates::checked_inverse;
use crate::error::{Error, Result};
use crate::system::{LtiSystem, UncertainSystem};

const PADE_THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068),
];
const THETA_13: f64 = 5.371920351148152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `(U, V)` of the odd/even split for an approximant with coefficients `b`.
fn pade_low(a: &DMatrix<f64>, b: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let mut u = &ident * b[1];
    let mut v = &ident * b[0];
    let mut pow = ident;
    for k in 1..b.len() / 2 {
        pow = &pow * &a2;
        u += &pow * b[2 * k + 1];
        v += &pow * b[2 * k];
    }
    (a * u, v)
}

fn pade13(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let b = &B13;
    let n = a.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = a * (inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1]);
    let inner_v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + ident * b[0];
    (u, v)
}

fn pade_solve(u: DMatrix<f64>, v: DMatrix<f64>) -> DMatrix<f64> {
    let num = &v + &u;
    let den = v - u;
    den.lu().solve(&num).expect("Pade denominator is nonsingular for the scaled argument")
}

/// `e^{a·t}` by scaling and squaring with Padé approximants of degree 3 to 13.
pub fn expm(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    assert!(a.is_square(), "expm needs a square matrix");
    let at = a * t;
    let norm = one_norm(&at);
    let b_for = |m: usize| -> &'static [f64] {
        match m {
            3 => &B3,
            5 => &B5,
            7 => &B7,
            _ => &B9,
        }
    };
    for (m, theta) in PADE_THETA {
        if norm <= theta {
            let (u, v) = pade_low(&at, b_for(m));
            return pade_solve(u, v);
        }
    }
    let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
    let scaled = at * 2f64.powi(-s);
    let (u, v) = pade13(&scaled);
    let mut r = pade_solve(u, v);
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Uniform grid `0, dt, 2dt, …` up to `t_final`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub t_final: f64,
    pub dt: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            t_final: 10.0,
            dt: 1e-3,
        }
    }
}

impl Grid {
    pub fn new(t_final: f64, dt: f64) -> Result<Self> {
        let g = Grid { t_final, dt };
        g.steps()?;
        Ok(g)
    }

    /// Number of intervals; `t_final` must be a multiple of `dt` up to rounding.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidGrid(format!("dt must be positive and finite, got {}", self.dt)));
        }
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return Err(Error::InvalidGrid(format!("t_final must be nonnegative and finite, got {}", self.t_final)));
        }
        let k = (self.t_final / self.dt).round();
        if (k * self.dt - self.t_final).abs() > 1e-9 * self.t_final.max(self.dt) {
            return Err(Error::InvalidGrid(format!(
                "t_final = {} is not a multiple of dt = {}",
                self.t_final, self.dt
            )));
        }
        if k > 1e8 {
            return Err(Error::InvalidGrid(format!("{k} grid points is too many")));
        }
        Ok(k as usize)
    }

    pub fn times(&self) -> Result<Vec<f64>> {
        let k = self.steps()?;
        Ok((0..=k).map(|j| j as f64 * self.dt).collect())
    }
}

/// Output samples `y(tₖ)` on a grid, optionally with the states that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub label: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub states: Option<Vec<DVector<f64>>>,
}

impl TrajectorySample {
    /// Writes `t,value` rows with 12 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,value")?;
        for (t, y) in self.times.iter().zip(&self.values) {
            writeln!(w, "{},{}", fmt12(*t), fmt12(*y))?;
        }
        Ok(())
    }

    /// Largest `|y|` over samples with `t ≥ from`.
    pub fn sup_abs_from(&self, from: f64) -> f64 {
        self.times
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| **t >= from)
            .map(|(_, y)| y.abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn fmt12(v: f64) -> String {
    format!("{v:.11e}")
}

/// `c·e^{Atₖ}·b` evaluated point by point.
pub fn impulse_response(sys: &LtiSystem, grid: &Grid) -> Result<TrajectorySample> {
    let times = grid.times()?;
    Ok(impulse_at(sys, &times, "impulse"))
}

pub(crate) fn impulse_at(sys: &LtiSystem, times: &[f64], label: &str) -> TrajectorySample {
    let states: Vec<DVector<f64>> = times.iter().map(|&t| expm(&sys.a, t) * &sys.b).collect();
    let values = states.iter().map(|x| sys.c.dot(x)).collect();
    TrajectorySample {
        label: label.to_string(),
        times: times.to_vec(),
        values,
        states: Some(states),
    }
}

/// `x(t) = e^{At}b`
pub fn impulse_state(sys: &LtiSystem, t: f64) -> DVector<f64> {
    expm(&sys.a, t) * &sys.b
}

/// `s(t) = cA⁻¹(e^{At} − I)b`
pub fn step_response(sys: &LtiSystem, grid: &Grid) -> Result<TrajectorySample> {
    let times = grid.times()?;
    let v = checked_inverse(&sys.a)? * &sys.b;
    let values = times
        .iter()
        .map(|&t| sys.c.dot(&(expm(&sys.a, t) * &v - &v)))
        .collect();
    Ok(TrajectorySample {
        label: "step".into(),
        times,
        values,
        states: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignalKind {
    Constant(f64),
    /// Uniform draws in `[−1, 1]`, held for `dwell`.
    PiecewiseRandom,
    /// Random draws from `{−1, 1}`, held for `dwell`.
    BangBang,
}

/// A piecewise-constant `λ(t) ∈ [−1, 1]` switching at multiples of `dwell`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingSignal {
    pub kind: SignalKind,
    pub seed: u64,
    pub dwell: f64,
}

impl SwitchingSignal {
    pub fn constant(lambda: f64) -> Self {
        SwitchingSignal {
            kind: SignalKind::Constant(lambda),
            seed: 0,
            dwell: f64::INFINITY,
        }
    }

    pub fn random(seed: u64, dwell: f64) -> Self {
        SwitchingSignal {
            kind: SignalKind::PiecewiseRandom,
            seed,
            dwell,
        }
    }

    pub fn bang_bang(seed: u64, dwell: f64) -> Self {
        SwitchingSignal {
            kind: SignalKind::BangBang,
            seed,
            dwell,
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            SignalKind::Constant(l) => format!("constant({l})"),
            SignalKind::PiecewiseRandom => format!("random(seed={}, dwell={})", self.seed, self.dwell),
            SignalKind::BangBang => format!("bangbang(seed={}, dwell={})", self.seed, self.dwell),
        }
    }

    fn validate(&self) -> Result<()> {
        match self.kind {
            SignalKind::Constant(l) if !(-1.0..=1.0).contains(&l) => {
                Err(Error::InvalidArgument(format!("lambda = {l} lies outside [-1, 1]")))
            }
            SignalKind::Constant(_) => Ok(()),
            _ if !(self.dwell > 0.0 && self.dwell.is_finite()) => Err(Error::InvalidArgument(format!(
                "dwell time must be positive and finite, got {}",
                self.dwell
            ))),
            _ => Ok(()),
        }
    }

    /// Values on the first `count` dwell segments.
    pub fn segment_values(&self, count: usize) -> Vec<f64> {
        match self.kind {
            SignalKind::Constant(l) => vec![l; count],
            SignalKind::PiecewiseRandom => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                (0..count).map(|_| rng.random_range(-1.0..=1.0)).collect()
            }
            SignalKind::BangBang => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                (0..count).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
            }
        }
    }
}

/// `λ ≡ +1`, `λ ≡ −1`, a seeded bang-bang signal and `random_count` seeded
/// piecewise-constant signals, all with dwell `0.2` where it applies.
pub fn default_signals(seed: u64, random_count: usize) -> Vec<SwitchingSignal> {
    let mut out = vec![
        SwitchingSignal::constant(1.0),
        SwitchingSignal::constant(-1.0),
        SwitchingSignal::bang_bang(seed, DEFAULT_DWELL),
    ];
    out.extend((0..random_count as u64).map(|k| SwitchingSignal::random(seed.wrapping_add(k + 1), DEFAULT_DWELL)));
    out
}

pub const DEFAULT_DWELL: f64 = 0.2;

fn rk4_step(a: &DMatrix<f64>, x: &DVector<f64>, h: f64) -> DVector<f64> {
    let k1 = a * x;
    let k2 = a * (x + &k1 * (0.5 * h));
    let k3 = a * (x + &k2 * (0.5 * h));
    let k4 = a * (x + &k3 * h);
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Substeps per output interval used by [`ltv_impulse_samples`].
pub fn substeps(sys: &UncertainSystem, signal: &SwitchingSignal, grid: &Grid) -> usize {
    let rho = sys.a.norm() + sys.delta.norm();
    let stability_step = if rho > 0.0 { 2.5 / rho } else { f64::INFINITY };
    let limit = stability_step.min(signal.dwell) / 4.0;
    if limit.is_finite() {
        (grid.dt / limit).ceil().max(1.0) as usize
    } else {
        1
    }
}

/// RK4 solutions of `φ̇ = (A + λ(t)Δ)φ`, `φ(0) = b`, one per signal.
pub fn ltv_impulse_samples(
    sys: &UncertainSystem,
    signals: &[SwitchingSignal],
    grid: &Grid,
) -> Result<Vec<TrajectorySample>> {
    signals
        .iter()
        .map(|s| ltv_impulse_with_substeps(sys, s, grid, substeps(sys, s, grid)))
        .collect()
}

/// As [`ltv_impulse_samples`] for a single signal with an explicit substep count.
pub fn ltv_impulse_with_substeps(
    sys: &UncertainSystem,
    signal: &SwitchingSignal,
    grid: &Grid,
    substeps: usize,
) -> Result<TrajectorySample> {
    signal.validate()?;
    let steps = grid.steps()?;
    if substeps == 0 {
        return Err(Error::InvalidGrid("at least one integration substep is required".into()));
    }
    let per_segment = match signal.kind {
        SignalKind::Constant(_) => steps.max(1),
        _ => {
            let k = (signal.dwell / grid.dt).round();
            if k < 1.0 || (k * grid.dt - signal.dwell).abs() > 1e-9 * signal.dwell {
                return Err(Error::InvalidGrid(format!(
                    "dwell time {} is not a positive integer multiple of dt = {}",
                    signal.dwell, grid.dt
                )));
            }
            k as usize
        }
    };
    let lambdas = signal.segment_values(steps / per_segment + 1);
    let h = grid.dt / substeps as f64;

    let mut x = sys.b.clone();
    let mut times = Vec::with_capacity(steps + 1);
    let mut values = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut current = None;
    let mut a_t = sys.a.clone();
    for j in 0..=steps {
        times.push(j as f64 * grid.dt);
        values.push(sys.c.dot(&x));
        states.push(x.clone());
        if j == steps {
            break;
        }
        let seg = j / per_segment;
        if current != Some(seg) {
            a_t = &sys.a + &sys.delta * lambdas[seg];
            current = Some(seg);
        }
        for _ in 0..substeps {
            x = rk4_step(&a_t, &x, h);
        }
    }
    Ok(TrajectorySample {
        label: signal.label(),
        times,
        values,
        states: Some(states),
    })
}

/// Worst containment slack over all samples; `pass` iff the violation is within tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct ContainmentReport {
    /// `max |y − center| − radius`; negative means strictly inside.
    pub max_violation: f64,
    pub argmax_time: f64,
    pub argmax_sample: usize,
    pub tolerance: f64,
    pub points_checked: usize,
    pub pass: bool,
}

/// Violations up to `1e-6·max(1, magnitude)` still count as contained.
pub fn check_containment(env: &Envelope, samples: &[TrajectorySample]) -> Result<ContainmentReport> {
    let tolerance = 1e-6 * env.magnitude.max(1.0);
    let mut best = (f64::NEG_INFINITY, f64::NAN, 0usize);
    let mut points = 0;
    let mut cached: Option<(Vec<f64>, Vec<f64>)> = None;
    for (k, s) in samples.iter().enumerate() {
        if s.times.len() != s.values.len() {
            return Err(Error::mismatch("trajectory values", s.times.len(), s.values.len()));
        }
        let centers = match &cached {
            Some((t, c)) if *t == s.times => c.clone(),
            _ => {
                let c = env.center_values(&s.times);
                cached = Some((s.times.clone(), c.clone()));
                c
            }
        };
        for ((&t, &y), &c) in s.times.iter().zip(&s.values).zip(&centers) {
            if t < env.t_start {
                continue;
            }
            points += 1;
            let v = (y - c).abs() - env.radius_at(t);
            if v > best.0 || best.1.is_nan() {
                best = (v, t, k);
            }
        }
    }
    if points == 0 {
        return Err(Error::InvalidGrid("no sample lies inside the envelope's validity window".into()));
    }
    Ok(ContainmentReport {
        max_violation: best.0,
        argmax_time: best.1,
        argmax_sample: best.2,
        tolerance,
        points_checked: points,
        pass: best.0 <= tolerance,
    })
}

/// Writes `t,lower,upper` rows for an envelope on `times`.
pub fn write_envelope_csv<W: Write>(env: &Envelope, times: &[f64], mut w: W) -> std::io::Result<()> {
    writeln!(w, "t,lower,upper")?;
    let centers = env.center_values(times);
    for (&t, c) in times.iter().zip(centers) {
        if t < env.t_start {
            continue;
        }
        let r = env.radius_at(t);
        writeln!(w, "{},{},{}", fmt12(t), fmt12(c - r), fmt12(c + r))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Truncated Taylor series with argument halving, used as an independent reference.
    fn taylor_expm(a: &DMatrix<f64>) -> DMatrix<f64> {
        let n = a.nrows();
        let s = 8;
        let scaled = a / 2f64.powi(s);
        let mut term = DMatrix::<f64>::identity(n, n);
        let mut sum = term.clone();
        for k in 1..30 {
            term = &term * &scaled / k as f64;
            sum += &term;
        }
        for _ in 0..s {
            sum = &sum * &sum;
        }
        sum
    }

    fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn expm_zero_and_diagonal() {
        let z = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(expm(&z, 2.0), DMatrix::identity(3, 3));
        for &m in &[1.0, 100.0, 1000.0] {
            let a = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -m]));
            for &t in &[0.0, 1e-4, 0.3, 2.0, 10.0] {
                let e = expm(&a, t);
                assert!(((e[(0, 0)] - (-t).exp()) / (-t).exp()).abs() < 1e-10);
                let want = (-m * t).exp();
                if want > 1e-250 {
                    assert!(((e[(1, 1)] - want) / want).abs() < 1e-10);
                } else {
                    assert!(e[(1, 1)].abs() < 1e-250);
                }
                assert_eq!(e[(0, 1)], 0.0);
            }
        }
    }

    #[test]
    fn expm_matches_taylor_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for scale in [0.01, 0.2, 1.0, 3.0, 8.0] {
            let a = DMatrix::<f64>::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0) * scale);
            let e = expm(&a, 1.0);
            assert!(rel(&e, &taylor_expm(&a)) < 1e-11, "scale {scale}");
        }
    }

    #[test]
    fn expm_semigroup() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = DMatrix::<f64>::from_fn(3, 3, |_, _| rng.random_range(-2.0..2.0));
            let (s, t) = (rng.random_range(0.0..2.0), rng.random_range(0.0..2.0));
            let lhs = expm(&a, s + t);
            let rhs = expm(&a, s) * expm(&a, t);
            assert!(rel(&lhs, &rhs) < 1e-8);
        }
    }

    #[test]
    fn grid_validation() {
        assert_eq!(Grid::new(1.0, 0.25).unwrap().times().unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(Grid::default().steps().unwrap(), 10_000);
        assert!(Grid::new(1.0, 0.3).is_err());
        assert!(Grid::new(1.0, 0.0).is_err());
        assert!(Grid::new(-1.0, 0.1).is_err());
        assert!(Grid::new(f64::NAN, 0.1).is_err());
    }

    #[test]
    fn step_of_negative_identity() {
        let n = 2;
        let sys = LtiSystem::new(
            "negI",
            -DMatrix::<f64>::identity(n, n),
            DVector::from_vec(vec![1.0, 0.0]),
            DVector::from_vec(vec![1.0, 0.0]),
        )
        .unwrap();
        let s = step_response(&sys, &Grid::new(3.0, 0.01).unwrap()).unwrap();
        assert_eq!(s.values[0], 0.0);
        for (t, y) in s.times.iter().zip(&s.values) {
            assert!((y - (1.0 - (-t).exp())).abs() < 1e-14);
        }
    }

    #[test]
    fn signals_stay_in_range_and_are_reproducible() {
        for sig in default_signals(42, 3) {
            let v = sig.segment_values(200);
            assert!(v.iter().all(|l| (-1.0..=1.0).contains(l)));
            assert_eq!(v, sig.segment_values(200));
        }
        let bb = SwitchingSignal::bang_bang(5, 0.2).segment_values(100);
        assert!(bb.iter().all(|l| l.abs() == 1.0));
        assert!(bb.iter().any(|&l| l > 0.0) && bb.iter().any(|&l| l < 0.0));
    }

    #[test]
    fn dwell_must_align_with_grid() {
        let sys = LtiSystem::new(
            "s",
            -DMatrix::<f64>::identity(1, 1),
            DVector::from_vec(vec![1.0]),
            DVector::from_vec(vec![1.0]),
        )
        .unwrap()
        .to_uncertain();
        let grid = Grid::new(1.0, 0.1).unwrap();
        let bad = SwitchingSignal::random(1, 0.15);
        assert!(matches!(ltv_impulse_samples(&sys, &[bad], &grid), Err(Error::InvalidGrid(_))));
        let out_of_range = SwitchingSignal::constant(1.5);
        assert!(ltv_impulse_samples(&sys, &[out_of_range], &grid).is_err());
    }

    #[test]
    fn frozen_vertex_matches_exact_response() {
        let sys = UncertainSystem::new(
            "ex6",
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -0.6, -0.5]),
            DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.1, -0.1]),
            DVector::from_vec(vec![0.0, 1.0]),
            DVector::from_vec(vec![1.0, 0.0]),
        )
        .unwrap();
        let grid = Grid::new(10.0, 1e-2).unwrap();
        for lambda in [1.0, -1.0, 0.3] {
            let sim = &ltv_impulse_samples(&sys, &[SwitchingSignal::constant(lambda)], &grid).unwrap()[0];
            let exact = impulse_response(&sys.frozen(lambda), &grid).unwrap();
            let scale = exact.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (a, b) in sim.values.iter().zip(&exact.values) {
                assert!((a - b).abs() <= 1e-6 * scale);
            }
        }
    }

    #[test]
    fn csv_formats() {
        let s = TrajectorySample {
            label: "x".into(),
            times: vec![0.0, 0.5],
            values: vec![1.0 / 3.0, -2.0],
            states: None,
        };
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,value");
        assert_eq!(lines[1], "0.00000000000e0,3.33333333333e-1");
        assert_eq!(lines[2], "5.00000000000e-1,-2.00000000000e0");
    }
}
