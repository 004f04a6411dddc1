//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line per criterion; exits nonzero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use lyapbound::bounds::{
    exponential_impulse_envelope, impulse_bound, lifted_bound, step_bound, tail_bound, Envelope, EnvelopeCenter,
};
use lyapbound::certificates::{
    build_impulse_program, certify_impulse, certify_robust_impulse, certify_step, max_alpha, solve, AlphaSearch,
    SolveOptions,
};
use lyapbound::kron::{build_level, hierarchy_matrix, lift_vector};
use lyapbound::sim::{
    check_containment, default_signals, expm, impulse_response, impulse_state, ltv_impulse_samples, step_response,
    Grid, TrajectorySample,
};
use nalgebra::DMatrix;

use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within_budget(elapsed: Duration, budget_s: f64) -> bool {
    elapsed.as_secs_f64() < budget_s
}

/// Example 1: h̄ = 2√2 and 𝒫 = 0.5·I₂ under the normalization bᵀ𝒫b = 1.
fn example1_reproduction() -> Outcome {
    let start = Instant::now();
    let sys = load_lti("example1");
    let (level, cert) = match certify_impulse(&sys, 1, &SolveOptions::default()) {
        Ok(x) => x,
        Err(e) => return outcome(false, format!("solve failed: {e}")),
    };
    let h = impulse_bound(&cert, &level).unwrap().magnitude;
    let p = &cert.p_mat;
    let elapsed = start.elapsed();
    let h_ok = (h - 2.0 * 2f64.sqrt()).abs() <= 1e-3;
    let p_ok = (p[(0, 0)] - 0.5).abs() <= 1e-3
        && (p[(1, 1)] - 0.5).abs() <= 1e-3
        && p[(0, 1)].abs() <= 1e-4
        && p[(1, 0)].abs() <= 1e-4;
    outcome(
        h_ok && p_ok && within_budget(elapsed, 5.0),
        format!(
            "h_bar = {h:.9}, P = [[{:.6}, {:.2e}], [{:.2e}, {:.6}]], {:.2}s",
            p[(0, 0)],
            p[(0, 1)],
            p[(1, 0)],
            p[(1, 1)],
            elapsed.as_secs_f64()
        ),
    )
}

/// Case study: bisection of the difference program at levels 1, 2, 3.
fn case_study_frontier() -> Outcome {
    let start = Instant::now();
    let sys = load_uncertain("case_study");
    let expected = [(1, 0.156), (2, 0.169), (3, 0.173)];
    let search = AlphaSearch {
        tol: 1e-3,
        difference: true,
        ..AlphaSearch::default()
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for (level, want) in expected {
        match max_alpha(&sys, level, &search) {
            Ok(f) => {
                pass &= (f.alpha - want).abs() <= 0.005;
                parts.push(format!("i={level}: {:.4} (expected {want})", f.alpha));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("i={level}: {e}"));
            }
        }
    }
    let elapsed = start.elapsed();
    pass &= within_budget(elapsed, 120.0);
    outcome(pass, format!("{}, {:.1}s", parts.join(", "), elapsed.as_secs_f64()))
}

/// Level-1 optimum for `A = diag(−1, −M)`, `b = [1, 1]`, `c = [1, −2]` by direct search.
///
/// With `P = [[1, q], [q, r]]` the Lyapunov condition reads `(1 + M)²q² ≤ 4Mr` and
/// the objective is `(cP⁻¹cᵀ)(bᵀPb) = (r + 4q + 4)(1 + r + 2q)/(r − q²)`.
fn stiff_level1_oracle(m: f64) -> f64 {
    let f = |r: f64, q: f64| (r + 4.0 * q + 4.0) * (1.0 + r + 2.0 * q) / (r - q * q);
    let q_max = |r: f64| 2.0 * (m * r).sqrt() / (1.0 + m);
    let mut best = (f64::INFINITY, 1.0, 0.0);
    for k in 0..=4000 {
        let r = 10f64.powf(-4.0 + 8.0 * k as f64 / 4000.0);
        let qm = q_max(r).min(r.sqrt() * (1.0 - 1e-12));
        for j in 0..=400 {
            let q = -qm + 2.0 * qm * j as f64 / 400.0;
            let v = f(r, q);
            if v > 0.0 && v < best.0 {
                best = (v, r, q);
            }
        }
    }
    // local refinement around the grid optimum
    let (mut v, mut r, mut q) = best;
    let mut step_r = r * 0.01;
    let mut step_q = q_max(r) * 0.01 + 1e-12;
    for _ in 0..200 {
        let mut improved = false;
        for (dr, dq) in [(step_r, 0.0), (-step_r, 0.0), (0.0, step_q), (0.0, -step_q)] {
            let (rn, qn) = (r + dr, q + dq);
            if rn > 0.0 && qn.abs() <= q_max(rn) && qn * qn < rn {
                let vn = f(rn, qn);
                if vn > 0.0 && vn < v {
                    (v, r, q) = (vn, rn, qn);
                    improved = true;
                }
            }
        }
        if !improved {
            step_r *= 0.5;
            step_q *= 0.5;
        }
    }
    v.sqrt()
}

/// Stiff family: strict ordering across levels and the growing level-1 gap.
fn stiff_conservatism() -> Outcome {
    let sys = load_lti("stiff_m100");
    let opts = SolveOptions::default();
    let mut h = Vec::new();
    for level in [1, 2, 5] {
        match certify_impulse(&sys, level, &opts).and_then(|(l, c)| impulse_bound(&c, &l)) {
            Ok(env) => h.push(env.magnitude),
            Err(e) => return outcome(false, format!("level {level}: {e}")),
        }
    }
    let fine = impulse_response(&sys, &Grid::new(0.1, 1e-4).unwrap()).unwrap();
    let coarse = impulse_response(&sys, &Grid::new(10.0, 1e-3).unwrap()).unwrap();
    let sup = fine.sup_abs_from(0.0).max(coarse.sup_abs_from(0.0));
    let ordered = h[0] > h[1] + 1e-3 && h[1] > h[2] + 1e-3 && h[2] >= sup;

    let stiff = load_lti("stiff_m1000");
    let h1000 = match certify_impulse(&stiff, 1, &opts).and_then(|(l, c)| impulse_bound(&c, &l)) {
        Ok(env) => env.magnitude,
        Err(e) => return outcome(false, format!("M=1000: {e}")),
    };
    let oracle = stiff_level1_oracle(1000.0);
    let oracle_ok = rel_err(h1000, oracle) <= 1e-4;
    outcome(
        ordered && sup <= 1.0 + 1e-6 && h1000 > 2.0 && oracle_ok,
        format!(
            "M=100: h(1)={:.6} > h(2)={:.6} > h(5)={:.6} >= sup|h|={:.6}; M=1000: h(1)={:.6} (search oracle {:.6})",
            h[0], h[1], h[2], sup, h1000, oracle
        ),
    )
}

struct Tally {
    worst: f64,
    certified: usize,
    failures: Vec<String>,
}

impl Default for Tally {
    fn default() -> Self {
        Tally {
            worst: f64::NEG_INFINITY,
            certified: 0,
            failures: Vec::new(),
        }
    }
}

impl Tally {
    fn check(&mut self, label: String, env: &Envelope, samples: &[TrajectorySample]) {
        let report = check_containment(env, samples).unwrap();
        self.worst = self.worst.max(report.max_violation);
        self.certified += 1;
        if report.max_violation > 1e-6 {
            self.failures
                .push(format!("{label}: violation {:.3e} at t={}", report.max_violation, report.argmax_time));
        }
    }
}

/// Soundness: every certified envelope contains every simulated trajectory.
fn soundness_suite() -> Outcome {
    let start = Instant::now();
    let opts = SolveOptions::default();
    let grid = Grid::new(10.0, 1e-2).unwrap();
    let mut tally = Tally::default();
    let mut skipped = 0;

    for seed in 0..50u64 {
        let n = 2 + (seed % 2) as usize;
        let lti = random_lti(1000 + seed, n);
        // a small interval around every other system exercises the switched case
        let mut unc = lti.to_uncertain();
        if seed % 2 == 1 {
            unc.delta = DMatrix::from_fn(n, n, |i, j| 0.05 * ((i + 2 * j + seed as usize) % 3) as f64 - 0.05);
        }
        let samples = ltv_impulse_samples(&unc, &default_signals(seed, 3), &grid).unwrap();
        for level in 1..=3 {
            match certify_robust_impulse(&unc, level, 0.0, &opts) {
                Ok((lvl, cert)) => {
                    let env = exponential_impulse_envelope(&cert, &lvl, &unc).unwrap();
                    tally.check(format!("random seed {seed} level {level}"), &env, &samples);
                }
                Err(lyapbound::Error::Infeasible(_)) => skipped += 1,
                Err(e) => tally.failures.push(format!("random seed {seed} level {level}: {e}")),
            }
        }
    }

    let ex6 = load_uncertain("example6");
    let samples = ltv_impulse_samples(&ex6, &default_signals(7, 3), &grid).unwrap();
    for alpha in [-0.5, 0.0, 0.15] {
        match certify_robust_impulse(&ex6, 6, alpha, &opts) {
            Ok((lvl, cert)) => {
                let env = exponential_impulse_envelope(&cert, &lvl, &ex6).unwrap();
                tally.check(format!("example6 alpha {alpha}"), &env, &samples);
            }
            Err(e) => tally.failures.push(format!("example6 alpha {alpha}: {e}")),
        }
    }
    let elapsed = start.elapsed();
    let Tally {
        worst,
        certified,
        failures,
    } = tally;
    let pass = failures.is_empty() && within_budget(elapsed, 300.0);
    outcome(
        pass,
        format!(
            "{certified} envelopes checked ({skipped} random cases not certifiable), worst violation {worst:.3e}, {:.1}s{}",
            elapsed.as_secs_f64(),
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

/// Lifted states follow the level-`i` dynamics.
fn hierarchy_flow() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let sys = random_lti(5000 + seed, 2 + (seed % 2) as usize);
        for level in 1..=3 {
            let gen = hierarchy_matrix(&sys.a, level).unwrap();
            let xi0 = lift_vector(&sys.b, level).unwrap();
            for k in 0..=50 {
                let t = 0.1 * k as f64;
                let lifted = lift_vector(&(expm(&sys.a, t) * &sys.b), level).unwrap();
                let xi = expm(&gen, t) * &xi0;
                worst = worst.max((&lifted - &xi).norm() / xi.norm());
            }
        }
    }
    outcome(worst <= 1e-6, format!("max relative deviation {worst:.3e}"))
}

/// Level-1 closed form, the step center and the scale invariance of h̄.
fn consistency_identities() -> Outcome {
    let opts = SolveOptions::default();
    let mut parts = Vec::new();
    let mut pass = true;

    let ex4 = load_lti("example4");
    let (lvl, cert) = certify_impulse(&ex4, 1, &opts).unwrap();
    let h = impulse_bound(&cert, &lvl).unwrap().magnitude;
    let p_inv = cert.p_mat.clone().try_inverse().unwrap();
    let direct = (ex4.c.dot(&(&p_inv * &ex4.c))).sqrt() * (ex4.b.dot(&(&cert.p_mat * &ex4.b))).sqrt();
    let e1 = rel_err(h, direct);
    pass &= e1 <= 1e-12;
    parts.push(format!("level-1 form rel err {e1:.1e}"));

    let ex5 = load_lti("example5");
    let (lvl5, cert5) = certify_step(&ex5, 1, &opts).unwrap();
    let env = step_bound(&cert5, &lvl5, &ex5).unwrap();
    let expected_center = -ex5.c.dot(&(ex5.a.clone().try_inverse().unwrap() * &ex5.b));
    let center = match env.center {
        EnvelopeCenter::Constant(c) => c,
        _ => f64::NAN,
    };
    let s50 = *step_response(&ex5, &Grid::new(50.0, 0.5).unwrap()).unwrap().values.last().unwrap();
    let center_ok = (center - expected_center).abs() <= 1e-12 * expected_center.abs().max(1.0);
    let limit_ok = (s50 - center).abs() <= 1e-6;
    pass &= center_ok && limit_ok;
    parts.push(format!("step center {center:.9} vs -cA^-1b {expected_center:.9}, |s(50) - center| = {:.1e}", (s50 - center).abs()));

    let mut worst: f64 = 0.0;
    for k in [1e-6, 0.37, 42.0, 3.5e5] {
        let mut scaled = cert.clone();
        scaled.p_mat *= k;
        let hk = impulse_bound(&scaled, &lvl).unwrap().magnitude;
        worst = worst.max(rel_err(hk, h));
    }
    let lvl3 = build_level(&ex4, 2).unwrap();
    let problem = build_impulse_program(std::slice::from_ref(&lvl3), &lvl3.b_vec, &lvl3.c_vec).unwrap();
    let cert3 = solve(&problem).unwrap();
    let h3 = lifted_bound(&cert3.p_mat, &lvl3.b_vec, &lvl3.c_vec, 2).unwrap();
    for k in [1e-4, 9.0, 1e6] {
        let hk = lifted_bound(&(&cert3.p_mat * k), &lvl3.b_vec, &lvl3.c_vec, 2).unwrap();
        worst = worst.max(rel_err(hk, h3));
    }
    pass &= worst <= 1e-12;
    parts.push(format!("scaling rel err {worst:.1e}"));
    outcome(pass, parts.join("; "))
}

/// Example 4 tail bound restarted at t0 = 1 from the simulated state.
fn tail_pipeline() -> Outcome {
    let sys = load_lti("example4");
    let (lvl, cert) = certify_impulse(&sys, 1, &SolveOptions::default()).unwrap();
    let global = impulse_bound(&cert, &lvl).unwrap();
    let t0 = 1.0;
    let tail = tail_bound(&cert, &lvl, &impulse_state(&sys, t0), t0).unwrap();
    let traj = impulse_response(&sys, &Grid::default()).unwrap();
    let sup_tail = traj.sup_abs_from(t0);
    let report = check_containment(&tail, std::slice::from_ref(&traj)).unwrap();
    let pass = tail.magnitude <= global.magnitude
        && tail.magnitude >= sup_tail - 1e-6
        && report.max_violation <= 1e-6;
    outcome(
        pass,
        format!(
            "tail {:.6} <= global {:.6}, sup_(t>=1)|h| = {:.6}, containment violation {:.3e}",
            tail.magnitude, global.magnitude, sup_tail, report.max_violation
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("1 example-1 reproduction", example1_reproduction),
        ("2 case-study alpha frontier", case_study_frontier),
        ("3 stiff-family conservatism", stiff_conservatism),
        ("4 soundness suite", soundness_suite),
        ("5 hierarchy flow", hierarchy_flow),
        ("6 consistency identities", consistency_identities),
        ("7 tail-bound pipeline", tail_pipeline),
    ];
    // `cargo test -- --list` and name filters are accepted but not used
    if std::env::args().any(|a| a == "--list") {
        for (name, _) in &criteria {
            println!("{name}: test");
        }
        return;
    }
    let mut failed = 0;
    for (name, run) in criteria {
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| outcome(false, "panicked"));
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {name}: {}", result.detail);
        if !result.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} of 7 criteria passed", 7 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
