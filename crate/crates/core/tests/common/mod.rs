#![allow(dead_code)]

use std::path::PathBuf;

use lyapbound::cli::{parse_system, ParsedSystem};
use lyapbound::{LtiSystem, UncertainSystem};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn system_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("systems").join(format!("{name}.json"))
}

pub fn load(name: &str) -> ParsedSystem {
    parse_system(&system_path(name)).unwrap_or_else(|e| panic!("loading {name}: {e}"))
}

pub fn load_lti(name: &str) -> LtiSystem {
    load(name).lti().expect("system without uncertainty")
}

pub fn load_uncertain(name: &str) -> UncertainSystem {
    load(name).uncertain()
}

/// Largest real part of the eigenvalues, computed with nalgebra's own Schur form.
pub fn abscissa(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// A random matrix shifted so its spectral abscissa lands in `[-1.0, -0.2]`.
pub fn random_hurwitz(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.5..1.5));
    let target = rng.random_range(-1.0..-0.2);
    let shift = abscissa(&m) - target;
    m - DMatrix::identity(n, n) * shift
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_lti(seed: u64, n: usize) -> LtiSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_hurwitz(&mut rng, n);
    let b = random_vector(&mut rng, n);
    let c = random_vector(&mut rng, n);
    LtiSystem::new(format!("random{seed}"), a, b, c).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
