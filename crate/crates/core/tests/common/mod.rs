//! Oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use floqlab::dipole::{dipole_elements, DipoleSet, DEFAULT_HARMONICS};
use floqlab::floquet::{floquet_solve, fold, FloquetSolution, SolverConfig};
use floqlab::linalg::{c, CMatrix};
use floqlab::models::{build_benzene, build_tls, ModelBundle, PeriodicHamiltonian};
use floqlab::symmetry::{rs_allowed, symmetry_adapt, AdaptedSolution};
use num_complex::Complex64;
use rand::Rng;

pub const OMEGA: f64 = 1.0;
pub const BENZENE_E0: f64 = 0.45;
pub const BENZENE_J0: f64 = 0.05;

/// Bessel function `J0` by its power series (accurate for `|x| < 10`).
pub fn bessel_j0(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        term *= q / (k as f64 * k as f64);
        sum += term;
    }
    sum
}

/// Root of `f` in `[a, b]` by bisection; `f(a)` and `f(b)` must differ in sign.
pub fn bisect(mut a: f64, mut b: f64, tol: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut fa = f(a);
    assert!(fa * f(b) <= 0.0, "root not bracketed in [{a}, {b}]");
    while b - a > tol {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fa * fm <= 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

/// Minimizer of a unimodal `f` on `[a, b]` by golden-section search.
pub fn golden_min(mut a: f64, mut b: f64, tol: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let r = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

pub fn solve(b: &ModelBundle) -> FloquetSolution {
    floquet_solve(&b.hamiltonian, &SolverConfig::default()).expect("solve")
}

pub fn symmetry<'a>(b: &'a ModelBundle, name: &str) -> &'a floqlab::SymmetrySpec {
    b.symmetries.iter().find(|s| s.name == name).expect("bundled symmetry")
}

/// Benzene Floquet modes in the rotation-adapted basis together with the
/// ground mode `zero` and the modes it couples to. `band0` holds the partners
/// allowed in band 0; `band1` the partners allowed in band +1 or -1 with that
/// band index. Several modes can share a label once zone shifts are included,
/// so these are candidate sets rather than single states.
pub struct BenzeneStates {
    pub adapted: AdaptedSolution,
    pub dipoles: DipoleSet,
    pub zero: usize,
    pub band0: Vec<usize>,
    pub band1: Vec<(usize, i64)>,
}

pub fn benzene_states(f: f64) -> (ModelBundle, BenzeneStates) {
    let b = build_benzene(BENZENE_E0, BENZENE_J0, f, OMEGA).unwrap();
    let r6 = symmetry(&b, "R6").clone();
    let adapted = symmetry_adapt(&solve(&b), &r6).unwrap();
    let dipoles = dipole_elements(&adapted.solution, &b.probe, DEFAULT_HARMONICS).unwrap();
    let g = b.basis_index("g").unwrap();
    let u0 = adapted.solution.initial_modes();
    let zero = (0..b.dim())
        .max_by(|&x, &y| u0[(g, x)].norm().total_cmp(&u0[(g, y)].norm()))
        .unwrap();
    let labels = &adapted.labels;
    let allowed = |mu: usize, n: i64| mu != zero && rs_allowed(labels[mu], labels[zero], n, 6, r6.alpha_v);
    let band0 = (0..b.dim()).filter(|&mu| allowed(mu, 0)).collect();
    let band1 = (0..b.dim())
        .flat_map(|mu| [1, -1].into_iter().map(move |n| (mu, n)))
        .filter(|&(mu, n)| allowed(mu, n))
        .collect();
    (
        b,
        BenzeneStates {
            adapted,
            dipoles,
            zero,
            band0,
            band1,
        },
    )
}

/// Parity-labelled signed quasienergy gap `eps(m = 0) - eps(m = 1)` of the
/// driven two-level system.
pub fn tls_signed_gap(h_x: f64, f: f64) -> f64 {
    let b = build_tls(h_x, f, OMEGA).unwrap();
    let adapted = symmetry_adapt(&solve(&b), symmetry(&b, "R2")).unwrap();
    let even = adapted.labels.iter().position(|&m| m == 0).unwrap();
    let odd = adapted.labels.iter().position(|&m| m == 1).unwrap();
    fold(adapted.solution.quasienergies[even] - adapted.solution.quasienergies[odd], OMEGA)
}

/// Drive amplitude of the parity crossing near the first zero of `J0`.
pub fn tls_crossing(h_x: f64) -> f64 {
    bisect(2.3, 2.5, 1e-12, |f| tls_signed_gap(h_x, f))
}

/// Random Hermitian `dim x dim` matrix with entries of order one.
pub fn random_hermitian(rng: &mut impl Rng, dim: usize) -> CMatrix {
    let a = CMatrix::from_fn(dim, dim, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    (&a + a.adjoint()).scale(0.5)
}

/// Random single-harmonic Hamiltonian `H0 + H1 e^{i Omega t} + h.c.` with
/// `||H0|| + 2 ||H1|| <= max_norm` (Frobenius norms).
pub fn random_single_harmonic(rng: &mut impl Rng, dim: usize, max_norm: f64) -> PeriodicHamiltonian {
    let h0 = random_hermitian(rng, dim);
    let h1 = CMatrix::from_fn(dim, dim, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let total = h0.norm() + 2.0 * h1.norm();
    let scale = max_norm * rng.random_range(0.2..1.0) / total;
    let h1 = h1.scale(scale);
    PeriodicHamiltonian::new(
        OMEGA,
        BTreeMap::from([(-1, h1.adjoint()), (0, h0.scale(scale)), (1, h1)]),
    )
    .unwrap()
}

/// Circular distance between two quasienergies.
pub fn zone_distance(a: f64, b: f64) -> f64 {
    fold(a - b, OMEGA).abs()
}

pub fn overlap(a: &FloquetSolution, mu: usize, b: &FloquetSolution, nu: usize) -> f64 {
    let x = a.initial_modes().column(mu);
    let y = b.initial_modes().column(nu);
    x.iter().zip(y.iter()).map(|(p, q)| p.conj() * q).sum::<Complex64>().norm()
}
