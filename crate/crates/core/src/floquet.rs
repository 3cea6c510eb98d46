//! Floquet eigenproblem solvers.
//!
//! Two independent routes to quasienergies and Floquet modes:
//!
//! * [`floquet_solve`] propagates one period with a fourth-order
//!   commutator-free exponential integrator and diagonalizes the monodromy
//!   matrix `U(tau, 0)` (primary method);
//! * [`extended_space_solve`] diagonalizes the truncated quasienergy operator
//!   on the harmonic lattice, `(H_F)_{k,k'} = H_{k-k'} + k Omega delta_{kk'}`.
//!
//! Both return a [`FloquetSolution`] with the same conventions: quasienergies
//! folded into `[-Omega/2, Omega/2)` and sorted ascending, modes sampled on
//! `t_j = j tau / time_samples`, and the global phase of each mode fixed by
//! making the largest component of `|u(0)>` real and positive.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::linalg::Schur;
use nalgebra::DVector;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, cis, CMatrix, ZERO};
use crate::models::PeriodicHamiltonian;

/// Quasienergies closer than this (in units of Omega) are treated as degenerate
/// when ordering modes.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Largest allowed off-diagonal entry of the monodromy Schur form.
const DEFECT_TOL: f64 = 1e-8;

/// Largest allowed population of the outermost harmonic blocks.
const EDGE_POPULATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Propagation substeps per period.
    pub time_steps: usize,
    /// Stored grid points per period; must divide `time_steps`.
    pub time_samples: usize,
    /// Harmonic truncation of the extended-space solver.
    pub harmonic_cutoff: usize,
    pub unitarity_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            time_steps: 4096,
            time_samples: 512,
            harmonic_cutoff: 30,
            unitarity_tol: 1e-10,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.time_steps == 0 || self.time_samples == 0 {
            return Err(Error::Validation(
                "time_steps and time_samples must be positive".into(),
            ));
        }
        if self.time_steps % self.time_samples != 0 {
            return Err(Error::Validation(format!(
                "time_samples ({}) must divide time_steps ({})",
                self.time_samples, self.time_steps
            )));
        }
        if self.harmonic_cutoff == 0 {
            return Err(Error::Validation("harmonic_cutoff must be positive".into()));
        }
        if !(self.unitarity_tol > 0.0) {
            return Err(Error::Validation("unitarity_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Quasienergies and time-sampled Floquet modes of one periodic Hamiltonian.
#[derive(Debug, Clone)]
pub struct FloquetSolution {
    /// Folded into `[-Omega/2, Omega/2)`, ascending.
    pub quasienergies: Vec<f64>,
    /// `modes[j]` holds `|u_mu(t_j)>` in column `mu`.
    pub modes: Vec<CMatrix>,
    pub monodromy: CMatrix,
    pub omega: f64,
}

/// Residuals of the structural invariants of a [`FloquetSolution`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantResiduals {
    pub unitarity: f64,
    pub orthonormality: f64,
    pub periodicity: f64,
}

impl FloquetSolution {
    pub fn dim(&self) -> usize {
        self.quasienergies.len()
    }

    pub fn time_samples(&self) -> usize {
        self.modes.len()
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn sample_time(&self, j: usize) -> f64 {
        self.period() * j as f64 / self.time_samples() as f64
    }

    /// `|u_mu(t_j)>`.
    pub fn mode(&self, mu: usize, j: usize) -> DVector<Complex64> {
        self.modes[j].column(mu).into_owned()
    }

    /// Columns `|u_mu(0)>`.
    pub fn initial_modes(&self) -> &CMatrix {
        &self.modes[0]
    }

    pub fn invariant_residuals(&self) -> InvariantResiduals {
        let unitarity = linalg::unitarity_residual(&self.monodromy);
        let orthonormality = self
            .modes
            .iter()
            .map(linalg::unitarity_residual)
            .fold(0.0, f64::max);
        let tau = self.period();
        let u0 = self.initial_modes();
        let mut propagated = &self.monodromy * u0;
        for (mu, eps) in self.quasienergies.iter().enumerate() {
            let phase = cis(eps * tau);
            for z in propagated.column_mut(mu).iter_mut() {
                *z *= phase;
            }
        }
        let periodicity = linalg::max_abs_diff(&propagated, u0);
        InvariantResiduals {
            unitarity,
            orthonormality,
            periodicity,
        }
    }

    /// Fourier coefficients of every mode on the stored grid.
    pub fn harmonics(&self) -> ModeHarmonics {
        ModeHarmonics::new(self)
    }

    /// Spectral (band-limited) interpolation of all modes to an arbitrary time.
    pub fn modes_at(&self, t: f64) -> CMatrix {
        self.harmonics().modes_at(t)
    }

    /// Restricts to the permutation `order` (new column `i` is old `order[i]`).
    pub fn permuted(&self, order: &[usize]) -> FloquetSolution {
        let quasienergies = order.iter().map(|&i| self.quasienergies[i]).collect();
        let modes = self
            .modes
            .iter()
            .map(|m| CMatrix::from_fn(m.nrows(), order.len(), |r, c| m[(r, order[c])]))
            .collect();
        FloquetSolution {
            quasienergies,
            modes,
            monodromy: self.monodromy.clone(),
            omega: self.omega,
        }
    }
}

/// Fourier coefficients `c_{mu,k}` of the sampled modes,
/// `|u_mu(t)> = sum_k c_{mu,k} exp(i k Omega t)`, for `k` in
/// `[-S/2, S/2)` with `S` the number of samples.
#[derive(Debug, Clone)]
pub struct ModeHarmonics {
    /// `coeffs[idx]` holds column vectors `c_{mu,k}` for `k = ks[idx]`.
    pub coeffs: Vec<CMatrix>,
    pub ks: Vec<i64>,
    pub omega: f64,
}

impl ModeHarmonics {
    pub fn new(sol: &FloquetSolution) -> Self {
        let samples = sol.time_samples();
        let dim = sol.dim();
        let rows = sol.modes[0].nrows();
        let fft = forward_fft(samples);
        let mut coeffs = vec![CMatrix::zeros(rows, dim); samples];
        let mut buffer = vec![ZERO; samples];
        let norm = 1.0 / samples as f64;
        for r in 0..rows {
            for mu in 0..dim {
                for (j, z) in buffer.iter_mut().enumerate() {
                    *z = sol.modes[j][(r, mu)];
                }
                fft.process(&mut buffer);
                for (bin, z) in buffer.iter().enumerate() {
                    coeffs[bin][(r, mu)] = z * norm;
                }
            }
        }
        let ks: Vec<i64> = (0..samples).map(|bin| signed_bin(bin, samples)).collect();
        Self {
            coeffs,
            ks,
            omega: sol.omega,
        }
    }

    pub fn modes_at(&self, t: f64) -> CMatrix {
        let mut out = CMatrix::zeros(self.coeffs[0].nrows(), self.coeffs[0].ncols());
        for (k, c) in self.ks.iter().zip(&self.coeffs) {
            out += c * cis(*k as f64 * self.omega * t);
        }
        out
    }

    /// Time average of `<u_mu(t)| op |u_nu(t + shift)>` over one period.
    pub fn shifted_overlap(&self, op: &CMatrix, shift: f64) -> CMatrix {
        let dim = self.coeffs[0].ncols();
        let mut out = CMatrix::zeros(dim, dim);
        for (k, c) in self.ks.iter().zip(&self.coeffs) {
            out += c.adjoint() * op * c * cis(*k as f64 * self.omega * shift);
        }
        out
    }
}

/// Maps an FFT bin to its signed harmonic index in `[-S/2, S/2)`.
pub(crate) fn signed_bin(bin: usize, samples: usize) -> i64 {
    if bin < samples.div_ceil(2) {
        bin as i64
    } else {
        bin as i64 - samples as i64
    }
}

pub(crate) fn forward_fft(len: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_forward(len)
}

/// Maps an energy into the first Brillouin zone `[-Omega/2, Omega/2)`.
pub fn fold(e: f64, omega: f64) -> f64 {
    let mut r = e - omega * (e / omega).round();
    if r >= 0.5 * omega {
        r -= omega;
    } else if r < -0.5 * omega {
        r += omega;
    }
    r
}

// Gauss-point commutator-free fourth-order scheme (two exponentials per step).
const SQRT3: f64 = 1.732_050_807_568_877_2;
const NODE_1: f64 = 0.5 - SQRT3 / 6.0;
const NODE_2: f64 = 0.5 + SQRT3 / 6.0;
const WEIGHT_A: f64 = (3.0 - 2.0 * SQRT3) / 12.0;
const WEIGHT_B: f64 = (3.0 + 2.0 * SQRT3) / 12.0;

/// One CF4 step `U(t + dt, t)`.
fn cf4_step(h: &PeriodicHamiltonian, t: f64, dt: f64) -> CMatrix {
    let h1 = h.evaluate(t + NODE_1 * dt);
    let h2 = h.evaluate(t + NODE_2 * dt);
    let first = linalg::expm_hermitian(&(h1.scale(WEIGHT_B) + h2.scale(WEIGHT_A)), dt);
    let second = linalg::expm_hermitian(&(h1.scale(WEIGHT_A) + h2.scale(WEIGHT_B)), dt);
    second * first
}

/// Propagates over one period, returning `U(t_j, 0)` on the sample grid and
/// `U(tau, 0)`.
fn propagate(
    h: &PeriodicHamiltonian,
    time_steps: usize,
    time_samples: usize,
) -> (Vec<CMatrix>, CMatrix) {
    let tau = h.period();
    let dt = tau / time_steps as f64;
    let per_sample = time_steps / time_samples;
    let mut u = linalg::identity(h.dim());
    let mut samples = Vec::with_capacity(time_samples);
    for step in 0..time_steps {
        if step % per_sample == 0 {
            samples.push(u.clone());
        }
        u = cf4_step(h, step as f64 * dt, dt) * u;
    }
    (samples, u)
}

fn check_unitarity(u: &CMatrix, cfg: &SolverConfig) -> Result<()> {
    let residual = linalg::unitarity_residual(u);
    if residual > cfg.unitarity_tol || !residual.is_finite() {
        return Err(Error::SolverAccuracy {
            residual,
            time_steps: cfg.time_steps,
        });
    }
    Ok(())
}

/// One-period propagator `U(tau, 0)`.
pub fn monodromy(h: &PeriodicHamiltonian, cfg: &SolverConfig) -> Result<CMatrix> {
    cfg.validate()?;
    let (_, u) = propagate(h, cfg.time_steps, cfg.time_samples);
    check_unitarity(&u, cfg)?;
    Ok(u)
}

/// Richardson-style error estimate for the monodromy at `cfg.time_steps`:
/// `max |U_N - U_{N/2}| / 15` for the fourth-order scheme.
pub fn monodromy_error_estimate(h: &PeriodicHamiltonian, cfg: &SolverConfig) -> Result<f64> {
    cfg.validate()?;
    if cfg.time_steps < 2 || cfg.time_steps % 2 != 0 {
        return Err(Error::Validation(
            "error estimate needs an even number of time steps".into(),
        ));
    }
    let (_, fine) = propagate(h, cfg.time_steps, 1);
    let (_, coarse) = propagate(h, cfg.time_steps / 2, 1);
    Ok(linalg::max_abs_diff(&fine, &coarse) / 15.0)
}

/// Solves the Floquet problem by diagonalizing the monodromy matrix.
pub fn floquet_solve(h: &PeriodicHamiltonian, cfg: &SolverConfig) -> Result<FloquetSolution> {
    cfg.validate()?;
    let omega = h.omega();
    let tau = h.period();
    let (propagators, u_tau) = propagate(h, cfg.time_steps, cfg.time_samples);
    check_unitarity(&u_tau, cfg)?;

    let (q, t) = Schur::new(u_tau.clone()).unpack();
    let dim = h.dim();
    let mut defect = 0.0_f64;
    for i in 0..dim {
        for j in (i + 1)..dim {
            defect = defect.max(t[(i, j)].norm());
        }
    }
    if defect > DEFECT_TOL {
        return Err(Error::DefectiveMonodromy { residual: defect });
    }

    // U(tau) |u(0)> = exp(-i eps tau) |u(0)>
    let quasienergies: Vec<f64> = (0..dim).map(|i| fold(-t[(i, i)].arg() / tau, omega)).collect();

    let modes = propagators
        .iter()
        .enumerate()
        .map(|(j, u_t)| {
            let time = tau * j as f64 / cfg.time_samples as f64;
            let mut m = u_t * &q;
            for (mu, eps) in quasienergies.iter().enumerate() {
                let phase = cis(eps * time);
                for z in m.column_mut(mu).iter_mut() {
                    *z *= phase;
                }
            }
            m
        })
        .collect();

    Ok(canonicalize(quasienergies, modes, u_tau, omega))
}

/// Solves the Floquet problem on the truncated harmonic lattice.
pub fn extended_space_solve(
    h: &PeriodicHamiltonian,
    cfg: &SolverConfig,
) -> Result<FloquetSolution> {
    cfg.validate()?;
    let omega = h.omega();
    let dim = h.dim();
    let cutoff = cfg.harmonic_cutoff as i64;
    let blocks = (2 * cutoff + 1) as usize;
    let size = dim * blocks;

    let mut hf = CMatrix::zeros(size, size);
    for bk in 0..blocks {
        let k = bk as i64 - cutoff;
        for bl in 0..blocks {
            let l = bl as i64 - cutoff;
            if let Some(block) = h.component((k - l) as i32) {
                hf.view_mut((bk * dim, bl * dim), (dim, dim)).copy_from(block);
            }
        }
        for i in 0..dim {
            hf[(bk * dim + i, bk * dim + i)] += k as f64 * omega;
        }
    }
    let eig = hf.symmetric_eigen();

    // Place the zone window in a spectral gap so each physical state is
    // picked exactly once.
    let mut folded: Vec<f64> = eig
        .eigenvalues
        .iter()
        .filter(|e| e.abs() <= 1.5 * omega)
        .map(|&e| fold(e, omega))
        .collect();
    folded.sort_by(f64::total_cmp);
    let window_start = window_start(&folded, omega);
    let selected: Vec<usize> = (0..size)
        .filter(|&i| {
            let e = eig.eigenvalues[i];
            e >= window_start && e < window_start + omega
        })
        .collect();
    if selected.len() != dim {
        return Err(Error::Truncation {
            edge_population: f64::NAN,
            cutoff: cfg.harmonic_cutoff,
        });
    }

    let tau = h.period();
    let samples = cfg.time_samples;
    let mut quasienergies = Vec::with_capacity(dim);
    let mut modes = vec![CMatrix::zeros(dim, dim); samples];
    for (mu, &idx) in selected.iter().enumerate() {
        let vec = eig.eigenvectors.column(idx);
        let edge: f64 = (0..dim)
            .map(|i| vec[i].norm_sqr() + vec[(blocks - 1) * dim + i].norm_sqr())
            .sum();
        if edge > EDGE_POPULATION_TOL {
            return Err(Error::Truncation {
                edge_population: edge,
                cutoff: cfg.harmonic_cutoff,
            });
        }
        let e = eig.eigenvalues[idx];
        let eps = fold(e, omega);
        let shift = ((e - eps) / omega).round() as i64;
        quasienergies.push(eps);
        for (j, m) in modes.iter_mut().enumerate() {
            let t = tau * j as f64 / samples as f64;
            for bk in 0..blocks {
                let k = bk as i64 - cutoff;
                let phase = cis((k - shift) as f64 * omega * t);
                for i in 0..dim {
                    m[(i, mu)] += vec[bk * dim + i] * phase;
                }
            }
        }
    }

    let q0 = modes[0].clone();
    let mut diag = CMatrix::zeros(dim, dim);
    for (mu, eps) in quasienergies.iter().enumerate() {
        diag[(mu, mu)] = cis(-eps * tau);
    }
    let monodromy = &q0 * diag * q0.adjoint();
    Ok(canonicalize(quasienergies, modes, monodromy, omega))
}

/// Start of a one-zone window `[a, a + Omega)` placed in a gap of the folded
/// spectrum, preferring the zone boundary.
fn window_start(sorted_folded: &[f64], omega: f64) -> f64 {
    let n = sorted_folded.len();
    if n == 0 {
        return -0.5 * omega;
    }
    let wrap_gap = sorted_folded[0] + omega - sorted_folded[n - 1];
    if wrap_gap > 1e-6 * omega || n == 1 {
        return 0.5 * (sorted_folded[n - 1] + sorted_folded[0] + omega) - omega;
    }
    let (i, _) = sorted_folded
        .windows(2)
        .map(|w| w[1] - w[0])
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, g)| {
            if g > best.1 {
                (i, g)
            } else {
                best
            }
        });
    0.5 * (sorted_folded[i] + sorted_folded[i + 1])
}

/// Index of the component that fixes the phase of `v`: the first one whose
/// modulus is within a relative `1e-6` of the maximum.
pub(crate) fn gauge_index(v: impl Iterator<Item = Complex64> + Clone) -> usize {
    let max = v.clone().fold(0.0_f64, |acc, z| acc.max(z.norm()));
    v.into_iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-6))
        .unwrap_or(0)
}

/// Applies the phase gauge and the deterministic ordering shared by both
/// solvers.
pub(crate) fn canonicalize(
    quasienergies: Vec<f64>,
    mut modes: Vec<CMatrix>,
    monodromy: CMatrix,
    omega: f64,
) -> FloquetSolution {
    let dim = quasienergies.len();
    for mu in 0..dim {
        let col0 = modes[0].column(mu);
        let idx = gauge_index(col0.iter().copied());
        let z = col0[idx];
        let phase = if z.norm() > 0.0 { z.conj() / z.norm() } else { Complex64::new(1.0, 0.0) };
        for m in modes.iter_mut() {
            for x in m.column_mut(mu).iter_mut() {
                *x *= phase;
            }
        }
    }

    let first_nonzero = |mu: usize| {
        modes[0]
            .column(mu)
            .iter()
            .find(|z| z.norm() > 1e-12)
            .map_or(0.0, |z| z.norm())
    };
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| quasienergies[a].total_cmp(&quasienergies[b]));
    let mut start = 0;
    while start < dim {
        let mut end = start + 1;
        while end < dim
            && quasienergies[order[end]] - quasienergies[order[end - 1]] < DEGENERACY_TOL * omega
        {
            end += 1;
        }
        order[start..end].sort_by(|&a, &b| first_nonzero(b).total_cmp(&first_nonzero(a)));
        start = end;
    }

    FloquetSolution {
        quasienergies,
        modes,
        monodromy,
        omega,
    }
    .permuted(&order)
}

/// Band continuation between two neighbouring solutions of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchMatch {
    /// `permutation[mu]` is the state of `next` continuing state `mu` of `prev`.
    pub permutation: Vec<usize>,
    /// `|<u_mu^prev(0)|u_{pi(mu)}^next(0)>|`.
    pub overlaps: Vec<f64>,
    /// Set when some state had no partner above the overlap threshold.
    pub discontinuous: bool,
}

const BRANCH_OVERLAP_THRESHOLD: f64 = 0.5;

/// Greedy best-overlap continuation of the bands of `prev` into `next`.
pub fn match_branches(prev: &FloquetSolution, next: &FloquetSolution) -> BranchMatch {
    let dim = prev.dim();
    let overlap = prev.initial_modes().adjoint() * next.initial_modes();
    let mut candidates: Vec<(f64, usize, usize)> = (0..dim)
        .flat_map(|a| (0..dim).map(move |b| (a, b)))
        .map(|(a, b)| (overlap[(a, b)].norm(), a, b))
        .filter(|(o, _, _)| *o > BRANCH_OVERLAP_THRESHOLD)
        .collect();
    candidates.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    let mut permutation = vec![usize::MAX; dim];
    let mut taken = vec![false; dim];
    for (_, a, b) in candidates {
        if permutation[a] == usize::MAX && !taken[b] {
            permutation[a] = b;
            taken[b] = true;
        }
    }
    let mut discontinuous = false;
    for a in 0..dim {
        if permutation[a] != usize::MAX {
            continue;
        }
        discontinuous = true;
        let b = if !taken[a] {
            a
        } else {
            (0..dim).find(|&b| !taken[b]).expect("a free slot remains")
        };
        permutation[a] = b;
        taken[b] = true;
    }
    let overlaps = (0..dim).map(|a| overlap[(a, permutation[a])].norm()).collect();
    BranchMatch {
        permutation,
        overlaps,
        discontinuous,
    }
}
