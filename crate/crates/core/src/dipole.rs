//! Dynamical dipole elements
//! `V^(n)_{mu,nu} = (1/tau) int_0^tau <u_mu(t)|V|u_nu(t)> exp(-i n Omega t) dt`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::floquet::{forward_fft, FloquetSolution};
use crate::linalg::{CMatrix, ZERO};
use crate::models::ProbeOperator;

pub const DEFAULT_HARMONICS: usize = 20;

/// Decay ratio above which the harmonic cutoff is flagged as inadequate.
pub const CUTOFF_DECAY_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct DipoleSet {
    /// Cutoff `M`; harmonics `-M..=M` are stored.
    pub harmonics: usize,
    /// `elements[n + M][(mu, nu)] = V^(n)_{mu,nu}`.
    pub elements: Vec<CMatrix>,
    pub omega: f64,
    /// `max |V^(+-M)| / max |V^(0)|`.
    pub decay_ratio: f64,
}

impl DipoleSet {
    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }

    /// `V^(n)` as a matrix; panics when `|n| > M`.
    pub fn harmonic(&self, n: i64) -> &CMatrix {
        let idx = n + self.harmonics as i64;
        assert!(
            (0..self.elements.len() as i64).contains(&idx),
            "harmonic {n} outside cutoff {}",
            self.harmonics
        );
        &self.elements[idx as usize]
    }

    pub fn get(&self, n: i64, mu: usize, nu: usize) -> num_complex::Complex64 {
        self.harmonic(n)[(mu, nu)]
    }

    /// Largest `|V^(n)_{mu,nu}|` over all stored entries.
    pub fn max_abs(&self) -> f64 {
        self.elements
            .iter()
            .flat_map(|m| m.iter())
            .fold(0.0, |acc, z| acc.max(z.norm()))
    }

    /// False when the outermost harmonics are not negligible.
    pub fn cutoff_adequate(&self) -> bool {
        self.decay_ratio < CUTOFF_DECAY_TOL
    }

    /// `max |V^(n)_{mu,nu} - conj(V^(-n)_{nu,mu})|`.
    pub fn conjugation_residual(&self) -> f64 {
        let m = self.harmonics as i64;
        let dim = self.dim();
        let mut worst = 0.0_f64;
        for n in -m..=m {
            let a = self.harmonic(n);
            let b = self.harmonic(-n);
            for mu in 0..dim {
                for nu in 0..dim {
                    worst = worst.max((a[(mu, nu)] - b[(nu, mu)].conj()).norm());
                }
            }
        }
        worst
    }
}

/// Time series `<u_mu(t_j)|V|u_nu(t_j)>` on the stored grid.
fn matrix_element_series(sol: &FloquetSolution, probe: &ProbeOperator) -> Vec<CMatrix> {
    sol.modes
        .par_iter()
        .map(|m| m.adjoint() * &probe.matrix * m)
        .collect()
}

/// Dynamical dipole elements for harmonics `-harmonics..=harmonics`.
pub fn dipole_elements(
    sol: &FloquetSolution,
    probe: &ProbeOperator,
    harmonics: usize,
) -> Result<DipoleSet> {
    let samples = sol.time_samples();
    if 2 * harmonics >= samples {
        return Err(Error::Nyquist {
            harmonics,
            time_samples: samples,
        });
    }
    let dim = sol.dim();
    if probe.dim() != dim {
        return Err(Error::Dimension {
            expected: dim,
            found: probe.dim(),
        });
    }

    let series = matrix_element_series(sol, probe);
    let fft = forward_fft(samples);
    let norm = 1.0 / samples as f64;
    let mut elements = vec![CMatrix::zeros(dim, dim); 2 * harmonics + 1];
    let mut buffer = vec![ZERO; samples];
    for mu in 0..dim {
        for nu in 0..dim {
            for (z, x) in buffer.iter_mut().zip(&series) {
                *z = x[(mu, nu)];
            }
            fft.process(&mut buffer);
            for n in -(harmonics as i64)..=(harmonics as i64) {
                let bin = n.rem_euclid(samples as i64) as usize;
                elements[(n + harmonics as i64) as usize][(mu, nu)] = buffer[bin] * norm;
            }
        }
    }

    let max_of = |m: &CMatrix| m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
    let edge = max_of(&elements[0]).max(max_of(&elements[2 * harmonics]));
    let reference = elements.iter().map(max_of).fold(0.0, f64::max);
    let decay_ratio = if harmonics == 0 || reference == 0.0 {
        0.0
    } else {
        edge / reference
    };
    if decay_ratio >= CUTOFF_DECAY_TOL {
        log::warn!(
            "dipole harmonic cutoff {harmonics} may be too small (edge/peak ratio {decay_ratio:.2e})"
        );
    }

    Ok(DipoleSet {
        harmonics,
        elements,
        omega: sol.omega,
        decay_ratio,
    })
}

/// `max_{mu,nu} |sum_n |V^(n)|^2 - (1/S) sum_j |<u_mu(t_j)|V|u_nu(t_j)>|^2|`.
pub fn parseval_residual(ds: &DipoleSet, sol: &FloquetSolution, probe: &ProbeOperator) -> f64 {
    let series = matrix_element_series(sol, probe);
    let samples = series.len() as f64;
    let dim = ds.dim();
    let mut worst = 0.0_f64;
    for mu in 0..dim {
        for nu in 0..dim {
            let spectral: f64 = ds.elements.iter().map(|m| m[(mu, nu)].norm_sqr()).sum();
            let temporal: f64 = series.iter().map(|m| m[(mu, nu)].norm_sqr()).sum::<f64>() / samples;
            worst = worst.max((spectral - temporal).abs());
        }
    }
    worst
}
