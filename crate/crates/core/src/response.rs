//! Band-resolved Floquet susceptibility and the coherent intensity change.
//!
//! For a stationary state diagonal in the Floquet basis with populations
//! `p_mu`, the response at signal frequency `omega_p + n Omega` is
//!
//! ```text
//! chi_n(w) = i lambda^2 sum_{nu,mu,m} V^(-n-m)_{nu,mu} V^(m)_{mu,nu} (p_nu - p_mu)
//!                                     / (eps_mu - eps_nu + m Omega - w - i gamma)
//! ```
//!
//! with a uniform phenomenological broadening `gamma`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dipole::DipoleSet;
use crate::error::{Error, Result};
use crate::floquet::FloquetSolution;
use crate::linalg::{c, I};

const NORMALIZATION_TOL: f64 = 1e-12;

/// Floquet-state occupations of the stationary state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Populations {
    values: Vec<f64>,
}

impl Populations {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Validation("populations must not be empty".into()));
        }
        if let Some(p) = values.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::Validation(format!(
                "populations must be non-negative, got {p}"
            )));
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Validation(format!(
                "populations must sum to 1, got {total}"
            )));
        }
        Ok(Self { values })
    }

    pub fn uniform(dim: usize) -> Self {
        Self {
            values: vec![1.0 / dim as f64; dim],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Floquet-Gibbs weights `p_mu ~ exp(-beta eps_mu)` over folded quasienergies.
pub fn floquet_gibbs(sol: &FloquetSolution, beta: f64) -> Populations {
    let eps = &sol.quasienergies;
    let min = eps.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = eps.iter().map(|e| (-beta * (e - min)).exp()).collect();
    let total: f64 = weights.iter().sum();
    Populations {
        values: weights.into_iter().map(|w| w / total).collect(),
    }
}

/// Occupations of the diagonal part of `|b><b|` for basis state `b`:
/// `p_mu = |<b|u_mu(0)>|^2`.
pub fn basis_state_populations(sol: &FloquetSolution, basis_index: usize) -> Result<Populations> {
    let dim = sol.dim();
    if basis_index >= dim {
        return Err(Error::Validation(format!(
            "basis index {basis_index} out of range for dimension {dim}"
        )));
    }
    let u0 = sol.initial_modes();
    let weights: Vec<f64> = (0..dim).map(|mu| u0[(basis_index, mu)].norm_sqr()).collect();
    let total: f64 = weights.iter().sum();
    Populations::new(weights.into_iter().map(|w| w / total).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResponseConfig {
    /// Uniform broadening (energy units).
    pub gamma: f64,
    /// Probe coupling.
    pub lambda: f64,
    /// Summation range `|m| <= m_cutoff`.
    pub m_cutoff: usize,
    pub bands: Vec<i64>,
}

impl Default for ResponseConfig {
    fn default() -> Self {
        Self {
            gamma: 0.002,
            lambda: 1.0,
            m_cutoff: 10,
            bands: vec![0],
        }
    }
}

impl ResponseConfig {
    pub fn validate(&self, dipole_harmonics: usize) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::Validation(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::Validation(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        let widest = self.bands.iter().map(|n| n.unsigned_abs() as usize).max().unwrap_or(0);
        let needed = self.m_cutoff + widest;
        if needed > dipole_harmonics {
            return Err(Error::Cutoff {
                needed,
                available: dipole_harmonics,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponseSpectrum {
    pub band: i64,
    pub omega_p_grid: Vec<f64>,
    pub chi: Vec<Complex64>,
    pub config: ResponseConfig,
}

impl ResponseSpectrum {
    pub fn max_abs(&self) -> f64 {
        self.chi.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }
}

/// Uniform grid of `count` points on `[start, stop]`.
pub fn linear_grid(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Resonance `(pole, weight)` pairs of `chi_n`, i.e.
/// `chi_n(w) = i lambda^2 sum weight / (pole - w - i gamma)`.
fn resonances(
    ds: &DipoleSet,
    sol: &FloquetSolution,
    pops: &Populations,
    m_cutoff: usize,
    band: i64,
) -> Vec<(f64, Complex64)> {
    let dim = sol.dim();
    let p = pops.values();
    let eps = &sol.quasienergies;
    let m_max = m_cutoff as i64;
    let mut out = Vec::with_capacity(dim * dim * (2 * m_cutoff + 1));
    for m in -m_max..=m_max {
        let left = ds.harmonic(-band - m);
        let right = ds.harmonic(m);
        for nu in 0..dim {
            for mu in 0..dim {
                let weight = left[(nu, mu)] * right[(mu, nu)] * (p[nu] - p[mu]);
                let pole = eps[mu] - eps[nu] + m as f64 * sol.omega;
                out.push((pole, weight));
            }
        }
    }
    out
}

/// Susceptibility `chi_n(omega_p)` of Floquet band `band` on a probe grid.
pub fn susceptibility(
    ds: &DipoleSet,
    sol: &FloquetSolution,
    pops: &Populations,
    cfg: &ResponseConfig,
    band: i64,
    omega_p_grid: &[f64],
) -> Result<ResponseSpectrum> {
    let needed = cfg.m_cutoff + band.unsigned_abs() as usize;
    if needed > ds.harmonics {
        return Err(Error::Cutoff {
            needed,
            available: ds.harmonics,
        });
    }
    if pops.dim() != sol.dim() || ds.dim() != sol.dim() {
        return Err(Error::Dimension {
            expected: sol.dim(),
            found: pops.dim().min(ds.dim()),
        });
    }
    if !(cfg.gamma > 0.0) {
        return Err(Error::Validation("gamma must be > 0".into()));
    }
    let terms = resonances(ds, sol, pops, cfg.m_cutoff, band);
    let prefactor = I * cfg.lambda * cfg.lambda;
    let gamma = cfg.gamma;
    let chi = omega_p_grid
        .par_iter()
        .map(|&w| {
            let sum: Complex64 = terms
                .iter()
                .map(|(pole, weight)| weight / c(pole - w, -gamma))
                .sum();
            prefactor * sum
        })
        .collect();
    Ok(ResponseSpectrum {
        band,
        omega_p_grid: omega_p_grid.to_vec(),
        chi,
        config: cfg.clone(),
    })
}

/// Coherent intensity change `-i chi <a_s^dag a_p> + c.c. = 2 Im(chi * coherence)`.
pub fn intensity_change(chi_value: Complex64, coherence: Complex64) -> f64 {
    let z = -I * chi_value * coherence;
    (z + z.conj()).re
}
