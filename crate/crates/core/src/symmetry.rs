//! Dynamical symmetries of periodically driven systems and the spectroscopic
//! selection rules they imply.
//!
//! A dynamical symmetry combines a spatial operator `S` (unitary, or
//! antiunitary `U K`) with a time shift `t_S` and the signs `(alpha_S, beta_S)`:
//! `S H(t_S + beta_S t) S^-1 = alpha_S H(t)`. The four classes are rotational
//! (RS), particle-hole (PHS), chiral (CS) and time-reversal (TRS).

use std::collections::BTreeSet;
use std::f64::consts::PI;

use nalgebra::linalg::Schur;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dipole::{dipole_elements, DipoleSet};
use crate::error::{Error, Result};
use crate::floquet::{fold, gauge_index, FloquetSolution};
use crate::linalg::{self, cis, CMatrix};
use crate::models::{ModelBundle, PeriodicHamiltonian};

/// Unitarity tolerance for symmetry operators.
pub const OPERATOR_TOL: f64 = 1e-10;
/// Default residual tolerance of [`verify_symmetry`].
pub const VERIFY_TOL: f64 = 1e-10;
pub const VERIFY_SAMPLES: usize = 64;
/// Allowed distance of a rotation eigenvalue from the nearest root of unity.
pub const SNAP_TOL: f64 = 1e-6;
/// Quasienergy separation (in units of `Omega`) below which states are
/// treated as degenerate when resolving symmetry labels.
pub const CLUSTER_TOL: f64 = 1e-7;
/// Tolerance of the siT dipole relation.
pub const SIT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SymmetryKind {
    #[serde(rename = "RS")]
    Rotational,
    #[serde(rename = "PHS")]
    ParticleHole,
    #[serde(rename = "CS")]
    Chiral,
    #[serde(rename = "TRS")]
    TimeReversal,
}

impl SymmetryKind {
    /// `(alpha_S, beta_S)`.
    pub fn signs(self) -> (i8, i8) {
        match self {
            SymmetryKind::Rotational => (1, 1),
            SymmetryKind::ParticleHole => (-1, 1),
            SymmetryKind::Chiral => (-1, -1),
            SymmetryKind::TimeReversal => (1, -1),
        }
    }

    pub fn antiunitary(self) -> bool {
        matches!(self, SymmetryKind::ParticleHole | SymmetryKind::TimeReversal)
    }

    pub fn label(self) -> &'static str {
        match self {
            SymmetryKind::Rotational => "RS",
            SymmetryKind::ParticleHole => "PHS",
            SymmetryKind::Chiral => "CS",
            SymmetryKind::TimeReversal => "TRS",
        }
    }
}

/// One dynamical symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetrySpec {
    pub kind: SymmetryKind,
    pub name: String,
    /// `R`, `P`, `C` or `T`; for antiunitary kinds the unitary part `U` of `U K`.
    pub operator: CMatrix,
    /// Time shift as a fraction of the period, in `[0, 1)`.
    pub shift: f64,
    /// `N` for rotational symmetries, 1 otherwise.
    pub n_fold: u32,
    /// Probe sign: `S V S^-1 = alpha_v V`.
    pub alpha_v: i8,
}

impl SymmetrySpec {
    pub fn new(
        kind: SymmetryKind,
        name: impl Into<String>,
        operator: CMatrix,
        shift: f64,
        n_fold: u32,
        alpha_v: i8,
    ) -> Result<Self> {
        let name = name.into();
        if !(shift.is_finite() && (0.0..1.0).contains(&shift)) {
            return Err(Error::Validation(format!(
                "symmetry {name}: time shift {shift} must lie in [0, 1) periods"
            )));
        }
        if alpha_v != 1 && alpha_v != -1 {
            return Err(Error::Validation(format!(
                "symmetry {name}: alpha_v must be +1 or -1, got {alpha_v}"
            )));
        }
        if n_fold == 0 {
            return Err(Error::Validation(format!("symmetry {name}: n_fold must be >= 1")));
        }
        if kind == SymmetryKind::Rotational {
            if (shift - rotation_shift(n_fold)).abs() > 1e-12 {
                return Err(Error::Validation(format!(
                    "symmetry {name}: rotational time shift must be 1/{n_fold} of the period"
                )));
            }
        } else if n_fold != 1 {
            return Err(Error::Validation(format!(
                "symmetry {name}: n_fold only applies to rotational symmetries"
            )));
        }
        if !operator.is_square() {
            return Err(Error::Validation(format!("symmetry {name}: operator is not square")));
        }
        let residual = linalg::unitarity_residual(&operator);
        if residual > OPERATOR_TOL {
            return Err(Error::Validation(format!(
                "symmetry {name}: operator is not unitary (residual {residual:.3e})"
            )));
        }
        Ok(Self {
            kind,
            name,
            operator,
            shift,
            n_fold,
            alpha_v,
        })
    }

    /// `N`-fold rotational symmetry with `t_R = tau / N`.
    pub fn rotational(name: impl Into<String>, operator: CMatrix, n_fold: u32, alpha_v: i8) -> Result<Self> {
        let shift = rotation_shift(n_fold.max(1));
        Self::new(SymmetryKind::Rotational, name, operator, shift, n_fold, alpha_v)
    }

    pub fn particle_hole(name: impl Into<String>, operator: CMatrix, shift: f64, alpha_v: i8) -> Result<Self> {
        Self::new(SymmetryKind::ParticleHole, name, operator, shift, 1, alpha_v)
    }

    pub fn chiral(name: impl Into<String>, operator: CMatrix, shift: f64, alpha_v: i8) -> Result<Self> {
        Self::new(SymmetryKind::Chiral, name, operator, shift, 1, alpha_v)
    }

    pub fn time_reversal(name: impl Into<String>, operator: CMatrix, shift: f64, alpha_v: i8) -> Result<Self> {
        Self::new(SymmetryKind::TimeReversal, name, operator, shift, 1, alpha_v)
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.operator.nrows() != dim {
            return Err(Error::Dimension {
                expected: dim,
                found: self.operator.nrows(),
            });
        }
        Ok(())
    }

    pub fn antiunitary(&self) -> bool {
        self.kind.antiunitary()
    }

    /// Time shift in absolute units for drive frequency `omega`.
    pub fn t_shift(&self, omega: f64) -> f64 {
        self.shift * 2.0 * PI / omega
    }

    /// Whether `S V S^-1 = alpha_v V` holds for `probe`.
    pub fn probe_residual(&self, probe: &CMatrix) -> f64 {
        let u = &self.operator;
        let image = if self.antiunitary() {
            u * probe.map(|z| z.conj()) * u.adjoint()
        } else {
            u * probe * u.adjoint()
        };
        linalg::max_abs_diff(&image, &(probe * Complex64::from(f64::from(self.alpha_v))))
    }
}

fn rotation_shift(n_fold: u32) -> f64 {
    if n_fold <= 1 {
        0.0
    } else {
        1.0 / f64::from(n_fold)
    }
}

fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if (1.0 - r).abs() < 1e-12 {
        0.0
    } else {
        r
    }
}

// ---------------------------------------------------------------------------
// Verification

/// Samples `S H(t_S + beta t) S^-1 - alpha H(t)` at `samples` uniform times
/// and returns `(max residual < tol, max residual)`.
pub fn verify_symmetry(
    h: &PeriodicHamiltonian,
    s: &SymmetrySpec,
    samples: usize,
    tol: f64,
) -> Result<(bool, f64)> {
    s.validate(h.dim())?;
    if samples < 16 {
        return Err(Error::Validation(format!(
            "symmetry verification needs at least 16 samples, got {samples}"
        )));
    }
    let (alpha, beta) = s.kind.signs();
    let tau = h.period();
    let t_s = s.shift * tau;
    let u = &s.operator;
    let u_dag = u.adjoint();
    let mut worst = 0.0_f64;
    for j in 0..samples {
        let t = tau * j as f64 / samples as f64;
        let mut image = h.evaluate(t_s + f64::from(beta) * t);
        if s.antiunitary() {
            image = image.map(|z| z.conj());
        }
        let lhs = u * image * &u_dag;
        let rhs = h.evaluate(t) * Complex64::from(f64::from(alpha));
        worst = worst.max(linalg::max_abs_diff(&lhs, &rhs));
    }
    Ok((worst < tol, worst))
}

// ---------------------------------------------------------------------------
// Rotational symmetry

/// A solution whose modes diagonalize a unitary symmetry inside every
/// degenerate block, with the corresponding rotation labels.
#[derive(Debug, Clone)]
pub struct AdaptedSolution {
    pub solution: FloquetSolution,
    /// `m_mu` in `0..N`.
    pub labels: Vec<u32>,
    /// Unsnapped eigenvalues `pi_mu`.
    pub eigenvalues: Vec<Complex64>,
}

/// Groups state indices of a sorted quasienergy list into clusters closer
/// than `tol * omega`, treating the zone boundary as periodic.
fn degenerate_clusters(eps: &[f64], omega: f64, tol: f64) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (i, e) in eps.iter().enumerate() {
        match clusters.last_mut() {
            Some(last) if (e - eps[*last.last().unwrap()]).abs() < tol * omega => last.push(i),
            _ => clusters.push(vec![i]),
        }
    }
    if clusters.len() > 1 {
        let first = eps[clusters[0][0]];
        let last = eps[*clusters.last().unwrap().last().unwrap()];
        if first + omega - last < tol * omega {
            let head = clusters.remove(0);
            clusters.last_mut().unwrap().extend(head);
        }
    }
    clusters
}

fn snap_to_root(lambda: Complex64, n_fold: u32, state: usize) -> Result<u32> {
    let n = f64::from(n_fold);
    let m = (lambda.arg() * n / (2.0 * PI)).round().rem_euclid(n);
    let distance = (lambda - cis(2.0 * PI * m / n)).norm();
    if distance > SNAP_TOL {
        return Err(Error::Classification { state, distance });
    }
    Ok(m as u32)
}

/// Re-diagonalizes the modes of `sol` within quasienergy-degenerate blocks so
/// that every mode satisfies `R|u_mu(t + t_R)> = pi_mu |u_mu(t)>`, and returns
/// the snapped labels `m_mu` with `pi_mu = exp(i 2 pi m_mu / N)`.
///
/// Within a block, states are ordered by ascending label.
pub fn symmetry_adapt(sol: &FloquetSolution, s: &SymmetrySpec) -> Result<AdaptedSolution> {
    if s.kind != SymmetryKind::Rotational {
        return Err(Error::Validation(format!(
            "symmetry {} is not rotational; labels need a unitary time-shift symmetry",
            s.name
        )));
    }
    s.validate(sol.dim())?;
    let dim = sol.dim();
    let harmonics = sol.harmonics();
    let w = harmonics.shifted_overlap(&s.operator, s.t_shift(sol.omega));

    let mut transform = linalg::zeros(dim);
    let mut eigenvalues = vec![Complex64::new(0.0, 0.0); dim];
    let mut labels = vec![0_u32; dim];
    for block in degenerate_clusters(&sol.quasienergies, sol.omega, CLUSTER_TOL) {
        let k = block.len();
        let sub = CMatrix::from_fn(k, k, |a, b| w[(block[a], block[b])]);
        let (q, t) = if k == 1 {
            (linalg::identity(1), sub)
        } else {
            Schur::new(sub).unpack()
        };
        let mut local: Vec<(u32, usize)> = Vec::with_capacity(k);
        for a in 0..k {
            local.push((snap_to_root(t[(a, a)], s.n_fold, block[a])?, a));
        }
        let mut slots = block.clone();
        slots.sort_unstable();
        local.sort_by_key(|(m, a)| (*m, *a));
        for (slot, (m, a)) in slots.iter().zip(local) {
            for (r, &src) in block.iter().enumerate() {
                transform[(src, *slot)] = q[(r, a)];
            }
            eigenvalues[*slot] = t[(a, a)];
            labels[*slot] = m;
        }
    }

    let mut modes: Vec<CMatrix> = sol.modes.iter().map(|m| m * &transform).collect();
    for mu in 0..dim {
        let col0 = modes[0].column(mu);
        let idx = gauge_index(col0.iter().copied());
        let z = col0[idx];
        if z.norm() > 0.0 {
            let phase = z.conj() / z.norm();
            for m in modes.iter_mut() {
                for x in m.column_mut(mu).iter_mut() {
                    *x *= phase;
                }
            }
        }
    }
    let quasienergies = (0..dim)
        .map(|slot| {
            let src = (0..dim)
                .max_by(|&a, &b| transform[(a, slot)].norm().total_cmp(&transform[(b, slot)].norm()))
                .unwrap_or(slot);
            sol.quasienergies[src]
        })
        .collect();
    Ok(AdaptedSolution {
        solution: FloquetSolution {
            quasienergies,
            modes,
            monodromy: sol.monodromy.clone(),
            omega: sol.omega,
        },
        labels,
        eigenvalues,
    })
}

/// Labels `m_mu` of the states of `sol` under a rotational symmetry.
///
/// Inside degenerate blocks the labels refer to the symmetry-adapted basis of
/// [`symmetry_adapt`].
pub fn rotation_eigenvalues(sol: &FloquetSolution, s: &SymmetrySpec) -> Result<Vec<u32>> {
    symmetry_adapt(sol, s).map(|a| a.labels)
}

/// Whether `V^(n)_{mu,nu}` is allowed: `exp(i 2 pi (m_mu - m_nu + n) / N) alpha_V = 1`.
pub fn rs_allowed(m_mu: u32, m_nu: u32, n: i64, n_fold: u32, alpha_v: i8) -> bool {
    let big_n = i64::from(n_fold);
    let q = (i64::from(m_mu) - i64::from(m_nu) + n).rem_euclid(big_n);
    let phase = cis(2.0 * PI * q as f64 / big_n as f64) * f64::from(alpha_v);
    (phase - 1.0).norm() < 1e-9
}

/// Elements `(mu, nu, n)`, `|n| <= n_range`, that the rotational symmetry forces to zero.
pub fn predict_rs_dark_states(labels: &[u32], s: &SymmetrySpec, n_range: usize) -> Vec<(usize, usize, i64)> {
    let n_max = n_range as i64;
    let mut out = Vec::new();
    for (mu, &m_mu) in labels.iter().enumerate() {
        for (nu, &m_nu) in labels.iter().enumerate() {
            for n in -n_max..=n_max {
                if !rs_allowed(m_mu, m_nu, n, s.n_fold, s.alpha_v) {
                    out.push((mu, nu, n));
                }
            }
        }
    }
    out
}

/// Bands `n`, `|n| <= band_range`, whose susceptibility vanishes identically.
pub fn fbsr_vanishing_bands(s: &SymmetrySpec, band_range: usize) -> BTreeSet<i64> {
    let big_n = i64::from(s.n_fold.max(1));
    let n_max = band_range as i64;
    (-n_max..=n_max).filter(|n| n.rem_euclid(big_n) != 0).collect()
}

// ---------------------------------------------------------------------------
// Particle-hole symmetry

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhsPair {
    pub mu: usize,
    pub partner: usize,
    /// `|<u_partner(0)| P conj(u_mu(t_P))>|`.
    pub overlap: f64,
}

/// `|<u_mu'(0)| U conj(u_mu(t_S))>|` for all `(mu', mu)`.
fn antiunitary_overlaps(sol: &FloquetSolution, s: &SymmetrySpec) -> CMatrix {
    let shifted = sol.modes_at(s.t_shift(sol.omega)).map(|z| z.conj());
    sol.initial_modes().adjoint() * &s.operator * shifted
}

/// Pairs every state with its particle-hole partner (`eps_mu' = -eps_mu`).
///
/// Candidates must satisfy `|fold(eps_mu + eps_mu')| < tol * Omega`; among them
/// unordered pairs are assigned greedily by decreasing partner overlap.
/// Each pair is returned once with `mu <= partner`.
pub fn phs_partner_pairing(sol: &FloquetSolution, s: &SymmetrySpec, tol: f64) -> Result<Vec<PhsPair>> {
    if s.kind != SymmetryKind::ParticleHole {
        return Err(Error::Validation(format!("symmetry {} is not particle-hole", s.name)));
    }
    s.validate(sol.dim())?;
    let dim = sol.dim();
    let overlaps = antiunitary_overlaps(sol, s);
    let eps = &sol.quasienergies;
    let mut candidates = Vec::new();
    for a in 0..dim {
        for b in a..dim {
            if fold(eps[a] + eps[b], sol.omega).abs() < tol * sol.omega {
                let score = 0.5 * (overlaps[(b, a)].norm() + overlaps[(a, b)].norm());
                candidates.push((score, a, b));
            }
        }
    }
    candidates.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut assigned = vec![false; dim];
    let mut pairs = Vec::new();
    for (_, a, b) in candidates {
        if assigned[a] || assigned[b] {
            continue;
        }
        assigned[a] = true;
        assigned[b] = true;
        pairs.push(PhsPair {
            mu: a,
            partner: b,
            overlap: overlaps[(b, a)].norm(),
        });
    }
    if let Some(state) = assigned.iter().position(|x| !x) {
        return Err(Error::Pairing { state });
    }
    pairs.sort_by_key(|p| p.mu);
    Ok(pairs)
}

/// `partner[mu]` from a list of pairs.
pub fn partner_map(pairs: &[PhsPair], dim: usize) -> Vec<usize> {
    let mut map: Vec<usize> = (0..dim).collect();
    for p in pairs {
        map[p.mu] = p.partner;
        map[p.partner] = p.mu;
    }
    map
}

fn phs_preconditions(s: &SymmetrySpec) -> Vec<String> {
    let mut reasons = Vec::new();
    if s.kind != SymmetryKind::ParticleHole {
        reasons.push(format!("{} is {}, not PHS", s.name, s.kind.label()));
    }
    if !(s.shift.abs() < 1e-12 || (s.shift - 0.5).abs() < 1e-12) {
        reasons.push(format!("{}: t_P = {} tau is neither 0 nor tau/2", s.name, s.shift));
    }
    let p = &s.operator;
    let residual = linalg::max_abs_diff(&(p.map(|z| z.conj()) * p), &linalg::identity(p.nrows()));
    if residual > OPERATOR_TOL {
        reasons.push(format!("{}: P*P != 1 (residual {residual:.3e})", s.name));
    }
    reasons
}

/// Pair transitions `(mu, mu', n)` forced to zero by a particle-hole symmetry:
/// dark when `alpha_V exp(-i n Omega t_P) = -1`.
pub fn predict_phs_dark_states(
    pairs: &[PhsPair],
    s: &SymmetrySpec,
    n_range: usize,
) -> Result<Vec<(usize, usize, i64)>> {
    let reasons = phs_preconditions(s);
    if !reasons.is_empty() {
        return Err(Error::Inapplicable { reasons });
    }
    let n_max = n_range as i64;
    let mut out = Vec::new();
    for p in pairs {
        for n in -n_max..=n_max {
            let phase = cis(-2.0 * PI * n as f64 * s.shift) * f64::from(s.alpha_v);
            if (phase + 1.0).norm() < 1e-9 {
                out.push((p.mu, p.partner, n));
                if p.mu != p.partner {
                    out.push((p.partner, p.mu, n));
                }
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

// ---------------------------------------------------------------------------
// Symmetry-induced transparency

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SitBand {
    pub n: i64,
    pub phase_re: f64,
    pub phase_im: f64,
    /// Whether the two resonance terms of the zero-quasienergy pair cancel.
    pub cancels: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SitReport {
    pub first: String,
    pub second: String,
    /// `(mu, mu')`, the zero-quasienergy pair.
    pub pair: (usize, usize),
    pub bands: Vec<SitBand>,
    /// `max |V^(-n-m)_{mu'mu} V^(m)_{mu mu'} - e^{-i n Omega dt} V^(-n-m)_{mu mu'} V^(m)_{mu' mu}|`
    /// relative to `max|V|^2`.
    pub relation_residual: f64,
    pub relation_holds: bool,
}

/// Checks the transparency condition of two commuting particle-hole
/// symmetries at a zero-quasienergy crossing.
///
/// The product relation between the two pair transitions depends on the basis
/// chosen inside the degenerate pair; pass a solution adapted to the remaining
/// unitary symmetry (see [`symmetry_adapt`]) and its dipole set.
#[allow(clippy::too_many_arguments)]
pub fn sit_check(
    h: &PeriodicHamiltonian,
    s1: &SymmetrySpec,
    s2: &SymmetrySpec,
    sol: &FloquetSolution,
    ds: &DipoleSet,
    band_range: usize,
    tol: f64,
) -> Result<SitReport> {
    let mut reasons = Vec::new();
    for s in [s1, s2] {
        if s.kind != SymmetryKind::ParticleHole {
            reasons.push(format!("{} is {}, not PHS", s.name, s.kind.label()));
            continue;
        }
        match verify_symmetry(h, s, VERIFY_SAMPLES, VERIFY_TOL) {
            Ok((true, _)) => {}
            Ok((false, r)) => reasons.push(format!("{} does not hold (residual {r:.3e})", s.name)),
            Err(e) => reasons.push(format!("{}: {e}", s.name)),
        }
        let p = &s.operator;
        if p.nrows() == sol.dim() {
            let sq = linalg::max_abs_diff(&(p * p), &linalg::identity(p.nrows()));
            if sq > OPERATOR_TOL {
                reasons.push(format!("{}: P^2 != 1 (residual {sq:.3e})", s.name));
            }
        }
    }
    if !reasons.is_empty() {
        return Err(Error::Inapplicable { reasons });
    }
    let (p1, p2) = (&s1.operator, &s2.operator);
    if linalg::max_abs_diff(p1, p2) < OPERATOR_TOL || linalg::max_abs_diff(p1, &(-p2)) < OPERATOR_TOL {
        reasons.push(format!("{} = +-{}", s1.name, s2.name));
    }
    let comm = linalg::max_abs(&linalg::commutator(p1, p2));
    if comm > OPERATOR_TOL {
        reasons.push(format!("[{}, {}] != 0 (residual {comm:.3e})", s1.name, s2.name));
    }
    let mut zero: Vec<usize> = (0..sol.dim())
        .filter(|&mu| sol.quasienergies[mu].abs() < tol * sol.omega)
        .collect();
    zero.sort_by(|&a, &b| sol.quasienergies[a].abs().total_cmp(&sol.quasienergies[b].abs()));
    if zero.len() < 2 {
        reasons.push("no degenerate zero-quasienergy pair".to_string());
    }
    if ds.harmonics < band_range {
        reasons.push(format!(
            "band range {band_range} exceeds dipole cutoff {}",
            ds.harmonics
        ));
    }
    if !reasons.is_empty() {
        return Err(Error::Inapplicable { reasons });
    }
    let (mu, mu_p) = (zero[0].min(zero[1]), zero[0].max(zero[1]));

    let dt = s1.shift - s2.shift;
    let n_max = band_range as i64;
    let phase_of = |n: i64| cis(-2.0 * PI * n as f64 * dt);
    let bands = (-n_max..=n_max)
        .map(|n| {
            let phase = phase_of(n);
            SitBand {
                n,
                phase_re: phase.re,
                phase_im: phase.im,
                cancels: (phase - 1.0).norm() < 1e-9,
            }
        })
        .collect();

    let m_max = ds.harmonics as i64;
    let scale = ds.max_abs().powi(2).max(f64::MIN_POSITIVE);
    let mut residual = 0.0_f64;
    for n in -n_max..=n_max {
        for m in -m_max..=m_max {
            let k = -n - m;
            if k.abs() > m_max {
                continue;
            }
            let lhs = ds.get(k, mu_p, mu) * ds.get(m, mu, mu_p);
            let rhs = phase_of(n) * ds.get(k, mu, mu_p) * ds.get(m, mu_p, mu);
            residual = residual.max((lhs - rhs).norm() / scale);
        }
    }
    Ok(SitReport {
        first: s1.name.clone(),
        second: s2.name.clone(),
        pair: (mu, mu_p),
        bands,
        relation_residual: residual,
        relation_holds: residual < SIT_TOL,
    })
}

// ---------------------------------------------------------------------------
// Chiral + time-reversal composition

#[derive(Debug, Clone, PartialEq)]
pub struct ComposedPhs {
    pub spec: SymmetrySpec,
    /// All dark-state preconditions hold.
    pub dark_rule_applicable: bool,
    /// Failed preconditions, empty when applicable.
    pub reasons: Vec<String>,
}

/// `P = C T` with `t_P = t_T - t_C` and `alpha_V = alpha_C alpha_T`.
pub fn compose_cs_trs(cs: &SymmetrySpec, trs: &SymmetrySpec) -> Result<ComposedPhs> {
    if cs.kind != SymmetryKind::Chiral || trs.kind != SymmetryKind::TimeReversal {
        return Err(Error::Validation(format!(
            "compose_cs_trs expects (CS, TRS), got ({}, {})",
            cs.kind.label(),
            trs.kind.label()
        )));
    }
    trs.validate(cs.operator.nrows())?;
    let (c_op, t_op) = (&cs.operator, &trs.operator);
    let shift = wrap_unit(trs.shift - cs.shift);
    let spec = SymmetrySpec::particle_hole(
        format!("{}*{}", cs.name, trs.name),
        c_op * t_op,
        shift,
        cs.alpha_v * trs.alpha_v,
    )?;
    let identity = linalg::identity(c_op.nrows());
    let mut reasons = Vec::new();
    if !(shift.abs() < 1e-12 || (shift - 0.5).abs() < 1e-12) {
        reasons.push(format!("t_P = {shift} tau is neither 0 nor tau/2"));
    }
    for (label, op) in [(cs.name.as_str(), c_op), (trs.name.as_str(), t_op)] {
        let r = linalg::max_abs_diff(&(op.map(|z| z.conj()) * op), &identity);
        if r > OPERATOR_TOL {
            reasons.push(format!("{label}*{label} != 1 (residual {r:.3e})"));
        }
    }
    let comm = linalg::max_abs(&linalg::commutator(c_op, t_op));
    if comm > OPERATOR_TOL {
        reasons.push(format!("[{}, {}] != 0 (residual {comm:.3e})", cs.name, trs.name));
    }
    Ok(ComposedPhs {
        spec,
        dark_rule_applicable: reasons.is_empty(),
        reasons,
    })
}

// ---------------------------------------------------------------------------
// Census and identities without a dark-state rule

/// All `(mu, nu, n)` with `|V^(n)_{mu,nu}| < threshold_ratio * max|V|`.
pub fn scan_dark_states(ds: &DipoleSet, threshold_ratio: f64) -> Vec<(usize, usize, i64)> {
    let max = ds.max_abs();
    let threshold = threshold_ratio * max;
    let m = ds.harmonics as i64;
    let dim = ds.dim();
    let mut out = Vec::new();
    for mu in 0..dim {
        for nu in 0..dim {
            for n in -m..=m {
                if ds.get(n, mu, nu).norm() < threshold || max == 0.0 {
                    out.push((mu, nu, n));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoDarkRule {
    pub kind: SymmetryKind,
    /// The identity the dipole elements satisfy instead of a zero condition.
    pub identity: String,
    /// True when the identity involves the undetermined partner phases.
    pub gauge_dependent: bool,
}

/// The constraint a lone chiral or time-reversal symmetry imposes.
pub fn no_dark_rule(kind: SymmetryKind) -> Result<NoDarkRule> {
    match kind {
        SymmetryKind::Chiral => Ok(NoDarkRule {
            kind,
            identity: "V^(n)_{mu,mu'} = exp(-i n Omega t_C) alpha_V conj(V^(n)_{mu,mu'}) up to the partner phases".into(),
            gauge_dependent: true,
        }),
        SymmetryKind::TimeReversal => Ok(NoDarkRule {
            kind,
            identity: "V^(n)_{mu,nu} = exp(-i n Omega t_T) alpha_V conj(V^(n)_{mu,nu})".into(),
            gauge_dependent: false,
        }),
        other => Err(Error::Validation(format!(
            "{} symmetries carry a dark-state rule",
            other.label()
        ))),
    }
}

/// Residual of the time-reversal identity relative to `max|V|`.
///
/// The partner phases `c_mu = <u_mu(0)| T conj(u_mu(t_T))>` are measured so
/// that the check does not depend on the phase gauge of the modes.
pub fn trs_identity_residual(sol: &FloquetSolution, ds: &DipoleSet, s: &SymmetrySpec) -> Result<f64> {
    if s.kind != SymmetryKind::TimeReversal {
        return Err(Error::Validation(format!("symmetry {} is not time-reversal", s.name)));
    }
    s.validate(sol.dim())?;
    let overlaps = antiunitary_overlaps(sol, s);
    let c: Vec<Complex64> = (0..sol.dim()).map(|mu| overlaps[(mu, mu)]).collect();
    let max = ds.max_abs().max(f64::MIN_POSITIVE);
    let m = ds.harmonics as i64;
    let mut worst = 0.0_f64;
    for n in -m..=m {
        let phase = cis(-2.0 * PI * n as f64 * s.shift) * f64::from(s.alpha_v);
        for mu in 0..sol.dim() {
            for nu in 0..sol.dim() {
                let v = ds.get(n, mu, nu);
                let rhs = c[mu] * c[nu].conj() * phase * v.conj();
                worst = worst.max((v - rhs).norm() / max);
            }
        }
    }
    Ok(worst)
}

/// Residual of the chiral identity relative to `max|V|`, with partner states
/// and phases `c_a = <u_a'(0)| C |u_a(t_C)>` measured from the modes.
pub fn cs_identity_residual(sol: &FloquetSolution, ds: &DipoleSet, s: &SymmetrySpec) -> Result<f64> {
    if s.kind != SymmetryKind::Chiral {
        return Err(Error::Validation(format!("symmetry {} is not chiral", s.name)));
    }
    s.validate(sol.dim())?;
    let dim = sol.dim();
    let shifted = sol.modes_at(s.t_shift(sol.omega));
    let overlaps = sol.initial_modes().adjoint() * &s.operator * shifted;
    let mut partner = vec![0; dim];
    let mut c = vec![Complex64::new(0.0, 0.0); dim];
    for a in 0..dim {
        let best = (0..dim)
            .max_by(|&x, &y| overlaps[(x, a)].norm().total_cmp(&overlaps[(y, a)].norm()))
            .unwrap_or(a);
        partner[a] = best;
        c[a] = overlaps[(best, a)];
    }
    let max = ds.max_abs().max(f64::MIN_POSITIVE);
    let m = ds.harmonics as i64;
    let mut worst = 0.0_f64;
    for n in -m..=m {
        let phase = cis(-2.0 * PI * n as f64 * s.shift) * f64::from(s.alpha_v);
        for a in 0..dim {
            for b in 0..dim {
                let lhs = c[a].conj() * c[b] * ds.get(n, partner[a], partner[b]);
                let rhs = phase * ds.get(n, b, a).conj();
                worst = worst.max((lhs - rhs).norm() / max);
            }
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StateLabels {
    Rotation { labels: Vec<u32> },
    Pairs { pairs: Vec<PhsPair> },
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationEntry {
    pub mu: usize,
    pub nu: usize,
    pub n: i64,
    /// `|V^(n)_{mu,nu}| / max|V|`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub name: String,
    pub kind: SymmetryKind,
    pub verified: bool,
    pub max_residual: f64,
    pub state_labels: StateLabels,
    pub predicted_dark: Vec<(usize, usize, i64)>,
    pub predicted_vanishing_bands: Vec<i64>,
    pub validation: Vec<ValidationEntry>,
    /// Largest validation ratio (0 when nothing is predicted).
    pub max_validation_ratio: f64,
    /// Why a rule did not apply, if it did not.
    pub inapplicable: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identity: Option<NoDarkRule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identity_residual: Option<f64>,
}

impl SymmetryReport {
    fn new(s: &SymmetrySpec, verified: bool, max_residual: f64) -> Self {
        Self {
            name: s.name.clone(),
            kind: s.kind,
            verified,
            max_residual,
            state_labels: StateLabels::None,
            predicted_dark: Vec::new(),
            predicted_vanishing_bands: Vec::new(),
            validation: Vec::new(),
            max_validation_ratio: 0.0,
            inapplicable: Vec::new(),
            identity: None,
            identity_residual: None,
        }
    }

    fn validate_against(&mut self, ds: &DipoleSet) {
        let max = ds.max_abs().max(f64::MIN_POSITIVE);
        self.validation = self
            .predicted_dark
            .iter()
            .filter(|(_, _, n)| n.unsigned_abs() as usize <= ds.harmonics)
            .map(|&(mu, nu, n)| ValidationEntry {
                mu,
                nu,
                n,
                ratio: ds.get(n, mu, nu).norm() / max,
            })
            .collect();
        self.max_validation_ratio = self.validation.iter().map(|v| v.ratio).fold(0.0, f64::max);
    }
}

/// Full symmetry analysis of one model at one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSymmetryReport {
    pub model: String,
    pub quasienergies: Vec<f64>,
    pub symmetries: Vec<SymmetryReport>,
    pub sit: Vec<SitReport>,
    /// Pairs of particle-hole symmetries for which siT does not apply.
    pub sit_inapplicable: Vec<String>,
}

impl ModelSymmetryReport {
    /// All reasons a requested rule did not apply.
    pub fn inapplicability(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .symmetries
            .iter()
            .flat_map(|r| r.inapplicable.iter().map(move |x| format!("{}: {x}", r.name)))
            .collect();
        out.extend(self.sit_inapplicable.iter().cloned());
        out
    }
}

/// Quasienergy tolerance (units of `Omega`) for partner pairing in reports.
pub const PAIRING_TOL: f64 = 1e-6;

/// Verifies every symmetry of `bundle`, labels or pairs the states, predicts
/// dark transitions with `|n| <= n_range` and validates them on the dipole
/// elements of `sol` (or of its symmetry-adapted version).
pub fn analyze(
    bundle: &ModelBundle,
    sol: &FloquetSolution,
    harmonics: usize,
    n_range: usize,
) -> Result<ModelSymmetryReport> {
    let h = &bundle.hamiltonian;
    let probe = &bundle.probe;
    let base_ds = dipole_elements(sol, probe, harmonics)?;
    let mut reports = Vec::new();
    let mut rs_adapted: Option<AdaptedSolution> = None;
    for s in &bundle.symmetries {
        let (verified, residual) = verify_symmetry(h, s, VERIFY_SAMPLES, VERIFY_TOL)?;
        let mut report = SymmetryReport::new(s, verified, residual);
        if !verified {
            report.inapplicable.push(format!("not verified (residual {residual:.3e})"));
            reports.push(report);
            continue;
        }
        match s.kind {
            SymmetryKind::Rotational => match symmetry_adapt(sol, s) {
                Ok(adapted) => {
                    let ds = dipole_elements(&adapted.solution, probe, harmonics)?;
                    report.predicted_dark = predict_rs_dark_states(&adapted.labels, s, n_range);
                    report.predicted_vanishing_bands = fbsr_vanishing_bands(s, n_range).into_iter().collect();
                    report.state_labels = StateLabels::Rotation {
                        labels: adapted.labels.clone(),
                    };
                    report.validate_against(&ds);
                    if rs_adapted.is_none() {
                        rs_adapted = Some(adapted);
                    }
                }
                Err(e) => report.inapplicable.push(e.to_string()),
            },
            SymmetryKind::ParticleHole => match phs_partner_pairing(sol, s, PAIRING_TOL) {
                Ok(pairs) => {
                    match predict_phs_dark_states(&pairs, s, n_range) {
                        Ok(dark) => report.predicted_dark = dark,
                        Err(Error::Inapplicable { reasons }) => report.inapplicable.extend(reasons),
                        Err(e) => return Err(e),
                    }
                    report.state_labels = StateLabels::Pairs { pairs };
                    report.validate_against(&base_ds);
                }
                Err(e) => report.inapplicable.push(e.to_string()),
            },
            SymmetryKind::TimeReversal => {
                report.identity = Some(no_dark_rule(s.kind)?);
                report.identity_residual = Some(trs_identity_residual(sol, &base_ds, s)?);
            }
            SymmetryKind::Chiral => {
                report.identity = Some(no_dark_rule(s.kind)?);
                report.identity_residual = cs_identity_residual(sol, &base_ds, s).ok();
            }
        }
        reports.push(report);
    }

    let phs: Vec<&SymmetrySpec> = bundle
        .symmetries
        .iter()
        .zip(&reports)
        .filter(|(s, r)| s.kind == SymmetryKind::ParticleHole && r.verified)
        .map(|(s, _)| s)
        .collect();
    let mut sit = Vec::new();
    let mut sit_inapplicable = Vec::new();
    if phs.len() >= 2 {
        let (sit_sol, sit_ds) = match &rs_adapted {
            Some(a) => (a.solution.clone(), dipole_elements(&a.solution, probe, harmonics)?),
            None => (sol.clone(), base_ds.clone()),
        };
        for i in 0..phs.len() {
            for j in (i + 1)..phs.len() {
                match sit_check(h, phs[i], phs[j], &sit_sol, &sit_ds, n_range.min(harmonics), PAIRING_TOL) {
                    Ok(r) => sit.push(r),
                    Err(e) => sit_inapplicable.push(format!("siT({}, {}): {e}", phs[i].name, phs[j].name)),
                }
            }
        }
    }
    Ok(ModelSymmetryReport {
        model: bundle.name.clone(),
        quasienergies: sol.quasienergies.clone(),
        symmetries: reports,
        sit,
        sit_inapplicable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dipole::DEFAULT_HARMONICS;
    use crate::floquet::{floquet_solve, SolverConfig};
    use crate::linalg::{c, sigma_x, sigma_z};
    use crate::models::{build_benzene, build_dimer, build_tls};

    const OMEGA: f64 = 1.0;

    fn solve(b: &ModelBundle) -> FloquetSolution {
        floquet_solve(&b.hamiltonian, &SolverConfig::default()).unwrap()
    }

    fn spec<'a>(b: &'a ModelBundle, name: &str) -> &'a SymmetrySpec {
        b.symmetries.iter().find(|s| s.name == name).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(SymmetrySpec::rotational("R", sigma_x(), 2, 1).is_ok());
        assert!(SymmetrySpec::particle_hole("P", sigma_x() * c(2.0, 0.0), 0.0, 1).is_err());
        assert!(SymmetrySpec::particle_hole("P", sigma_x(), 1.0, 1).is_err());
        assert!(SymmetrySpec::particle_hole("P", sigma_x(), 0.0, 0).is_err());
        assert!(SymmetrySpec::new(SymmetryKind::Rotational, "R", sigma_x(), 0.25, 2, 1).is_err());
        assert_eq!(SymmetrySpec::rotational("R", linalg::identity(2), 1, 1).unwrap().shift, 0.0);
        assert_eq!(SymmetryKind::Chiral.signs(), (-1, -1));
        assert!(SymmetryKind::TimeReversal.antiunitary());
        assert!(!SymmetryKind::Chiral.antiunitary());
    }

    #[test]
    fn bundled_symmetries_verify() {
        let tls = build_tls(0.05, 1.7, OMEGA).unwrap();
        for name in ["R2", "P1", "T", "C"] {
            let (ok, r) = verify_symmetry(&tls.hamiltonian, spec(&tls, name), 64, 1e-12).unwrap();
            assert!(ok, "{name}: {r}");
        }
        let tls0 = build_tls(0.0, 1.7, OMEGA).unwrap();
        assert!(verify_symmetry(&tls0.hamiltonian, spec(&tls0, "P2"), 64, 1e-12).unwrap().0);
        let dimer = build_dimer(0.2, 0.05, 2.0, 1.0, OMEGA).unwrap();
        assert!(verify_symmetry(&dimer.hamiltonian, spec(&dimer, "P"), 64, 1e-12).unwrap().0);
        let benzene = build_benzene(0.45, 0.05, 1.0, OMEGA).unwrap();
        assert!(verify_symmetry(&benzene.hamiltonian, spec(&benzene, "R6"), 64, 1e-12).unwrap().0);
        for b in [&tls, &dimer, &benzene] {
            for s in &b.symmetries {
                assert!(s.probe_residual(&b.probe.matrix) < 1e-14, "{} {}", b.name, s.name);
            }
        }
    }

    #[test]
    fn broken_symmetries_fail() {
        let benzene = build_benzene(0.45, 0.05, 1.0, OMEGA).unwrap();
        let r6 = spec(&benzene, "R6");
        let wrong = SymmetrySpec::new(SymmetryKind::ParticleHole, "x", r6.operator.clone(), 0.2, 1, 1).unwrap();
        let mut rotated = wrong.clone();
        rotated.kind = SymmetryKind::Rotational;
        rotated.n_fold = 5;
        let (ok, residual) = verify_symmetry(&benzene.hamiltonian, &rotated, 64, 1e-10).unwrap();
        assert!(!ok);
        assert!(residual > 0.1, "{residual}");
        assert!(verify_symmetry(&benzene.hamiltonian, r6, 8, 1e-10).is_err());
    }

    #[test]
    fn static_benzene_ring_momenta() {
        // With Omega = 2 nothing folds and the labels are the bare ring momenta.
        let wide = build_benzene(0.45, 0.05, 0.0, 2.0).unwrap();
        let mut labels = rotation_eigenvalues(&solve(&wide), spec(&wide, "R6")).unwrap();
        labels.sort_unstable();
        assert_eq!(labels, vec![0, 0, 1, 2, 3, 4, 5]);

        // With Omega = 1 a mode exp(-i l Omega t) v picks up exp(-i 2 pi l / 6).
        let b = build_benzene(0.45, 0.05, 0.0, OMEGA).unwrap();
        let r6 = spec(&b, "R6");
        let adapted = symmetry_adapt(&solve(&b), r6).unwrap();
        let h0 = b.hamiltonian.component(0).unwrap();
        for mu in 0..7 {
            let v = adapted.solution.mode(mu, 0);
            let energy = (v.adjoint() * h0 * &v)[(0, 0)].re;
            let zone = ((energy - adapted.solution.quasienergies[mu]) / OMEGA).round();
            let theta = (v.adjoint() * &r6.operator * &v)[(0, 0)].arg();
            let expected = (6.0 * theta / (2.0 * PI) - zone).round().rem_euclid(6.0) as u32;
            assert_eq!(adapted.labels[mu], expected, "state {mu}");
        }
    }

    #[test]
    fn driven_benzene_labels_and_dark_states() {
        let b = build_benzene(0.45, 0.05, 1.0, OMEGA).unwrap();
        let r6 = spec(&b, "R6");
        let adapted = symmetry_adapt(&solve(&b), r6).unwrap();
        for (mu, pi) in adapted.eigenvalues.iter().enumerate() {
            assert!((pi.norm() - 1.0).abs() < 1e-6, "{mu}");
            assert!((pi.powu(6) - 1.0).norm() < 1e-5);
        }
        let ds = dipole_elements(&adapted.solution, &b.probe, DEFAULT_HARMONICS).unwrap();
        let max = ds.max_abs();
        let dark = predict_rs_dark_states(&adapted.labels, r6, DEFAULT_HARMONICS);
        assert!(!dark.is_empty());
        for (mu, nu, n) in dark {
            assert!(ds.get(n, mu, nu).norm() < 1e-8 * max, "({mu},{nu},{n})");
        }
    }

    #[test]
    fn rs_condition_arithmetic() {
        let r = SymmetrySpec::rotational("R", linalg::identity(1), 6, 1).unwrap();
        let dark = predict_rs_dark_states(&[2], &r, 7);
        let ns: Vec<i64> = dark.iter().map(|t| t.2).collect();
        assert_eq!(ns, vec![-7, -5, -4, -3, -2, -1, 1, 2, 3, 4, 5, 7]);
        assert!(rs_allowed(3, 2, -1, 6, 1));
        assert!(!rs_allowed(3, 2, 0, 6, 1));
        assert!(rs_allowed(1, 0, 0, 2, -1));
        assert!(!rs_allowed(0, 0, 0, 3, -1));
    }

    #[test]
    fn fbsr_sets() {
        let r6 = SymmetrySpec::rotational("R", linalg::identity(1), 6, 1).unwrap();
        let expected: BTreeSet<i64> = [-7, -5, -4, -3, -2, -1, 1, 2, 3, 4, 5, 7].into();
        assert_eq!(fbsr_vanishing_bands(&r6, 7), expected);
        let r1 = SymmetrySpec::rotational("R", linalg::identity(1), 1, 1).unwrap();
        assert!(fbsr_vanishing_bands(&r1, 7).is_empty());
        let r2 = SymmetrySpec::rotational("R", sigma_x(), 2, 1).unwrap();
        assert_eq!(fbsr_vanishing_bands(&r2, 2), [-1, 1].into());
    }

    #[test]
    fn tls_parity_labels() {
        let b = build_tls(0.05, 1.0, OMEGA).unwrap();
        let mut labels = rotation_eigenvalues(&solve(&b), spec(&b, "R2")).unwrap();
        labels.sort_unstable();
        assert_eq!(labels, vec![0, 1]);
    }

    #[test]
    fn dimer_pairing_and_dark_states() {
        let b = build_dimer(0.2, 0.05, 2.0, 1.0, OMEGA).unwrap();
        let p = spec(&b, "P");
        let sol = solve(&b);
        let pairs = phs_partner_pairing(&sol, p, 1e-8).unwrap();
        assert_eq!(pairs.len(), 2);
        for pair in &pairs {
            assert_ne!(pair.mu, pair.partner);
            assert!(pair.overlap > 0.99);
            let sum = sol.quasienergies[pair.mu] + sol.quasienergies[pair.partner];
            assert!(fold(sum, OMEGA).abs() < 1e-8);
        }
        let map = partner_map(&pairs, 4);
        assert!((0..4).all(|mu| map[map[mu]] == mu));

        let ds = dipole_elements(&sol, &b.probe, DEFAULT_HARMONICS).unwrap();
        let dark = predict_phs_dark_states(&pairs, p, 10).unwrap();
        assert_eq!(dark.len(), 4 * 21);
        for (mu, nu, n) in &dark {
            assert!(ds.get(*n, *mu, *nu).norm() < 1e-8 * ds.max_abs());
        }
        let census: BTreeSet<(usize, usize, i64)> = scan_dark_states(&ds, 1e-8)
            .into_iter()
            .filter(|t| t.2.abs() <= 10)
            .collect();
        let predicted: BTreeSet<_> = dark.into_iter().collect();
        assert!(predicted.is_subset(&census));
    }

    #[test]
    fn static_dimer_pairs_opposite_energies() {
        let b = build_dimer(0.2, 0.05, 2.0, 0.0, OMEGA).unwrap();
        let sol = solve(&b);
        let pairs = phs_partner_pairing(&sol, spec(&b, "P"), 1e-8).unwrap();
        let mut energies: Vec<(f64, f64)> = pairs
            .iter()
            .map(|p| {
                let (a, z) = (sol.quasienergies[p.mu], sol.quasienergies[p.partner]);
                (a.min(z), a.max(z))
            })
            .collect();
        energies.sort_by(|x, y| x.0.total_cmp(&y.0));
        assert!((energies[0].0 + 0.2).abs() < 1e-9 && (energies[0].1 - 0.2).abs() < 1e-9);
        assert!((energies[1].0 + 0.05).abs() < 1e-9 && (energies[1].1 - 0.05).abs() < 1e-9);
    }

    #[test]
    fn tls_degenerate_pairing_is_well_defined() {
        let b = build_tls(0.0, 1.3, OMEGA).unwrap();
        let sol = solve(&b);
        let pairs = phs_partner_pairing(&sol, spec(&b, "P1"), 1e-8).unwrap();
        let covered: usize = pairs.iter().map(|p| if p.mu == p.partner { 1 } else { 2 }).sum();
        assert_eq!(covered, 2);
        assert!(pairs.iter().all(|p| p.overlap > 0.99));
    }

    #[test]
    fn phs_dark_rule_arithmetic() {
        let pairs = [PhsPair {
            mu: 0,
            partner: 1,
            overlap: 1.0,
        }];
        let op = linalg::identity(2);
        let plus0 = SymmetrySpec::particle_hole("P", op.clone(), 0.0, 1).unwrap();
        assert!(predict_phs_dark_states(&pairs, &plus0, 5).unwrap().is_empty());
        let plus_half = SymmetrySpec::particle_hole("P", op.clone(), 0.5, 1).unwrap();
        let dark = predict_phs_dark_states(&pairs, &plus_half, 3).unwrap();
        assert!(dark.iter().all(|t| t.2 % 2 != 0));
        assert_eq!(dark.len(), 2 * 4);
        let quarter = SymmetrySpec::particle_hole("P", op, 0.25, -1).unwrap();
        assert!(matches!(
            predict_phs_dark_states(&pairs, &quarter, 3),
            Err(Error::Inapplicable { .. })
        ));
        let p_star_p = SymmetrySpec::particle_hole("P", linalg::sigma_y(), 0.0, -1).unwrap();
        assert!(matches!(
            predict_phs_dark_states(&pairs, &p_star_p, 3),
            Err(Error::Inapplicable { .. })
        ));
    }

    #[test]
    fn sit_holds_for_tls_without_tunnelling() {
        let b = build_tls(0.0, 2.0, OMEGA).unwrap();
        let sol = solve(&b);
        let adapted = symmetry_adapt(&sol, spec(&b, "R2")).unwrap();
        let ds = dipole_elements(&adapted.solution, &b.probe, DEFAULT_HARMONICS).unwrap();
        let report = sit_check(&b.hamiltonian, spec(&b, "P1"), spec(&b, "P2"), &adapted.solution, &ds, 5, 1e-8)
            .unwrap();
        assert!(report.bands.iter().all(|band| band.cancels));
        assert!(report.relation_holds, "{}", report.relation_residual);
    }

    #[test]
    fn sit_reports_failed_preconditions() {
        let b = build_tls(0.05, 2.0, OMEGA).unwrap();
        let p2 = SymmetrySpec::particle_hole("P2", linalg::identity(2), 0.5, 1).unwrap();
        let sol = solve(&b);
        let ds = dipole_elements(&sol, &b.probe, DEFAULT_HARMONICS).unwrap();
        match sit_check(&b.hamiltonian, spec(&b, "P1"), &p2, &sol, &ds, 2, 1e-8) {
            Err(Error::Inapplicable { reasons }) => assert!(reasons.iter().any(|r| r.contains("P2"))),
            other => panic!("expected inapplicable, got {other:?}"),
        }
    }

    #[test]
    fn cs_trs_composition() {
        let b = build_tls(0.05, 1.5, OMEGA).unwrap();
        let composed = compose_cs_trs(spec(&b, "C"), spec(&b, "T")).unwrap();
        assert!(composed.dark_rule_applicable);
        assert_eq!(composed.spec.shift, 0.5);
        assert_eq!(composed.spec.alpha_v, -1);
        assert!(linalg::max_abs_diff(&composed.spec.operator, &sigma_z()) < 1e-15);
        assert!(verify_symmetry(&b.hamiltonian, &composed.spec, 64, 1e-12).unwrap().0);

        let c_half = SymmetrySpec::chiral("C", sigma_z(), 0.5, -1).unwrap();
        let t_half = SymmetrySpec::time_reversal("T", linalg::identity(2), 0.5, 1).unwrap();
        let arith = compose_cs_trs(&c_half, &t_half).unwrap();
        assert_eq!(arith.spec.shift, 0.0);
        assert!(linalg::max_abs_diff(&arith.spec.operator, &sigma_z()) < 1e-15);

        // C = 1 with a half-period shift is chiral only without tunnelling
        let c_id = SymmetrySpec::chiral("C1", linalg::identity(2), 0.5, 1).unwrap();
        let t = SymmetrySpec::time_reversal("T", linalg::identity(2), 0.0, 1).unwrap();
        let p2 = compose_cs_trs(&c_id, &t).unwrap().spec;
        for (h_x, expected) in [(0.0, true), (0.05, false)] {
            let model = build_tls(h_x, 1.5, OMEGA).unwrap();
            assert_eq!(verify_symmetry(&model.hamiltonian, &p2, 64, 1e-10).unwrap().0, expected);
        }

        let non_commuting = SymmetrySpec::time_reversal("T", sigma_x(), 0.0, 1).unwrap();
        let flagged = compose_cs_trs(spec(&b, "C"), &non_commuting).unwrap();
        assert!(!flagged.dark_rule_applicable);
    }

    #[test]
    fn trs_identity_and_negative_control() {
        let b = build_tls(0.05, 1.5, OMEGA).unwrap();
        let sol = solve(&b);
        let ds = dipole_elements(&sol, &b.probe, DEFAULT_HARMONICS).unwrap();
        assert!(trs_identity_residual(&sol, &ds, spec(&b, "T")).unwrap() < 1e-8);
        assert!(cs_identity_residual(&sol, &ds, spec(&b, "C")).unwrap() < 1e-8);

        let benzene = build_benzene(0.45, 0.05, 1.0, OMEGA).unwrap();
        let bsol = solve(&benzene);
        let bds = dipole_elements(&bsol, &benzene.probe, DEFAULT_HARMONICS).unwrap();
        let fake = SymmetrySpec::time_reversal("T", linalg::identity(7), 0.0, 1).unwrap();
        assert!(!verify_symmetry(&benzene.hamiltonian, &fake, 64, 1e-10).unwrap().0);
        assert!(trs_identity_residual(&bsol, &bds, &fake).unwrap() > 1e-2);

        let rule = no_dark_rule(SymmetryKind::TimeReversal).unwrap();
        assert!(!rule.gauge_dependent);
        assert!(no_dark_rule(SymmetryKind::Chiral).unwrap().gauge_dependent);
        assert!(no_dark_rule(SymmetryKind::Rotational).is_err());
    }

    #[test]
    fn diagonal_probe_census() {
        let h = PeriodicHamiltonian::stationary(OMEGA, sigma_z() * c(0.2, 0.0)).unwrap();
        let sol = floquet_solve(&h, &SolverConfig::default()).unwrap();
        let probe = crate::models::ProbeOperator::new(sigma_z(), 1.0).unwrap();
        let ds = dipole_elements(&sol, &probe, 4).unwrap();
        let census = scan_dark_states(&ds, 1e-10);
        assert!(census.iter().any(|t| *t == (0, 1, 0)));
        assert!(census.iter().any(|t| *t == (1, 0, 0)));
        assert!(!census.iter().any(|t| *t == (0, 0, 0)));
        assert_eq!(census.len(), 4 * 9 - 2);
    }

    #[test]
    fn model_reports() {
        let b = build_benzene(0.45, 0.05, 1.0, OMEGA).unwrap();
        let report = analyze(&b, &solve(&b), DEFAULT_HARMONICS, 7).unwrap();
        let rs = &report.symmetries[0];
        assert!(rs.verified);
        assert_eq!(rs.predicted_vanishing_bands, vec![-7, -5, -4, -3, -2, -1, 1, 2, 3, 4, 5, 7]);
        assert!(rs.max_validation_ratio < 1e-8);

        let tls = build_tls(0.0, 2.0, OMEGA).unwrap();
        let report = analyze(&tls, &solve(&tls), DEFAULT_HARMONICS, 3).unwrap();
        assert_eq!(report.sit.len(), 1, "{:?}", report.sit_inapplicable);
        assert!(report.sit[0].relation_holds);
        assert!(report.symmetries.iter().all(|r| r.verified));
    }
}
