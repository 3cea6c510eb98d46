//! Periodically driven model Hamiltonians in Fourier form.
//!
//! A Hamiltonian is stored as its harmonics `H_k`, with
//! `H(t) = sum_k H_k exp(i k Omega t)`. Hermiticity of `H(t)` for all `t` is
//! equivalent to `H_{-k} = H_k^dagger`, which every constructor enforces.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, cis, CMatrix, I, ONE};
use crate::symmetry::{SymmetryKind, SymmetrySpec};

/// Entrywise tolerance for Hermiticity checks.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicHamiltonian {
    dim: usize,
    omega: f64,
    components: BTreeMap<i32, CMatrix>,
}

impl PeriodicHamiltonian {
    /// Builds from a complete set of harmonics. Every stored `k` must have
    /// its partner `-k` with `H_{-k} = H_k^dagger`.
    pub fn new(omega: f64, components: BTreeMap<i32, CMatrix>) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::Validation(format!("omega must be > 0, got {omega}")));
        }
        let dim = match components.values().next() {
            Some(m) => m.nrows(),
            None => {
                return Err(Error::Validation(
                    "at least one Fourier component is required".into(),
                ))
            }
        };
        if dim == 0 {
            return Err(Error::Validation("dimension must be positive".into()));
        }
        for (k, m) in &components {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::Validation(format!(
                    "component k={k} has shape {}x{}, expected {dim}x{dim}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        for (k, m) in &components {
            let partner = components.get(&(-k)).ok_or_else(|| {
                Error::Validation(format!("component k={k} has no partner k={}", -k))
            })?;
            let scale = linalg::max_abs(m).max(1.0);
            let residual = linalg::max_abs_diff(partner, &m.adjoint());
            if residual > HERMITIAN_TOL * scale {
                return Err(Error::Validation(format!(
                    "non-Hermitian drive: H_{{{}}} differs from H_{{{k}}}^dagger by {residual:.3e}",
                    -k
                )));
            }
        }
        Ok(Self {
            dim,
            omega,
            components,
        })
    }

    /// Builds from harmonics where a missing partner `H_{-k}` is filled in as
    /// `H_k^dagger`. `H_0` is replaced by its Hermitian part only if it is
    /// already Hermitian to tolerance.
    pub fn from_partial(omega: f64, mut components: BTreeMap<i32, CMatrix>) -> Result<Self> {
        let missing: Vec<(i32, CMatrix)> = components
            .iter()
            .filter(|(k, _)| !components.contains_key(&(-**k)))
            .map(|(k, m)| (-k, m.adjoint()))
            .collect();
        components.extend(missing);
        Self::new(omega, components)
    }

    /// Time-independent Hamiltonian.
    pub fn stationary(omega: f64, h0: CMatrix) -> Result<Self> {
        Self::new(omega, BTreeMap::from([(0, h0)]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn components(&self) -> &BTreeMap<i32, CMatrix> {
        &self.components
    }

    pub fn component(&self, k: i32) -> Option<&CMatrix> {
        self.components.get(&k)
    }

    /// Largest |k| with a stored component.
    pub fn max_harmonic(&self) -> usize {
        self.components
            .keys()
            .map(|k| k.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Fourier synthesis `H(t) = sum_k H_k exp(i k Omega t)`.
    pub fn evaluate(&self, t: f64) -> CMatrix {
        let mut out = linalg::zeros(self.dim);
        for (k, m) in &self.components {
            if *k == 0 {
                out += m;
            } else {
                out += m * cis(f64::from(*k) * self.omega * t);
            }
        }
        out
    }

    /// Upper bound on the operator norm of `H(t)` (sum of Frobenius norms).
    pub fn norm_bound(&self) -> f64 {
        self.components.values().map(|m| m.norm()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOperator {
    pub matrix: CMatrix,
    pub coupling: f64,
}

impl ProbeOperator {
    pub fn new(matrix: CMatrix, coupling: f64) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Validation("probe operator must be square".into()));
        }
        let residual = linalg::hermiticity_residual(&matrix);
        if residual > HERMITIAN_TOL * linalg::max_abs(&matrix).max(1.0) {
            return Err(Error::Validation(format!(
                "probe operator is not Hermitian (residual {residual:.3e})"
            )));
        }
        if !(coupling.is_finite() && coupling >= 0.0) {
            return Err(Error::Validation(format!(
                "probe coupling must be >= 0, got {coupling}"
            )));
        }
        Ok(Self { matrix, coupling })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// A model together with its probe and the symmetries it is claimed to have.
#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub name: String,
    pub hamiltonian: PeriodicHamiltonian,
    pub probe: ProbeOperator,
    pub symmetries: Vec<SymmetrySpec>,
    pub basis_labels: Vec<String>,
}

impl ModelBundle {
    pub fn new(
        name: impl Into<String>,
        hamiltonian: PeriodicHamiltonian,
        probe: ProbeOperator,
        symmetries: Vec<SymmetrySpec>,
        basis_labels: Vec<String>,
    ) -> Result<Self> {
        let dim = hamiltonian.dim();
        if probe.dim() != dim {
            return Err(Error::Dimension {
                expected: dim,
                found: probe.dim(),
            });
        }
        for s in &symmetries {
            s.validate(dim)?;
        }
        if !basis_labels.is_empty() && basis_labels.len() != dim {
            return Err(Error::Validation(format!(
                "{} basis labels for dimension {dim}",
                basis_labels.len()
            )));
        }
        let basis_labels = if basis_labels.is_empty() {
            (0..dim).map(|i| i.to_string()).collect()
        } else {
            basis_labels
        };
        Ok(Self {
            name: name.into(),
            hamiltonian,
            probe,
            symmetries,
            basis_labels,
        })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn basis_index(&self, label: &str) -> Option<usize> {
        self.basis_labels.iter().position(|l| l == label)
    }

    pub fn symmetries_of_kind(&self, kind: SymmetryKind) -> impl Iterator<Item = &SymmetrySpec> {
        self.symmetries.iter().filter(move |s| s.kind == kind)
    }
}

/// Hermitian "transition" operator `|a><b| + h.c.`, reduced to `|a><a|` on
/// the diagonal.
fn transition(dim: usize, a: usize, b: usize) -> CMatrix {
    if a == b {
        linalg::ket_bra(dim, a, a)
    } else {
        linalg::ket_bra(dim, a, b) + linalg::ket_bra(dim, b, a)
    }
}

/// Benzene ring driven by circularly polarized light.
///
/// Basis: `g` (index 0) followed by the six site excitations `e1..e6`.
/// The drive enters as the antisymmetric hopping
/// `i f_j(t) |e_j><e_{j+1}| + h.c.` with `f_j(t) = f cos(Omega t + 2 pi j / 6)`,
/// so `H(t)` only carries harmonics `0, +-1`. The probe excites the ground
/// state into all sites with unit dipole, and the bundled 6-fold dynamical
/// rotation shifts `e_j -> e_{j+1}` while leaving `g` fixed.
pub fn build_benzene(e0: f64, j0: f64, f_drive: f64, omega: f64) -> Result<ModelBundle> {
    const SITES: usize = 6;
    let dim = SITES + 1;
    let site = |j: usize| 1 + (j % SITES);

    let mut h0 = linalg::zeros(dim);
    for j in 0..SITES {
        h0[(site(j), site(j))] = c(e0, 0.0);
        h0[(site(j), site(j + 1))] = c(j0, 0.0);
        h0[(site(j + 1), site(j))] = c(j0, 0.0);
    }

    // f_j(t) K_j with K_j = i|e_j><e_{j+1}| - i|e_{j+1}><e_j|; the j used in
    // the phase runs over 1..=6 like the site label.
    let mut h_plus = linalg::zeros(dim);
    for j in 0..SITES {
        let label = (j + 1) as f64;
        let phase = cis(2.0 * PI * label / SITES as f64);
        let mut k_j = linalg::zeros(dim);
        k_j[(site(j), site(j + 1))] = I;
        k_j[(site(j + 1), site(j))] = -I;
        h_plus += k_j * (phase * (0.5 * f_drive));
    }
    let h_minus = h_plus.adjoint();
    let hamiltonian =
        PeriodicHamiltonian::new(omega, BTreeMap::from([(-1, h_minus), (0, h0), (1, h_plus)]))?;

    let mut v = linalg::zeros(dim);
    for j in 0..SITES {
        v[(site(j), 0)] = ONE;
        v[(0, site(j))] = ONE;
    }
    let probe = ProbeOperator::new(v, 1.0)?;

    let mut rotation = linalg::ket_bra(dim, 0, 0);
    for j in 0..SITES {
        rotation[(site(j + 1), site(j))] = ONE;
    }
    let symmetries = vec![SymmetrySpec::rotational("R6", rotation, SITES as u32, 1)?];

    let mut labels = vec!["g".to_string()];
    labels.extend((1..=SITES).map(|j| format!("e{j}")));
    ModelBundle::new("benzene", hamiltonian, probe, symmetries, labels)
}

/// Driven dimer with basis `(g, e1, e2, f)`.
///
/// `H = Delta (A_ff - A_gg) + J0 A_{e1,e2} + h1(t) [A_{e1,f} + A_{g,e1} + r A_{e1,e2}]`
/// with `h1(t) = f cos(Omega t)` and probe `A_{e1,f} + A_{g,e1}`.
pub fn build_dimer(delta: f64, j0: f64, r: f64, f_drive: f64, omega: f64) -> Result<ModelBundle> {
    const G: usize = 0;
    const E1: usize = 1;
    const E2: usize = 2;
    const F: usize = 3;
    let dim = 4;
    let a = |x, y| transition(dim, x, y);

    let h0 = (a(F, F) - a(G, G)) * c(delta, 0.0) + a(E1, E2) * c(j0, 0.0);
    let drive = a(E1, F) + a(G, E1) + a(E1, E2) * c(r, 0.0);
    let h1 = drive * c(0.5 * f_drive, 0.0);
    let hamiltonian =
        PeriodicHamiltonian::new(omega, BTreeMap::from([(-1, h1.clone()), (0, h0), (1, h1)]))?;

    let probe = ProbeOperator::new(a(E1, F) + a(G, E1), 1.0)?;

    // Particle-hole partner map g <-> f with opposite signs on e1/e2.
    let p = a(G, F) - a(E1, E1) + a(E2, E2);
    let symmetries = vec![SymmetrySpec::particle_hole("P", p, 0.0, -1)?];

    let labels = ["g", "e1", "e2", "f"].map(String::from).to_vec();
    ModelBundle::new("dimer", hamiltonian, probe, symmetries, labels)
}

/// ac-driven two-level system `H = (h_x/2) sigma_x + (f/2) cos(Omega t) sigma_z`
/// probed by `sigma_x`.
///
/// Bundled symmetries: parity (`sigma_x`, half-period shift), the
/// particle-hole symmetry (`sigma_z`, half period), and for `h_x == 0` the
/// second particle-hole symmetry (`1`, half period). The time-reversal
/// (`1`, no shift) and chiral (`sigma_z`, half period) symmetries are
/// included as well; neither implies a dark-state rule on its own.
pub fn build_tls(h_x: f64, f_drive: f64, omega: f64) -> Result<ModelBundle> {
    let h0 = linalg::sigma_x() * c(0.5 * h_x, 0.0);
    let h1 = linalg::sigma_z() * c(0.25 * f_drive, 0.0);
    let hamiltonian =
        PeriodicHamiltonian::new(omega, BTreeMap::from([(-1, h1.clone()), (0, h0), (1, h1)]))?;
    let probe = ProbeOperator::new(linalg::sigma_x(), 1.0)?;

    let mut symmetries = vec![
        SymmetrySpec::rotational("R2", linalg::sigma_x(), 2, 1)?,
        SymmetrySpec::particle_hole("P1", linalg::sigma_z(), 0.5, -1)?,
    ];
    if h_x == 0.0 {
        symmetries.push(SymmetrySpec::particle_hole("P2", linalg::identity(2), 0.5, 1)?);
    }
    symmetries.push(SymmetrySpec::time_reversal("T", linalg::identity(2), 0.0, 1)?);
    symmetries.push(SymmetrySpec::chiral("C", linalg::sigma_z(), 0.5, -1)?);

    let labels = ["up", "down"].map(String::from).to_vec();
    ModelBundle::new("tls", hamiltonian, probe, symmetries, labels)
}

// ---------------------------------------------------------------------------
// Custom model documents

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDoc {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixDoc {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let (re, im) = linalg::to_real_imag(m);
        Self { re, im: Some(im) }
    }

    fn to_matrix(&self, field: &str, dim: usize) -> Result<CMatrix> {
        let zeros;
        let im = match &self.im {
            Some(im) => im,
            None => {
                zeros = self.re.iter().map(|row| vec![0.0; row.len()]).collect::<Vec<_>>();
                &zeros
            }
        };
        let m = linalg::from_real_imag(&self.re, im)
            .ok_or_else(|| Error::parse(field, "ragged matrix or re/im shape mismatch"))?;
        if m.nrows() != dim || m.ncols() != dim {
            return Err(Error::Validation(format!(
                "{field}: matrix is {}x{}, expected {dim}x{dim}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierDoc {
    pub k: i32,
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeDoc {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_coupling")]
    pub coupling: f64,
}

fn default_coupling() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetryDoc {
    pub kind: SymmetryKind,
    pub operator: MatrixDoc,
    pub t_shift_over_tau: f64,
    #[serde(default)]
    pub n_fold: Option<u32>,
    pub alpha_v: i8,
    #[serde(default)]
    pub name: Option<String>,
}

/// JSON-shaped description of an arbitrary periodically driven model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomModelDoc {
    pub dim: usize,
    pub omega: f64,
    pub fourier: Vec<FourierDoc>,
    pub probe: ProbeDoc,
    #[serde(default)]
    pub symmetries: Vec<SymmetryDoc>,
    #[serde(default)]
    pub labels: Vec<String>,
    #[serde(default)]
    pub name: Option<String>,
}

impl CustomModelDoc {
    /// Document describing an existing bundle (all stored harmonics).
    pub fn from_bundle(bundle: &ModelBundle) -> Self {
        let h = &bundle.hamiltonian;
        let fourier = h
            .components()
            .iter()
            .map(|(k, m)| {
                let (re, im) = linalg::to_real_imag(m);
                FourierDoc {
                    k: *k,
                    re,
                    im: Some(im),
                }
            })
            .collect();
        let (pre, pim) = linalg::to_real_imag(&bundle.probe.matrix);
        let symmetries = bundle
            .symmetries
            .iter()
            .map(|s| SymmetryDoc {
                kind: s.kind,
                operator: MatrixDoc::from_matrix(&s.operator),
                t_shift_over_tau: s.shift,
                n_fold: (s.kind == SymmetryKind::Rotational).then_some(s.n_fold),
                alpha_v: s.alpha_v,
                name: Some(s.name.clone()),
            })
            .collect();
        Self {
            dim: h.dim(),
            omega: h.omega(),
            fourier,
            probe: ProbeDoc {
                re: pre,
                im: Some(pim),
                coupling: bundle.probe.coupling,
            },
            symmetries,
            labels: bundle.basis_labels.clone(),
            name: Some(bundle.name.clone()),
        }
    }

    pub fn into_bundle(self) -> Result<ModelBundle> {
        let dim = self.dim;
        if dim == 0 {
            return Err(Error::parse("dim", "must be a positive integer"));
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(Error::parse("omega", "must be a positive real"));
        }
        if self.fourier.is_empty() {
            return Err(Error::Validation("fourier: no Fourier components given".into()));
        }
        let mut components = BTreeMap::new();
        for (idx, comp) in self.fourier.iter().enumerate() {
            let field = format!("fourier[{idx}]");
            let m = MatrixDoc {
                re: comp.re.clone(),
                im: comp.im.clone(),
            }
            .to_matrix(&field, dim)?;
            if components.insert(comp.k, m).is_some() {
                return Err(Error::Validation(format!(
                    "{field}: duplicate harmonic k={}",
                    comp.k
                )));
            }
        }
        if let Some(h0) = components.get(&0) {
            let residual = linalg::hermiticity_residual(h0);
            if residual > HERMITIAN_TOL * linalg::max_abs(h0).max(1.0) {
                return Err(Error::Validation(format!(
                    "fourier: H_0 is not Hermitian (residual {residual:.3e})"
                )));
            }
        }
        let hamiltonian = PeriodicHamiltonian::from_partial(self.omega, components)?;

        let probe_matrix = MatrixDoc {
            re: self.probe.re.clone(),
            im: self.probe.im.clone(),
        }
        .to_matrix("probe", dim)?;
        let probe = ProbeOperator::new(probe_matrix, self.probe.coupling)?;

        let mut symmetries = Vec::with_capacity(self.symmetries.len());
        for (idx, doc) in self.symmetries.iter().enumerate() {
            let field = format!("symmetries[{idx}]");
            let op = doc.operator.to_matrix(&format!("{field}.operator"), dim)?;
            let name = doc.name.clone().unwrap_or_else(|| format!("S{idx}"));
            let spec = match doc.kind {
                SymmetryKind::Rotational => {
                    let n = doc.n_fold.ok_or_else(|| {
                        Error::parse(format!("{field}.n_fold"), "required for RS symmetries")
                    })?;
                    let spec = SymmetrySpec::rotational(name, op, n, doc.alpha_v)?;
                    if (spec.shift - doc.t_shift_over_tau).abs() > 1e-12 {
                        return Err(Error::Validation(format!(
                            "{field}: RS time shift must equal 1/n_fold"
                        )));
                    }
                    spec
                }
                kind => SymmetrySpec::new(kind, name, op, doc.t_shift_over_tau, 1, doc.alpha_v)?,
            };
            symmetries.push(spec);
        }
        let name = self.name.unwrap_or_else(|| "custom".to_string());
        ModelBundle::new(name, hamiltonian, probe, symmetries, self.labels)
    }
}

/// Parses a custom-model JSON document into a bundle.
pub fn load_custom(document: &str) -> Result<ModelBundle> {
    let doc: CustomModelDoc = serde_json::from_str(document).map_err(|e| {
        let msg = e.to_string();
        // serde reports the failing key as "... field `name` ..."
        let field = msg
            .split('`')
            .nth(1)
            .map(str::to_string)
            .unwrap_or_else(|| "document".into());
        Error::parse(field, msg)
    })?;
    doc.into_bundle()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, sigma_x, sigma_z};

    const OMEGA: f64 = 1.0;

    #[test]
    fn static_hamiltonian_evaluates_to_h0() {
        let h0 = sigma_x() * c(0.3, 0.0) + sigma_z() * c(0.1, 0.0);
        let h = PeriodicHamiltonian::stationary(OMEGA, h0.clone()).unwrap();
        for t in [0.0, 0.7, 123.4] {
            assert!(max_abs_diff(&h.evaluate(t), &h0) < 1e-15);
        }
    }

    #[test]
    fn tls_at_quarter_period_is_pure_tunnelling() {
        let b = build_tls(0.05, 1.7, OMEGA).unwrap();
        let tau = b.hamiltonian.period();
        let expected = sigma_x() * c(0.025, 0.0);
        assert!(max_abs_diff(&b.hamiltonian.evaluate(tau / 4.0), &expected) < 1e-15);
    }

    #[test]
    fn tls_fourier_components() {
        let f = 1.3;
        let b = build_tls(0.05, f, OMEGA).unwrap();
        let keys: Vec<i32> = b.hamiltonian.components().keys().copied().collect();
        assert_eq!(keys, vec![-1, 0, 1]);
        let expected = sigma_z() * c(f / 4.0, 0.0);
        assert!(max_abs_diff(b.hamiltonian.component(1).unwrap(), &expected) < 1e-15);
        assert!(max_abs_diff(b.hamiltonian.component(-1).unwrap(), &expected) < 1e-15);
    }

    /// Direct time-domain benzene Hamiltonian, written without harmonics.
    fn benzene_direct(e0: f64, j0: f64, f: f64, omega: f64, t: f64) -> CMatrix {
        let mut h = linalg::zeros(7);
        for j in 1..=6usize {
            let next = j % 6 + 1;
            h[(j, j)] = c(e0, 0.0);
            h[(j, next)] += c(j0, 0.0);
            h[(next, j)] += c(j0, 0.0);
            let fj = f * (omega * t + 2.0 * PI * j as f64 / 6.0).cos();
            h[(j, next)] += I * fj;
            h[(next, j)] += -I * fj;
        }
        h
    }

    #[test]
    fn benzene_matches_direct_formula() {
        let (e0, j0, f) = (0.45, 0.05, 1.1);
        let b = build_benzene(e0, j0, f, OMEGA).unwrap();
        for t in [0.0, 0.3, 1.9, 4.4] {
            let d = benzene_direct(e0, j0, f, OMEGA, t);
            assert!(max_abs_diff(&b.hamiltonian.evaluate(t), &d) < 1e-12, "t = {t}");
        }
        let keys: Vec<i32> = b.hamiltonian.components().keys().copied().collect();
        assert_eq!(keys, vec![-1, 0, 1]);
    }

    #[test]
    fn built_models_stay_hermitian_at_random_times() {
        let models = [
            build_benzene(0.45, 0.05, 1.5, OMEGA).unwrap(),
            build_dimer(0.2, 0.05, 2.0, 1.2, OMEGA).unwrap(),
            build_tls(0.05, 2.4, OMEGA).unwrap(),
        ];
        let mut t = 0.123_f64;
        for b in &models {
            for _ in 0..100 {
                t = (t * 7.31 + 0.577).rem_euclid(50.0);
                let h = b.hamiltonian.evaluate(t);
                assert!(linalg::hermiticity_residual(&h) < 1e-12);
            }
        }
    }

    #[test]
    fn dimer_probe_is_odd_under_particle_hole_map() {
        let b = build_dimer(0.2, 0.05, 2.0, 0.7, OMEGA).unwrap();
        let p = &b.symmetries[0].operator;
        let v = &b.probe.matrix;
        let transformed = p.adjoint() * v.conjugate() * p;
        assert!(max_abs_diff(&transformed, &(-v.clone())) < 1e-15);
    }

    #[test]
    fn dimer_static_spectrum() {
        let b = build_dimer(0.2, 0.05, 2.0, 0.0, OMEGA).unwrap();
        let mut ev: Vec<f64> = b
            .hamiltonian
            .evaluate(0.0)
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        for (got, want) in ev.iter().zip([-0.2, -0.05, 0.05, 0.2]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn second_particle_hole_symmetry_only_without_tunnelling() {
        assert_eq!(build_tls(0.0, 1.0, OMEGA).unwrap().symmetries_of_kind(SymmetryKind::ParticleHole).count(), 2);
        assert_eq!(build_tls(0.05, 1.0, OMEGA).unwrap().symmetries_of_kind(SymmetryKind::ParticleHole).count(), 1);
    }

    fn tls_document(h_x: f64, f: f64, both_signs: bool) -> String {
        let mut fourier = vec![
            serde_json::json!({"k": 0, "re": [[0.0, h_x / 2.0], [h_x / 2.0, 0.0]], "im": [[0.0, 0.0], [0.0, 0.0]]}),
            serde_json::json!({"k": 1, "re": [[f / 4.0, 0.0], [0.0, -f / 4.0]], "im": [[0.0, 0.0], [0.0, 0.0]]}),
        ];
        if both_signs {
            fourier.push(serde_json::json!({"k": -1, "re": [[f / 4.0, 0.0], [0.0, -f / 4.0]]}));
        }
        serde_json::json!({
            "dim": 2,
            "omega": 1.0,
            "fourier": fourier,
            "probe": {"re": [[0.0, 1.0], [1.0, 0.0]], "im": [[0.0, 0.0], [0.0, 0.0]], "coupling": 1.0},
            "symmetries": [
                {"kind": "RS", "operator": {"re": [[0.0, 1.0], [1.0, 0.0]]}, "t_shift_over_tau": 0.5, "n_fold": 2, "alpha_v": 1}
            ],
            "labels": ["up", "down"]
        })
        .to_string()
    }

    #[test]
    fn custom_document_reproduces_tls() {
        let (h_x, f) = (0.05, 2.1);
        let reference = build_tls(h_x, f, OMEGA).unwrap();
        for both in [false, true] {
            let custom = load_custom(&tls_document(h_x, f, both)).unwrap();
            assert_eq!(custom.dim(), 2);
            for k in -1..=1 {
                let a = custom.hamiltonian.component(k).unwrap();
                let b = reference.hamiltonian.component(k).unwrap();
                assert!(max_abs_diff(a, b) < 1e-15);
            }
            assert!(max_abs_diff(&custom.probe.matrix, &reference.probe.matrix) < 1e-15);
            assert_eq!(custom.symmetries[0].kind, SymmetryKind::Rotational);
            assert_eq!(custom.symmetries[0].n_fold, 2);
        }
    }

    #[test]
    fn custom_document_errors() {
        let empty = r#"{"dim":2,"omega":1.0,"fourier":[],"probe":{"re":[[0,1],[1,0]]}}"#;
        assert!(matches!(load_custom(empty), Err(Error::Validation(_))));

        let mismatch = r#"{"dim":2,"omega":1.0,"fourier":[{"k":0,"re":[[1,0,0],[0,1,0],[0,0,1]]}],"probe":{"re":[[0,1],[1,0]]}}"#;
        assert!(matches!(load_custom(mismatch), Err(Error::Validation(_))));

        let missing = r#"{"dim":2,"fourier":[{"k":0,"re":[[1,0],[0,1]]}],"probe":{"re":[[0,1],[1,0]]}}"#;
        match load_custom(missing) {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "omega"),
            other => panic!("unexpected {other:?}"),
        }

        let inconsistent = r#"{"dim":2,"omega":1.0,"fourier":[
            {"k":0,"re":[[0,0],[0,0]]},
            {"k":1,"re":[[1,0],[0,0]]},
            {"k":-1,"re":[[0,0],[0,1]]}],
            "probe":{"re":[[0,1],[1,0]]}}"#;
        assert!(matches!(load_custom(inconsistent), Err(Error::Validation(_))));
    }

    #[test]
    fn bundle_document_round_trip() {
        let b = build_dimer(0.2, 0.05, 2.0, 1.0, OMEGA).unwrap();
        let doc = CustomModelDoc::from_bundle(&b);
        let text = serde_json::to_string(&doc).unwrap();
        let back = load_custom(&text).unwrap();
        assert_eq!(back.hamiltonian, b.hamiltonian);
        assert_eq!(back.symmetries.len(), 1);
        assert_eq!(back.basis_labels, b.basis_labels);
    }
}
