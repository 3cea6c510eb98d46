//! Small dense complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn cis(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn zeros(dim: usize) -> CMatrix {
    CMatrix::zeros(dim, dim)
}

pub fn sigma_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn sigma_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn sigma_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

/// `max |m - m†|`.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// `max |m† m - 1|`.
pub fn unitarity_residual(m: &CMatrix) -> f64 {
    max_abs_diff(&(m.adjoint() * m), &identity(m.ncols()))
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// `exp(-i dt h)` for Hermitian `h`, via its eigendecomposition.
pub fn expm_hermitian(h: &CMatrix, dt: f64) -> CMatrix {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let phase = cis(-lambda * dt);
        for z in scaled.column_mut(j).iter_mut() {
            *z *= phase;
        }
    }
    scaled * v.adjoint()
}

/// Hermitian part `(m + m†)/2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn from_real_imag(re: &[Vec<f64>], im: &[Vec<f64>]) -> Option<CMatrix> {
    let rows = re.len();
    if im.len() != rows {
        return None;
    }
    let cols = re.first().map_or(0, Vec::len);
    let mut out = CMatrix::zeros(rows, cols);
    for i in 0..rows {
        if re[i].len() != cols || im[i].len() != cols {
            return None;
        }
        for j in 0..cols {
            out[(i, j)] = c(re[i][j], im[i][j]);
        }
    }
    Some(out)
}

pub fn to_real_imag(m: &CMatrix) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let re = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].re).collect())
        .collect();
    let im = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].im).collect())
        .collect();
    (re, im)
}

/// Projector-like outer product `|a><b|` on the standard basis.
pub fn ket_bra(dim: usize, a: usize, b: usize) -> CMatrix {
    let mut m = zeros(dim);
    m[(a, b)] = ONE;
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_algebra() {
        let x = sigma_x();
        let y = sigma_y();
        let z = sigma_z();
        assert!(max_abs_diff(&(&x * &y), &(z.map(|v| v * I))) < 1e-15);
        assert!(unitarity_residual(&x) < 1e-15);
        assert!(hermiticity_residual(&y) < 1e-15);
    }

    #[test]
    fn hermitian_exponential_of_sigma_z() {
        let u = expm_hermitian(&sigma_z(), 0.3);
        assert!((u[(0, 0)] - cis(-0.3)).norm() < 1e-14);
        assert!((u[(1, 1)] - cis(0.3)).norm() < 1e-14);
        assert!(u[(0, 1)].norm() < 1e-14);
        assert!(unitarity_residual(&u) < 1e-14);
    }
}
