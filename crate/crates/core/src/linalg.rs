//! Small dense complex linear algebra shared by the solver, observables and oracle.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Failure of the Hermitian eigensolver to converge.
#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("Hermitian eigensolver did not converge for a {dim}x{dim} matrix")]
pub struct EigenFailure {
    pub dim: usize,
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending and
/// eigenvectors stored as the matching columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

pub fn eigh(m: &CMatrix) -> Result<HermitianEigen, EigenFailure> {
    let n = m.nrows();
    let hermitian = hermitian_part(m);
    let eig = hermitian
        .try_symmetric_eigen(f64::EPSILON, 10_000)
        .ok_or(EigenFailure { dim: n })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(HermitianEigen { values, vectors })
}

/// (M + M†)/2; discards round-off anti-Hermitian noise before an eigensolve.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    max_abs(&(a - b))
}

/// σˣ acting on the particle-hole split of a 2s-dimensional space.
pub fn sigma_x_ph(s: usize) -> CMatrix {
    let mut m = CMatrix::zeros(2 * s, 2 * s);
    for j in 0..s {
        m[(j, s + j)] = ONE;
        m[(s + j, j)] = ONE;
    }
    m
}

/// σˣ M σˣ without forming σˣ: swaps the particle and hole blocks.
pub fn ph_conjugate(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let s = n / 2;
    CMatrix::from_fn(n, n, |r, c| m[((r + s) % n, (c + s) % n)])
}

/// σˣ v: swaps the particle and hole halves of a 2s-vector.
pub fn ph_conjugate_vector(v: &nalgebra::DVector<Complex64>) -> nalgebra::DVector<Complex64> {
    let n = v.len();
    let s = n / 2;
    nalgebra::DVector::from_fn(n, |r, _| v[(r + s) % n])
}

/// Assembles [[a, b], [c, d]] from four equally sized square blocks.
pub fn block2x2(a: &CMatrix, b: &CMatrix, c: &CMatrix, d: &CMatrix) -> CMatrix {
    let s = a.nrows();
    let mut m = CMatrix::zeros(2 * s, 2 * s);
    m.view_mut((0, 0), (s, s)).copy_from(a);
    m.view_mut((0, s), (s, s)).copy_from(b);
    m.view_mut((s, 0), (s, s)).copy_from(c);
    m.view_mut((s, s), (s, s)).copy_from(d);
    m
}

pub fn block(m: &CMatrix, row: usize, col: usize) -> CMatrix {
    let s = m.nrows() / 2;
    m.view((row * s, col * s), (s, s)).into_owned()
}

/// exp(−i t H) for Hermitian H via its spectral decomposition.
pub fn unitary_evolution(h: &CMatrix, t: f64) -> Result<CMatrix, EigenFailure> {
    let eig = eigh(h)?;
    let phases = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        eig.values.len(),
        eig.values.iter().map(|&e| Complex64::from_polar(1.0, -e * t)),
    ));
    Ok(&eig.vectors * phases * eig.vectors.adjoint())
}

pub fn is_unitary(m: &CMatrix, tol: f64) -> bool {
    let n = m.nrows();
    m.ncols() == n && max_abs_diff(&(m.adjoint() * m), &CMatrix::identity(n, n)) <= tol
}

pub fn sign(x: f64, tol: f64) -> f64 {
    if x > tol {
        1.0
    } else if x < -tol {
        -1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigh_sorts_ascending_and_diagonalizes() {
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[
                Complex64::new(2.0, 0.0),
                Complex64::new(0.0, 1.0),
                ZERO,
                Complex64::new(0.0, -1.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(0.5, 0.5),
                ZERO,
                Complex64::new(0.5, -0.5),
                Complex64::new(0.3, 0.0),
            ],
        );
        let eig = eigh(&m).unwrap();
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            3,
            eig.values.iter().map(|&e| Complex64::new(e, 0.0)),
        ));
        assert!(max_abs_diff(&(&m * &eig.vectors), &(&eig.vectors * d)) < 1e-13);
    }

    #[test]
    fn ph_conjugate_matches_explicit_sigma_x() {
        let m = CMatrix::from_fn(4, 4, |r, c| Complex64::new(r as f64, c as f64 * 0.5));
        let sx = sigma_x_ph(2);
        assert_eq!(ph_conjugate(&m), &sx * &m * &sx);
    }

    #[test]
    fn evolution_is_unitary_and_composes() {
        let h = CMatrix::from_fn(2, 2, |r, c| {
            if r == c {
                Complex64::new(r as f64 - 0.3, 0.0)
            } else if r < c {
                Complex64::new(0.4, 0.7)
            } else {
                Complex64::new(0.4, -0.7)
            }
        });
        let u1 = unitary_evolution(&h, 0.7).unwrap();
        let u2 = unitary_evolution(&h, 1.1).unwrap();
        let u12 = unitary_evolution(&h, 1.8).unwrap();
        assert!(is_unitary(&u1, 1e-13));
        assert!(max_abs_diff(&(&u2 * &u1), &u12) < 1e-13);
    }
}
