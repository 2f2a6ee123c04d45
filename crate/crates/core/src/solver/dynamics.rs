//! Translation-invariant Bogoliubov maps and quench evolution of Gaussian states.
//!
//! A map is given per momentum as a 2s×2s unitary `W_k` acting on
//! `Ψ_k = (b_k, b_{−k}†)`. It preserves the Nambu structure iff
//! `σˣ conj(W_{−k}) σˣ = W_k`. The correlation block transforms as
//! `Γ_k ↦ conj(W_k) Γ_k W_kᵀ`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lattice::LatticeShape;
use crate::linalg::{self, CMatrix};
use crate::model::{bdg_block, CouplingSet};

use super::{CovarianceKernel, SolverError};

/// Tolerance for the unitarity and particle-hole checks on a map.
pub const MAP_TOL: f64 = 1e-10;

pub fn apply_bogoliubov_map(cov: &CovarianceKernel, map: &[CMatrix]) -> Result<CovarianceKernel, SolverError> {
    let shape = cov.shape();
    let n = 2 * shape.spin();
    if map.len() != shape.sites() {
        return Err(SolverError::GridSize {
            expected: shape.sites(),
            got: map.len(),
        });
    }
    for (flat, w) in map.iter().enumerate() {
        let k = shape.momentum(flat).components().to_vec();
        if w.nrows() != n || w.ncols() != n {
            return Err(SolverError::InvalidMap {
                k,
                what: "dimension",
                residual: f64::INFINITY,
            });
        }
        let unitarity = linalg::max_abs_diff(&(w.adjoint() * w), &CMatrix::identity(n, n));
        if unitarity > MAP_TOL {
            return Err(SolverError::InvalidMap {
                k,
                what: "unitarity",
                residual: unitarity,
            });
        }
        let minus = &map[shape.negated_momentum_flat(flat)];
        let ph = linalg::max_abs_diff(&linalg::ph_conjugate(&minus.conjugate()), w);
        if ph > MAP_TOL {
            return Err(SolverError::InvalidMap {
                k,
                what: "particle-hole",
                residual: ph,
            });
        }
    }
    let nambu = cov
        .nambu()
        .iter()
        .zip(map)
        .map(|(gamma, w)| w.conjugate() * gamma * w.transpose())
        .collect();
    CovarianceKernel::from_nambu(shape.clone(), nambu, cov.zero_modes().to_vec())
}

/// `W_k = exp(−i t H_k)` for the BdG blocks of `h`; always particle-hole structured.
pub fn bogoliubov_map_from_hamiltonian(h: &CouplingSet, t: f64) -> Result<Vec<CMatrix>, SolverError> {
    let shape = h.shape();
    shape
        .momenta()
        .map(|k| {
            linalg::unitary_evolution(&bdg_block(h, &k).matrix, t).map_err(|source| SolverError::Eigen {
                k: k.components().to_vec(),
                source,
            })
        })
        .collect()
}

/// `b_k^j ↔ b_{−k}^{j†}` on spin component `band`, identity elsewhere.
pub fn particle_hole_swap(shape: &LatticeShape, band: usize) -> Vec<CMatrix> {
    let s = shape.spin();
    let mut w = CMatrix::identity(2 * s, 2 * s);
    w.swap_rows(band, s + band);
    vec![w; shape.sites()]
}

/// A random structure-preserving map `W_k = exp(−i X_k)`. The generators are
/// independent Hermitian matrices at each pair {k, −k}, tied together by
/// `X_{−k} = −σˣ conj(X_k) σˣ` (and projected onto that relation at k = −k),
/// so the map is translation invariant but need not come from any local
/// Hamiltonian.
pub fn random_bogoliubov_map(shape: &LatticeShape, scale: f64, seed: u64) -> Vec<CMatrix> {
    let n = 2 * shape.spin();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut generators: Vec<Option<CMatrix>> = vec![None; shape.sites()];
    for flat in 0..shape.sites() {
        if generators[flat].is_some() {
            continue;
        }
        let raw = CMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.random_range(-scale..=scale), rng.random_range(-scale..=scale))
        });
        let x = linalg::hermitian_part(&raw);
        let minus = shape.negated_momentum_flat(flat);
        let mirror = -linalg::ph_conjugate(&x.conjugate());
        if minus == flat {
            generators[flat] = Some((&x + &mirror).scale(0.5));
        } else {
            generators[flat] = Some(x);
            generators[minus] = Some(mirror);
        }
    }
    generators
        .into_iter()
        .map(|x| linalg::unitary_evolution(&x.expect("every momentum visited"), 1.0).expect("small Hermitian eigensolve"))
        .collect()
}

/// Heisenberg evolution for time `t` under the quadratic Hamiltonian `h`.
pub fn evolve_quench(cov: &CovarianceKernel, h: &CouplingSet, t: f64) -> Result<CovarianceKernel, SolverError> {
    if h.shape() != cov.shape() {
        return Err(SolverError::ShapeMismatch {
            left: cov.shape().clone(),
            right: h.shape().clone(),
        });
    }
    apply_bogoliubov_map(cov, &bogoliubov_map_from_hamiltonian(h, t)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::random_model;
    use crate::solver::{diagonalize, ground_covariance, DEFAULT_ZERO_MODE_TOL};
    use num_complex::Complex64;

    fn max_nambu_diff(a: &CovarianceKernel, b: &CovarianceKernel) -> f64 {
        a.nambu()
            .iter()
            .zip(b.nambu())
            .map(|(x, y)| linalg::max_abs_diff(x, y))
            .fold(0.0, f64::max)
    }

    fn ground(shape: &LatticeShape, seed: u64) -> (CouplingSet, CovarianceKernel) {
        let c = random_model(shape, 1, true, seed).unwrap();
        let cov = ground_covariance(&diagonalize(&c).unwrap(), DEFAULT_ZERO_MODE_TOL);
        (c, cov)
    }

    #[test]
    fn identity_map_is_noop() {
        let shape = LatticeShape::chain(6, 2).unwrap();
        let (_, cov) = ground(&shape, 1);
        let id = vec![CMatrix::identity(4, 4); 6];
        assert_eq!(apply_bogoliubov_map(&cov, &id).unwrap(), cov);
    }

    #[test]
    fn particle_hole_swap_flips_occupation() {
        let shape = LatticeShape::chain(5, 1).unwrap();
        let raw = crate::model::RawCouplings::from_signed(
            shape.clone(),
            [(vec![0], CMatrix::from_element(1, 1, Complex64::new(-1.0, 0.0)))],
            [],
        )
        .unwrap();
        let c = CouplingSet::try_from_raw(raw).unwrap();
        let cov = ground_covariance(&diagonalize(&c).unwrap(), DEFAULT_ZERO_MODE_TOL);
        let swapped = apply_bogoliubov_map(&cov, &particle_hole_swap(&shape, 0)).unwrap();
        for i in 0..5 {
            assert!((cov.g(i)[(0, 0)].re - 1.0).abs() < 1e-15);
            assert!(swapped.g(i)[(0, 0)].norm() < 1e-15);
        }
    }

    #[test]
    fn invalid_maps_are_rejected() {
        let shape = LatticeShape::chain(6, 1).unwrap();
        let (_, cov) = ground(&shape, 2);
        let mut bad = vec![CMatrix::identity(2, 2); 6];
        bad[1] = CMatrix::from_row_slice(2, 2, &[Complex64::new(0.0, 1.0), 0.0.into(), 0.0.into(), 1.0.into()]);
        assert!(matches!(
            apply_bogoliubov_map(&cov, &bad),
            Err(SolverError::InvalidMap { what: "particle-hole", .. })
        ));
        bad[1] = CMatrix::identity(2, 2) * Complex64::new(2.0, 0.0);
        assert!(matches!(
            apply_bogoliubov_map(&cov, &bad),
            Err(SolverError::InvalidMap { what: "unitarity", .. })
        ));
        assert!(matches!(
            apply_bogoliubov_map(&cov, &bad[..3]),
            Err(SolverError::GridSize { .. })
        ));
    }

    #[test]
    fn quench_zero_time_stationarity_and_composition() {
        let shape = LatticeShape::chain(7, 2).unwrap();
        let (c, cov) = ground(&shape, 3);
        assert!(max_nambu_diff(&evolve_quench(&cov, &c, 0.0).unwrap(), &cov) < 1e-14);
        assert!(max_nambu_diff(&evolve_quench(&cov, &c, 3.3).unwrap(), &cov) < 1e-10);

        let h = random_model(&shape, 2, true, 99).unwrap();
        let once = evolve_quench(&evolve_quench(&cov, &h, 1.2).unwrap(), &h, 2.5).unwrap();
        let direct = evolve_quench(&cov, &h, 3.7).unwrap();
        assert!(max_nambu_diff(&once, &direct) < 1e-10);
        assert!(once.occupation_violation() < 1e-10);
        assert!(once.pairing_antisymmetry_residual() < 1e-10);
    }

    #[test]
    fn random_maps_are_valid_and_nontrivial() {
        let shape = LatticeShape::chain(7, 2).unwrap();
        let (_, cov) = ground(&shape, 4);
        let map = random_bogoliubov_map(&shape, 1.0, 8);
        let moved = apply_bogoliubov_map(&cov, &map).unwrap();
        assert!(max_nambu_diff(&moved, &cov) > 1e-3);
        assert!(moved.occupation_violation() < 1e-10);
        let even = LatticeShape::chain(6, 1).unwrap();
        let (_, cov) = ground(&even, 1);
        assert!(apply_bogoliubov_map(&cov, &random_bogoliubov_map(&even, 2.0, 3)).is_ok());
    }

    #[test]
    fn quench_rejects_shape_mismatch() {
        let (_, cov) = ground(&LatticeShape::chain(6, 1).unwrap(), 0);
        let h = random_model(&LatticeShape::chain(8, 1).unwrap(), 1, false, 0).unwrap();
        assert!(matches!(evolve_quench(&cov, &h, 1.0), Err(SolverError::ShapeMismatch { .. })));
    }
}
