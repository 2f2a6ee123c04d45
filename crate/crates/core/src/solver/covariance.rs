//! Gaussian states as per-momentum Nambu correlation blocks.
//!
//! With `Ψ_k = (b_k, b_{−k}†)` the state is stored as
//!
//! ```text
//! Γ_k = ⟨Ψ_k^* Ψ_kᵀ⟩ = [[ G_k ,  ⟨b_k† b_{−k}†⟩ ],
//!                       [ F_k ,  1 − G_{−k}ᵀ    ]]
//! G_k^{jj'} = ⟨b_k^{j†} b_k^{j'}⟩,   F_k^{jj'} = ⟨b_{−k}^j b_k^{j'}⟩
//! ```
//!
//! so that `⟨b_m^{j†} b_{m+n}^{j'}⟩ = (1/N) Σ_k e^{+2πi n·k/N} G_k^{jj'}` and
//! likewise for `⟨b_m b_{m+n}⟩` with `F_k`. `G_k` is the physical occupation
//! kernel (eigenvalues in [0, 1]); compared with the ½-normalized kernels
//! `(b†b)_k`, `(bb)_k` written in terms of M, P, S±, Z± the mapping is
//! `G_k = ½ Σ_l (b†b)^l_{−k}` and `F_k = ½ Σ_l (bb)^l_{−k}`.
//!
//! In the ground state `Γ_k` is the transpose of the spectral projector of
//! `H_k` onto negative energies.

use std::collections::BTreeMap;

use crate::lattice::{self, LatticeShape, MomentumIndex, SiteOffset};
use crate::linalg::{self, CMatrix};

use super::{BogoliubovSolution, SolverError};

/// Default |λ| below which a one-particle mode counts as a zero mode.
pub const DEFAULT_ZERO_MODE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroMode {
    pub k: MomentumIndex,
    /// Position in the ascending energy list at `k`.
    pub index: usize,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceKernel {
    shape: LatticeShape,
    nambu: Vec<CMatrix>,
    zero_modes: Vec<ZeroMode>,
}

impl CovarianceKernel {
    /// Wraps per-momentum Nambu blocks; `nambu` must cover the momentum grid in
    /// row-major order.
    pub fn from_nambu(shape: LatticeShape, nambu: Vec<CMatrix>, zero_modes: Vec<ZeroMode>) -> Result<Self, SolverError> {
        if nambu.len() != shape.sites() {
            return Err(SolverError::GridSize {
                expected: shape.sites(),
                got: nambu.len(),
            });
        }
        Ok(Self { shape, nambu, zero_modes })
    }

    pub fn shape(&self) -> &LatticeShape {
        &self.shape
    }

    pub fn nambu(&self) -> &[CMatrix] {
        &self.nambu
    }

    pub fn zero_modes(&self) -> &[ZeroMode] {
        &self.zero_modes
    }

    pub fn g(&self, flat: usize) -> CMatrix {
        linalg::block(&self.nambu[flat], 0, 0)
    }

    pub fn f(&self, flat: usize) -> CMatrix {
        linalg::block(&self.nambu[flat], 1, 0)
    }

    pub fn g_kernel(&self) -> Vec<CMatrix> {
        (0..self.nambu.len()).map(|i| self.g(i)).collect()
    }

    pub fn f_kernel(&self) -> Vec<CMatrix> {
        (0..self.nambu.len()).map(|i| self.f(i)).collect()
    }

    /// Largest distance of any eigenvalue of G_k from [0, 1].
    pub fn occupation_violation(&self) -> f64 {
        (0..self.nambu.len())
            .map(|i| {
                linalg::eigh(&self.g(i))
                    .map(|e| e.values.iter().map(|&v| (-v).max(v - 1.0).max(0.0)).fold(0.0, f64::max))
                    .unwrap_or(f64::INFINITY)
            })
            .fold(0.0, f64::max)
    }

    /// max |F_k + F_{−k}ᵀ|.
    pub fn pairing_antisymmetry_residual(&self) -> f64 {
        (0..self.nambu.len())
            .map(|i| {
                let minus = self.shape.negated_momentum_flat(i);
                linalg::max_abs(&(self.f(i) + self.f(minus).transpose()))
            })
            .fold(0.0, f64::max)
    }

    /// max |Γ_k² − Γ_k|; zero for pure Gaussian states.
    pub fn idempotence_residual(&self) -> f64 {
        self.nambu
            .iter()
            .map(|g| linalg::max_abs_diff(&(g * g), g))
            .fold(0.0, f64::max)
    }

    /// max |Γ_k − Γ_k†|.
    pub fn hermiticity_residual(&self) -> f64 {
        self.nambu
            .iter()
            .map(|g| linalg::max_abs_diff(g, &g.adjoint()))
            .fold(0.0, f64::max)
    }

    /// max |Γ_22(k) − (1 − G_{−k}ᵀ)|, the consistency of the hole block with
    /// the particle block at −k.
    pub fn hole_block_residual(&self) -> f64 {
        let s = self.shape.spin();
        (0..self.nambu.len())
            .map(|i| {
                let minus = self.shape.negated_momentum_flat(i);
                let want = CMatrix::identity(s, s) - self.g(minus).transpose();
                linalg::max_abs_diff(&linalg::block(&self.nambu[i], 1, 1), &want)
            })
            .fold(0.0, f64::max)
    }
}

/// Fills every negative-energy mode; modes with |λ| < `zero_mode_tol` get
/// occupation ½ and are recorded.
pub fn ground_covariance(sol: &BogoliubovSolution, zero_mode_tol: f64) -> CovarianceKernel {
    let mut zero_modes = Vec::new();
    let nambu = sol
        .momenta()
        .iter()
        .map(|m| {
            let n = m.energies.len();
            let mut proj = CMatrix::zeros(n, n);
            for (i, &e) in m.energies.iter().enumerate() {
                let weight = if e.abs() < zero_mode_tol {
                    zero_modes.push(ZeroMode {
                        k: m.k().clone(),
                        index: i,
                        energy: e,
                    });
                    0.5
                } else if e < 0.0 {
                    1.0
                } else {
                    continue;
                };
                let v = m.vectors.column(i);
                proj += (v * v.adjoint()).scale(weight);
            }
            proj.transpose()
        })
        .collect();
    CovarianceKernel {
        shape: sol.shape().clone(),
        nambu,
        zero_modes,
    }
}

/// Ground-state kernels `(G_k, F_k)` assembled from the Bogoliubov coefficients
/// through M, P, S± and Z±. Returns `None` if any block is degenerate or has a
/// mode within `zero_mode_tol` of zero, where the coefficients are not canonical.
pub fn kernel_route(sol: &BogoliubovSolution, zero_mode_tol: f64) -> Option<Vec<(CMatrix, CMatrix)>> {
    let shape = sol.shape();
    let s = shape.spin();
    let coeffs: Vec<_> = (0..shape.sites()).map(|i| sol.coefficients(i)).collect::<Option<_>>()?;
    if coeffs.iter().flat_map(|c| &c.energies).any(|e| e.abs() < zero_mode_tol) {
        return None;
    }
    let sgn = |e: f64| e.signum();
    Some(
        (0..shape.sites())
            .map(|flat| {
                let here = &coeffs[flat];
                let there = &coeffs[shape.negated_momentum_flat(flat)];
                let mut g = CMatrix::zeros(s, s);
                let mut f = CMatrix::zeros(s, s);
                for l in 0..s {
                    // M and P at −k for band l.
                    let m = 0.5 * (sgn(there.energies[l]) - sgn(here.energies[l]));
                    let p = 0.5 * (sgn(there.energies[l]) + sgn(here.energies[l]));
                    for j in 0..s {
                        for jp in 0..s {
                            // (Z^{l±}_k)_{jj'} = ᾱ_k^{lj} α_k^{lj'} ± β_{−k}^{lj} β̄_{−k}^{lj'}
                            let za = here.alpha[(l, j)].conj() * here.alpha[(l, jp)];
                            let zb = there.beta[(l, j)] * there.beta[(l, jp)].conj();
                            let z_plus = za + zb;
                            let z_minus = za - zb;
                            g[(j, jp)] += z_plus.conj() * (m + 1.0) - z_minus.conj() * p;
                            // (S^{l±}_{−k})_{jj'} = ᾱ_{−k}^{lj} β_{−k}^{lj'} ± β_k^{lj} ᾱ_k^{lj'}
                            let sa = there.alpha[(l, j)].conj() * there.beta[(l, jp)];
                            let sb = here.beta[(l, j)] * here.alpha[(l, jp)].conj();
                            f[(j, jp)] += (sa + sb) * (m + 1.0) + (sa - sb) * p;
                        }
                    }
                }
                (g.scale(0.5), f.scale(0.5))
            })
            .collect(),
    )
}

/// Real-space two-point functions at a set of offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSpaceCorrelators {
    /// ⟨b_m^{j†} b_{m+n}^{j'}⟩ keyed by n.
    pub hopping: BTreeMap<SiteOffset, CMatrix>,
    /// ⟨b_m^j b_{m+n}^{j'}⟩ keyed by n.
    pub pairing: BTreeMap<SiteOffset, CMatrix>,
}

pub fn real_space(cov: &CovarianceKernel, offsets: &[SiteOffset]) -> Result<RealSpaceCorrelators, SolverError> {
    let shape = cov.shape();
    let hop = lattice::inverse_fourier_at(&cov.g_kernel(), offsets, shape)?;
    let pair = lattice::inverse_fourier_at(&cov.f_kernel(), offsets, shape)?;
    Ok(RealSpaceCorrelators {
        hopping: offsets.iter().cloned().zip(hop).collect(),
        pairing: offsets.iter().cloned().zip(pair).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{catalog, random_model, CouplingSet, ModelParams, RawCouplings};
    use crate::solver::diagonalize;
    use num_complex::Complex64;

    fn on_site(n: usize, mu: f64) -> CouplingSet {
        let shape = LatticeShape::chain(n, 1).unwrap();
        let raw = RawCouplings::from_signed(shape, [(vec![0], CMatrix::from_element(1, 1, Complex64::new(mu, 0.0)))], []).unwrap();
        CouplingSet::try_from_raw(raw).unwrap()
    }

    #[test]
    fn empty_and_filled_bands() {
        for (mu, occ) in [(0.8, 0.0), (-0.8, 1.0)] {
            let cov = ground_covariance(&diagonalize(&on_site(6, mu)).unwrap(), DEFAULT_ZERO_MODE_TOL);
            for i in 0..6 {
                assert!((cov.g(i)[(0, 0)] - Complex64::new(occ, 0.0)).norm() < 1e-15);
                assert!(cov.f(i)[(0, 0)].norm() < 1e-15);
            }
            let offsets: Vec<_> = cov.shape().offsets().collect();
            let rc = real_space(&cov, &offsets).unwrap();
            for (n, c) in &rc.hopping {
                let want = if n.is_zero() { occ } else { 0.0 };
                assert!((c[(0, 0)] - Complex64::new(want, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn p_model_fills_one_band() {
        let shape = LatticeShape::chain(12, 2).unwrap();
        for p in [0.5, 2.0, 3.7] {
            let c = catalog(&ModelParams::new("paper-p-model", shape.clone()).with("p", p)).unwrap();
            let cov = ground_covariance(&diagonalize(&c).unwrap(), DEFAULT_ZERO_MODE_TOL);
            for i in 0..12 {
                let e = linalg::eigh(&cov.g(i)).unwrap().values;
                assert!(e[0].abs() < 1e-12 && (e[1] - 1.0).abs() < 1e-12);
                assert!(linalg::max_abs(&cov.f(i)) < 1e-14);
            }
        }
    }

    #[test]
    fn zero_modes_are_half_filled_and_recorded() {
        let cov = ground_covariance(&diagonalize(&on_site(4, 0.0)).unwrap(), DEFAULT_ZERO_MODE_TOL);
        assert_eq!(cov.zero_modes().len(), 8);
        assert!((cov.g(0)[(0, 0)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn covariance_invariants_on_random_models() {
        let shape = LatticeShape::chain(9, 2).unwrap();
        for seed in 0..10 {
            let cov = ground_covariance(&diagonalize(&random_model(&shape, 2, true, seed).unwrap()).unwrap(), DEFAULT_ZERO_MODE_TOL);
            assert!(cov.occupation_violation() < 1e-10);
            assert!(cov.pairing_antisymmetry_residual() < 1e-10);
            assert!(cov.hole_block_residual() < 1e-10);
            if cov.zero_modes().is_empty() {
                assert!(cov.idempotence_residual() < 1e-9);
            }
        }
    }

    #[test]
    fn real_space_hopping_is_hermitian_in_offset() {
        let shape = LatticeShape::chain(8, 2).unwrap();
        let cov = ground_covariance(&diagonalize(&random_model(&shape, 1, true, 4).unwrap()).unwrap(), DEFAULT_ZERO_MODE_TOL);
        let offsets: Vec<_> = shape.offsets().collect();
        let rc = real_space(&cov, &offsets).unwrap();
        for (n, c) in &rc.hopping {
            assert!(linalg::max_abs_diff(&rc.hopping[&n.neg(&shape)], &c.adjoint()) < 1e-14);
        }
        let trace = rc.hopping[&SiteOffset::zero(&shape)].trace();
        assert!(trace.im.abs() < 1e-14 && trace.re > -1e-12 && trace.re < 2.0 + 1e-12);
    }
}
