//! Per-momentum Bogoliubov diagonalization and the Gaussian ground state.
//!
//! For every momentum the 2s×2s BdG block `H_k` is diagonalized. Particle-hole
//! symmetry pairs an eigenvector `v` of `H_k` at energy λ with `σˣ conj(v)`,
//! an eigenvector of `H_{−k}` at −λ, so the 2s energies at `k` split into the
//! quasiparticle branch `Λ_k¹..Λ_kˢ` and the mirrored `−Λ_{−k}¹..−Λ_{−k}ˢ`.
//!
//! The branch is chosen by particle weight (the norm of the particle half of
//! the eigenvector) at the representative of each `{k, −k}` pair, and the
//! partner momentum takes the particle-hole images of the remaining
//! eigenvectors, matched by overlap. Observables never depend on this choice;
//! it only fixes how `M_k`, `P_k` and the coefficients `α_k`, `β_k` are
//! reported.

mod covariance;
mod dynamics;

use rayon::prelude::*;

use crate::lattice::{LatticeError, LatticeShape, MomentumIndex};
use crate::linalg::{self, CMatrix, EigenFailure};
use crate::model::{bdg_block, BdGBlock, CouplingSet};

pub use covariance::{
    ground_covariance, kernel_route, real_space, CovarianceKernel, RealSpaceCorrelators, ZeroMode,
    DEFAULT_ZERO_MODE_TOL,
};
pub use dynamics::{
    apply_bogoliubov_map, bogoliubov_map_from_hamiltonian, evolve_quench, particle_hole_swap, random_bogoliubov_map, MAP_TOL,
};

/// Relative eigenvalue separation below which a block counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("eigensolver failed at momentum {k:?}: {source}")]
    Eigen { k: Vec<usize>, source: EigenFailure },
    #[error("lattice shapes differ: {left:?} vs {right:?}")]
    ShapeMismatch { left: LatticeShape, right: LatticeShape },
    #[error("closed form requires spin 1, model has spin {0}")]
    NotSpinless(usize),
    #[error("Bogoliubov map at momentum {k:?} is invalid ({what} residual {residual:.3e})")]
    InvalidMap { k: Vec<usize>, what: &'static str, residual: f64 },
    #[error("expected {expected} per-momentum matrices, got {got}")]
    GridSize { expected: usize, got: usize },
}

/// Diagonalization of one BdG block.
#[derive(Debug, Clone)]
pub struct MomentumSolution {
    pub block: BdGBlock,
    /// All 2s eigenvalues, ascending.
    pub energies: Vec<f64>,
    /// Eigenvectors as columns, matching `energies`.
    pub vectors: CMatrix,
    /// Indices into `energies` of the quasiparticle branch, ordered by energy.
    pub designated: Vec<usize>,
    /// Some pair of eigenvalues coincides, so individual eigenvectors are not canonical.
    pub degenerate: bool,
}

impl MomentumSolution {
    pub fn k(&self) -> &MomentumIndex {
        &self.block.k
    }

    /// Λ_k¹..Λ_kˢ.
    pub fn branch(&self) -> Vec<f64> {
        self.designated.iter().map(|&i| self.energies[i]).collect()
    }

    /// max |H_k V − V diag(λ)|.
    pub fn residual(&self) -> f64 {
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.energies.len(),
            self.energies.iter().map(|&e| e.into()),
        ));
        linalg::max_abs_diff(&(&self.block.matrix * &self.vectors), &(&self.vectors * d))
    }

    fn particle_weight(&self, col: usize) -> f64 {
        let s = self.block.spin();
        (0..s).map(|r| self.vectors[(r, col)].norm_sqr()).sum()
    }
}

/// Bogoliubov coefficients at one momentum: `c_k^j = Σ_l α^{jl} b_k^l + β^{jl} b_{−k}^{l†}`.
#[derive(Debug, Clone)]
pub struct BogoliubovCoefficients {
    /// Row j is the quasiparticle, column l the spin component.
    pub alpha: CMatrix,
    pub beta: CMatrix,
    /// Λ_k^j for the same quasiparticle labels.
    pub energies: Vec<f64>,
}

/// Residuals of the canonical-anticommutation constraints and their dual
/// completeness identities at one momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintResiduals {
    /// max |α_k β_{−k}ᵀ + β_k α_{−k}ᵀ|.
    pub anticommutator: f64,
    /// max |α_k α_k† + β_k β_k† − 1|.
    pub normalization: f64,
    /// max |Σ_l S_k^{l+}|.
    pub s_plus_sum: f64,
    /// max |Σ_l Z_k^{l+} − 1|.
    pub z_plus_sum: f64,
    /// max |U† H_k U − diag(Λ_k, −Λ_{−k})|.
    pub diagonalization: f64,
}

impl ConstraintResiduals {
    pub fn max(&self) -> f64 {
        [
            self.anticommutator,
            self.normalization,
            self.s_plus_sum,
            self.z_plus_sum,
            self.diagonalization,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct BogoliubovSolution {
    shape: LatticeShape,
    momenta: Vec<MomentumSolution>,
}

impl BogoliubovSolution {
    pub fn shape(&self) -> &LatticeShape {
        &self.shape
    }

    /// Solutions in row-major momentum order.
    pub fn momenta(&self) -> &[MomentumSolution] {
        &self.momenta
    }

    pub fn at(&self, k: &MomentumIndex) -> &MomentumSolution {
        &self.momenta[self.shape.momentum_flat(k)]
    }

    fn minus(&self, flat: usize) -> &MomentumSolution {
        &self.momenta[self.shape.negated_momentum_flat(flat)]
    }

    /// Whether α, β are canonical at `flat`: both k and −k are nondegenerate.
    pub fn coefficients_defined(&self, flat: usize) -> bool {
        !self.momenta[flat].degenerate && !self.minus(flat).degenerate
    }

    /// α_k, β_k from the designated eigenvectors; `None` on degenerate blocks.
    pub fn coefficients(&self, flat: usize) -> Option<BogoliubovCoefficients> {
        if !self.coefficients_defined(flat) {
            return None;
        }
        let sol = &self.momenta[flat];
        let s = self.shape.spin();
        let mut alpha = CMatrix::zeros(s, s);
        let mut beta = CMatrix::zeros(s, s);
        for (j, &col) in sol.designated.iter().enumerate() {
            for l in 0..s {
                alpha[(j, l)] = sol.vectors[(l, col)].conj();
                beta[(j, l)] = sol.vectors[(s + l, col)].conj();
            }
        }
        Some(BogoliubovCoefficients {
            alpha,
            beta,
            energies: sol.branch(),
        })
    }

    /// U = [[α_k†, β_{−k}ᵀ], [β_k†, α_{−k}ᵀ]].
    pub fn unitary(&self, flat: usize) -> Option<CMatrix> {
        let here = self.coefficients(flat)?;
        let there = self.coefficients(self.shape.negated_momentum_flat(flat))?;
        Some(linalg::block2x2(
            &here.alpha.adjoint(),
            &there.beta.transpose(),
            &here.beta.adjoint(),
            &there.alpha.transpose(),
        ))
    }

    pub fn constraint_residuals(&self, flat: usize) -> Option<ConstraintResiduals> {
        let minus_flat = self.shape.negated_momentum_flat(flat);
        let here = self.coefficients(flat)?;
        let there = self.coefficients(minus_flat)?;
        let s = self.shape.spin();
        let eye = CMatrix::identity(s, s);
        let anticommutator =
            linalg::max_abs(&(&here.alpha * there.beta.transpose() + &here.beta * there.alpha.transpose()));
        let normalization =
            linalg::max_abs_diff(&(&here.alpha * here.alpha.adjoint() + &here.beta * here.beta.adjoint()), &eye);
        let s_plus_sum =
            linalg::max_abs(&(here.alpha.adjoint() * &here.beta + there.beta.transpose() * there.alpha.conjugate()));
        let z_plus_sum = linalg::max_abs_diff(
            &(here.alpha.adjoint() * &here.alpha + there.beta.transpose() * there.beta.conjugate()),
            &eye,
        );
        let u = self.unitary(flat)?;
        let mut diag = here.energies.clone();
        diag.extend(there.energies.iter().map(|e| -e));
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(2 * s, diag.into_iter().map(|e| e.into())));
        let diagonalization = linalg::max_abs_diff(&(u.adjoint() * &self.momenta[flat].block.matrix * &u), &d);
        Some(ConstraintResiduals {
            anticommutator,
            normalization,
            s_plus_sum,
            z_plus_sum,
            diagonalization,
        })
    }
}

/// Diagonalizes every BdG block of the model, in parallel over the momentum grid.
pub fn diagonalize(c: &CouplingSet) -> Result<BogoliubovSolution, SolverError> {
    let shape = c.shape().clone();
    let mut momenta: Vec<MomentumSolution> = (0..shape.sites())
        .into_par_iter()
        .map(|flat| {
            let k = shape.momentum(flat);
            let block = bdg_block(c, &k);
            let eig = linalg::eigh(&block.matrix).map_err(|source| SolverError::Eigen {
                k: k.components().to_vec(),
                source,
            })?;
            let scale = eig.values.iter().fold(1.0_f64, |a, e| a.max(e.abs()));
            let degenerate = eig.values.windows(2).any(|w| w[1] - w[0] < DEGENERACY_TOL * scale);
            Ok(MomentumSolution {
                block,
                energies: eig.values,
                vectors: eig.vectors,
                designated: Vec::new(),
                degenerate,
            })
        })
        .collect::<Result<_, SolverError>>()?;
    designate_branches(&shape, &mut momenta);
    Ok(BogoliubovSolution { shape, momenta })
}

fn designate_branches(shape: &LatticeShape, momenta: &mut [MomentumSolution]) {
    let s = shape.spin();
    for flat in 0..momenta.len() {
        let minus = shape.negated_momentum_flat(flat);
        if minus < flat {
            continue;
        }
        let chosen = top_particle_weight(&momenta[flat], s);
        if minus != flat {
            let complement: Vec<usize> = (0..2 * s).filter(|i| !chosen.contains(i)).collect();
            let images = match_images(&momenta[flat], &complement, &momenta[minus]);
            momenta[minus].designated = sorted_by_energy(&momenta[minus], images);
        }
        momenta[flat].designated = sorted_by_energy(&momenta[flat], chosen);
    }
}

fn top_particle_weight(sol: &MomentumSolution, s: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..2 * s).collect();
    // Weights quantized so that numerically tied eigenvectors fall back to energy.
    let key = |i: usize| ((sol.particle_weight(i) * 1e8).round() as i64, sol.energies[i]);
    idx.sort_by(|&a, &b| {
        let (wa, ea) = key(a);
        let (wb, eb) = key(b);
        wb.cmp(&wa).then(eb.total_cmp(&ea))
    });
    idx.truncate(s);
    idx
}

/// For each column of `from` in `cols`, the eigenvector of `to` best
/// overlapping its particle-hole image `σˣ conj(v)`.
fn match_images(from: &MomentumSolution, cols: &[usize], to: &MomentumSolution) -> Vec<usize> {
    let n = to.energies.len();
    let mut overlaps = Vec::new();
    for (ci, &c) in cols.iter().enumerate() {
        let image = linalg::ph_conjugate_vector(&from.vectors.column(c).conjugate());
        for j in 0..n {
            let ov = to.vectors.column(j).dotc(&image).norm_sqr();
            overlaps.push((ov, ci, j));
        }
    }
    overlaps.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_from = vec![false; cols.len()];
    let mut used_to = vec![false; n];
    let mut out = Vec::with_capacity(cols.len());
    for (_, ci, j) in overlaps {
        if !used_from[ci] && !used_to[j] {
            used_from[ci] = true;
            used_to[j] = true;
            out.push(j);
        }
    }
    out
}

fn sorted_by_energy(sol: &MomentumSolution, mut idx: Vec<usize>) -> Vec<usize> {
    idx.sort_by(|&a, &b| sol.energies[a].total_cmp(&sol.energies[b]).then(a.cmp(&b)));
    idx
}

/// Λ_k = (A_k − A_{−k} + √((A_k + A_{−k})² + 4|B_k|²)) / 2 for spinless models,
/// in row-major momentum order.
pub fn spinless_closed_form(c: &CouplingSet) -> Result<Vec<f64>, SolverError> {
    let shape = c.shape();
    if shape.spin() != 1 {
        return Err(SolverError::NotSpinless(shape.spin()));
    }
    Ok(shape
        .momenta()
        .map(|k| {
            let a = c.hop_kernel(&k)[(0, 0)].re;
            let am = c.hop_kernel(&k.neg(shape))[(0, 0)].re;
            let b = c.pair_kernel(&k)[(0, 0)];
            (a - am + ((a + am).powi(2) + 4.0 * b.norm_sqr()).sqrt()) / 2.0
        })
        .collect())
}
