//! Inversion-breaking invariants, spectral gap and the gapped/gapless verdict.
//!
//! The central quantity is `I(n) = Im Σ_j ⟨b_m^{j†} b_{m+n}^j⟩`, the density of
//! `C_n = (i/2) Σ_{m,j} (b†_{n+m} b_m − b†_m b_{m+n})`. Because
//! `tr G_k − tr G_{−k} = −Σ_j M_k^j`, it only depends on how many
//! negative-energy modes each momentum carries, which is why it survives every
//! translation-invariant Bogoliubov transformation and can only be nonzero when
//! some band changes sign, i.e. when the model is gapless.

mod entropy;
mod survey;

use std::collections::BTreeMap;

use crate::lattice::{LatticeShape, MomentumIndex, SiteOffset};
use crate::linalg;
use crate::model::{CouplingSet, ModelError};
use crate::solver::{
    self, diagonalize, ground_covariance, BogoliubovSolution, CovarianceKernel, RealSpaceCorrelators, SolverError, ZeroMode,
};

pub use entropy::{block_entropy, entropy_scan, EntropyClass, EntropyError, EntropyFit, EntropyScan};
pub use survey::{Draw, CONTINUUM_MAX_SITES, DrawOutcome, SurveyConfig, SurveySummary};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ObservableError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `Im` of the spin trace of ⟨b†_m b_{m+n}⟩ for each offset present in `rc`.
pub fn summed_imaginary_invariant(rc: &RealSpaceCorrelators) -> BTreeMap<SiteOffset, f64> {
    rc.hopping.iter().map(|(n, c)| (n.clone(), c.trace().im)).collect()
}

/// The invariant at every lattice offset.
pub fn invariant_map(cov: &CovarianceKernel) -> Result<BTreeMap<SiteOffset, f64>, SolverError> {
    let offsets: Vec<_> = cov.shape().offsets().collect();
    Ok(summed_imaginary_invariant(&solver::real_space(cov, &offsets)?))
}

pub fn max_abs_invariant(invariants: &BTreeMap<SiteOffset, f64>) -> f64 {
    invariants.values().fold(0.0, |a, v| a.max(v.abs()))
}

/// min over k and all 2s eigenvalues of |λ(H_k)|.
pub fn spectral_gap(sol: &BogoliubovSolution) -> f64 {
    sol.momenta()
        .iter()
        .flat_map(|m| m.energies.iter().map(|e| e.abs()))
        .fold(f64::INFINITY, f64::min)
}

/// What a refined momentum grid says about the gap of the infinite lattice.
#[derive(Debug, Clone, PartialEq)]
pub enum ContinuumGap {
    /// Every eigenvalue of H(k) stays at least `lower_bound` from zero for all real k.
    Certified { lower_bound: f64, dims: Vec<usize> },
    /// The number of negative eigenvalues of H_k changes across the grid, so by
    /// continuity some band crosses zero between grid points.
    Closed { dims: Vec<usize> },
    /// Refinement stopped before either conclusion.
    Unresolved { grid_gap: f64, slack: f64, dims: Vec<usize> },
}

impl ContinuumGap {
    pub fn is_closed(&self) -> bool {
        matches!(self, ContinuumGap::Closed { .. })
    }

    pub fn is_certified(&self) -> bool {
        matches!(self, ContinuumGap::Certified { .. })
    }
}

/// Upper bound on how far any eigenvalue of H(k) can move between a real
/// momentum and the nearest point of the grid `shape`: by Weyl's inequality it
/// is at most ‖H(k) − H(k′)‖ ≤ Σ_n Σ_i |n_i| π/N_i (‖hop(n)‖ + ‖pair(n)‖).
fn grid_slack(c: &CouplingSet, shape: &LatticeShape) -> f64 {
    let frob = |m: &linalg::CMatrix| m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut total = 0.0;
    for map in [c.hop(), c.pair()] {
        for (n, block) in map {
            let reach: f64 = n
                .signed(c.shape())
                .iter()
                .zip(shape.dims())
                .map(|(&ni, &size)| ni.unsigned_abs() as f64 * std::f64::consts::PI / size as f64)
                .sum();
            total += reach * frob(block);
        }
    }
    total
}

/// Refines the momentum grid by doubling every axis until the gap of the
/// infinite lattice is certified open, shown closed, or the grid would exceed
/// `max_sites` momenta.
pub fn continuum_gap(c: &CouplingSet, max_sites: usize) -> Result<ContinuumGap, ObservableError> {
    let s = c.shape().spin();
    let mut current = c.clone();
    loop {
        let shape = current.shape().clone();
        let sol = diagonalize(&current)?;
        let closed = sol.momenta().iter().any(|m| {
            let negative = m.energies.iter().filter(|&&e| e < 0.0).count();
            negative != s || m.energies.iter().any(|e| e.abs() < f64::EPSILON)
        });
        if closed {
            return Ok(ContinuumGap::Closed { dims: shape.dims().to_vec() });
        }
        let grid_gap = spectral_gap(&sol);
        let slack = grid_slack(c, &shape);
        if grid_gap > slack {
            return Ok(ContinuumGap::Certified {
                lower_bound: grid_gap - slack,
                dims: shape.dims().to_vec(),
            });
        }
        let next = shape.doubled();
        if next.sites() > max_sites {
            return Ok(ContinuumGap::Unresolved {
                grid_gap,
                slack,
                dims: shape.dims().to_vec(),
            });
        }
        current = c.resized(next)?;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymmetryEntry {
    pub k: MomentumIndex,
    pub band: usize,
    /// ½(sgn Λ_k − sgn Λ_{−k}).
    pub m: f64,
    /// ½(sgn Λ_k + sgn Λ_{−k}).
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AsymmetryReport {
    /// Entries with |M| above the threshold.
    pub entries: Vec<AsymmetryEntry>,
    /// (k, band) where Λ_k or Λ_{−k} is a zero mode and the signs are undefined.
    pub indeterminate: Vec<(MomentumIndex, usize)>,
}

/// Sign asymmetry of the designated branch between k and −k.
pub fn asymmetry_diagnostics(sol: &BogoliubovSolution, threshold: f64, zero_mode_tol: f64) -> AsymmetryReport {
    let shape = sol.shape();
    let mut report = AsymmetryReport::default();
    for (flat, here) in sol.momenta().iter().enumerate() {
        let there = &sol.momenta()[shape.negated_momentum_flat(flat)];
        for (band, (a, b)) in here.branch().into_iter().zip(there.branch()).enumerate() {
            if a.abs() < zero_mode_tol || b.abs() < zero_mode_tol {
                report.indeterminate.push((here.k().clone(), band));
                continue;
            }
            let m = 0.5 * (a.signum() - b.signum());
            let p = 0.5 * (a.signum() + b.signum());
            if m.abs() > threshold {
                report.entries.push(AsymmetryEntry {
                    k: here.k().clone(),
                    band,
                    m,
                    p,
                });
            }
        }
    }
    report
}

/// Σ_j M_k^j for every momentum, from the full spectrum at k: the 2s
/// eigenvalues are {Λ_k^j} ∪ {−Λ_{−k}^j}, so half their sign sum is Σ_j M_k^j.
/// Zero modes count as sign 0.
pub fn summed_asymmetry(sol: &BogoliubovSolution, zero_mode_tol: f64) -> Vec<f64> {
    sol.momenta()
        .iter()
        .map(|m| 0.5 * m.energies.iter().map(|&e| linalg::sign(e, zero_mode_tol)).sum::<f64>())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Gap at or below this counts as closed.
    pub gap_tol: f64,
    /// |invariant| at or above this counts as nonzero.
    pub inv_tol: f64,
    pub zero_mode_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            gap_tol: 1e-6,
            inv_tol: 1e-8,
            zero_mode_tol: solver::DEFAULT_ZERO_MODE_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Gap open and every invariant vanishes.
    ConsistentGapped,
    /// The gap test passed but some invariant is nonzero.
    GaplessByInvariant,
    /// The one-particle spectrum reaches zero (or a zero mode was flagged).
    GaplessBySpectrum,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::ConsistentGapped => "consistent-gapped",
            Verdict::GaplessByInvariant => "gapless-by-invariant",
            Verdict::GaplessBySpectrum => "gapless-by-spectrum",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone)]
pub struct InvariantReport {
    pub shape: LatticeShape,
    pub invariant: BTreeMap<SiteOffset, f64>,
    pub gap: f64,
    /// Gap on the doubled lattice when the doubling check ran.
    pub doubled_gap: Option<f64>,
    pub asymmetry: AsymmetryReport,
    pub zero_modes: Vec<ZeroMode>,
    pub verdict: Verdict,
    /// Infinite-lattice gap status, settled only when a finite-grid gap comes
    /// with a nonzero invariant.
    pub continuum: Option<ContinuumGap>,
    /// Gapped on the grid, not shown gapless between grid points, and yet some
    /// invariant is nonzero.
    pub falsification: bool,
}

impl InvariantReport {
    pub fn max_abs_invariant(&self) -> f64 {
        max_abs_invariant(&self.invariant)
    }

    /// Offset with the largest |invariant|.
    pub fn worst_offset(&self) -> Option<(&SiteOffset, f64)> {
        self.invariant
            .iter()
            .map(|(n, v)| (n, *v))
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
    }
}

/// Evaluates the invariants and the gap and checks that an open gap comes with
/// vanishing invariants. With `size_doubling` the gap must also stay above
/// `gap_tol` on the lattice with every axis doubled.
pub fn verify_main_result(c: &CouplingSet, tols: &Tolerances, size_doubling: bool) -> Result<InvariantReport, ObservableError> {
    let sol = diagonalize(c)?;
    let cov = ground_covariance(&sol, tols.zero_mode_tol);
    let invariant = invariant_map(&cov)?;
    let gap = spectral_gap(&sol);
    let doubled_gap = if size_doubling {
        let big = c.resized(c.shape().doubled())?;
        Some(spectral_gap(&diagonalize(&big)?))
    } else {
        None
    };
    let gapped = cov.zero_modes().is_empty() && gap > tols.gap_tol && doubled_gap.is_none_or(|g| g > tols.gap_tol);
    let nonzero = max_abs_invariant(&invariant) >= tols.inv_tol;
    let verdict = match (gapped, nonzero) {
        (false, _) => Verdict::GaplessBySpectrum,
        (true, false) => Verdict::ConsistentGapped,
        (true, true) => Verdict::GaplessByInvariant,
    };
    let continuum = if gapped && nonzero {
        Some(continuum_gap(c, survey::CONTINUUM_MAX_SITES)?)
    } else {
        None
    };
    Ok(InvariantReport {
        shape: c.shape().clone(),
        invariant,
        gap,
        doubled_gap,
        asymmetry: asymmetry_diagnostics(&sol, 0.5, tols.zero_mode_tol),
        zero_modes: cov.zero_modes().to_vec(),
        verdict,
        falsification: continuum.as_ref().is_some_and(|g| !g.is_closed()),
        continuum,
    })
}
