//! Randomized check that gapped models carry no inversion-breaking invariant.

use rayon::prelude::*;

use super::{continuum_gap, invariant_map, max_abs_invariant, spectral_gap, ContinuumGap, ObservableError};
use crate::lattice::LatticeShape;
use crate::model::random_model;
use crate::solver::{diagonalize, ground_covariance};

const BATCH: usize = 64;
/// Largest momentum grid used to settle the infinite-lattice gap.
pub const CONTINUUM_MAX_SITES: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub struct SurveyConfig {
    /// Chain length the invariant is evaluated on.
    pub sites: usize,
    /// Spins cycled through draw by draw.
    pub spins: Vec<usize>,
    pub range: usize,
    pub seed: u64,
    /// Required gap at `sites`.
    pub gap_min: f64,
    /// Required gap at `2 * sites`.
    pub doubled_gap_min: f64,
    pub inv_tol: f64,
    pub zero_mode_tol: f64,
}

impl Default for SurveyConfig {
    fn default() -> Self {
        Self {
            sites: 32,
            spins: vec![1, 2],
            range: 2,
            seed: 0,
            gap_min: 0.1,
            doubled_gap_min: 0.05,
            inv_tol: 1e-8,
            zero_mode_tol: crate::solver::DEFAULT_ZERO_MODE_TOL,
        }
    }
}

/// Identifies one random draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Draw {
    pub index: usize,
    pub spin: usize,
    pub pairing: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrawOutcome {
    pub draw: Draw,
    pub gap: f64,
    pub doubled_gap: Option<f64>,
    /// max |invariant| over offsets, evaluated for draws passing the finite-size filter.
    pub max_invariant: Option<f64>,
    /// Infinite-lattice gap status, for draws passing the finite-size filter.
    pub continuum: Option<ContinuumGap>,
}

impl DrawOutcome {
    pub fn passes_filter(&self) -> bool {
        self.max_invariant.is_some()
    }

    /// Nonzero invariant on a draw not shown to be gapless.
    pub fn is_falsification(&self, inv_tol: f64) -> bool {
        match (&self.max_invariant, &self.continuum) {
            (Some(inv), Some(gap)) => *inv >= inv_tol && !gap.is_closed(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SurveySummary {
    pub drawn: usize,
    /// Draws passing the finite-size gap filter.
    pub gapped: usize,
    /// Of those, draws whose infinite-lattice gap is certified open.
    pub certified: usize,
    /// Of those, draws shown to be gapless between grid points.
    pub closed_between_grid_points: usize,
    /// Largest invariant among the draws shown gapless.
    pub closed_max_invariant: f64,
    pub unresolved: usize,
    /// Largest invariant over draws not shown gapless.
    pub worst_invariant: f64,
    pub worst_draw: Option<Draw>,
    pub falsifications: Vec<DrawOutcome>,
}

impl SurveySummary {
    pub fn passed(&self) -> bool {
        self.falsifications.is_empty()
    }
}

impl SurveyConfig {
    /// Draw `index`: spin and pairing cycle deterministically, the coupling
    /// seed is a fixed mix of the base seed and the index.
    pub fn draw(&self, index: usize) -> Draw {
        let spin = self.spins[index % self.spins.len()];
        let pairing = (index / self.spins.len()).is_multiple_of(2);
        let seed = self
            .seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add((index as u64).wrapping_mul(0xD1B5_4A32_D192_ED03));
        Draw {
            index,
            spin,
            pairing,
            seed,
        }
    }

    pub fn evaluate(&self, draw: Draw) -> Result<DrawOutcome, ObservableError> {
        let shape = LatticeShape::chain(self.sites, draw.spin).map_err(crate::model::ModelError::from)?;
        let c = random_model(&shape, self.range, draw.pairing, draw.seed)?;
        let sol = diagonalize(&c)?;
        let gap = spectral_gap(&sol);
        let mut outcome = DrawOutcome {
            draw,
            gap,
            doubled_gap: None,
            max_invariant: None,
            continuum: None,
        };
        if gap <= self.gap_min {
            return Ok(outcome);
        }
        let doubled = spectral_gap(&diagonalize(&c.resized(shape.doubled())?)?);
        outcome.doubled_gap = Some(doubled);
        if doubled <= self.doubled_gap_min {
            return Ok(outcome);
        }
        let cov = ground_covariance(&sol, self.zero_mode_tol);
        outcome.max_invariant = Some(max_abs_invariant(&invariant_map(&cov)?));
        outcome.continuum = Some(continuum_gap(&c, CONTINUUM_MAX_SITES)?);
        Ok(outcome)
    }

    fn summarize(&self, outcomes: impl IntoIterator<Item = DrawOutcome>) -> SurveySummary {
        let mut summary = SurveySummary::default();
        for o in outcomes {
            summary.drawn += 1;
            let (Some(inv), Some(gap)) = (o.max_invariant, &o.continuum) else { continue };
            summary.gapped += 1;
            match gap {
                ContinuumGap::Closed { .. } => {
                    summary.closed_between_grid_points += 1;
                    summary.closed_max_invariant = summary.closed_max_invariant.max(inv);
                    continue;
                }
                ContinuumGap::Certified { .. } => summary.certified += 1,
                ContinuumGap::Unresolved { .. } => summary.unresolved += 1,
            }
            if inv > summary.worst_invariant || summary.worst_draw.is_none() {
                summary.worst_invariant = inv;
                summary.worst_draw = Some(o.draw);
            }
            if o.is_falsification(self.inv_tol) {
                summary.falsifications.push(o);
            }
        }
        summary
    }

    /// Evaluates exactly `count` draws.
    pub fn run(&self, count: usize) -> Result<SurveySummary, ObservableError> {
        let outcomes = (0..count)
            .into_par_iter()
            .map(|i| self.evaluate(self.draw(i)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.summarize(outcomes))
    }

    /// Keeps drawing until `target` models with a certified open gap were tested or `max_draws`
    /// is exhausted. Draws are evaluated in parallel batches but consumed in
    /// index order, so the result does not depend on scheduling.
    pub fn run_until_gapped(&self, target: usize, max_draws: usize) -> Result<SurveySummary, ObservableError> {
        let mut kept = Vec::new();
        let mut gapped = 0;
        let mut next = 0;
        'outer: while gapped < target && next < max_draws {
            let end = (next + BATCH).min(max_draws);
            let batch = (next..end)
                .into_par_iter()
                .map(|i| self.evaluate(self.draw(i)))
                .collect::<Result<Vec<_>, _>>()?;
            next = end;
            for o in batch {
                gapped += usize::from(o.continuum.as_ref().is_some_and(ContinuumGap::is_certified));
                kept.push(o);
                if gapped == target {
                    break 'outer;
                }
            }
        }
        Ok(self.summarize(kept))
    }
}
