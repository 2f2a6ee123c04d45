//! Block entanglement entropy of a Gaussian state on a ring.

use rayon::prelude::*;

use crate::lattice::{LatticeShape, SiteOffset};
use crate::linalg::{self, CMatrix, ONE, ZERO};
use crate::solver::{self, CovarianceKernel, RealSpaceCorrelators, SolverError};

/// Slack allowed on the restricted spectrum before it is treated as corrupt.
const SPECTRUM_SLACK: f64 = 1e-8;
const LOG_VIOLATION_MIN: f64 = 0.1;
const AREA_LAW_MAX: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EntropyError {
    #[error("block entropy is only implemented for chains, got d = {0}")]
    Unsupported(usize),
    #[error("block length {length} outside 1..={sites}")]
    BlockLength { length: usize, sites: usize },
    #[error("restricted correlation matrix has eigenvalue {value} outside [0, 1]")]
    Spectrum { length: usize, value: f64 },
    #[error("entropy fit needs at least 4 block lengths, got {0}")]
    TooFewPoints(usize),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

fn binary_term(nu: f64) -> f64 {
    if nu <= 0.0 || nu >= 1.0 {
        0.0
    } else {
        -nu * nu.ln()
    }
}

fn single_block(rc: &RealSpaceCorrelators, shape: &LatticeShape, len: usize) -> Result<f64, EntropyError> {
    let s = shape.spin();
    let at = |map: &std::collections::BTreeMap<SiteOffset, CMatrix>, d: i64| -> CMatrix {
        let key = SiteOffset::from_signed(&[d], shape).expect("chain offset");
        map[&key].clone()
    };
    let dim = len * s;
    // ⟨ΨΨ†⟩ with Ψ = (b, b†) restricted to the block; Hermitian with spectrum {ν, 1 − ν}.
    let mut r = CMatrix::zeros(2 * dim, 2 * dim);
    for x in 0..len {
        for y in 0..len {
            let dxy = y as i64 - x as i64;
            let c_xy = at(&rc.hopping, dxy);
            let c_yx = at(&rc.hopping, -dxy);
            let f_xy = at(&rc.pairing, dxy);
            let f_yx = at(&rc.pairing, -dxy);
            for j in 0..s {
                for jp in 0..s {
                    let (p, q) = (x * s + j, y * s + jp);
                    let delta = if p == q { ONE } else { ZERO };
                    r[(p, q)] = delta - c_yx[(jp, j)];
                    r[(p, dim + q)] = f_xy[(j, jp)];
                    r[(dim + p, q)] = f_yx[(jp, j)].conj();
                    r[(dim + p, dim + q)] = c_xy[(j, jp)];
                }
            }
        }
    }
    let eig = linalg::eigh(&r).map_err(|e| EntropyError::Solver(SolverError::Eigen { k: vec![], source: e }))?;
    let mut total = 0.0;
    for &nu in &eig.values {
        if !(-SPECTRUM_SLACK..=1.0 + SPECTRUM_SLACK).contains(&nu) {
            return Err(EntropyError::Spectrum { length: len, value: nu });
        }
        total += binary_term(nu.clamp(0.0, 1.0));
    }
    Ok(total)
}

fn all_correlators(cov: &CovarianceKernel) -> Result<RealSpaceCorrelators, EntropyError> {
    if cov.shape().dim() != 1 {
        return Err(EntropyError::Unsupported(cov.shape().dim()));
    }
    let offsets: Vec<_> = cov.shape().offsets().collect();
    Ok(solver::real_space(cov, &offsets)?)
}

fn check_length(cov: &CovarianceKernel, len: usize) -> Result<(), EntropyError> {
    let sites = cov.shape().sites();
    if len == 0 || len > sites {
        return Err(EntropyError::BlockLength { length: len, sites });
    }
    Ok(())
}

/// Von Neumann entropy (nats) of `len` consecutive sites of a chain.
pub fn block_entropy(cov: &CovarianceKernel, len: usize) -> Result<f64, EntropyError> {
    let rc = all_correlators(cov)?;
    check_length(cov, len)?;
    single_block(&rc, cov.shape(), len)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntropyClass {
    AreaLaw,
    LogViolation,
    Inconclusive,
}

impl EntropyClass {
    pub fn label(self) -> &'static str {
        match self {
            EntropyClass::AreaLaw => "area-law",
            EntropyClass::LogViolation => "log-violation",
            EntropyClass::Inconclusive => "inconclusive",
        }
    }
}

/// Least-squares fit S ≈ a·ln L + b.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyFit {
    pub a: f64,
    pub b: f64,
    /// Root-mean-square residual over the fit window.
    pub residual: f64,
    /// Number of points in the fit window.
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyScan {
    pub points: Vec<(usize, f64)>,
    pub fit: EntropyFit,
    /// Entropy at the largest block length.
    pub saturation: f64,
    pub class: EntropyClass,
}

impl EntropyScan {
    pub fn is_monotone(&self, tol: f64) -> bool {
        self.points.windows(2).all(|w| w[1].1 >= w[0].1 - tol)
    }
}

fn fit_log(points: &[(usize, f64)]) -> EntropyFit {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|&(l, _)| (l as f64).ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(points).map(|(x, p)| (x - mx) * (p.1 - my)).sum();
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let b = my - a * mx;
    let residual = (xs.iter().zip(points).map(|(x, p)| (p.1 - a * x - b).powi(2)).sum::<f64>() / n).sqrt();
    EntropyFit {
        a,
        b,
        residual,
        points: points.len(),
    }
}

/// Entropy for each block length and a logarithmic fit over the upper half of
/// the lengths that do not exceed a quarter of the ring.
pub fn entropy_scan(cov: &CovarianceKernel, lengths: &[usize]) -> Result<EntropyScan, EntropyError> {
    let mut lengths = lengths.to_vec();
    lengths.sort_unstable();
    lengths.dedup();
    if lengths.len() < 4 {
        return Err(EntropyError::TooFewPoints(lengths.len()));
    }
    let rc = all_correlators(cov)?;
    for &l in &lengths {
        check_length(cov, l)?;
    }
    let sites = cov.shape().sites();
    let points = lengths
        .par_iter()
        .map(|&l| single_block(&rc, cov.shape(), l).map(|e| (l, e)))
        .collect::<Result<Vec<_>, _>>()?;

    let quarter: Vec<_> = points.iter().copied().filter(|&(l, _)| 4 * l <= sites).collect();
    let pool = if quarter.len() >= 4 { quarter } else { points.clone() };
    let window = &pool[pool.len() / 2..];
    let fit = fit_log(window);
    let class = if fit.a > LOG_VIOLATION_MIN {
        EntropyClass::LogViolation
    } else if fit.a < AREA_LAW_MAX {
        EntropyClass::AreaLaw
    } else {
        EntropyClass::Inconclusive
    };
    Ok(EntropyScan {
        saturation: points.last().map_or(0.0, |p| p.1),
        points,
        fit,
        class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{catalog, CouplingSet, ModelParams, RawCouplings};
    use crate::solver::{diagonalize, ground_covariance, DEFAULT_ZERO_MODE_TOL};
    use num_complex::Complex64;

    fn ground(c: &CouplingSet) -> CovarianceKernel {
        ground_covariance(&diagonalize(c).unwrap(), DEFAULT_ZERO_MODE_TOL)
    }

    #[test]
    fn product_states_have_zero_entropy() {
        for mu in [0.7, -0.7] {
            let raw = RawCouplings::from_signed(
                LatticeShape::chain(12, 2).unwrap(),
                [(vec![0], CMatrix::identity(2, 2) * Complex64::new(mu, 0.0))],
                [],
            )
            .unwrap();
            let cov = ground(&CouplingSet::try_from_raw(raw).unwrap());
            for l in 1..=12 {
                assert!(block_entropy(&cov, l).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn entropy_bounds_and_complement_symmetry() {
        let shape = LatticeShape::chain(20, 1).unwrap();
        let c = catalog(&ModelParams::new("spinless-general", shape).with("hop:1", -0.5).with("pair:1", 0.4).with("hop:0", 0.2)).unwrap();
        let cov = ground(&c);
        for l in 1..20 {
            let s = block_entropy(&cov, l).unwrap();
            assert!(s >= -1e-12 && s <= l as f64 * std::f64::consts::LN_2 + 1e-12);
            // Pure state: S(L) = S(N − L).
            assert!((s - block_entropy(&cov, 20 - l).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn scan_classifies_gapped_and_critical() {
        let p = catalog(&ModelParams::new("paper-p-model", LatticeShape::chain(128, 2).unwrap()).with("p", 2.0)).unwrap();
        let lengths: Vec<usize> = (2..=32).collect();
        let gapped = entropy_scan(&ground(&p), &lengths).unwrap();
        assert_eq!(gapped.class, EntropyClass::AreaLaw);

        let t = catalog(
            &ModelParams::new("twisted-chain", LatticeShape::chain(128, 1).unwrap()).with("alpha", std::f64::consts::FRAC_PI_2),
        )
        .unwrap();
        let critical = entropy_scan(&ground(&t), &lengths).unwrap();
        assert_eq!(critical.class, EntropyClass::LogViolation);
        assert!(critical.is_monotone(1e-9));
    }

    #[test]
    fn scan_errors() {
        let t = catalog(&ModelParams::new("twisted-chain", LatticeShape::chain(16, 1).unwrap())).unwrap();
        let cov = ground(&t);
        assert_eq!(entropy_scan(&cov, &[2, 4]), Err(EntropyError::TooFewPoints(2)));
        assert!(matches!(block_entropy(&cov, 0), Err(EntropyError::BlockLength { .. })));
        assert!(matches!(block_entropy(&cov, 17), Err(EntropyError::BlockLength { .. })));
        let sq = catalog(&ModelParams::new("spinless-general", LatticeShape::new(vec![4, 4], 1).unwrap()).with("hop:0,1", 1.0)).unwrap();
        assert_eq!(block_entropy(&ground(&sq), 2), Err(EntropyError::Unsupported(2)));
    }
}
