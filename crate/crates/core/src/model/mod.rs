//! Quadratic Hamiltonians as finite-support coupling sets.
//!
//! A [`CouplingSet`] stores the hopping blocks `hop(n)` (the s×s matrix
//! multiplying `b†_{m+n} b_m`) and pairing blocks `pair(n)` (multiplying
//! `½ b†_{m+n} b†_m`) of
//!
//! ```text
//! H = Σ A_{mn} b†_m b_n + ½ Σ (B_{mn} b†_m b†_n − conj(B_{mn}) b_m b_n)
//! ```
//!
//! Hermiticity requires `hop(−n) = hop(n)†` and the fermionic antisymmetry of
//! the pairing term allows `pair(−n) = −pair(n)ᵀ` without loss of generality.

mod catalog;
mod file;

use std::collections::BTreeSet;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lattice::{self, CouplingMap, LatticeError, LatticeShape, MomentumIndex, SiteOffset};
use crate::linalg::{self, CMatrix};

pub use catalog::{catalog, CatalogModel, ModelParams};
pub use file::{load_model_file, parse_model_file, CouplingRecord, LoadedModel, ModelFile, ShapeBlock};

/// Entrywise tolerance for the closure checks.
pub const CLOSURE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("coupling set violates {} closure constraint(s); first: {}", .0.len(), .0[0])]
    Invalid(Vec<Violation>),
    #[error("unknown catalog model `{0}`")]
    UnknownModel(String),
    #[error("parameter `{name}` = {value} out of range: {reason}")]
    ParameterOutOfRange { name: String, value: f64, reason: String },
    #[error("unrecognized parameter `{0}`")]
    UnknownParameter(String),
    #[error("model `{model}` requires {requirement}")]
    ShapeUnsupported { model: String, requirement: String },
    #[error("coupling range {range} too large for lattice {dims:?} (need range < min(N)/2)")]
    RangeTooLarge { range: usize, dims: Vec<usize> },
    #[error("offset {0:?} sits exactly at half the lattice and cannot be re-embedded")]
    AmbiguousOffset(Vec<i64>),
    #[error("model file: {0}")]
    File(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CouplingKind {
    Hop,
    Pair,
}

impl std::fmt::Display for CouplingKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CouplingKind::Hop => "hop",
            CouplingKind::Pair => "pair",
        })
    }
}

/// One entry where a closure constraint fails.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: CouplingKind,
    /// Signed offset of the block that disagrees with its partner.
    pub offset: Vec<i64>,
    pub row: usize,
    pub col: usize,
    pub magnitude: f64,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} at offset {:?}, spin ({}, {}): mismatch {:.3e}",
            self.kind, self.offset, self.row, self.col, self.magnitude
        )
    }
}

/// Coupling data that has not been checked for closure.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCouplings {
    pub shape: LatticeShape,
    pub hop: CouplingMap,
    pub pair: CouplingMap,
}

impl RawCouplings {
    pub fn new(shape: LatticeShape) -> Self {
        Self {
            shape,
            hop: CouplingMap::new(),
            pair: CouplingMap::new(),
        }
    }

    pub fn from_signed<H, P>(shape: LatticeShape, hop: H, pair: P) -> Result<Self, ModelError>
    where
        H: IntoIterator<Item = (Vec<i64>, CMatrix)>,
        P: IntoIterator<Item = (Vec<i64>, CMatrix)>,
    {
        let hop = lattice::couplings_from_signed(hop, &shape)?;
        let pair = lattice::couplings_from_signed(pair, &shape)?;
        Ok(Self { shape, hop, pair })
    }

    fn check_blocks(&self) -> Result<(), ModelError> {
        for block in self.hop.values().chain(self.pair.values()) {
            lattice::check_block(block, self.shape.spin())?;
        }
        Ok(())
    }
}

/// A validated translation-invariant quadratic Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSet {
    shape: LatticeShape,
    hop: CouplingMap,
    pair: CouplingMap,
}

impl CouplingSet {
    /// Accepts raw couplings only if both closure constraints hold.
    pub fn try_from_raw(raw: RawCouplings) -> Result<Self, ModelError> {
        raw.check_blocks()?;
        let violations = validate(&raw);
        if !violations.is_empty() {
            return Err(ModelError::Invalid(violations));
        }
        Ok(Self {
            shape: raw.shape,
            hop: prune(raw.hop),
            pair: prune(raw.pair),
        })
    }

    pub fn shape(&self) -> &LatticeShape {
        &self.shape
    }

    pub fn hop(&self) -> &CouplingMap {
        &self.hop
    }

    pub fn pair(&self) -> &CouplingMap {
        &self.pair
    }

    pub fn has_pairing(&self) -> bool {
        !self.pair.is_empty()
    }

    pub fn to_raw(&self) -> RawCouplings {
        RawCouplings {
            shape: self.shape.clone(),
            hop: self.hop.clone(),
            pair: self.pair.clone(),
        }
    }

    /// Hopping block A_k.
    pub fn hop_kernel(&self, k: &MomentumIndex) -> CMatrix {
        lattice::fourier_at(&self.hop, k, &self.shape).expect("validated coupling set")
    }

    /// Pairing block B_k.
    pub fn pair_kernel(&self, k: &MomentumIndex) -> CMatrix {
        lattice::fourier_at(&self.pair, k, &self.shape).expect("validated coupling set")
    }

    /// The same couplings placed on another lattice with the same dimension and spin.
    /// Offsets are carried over through their minimal-image representative.
    pub fn resized(&self, shape: LatticeShape) -> Result<Self, ModelError> {
        if shape.dim() != self.shape.dim() || shape.spin() != self.shape.spin() {
            return Err(LatticeError::DimensionMismatch {
                expected: self.shape.dim(),
                got: shape.dim(),
            }
            .into());
        }
        let embed = |map: &CouplingMap| -> Result<Vec<(Vec<i64>, CMatrix)>, ModelError> {
            map.iter()
                .map(|(n, block)| {
                    let signed = n.signed(&self.shape);
                    let ambiguous = n
                        .components()
                        .iter()
                        .zip(self.shape.dims())
                        .any(|(&c, &size)| c != 0 && 2 * c == size);
                    if ambiguous {
                        return Err(ModelError::AmbiguousOffset(signed));
                    }
                    Ok((signed, block.clone()))
                })
                .collect()
        };
        let raw = RawCouplings::from_signed(shape, embed(&self.hop)?, embed(&self.pair)?)?;
        CouplingSet::try_from_raw(raw)
    }
}

fn prune(map: CouplingMap) -> CouplingMap {
    map.into_iter()
        .filter(|(_, block)| linalg::max_abs(block) > 0.0)
        .collect()
}

fn block_or_zero(map: &CouplingMap, n: &SiteOffset, s: usize) -> CMatrix {
    map.get(n).cloned().unwrap_or_else(|| CMatrix::zeros(s, s))
}

/// Offsets present in the map together with their negatives.
fn closed_support(map: &CouplingMap, shape: &LatticeShape) -> BTreeSet<SiteOffset> {
    map.keys().flat_map(|n| [n.clone(), n.neg(shape)]).collect()
}

/// Lists every entry where `hop(−n) ≠ hop(n)†` or `pair(−n) ≠ −pair(n)ᵀ`.
pub fn validate(raw: &RawCouplings) -> Vec<Violation> {
    let shape = &raw.shape;
    let s = shape.spin();
    let mut out = Vec::new();
    let mut check = |kind: CouplingKind, map: &CouplingMap, partner: &dyn Fn(&CMatrix) -> CMatrix| {
        // Each {n, −n} pair is checked once; a lone block is reported at its
        // missing partner's offset.
        for n in map.keys() {
            let neg = n.neg(shape);
            if map.contains_key(&neg) && neg < *n {
                continue;
            }
            let expected = partner(&block_or_zero(map, n, s));
            let actual = block_or_zero(map, &neg, s);
            for row in 0..s {
                for col in 0..s {
                    let magnitude = (actual[(row, col)] - expected[(row, col)]).norm();
                    if magnitude > CLOSURE_TOL {
                        out.push(Violation {
                            kind,
                            offset: neg.signed(shape),
                            row,
                            col,
                            magnitude,
                        });
                    }
                }
            }
        }
    };
    check(CouplingKind::Hop, &raw.hop, &|m| m.adjoint());
    check(CouplingKind::Pair, &raw.pair, &|m| -m.transpose());
    out
}

/// Projects raw data onto the closure-satisfying subspace and reports the
/// largest entry change made by the projection.
pub fn symmetrize(raw: &RawCouplings) -> Result<(CouplingSet, f64), ModelError> {
    raw.check_blocks()?;
    let shape = &raw.shape;
    let s = shape.spin();
    let mut distance = 0.0_f64;
    let mut project = |map: &CouplingMap, partner: &dyn Fn(&CMatrix) -> CMatrix| -> CouplingMap {
        closed_support(map, shape)
            .into_iter()
            .map(|n| {
                let own = block_or_zero(map, &n, s);
                let other = partner(&block_or_zero(map, &n.neg(shape), s));
                let projected = (&own + other).scale(0.5);
                distance = distance.max(linalg::max_abs_diff(&own, &projected));
                (n, projected)
            })
            .collect()
    };
    let hop = project(&raw.hop, &|m| m.adjoint());
    let pair = project(&raw.pair, &|m| -m.transpose());
    let set = CouplingSet::try_from_raw(RawCouplings {
        shape: shape.clone(),
        hop,
        pair,
    })?;
    Ok((set, distance))
}

/// Momentum-space BdG matrix `[[A_k, B_k], [B_k†, −A_{−k}ᵀ]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BdGBlock {
    pub k: MomentumIndex,
    pub matrix: CMatrix,
}

impl BdGBlock {
    pub fn spin(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn hermiticity_residual(&self) -> f64 {
        linalg::max_abs_diff(&self.matrix, &self.matrix.adjoint())
    }

    /// max |σˣ H_k σˣ + conj(H_{−k})| against the block at −k.
    pub fn particle_hole_residual(&self, at_minus_k: &BdGBlock) -> f64 {
        linalg::max_abs(&(linalg::ph_conjugate(&self.matrix) + at_minus_k.matrix.conjugate()))
    }
}

pub fn bdg_block(c: &CouplingSet, k: &MomentumIndex) -> BdGBlock {
    let a = c.hop_kernel(k);
    let a_minus = c.hop_kernel(&k.neg(c.shape()));
    let b = c.pair_kernel(k);
    let matrix = linalg::block2x2(&a, &b, &b.adjoint(), &(-a_minus.transpose()));
    BdGBlock { k: k.clone(), matrix }
}

/// Inversion `b_m ↦ i b_{−m}`: hop(n) ↦ hop(n)†, pair(n) ↦ pair(n)ᵀ.
pub fn inversion_transform(c: &CouplingSet) -> CouplingSet {
    CouplingSet {
        shape: c.shape.clone(),
        hop: c.hop.iter().map(|(n, m)| (n.clone(), m.adjoint())).collect(),
        pair: c.pair.iter().map(|(n, m)| (n.clone(), m.transpose())).collect(),
    }
}

/// True when every hopping block is Hermitian and every pairing block
/// symmetric, i.e. the model is a fixed point of [`inversion_transform`].
pub fn is_inversion_symmetric(c: &CouplingSet, tol: f64) -> bool {
    c.hop.values().all(|m| linalg::max_abs_diff(m, &m.adjoint()) <= tol)
        && c.pair.values().all(|m| linalg::max_abs_diff(m, &m.transpose()) <= tol)
}

/// Random model with couplings on every offset with |nᵢ| ≤ range, real and
/// imaginary parts uniform on [−1, 1], projected onto the closure constraints.
pub fn random_model(shape: &LatticeShape, range: usize, pairing: bool, seed: u64) -> Result<CouplingSet, ModelError> {
    let min_dim = *shape.dims().iter().min().expect("non-empty shape");
    if 2 * range >= min_dim {
        return Err(ModelError::RangeTooLarge {
            range,
            dims: shape.dims().to_vec(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = shape.spin();
    let offsets = signed_cube(shape.dim(), range as i64);
    let draw = |rng: &mut ChaCha8Rng| {
        CMatrix::from_fn(s, s, |_, _| {
            Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
        })
    };
    let hop: Vec<_> = offsets.iter().map(|n| (n.clone(), draw(&mut rng))).collect();
    let pair: Vec<_> = if pairing {
        offsets.iter().map(|n| (n.clone(), draw(&mut rng))).collect()
    } else {
        Vec::new()
    };
    let raw = RawCouplings::from_signed(shape.clone(), hop, pair)?;
    Ok(symmetrize(&raw)?.0)
}

fn signed_cube(dim: usize, range: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (-range..=range).map(move |c| {
                    let mut v = prefix.clone();
                    v.push(c);
                    v
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, I};

    fn scalar(z: Complex64) -> CMatrix {
        CMatrix::from_element(1, 1, z)
    }

    fn chain(n: usize, s: usize) -> LatticeShape {
        LatticeShape::chain(n, s).unwrap()
    }

    #[test]
    fn anti_hermitian_partner_pair_is_valid() {
        let raw = RawCouplings::from_signed(
            chain(6, 1),
            [(vec![1], scalar(I * 0.5)), (vec![-1], scalar(-I * 0.5))],
            [],
        )
        .unwrap();
        assert!(validate(&raw).is_empty());
    }

    #[test]
    fn missing_hermitian_partner_is_reported() {
        let raw = RawCouplings::from_signed(chain(6, 1), [(vec![1], scalar(1.0.into()))], []).unwrap();
        let v = validate(&raw);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, CouplingKind::Hop);
        assert_eq!(v[0].offset, vec![-1]);
        assert!((v[0].magnitude - 1.0).abs() < 1e-15);
        assert!(matches!(CouplingSet::try_from_raw(raw), Err(ModelError::Invalid(_))));
    }

    #[test]
    fn diagonal_on_site_pairing_is_reported() {
        let raw = RawCouplings::from_signed(chain(6, 1), [], [(vec![0], scalar(1.0.into()))]).unwrap();
        let v = validate(&raw);
        assert!(!v.is_empty());
        assert!(v.iter().all(|x| x.kind == CouplingKind::Pair && x.offset == vec![0]));
    }

    #[test]
    fn symmetrize_is_idempotent_on_valid_input() {
        let c = random_model(&chain(8, 2), 2, true, 3).unwrap();
        let (again, dist) = symmetrize(&c.to_raw()).unwrap();
        assert!(dist < 1e-15);
        for (n, m) in c.hop() {
            assert!(max_abs_diff(m, &again.hop()[n]) < 1e-15);
        }
        for (n, m) in c.pair() {
            assert!(max_abs_diff(m, &again.pair()[n]) < 1e-15);
        }
    }

    #[test]
    fn symmetrize_averages_hermitian_partner() {
        let raw = RawCouplings::from_signed(
            chain(6, 1),
            [(vec![1], scalar(1.0.into())), (vec![-1], scalar(0.0.into()))],
            [],
        )
        .unwrap();
        let (c, dist) = symmetrize(&raw).unwrap();
        let shape = c.shape().clone();
        for n in [1, -1] {
            let key = SiteOffset::from_signed(&[n], &shape).unwrap();
            assert!((c.hop()[&key][(0, 0)] - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        }
        assert!((dist - 0.5).abs() < 1e-15);
    }

    #[test]
    fn on_site_block_is_momentum_independent() {
        let mu = 0.7;
        let raw = RawCouplings::from_signed(chain(5, 2), [(vec![0], CMatrix::identity(2, 2) * Complex64::new(mu, 0.0))], [])
            .unwrap();
        let c = CouplingSet::try_from_raw(raw).unwrap();
        let expected = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(mu, 0.0),
            Complex64::new(mu, 0.0),
            Complex64::new(-mu, 0.0),
            Complex64::new(-mu, 0.0),
        ]));
        for k in c.shape().momenta() {
            assert!(max_abs_diff(&bdg_block(&c, &k).matrix, &expected) < 1e-15);
        }
    }

    #[test]
    fn bdg_blocks_are_hermitian_and_particle_hole_symmetric() {
        for seed in 0..20 {
            let shape = LatticeShape::new(vec![6, 5], 2).unwrap();
            let c = random_model(&shape, 1, true, seed).unwrap();
            for k in shape.momenta() {
                let h = bdg_block(&c, &k);
                let hm = bdg_block(&c, &k.neg(&shape));
                assert!(h.hermiticity_residual() < 1e-13);
                assert!(h.particle_hole_residual(&hm) < 1e-13);
            }
        }
    }

    #[test]
    fn inversion_examples() {
        let shape = chain(6, 1);
        let raw = RawCouplings::from_signed(
            shape.clone(),
            [
                (vec![1], scalar(Complex64::new(0.5, 0.5))),
                (vec![-1], scalar(Complex64::new(0.5, -0.5))),
            ],
            [],
        )
        .unwrap();
        let c = CouplingSet::try_from_raw(raw).unwrap();
        let inv = inversion_transform(&c);
        let plus = SiteOffset::from_signed(&[1], &shape).unwrap();
        let minus = SiteOffset::from_signed(&[-1], &shape).unwrap();
        assert_eq!(inv.hop()[&plus][(0, 0)], Complex64::new(0.5, -0.5));
        assert_eq!(inv.hop()[&minus][(0, 0)], Complex64::new(0.5, 0.5));
        assert_eq!(inversion_transform(&inv), c);
        assert!(!is_inversion_symmetric(&c, 1e-12));

        let sym = CouplingSet::try_from_raw(
            RawCouplings::from_signed(shape, [(vec![1], scalar(0.5.into())), (vec![-1], scalar(0.5.into()))], []).unwrap(),
        )
        .unwrap();
        assert!(is_inversion_symmetric(&sym, 1e-12));
        assert_eq!(inversion_transform(&sym), sym);
    }

    #[test]
    fn random_model_range_zero_is_on_site_hermitian() {
        let c = random_model(&chain(6, 3), 0, false, 11).unwrap();
        assert_eq!(c.hop().len(), 1);
        assert!(c.pair().is_empty());
        let m = c.hop().values().next().unwrap();
        assert!(max_abs_diff(m, &m.adjoint()) < 1e-15);
    }

    #[test]
    fn random_model_is_deterministic_and_range_checked() {
        let shape = chain(9, 2);
        assert_eq!(random_model(&shape, 2, true, 5).unwrap(), random_model(&shape, 2, true, 5).unwrap());
        assert_ne!(random_model(&shape, 2, true, 5).unwrap(), random_model(&shape, 2, true, 6).unwrap());
        assert!(matches!(random_model(&chain(4, 1), 2, false, 0), Err(ModelError::RangeTooLarge { .. })));
    }

    #[test]
    fn resized_keeps_couplings() {
        let c = random_model(&chain(8, 1), 2, true, 1).unwrap();
        let big = c.resized(c.shape().doubled()).unwrap();
        assert_eq!(big.hop().len(), c.hop().len());
        let n = SiteOffset::from_signed(&[-2], big.shape()).unwrap();
        let small_n = SiteOffset::from_signed(&[-2], c.shape()).unwrap();
        assert_eq!(big.hop()[&n], c.hop()[&small_n]);
    }
}
