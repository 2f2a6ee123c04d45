//! Periodic cubic lattices: site offsets, momenta, phases and circulant Fourier
//! transforms.
//!
//! Conventions used throughout the crate:
//!
//! * a coupling map entry `X(n)` is the s×s block multiplying `b†_{m+n} b_m`
//!   (equivalently `X_{mn}` depends on `m − n` only);
//! * `X_k = Σ_n exp(−2πi Σᵢ nᵢkᵢ/Nᵢ) X(n)`;
//! * `X(n) = (1/N) Σ_k exp(+2πi Σᵢ nᵢkᵢ/Nᵢ) X_k`.
//!
//! The phase is taken per axis, so the transforms are mutually inverse for
//! every dimension.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::linalg::CMatrix;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LatticeError {
    #[error("lattice dimension must be 1, 2 or 3, got {0}")]
    UnsupportedDimension(usize),
    #[error("every axis needs at least 2 sites, got {0:?}")]
    AxisTooSmall(Vec<usize>),
    #[error("spin count must be at least 1")]
    NoSpin,
    #[error("index has {got} components but the lattice has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("momentum component {value} out of range for axis of size {size}")]
    MomentumOutOfRange { value: usize, size: usize },
    #[error("offsets {first:?} and {second:?} coincide after periodic reduction")]
    SupportCollision { first: Vec<i64>, second: Vec<i64> },
    #[error("coupling block is {rows}x{cols}, expected {spin}x{spin}")]
    BlockShape { rows: usize, cols: usize, spin: usize },
    #[error("kernel has {got} momenta, the full grid has {expected}")]
    IncompleteGrid { expected: usize, got: usize },
}

/// Shape of a periodic d-dimensional cubic lattice with `spin` components per site.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LatticeShape {
    dims: Vec<usize>,
    spin: usize,
}

impl LatticeShape {
    pub fn new(dims: Vec<usize>, spin: usize) -> Result<Self, LatticeError> {
        if dims.is_empty() || dims.len() > 3 {
            return Err(LatticeError::UnsupportedDimension(dims.len()));
        }
        if dims.iter().any(|&n| n < 2) {
            return Err(LatticeError::AxisTooSmall(dims));
        }
        if spin == 0 {
            return Err(LatticeError::NoSpin);
        }
        Ok(Self { dims, spin })
    }

    pub fn chain(sites: usize, spin: usize) -> Result<Self, LatticeError> {
        Self::new(vec![sites], spin)
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn spin(&self) -> usize {
        self.spin
    }

    pub fn sites(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn modes(&self) -> usize {
        self.sites() * self.spin
    }

    /// The same lattice with every axis doubled.
    pub fn doubled(&self) -> Self {
        Self {
            dims: self.dims.iter().map(|n| 2 * n).collect(),
            spin: self.spin,
        }
    }

    pub fn with_spin(&self, spin: usize) -> Result<Self, LatticeError> {
        Self::new(self.dims.clone(), spin)
    }

    fn check_len(&self, len: usize) -> Result<(), LatticeError> {
        if len == self.dims.len() {
            Ok(())
        } else {
            Err(LatticeError::DimensionMismatch {
                expected: self.dims.len(),
                got: len,
            })
        }
    }

    /// Row-major position of a multi-index (last axis fastest).
    fn flatten(&self, comps: &[usize]) -> usize {
        comps
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&c, &n)| acc * n + c)
    }

    fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut comps = vec![0; self.dims.len()];
        for (c, &n) in comps.iter_mut().zip(&self.dims).rev() {
            *c = flat % n;
            flat /= n;
        }
        comps
    }

    pub fn momentum(&self, flat: usize) -> MomentumIndex {
        MomentumIndex(self.unflatten(flat))
    }

    pub fn momentum_flat(&self, k: &MomentumIndex) -> usize {
        self.flatten(&k.0)
    }

    pub fn momenta(&self) -> impl Iterator<Item = MomentumIndex> + '_ {
        (0..self.sites()).map(|i| self.momentum(i))
    }

    pub fn site(&self, flat: usize) -> SiteOffset {
        SiteOffset(self.unflatten(flat))
    }

    pub fn site_flat(&self, n: &SiteOffset) -> usize {
        self.flatten(&n.0)
    }

    pub fn offsets(&self) -> impl Iterator<Item = SiteOffset> + '_ {
        (0..self.sites()).map(|i| self.site(i))
    }

    /// Flat index of −k.
    pub fn negated_momentum_flat(&self, flat: usize) -> usize {
        self.momentum_flat(&self.momentum(flat).neg(self))
    }
}

/// A lattice translation, each component reduced into `0..Nᵢ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SiteOffset(Vec<usize>);

impl SiteOffset {
    pub fn zero(shape: &LatticeShape) -> Self {
        Self(vec![0; shape.dim()])
    }

    /// Reduces a signed offset modulo the lattice.
    pub fn from_signed(comps: &[i64], shape: &LatticeShape) -> Result<Self, LatticeError> {
        shape.check_len(comps.len())?;
        Ok(Self(
            comps
                .iter()
                .zip(shape.dims())
                .map(|(&c, &n)| c.rem_euclid(n as i64) as usize)
                .collect(),
        ))
    }

    pub fn components(&self) -> &[usize] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn neg(&self, shape: &LatticeShape) -> Self {
        Self(
            self.0
                .iter()
                .zip(shape.dims())
                .map(|(&c, &n)| (n - c) % n)
                .collect(),
        )
    }

    pub fn add(&self, other: &Self, shape: &LatticeShape) -> Self {
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .zip(shape.dims())
                .map(|((&a, &b), &n)| (a + b) % n)
                .collect(),
        )
    }

    /// Minimal-image signed representative; a component equal to Nᵢ/2 maps to +Nᵢ/2.
    pub fn signed(&self, shape: &LatticeShape) -> Vec<i64> {
        self.0
            .iter()
            .zip(shape.dims())
            .map(|(&c, &n)| {
                if 2 * c > n {
                    c as i64 - n as i64
                } else {
                    c as i64
                }
            })
            .collect()
    }
}

/// A point of the momentum grid, kᵢ ∈ 0..Nᵢ.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MomentumIndex(Vec<usize>);

impl MomentumIndex {
    pub fn new(comps: Vec<usize>, shape: &LatticeShape) -> Result<Self, LatticeError> {
        shape.check_len(comps.len())?;
        for (&c, &n) in comps.iter().zip(shape.dims()) {
            if c >= n {
                return Err(LatticeError::MomentumOutOfRange { value: c, size: n });
            }
        }
        Ok(Self(comps))
    }

    pub fn components(&self) -> &[usize] {
        &self.0
    }

    pub fn neg(&self, shape: &LatticeShape) -> Self {
        Self(
            self.0
                .iter()
                .zip(shape.dims())
                .map(|(&c, &n)| (n - c) % n)
                .collect(),
        )
    }

    pub fn is_self_conjugate(&self, shape: &LatticeShape) -> bool {
        self.0
            .iter()
            .zip(shape.dims())
            .all(|(&c, &n)| (2 * c) % n == 0)
    }

    /// 2πkᵢ/Nᵢ per axis.
    pub fn angles(&self, shape: &LatticeShape) -> Vec<f64> {
        self.0
            .iter()
            .zip(shape.dims())
            .map(|(&c, &n)| TAU * c as f64 / n as f64)
            .collect()
    }
}

/// Offset-keyed s×s blocks of a circulant matrix.
pub type CouplingMap = BTreeMap<SiteOffset, CMatrix>;

/// exp(+2πi Σᵢ nᵢkᵢ/Nᵢ).
pub fn phase(n: &SiteOffset, k: &MomentumIndex, shape: &LatticeShape) -> Result<Complex64, LatticeError> {
    shape.check_len(n.0.len())?;
    shape.check_len(k.0.len())?;
    Ok(phase_unchecked(&n.0, &k.0, shape.dims()))
}

fn phase_unchecked(n: &[usize], k: &[usize], dims: &[usize]) -> Complex64 {
    // Accumulate the winding number exactly per axis before going to floating point.
    let frac: f64 = n
        .iter()
        .zip(k)
        .zip(dims)
        .map(|((&a, &b), &size)| ((a * b) % size) as f64 / size as f64)
        .sum();
    let frac = frac - frac.floor();
    let (s, c) = (TAU * frac).sin_cos();
    Complex64::new(c, s)
}

/// Builds a coupling map from signed offsets, rejecting entries that alias
/// another support offset after periodic reduction.
pub fn couplings_from_signed<I>(entries: I, shape: &LatticeShape) -> Result<CouplingMap, LatticeError>
where
    I: IntoIterator<Item = (Vec<i64>, CMatrix)>,
{
    let mut map = CouplingMap::new();
    let mut origin: BTreeMap<SiteOffset, Vec<i64>> = BTreeMap::new();
    for (signed, block) in entries {
        check_block(&block, shape.spin())?;
        let key = SiteOffset::from_signed(&signed, shape)?;
        if let Some(first) = origin.get(&key) {
            return Err(LatticeError::SupportCollision {
                first: first.clone(),
                second: signed,
            });
        }
        origin.insert(key.clone(), signed);
        map.insert(key, block);
    }
    Ok(map)
}

pub(crate) fn check_block(block: &CMatrix, spin: usize) -> Result<(), LatticeError> {
    if block.nrows() != spin || block.ncols() != spin {
        return Err(LatticeError::BlockShape {
            rows: block.nrows(),
            cols: block.ncols(),
            spin,
        });
    }
    Ok(())
}

/// X_k for a single momentum.
pub fn fourier_at(couplings: &CouplingMap, k: &MomentumIndex, shape: &LatticeShape) -> Result<CMatrix, LatticeError> {
    shape.check_len(k.0.len())?;
    let s = shape.spin();
    let mut acc = CMatrix::zeros(s, s);
    for (n, block) in couplings {
        shape.check_len(n.0.len())?;
        check_block(block, s)?;
        acc += block * phase_unchecked(&n.0, &k.0, shape.dims()).conj();
    }
    Ok(acc)
}

/// X_k on the full momentum grid, in row-major momentum order.
pub fn fourier_circulant(couplings: &CouplingMap, shape: &LatticeShape) -> Result<Vec<CMatrix>, LatticeError> {
    shape.momenta().map(|k| fourier_at(couplings, &k, shape)).collect()
}

/// X(n) at the requested offsets from a full-grid kernel.
pub fn inverse_fourier_at(
    kernel: &[CMatrix],
    offsets: &[SiteOffset],
    shape: &LatticeShape,
) -> Result<Vec<CMatrix>, LatticeError> {
    if kernel.len() != shape.sites() {
        return Err(LatticeError::IncompleteGrid {
            expected: shape.sites(),
            got: kernel.len(),
        });
    }
    let size = kernel.first().map_or(shape.spin(), |m| m.nrows());
    let norm = 1.0 / shape.sites() as f64;
    offsets
        .iter()
        .map(|n| {
            shape.check_len(n.0.len())?;
            let mut acc = CMatrix::zeros(size, size);
            for (flat, block) in kernel.iter().enumerate() {
                let k = shape.unflatten(flat);
                acc += block * phase_unchecked(&n.0, &k, shape.dims());
            }
            Ok(acc * Complex64::new(norm, 0.0))
        })
        .collect()
}

/// X(n) at every lattice offset.
pub fn inverse_fourier(kernel: &[CMatrix], shape: &LatticeShape) -> Result<CouplingMap, LatticeError> {
    let offsets: Vec<SiteOffset> = shape.offsets().collect();
    let blocks = inverse_fourier_at(kernel, &offsets, shape)?;
    Ok(offsets.into_iter().zip(blocks).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, ONE};

    fn scalar(re: f64, im: f64) -> CMatrix {
        CMatrix::from_element(1, 1, Complex64::new(re, im))
    }

    #[test]
    fn shape_validation() {
        assert!(LatticeShape::new(vec![], 1).is_err());
        assert!(LatticeShape::new(vec![2, 2, 2, 2], 1).is_err());
        assert!(LatticeShape::new(vec![4, 1], 1).is_err());
        assert!(LatticeShape::new(vec![4], 0).is_err());
        let s = LatticeShape::new(vec![4, 6], 2).unwrap();
        assert_eq!(s.sites(), 24);
        assert_eq!(s.modes(), 48);
    }

    #[test]
    fn phase_examples() {
        let chain = LatticeShape::chain(4, 1).unwrap();
        let k1 = MomentumIndex::new(vec![1], &chain).unwrap();
        let zero = SiteOffset::zero(&chain);
        assert!((phase(&zero, &k1, &chain).unwrap() - ONE).norm() < 1e-15);
        let n1 = SiteOffset::from_signed(&[1], &chain).unwrap();
        assert!((phase(&n1, &k1, &chain).unwrap() - Complex64::new(0.0, 1.0)).norm() < 1e-15);

        let square = LatticeShape::new(vec![4, 6], 1).unwrap();
        let n = SiteOffset::from_signed(&[1, 3], &square).unwrap();
        let k = MomentumIndex::new(vec![2, 2], &square).unwrap();
        // 2/4 + 6/6 turns: a half turn net.
        let direct = Complex64::from_polar(1.0, TAU * (2.0 / 4.0 + 6.0 / 6.0));
        let got = phase(&n, &k, &square).unwrap();
        assert!((got - direct).norm() < 1e-15);
        assert!((got + ONE).norm() < 1e-15);
    }

    #[test]
    fn phase_rejects_dimension_mismatch() {
        let chain = LatticeShape::chain(4, 1).unwrap();
        let square = LatticeShape::new(vec![4, 4], 1).unwrap();
        let n = SiteOffset::zero(&square);
        let k = MomentumIndex::new(vec![0], &chain).unwrap();
        assert!(matches!(
            phase(&n, &k, &chain),
            Err(LatticeError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn negation_and_self_conjugate_momenta() {
        let shape = LatticeShape::new(vec![4, 5], 1).unwrap();
        let conj: Vec<_> = shape
            .momenta()
            .filter(|k| k.is_self_conjugate(&shape))
            .map(|k| k.components().to_vec())
            .collect();
        assert_eq!(conj, vec![vec![0, 0], vec![2, 0]]);
        let k = MomentumIndex::new(vec![1, 3], &shape).unwrap();
        assert_eq!(k.neg(&shape).components(), &[3, 2]);
        let n = SiteOffset::from_signed(&[-1, 7], &shape).unwrap();
        assert_eq!(n.components(), &[3, 2]);
        assert_eq!(n.signed(&shape), vec![-1, 2]);
    }

    #[test]
    fn on_site_coupling_has_constant_image() {
        let shape = LatticeShape::chain(6, 2).unwrap();
        let m = CMatrix::from_fn(2, 2, |r, c| Complex64::new(r as f64 + 1.0, c as f64));
        let map = couplings_from_signed([(vec![0], m.clone())], &shape).unwrap();
        for xk in fourier_circulant(&map, &shape).unwrap() {
            assert!(max_abs_diff(&xk, &m) < 1e-15);
        }
    }

    #[test]
    fn cosine_kernel_and_inverse() {
        let shape = LatticeShape::chain(4, 1).unwrap();
        let map = couplings_from_signed(
            [(vec![1], scalar(0.5, 0.0)), (vec![-1], scalar(0.5, 0.0))],
            &shape,
        )
        .unwrap();
        let kernel = fourier_circulant(&map, &shape).unwrap();
        let expected = [1.0, 0.0, -1.0, 0.0];
        for (xk, e) in kernel.iter().zip(expected) {
            assert!((xk[(0, 0)] - Complex64::new(e, 0.0)).norm() < 1e-15);
        }
        let back = inverse_fourier(&kernel, &shape).unwrap();
        for (n, x) in &back {
            let want = if n.is_zero() || n.components() == [2] { 0.0 } else { 0.5 };
            assert!((x[(0, 0)] - Complex64::new(want, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn constant_kernel_inverts_to_on_site() {
        let shape = LatticeShape::new(vec![3, 4], 1).unwrap();
        let kernel = vec![scalar(0.7, -0.2); shape.sites()];
        let back = inverse_fourier(&kernel, &shape).unwrap();
        for (n, x) in &back {
            let want = if n.is_zero() { Complex64::new(0.7, -0.2) } else { Complex64::new(0.0, 0.0) };
            assert!((x[(0, 0)] - want).norm() < 1e-15);
        }
    }

    #[test]
    fn collision_and_grid_errors() {
        let shape = LatticeShape::chain(2, 1).unwrap();
        let err = couplings_from_signed([(vec![1], scalar(1.0, 0.0)), (vec![-1], scalar(1.0, 0.0))], &shape);
        assert!(matches!(err, Err(LatticeError::SupportCollision { .. })));
        let err = inverse_fourier(&[scalar(1.0, 0.0)], &shape);
        assert!(matches!(err, Err(LatticeError::IncompleteGrid { .. })));
        let bad = couplings_from_signed([(vec![0], CMatrix::zeros(2, 2))], &shape);
        assert!(matches!(bad, Err(LatticeError::BlockShape { .. })));
    }
}
