//! Brute-force Fock-space verification on tiny lattices.
//!
//! Modes are ordered site-major, spin-minor (`mode = site * s + j`) and a basis
//! state is the bit string of occupations, `|x⟩ = b†_{a₁} b†_{a₂} ⋯ |0⟩` with
//! `a₁ < a₂ < ⋯`. Operators act bit-wise with Jordan–Wigner signs; nothing here
//! touches the momentum-space machinery, so agreement with it is an
//! independent check.

use faer::{c64, Mat, Side};
use num_complex::Complex64;

use crate::lattice::{LatticeShape, SiteOffset};
use crate::model::CouplingSet;
use crate::solver::{BogoliubovSolution, RealSpaceCorrelators};

/// Largest number of modes accepted (Fock dimension 2^14).
pub const MAX_MODES: usize = 14;

pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("{modes} modes exceed the Fock-space cap of {cap}")]
    TooManyModes { modes: usize, cap: usize },
    #[error("dense eigensolver failed on a {dim}x{dim} Fock matrix")]
    Eigen { dim: usize },
    #[error("exact ground state is degenerate (gap {gap:.3e}); correlators are not canonical")]
    Degenerate { gap: f64 },
    #[error("quasifree solution has {0} zero modes; ground state is not unique")]
    ZeroModes(usize),
    #[error("mode count mismatch: exact state has {exact}, correlators describe {quasifree}")]
    ModeMismatch { exact: usize, quasifree: usize },
}

/// Fock space of `modes` fermionic modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpace {
    modes: usize,
}

impl FockSpace {
    pub fn new(modes: usize) -> Result<Self, OracleError> {
        if modes > MAX_MODES {
            return Err(OracleError::TooManyModes { modes, cap: MAX_MODES });
        }
        Ok(Self { modes })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        1 << self.modes
    }

    fn sign_below(mode: usize, state: usize) -> f64 {
        if (state & ((1 << mode) - 1)).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// b_i|x⟩ = sign·|y⟩, or `None` when mode i is empty.
    pub fn annihilate(&self, mode: usize, state: usize) -> Option<(usize, f64)> {
        (state >> mode & 1 == 1).then(|| (state ^ (1 << mode), Self::sign_below(mode, state)))
    }

    /// b_i†|x⟩ = sign·|y⟩, or `None` when mode i is occupied.
    pub fn create(&self, mode: usize, state: usize) -> Option<(usize, f64)> {
        (state >> mode & 1 == 0).then(|| (state | (1 << mode), Self::sign_below(mode, state)))
    }

    /// Dense matrix of b_i.
    pub fn annihilator(&self, mode: usize) -> Mat<c64> {
        let mut m = Mat::<c64>::zeros(self.dim(), self.dim());
        for x in 0..self.dim() {
            if let Some((y, s)) = self.annihilate(mode, x) {
                m[(y, x)] = c64::new(s, 0.0);
            }
        }
        m
    }

    /// ⟨ψ|b†_a b_b|ψ⟩ for all mode pairs.
    pub fn hopping_correlators(&self, psi: &[c64]) -> Vec<Vec<Complex64>> {
        self.two_point(psi, |a, x| self.create(a, x))
    }

    /// ⟨ψ|b_a b_b|ψ⟩ for all mode pairs.
    pub fn pairing_correlators(&self, psi: &[c64]) -> Vec<Vec<Complex64>> {
        self.two_point(psi, |a, x| self.annihilate(a, x))
    }

    fn two_point(&self, psi: &[c64], first: impl Fn(usize, usize) -> Option<(usize, f64)>) -> Vec<Vec<Complex64>> {
        let n = self.modes;
        let mut out = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for (x, &amp) in psi.iter().enumerate() {
            if amp == c64::new(0.0, 0.0) {
                continue;
            }
            for b in 0..n {
                let Some((x1, s1)) = self.annihilate(b, x) else { continue };
                for (a, row) in out.iter_mut().enumerate() {
                    if let Some((y, s2)) = first(a, x1) {
                        row[b] += psi[y].conj() * amp * (s1 * s2);
                    }
                }
            }
        }
        out
    }

    /// Dense operator of the lattice translation by one site along `axis`.
    pub fn translation(&self, shape: &LatticeShape, axis: usize) -> Mat<c64> {
        let s = shape.spin();
        let mut step = vec![0i64; shape.dim()];
        step[axis] = 1;
        let step = SiteOffset::from_signed(&step, shape).expect("unit step fits the lattice");
        let image: Vec<usize> = (0..self.modes)
            .map(|mode| {
                let site = shape.site(mode / s).add(&step, shape);
                shape.site_flat(&site) * s + mode % s
            })
            .collect();
        let mut t = Mat::<c64>::zeros(self.dim(), self.dim());
        for x in 0..self.dim() {
            let targets: Vec<usize> = (0..self.modes).filter(|&a| x >> a & 1 == 1).map(|a| image[a]).collect();
            let inversions = (0..targets.len())
                .flat_map(|i| (i + 1..targets.len()).map(move |j| (i, j)))
                .filter(|&(i, j)| targets[i] > targets[j])
                .count();
            let y = targets.iter().fold(0usize, |acc, &a| acc | (1 << a));
            t[(y, x)] = c64::new(if inversions % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
        }
        t
    }
}

/// Mode-level coefficients of `H = Σ h_ab b†_a b_b + Σ (p_ab b†_a b†_b + h.c.)`.
fn mode_coefficients(c: &CouplingSet) -> (Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
    let shape = c.shape();
    let s = shape.spin();
    let n = shape.modes();
    let mut h = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    let mut p = h.clone();
    for m in 0..shape.sites() {
        let from = shape.site(m);
        for (target, map, scale) in [(&mut h, c.hop(), 1.0), (&mut p, c.pair(), 0.5)] {
            for (offset, block) in map {
                let to = shape.site_flat(&from.add(offset, shape));
                for j in 0..s {
                    for l in 0..s {
                        target[to * s + j][m * s + l] += block[(j, l)] * scale;
                    }
                }
            }
        }
    }
    (h, p)
}

/// Dense many-body Hamiltonian `Σ hop(n)^{jl} b†_{m+n,j} b_{m,l} + ½ Σ (pair(n)^{jl} b†_{m+n,j} b†_{m,l} + h.c.)`.
pub fn build_fock_hamiltonian(c: &CouplingSet) -> Result<Mat<c64>, OracleError> {
    let space = FockSpace::new(c.shape().modes())?;
    let (h, p) = mode_coefficients(c);
    let n = space.modes();
    let mut out = Mat::<c64>::zeros(space.dim(), space.dim());
    for x in 0..space.dim() {
        for b in 0..n {
            for a in 0..n {
                if h[a][b] != Complex64::new(0.0, 0.0) {
                    if let Some((y, s)) = space.annihilate(b, x).and_then(|(x1, s1)| space.create(a, x1).map(|(y, s2)| (y, s1 * s2))) {
                        out[(y, x)] += h[a][b] * s;
                    }
                }
                if p[a][b] != Complex64::new(0.0, 0.0) {
                    if let Some((y, s)) = space.create(b, x).and_then(|(x1, s1)| space.create(a, x1).map(|(y, s2)| (y, s1 * s2))) {
                        out[(y, x)] += p[a][b] * s;
                    }
                    // (b†_a b†_b)† = b_b b_a
                    if let Some((y, s)) = space.annihilate(a, x).and_then(|(x1, s1)| space.annihilate(b, x1).map(|(y, s2)| (y, s1 * s2))) {
                        out[(y, x)] += p[a][b].conj() * s;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Eigenvalues (ascending) and eigenvectors of a dense Hermitian matrix.
fn dense_eigen(h: &Mat<c64>) -> Result<(Vec<f64>, Mat<c64>), OracleError> {
    let dim = h.nrows();
    let eig = h.self_adjoint_eigen(Side::Lower).map_err(|_| OracleError::Eigen { dim })?;
    let s = eig.S().column_vector();
    let values: Vec<f64> = (0..dim).map(|i| s[i].re).collect();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let u = eig.U();
    let vectors = Mat::<c64>::from_fn(dim, dim, |r, c| u[(r, order[c])]);
    Ok((order.iter().map(|&i| values[i]).collect(), vectors))
}

#[derive(Debug, Clone)]
pub struct ExactGroundState {
    pub energy: f64,
    /// Separation between the two lowest many-body levels.
    pub gap: f64,
    pub degenerate: bool,
    pub vector: Vec<c64>,
    /// ⟨b†_a b_b⟩ over mode pairs.
    pub hopping: Vec<Vec<Complex64>>,
    /// ⟨b_a b_b⟩ over mode pairs.
    pub pairing: Vec<Vec<Complex64>>,
}

impl ExactGroundState {
    pub fn modes(&self) -> usize {
        self.hopping.len()
    }
}

/// Exact ground state of a Fock Hamiltonian. Flags the result degenerate when
/// the lowest gap is below `degeneracy_tol` times the spectral width.
pub fn exact_ground_correlators(h: &Mat<c64>, degeneracy_tol: f64) -> Result<ExactGroundState, OracleError> {
    let dim = h.nrows();
    let modes = dim.trailing_zeros() as usize;
    let space = FockSpace::new(modes)?;
    let (values, vectors) = dense_eigen(h)?;
    let width = values[dim - 1] - values[0];
    let gap = if dim > 1 { values[1] - values[0] } else { f64::INFINITY };
    let vector: Vec<c64> = (0..dim).map(|i| vectors[(i, 0)]).collect();
    Ok(ExactGroundState {
        energy: values[0],
        gap,
        degenerate: gap <= degeneracy_tol * width,
        hopping: space.hopping_correlators(&vector),
        pairing: space.pairing_correlators(&vector),
        vector,
    })
}

/// Quasifree ground energy of the Fock Hamiltonian above:
/// `½ Σ_k Σ_{λ(H_k)<0} λ + ½ N tr hop(0)`. The first term is the ground energy
/// of `½ Σ_k Ψ_k† H_k Ψ_k`; the second restores the normal-ordering constant
/// dropped when the hopping term is written in the doubled Nambu form.
pub fn quasifree_ground_energy(c: &CouplingSet, sol: &BogoliubovSolution) -> f64 {
    let filled: f64 = sol
        .momenta()
        .iter()
        .flat_map(|m| m.energies.iter().copied().filter(|&e| e < 0.0))
        .sum();
    let on_site = c
        .hop()
        .get(&SiteOffset::zero(c.shape()))
        .map_or(0.0, |b| b.trace().re);
    0.5 * filled + 0.5 * c.shape().sites() as f64 * on_site
}

/// Max entrywise deviation between exact mode-pair correlators and quasifree
/// real-space correlators (which must cover every lattice offset).
pub fn compare_with_quasifree(
    exact: &ExactGroundState,
    rc: &RealSpaceCorrelators,
    shape: &LatticeShape,
) -> Result<f64, OracleError> {
    if exact.degenerate {
        return Err(OracleError::Degenerate { gap: exact.gap });
    }
    if exact.modes() != shape.modes() {
        return Err(OracleError::ModeMismatch {
            exact: exact.modes(),
            quasifree: shape.modes(),
        });
    }
    let s = shape.spin();
    let mut worst = 0.0_f64;
    for a in 0..shape.modes() {
        for b in 0..shape.modes() {
            let (ma, mb) = (shape.site(a / s), shape.site(b / s));
            let n = mb.add(&ma.neg(shape), shape);
            let (j, l) = (a % s, b % s);
            worst = worst
                .max((exact.hopping[a][b] - rc.hopping[&n][(j, l)]).norm())
                .max((exact.pairing[a][b] - rc.pairing[&n][(j, l)]).norm());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleComparison {
    pub correlator_deviation: f64,
    pub exact_energy: f64,
    pub quasifree_energy: f64,
    /// |E_quasifree − E_exact| / max(1, |E_exact|).
    pub energy_error: f64,
    pub many_body_gap: f64,
}

/// Full pipeline for one model: exact diagonalization versus the quasifree
/// ground state.
pub fn oracle_check(c: &CouplingSet, degeneracy_tol: f64) -> Result<OracleComparison, OracleError> {
    let sol = crate::solver::diagonalize(c).map_err(|_| OracleError::Eigen {
        dim: 2 * c.shape().spin(),
    })?;
    let cov = crate::solver::ground_covariance(&sol, crate::solver::DEFAULT_ZERO_MODE_TOL);
    if !cov.zero_modes().is_empty() {
        return Err(OracleError::ZeroModes(cov.zero_modes().len()));
    }
    let exact = exact_ground_correlators(&build_fock_hamiltonian(c)?, degeneracy_tol)?;
    let offsets: Vec<_> = c.shape().offsets().collect();
    let rc = crate::solver::real_space(&cov, &offsets).expect("offsets come from the same lattice");
    let correlator_deviation = compare_with_quasifree(&exact, &rc, c.shape())?;
    let quasifree_energy = quasifree_ground_energy(c, &sol);
    Ok(OracleComparison {
        correlator_deviation,
        exact_energy: exact.energy,
        quasifree_energy,
        energy_error: (quasifree_energy - exact.energy).abs() / exact.energy.abs().max(1.0),
        many_body_gap: exact.gap,
    })
}

/// ⟨C_n⟩ = N · Im Σ_j ⟨b†_m b_{m+n}⟩ evaluated from mode-pair correlators,
/// averaging over m.
pub fn current_expectation(hopping: &[Vec<Complex64>], shape: &LatticeShape, n: &SiteOffset) -> f64 {
    let s = shape.spin();
    let mut total = 0.0;
    for m in 0..shape.sites() {
        let to = shape.site_flat(&shape.site(m).add(n, shape));
        for j in 0..s {
            total += hopping[m * s + j][to * s + j].im;
        }
    }
    total
}

/// exp(−i t H) ψ for a dense Hermitian H.
pub fn evolve_state(h: &Mat<c64>, psi: &[c64], t: f64) -> Result<Vec<c64>, OracleError> {
    let (values, u) = dense_eigen(h)?;
    let dim = values.len();
    let coeffs: Vec<c64> = (0..dim)
        .map(|c| {
            let overlap: c64 = (0..dim).map(|r| u[(r, c)].conj() * psi[r]).sum();
            overlap * Complex64::from_polar(1.0, -values[c] * t)
        })
        .collect();
    Ok((0..dim).map(|r| (0..dim).map(|c| u[(r, c)] * coeffs[c]).sum()).collect())
}
