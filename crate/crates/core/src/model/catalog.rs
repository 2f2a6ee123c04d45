use std::collections::BTreeMap;
use std::str::FromStr;

use num_complex::Complex64;

use super::{CouplingSet, ModelError, RawCouplings};
use crate::lattice::{LatticeShape, SiteOffset};
use crate::linalg::{CMatrix, I};

/// Named models with their real parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatalogModel {
    /// Gapped nearest-neighbour spin-½ chain whose per-spin hopping
    /// correlators are ∓i/4. Parameter `p > 0`; one-particle bands −1 and p.
    PaperPModel,
    /// Spinless chain with hopping `½ e^{iα} c†_l c_{l+1} + h.c.` and on-site
    /// `−μ`, dispersion `cos(k̃ + α) − μ`. Parameters `alpha`, `mu`.
    TwistedChain,
    /// Spinless model with user-supplied scalars on any offsets, see
    /// [`catalog`] for the parameter naming.
    SpinlessGeneral,
}

impl CatalogModel {
    pub const ALL: [CatalogModel; 3] = [Self::PaperPModel, Self::TwistedChain, Self::SpinlessGeneral];

    pub fn name(self) -> &'static str {
        match self {
            Self::PaperPModel => "paper-p-model",
            Self::TwistedChain => "twisted-chain",
            Self::SpinlessGeneral => "spinless-general",
        }
    }

    /// Spin count the model lives on.
    pub fn spin(self) -> usize {
        match self {
            Self::PaperPModel => 2,
            Self::TwistedChain | Self::SpinlessGeneral => 1,
        }
    }
}

impl FromStr for CatalogModel {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| ModelError::UnknownModel(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub shape: LatticeShape,
}

impl ModelParams {
    pub fn new(name: &str, shape: LatticeShape) -> Self {
        Self {
            name: name.to_string(),
            params: BTreeMap::new(),
            shape,
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    fn get(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    fn only_keys(&self, allowed: &[&str]) -> Result<(), ModelError> {
        match self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(ModelError::UnknownParameter(k.clone())),
            None => Ok(()),
        }
    }
}

fn require_chain(model: CatalogModel, shape: &LatticeShape) -> Result<(), ModelError> {
    if shape.dim() != 1 || shape.spin() != model.spin() {
        return Err(ModelError::ShapeUnsupported {
            model: model.name().to_string(),
            requirement: format!("a 1-dimensional lattice with spin {}", model.spin()),
        });
    }
    Ok(())
}

/// Builds a catalog model.
///
/// `spinless-general` takes parameters named `hop:<offset>` / `hop:<offset>:im`
/// and `pair:<offset>` / `pair:<offset>:im`, the offset written as
/// comma-separated signed integers (`hop:1`, `pair:1,0:im`). Blocks whose
/// closure partner is not given are completed (`hop(−n) = conj hop(n)`,
/// `pair(−n) = −pair(n)`); explicitly given partners must already agree.
pub fn catalog(params: &ModelParams) -> Result<CouplingSet, ModelError> {
    let model: CatalogModel = params.name.parse()?;
    let shape = params.shape.clone();
    match model {
        CatalogModel::PaperPModel => {
            require_chain(model, &shape)?;
            params.only_keys(&["p"])?;
            let p = params.get("p", 2.0);
            if !(p > 0.0) {
                return Err(ModelError::ParameterOutOfRange {
                    name: "p".into(),
                    value: p,
                    reason: "must be positive".into(),
                });
            }
            let w = (p + 1.0) / 4.0;
            let on_site = CMatrix::identity(2, 2) * Complex64::new((p - 1.0) / 2.0, 0.0);
            // hop(+1) multiplies b†_{m+1} b_m; spin order (↑, ↓).
            let forward = CMatrix::from_row_slice(2, 2, &[I * w, Complex64::new(-w, 0.0), Complex64::new(-w, 0.0), -I * w]);
            let backward = forward.adjoint();
            let raw = RawCouplings::from_signed(
                shape,
                [(vec![0], on_site), (vec![1], forward), (vec![-1], backward)],
                [],
            )?;
            CouplingSet::try_from_raw(raw)
        }
        CatalogModel::TwistedChain => {
            require_chain(model, &shape)?;
            params.only_keys(&["alpha", "mu"])?;
            let alpha = params.get("alpha", 0.0);
            let mu = params.get("mu", 0.0);
            let right = Complex64::from_polar(0.5, alpha);
            let mut hop = vec![
                (vec![-1], CMatrix::from_element(1, 1, right)),
                (vec![1], CMatrix::from_element(1, 1, right.conj())),
            ];
            if mu != 0.0 {
                hop.push((vec![0], CMatrix::from_element(1, 1, Complex64::new(-mu, 0.0))));
            }
            let raw = RawCouplings::from_signed(shape, hop, [])?;
            CouplingSet::try_from_raw(raw)
        }
        CatalogModel::SpinlessGeneral => {
            if shape.spin() != 1 {
                return Err(ModelError::ShapeUnsupported {
                    model: model.name().to_string(),
                    requirement: "spin 1".into(),
                });
            }
            spinless_general(params)
        }
    }
}

fn spinless_general(params: &ModelParams) -> Result<CouplingSet, ModelError> {
    let shape = &params.shape;
    let mut hop: BTreeMap<Vec<i64>, Complex64> = BTreeMap::new();
    let mut pair: BTreeMap<Vec<i64>, Complex64> = BTreeMap::new();
    for (key, &value) in &params.params {
        let mut parts = key.split(':');
        let kind = parts.next().unwrap_or_default();
        let offset = parts.next().ok_or_else(|| ModelError::UnknownParameter(key.clone()))?;
        let imaginary = match parts.next() {
            None | Some("re") => false,
            Some("im") => true,
            Some(_) => return Err(ModelError::UnknownParameter(key.clone())),
        };
        let offset: Vec<i64> = offset
            .split(',')
            .map(|c| c.trim().parse::<i64>())
            .collect::<Result<_, _>>()
            .map_err(|_| ModelError::UnknownParameter(key.clone()))?;
        let target = match kind {
            "hop" => &mut hop,
            "pair" => &mut pair,
            _ => return Err(ModelError::UnknownParameter(key.clone())),
        };
        let entry = target.entry(offset).or_default();
        if imaginary {
            entry.im += value;
        } else {
            entry.re += value;
        }
    }
    // Complete missing partners on the reduced lattice so that e.g. `hop:1`
    // alone yields a Hermitian hopping.
    let complete = |given: &BTreeMap<Vec<i64>, Complex64>, partner: fn(Complex64) -> Complex64| -> Result<Vec<(Vec<i64>, CMatrix)>, ModelError> {
        let mut reduced: BTreeMap<SiteOffset, (Vec<i64>, Complex64)> = BTreeMap::new();
        for (n, &z) in given {
            reduced.insert(SiteOffset::from_signed(n, shape)?, (n.clone(), z));
        }
        let mut out: Vec<(Vec<i64>, CMatrix)> = reduced.values().map(|(n, z)| (n.clone(), CMatrix::from_element(1, 1, *z))).collect();
        for (key, (n, z)) in &reduced {
            let neg = key.neg(shape);
            if !reduced.contains_key(&neg) {
                let signed: Vec<i64> = n.iter().map(|c| -c).collect();
                out.push((signed, CMatrix::from_element(1, 1, partner(*z))));
            }
        }
        Ok(out)
    };
    let hop = complete(&hop, |z| z.conj())?;
    let pair = complete(&pair, |z| -z)?;
    let raw = RawCouplings::from_signed(shape.clone(), hop, pair)?;
    CouplingSet::try_from_raw(raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use crate::model::{bdg_block, is_inversion_symmetric};
    use std::f64::consts::{FRAC_PI_2, TAU};

    fn chain(n: usize, s: usize) -> LatticeShape {
        LatticeShape::chain(n, s).unwrap()
    }

    /// A_k of the p-model exactly as displayed in momentum space.
    fn p_model_hop_kernel(p: f64, kt: f64) -> CMatrix {
        let a = (p - 1.0) / 2.0;
        let b = (p + 1.0) / 2.0;
        CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(a + b * kt.sin(), 0.0),
                Complex64::new(-b * kt.cos(), 0.0),
                Complex64::new(-b * kt.cos(), 0.0),
                Complex64::new(a - b * kt.sin(), 0.0),
            ],
        )
    }

    #[test]
    fn p_model_matches_momentum_space_display() {
        let p = 2.0;
        let shape = chain(64, 2);
        let c = catalog(&ModelParams::new("paper-p-model", shape.clone()).with("p", p)).unwrap();
        // Ten scattered momenta.
        for k in [0usize, 3, 7, 16, 21, 32, 40, 47, 55, 63] {
            let k = shape.momentum(k);
            let kt = k.angles(&shape)[0];
            let h = bdg_block(&c, &k);
            let a = h.matrix.view((0, 0), (2, 2)).into_owned();
            assert!(max_abs_diff(&a, &p_model_hop_kernel(p, kt)) < 1e-14);
            assert!(crate::linalg::max_abs(&h.matrix.view((0, 2), (2, 2)).into_owned()) < 1e-15);
        }
    }

    #[test]
    fn p_model_rejects_bad_input() {
        let shape = chain(8, 2);
        assert!(matches!(
            catalog(&ModelParams::new("paper-p-model", shape.clone()).with("p", -1.0)),
            Err(ModelError::ParameterOutOfRange { .. })
        ));
        assert!(matches!(
            catalog(&ModelParams::new("paper-p-model", chain(8, 1))),
            Err(ModelError::ShapeUnsupported { .. })
        ));
        assert!(matches!(
            catalog(&ModelParams::new("no-such-model", shape.clone())),
            Err(ModelError::UnknownModel(_))
        ));
        assert!(matches!(
            catalog(&ModelParams::new("paper-p-model", shape).with("q", 1.0)),
            Err(ModelError::UnknownParameter(_))
        ));
    }

    #[test]
    fn twisted_chain_dispersion() {
        let shape = chain(8, 1);
        let c0 = catalog(&ModelParams::new("twisted-chain", shape.clone())).unwrap();
        assert!(is_inversion_symmetric(&c0, 1e-15));
        let c1 = catalog(&ModelParams::new("twisted-chain", shape.clone()).with("alpha", FRAC_PI_2)).unwrap();
        for k in shape.momenta() {
            let kt = TAU * k.components()[0] as f64 / 8.0;
            assert!((c0.hop_kernel(&k)[(0, 0)] - Complex64::new(kt.cos(), 0.0)).norm() < 1e-15);
            assert!((c1.hop_kernel(&k)[(0, 0)] - Complex64::new(-kt.sin(), 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn spinless_general_completes_partners() {
        let shape = chain(10, 1);
        let c = catalog(
            &ModelParams::new("spinless-general", shape.clone())
                .with("hop:0", -0.3)
                .with("hop:1", 0.5)
                .with("pair:1", -0.5),
        )
        .unwrap();
        for k in shape.momenta() {
            let kt = k.angles(&shape)[0];
            assert!((c.hop_kernel(&k)[(0, 0)] - Complex64::new(kt.cos() - 0.3, 0.0)).norm() < 1e-15);
            assert!((c.pair_kernel(&k)[(0, 0)] - Complex64::new(0.0, kt.sin())).norm() < 1e-15);
        }
        let bad = catalog(
            &ModelParams::new("spinless-general", shape)
                .with("hop:1", 0.5)
                .with("hop:-1", 0.2),
        );
        assert!(matches!(bad, Err(ModelError::Invalid(_))));
    }
}
