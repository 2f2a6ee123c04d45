//! TOML model definition files.
//!
//! ```toml
//! [shape]
//! d = 1
//! dims = [8]
//! spin = 1
//!
//! [[coupling]]
//! kind = "hop"        # or "pair"
//! offset = [1]
//! matrix = [[[0.5, 0.0]]]   # s×s array of [re, im]
//! ```

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{symmetrize, validate, CouplingKind, CouplingSet, ModelError, RawCouplings, Violation};
use crate::lattice::LatticeShape;
use crate::linalg::CMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeBlock {
    pub d: usize,
    pub dims: Vec<usize>,
    pub spin: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingRecord {
    pub kind: String,
    pub offset: Vec<i64>,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub shape: ShapeBlock,
    #[serde(default)]
    pub coupling: Vec<CouplingRecord>,
}

/// A model read from disk after projection onto the closure constraints.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub couplings: CouplingSet,
    /// Largest entry change made by the projection.
    pub projection_distance: f64,
    /// Closure violations of the file as written.
    pub violations: Vec<Violation>,
}

impl ModelFile {
    pub fn from_couplings(c: &CouplingSet) -> Self {
        let shape = c.shape();
        let record = |kind: &str, n: &crate::lattice::SiteOffset, m: &CMatrix| CouplingRecord {
            kind: kind.to_string(),
            offset: n.signed(shape),
            matrix: (0..m.nrows())
                .map(|r| (0..m.ncols()).map(|col| [m[(r, col)].re, m[(r, col)].im]).collect())
                .collect(),
        };
        let mut coupling: Vec<CouplingRecord> = c.hop().iter().map(|(n, m)| record("hop", n, m)).collect();
        coupling.extend(c.pair().iter().map(|(n, m)| record("pair", n, m)));
        Self {
            shape: ShapeBlock {
                d: shape.dim(),
                dims: shape.dims().to_vec(),
                spin: shape.spin(),
            },
            coupling,
        }
    }

    pub fn to_raw(&self) -> Result<RawCouplings, ModelError> {
        if self.shape.d != self.shape.dims.len() {
            return Err(ModelError::File(format!(
                "shape.d = {} but dims has {} entries",
                self.shape.d,
                self.shape.dims.len()
            )));
        }
        let shape = LatticeShape::new(self.shape.dims.clone(), self.shape.spin)?;
        let s = shape.spin();
        let mut hop = Vec::new();
        let mut pair = Vec::new();
        for (i, rec) in self.coupling.iter().enumerate() {
            let kind = match rec.kind.as_str() {
                "hop" => CouplingKind::Hop,
                "pair" => CouplingKind::Pair,
                other => return Err(ModelError::File(format!("coupling #{i}: unknown kind `{other}`"))),
            };
            if rec.matrix.len() != s || rec.matrix.iter().any(|row| row.len() != s) {
                return Err(ModelError::File(format!("coupling #{i}: matrix must be {s}x{s}")));
            }
            let m = CMatrix::from_fn(s, s, |r, c| Complex64::new(rec.matrix[r][c][0], rec.matrix[r][c][1]));
            match kind {
                CouplingKind::Hop => hop.push((rec.offset.clone(), m)),
                CouplingKind::Pair => pair.push((rec.offset.clone(), m)),
            }
        }
        RawCouplings::from_signed(shape, hop, pair)
    }
}

pub fn parse_model_file(text: &str) -> Result<LoadedModel, ModelError> {
    let file: ModelFile = toml::from_str(text).map_err(|e| ModelError::File(e.to_string()))?;
    let raw = file.to_raw()?;
    let violations = validate(&raw);
    let (couplings, projection_distance) = symmetrize(&raw)?;
    Ok(LoadedModel {
        couplings,
        projection_distance,
        violations,
    })
}

pub fn load_model_file(path: &Path) -> Result<LoadedModel, ModelError> {
    let text = std::fs::read_to_string(path).map_err(|e| ModelError::File(format!("{}: {e}", path.display())))?;
    parse_model_file(&text)
}
