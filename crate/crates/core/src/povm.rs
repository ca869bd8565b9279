use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::{numeric_rank, RANK_TOL};
use crate::matrix::ComplexMatrix;

/// Measurement operators `Π_i` together with their numeric ranks `t_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    dim: usize,
    operators: Vec<ComplexMatrix>,
    ranks: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct PovmWire {
    dim: usize,
    operators: Vec<ComplexMatrix>,
}

impl Povm {
    /// Wraps square operators of a common dimension. PSD-ness and
    /// completeness are checked by [`crate::vnm::check_povm`], not here.
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = operators
            .first()
            .ok_or_else(|| Error::Shape("empty measurement".into()))?
            .rows();
        for op in &operators {
            op.ensure_square()?;
            if op.rows() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    found: op.rows(),
                });
            }
        }
        let ranks = operators.iter().map(|op| numeric_rank(op, RANK_TOL)).collect();
        Ok(Self {
            dim,
            operators,
            ranks,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    /// `Σ Π_i`.
    pub fn total(&self) -> ComplexMatrix {
        self.operators
            .iter()
            .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, op| &acc + op)
    }

    /// `‖Σ Π_i - I‖_max`.
    pub fn completeness_residual(&self) -> f64 {
        self.total().max_abs_diff(&ComplexMatrix::identity(self.dim))
    }
}

impl Serialize for Povm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PovmWire {
            dim: self.dim,
            operators: self.operators.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Povm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = PovmWire::deserialize(d)?;
        let povm = Povm::new(wire.operators).map_err(serde::de::Error::custom)?;
        if povm.dim != wire.dim {
            return Err(serde::de::Error::custom(format!(
                "dim {} does not match {}x{} operators",
                wire.dim, povm.dim, povm.dim
            )));
        }
        Ok(povm)
    }
}
