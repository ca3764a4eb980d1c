//! Block-sparse operators between K-isotypic components of a model space.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::liealg::KType;
use crate::model::{Basis, ModelVector};

/// Operator with blocks τ_from → τ_to, each a dim τ_to × dim τ_from matrix.
#[derive(Clone, Debug)]
pub struct KTypeOperator {
    pub basis: Arc<Basis>,
    pub blocks: BTreeMap<(KType, KType), DMatrix<Complex64>>,
}

impl KTypeOperator {
    pub fn zero(basis: &Arc<Basis>) -> Self {
        KTypeOperator {
            basis: basis.clone(),
            blocks: BTreeMap::new(),
        }
    }

    pub fn identity(basis: &Arc<Basis>) -> Self {
        let mut op = KTypeOperator::zero(basis);
        for b in &basis.blocks {
            op.blocks
                .insert((b.tau, b.tau), DMatrix::identity(b.dim, b.dim));
        }
        op
    }

    pub fn insert(&mut self, from: KType, to: KType, m: DMatrix<Complex64>) -> Result<()> {
        let bf = self
            .basis
            .block(from)
            .ok_or_else(|| Error::NotContained(from.to_string()))?;
        let bt = self
            .basis
            .block(to)
            .ok_or_else(|| Error::NotContained(to.to_string()))?;
        if m.shape() != (bt.dim, bf.dim) {
            return Err(Error::Degenerate(format!(
                "block {from} → {to} has shape {:?}",
                m.shape()
            )));
        }
        self.blocks.insert((from, to), m);
        Ok(())
    }

    pub fn block(&self, from: KType, to: KType) -> Option<&DMatrix<Complex64>> {
        self.blocks.get(&(from, to))
    }

    pub fn apply(&self, v: &ModelVector) -> Result<ModelVector> {
        if v.basis.label != self.basis.label || v.basis.cutoff != self.basis.cutoff {
            return Err(Error::LabelMismatch);
        }
        let mut out = ModelVector::zeros(&self.basis);
        for ((from, to), m) in &self.blocks {
            let bf = self.basis.block(*from).expect("validated on insert");
            let bt = self.basis.block(*to).expect("validated on insert");
            let x = nalgebra::DVector::from_column_slice(&v.coeffs[bf.offset..bf.offset + bf.dim]);
            let y = m * x;
            for (i, z) in y.iter().enumerate() {
                out.coeffs[bt.offset + i] += z;
            }
        }
        Ok(out)
    }

    pub fn adjoint(&self) -> KTypeOperator {
        let blocks = self
            .blocks
            .iter()
            .map(|((f, t), m)| ((*t, *f), m.adjoint()))
            .collect();
        KTypeOperator {
            basis: self.basis.clone(),
            blocks,
        }
    }

    /// self ∘ other.
    pub fn compose(&self, other: &KTypeOperator) -> Result<KTypeOperator> {
        if self.basis.label != other.basis.label || self.basis.cutoff != other.basis.cutoff {
            return Err(Error::LabelMismatch);
        }
        let mut out = KTypeOperator::zero(&self.basis);
        for ((f, mid), b) in &other.blocks {
            for ((mid2, t), a) in self.blocks.range((*mid, KType::new(i64::MIN, i64::MIN))..) {
                if mid2 != mid {
                    break;
                }
                let prod = a * b;
                out.blocks
                    .entry((*f, *t))
                    .and_modify(|m| *m += &prod)
                    .or_insert(prod);
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.basis.dim;
        let mut out = DMatrix::zeros(n, n);
        for ((f, t), m) in &self.blocks {
            let bf = self.basis.block(*f).expect("validated on insert");
            let bt = self.basis.block(*t).expect("validated on insert");
            out.view_mut((bt.offset, bf.offset), (bt.dim, bf.dim))
                .copy_from(m);
        }
        out
    }

    /// Largest singular value.
    pub fn op_norm(&self) -> f64 {
        if self.blocks.is_empty() {
            return 0.0;
        }
        self.to_dense().singular_values().max()
    }

    /// Largest singular value of any block whose source and target differ.
    pub fn off_diagonal_norm(&self) -> f64 {
        self.blocks
            .iter()
            .filter(|((f, t), _)| f != t)
            .map(|(_, m)| m.clone().singular_values().max())
            .fold(0.0, f64::max)
    }
}
