use std::sync::atomic::{AtomicU64, Ordering};

use crate::lorentz::Curvature;
use crate::matrix::Matrix;

/// How a parameter is updated by the optimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamKind {
    Euclidean,
    /// Every row is a point on the hyperboloid with this curvature.
    Manifold(Curvature),
}

#[derive(Debug, Clone)]
pub struct Param {
    pub name: String,
    pub value: Matrix,
    pub grad: Matrix,
    pub kind: ParamKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId {
    store: u64,
    index: usize,
}

impl ParamId {
    pub fn index(self) -> usize {
        self.index
    }
}

static NEXT_STORE_TAG: AtomicU64 = AtomicU64::new(0);

/// Owns the trainable values of a model.
///
/// Every store carries a tag shared by its ids, so one graph can pull
/// parameters from several stores without mixing them up. Clones keep the
/// tag.
#[derive(Debug, Clone)]
pub struct ParamStore {
    tag: u64,
    params: Vec<Param>,
}

impl Default for ParamStore {
    fn default() -> Self {
        Self { tag: NEXT_STORE_TAG.fetch_add(1, Ordering::Relaxed), params: Vec::new() }
    }
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Whether `id` was issued by this store (or a clone of it).
    pub fn owns(&self, id: ParamId) -> bool {
        id.store == self.tag && id.index < self.params.len()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Matrix, kind: ParamKind) -> ParamId {
        let grad = Matrix::zeros(value.rows(), value.cols());
        self.params.push(Param { name: name.into(), value, grad, kind });
        ParamId { store: self.tag, index: self.params.len() - 1 }
    }

    pub fn get(&self, id: ParamId) -> &Param {
        debug_assert_eq!(id.store, self.tag, "parameter id from another store");
        &self.params[id.index]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Param {
        debug_assert_eq!(id.store, self.tag, "parameter id from another store");
        &mut self.params[id.index]
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        let tag = self.tag;
        (0..self.params.len()).map(move |index| ParamId { store: tag, index })
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param> {
        self.params.iter_mut()
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(|index| ParamId { store: self.tag, index })
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.data_mut().iter_mut().for_each(|g| *g = 0.0);
        }
    }

    /// Total number of scalar values.
    pub fn numel(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }
}
