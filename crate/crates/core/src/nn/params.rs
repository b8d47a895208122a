use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub struct ParamRef<'a> {
    pub name: &'a str,
    pub rows: usize,
    pub cols: usize,
    pub value: &'a [f64],
    pub grad: &'a [f64],
}

pub struct ParamMut<'a> {
    pub name: &'a str,
    pub rows: usize,
    pub cols: usize,
    pub value: &'a mut [f64],
    pub grad: &'a mut [f64],
}

/// An ordered collection of named parameter arrays with matching gradient
/// accumulators. Visitation order is part of the contract: the optimizer
/// keys its moment arrays on it.
pub trait ParamStore {
    fn visit(&self, f: &mut dyn FnMut(ParamRef<'_>));

    fn visit_mut(&mut self, f: &mut dyn FnMut(ParamMut<'_>));

    fn zero_grad(&mut self) {
        self.visit_mut(&mut |p| p.grad.fill(0.0));
    }

    fn parameter_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |p| n += p.value.len());
        n
    }

    fn snapshot(&self) -> Snapshot {
        let mut entries = Vec::new();
        self.visit(&mut |p| {
            entries.push(SnapshotEntry {
                name: p.name.to_string(),
                rows: p.rows,
                cols: p.cols,
                values: p.value.to_vec(),
            })
        });
        Snapshot { entries }
    }

    /// Copies values from `snapshot`, matching parameters by name and shape.
    /// Entries not owned by this store are ignored.
    fn restore(&mut self, snapshot: &Snapshot) -> Result<()> {
        let mut failure = None;
        self.visit_mut(&mut |p| {
            if failure.is_some() {
                return;
            }
            match snapshot.get(p.name) {
                None => failure = Some(Error::State(format!("snapshot lacks parameter {}", p.name))),
                Some(e) if e.rows != p.rows || e.cols != p.cols => {
                    failure = Some(Error::shape("snapshot entry", p.rows * p.cols, e.rows * e.cols))
                }
                Some(e) => p.value.copy_from_slice(&e.values),
            }
        });
        failure.map_or(Ok(()), Err)
    }

    fn gradient_norm(&self) -> f64 {
        let mut s = 0.0;
        self.visit(&mut |p| s += p.grad.iter().map(|g| g * g).sum::<f64>());
        crate::math::sqrt(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SnapshotEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    /// Row-major.
    pub values: Vec<f64>,
}

/// A flat, ordered listing of named parameter arrays.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Snapshot {
    pub entries: Vec<SnapshotEntry>,
}

impl Snapshot {
    pub fn get(&self, name: &str) -> Option<&SnapshotEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn push(&mut self, entry: SnapshotEntry) {
        self.entries.push(entry);
    }

    /// Checks that names are unique and every value array matches its shape.
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if !seen.insert(e.name.as_str()) {
                return Err(Error::State(format!("duplicate parameter name {}", e.name)));
            }
            if e.values.len() != e.rows * e.cols {
                return Err(Error::shape("snapshot entry", e.rows * e.cols, e.values.len()));
            }
        }
        Ok(())
    }
}

/// Parameter stores chained in order.
impl<A: ParamStore, B: ParamStore> ParamStore for (A, B) {
    fn visit(&self, f: &mut dyn FnMut(ParamRef<'_>)) {
        self.0.visit(f);
        self.1.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(ParamMut<'_>)) {
        self.0.visit_mut(f);
        self.1.visit_mut(f);
    }
}

impl<P: ParamStore + ?Sized> ParamStore for &mut P {
    fn visit(&self, f: &mut dyn FnMut(ParamRef<'_>)) {
        (**self).visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(ParamMut<'_>)) {
        (**self).visit_mut(f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, DenseLayer};
    use alloc::vec;

    #[test]
    fn snapshot_restore_by_name() {
        let mut a = DenseLayer::zeros("x", 2, 2, Activation::Tanh);
        a.visit_mut(&mut |p| p.value.fill(1.5));
        let snap = a.snapshot();
        snap.validate().unwrap();
        assert_eq!(snap.entries.len(), 2);
        let mut b = DenseLayer::zeros("x", 2, 2, Activation::Tanh);
        b.restore(&snap).unwrap();
        assert_eq!(b.weight(), &[1.5; 4]);
        let mut c = DenseLayer::zeros("y", 2, 2, Activation::Tanh);
        assert!(c.restore(&snap).is_err());
    }

    #[test]
    fn duplicate_names_rejected() {
        let pair = (
            DenseLayer::zeros("same", 1, 1, Activation::Identity),
            DenseLayer::zeros("same", 1, 1, Activation::Identity),
        );
        assert!(pair.snapshot().validate().is_err());
        let mut snap = Snapshot::default();
        snap.push(SnapshotEntry {
            name: "bad".into(),
            rows: 2,
            cols: 2,
            values: vec![0.0],
        });
        assert!(snap.validate().is_err());
    }
}
