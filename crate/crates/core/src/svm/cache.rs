//! Kernel rows for one binary training problem.
//!
//! Small problems keep every computed row (a lazily filled Gram matrix);
//! large ones keep a bounded number of rows with least-recently-used
//! eviction.

use std::collections::HashMap;
use std::sync::Arc;

use crate::svm::kernel::KernelParams;
use crate::types::FeatureVector;

pub(crate) struct KernelCache<'a> {
    x: &'a [FeatureVector],
    kernel: KernelParams,
    store: Store,
}

enum Store {
    Full(Vec<Option<Arc<[f64]>>>),
    Lru {
        capacity: usize,
        rows: HashMap<usize, (Arc<[f64]>, u64)>,
        tick: u64,
    },
}

impl<'a> KernelCache<'a> {
    pub fn new(x: &'a [FeatureVector], kernel: KernelParams, full_limit: usize, capacity: usize) -> Self {
        let store = if x.len() <= full_limit {
            Store::Full(vec![None; x.len()])
        } else {
            Store::Lru {
                capacity: capacity.max(2),
                rows: HashMap::new(),
                tick: 0,
            }
        };
        KernelCache { x, kernel, store }
    }

    #[cfg(test)]
    pub fn is_full(&self) -> bool {
        matches!(self.store, Store::Full(_))
    }

    fn compute(&self, i: usize) -> Arc<[f64]> {
        let xi = &self.x[i];
        self.x.iter().map(|xj| self.kernel.eval(xi, xj)).collect()
    }

    pub fn row(&mut self, i: usize) -> Arc<[f64]> {
        match &self.store {
            Store::Full(rows) => {
                if let Some(r) = &rows[i] {
                    return Arc::clone(r);
                }
            }
            Store::Lru { rows, .. } => {
                if rows.contains_key(&i) {
                    let Store::Lru { rows, tick, .. } = &mut self.store else { unreachable!() };
                    *tick += 1;
                    let entry = rows.get_mut(&i).expect("present");
                    entry.1 = *tick;
                    return Arc::clone(&entry.0);
                }
            }
        }
        let row = self.compute(i);
        match &mut self.store {
            Store::Full(rows) => rows[i] = Some(Arc::clone(&row)),
            Store::Lru {
                capacity,
                rows,
                tick,
            } => {
                if rows.len() >= *capacity {
                    let oldest = rows
                        .iter()
                        .min_by_key(|(_, (_, t))| *t)
                        .map(|(k, _)| *k)
                        .expect("non-empty");
                    rows.remove(&oldest);
                }
                *tick += 1;
                rows.insert(i, (Arc::clone(&row), *tick));
            }
        }
        row
    }
}
