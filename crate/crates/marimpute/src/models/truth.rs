//! Oracle "model" that draws from the mechanism's analytic conditional.
//!
//! Nothing is estimated: this is the noiseless reference the data-driven
//! methods are compared against.

use std::sync::Arc;

use rand_chacha::ChaCha12Rng;

use super::ConditionalModel;
use crate::error::Result;
use crate::mechanisms::MechanismSpec;

pub struct TruthModel {
    spec: Arc<MechanismSpec>,
    column: usize,
}

impl TruthModel {
    pub fn new(spec: Arc<MechanismSpec>, column: usize) -> Result<Self> {
        spec.oracle(column)?; // fail fast if the law is not available
        Ok(TruthModel { spec, column })
    }

    /// Reinserts the target position so the oracle sees a full row.
    fn full_row(&self, x: &[f64]) -> Vec<f64> {
        let mut row = Vec::with_capacity(x.len() + 1);
        row.extend_from_slice(&x[..self.column]);
        row.push(0.0);
        row.extend_from_slice(&x[self.column..]);
        row
    }
}

impl ConditionalModel for TruthModel {
    fn sample(&self, x: &[f64], rng: &mut ChaCha12Rng) -> f64 {
        let row = self.full_row(x);
        self.spec.oracle(self.column).expect("checked at construction").sample(&row, rng)
    }

    fn predict(&self, x: &[f64]) -> f64 {
        let row = self.full_row(x);
        self.spec.oracle(self.column).expect("checked at construction").mean(&row)
    }
}
