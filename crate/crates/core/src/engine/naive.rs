use super::{CostMeter, OnlineConvEngine};
use crate::scalar::{dot_reversed, Scalar};
use crate::signal::Filter;

/// Direct inner product at every step: `t` multiply-adds at step `t`,
/// `L(L+1)/2` over a full run, no cache.
#[derive(Debug, Clone)]
pub struct NaiveEngine<T: Scalar> {
    taps: Vec<T>,
    horizon: usize,
    inputs: Vec<T>,
    meter: CostMeter,
}

impl<T: Scalar> NaiveEngine<T> {
    pub fn new(filter: &Filter<T>, horizon: usize) -> Self {
        Self {
            taps: filter.head(horizon).to_vec(),
            horizon,
            inputs: Vec::with_capacity(horizon),
            meter: CostMeter::default(),
        }
    }
}

impl<T: Scalar> OnlineConvEngine<T> for NaiveEngine<T> {
    fn push(&mut self, sample: T) -> T {
        assert!(self.inputs.len() < self.horizon, "push beyond horizon {}", self.horizon);
        self.inputs.push(sample);
        let t = self.inputs.len();
        self.meter.add_macs(t as u64);
        let m = t.min(self.taps.len());
        dot_reversed(&self.inputs[t - m..], &self.taps[..m])
    }

    fn reset(&mut self) {
        self.inputs.clear();
        self.meter = CostMeter::default();
    }

    fn meter(&self) -> &CostMeter {
        &self.meter
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn steps(&self) -> usize {
        self.inputs.len()
    }

    fn name(&self) -> &'static str {
        "naive"
    }
}
