use super::{k_of_t, CostMeter, OnlineConvEngine};
use crate::conv::FftConvolver;
use crate::scalar::Scalar;
use crate::signal::Filter;

/// One cache accumulation: at step `t`, slots `first_slot .. first_slot + count`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CacheUpdate {
    pub step: usize,
    pub first_slot: usize,
    pub count: usize,
}

/// Continuous FutureFill: quasilinear online convolution.
///
/// At step `t` the output is `C_t + u_t phi_1`. Then, with `k = k(t)`, the
/// contribution of the last `2^k` inputs to positions `t+1 ..= t+2^k` is
/// computed as a FutureFill against `phi_{1:2^(k+1)}` and accumulated into
/// the cache. Writes past the horizon are dropped, and a FutureFill whose
/// whole range lies past it is skipped and not charged.
pub struct ContinuousEngine<T: Scalar> {
    taps: Vec<T>,
    horizon: usize,
    max_level: u32,
    inputs: Vec<T>,
    cache: Vec<T>,
    block: Vec<T>,
    conv: FftConvolver<T>,
    meter: CostMeter,
    late_writes: u64,
    trace: Option<Vec<CacheUpdate>>,
}

impl<T: Scalar> ContinuousEngine<T> {
    pub fn new(filter: &Filter<T>, horizon: usize) -> Self {
        assert!(horizon >= 1, "horizon must be positive");
        let mut meter = CostMeter::default();
        meter.observe_aux(horizon as u64);
        Self {
            taps: filter.head(horizon).to_vec(),
            horizon,
            max_level: horizon.ilog2(),
            inputs: Vec::with_capacity(horizon),
            cache: vec![T::zero(); horizon],
            block: Vec::new(),
            conv: FftConvolver::new(),
            meter,
            late_writes: 0,
            trace: None,
        }
    }

    /// Records every cache accumulation, for checking the update schedule.
    pub fn with_update_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn update_trace(&self) -> Option<&[CacheUpdate]> {
        self.trace.as_deref()
    }

    /// Accumulations into a slot that had already been read. Always zero:
    /// slot `t` is final once step `t` has consumed it.
    pub fn late_writes(&self) -> u64 {
        self.late_writes
    }

    /// `b = floor(log2 L)`, the cap on `k(t)`.
    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    pub fn cache(&self) -> &[T] {
        &self.cache
    }
}

impl<T: Scalar> OnlineConvEngine<T> for ContinuousEngine<T> {
    fn push(&mut self, sample: T) -> T {
        assert!(self.inputs.len() < self.horizon, "push beyond horizon {}", self.horizon);
        self.inputs.push(sample);
        let t = self.inputs.len();
        self.meter.add_macs(1);
        let phi1 = self.taps.first().copied().unwrap_or_else(T::zero);
        let y = self.cache[t - 1] + sample * phi1;

        let k = k_of_t(t, self.max_level);
        let size = 1usize << k;
        let count = size.min(self.horizon - t);
        if count == 0 {
            return y;
        }
        self.meter.add_ff_cost(u64::from(k.max(1)) << k);

        let phi = &self.taps[..(2 * size).min(self.taps.len())];
        self.block.clear();
        self.block.resize(count, T::zero());
        let used = self.conv.window_into(&self.inputs[t - size..], phi, size, &mut self.block);
        self.meter.record_transform(used, false);

        let first_slot = t + 1;
        // slots 1..=t have been consumed by outputs 1..=t
        self.late_writes += (first_slot..first_slot + count).filter(|&s| s <= t).count() as u64;
        for (c, &f) in self.cache[first_slot - 1..first_slot - 1 + count].iter_mut().zip(&self.block) {
            *c += f;
        }
        if let Some(trace) = self.trace.as_mut() {
            trace.push(CacheUpdate { step: t, first_slot, count });
        }
        y
    }

    fn reset(&mut self) {
        self.inputs.clear();
        self.cache.fill(T::zero());
        self.meter = CostMeter::default();
        self.meter.observe_aux(self.horizon as u64);
        self.late_writes = 0;
        if let Some(trace) = self.trace.as_mut() {
            trace.clear();
        }
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
        "continuous"
    }
}
