/// Deterministic cost counters.
///
/// Counters depend only on the engine configuration and the number of
/// pushes, never on sample values, and never decrease until reset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct CostMeter {
    mac_count: u64,
    ff_cost: u64,
    cache_rebuilds: u64,
    peak_aux_elems: u64,
    transforms: u64,
    peak_scratch_elems: u64,
}

impl CostMeter {
    /// Scalar multiply-adds spent in direct inner products.
    pub fn mac_count(&self) -> u64 {
        self.mac_count
    }

    /// Cost charged for FutureFill computations.
    ///
    /// The continuous engine charges `max(1, k) * 2^k` per FutureFill of
    /// block size `2^k`; other paths charge `n * log2(n)` per transform of
    /// length `n`.
    pub fn ff_cost(&self) -> u64 {
        self.ff_cost
    }

    /// Completed epoched cache rebuilds.
    pub fn cache_rebuilds(&self) -> u64 {
        self.cache_rebuilds
    }

    /// Peak number of scalars held in caches that persist between steps,
    /// beyond the stored inputs and filter.
    pub fn peak_aux_elems(&self) -> u64 {
        self.peak_aux_elems
    }

    /// Number of fast (FFT) convolutions executed.
    pub fn transforms(&self) -> u64 {
        self.transforms
    }

    /// Peak transient transform workspace, in scalars, during a single step.
    pub fn peak_scratch_elems(&self) -> u64 {
        self.peak_scratch_elems
    }

    /// `mac_count + ff_cost`.
    pub fn total_cost(&self) -> u64 {
        self.mac_count + self.ff_cost
    }

    pub(crate) fn add_macs(&mut self, n: u64) {
        self.mac_count += n;
    }

    pub(crate) fn add_ff_cost(&mut self, n: u64) {
        self.ff_cost += n;
    }

    pub(crate) fn add_rebuild(&mut self) {
        self.cache_rebuilds += 1;
    }

    pub(crate) fn observe_aux(&mut self, elems: u64) {
        self.peak_aux_elems = self.peak_aux_elems.max(elems);
    }

    /// Records one fast convolution of transform length `n` and charges
    /// `n log2 n` when `charge` is set.
    pub(crate) fn record_transform(&mut self, n: usize, charge: bool) {
        if n == 0 {
            return;
        }
        self.transforms += 1;
        if charge {
            self.ff_cost += transform_cost(n);
        }
        // two real time buffers plus two half spectra of complex bins
        let scratch = 2 * n + 4 * (n / 2 + 1);
        self.peak_scratch_elems = self.peak_scratch_elems.max(scratch as u64);
    }

    /// Sums counters of independent engines, e.g. one per channel.
    pub fn merged(&self, other: &CostMeter) -> CostMeter {
        CostMeter {
            mac_count: self.mac_count + other.mac_count,
            ff_cost: self.ff_cost + other.ff_cost,
            cache_rebuilds: self.cache_rebuilds + other.cache_rebuilds,
            peak_aux_elems: self.peak_aux_elems + other.peak_aux_elems,
            transforms: self.transforms + other.transforms,
            peak_scratch_elems: self.peak_scratch_elems.max(other.peak_scratch_elems),
        }
    }
}

/// `n * log2(n)` for a power-of-two transform length.
pub(crate) fn transform_cost(n: usize) -> u64 {
    debug_assert!(n.is_power_of_two());
    n as u64 * n.trailing_zeros() as u64
}
