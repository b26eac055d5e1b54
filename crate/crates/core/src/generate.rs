//! Auto-regressive generation on top of the online engines.
//!
//! From scratch, each output is mapped back to the next input. From a
//! prompt `p` of length `L`, the target sequence is
//!
//! ```text
//! y_t = sum_{j=1}^{t-1} x_{t-j} phi_j + sum_{j=t}^{t+L-1} p_{t+L-j} phi_j,   x_t = map(y_t)
//! ```
//!
//! The prompt term does not depend on generated tokens, so one FFT
//! convolution precomputes it for all `K` generated positions (the prefill
//! cache) and an online engine of horizon `K` supplies the first term.

use crate::conv::FftConvolver;
use crate::engine::{CostMeter, EngineKind};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::signal::{Filter, Signal};

/// Maps a prediction to the next input sample.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum TokenMap {
    #[default]
    Identity,
    /// Clamp to `[-bound, bound]`.
    Clamp(f64),
    /// Round to the nearest multiple of `step`.
    Quantize(f64),
}

impl TokenMap {
    #[inline]
    pub fn apply<T: Scalar>(&self, y: T) -> T {
        match *self {
            TokenMap::Identity => y,
            TokenMap::Clamp(bound) => {
                let b = T::from_f64_lossy(bound);
                y.max(-b).min(b)
            }
            TokenMap::Quantize(step) => {
                let s = T::from_f64_lossy(step);
                (y / s).round() * s
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            TokenMap::Clamp(b) if !(b.is_finite() && b > 0.0) => {
                Err(Error::Config(format!("clamp bound must be positive, got {b}")))
            }
            TokenMap::Quantize(s) if !(s.is_finite() && s > 0.0) => {
                Err(Error::Config(format!("quantize step must be positive, got {s}")))
            }
            _ => Ok(()),
        }
    }
}

impl std::str::FromStr for TokenMap {
    type Err = Error;

    /// `identity`, `clamp:<bound>` or `quantize:<step>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown token map `{s}`"));
        let map = match s.split_once(':') {
            None if s == "identity" => TokenMap::Identity,
            Some(("clamp", v)) => TokenMap::Clamp(v.parse().map_err(|_| bad())?),
            Some(("quantize", v)) => TokenMap::Quantize(v.parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        };
        map.validate()?;
        Ok(map)
    }
}

/// A prompt `p_1 .. p_L`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Prompt<T = f64> {
    tokens: Signal<T>,
}

impl<T: Scalar> Prompt<T> {
    pub fn new(tokens: Vec<T>) -> Result<Self> {
        Ok(Self { tokens: Signal::new(tokens)? })
    }

    pub fn tokens(&self) -> &Signal<T> {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl<T> From<Signal<T>> for Prompt<T> {
    fn from(tokens: Signal<T>) -> Self {
        Self { tokens }
    }
}

/// Which slice of `p * phi` the prefill cache holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PrefillAlignment {
    /// Slot `s` holds full-convolution position `L + s - 1`: the prompt's
    /// contribution to generated token `s`. This is what generation uses.
    #[default]
    ToGeneratedToken,
    /// Slot `s` holds position `L + s`, i.e. `FutureFill(p, phi)`. One
    /// position later than generation needs; kept for comparison only.
    FutureFillSlice,
}

/// Prompt contributions to the `K` generated positions.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefillCache<T = f64> {
    contributions: Vec<T>,
    transforms: u64,
}

impl<T: Scalar> PrefillCache<T> {
    /// Slot `s` (1-based) at index `s - 1`.
    pub fn slots(&self) -> &[T] {
        &self.contributions
    }

    pub fn len(&self) -> usize {
        self.contributions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contributions.is_empty()
    }

    /// Fast convolutions spent building the cache (one, or zero when
    /// the prompt or the budget is empty).
    pub fn transforms(&self) -> u64 {
        self.transforms
    }
}

/// Builds the `K`-slot prefill cache `C_s = sum_{j=s}^{s+L-1} p_{s+L-j} phi_j`.
pub fn prefill<T: Scalar>(prompt: &Prompt<T>, filter: &Filter<T>, budget: usize) -> PrefillCache<T> {
    prefill_aligned(prompt, filter, budget, PrefillAlignment::ToGeneratedToken)
}

pub fn prefill_aligned<T: Scalar>(
    prompt: &Prompt<T>,
    filter: &Filter<T>,
    budget: usize,
    alignment: PrefillAlignment,
) -> PrefillCache<T> {
    let l = prompt.len();
    let mut contributions = vec![T::zero(); budget];
    if l == 0 || budget == 0 {
        return PrefillCache { contributions, transforms: 0 };
    }
    // 0-based index of full-convolution position L (or L + 1)
    let start = match alignment {
        PrefillAlignment::ToGeneratedToken => l - 1,
        PrefillAlignment::FutureFillSlice => l,
    };
    let phi = filter.head(start + budget);
    let mut conv = FftConvolver::new();
    conv.window_into(prompt.tokens(), phi, start, &mut contributions);
    PrefillCache { contributions, transforms: conv.convolutions() }
}

/// Outputs of a generation run and what it cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Generation<T = f64> {
    pub outputs: Signal<T>,
    /// Counters of the decode engine.
    pub meter: CostMeter,
    /// Fast convolutions spent on the prompt (zero from scratch).
    pub prefill_transforms: u64,
    /// Peak persistent auxiliary scalars during decode: prefill cache plus
    /// engine cache.
    pub peak_aux_elems: u64,
}

/// Generates `len` outputs from a single seed token.
///
/// `u_1 = seed`, `y_t = engine.push(u_t)`, `u_{t+1} = map(y_t)`.
pub fn generate_scratch<T: Scalar>(
    filter: &Filter<T>,
    len: usize,
    kind: EngineKind,
    seed: T,
    map: TokenMap,
) -> Result<Generation<T>> {
    if len == 0 {
        return Err(Error::Config("generation length must be positive".into()));
    }
    if len > filter.context_length() {
        return Err(Error::HorizonTooLong {
            requested: len,
            context_length: filter.context_length(),
        });
    }
    if !seed.is_finite() {
        return Err(Error::NonFinite { index: 0 });
    }
    map.validate()?;
    let mut engine = kind.build(filter, len)?;
    let mut outputs = Vec::with_capacity(len);
    let mut u = seed;
    for _ in 0..len {
        let y = engine.push(u);
        outputs.push(y);
        u = map.apply(y);
    }
    let meter = *engine.meter();
    Ok(Generation {
        outputs: Signal::from_vec_unchecked(outputs),
        meter,
        prefill_transforms: 0,
        peak_aux_elems: meter.peak_aux_elems(),
    })
}

/// Generates `budget` tokens after `prompt`: one prefill convolution, then
/// an online engine of horizon `budget` over the generated tokens.
///
/// The engine only needs taps `phi_1 .. phi_budget`, so it receives the
/// filter truncated to that length.
pub fn generate_prompted<T: Scalar>(
    prompt: &Prompt<T>,
    filter: &Filter<T>,
    budget: usize,
    kind: EngineKind,
    map: TokenMap,
) -> Result<Generation<T>> {
    if budget == 0 {
        return Err(Error::Config("generation budget must be positive".into()));
    }
    map.validate()?;
    let cache = prefill(prompt, filter, budget);
    let mut engine = kind.build(&filter.truncated(budget)?, budget)?;
    let mut outputs = Vec::with_capacity(budget);
    let mut carried = T::zero();
    for &c in cache.slots() {
        let y = c + carried;
        outputs.push(y);
        carried = engine.push(map.apply(y));
    }
    let meter = *engine.meter();
    Ok(Generation {
        outputs: Signal::from_vec_unchecked(outputs),
        meter,
        prefill_transforms: cache.transforms(),
        peak_aux_elems: cache.len() as u64 + meter.peak_aux_elems(),
    })
}

/// Direct evaluation of the prompted recurrence in `O(K (K + L))`.
pub fn oracle_prompted<T: Scalar>(
    prompt: &Prompt<T>,
    filter: &Filter<T>,
    budget: usize,
    map: TokenMap,
) -> Vec<T> {
    let p = prompt.tokens();
    let l = p.len() as isize;
    let mut fed: Vec<T> = Vec::with_capacity(budget);
    let mut out = Vec::with_capacity(budget);
    for t in 1..=budget as isize {
        let mut y = T::zero();
        for j in 1..t {
            y += fed[(t - j - 1) as usize] * filter.tap(j);
        }
        for j in t..t + l {
            y += p.at(t + l - j) * filter.tap(j);
        }
        out.push(y);
        fed.push(map.apply(y));
    }
    out
}
