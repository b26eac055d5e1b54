//! Timed generation runs.
//!
//! Every run (warmup or measured) of engine `e` at length `L` draws its
//! filters, seed token and prompt from its own ChaCha8 stream: the generator
//! is `ChaCha8Rng::seed_from_u64(seed)` switched to stream
//! `stream_id(e, L, run)`, where `run` counts warmups first. Draws happen in
//! order channel by channel: filter taps (random source only), then the
//! seed token or prompt tokens, all uniform on `[-1, 1)`.

use std::collections::HashMap;
use std::io::Write;
use std::time::Instant;

use futurefill::generate::{generate_prompted, generate_scratch, Generation, Prompt, TokenMap};
use futurefill::spectral::{SpectralFilterBank, EIGENSOLVE_CAP};
use futurefill::{CostMeter, EngineKind, Filter, Signal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::args::{BenchArgs, FilterSource, Mode};
use crate::error::{CliError, CliResult};
use crate::files::Sink;

/// One measured trial. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub engine: String,
    pub mode: String,
    #[serde(rename = "L_gen")]
    pub l_gen: usize,
    #[serde(rename = "L_prompt")]
    pub l_prompt: usize,
    #[serde(rename = "K_epoch")]
    pub k_epoch: usize,
    pub channels: usize,
    pub trial: usize,
    pub wall_ns: u64,
    pub mac_count: u64,
    pub ff_cost: u64,
    pub cache_rebuilds: u64,
    pub peak_aux_elems: u64,
}

impl BenchRecord {
    pub fn total_cost(&self) -> u64 {
        self.mac_count + self.ff_cost
    }
}

/// Stream index of one run: engine code in the top byte, then `L`, then the
/// run counter in the low 16 bits.
pub fn stream_id(kind: EngineKind, len: usize, run: usize) -> u64 {
    let code: u64 = match kind {
        EngineKind::Naive => 1,
        EngineKind::Epoched { .. } => 2,
        EngineKind::Continuous => 3,
    };
    (code << 56) | ((len as u64 & 0xff_ffff_ffff) << 16) | (run as u64 & 0xffff)
}

pub fn run_rng(seed: u64, kind: EngineKind, len: usize, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(kind, len, run));
    rng
}

/// Benchmark plan after validation.
#[derive(Debug, Clone)]
pub struct BenchPlan {
    pub engines: Vec<EngineKind>,
    pub lengths: Vec<usize>,
    pub mode: Mode,
    pub prompt_len: usize,
    pub channels: usize,
    pub trials: usize,
    pub warmup: usize,
    pub filter: FilterSource,
    pub token_map: TokenMap,
    pub parallel_channels: bool,
    pub seed: u64,
}

impl BenchPlan {
    pub fn from_args(args: &BenchArgs, seed: u64) -> CliResult<Self> {
        let mut engines = args.engines.0.clone();
        if let Some(k) = args.epoch {
            if k == 0 {
                return Err(CliError::Usage("--epoch must be positive".into()));
            }
            for e in &mut engines {
                if let EngineKind::Epoched { epoch } = e {
                    *epoch = Some(k);
                }
            }
        }
        let plan = BenchPlan {
            engines,
            lengths: args.lengths.0.clone(),
            mode: args.mode,
            prompt_len: if args.mode == Mode::Prompt { args.prompt_len } else { 0 },
            channels: args.channels,
            trials: args.trials,
            warmup: args.warmup,
            filter: args.filter,
            token_map: args.token_map,
            parallel_channels: args.parallel_channels,
            seed,
        };
        plan.validate()?;
        Ok(plan)
    }

    fn filter_len(&self, len: usize) -> usize {
        self.prompt_len + len
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.trials == 0 {
            return Err(CliError::Usage("--trials must be at least 1".into()));
        }
        if self.channels == 0 {
            return Err(CliError::Usage("--channels must be at least 1".into()));
        }
        if self.warmup + self.trials > 0xffff {
            return Err(CliError::Usage("too many runs per configuration".into()));
        }
        if self.lengths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Usage("lengths must be strictly ascending".into()));
        }
        self.token_map.validate()?;
        for &len in &self.lengths {
            for kind in &self.engines {
                if let Some(k) = kind.epoch_for(len) {
                    if k > len {
                        return Err(CliError::Usage(format!("epoch {k} exceeds generation length {len}")));
                    }
                }
            }
            match self.filter {
                FilterSource::Spectral => {
                    let fl = self.filter_len(len);
                    if fl > EIGENSOLVE_CAP {
                        return Err(CliError::Usage(format!(
                            "spectral filters of length {fl} exceed the eigensolve cap of {EIGENSOLVE_CAP}"
                        )));
                    }
                    if self.channels > fl {
                        return Err(CliError::Usage(format!("{} spectral filters need length >= channels", self.channels)));
                    }
                }
                FilterSource::File => {
                    return Err(CliError::Usage("bench draws filters itself; use random or spectral".into()))
                }
                FilterSource::Random => {}
            }
        }
        Ok(())
    }
}

struct ChannelInput {
    filter: Filter,
    seed_token: f64,
    prompt: Option<Prompt>,
}

fn draw_inputs(
    plan: &BenchPlan,
    kind: EngineKind,
    len: usize,
    run: usize,
    bank: Option<&SpectralFilterBank>,
) -> CliResult<Vec<ChannelInput>> {
    let mut rng = run_rng(plan.seed, kind, len, run);
    let fl = plan.filter_len(len);
    (0..plan.channels)
        .map(|c| {
            let taps: Vec<f64> = match bank {
                Some(b) => b.filter(c).to_vec(),
                None => (0..fl).map(|_| rng.random_range(-1.0..1.0)).collect(),
            };
            let filter = Filter::new(Signal::new(taps)?, fl)?;
            let (seed_token, prompt) = match plan.mode {
                Mode::Scratch => (rng.random_range(-1.0..1.0), None),
                Mode::Prompt => {
                    let p: Vec<f64> = (0..plan.prompt_len).map(|_| rng.random_range(-1.0..1.0)).collect();
                    (0.0, Some(Prompt::new(p)?))
                }
            };
            Ok(ChannelInput { filter, seed_token, prompt })
        })
        .collect()
}

fn generate_one(plan: &BenchPlan, kind: EngineKind, len: usize, input: &ChannelInput) -> futurefill::Result<Generation> {
    match &input.prompt {
        Some(p) => generate_prompted(p, &input.filter, len, kind, plan.token_map),
        None => generate_scratch(&input.filter, len, kind, input.seed_token, plan.token_map),
    }
}

/// Runs one trial and returns wall time, merged meters and summed peak cache.
fn timed_trial(plan: &BenchPlan, kind: EngineKind, len: usize, inputs: &[ChannelInput]) -> CliResult<(u64, CostMeter, u64)> {
    let start = Instant::now();
    let gens: Vec<futurefill::Result<Generation>> = if plan.parallel_channels && inputs.len() > 1 {
        std::thread::scope(|s| {
            let handles: Vec<_> = inputs.iter().map(|inp| s.spawn(move || generate_one(plan, kind, len, inp))).collect();
            handles.into_iter().map(|h| h.join().expect("channel thread panicked")).collect()
        })
    } else {
        inputs.iter().map(|inp| generate_one(plan, kind, len, inp)).collect()
    };
    let wall_ns = (start.elapsed().as_nanos() as u64).max(1);
    let mut meter = CostMeter::default();
    let mut peak = 0u64;
    for g in gens {
        let g = g?;
        meter = meter.merged(&g.meter);
        peak += g.peak_aux_elems;
    }
    Ok((wall_ns, meter, peak))
}

/// Runs the plan, calling `on_record` after each measured trial.
pub fn run_plan(plan: &BenchPlan, mut on_record: impl FnMut(&BenchRecord) -> CliResult<()>) -> CliResult<Vec<BenchRecord>> {
    let mut banks: HashMap<usize, SpectralFilterBank> = HashMap::new();
    let mut records = Vec::new();
    for &len in &plan.lengths {
        if plan.filter == FilterSource::Spectral {
            let fl = plan.filter_len(len);
            if let std::collections::hash_map::Entry::Vacant(slot) = banks.entry(fl) {
                slot.insert(SpectralFilterBank::hankel(fl, plan.channels)?);
            }
        }
        let bank = banks.get(&plan.filter_len(len));
        for &kind in &plan.engines {
            for run in 0..plan.warmup + plan.trials {
                let inputs = draw_inputs(plan, kind, len, run, bank)?;
                let (wall_ns, meter, peak) = timed_trial(plan, kind, len, &inputs)?;
                if run < plan.warmup {
                    continue;
                }
                let rec = BenchRecord {
                    engine: kind.name().to_string(),
                    mode: plan.mode.as_str().to_string(),
                    l_gen: len,
                    l_prompt: plan.prompt_len,
                    k_epoch: kind.epoch_for(len).unwrap_or(0),
                    channels: plan.channels,
                    trial: run - plan.warmup,
                    wall_ns,
                    mac_count: meter.mac_count(),
                    ff_cost: meter.ff_cost(),
                    cache_rebuilds: meter.cache_rebuilds(),
                    peak_aux_elems: peak,
                };
                on_record(&rec)?;
                records.push(rec);
            }
        }
    }
    Ok(records)
}

/// Per-configuration means over the measured trials, first one discarded
/// when more than one was run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub engine: String,
    #[serde(rename = "K_epoch")]
    pub k_epoch: usize,
    #[serde(rename = "L_gen")]
    pub l_gen: usize,
    #[serde(rename = "L_prompt")]
    pub l_prompt: usize,
    pub trials_averaged: usize,
    pub mean_wall_ns: f64,
    pub mean_total_cost: f64,
}

pub fn summarize(records: &[BenchRecord]) -> Vec<SummaryRow> {
    let mut order: Vec<(String, usize, usize, usize)> = Vec::new();
    let mut groups: HashMap<(String, usize, usize, usize), Vec<&BenchRecord>> = HashMap::new();
    for r in records {
        let key = (r.engine.clone(), r.k_epoch, r.l_gen, r.l_prompt);
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let mut rows = groups.remove(&key).unwrap_or_default();
            rows.sort_by_key(|r| r.trial);
            let kept: &[&BenchRecord] = if rows.len() > 1 { &rows[1..] } else { &rows };
            let n = kept.len() as f64;
            SummaryRow {
                engine: key.0,
                k_epoch: key.1,
                l_gen: key.2,
                l_prompt: key.3,
                trials_averaged: kept.len(),
                mean_wall_ns: kept.iter().map(|r| r.wall_ns as f64).sum::<f64>() / n,
                mean_total_cost: kept.iter().map(|r| r.total_cost() as f64).sum::<f64>() / n,
            }
        })
        .collect()
}

pub fn cmd_bench(args: &BenchArgs, seed: u64, sink: &Sink, json: bool) -> CliResult<()> {
    let plan = BenchPlan::from_args(args, seed)?;
    let mut buf = Vec::new();
    let records = {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut buf);
        let recs = run_plan(&plan, |r| {
            writer.serialize(r).map_err(|e| CliError::Usage(format!("csv encoding: {e}")))
        })?;
        if recs.is_empty() {
            writer
                .write_record([
                    "engine", "mode", "L_gen", "L_prompt", "K_epoch", "channels", "trial", "wall_ns", "mac_count",
                    "ff_cost", "cache_rebuilds", "peak_aux_elems",
                ])
                .map_err(|e| CliError::Usage(format!("csv encoding: {e}")))?;
        }
        writer.flush().map_err(|e| CliError::io("<csv buffer>", e))?;
        recs
    };
    sink.write_with(|w| w.write_all(&buf))?;

    let summary = summarize(&records);
    let mut report: Box<dyn Write> = if sink.is_stdout() { Box::new(std::io::stderr()) } else { Box::new(std::io::stdout()) };
    let io_err = |e| CliError::io("<summary>", e);
    if json {
        let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
        writeln!(report, "{text}").map_err(io_err)?;
    } else {
        for s in &summary {
            writeln!(
                report,
                "{:<11} K={:<5} L_gen={:<7} L_prompt={:<6} mean_wall_ms={:>10.3} total_cost={:.0} (trials averaged: {})",
                s.engine,
                s.k_epoch,
                s.l_gen,
                s.l_prompt,
                s.mean_wall_ns / 1e6,
                s.mean_total_cost,
                s.trials_averaged
            )
            .map_err(io_err)?;
        }
    }
    Ok(())
}
