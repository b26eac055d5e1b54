//! `gen` and `filters` subcommands.

use std::path::{Path, PathBuf};

use futurefill::generate::{generate_prompted, generate_scratch, Generation, Prompt};
use futurefill::spectral::{SpectralFilterBank, EIGENSOLVE_CAP};
use futurefill::{Filter, Signal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::args::{FilterSource, FiltersArgs, GenArgs, Mode};
use crate::error::{CliError, CliResult};
use crate::files::{read_sequence, write_file, write_sequence, Sink};

/// Contents of the `<output>.meters.json` sidecar.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenMeters {
    pub engine: String,
    pub mode: String,
    #[serde(rename = "L_gen")]
    pub l_gen: usize,
    #[serde(rename = "L_prompt")]
    pub l_prompt: usize,
    #[serde(rename = "K_epoch")]
    pub k_epoch: usize,
    pub prefill_transforms: u64,
    pub mac_count: u64,
    pub ff_cost: u64,
    pub cache_rebuilds: u64,
    pub transforms: u64,
    pub peak_aux_elems: u64,
    pub peak_scratch_elems: u64,
}

pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".meters.json");
    PathBuf::from(s)
}

fn build_filter(args: &GenArgs, needed: usize, seed: u64) -> CliResult<Filter> {
    let taps = match args.filter {
        FilterSource::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..needed).map(|_| rng.random_range(-1.0..1.0)).collect()
        }
        FilterSource::Spectral => {
            if needed > EIGENSOLVE_CAP {
                return Err(CliError::Usage(format!(
                    "spectral filters of length {needed} exceed the eigensolve cap of {EIGENSOLVE_CAP}"
                )));
            }
            SpectralFilterBank::<f64>::hankel(needed, 1)?.filter(0).to_vec()
        }
        FilterSource::File => {
            let path = args
                .filter_file
                .as_deref()
                .ok_or_else(|| CliError::Usage("--filter file needs --filter-file".into()))?;
            let mut taps = read_sequence(path)?;
            // taps past the last reachable lag never contribute
            taps.truncate(needed);
            taps
        }
    };
    Ok(Filter::new(Signal::new(taps)?, needed)?)
}

pub fn cmd_gen(args: &GenArgs, seed: u64, sink: &Sink, json: bool) -> CliResult<()> {
    if args.length == 0 {
        return Err(CliError::Usage("--length must be positive".into()));
    }
    args.token_map.validate()?;
    let prompt = match (args.mode, &args.prompt) {
        (Mode::Prompt, Some(path)) => Some(Prompt::new(read_sequence(path)?)?),
        (Mode::Prompt, None) => return Err(CliError::Usage("prompt mode needs --prompt".into())),
        (Mode::Scratch, Some(_)) => return Err(CliError::Usage("--prompt only applies to prompt mode".into())),
        (Mode::Scratch, None) => None,
    };
    let l_prompt = prompt.as_ref().map_or(0, |p| p.len());
    if let Some(k) = args.engine.epoch_for(args.length) {
        if k > args.length {
            return Err(CliError::Usage(format!("epoch {k} exceeds generation length {}", args.length)));
        }
    }
    let filter = build_filter(args, l_prompt + args.length, seed)?;
    let g: Generation = match &prompt {
        Some(p) => generate_prompted(p, &filter, args.length, args.engine, args.token_map)?,
        None => generate_scratch(&filter, args.length, args.engine, args.seed_token, args.token_map)?,
    };
    let meters = GenMeters {
        engine: args.engine.name().to_string(),
        mode: args.mode.as_str().to_string(),
        l_gen: args.length,
        l_prompt,
        k_epoch: args.engine.epoch_for(args.length).unwrap_or(0),
        prefill_transforms: g.prefill_transforms,
        mac_count: g.meter.mac_count(),
        ff_cost: g.meter.ff_cost(),
        cache_rebuilds: g.meter.cache_rebuilds(),
        transforms: g.meter.transforms(),
        peak_aux_elems: g.peak_aux_elems,
        peak_scratch_elems: g.meter.peak_scratch_elems(),
    };
    let meters_json = serde_json::to_string_pretty(&meters).expect("meters serialize");

    sink.write_with(|w| write_sequence(w, &g.outputs))?;
    match sink.path() {
        Some(out) => write_file(&sidecar_path(out), |w| writeln!(w, "{meters_json}"))?,
        None if json => eprintln!("{meters_json}"),
        None => {}
    }
    Ok(())
}

pub fn cmd_filters(args: &FiltersArgs, sink: &Sink) -> CliResult<()> {
    if args.k == 0 || args.k > args.len {
        return Err(CliError::Usage(format!("need 1 <= k <= L, got k={} L={}", args.k, args.len)));
    }
    if args.len > EIGENSOLVE_CAP {
        return Err(CliError::Usage(format!("L={} exceeds the eigensolve cap of {EIGENSOLVE_CAP}", args.len)));
    }
    let bank = SpectralFilterBank::<f64>::hankel(args.len, args.k)?;
    sink.write_with(|w| bank.write_csv(w))
}
