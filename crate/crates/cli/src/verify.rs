//! Oracle suites behind `futurefill verify`.
//!
//! Every suite draws from its own ChaCha8 stream (the suite's position in
//! [`SUITES`]) of a generator seeded with `--seed`, so a failing instance can
//! be replayed from the seed, the suite name and the instance fields.

use futurefill::engine::CacheUpdate;
use futurefill::generate::{generate_prompted, oracle_prompted, Prompt, TokenMap};
use futurefill::spectral::{hankel_entry, SpectralFilterBank, StuModel, StuSession};
use futurefill::{
    agreement_error, conv_causal_reference, conv_full, futurefill, optimal_epoch_length, split_check,
    ContinuousEngine, EngineKind, EpochedEngine, Filter, OnlineConvEngine, Signal,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::Fault;

pub const SUITES: [&str; 8] = [
    "oracle-equivalence",
    "futurefill",
    "split-identity",
    "cache-schedule",
    "cost-bound",
    "prompted-oracle",
    "hankel",
    "gradient",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub passed: bool,
    pub instances: u64,
    pub max_error: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub max_len: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub injected_fault: Option<&'static str>,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn failed_suites(&self) -> Vec<&'static str> {
        self.suites.iter().filter(|s| !s.passed).map(|s| s.name).collect()
    }
}

/// Accumulates one suite's instances; keeps the first failure.
struct Tally {
    name: &'static str,
    tolerance: f64,
    instances: u64,
    max_error: f64,
    failure: Option<Value>,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Tally { name, tolerance, instances: 0, max_error: 0.0, failure: None }
    }

    fn record(&mut self, err: f64, instance: impl FnOnce() -> Value) {
        self.instances += 1;
        if err.is_nan() || err > self.max_error {
            self.max_error = if err.is_nan() { f64::INFINITY } else { err };
        }
        let within = err <= self.tolerance;
        if !within && self.failure.is_none() {
            let mut v = instance();
            if let Value::Object(map) = &mut v {
                map.insert("error".into(), json!(err));
            }
            self.failure = Some(v);
        }
    }

    fn check(&mut self, ok: bool, instance: impl FnOnce() -> Value) {
        self.record(if ok { 0.0 } else { f64::INFINITY }, instance);
    }

    fn finish(self) -> SuiteReport {
        SuiteReport {
            name: self.name,
            passed: self.failure.is_none(),
            instances: self.instances,
            max_error: self.max_error,
            tolerance: self.tolerance,
            failure: self.failure,
        }
    }
}

fn suite_rng(seed: u64, suite: &str) -> ChaCha8Rng {
    let idx = SUITES.iter().position(|s| *s == suite).expect("known suite");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(idx as u64);
    rng
}

fn uniform(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn signal(v: Vec<f64>) -> Signal {
    Signal::new(v).expect("uniform draws are finite")
}

fn taps(v: Vec<f64>) -> Filter {
    Filter::from_taps(v).expect("uniform draws are finite")
}

fn run_engine(engine: &mut dyn OnlineConvEngine<f64>, u: &[f64]) -> Vec<f64> {
    u.iter().map(|&x| engine.push(x)).collect()
}

fn epoch_variants(len: usize) -> Vec<usize> {
    let mut ks = vec![1, ((len as f64).sqrt() as usize).max(1), len];
    if len >= 2 {
        ks.push(optimal_epoch_length(len));
    }
    ks.sort_unstable();
    ks.dedup();
    ks
}

fn oracle_equivalence(seed: u64, max_len: usize) -> SuiteReport {
    let name = "oracle-equivalence";
    let mut rng = suite_rng(seed, name);
    let mut t = Tally::new(name, 1e-8);
    let mut lengths: Vec<(usize, usize)> = (1..=max_len).map(|l| (l, 0)).collect();
    for big in [1024, 4096] {
        if big > max_len {
            lengths.extend((0..2).map(|i| (big, i)));
        }
    }
    for (len, rep) in lengths {
        let u = uniform(&mut rng, len);
        let phi = taps(uniform(&mut rng, len));
        let oracle = conv_causal_reference(&signal(u.clone()), &phi);
        let mut kinds = vec![EngineKind::Naive, EngineKind::Continuous];
        kinds.extend(epoch_variants(len).into_iter().map(|k| EngineKind::Epoched { epoch: Some(k) }));
        for kind in kinds {
            let mut e = kind.build(&phi, len).expect("valid engine configuration");
            let y = run_engine(e.as_mut(), &u);
            t.record(agreement_error(&y, &oracle), || json!({ "L": len, "repeat": rep, "engine": kind.to_string() }));
        }
    }
    t.finish()
}

/// The FutureFill definition, summed directly.
fn futurefill_definition(v: &[f64], w: &[f64]) -> Vec<f64> {
    let (t1, t2) = (v.len(), w.len());
    (1..t2)
        .map(|s| (1..=t2 - s).filter(|&i| i <= t1).map(|i| v[t1 - i] * w[s + i - 1]).sum())
        .collect()
}

fn futurefill_shifted(v: &Signal, w: &Signal) -> Vec<f64> {
    let out_len = w.len().saturating_sub(1);
    let full = conv_full(v, w);
    (0..out_len).map(|i| full.get(v.len() + 1 + i).copied().unwrap_or(0.0)).collect()
}

fn futurefill_suite(seed: u64, fault: Option<Fault>) -> SuiteReport {
    let name = "futurefill";
    let mut rng = suite_rng(seed, name);
    let mut t = Tally::new(name, 1e-10);
    for instance in 0..1000 {
        let t1 = rng.random_range(1..=64);
        let t2 = rng.random_range(1..=64);
        let v = uniform(&mut rng, t1);
        let w = uniform(&mut rng, t2);
        let expected = futurefill_definition(&v, &w);
        let (vs, ws) = (signal(v.clone()), signal(w.clone()));
        let got: Vec<f64> = match fault {
            Some(Fault::FuturefillOffByOne) => futurefill_shifted(&vs, &ws),
            None => futurefill(&vs, &ws).into_vec(),
        };
        t.record(agreement_error(&got, &expected), || json!({ "instance": instance, "v": v, "w": w }));
    }
    t.finish()
}

fn split_identity(seed: u64) -> SuiteReport {
    let name = "split-identity";
    let mut rng = suite_rng(seed, name);
    let mut t = Tally::new(name, 0.0);
    for n in 1..=64 {
        let a = signal(uniform(&mut rng, n));
        let b = signal(uniform(&mut rng, n));
        for t1 in 1..=n {
            t.check(split_check(&a, &b, t1), || json!({ "len": n, "t1": t1 }));
        }
    }
    let n = 4096;
    let a = signal(uniform(&mut rng, n));
    let b = signal(uniform(&mut rng, n));
    for _ in 0..4 {
        let t1 = rng.random_range(1..=n);
        t.check(split_check(&a, &b, t1), || json!({ "len": n, "t1": t1 }));
    }
    t.finish()
}

/// Prefix sums of the binary expansion of `i`, highest bit first.
pub fn cumulants(i: usize) -> Vec<usize> {
    let mut acc = 0;
    (0..usize::BITS)
        .rev()
        .filter(|b| i & (1 << b) != 0)
        .map(|b| {
            acc += 1 << b;
            acc
        })
        .collect()
}

fn cache_schedule(max_len: usize) -> SuiteReport {
    let mut t = Tally::new("cache-schedule", 0.0);
    for len in 1..=max_len {
        let phi = taps(vec![1.0; len]);
        let mut e = ContinuousEngine::new(&phi, len).with_update_trace();
        run_engine(&mut e, &vec![1.0; len]);
        t.check(e.late_writes() == 0, || json!({ "L": len, "late_writes": e.late_writes() }));
        let trace: &[CacheUpdate] = e.update_trace().expect("trace enabled");
        let mut writes: Vec<Vec<usize>> = vec![Vec::new(); len + 1];
        for u in trace {
            for slot in &mut writes[u.first_slot..u.first_slot + u.count] {
                slot.push(u.step);
            }
        }
        for i in 1..len {
            let mut times = std::mem::take(&mut writes[i + 1]);
            times.sort_unstable();
            let want = cumulants(i);
            t.check(times == want, || json!({ "L": len, "slot": i + 1, "written_at": times, "cumulants": want }));
        }
    }
    t.finish()
}

fn cost_bound() -> SuiteReport {
    let mut t = Tally::new("cost-bound", 0.0);
    for j in 1..=17u32 {
        let len = 1usize << j;
        let mut e = ContinuousEngine::new(&taps(vec![0.0; len]), len);
        run_engine(&mut e, &vec![0.0; len]);
        let ff = e.meter().ff_cost();
        let closed: u64 = (1..len as u64)
            .map(|s| {
                let k = s.trailing_zeros().min(j) as u64;
                k.max(1) << k
            })
            .sum();
        let bound = 3 * len as u64 * (j as u64).pow(2);
        t.check(ff == closed && ff <= bound, || json!({ "engine": "continuous", "L": len, "ff_cost": ff, "closed_form": closed, "bound": bound }));
    }
    t.check(optimal_epoch_length(65536) == 1024, || json!({ "optimal_epoch_length(65536)": optimal_epoch_length(65536) }));
    for j in 10..=17u32 {
        let len = 1usize << j;
        let k = optimal_epoch_length(len);
        let mut e = EpochedEngine::new(&taps(vec![0.0; len]), len, k).expect("K <= L");
        run_engine(&mut e, &vec![0.0; len]);
        let m = *e.meter();
        t.check(m.cache_rebuilds() == (len / k) as u64 && m.peak_aux_elems() <= 4 * k as u64, || {
            json!({ "engine": "epoched", "L": len, "K": k, "cache_rebuilds": m.cache_rebuilds(), "peak_aux_elems": m.peak_aux_elems() })
        });
    }
    t.finish()
}

fn prompted_oracle(seed: u64) -> SuiteReport {
    let name = "prompted-oracle";
    let mut rng = suite_rng(seed, name);
    let mut t = Tally::new(name, 1e-8);
    let kinds = [EngineKind::Naive, EngineKind::Epoched { epoch: None }, EngineKind::Epoched { epoch: Some(1) }, EngineKind::Continuous];
    for l_prompt in 0..=32 {
        for budget in 1..=32 {
            let prompt = Prompt::new(uniform(&mut rng, l_prompt)).expect("finite");
            let phi = taps(uniform(&mut rng, l_prompt + budget));
            let oracle = oracle_prompted(&prompt, &phi, budget, TokenMap::Identity);
            for kind in kinds {
                let instance = || json!({ "L_prompt": l_prompt, "K": budget, "engine": kind.to_string() });
                match generate_prompted(&prompt, &phi, budget, kind, TokenMap::Identity) {
                    Ok(g) => {
                        let bookkeeping = g.prefill_transforms <= 1 && g.peak_aux_elems <= 4 * budget as u64;
                        let err = if bookkeeping { agreement_error(&g.outputs, &oracle) } else { f64::INFINITY };
                        t.record(err, instance);
                    }
                    Err(_) => t.check(false, instance),
                }
            }
        }
    }
    t.finish()
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
    }
    fn go(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (l, r) = (simpson(f, a, m), simpson(f, m, b));
        let delta = l + r - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return l + r + delta / 15.0;
        }
        go(f, a, m, l, tol / 2.0, depth - 1) + go(f, m, b, r, tol / 2.0, depth - 1)
    }
    go(f, a, b, simpson(f, a, b), tol, 40)
}

fn hankel_suite() -> SuiteReport {
    let mut t = Tally::new("hankel", 1e-12);
    for i in 1..64usize {
        for j in 1..=64 - i {
            let p = (i + j - 2) as i32;
            let integrand = move |a: f64| (a - 1.0) * (a - 1.0) * a.powi(p);
            let q = adaptive_simpson(&integrand, 0.0, 1.0, 1e-15);
            t.record((q - hankel_entry(i, j)).abs(), || json!({ "check": "entry", "i": i, "j": j }));
        }
    }
    let (len, k) = (64, 8);
    match SpectralFilterBank::<f64>::hankel(len, k) {
        Ok(bank) => {
            let ortho = bank.orthonormality_error();
            t.check(ortho <= 1e-8, || json!({ "check": "orthonormality", "L": len, "k": k, "deviation": ortho }));
            let ev = bank.eigenvalues().expect("hankel bank keeps eigenvalues");
            for (idx, f) in bank.filters().iter().enumerate() {
                let v = hankel_times(f);
                let resid = v.iter().zip(f).map(|(hv, x)| (hv - ev[idx] * x).abs()).fold(0.0, f64::max);
                t.record(resid, || json!({ "check": "eigenpair", "L": len, "index": idx }));
            }
        }
        Err(e) => t.check(false, || json!({ "check": "eigensolve", "L": len, "k": k, "message": e.to_string() })),
    }
    t.finish()
}

fn hankel_times(x: &[f64]) -> Vec<f64> {
    (1..=x.len()).map(|r| x.iter().enumerate().map(|(c, v)| hankel_entry(r, c + 1) * v).sum()).collect()
}

fn gradient_suite(seed: u64) -> SuiteReport {
    let name = "gradient";
    let mut rng = suite_rng(seed, name);
    let mut t = Tally::new(name, 1e-5);
    for (d_in, d_out) in [(3, 3), (3, 2)] {
        let (k, len) = (2, 16);
        let bank = SpectralFilterBank::<f64>::hankel(len, k).expect("small bank");
        let model = StuModel::random_full(bank, d_in, d_out, 1.0, &mut rng).expect("valid shape");
        let mut session = StuSession::new(model.clone(), EngineKind::Continuous, len).expect("valid session");
        for _ in 0..len - 1 {
            session.step(&uniform(&mut rng, d_in)).expect("input width");
        }
        let prediction = session.step(&uniform(&mut rng, d_in)).expect("input width");
        let features = session.features().to_vec();
        let target = uniform(&mut rng, d_out);
        let grads = model.loss_gradients(&features, &prediction, &target).expect("shapes agree");
        let loss = |m: &StuModel| -> f64 {
            let p = m.predict_from_features(&features).expect("shapes agree");
            p.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum()
        };
        let h = 1e-6;
        for (i, g) in grads.iter().enumerate() {
            for r in 0..d_out {
                for c in 0..d_in {
                    let base = model.projections().expect("full mode")[i].get(r, c);
                    let mut plus = model.clone();
                    let mut minus = model.clone();
                    plus.projections_mut().expect("full mode")[i].set(r, c, base + h);
                    minus.projections_mut().expect("full mode")[i].set(r, c, base - h);
                    let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
                    let rel = (fd - g.get(r, c)).abs() / (1.0 + g.get(r, c).abs());
                    t.record(rel, || json!({ "d_in": d_in, "d_out": d_out, "filter": i, "row": r, "col": c }));
                }
            }
        }
    }
    t.finish()
}

pub fn run_verify(seed: u64, max_len: usize, fault: Option<Fault>) -> VerifyReport {
    let suites = vec![
        oracle_equivalence(seed, max_len),
        futurefill_suite(seed, fault),
        split_identity(seed),
        cache_schedule(max_len),
        cost_bound(),
        prompted_oracle(seed),
        hankel_suite(),
        gradient_suite(seed),
    ];
    debug_assert!(suites.iter().map(|s| s.name).eq(SUITES));
    VerifyReport {
        seed,
        max_len,
        injected_fault: fault.map(|f| match f {
            Fault::FuturefillOffByOne => "futurefill-off-by-one",
        }),
        passed: suites.iter().all(|s| s.passed),
        suites,
    }
}

pub fn render_text(report: &VerifyReport) -> String {
    let mut out = String::new();
    for s in &report.suites {
        out.push_str(&format!(
            "{} {:<19} instances={:<6} max_error={:.3e} tolerance={:.0e}\n",
            if s.passed { "PASS" } else { "FAIL" },
            s.name,
            s.instances,
            s.max_error,
            s.tolerance
        ));
        if let Some(f) = &s.failure {
            out.push_str(&format!("     first failing instance: {f}\n"));
        }
    }
    out.push_str(if report.passed { "all suites passed\n" } else { "verification FAILED\n" });
    out
}
