//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines always reach the console.
//! Every reference value is recomputed here by direct summation or
//! quadrature rather than taken from the library.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use futurefill::generate::{generate_prompted, Prompt, TokenMap};
use futurefill::spectral::{hankel_entry, SpectralFilterBank, StuModel, StuSession};
use futurefill::{
    futurefill, optimal_epoch_length, split_check, ContinuousEngine, EngineKind, EpochedEngine, Filter,
    OnlineConvEngine, Signal,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BIN: &str = env!("CARGO_BIN_EXE_futurefill");

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
}

fn filter(taps: &[f64]) -> Filter {
    Filter::from_taps(taps.to_vec()).unwrap()
}

/// `y_s = sum_{i=1}^{s} u_i phi_{s+1-i}`, zero-extending `phi`.
fn causal_direct(u: &[f64], phi: &[f64]) -> Vec<f64> {
    (0..u.len())
        .map(|s| {
            let lo = s.saturating_sub(phi.len().saturating_sub(1));
            (lo..=s).map(|i| u[i] * phi[s - i]).sum()
        })
        .collect()
}

fn full_direct(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `max |x - r| / (1 + max |r|)`.
fn rel_err(x: &[f64], r: &[f64]) -> f64 {
    assert_eq!(x.len(), r.len(), "length mismatch");
    let scale = 1.0 + r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    x.iter().zip(r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
}

fn run(engine: &mut dyn OnlineConvEngine<f64>, u: &[f64]) -> Vec<f64> {
    u.iter().map(|&x| engine.push(x)).collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    ensure(elapsed < limit, || format!("{what} took {elapsed:.1?}, limit {limit:?}"))
}

fn c1_exactness() -> Outcome {
    let start = Instant::now();
    let mut r = rng(101);
    let mut worst = 0.0f64;
    let mut cases = 0usize;
    let mut check = |len: usize, r: &mut ChaCha8Rng| -> Result<(), String> {
        let u = uniform(r, len);
        let phi = uniform(r, len);
        let oracle = causal_direct(&u, &phi);
        let mut ks = vec![1, (len as f64).sqrt() as usize, len];
        if len >= 2 {
            ks.push(optimal_epoch_length(len));
        }
        ks.sort_unstable();
        ks.dedup();
        let mut kinds: Vec<EngineKind> = ks.into_iter().map(|k| EngineKind::Epoched { epoch: Some(k) }).collect();
        kinds.push(EngineKind::Continuous);
        for kind in kinds {
            let y = run(kind.build(&filter(&phi), len).unwrap().as_mut(), &u);
            let e = rel_err(&y, &oracle);
            worst = worst.max(e);
            ensure(e <= 1e-8, || format!("L={len} {kind}: error {e:.3e}"))?;
        }
        cases += 1;
        Ok(())
    };
    for len in 1..=256 {
        check(len, &mut r)?;
    }
    for len in [1 << 10, 1 << 12, 1 << 14] {
        for _ in 0..50 {
            check(len, &mut r)?;
        }
    }
    within(start.elapsed(), Duration::from_secs(120), "exactness")?;
    Ok(format!("{cases} cases, max error {worst:.2e}, {:.1?}", start.elapsed()))
}

fn c2_futurefill_identity() -> Outcome {
    let start = Instant::now();
    let mut r = rng(102);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let t1 = r.random_range(1..=300);
        let t2 = r.random_range(1..=300);
        let v = uniform(&mut r, t1);
        let w = uniform(&mut r, t2);
        let got = futurefill(&Signal::new(v.clone()).unwrap(), &Signal::new(w.clone()).unwrap());
        // 1-based positions t1+1 .. t1+t2-1 of the full convolution
        let full = full_direct(&v, &w);
        let e = rel_err(&got, &full[t1..t1 + t2 - 1]);
        worst = worst.max(e);
        ensure(e <= 1e-10, || format!("t1={t1} t2={t2}: error {e:.3e}"))?;
    }
    within(start.elapsed(), Duration::from_secs(10), "futurefill identity")?;
    Ok(format!("1000 instances, max error {worst:.2e}"))
}

fn c3_split_identity() -> Outcome {
    let mut r = rng(103);
    let mut checked = 0;
    for n in 1..=64 {
        let a = Signal::new(uniform(&mut r, n)).unwrap();
        let b = Signal::new(uniform(&mut r, n)).unwrap();
        for t1 in 1..=n {
            ensure(split_check(&a, &b, t1), || format!("len {n}, split {t1}"))?;
            checked += 1;
        }
    }
    let n = 1 << 12;
    let a = Signal::new(uniform(&mut r, n)).unwrap();
    let b = Signal::new(uniform(&mut r, n)).unwrap();
    for _ in 0..6 {
        let t1 = r.random_range(1..=n);
        ensure(split_check(&a, &b, t1), || format!("len {n}, split {t1}"))?;
        checked += 1;
    }
    Ok(format!("{checked} split points, 0 failures"))
}

fn c4_epoched_accounting() -> Outcome {
    for j in 10..=17u32 {
        let len = 1usize << j;
        let k = optimal_epoch_length(len);
        let expected_k = ((len as f64) * (len as f64).log2()).sqrt().round() as usize;
        ensure(k == expected_k, || format!("L={len}: K={k}, expected {expected_k}"))?;
        let mut e = EpochedEngine::new(&filter(&vec![0.5; len]), len, k).unwrap();
        run(&mut e, &vec![1.0; len]);
        let m = e.meter();
        ensure(m.cache_rebuilds() == (len / k) as u64, || format!("L={len}: {} rebuilds", m.cache_rebuilds()))?;
        ensure(m.peak_aux_elems() <= 4 * k as u64, || format!("L={len}: peak {} > 4K", m.peak_aux_elems()))?;
    }
    let k = optimal_epoch_length(65536);
    ensure(k == 1024, || format!("K(65536) = {k}"))?;
    Ok("rebuilds = floor(L/K), peak <= 4K for L = 2^10..2^17; K(65536) = 1024".into())
}

fn c5_continuous_accounting() -> Outcome {
    let mut last = String::new();
    for j in 1..=17u32 {
        let len = 1usize << j;
        let mut e = ContinuousEngine::new(&filter(&vec![0.5; len]), len).with_update_trace();
        run(&mut e, &vec![1.0; len]);
        let b = j;
        let expected: u64 = (1..len as u64)
            .map(|t| {
                let k = t.trailing_zeros().min(b) as u64;
                k.max(1) << k
            })
            .sum();
        let ff = e.meter().ff_cost();
        let bound = 3 * len as u64 * (j as u64) * (j as u64);
        ensure(ff == expected, || format!("L={len}: ff_cost {ff}, expected {expected}"))?;
        ensure(ff <= bound, || format!("L={len}: ff_cost {ff} > {bound}"))?;
        ensure(e.late_writes() == 0, || format!("L={len}: {} writes to already-emitted slots", e.late_writes()))?;
        last = format!("L=2^17: ff_cost {ff} <= {bound}");
    }
    Ok(format!("closed form and bound hold, no late cache writes; {last}"))
}

#[derive(Debug, Clone)]
struct Row {
    engine: String,
    l_gen: usize,
    trial: usize,
    wall_ns: u64,
    mac_count: u64,
    ff_cost: u64,
}

fn read_rows(path: &Path) -> Vec<Row> {
    let mut rd = csv::Reader::from_path(path).unwrap();
    let headers = rd.headers().unwrap().clone();
    assert_eq!(
        headers.iter().collect::<Vec<_>>(),
        [
            "engine", "mode", "L_gen", "L_prompt", "K_epoch", "channels", "trial", "wall_ns", "mac_count", "ff_cost",
            "cache_rebuilds", "peak_aux_elems"
        ]
    );
    rd.records()
        .map(|rec| {
            let rec = rec.unwrap();
            Row {
                engine: rec[0].to_string(),
                l_gen: rec[2].parse().unwrap(),
                trial: rec[6].parse().unwrap(),
                wall_ns: rec[7].parse().unwrap(),
                mac_count: rec[8].parse().unwrap(),
                ff_cost: rec[9].parse().unwrap(),
            }
        })
        .collect()
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn ls_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn cli_slope(csv: &Path, metric: &str, engine: &str) -> f64 {
    let out = cli(&["slope", "--input", csv.to_str().unwrap(), "--metric", metric, "--engine", engine, "--json"]);
    assert!(out.status.success(), "slope failed: {}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    v["fits"][0]["slope"].as_f64().unwrap()
}

fn c6_scaling_slopes() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("scaling.csv");
    let out = cli(&[
        "--seed", "6", "--output", csv_path.to_str().unwrap(), "bench", "--engines", "naive,epoched,continuous",
        "--lengths", "2^12,2^13,2^14,2^15,2^16,2^17", "--trials", "1", "--warmup", "0",
    ]);
    ensure(out.status.success(), || format!("bench failed: {}", String::from_utf8_lossy(&out.stderr)))?;
    let rows = read_rows(&csv_path);

    let mut per_engine: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for r in &rows {
        if r.engine == "naive" {
            let l = r.l_gen as u64;
            ensure(r.mac_count == l * (l + 1) / 2, || format!("naive L={l}: mac_count {}", r.mac_count))?;
        }
        let metric = if r.engine == "naive" { r.mac_count } else { r.mac_count + r.ff_cost };
        per_engine.entry(&r.engine).or_default().push(((r.l_gen as f64).log2(), (metric as f64).log2()));
    }
    let naive = ls_slope(&per_engine["naive"]);
    let epoched = ls_slope(&per_engine["epoched"]);
    let continuous = ls_slope(&per_engine["continuous"]);
    for (engine, metric, mine) in
        [("naive", "mac_count", naive), ("epoched", "total_cost", epoched), ("continuous", "total_cost", continuous)]
    {
        let reported = cli_slope(&csv_path, metric, engine);
        ensure((reported - mine).abs() < 1e-9, || format!("{engine}: cli slope {reported}, refit {mine}"))?;
    }
    ensure((naive - 2.0).abs() <= 0.02, || format!("naive slope {naive:.4}"))?;
    ensure(continuous <= 1.35, || format!("continuous slope {continuous:.4}"))?;
    ensure((1.40..=1.65).contains(&epoched), || format!("epoched slope {epoched:.4}"))?;
    within(start.elapsed(), Duration::from_secs(300), "scaling run")?;
    Ok(format!(
        "naive {naive:.4}, continuous {continuous:.4}, epoched {epoched:.4} ({:.1?})",
        start.elapsed()
    ))
}

fn c7_wall_clock() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("wall.csv");
    let out = cli(&["--seed", "7", "--output", csv_path.to_str().unwrap(), "bench", "--lengths", "2^16"]);
    ensure(out.status.success(), || format!("bench failed: {}", String::from_utf8_lossy(&out.stderr)))?;
    let rows = read_rows(&csv_path);
    // default policy: three measured trials, the first one discarded
    let mean = |engine: &str| {
        let kept: Vec<f64> =
            rows.iter().filter(|r| r.engine == engine && r.trial > 0).map(|r| r.wall_ns as f64).collect();
        assert_eq!(kept.len(), 2, "{engine}");
        kept.iter().sum::<f64>() / kept.len() as f64
    };
    let naive = mean("naive");
    let epoched = naive / mean("epoched");
    let continuous = naive / mean("continuous");
    ensure(epoched >= 3.0 && continuous >= 3.0, || {
        format!("speedups over naive: epoched {epoched:.1}x, continuous {continuous:.1}x")
    })?;
    Ok(format!("L=2^16 speedup over naive: epoched {epoched:.1}x, continuous {continuous:.1}x"))
}

/// `y_t = sum_{j<t} x_{t-j} phi_j + sum_{j=t}^{t+L-1} p_{t+L-j} phi_j`, fed back with the identity.
fn prompted_direct(p: &[f64], phi: &[f64], budget: usize) -> Vec<f64> {
    let l = p.len();
    let tap = |j: usize| phi.get(j - 1).copied().unwrap_or(0.0);
    let mut x: Vec<f64> = Vec::with_capacity(budget);
    for t in 1..=budget {
        let mut y = 0.0;
        for j in 1..t {
            y += x[t - j - 1] * tap(j);
        }
        for j in t..t + l {
            y += p[t + l - j - 1] * tap(j);
        }
        x.push(y);
    }
    x
}

fn c8_prompted() -> Outcome {
    let mut r = rng(108);
    let mut worst = 0.0f64;
    let mut runs = 0;
    for l_prompt in 0..=64 {
        for budget in 1..=64 {
            let p = uniform(&mut r, l_prompt);
            let phi = uniform(&mut r, l_prompt + budget);
            let oracle = prompted_direct(&p, &phi, budget);
            let prompt = Prompt::new(p).unwrap();
            for kind in EngineKind::ALL {
                let g = generate_prompted(&prompt, &filter(&phi), budget, kind, TokenMap::Identity).unwrap();
                let e = rel_err(&g.outputs, &oracle);
                worst = worst.max(e);
                ensure(e <= 1e-8, || format!("L_prompt={l_prompt} K={budget} {kind}: error {e:.3e}"))?;
                runs += 1;
            }
        }
    }
    let budget = 256;
    let mut peaks: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
    for l_prompt in [1 << 10, 1 << 13, 1 << 15] {
        let prompt = Prompt::new(uniform(&mut r, l_prompt)).unwrap();
        let phi = filter(&uniform(&mut r, l_prompt + budget));
        for kind in EngineKind::ALL {
            let g = generate_prompted(&prompt, &phi, budget, kind, TokenMap::Identity).unwrap();
            ensure(g.prefill_transforms == 1, || format!("{kind}: {} prefill transforms", g.prefill_transforms))?;
            ensure(g.peak_aux_elems <= 4 * budget as u64, || format!("{kind}: peak {}", g.peak_aux_elems))?;
            peaks.entry(kind.name()).or_default().push(g.peak_aux_elems);
        }
    }
    for (name, p) in &peaks {
        ensure(p.iter().all(|&x| x == p[0]), || format!("{name}: peak varies with prompt length {p:?}"))?;
    }
    Ok(format!("{runs} prompted runs, max error {worst:.2e}; peaks {peaks:?} for K=256"))
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let rule = |lo: f64, hi: f64| (hi - lo) / 6.0 * (f(lo) + 4.0 * f(0.5 * (lo + hi)) + f(hi));
    let (l, r) = (rule(a, m), rule(m, b));
    let d = l + r - whole;
    if depth == 0 || d.abs() <= 15.0 * tol {
        return l + r + d / 15.0;
    }
    simpson(f, a, m, l, tol / 2.0, depth - 1) + simpson(f, m, b, r, tol / 2.0, depth - 1)
}

fn c9_spectral() -> Outcome {
    let mut worst_q = 0.0f64;
    for i in 1..64usize {
        for j in 1..=64 - i {
            let p = (i + j - 2) as i32;
            let f = move |a: f64| (a - 1.0).powi(2) * a.powi(p);
            let whole = (f(0.0) + 4.0 * f(0.5) + f(1.0)) / 6.0;
            let q = simpson(&f, 0.0, 1.0, whole, 1e-15, 40);
            let e = (q - hankel_entry(i, j)).abs();
            worst_q = worst_q.max(e);
            ensure(e <= 1e-12, || format!("H[{i},{j}]: {e:.3e}"))?;
        }
    }

    let bank = SpectralFilterBank::<f64>::hankel(64, 8).unwrap();
    let mut ortho = 0.0f64;
    for a in 0..8 {
        for b in 0..8 {
            let d: f64 = bank.filter(a).iter().zip(bank.filter(b)).map(|(x, y)| x * y).sum();
            ortho = ortho.max((d - if a == b { 1.0 } else { 0.0 }).abs());
        }
    }
    ensure(ortho <= 1e-8, || format!("orthonormality {ortho:.3e}"))?;

    let mut r = rng(109);
    let mut worst_g = 0.0f64;
    for (d_in, d_out) in [(3, 3), (3, 2)] {
        let bank = SpectralFilterBank::<f64>::hankel(16, 2).unwrap();
        let model = StuModel::random_full(bank, d_in, d_out, 1.0, &mut r).unwrap();
        let mut s = StuSession::new(model.clone(), EngineKind::Naive, 16).unwrap();
        let mut pred = Vec::new();
        for _ in 0..12 {
            pred = s.step(&uniform(&mut r, d_in)).unwrap();
        }
        let feats = s.features().to_vec();
        let target = uniform(&mut r, d_out);
        let grads = model.loss_gradients(&feats, &pred, &target).unwrap();
        let loss = |m: &StuModel| -> f64 {
            let y = m.predict_from_features(&feats).unwrap();
            y.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum()
        };
        let h = 1e-6;
        for (i, g) in grads.iter().enumerate() {
            for row in 0..d_out {
                for col in 0..d_in {
                    let base = model.projections().unwrap()[i].get(row, col);
                    let (mut plus, mut minus) = (model.clone(), model.clone());
                    plus.projections_mut().unwrap()[i].set(row, col, base + h);
                    minus.projections_mut().unwrap()[i].set(row, col, base - h);
                    let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
                    let e = (fd - g.get(row, col)).abs() / (1.0 + g.get(row, col).abs());
                    worst_g = worst_g.max(e);
                    ensure(e <= 1e-5, || format!("gradient ({d_in}->{d_out}) M{i}[{row},{col}]: {e:.3e}"))?;
                }
            }
        }
    }

    let steps = 2000;
    let teacher = StuModel::random_full(SpectralFilterBank::<f64>::hankel(64, 3).unwrap(), 3, 2, 1.0, &mut r).unwrap();
    let student = StuModel::zeros_full(SpectralFilterBank::<f64>::hankel(64, 3).unwrap(), 3, 2).unwrap();
    let mut ts = StuSession::new(teacher, EngineKind::Continuous, steps).unwrap();
    let mut ss = StuSession::new(student, EngineKind::Continuous, steps).unwrap();
    let mut losses = Vec::with_capacity(steps);
    for _ in 0..steps {
        let u = uniform(&mut r, 3);
        let y = ts.step(&u).unwrap();
        losses.push(ss.ogd_step(&u, &y, 0.01).unwrap().1);
    }
    let dec = steps / 10;
    let first = losses[..dec].iter().sum::<f64>() / dec as f64;
    let last = losses[steps - dec..].iter().sum::<f64>() / dec as f64;
    ensure(last < first, || format!("teacher-student loss {first:.4e} -> {last:.4e}"))?;
    Ok(format!(
        "quadrature {worst_q:.1e}, orthonormality {ortho:.1e}, gradient {worst_g:.1e}, loss {first:.3e} -> {last:.3e}"
    ))
}

fn c10_cli_determinism() -> Outcome {
    let start = Instant::now();
    let a = cli(&["verify", "--seed", "7", "--json"]);
    let b = cli(&["verify", "--seed", "7", "--json"]);
    ensure(a.status.code() == Some(0), || format!("verify exited {:?}: {}", a.status.code(), String::from_utf8_lossy(&a.stdout)))?;
    ensure(b.status.code() == Some(0), || format!("second verify exited {:?}", b.status.code()))?;
    ensure(a.stdout == b.stdout, || "reports differ between runs".into())?;
    within(start.elapsed(), Duration::from_secs(600), "two verify runs")?;
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let suites = v["suites"].as_array().map_or(0, Vec::len);
    Ok(format!("{} identical bytes, {suites} suites green ({:.1?} for both runs)", a.stdout.len(), start.elapsed()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("exactness against direct summation", c1_exactness),
        ("futurefill equals full-convolution slice", c2_futurefill_identity),
        ("split identity at every split point", c3_split_identity),
        ("epoched rebuild and cache accounting", c4_epoched_accounting),
        ("continuous cost and write-once cache", c5_continuous_accounting),
        ("scaling slopes of the cost counters", c6_scaling_slopes),
        ("wall-clock speedup over naive", c7_wall_clock),
        ("prompted generation", c8_prompted),
        ("spectral filters and online learning", c9_spectral),
        ("cli verify determinism", c10_cli_determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (idx, (name, f)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", idx + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", idx + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
