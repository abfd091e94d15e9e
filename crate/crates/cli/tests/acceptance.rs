// Copyright contributors to the Interleave project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! End-to-end acceptance checks. Each test prints one `criterion N:` line
//! with PASS or FAIL and the numbers behind it, then asserts.
//!
//! Run with `cargo test -p interleave-cli --test acceptance`.

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Mutex, OnceLock};
use std::time::Instant;

use interleave_core::benchmarks::Benchmark;
use interleave_core::circuit::{parities, random_sample, reference_sample, Basis, Circuit};
use interleave_core::codegen::{
    gen_lattice_surgery_cnot_experiment, gen_transversal_cnot_experiment, CnotSpec, LogicalState,
    SurgeryLayout, Timing,
};
use interleave_core::decoder::{brute_force_decode, MatchingGraph, ORACLE_MAX};
use interleave_core::geometry::{
    build_layout, gates_conflict, group_side, patch_plaquettes, schedule_round, ArrayParams,
};
use interleave_core::montecarlo::{
    cnot_rate, coherence_sweep, crossing, with_workers, CnotMode, Estimate,
};
use interleave_core::noise::NoiseParams;
use interleave_core::routing::{
    route_rows, sensitivity_sweep, simulate, simulate_audited, EventKind, LayoutKind, RouteConfig,
    RouteRow, RoutingMode, SweepAxis,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 1;
const EPSILON: f64 = 1e-10;
const GROVER_ITERATIONS: usize = 2;

// Written to the process stdout directly so the line shows up without
// `--nocapture`.
fn report(n: usize, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(
        std::io::stdout().lock(),
        "criterion {n}: {verdict} {detail}"
    );
}

type Key = (CnotMode, usize, u64);

// Rates at Table 1 settings with gate and measurement errors set to p,
// shared between tests that ask for the same point.
fn rate(mode: CnotMode, d: usize, p: f64, shots: u64) -> Estimate {
    static CACHE: OnceLock<Mutex<HashMap<(Key, u64), Estimate>>> = OnceLock::new();
    let key = ((mode, d, p.to_bits()), shots);
    let cache = CACHE.get_or_init(Default::default);
    if let Some(e) = cache.lock().unwrap().get(&key) {
        return *e;
    }
    let params = NoiseParams {
        p_1q: p,
        p_2q: p,
        p_meas: p,
        ..NoiseParams::default()
    };
    let e = cnot_rate(mode, d, &params, shots, SEED).unwrap().estimate;
    cache.lock().unwrap().insert(key, e);
    e
}

fn show(e: &Estimate) -> String {
    format!("{:.5} [{:.5}, {:.5}]", e.rate, e.ci_lo, e.ci_hi)
}

#[test]
fn criterion_01_distance_ordering() {
    let start = Instant::now();
    let rates: Vec<Estimate> = [3, 5, 7]
        .iter()
        .map(|&d| rate(CnotMode::Transversal, d, 0.001, 1_000_000))
        .collect();
    let ok = rates[1].clearly_below(&rates[0]) && rates[2].clearly_below(&rates[1]);
    let detail = format!(
        "transversal p=0.1% d=3 {} d=5 {} d=7 {} ({:.0} s)",
        show(&rates[0]),
        show(&rates[1]),
        show(&rates[2]),
        start.elapsed().as_secs_f64()
    );
    report(1, ok, &detail);
    assert!(ok, "{detail}");
}

#[test]
fn criterion_02_transversal_beats_surgery() {
    let mut ok = true;
    let mut parts = Vec::new();
    for d in [3, 5] {
        for p in [0.001, 0.003] {
            let t = rate(CnotMode::Transversal, d, p, 1_000_000);
            let ls = rate(CnotMode::LatticeSurgery, d, p, 1_000_000);
            ok &= t.clearly_below(&ls);
            parts.push(format!("d={d} p={p}: {} < {}", show(&t), show(&ls)));
        }
    }
    let detail = parts.join("; ");
    report(2, ok, &detail);
    assert!(ok, "{detail}");
}

#[test]
fn criterion_03_threshold_band() {
    let ps = [0.002, 0.003, 0.005, 0.007, 0.01, 0.012];
    let mut ok = true;
    let mut parts = Vec::new();
    for mode in CnotMode::ALL {
        let small: Vec<f64> = ps.iter().map(|&p| rate(mode, 3, p, 20_000).rate).collect();
        let large: Vec<f64> = ps.iter().map(|&p| rate(mode, 5, p, 20_000).rate).collect();
        let x = crossing(&ps, &small, &large);
        ok &= matches!(x, Some(x) if (0.003..=0.012).contains(&x));
        parts.push(format!("{mode} crossing {x:?}"));
    }
    let detail = parts.join("; ");
    report(3, ok, &detail);
    assert!(ok, "{detail}");
}

#[test]
fn criterion_04_coherence() {
    let t1 = [1e4, 1e5, 1e6];
    let mut rows = HashMap::new();
    for mode in CnotMode::ALL {
        let r: Vec<Estimate> = coherence_sweep(mode, 3, &t1, 1_000_000, SEED)
            .unwrap()
            .into_iter()
            .map(|r| r.estimate)
            .collect();
        rows.insert(mode, r);
    }
    let t = &rows[&CnotMode::Transversal];
    let ls = &rows[&CnotMode::LatticeSurgery];
    let surgery_worse = ls[0].rate > t[0].rate;
    let monotone = rows
        .values()
        .all(|r| r.windows(2).all(|w| w[1].ci_lo <= w[0].ci_hi));
    let ok = surgery_worse && monotone;
    let fmt = |r: &[Estimate]| {
        r.iter()
            .map(|e| format!("{:.4}", e.rate))
            .collect::<Vec<_>>()
            .join("/")
    };
    let detail = format!(
        "T1=1e4/1e5/1e6 us transversal {} surgery {}",
        fmt(t),
        fmt(ls)
    );
    report(4, ok, &detail);
    assert!(ok, "{detail}");
}

#[test]
fn criterion_05_serialization() {
    let start = Instant::now();
    let mut ok = true;
    let mut counts = Vec::new();
    for (k, want) in [(1usize, 4usize), (4, 16), (9, 36), (16, 64)] {
        let side = group_side(k).unwrap() as f64;
        let params = ArrayParams {
            r_ancilla_data: 28.0f64.max(side * 10.0),
            ..ArrayParams::default()
        };
        for d in [3usize, 5, 7] {
            let l = build_layout(k, d, params).unwrap();
            let layers = schedule_round(&l, &patch_plaquettes(0, 0, d as i32, d as i32));
            ok &= layers.len() == want;
            for layer in &layers {
                for i in 0..layer.len() {
                    for j in i + 1..layer.len() {
                        ok &= !gates_conflict(&l, layer[i], layer[j]);
                    }
                }
            }
            if d == 3 {
                counts.push(layers.len());
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < 1.0;
    let detail = format!("CZ layers for k=1,4,9,16: {counts:?} ({elapsed:.3} s)");
    report(5, ok, &detail);
    assert!(ok, "{detail}");
}

// Expected outputs of CNOT on a product stabilizer input, or None for the
// entangling cases where only Z Z parity is deterministic.
fn cnot_truth(c: LogicalState, t: LogicalState) -> (CnotSpec, Option<(bool, bool)>, Option<bool>) {
    let mut spec = CnotSpec {
        control: c,
        target: t,
        readout_control: c.basis(),
        readout_target: t.basis(),
    };
    match (c.basis(), t.basis()) {
        (Basis::Z, Basis::Z) => (spec, Some((c.flipped(), c.flipped() ^ t.flipped())), None),
        (Basis::X, Basis::X) => (spec, Some((c.flipped() ^ t.flipped(), t.flipped())), None),
        (Basis::Z, Basis::X) => (spec, Some((c.flipped(), t.flipped())), None),
        (Basis::X, Basis::Z) => {
            spec.readout_control = Basis::Z;
            spec.readout_target = Basis::Z;
            (spec, None, Some(t.flipped()))
        }
    }
}

fn truth_holds(c: &Circuit, e: Option<(bool, bool)>, parity: Option<bool>) -> bool {
    let mut records = vec![reference_sample(c)];
    records.extend((0..8).map(|s| random_sample(c, s)));
    records.iter().all(|rec| {
        let (dets, obs) = parities(c, rec);
        dets.iter().all(|&x| !x)
            && e.map_or(true, |(a, b)| obs == [a, b])
            && parity.map_or(true, |p| obs[0] ^ obs[1] == p)
    })
}

#[test]
fn criterion_06_noiseless_truth_tables() {
    let start = Instant::now();
    let timing = Timing::default();
    let layout = build_layout(4, 3, ArrayParams::default()).unwrap();
    let surgery = SurgeryLayout::new(3, ArrayParams::default()).unwrap();
    let mut failures = Vec::new();
    for c in LogicalState::ALL {
        for t in LogicalState::ALL {
            let (spec, e, parity) = cnot_truth(c, t);
            let tc = gen_transversal_cnot_experiment(&layout, 3, spec, timing).unwrap();
            if !truth_holds(&tc, e, parity) {
                failures.push(format!("transversal {c:?}{t:?}"));
            }
            let lc = gen_lattice_surgery_cnot_experiment(&surgery, spec, timing).unwrap();
            if !truth_holds(&lc, e, parity) {
                failures.push(format!("surgery {c:?}{t:?}"));
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = failures.is_empty() && elapsed < 1.0;
    let detail = format!("16 inputs x 2 circuits, failures {failures:?} ({elapsed:.3} s)");
    report(6, ok, &detail);
    assert!(ok, "{detail}");
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> MatchingGraph {
    let b = n as u32;
    let mut edges = Vec::new();
    for a in 0..b {
        edges.push((a, b, rng.gen_range(20..400), rng.gen_range(0..4)));
        for c in a + 1..b {
            if rng.gen_bool(0.35) {
                edges.push((a, c, rng.gen_range(1..200), rng.gen_range(0..4)));
            }
        }
    }
    MatchingGraph::from_edges(n, &edges)
}

#[test]
fn criterion_07_decoder_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(2..20);
        let g = random_graph(&mut rng, n);
        let fired = rng.gen_range(0..=ORACLE_MAX.min(n));
        let mut syndrome: Vec<u32> = (0..n as u32).collect();
        for i in (1..n).rev() {
            syndrome.swap(i, rng.gen_range(0..=i));
        }
        syndrome.truncate(fired);
        let (w, _) = g.decode_with_weight(&syndrome).unwrap();
        let (bw, _) = brute_force_decode(&g, &syndrome).unwrap();
        if w != bw {
            mismatches += 1;
        }
    }
    let ok = mismatches == 0;
    let detail = format!("1000 instances, {mismatches} weight mismatches");
    report(7, ok, &detail);
    assert!(ok, "{detail}");
}

#[test]
fn criterion_08_distillation_relative_time() {
    let program = Benchmark::Distill15.synthesized(GROVER_ITERATIONS, EPSILON);
    let cfg = RouteConfig::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for kind in [LayoutKind::Compact, LayoutKind::Fast] {
        let rows = route_rows(
            "distill15",
            &program,
            kind,
            &[RoutingMode::InterleavedLs],
            &cfg,
            SEED,
        )
        .unwrap();
        let out = simulate(&program, kind, RoutingMode::InterleavedLs, &cfg, true).unwrap();
        let routed = out
            .events
            .iter()
            .filter(|e| e.kind == EventKind::Cnot && !e.path.is_empty())
            .count();
        let rel = rows[0].relative;
        ok &= (0.30..=0.60).contains(&rel) && out.routed_cnots == 0 && routed == 0;
        parts.push(format!(
            "{kind} relative {rel:.4} routed {}",
            out.routed_cnots
        ));
    }
    let detail = parts.join("; ");
    report(8, ok, &detail);
    assert!(ok, "{detail}");
}

#[test]
fn criterion_09_crossover() {
    let start = Instant::now();
    let cfg = RouteConfig::default();
    let modes = [RoutingMode::InterleavedLs, RoutingMode::Movement];
    let mut diffs = Vec::new();
    let mut parts = Vec::new();
    for n in [8usize, 16, 32, 64, 96] {
        let program = Benchmark::Qft(n).synthesized(GROVER_ITERATIONS, EPSILON);
        let rows = route_rows("qft", &program, LayoutKind::Compact, &modes, &cfg, SEED).unwrap();
        let (ils, mov) = (rows[0].total_us, rows[1].total_us);
        diffs.push(mov - ils);
        parts.push(format!("n={n} movement/ils {:.3}", mov / ils));
    }
    let changes = diffs
        .windows(2)
        .filter(|w| (w[0] < 0.0) != (w[1] < 0.0))
        .count();
    let elapsed = start.elapsed().as_secs_f64();
    let ok = diffs[0] < 0.0 && *diffs.last().unwrap() > 0.0 && changes == 1 && elapsed <= 600.0;
    let detail = format!("{} ({elapsed:.0} s)", parts.join(", "));
    report(9, ok, &detail);
    assert!(ok, "{detail}");
}

fn pick(rows: &[RouteRow], mode: RoutingMode, f: impl Fn(&RouteRow) -> bool) -> f64 {
    rows.iter()
        .find(|r| r.mode == mode && f(r))
        .unwrap()
        .relative
}

#[test]
fn criterion_10_sensitivity_directions() {
    let program = Benchmark::Qft(32).synthesized(GROVER_ITERATIONS, EPSILON);
    let cfg = RouteConfig::default();
    let sweep = |axis, grid: &[f64]| {
        sensitivity_sweep(
            axis,
            grid,
            "qft:32",
            &program,
            LayoutKind::Compact,
            &cfg,
            SEED,
        )
        .unwrap()
    };
    let meas = sweep(SweepAxis::TMeas, &[1e3, 1e4]);
    let fast = pick(&meas, RoutingMode::Movement, |r| r.t_meas_us == 1e3);
    let slow = pick(&meas, RoutingMode::Movement, |r| r.t_meas_us == 1e4);
    let speed = sweep(SweepAxis::Speed, &[0.55, 5.5]);
    let base = pick(&speed, RoutingMode::Movement, |r| r.speed_um_per_us == 0.55);
    let quick = pick(&speed, RoutingMode::Movement, |r| r.speed_um_per_us == 5.5);
    let group = sweep(SweepAxis::GroupSize, &[9.0, 16.0]);
    let k9 = pick(&group, RoutingMode::InterleavedLs, |r| r.k == 9);
    let k16 = pick(&group, RoutingMode::InterleavedLs, |r| r.k == 16);
    let ok = fast > slow && quick < base && (k16 - k9).abs() <= 0.1 * k9;
    let detail = format!(
        "movement t_meas 1e4->1e3: {slow:.4}->{fast:.4}; speed x10: {base:.4}->{quick:.4}; ils k=9 {k9:.4} k=16 {k16:.4}"
    );
    report(10, ok, &detail);
    assert!(ok, "{detail}");
}

fn cli_output(args: &[&str]) -> String {
    let mut out = Vec::new();
    interleave_cli::run(
        std::iter::once("interleave").chain(args.iter().copied()),
        &mut out,
    )
    .unwrap();
    String::from_utf8(out).unwrap()
}

#[test]
fn criterion_11_determinism_and_audit() {
    let mut parts = Vec::new();

    let params = NoiseParams::uniform(0.003);
    let at = |w| {
        with_workers(Some(w), || {
            cnot_rate(CnotMode::Transversal, 3, &params, 20_000, SEED).unwrap()
        })
        .unwrap()
    };
    let same_rates = at(1) == at(4);
    let cnot = [
        "cnot-compare",
        "--distances",
        "3",
        "--error-rates",
        "0.003",
        "--shots",
        "5000",
        "--seed",
        "1",
    ];
    let route = ["route", "--bench", "qft:16,ghz:8,distill15", "--seed", "1"];
    let same_cli = [&cnot[..], &route[..]].iter().all(|args| {
        let one: Vec<&str> = ["--workers", "1"]
            .iter()
            .chain(args.iter())
            .copied()
            .collect();
        let many: Vec<&str> = ["--workers", "3"]
            .iter()
            .chain(args.iter())
            .copied()
            .collect();
        cli_output(&one) == cli_output(&many)
    });
    parts.push(format!(
        "worker-invariant sampling {same_rates}, cli {same_cli}"
    ));

    let benches = [
        "bv:16",
        "ghz:16",
        "qft:16",
        "grover:6",
        "qaoa:8",
        "distill15",
    ];
    let cfg = RouteConfig::default();
    let mut dirty = Vec::new();
    let mut runs = 0;
    for b in benches {
        let program = b
            .parse::<Benchmark>()
            .unwrap()
            .synthesized(GROVER_ITERATIONS, EPSILON);
        for kind in [LayoutKind::Compact, LayoutKind::Fast] {
            for mode in [
                RoutingMode::StandardLs,
                RoutingMode::InterleavedLs,
                RoutingMode::Movement,
            ] {
                let (_, rep) = simulate_audited(&program, kind, mode, &cfg).unwrap();
                runs += 1;
                if !rep.clean() {
                    dirty.push(format!("{b} {kind} {mode}: {rep:?}"));
                }
            }
        }
    }
    parts.push(format!(
        "{runs} audited runs, {} with violations",
        dirty.len()
    ));

    let ok = same_rates && same_cli && dirty.is_empty();
    let detail = format!("{} {dirty:?}", parts.join("; "));
    report(11, ok, &detail);
    assert!(ok, "{detail}");
}
