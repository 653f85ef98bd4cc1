//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`). Outcomes are reported, not
//! asserted, unless `ACCEPTANCE_STRICT=1` is set, in which case any FAIL
//! makes the target exit non-zero. Panics and simulation errors always fail.

use std::time::Instant;

use gkp_switch::allocator::{Evaluator, SimInputs, Topology};
use gkp_switch::germ::{germ_match, ClientId, ClientRound, ConnectionSet};
use gkp_switch::link::{rank_links, BsmOutcome};
use gkp_switch::noise::error_likelihood;
use gkp_switch::rates::{
    combine_leaf_error, end_to_end_from_parts, fairness, rate_e2e, syndrome_prob, ConnectionStats, OuterErrors,
};
use gkp_switch::steane::{estimate_inner_stats_iid, InnerLeafStats};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DISTANCES: [f64; 5] = [0.5, 1.0, 2.0, 2.5, 5.0];
const SEED: u64 = 20_240_611;

struct Report {
    lines: Vec<(bool, String)>,
}

impl Report {
    fn record(&mut self, id: &str, pass: bool, detail: String, started: Instant) {
        let line = format!(
            "[{}] criterion {id}: {detail} ({:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
        println!("{line}");
        self.lines.push((pass, line));
    }
}

fn inputs(seed: u64) -> SimInputs {
    SimInputs {
        profile_trials: 10_000,
        inner_samples: 100_000,
        seed,
        ..SimInputs::default()
    }
}

fn symmetric_optimum(ev: &Evaluator, r: &mut Report) {
    let t = Instant::now();
    let mut misses = Vec::new();
    for &l in &DISTANCES {
        for k in [10, 20, 50] {
            let best = ev.optimize_two_client(l, l, k).expect("optimize");
            println!("    l1=l2={l} km k_total={k}: optimum {:?} R={:.6}", best.allocation, best.rates.switch_rate);
            if best.allocation != vec![k / 2, k / 2] {
                misses.push(format!("l={l},k={k}->{:?}", best.allocation));
            }
        }
    }
    let detail = if misses.is_empty() {
        "k1 = k2 at all 15 settings".to_string()
    } else {
        format!("asymmetric optimum at {}", misses.join(" "))
    };
    r.record("1 symmetric two-client optimum", misses.is_empty(), detail, t);
}

fn asymmetric_bound(ev: &Evaluator, r: &mut Report) {
    let t = Instant::now();
    let mut worst = Vec::new();
    let mut pass = true;
    for (k, bound) in [(10u32, 0.1), (50, 0.06)] {
        let mut max_dev: f64 = 0.0;
        for i in 0..DISTANCES.len() {
            for j in i + 1..DISTANCES.len() {
                let (l1, l2) = (DISTANCES[i], DISTANCES[j]);
                let best = ev.optimize_two_client(l1, l2, k).expect("optimize");
                let dev = (f64::from(best.allocation[0]) - f64::from(best.allocation[1])).abs() / (2.0 * f64::from(k));
                println!("    ({l1}, {l2}) km k_total={k}: optimum {:?} deviation {dev:.3}", best.allocation);
                max_dev = max_dev.max(dev);
            }
        }
        pass &= max_dev <= bound;
        worst.push(format!("k={k}: max |k1-k2|/(2k) = {max_dev:.3} (bound {bound})"));
    }
    r.record("2 asymmetric deviation bound", pass, worst.join("; "), t);
}

fn placement(ev: &Evaluator, r: &mut Report) {
    let t = Instant::now();
    let grid = [0.1, 0.3, 0.5, 0.7, 0.9];
    let mut found = Vec::new();
    let mut pass = true;
    for l_total in [1.0, 2.0, 4.0] {
        let res = ev.optimize_placement(l_total, 20, &grid).expect("placement");
        let rates: Vec<String> = res.points.iter().map(|p| format!("{:.5}", p.rate)).collect();
        println!("    l_total={l_total} km: R(f) = [{}], argmax f = {}", rates.join(", "), res.best_fraction);
        pass &= res.best_fraction == 0.5;
        found.push(format!("l_total={l_total}: f*={}", res.best_fraction));
    }
    r.record("3 placement optimum at f = 0.5", pass, found.join(", "), t);
}

fn saturation(r: &mut Report) {
    let t = Instant::now();
    // Independent replicas (fresh seeds) give the Monte Carlo standard error
    // of the increment difference.
    let reps = 10;
    let mut diffs = Vec::with_capacity(reps);
    let mut means = [0.0; 3];
    for rep in 0..reps {
        let ev = Evaluator::new(inputs(SEED + 1000 + rep as u64)).expect("inputs");
        let pm: Vec<f64> = [10u32, 20, 50]
            .iter()
            .map(|&k| {
                let topo = Topology::two_client(1.0, 1.0, k).expect("topology");
                ev.evaluate_allocation(&topo, &[k / 2, k / 2]).expect("rate").per_mode_rate
            })
            .collect();
        for i in 0..3 {
            means[i] += pm[i] / reps as f64;
        }
        diffs.push((pm[1] - pm[0]) - (pm[2] - pm[1]));
    }
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let se = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    let pass = mean > 3.0 * se;
    r.record(
        "4 per-mode rate saturation",
        pass,
        format!(
            "per-mode rate at k=10/20/50: {:.5}/{:.5}/{:.5}; (inc 10->20) - (inc 20->50) = {mean:.2e} vs 3 SE = {:.2e}",
            means[0],
            means[1],
            means[2],
            3.0 * se
        ),
        t,
    );
}

fn dominant_client(ev: &Evaluator, r: &mut Report) {
    let t = Instant::now();
    let topo = Topology::with_datacenter(&[0.5, 1.0, 2.0], 5.0, 20).expect("topology");
    let sweep = ev.dominant_client_sweep(&topo).expect("sweep");
    let spread = (sweep.max - sweep.min) / sweep.mean;
    r.record(
        "5a dominant-client std(R_s) < 0.01",
        sweep.std < 0.01,
        format!(
            "{} allocations: mean {:.5}, std {:.5}, min {:.5}, max {:.5}, (max-min)/mean {:.3}",
            sweep.rows.len(),
            sweep.mean,
            sweep.std,
            sweep.min,
            sweep.max,
            spread
        ),
        t,
    );

    let t = Instant::now();
    let far = ev
        .evaluate_allocation(&Topology::two_client(5.0, 5.0, 20).expect("topology"), &[10, 10])
        .expect("rate")
        .switch_rate;
    let mixed = ev
        .evaluate_allocation(&Topology::two_client(0.5, 5.0, 20).expect("topology"), &[10, 10])
        .expect("rate")
        .switch_rate;
    let rel = (far - mixed).abs() / far.max(mixed);
    r.record(
        "5b dominant distance governs the rate",
        rel <= 0.05,
        format!("R_s(5,5) = {far:.5}, R_s(0.5,5) = {mixed:.5}, relative gap {:.1}% (bound 5%)", 100.0 * rel),
        t,
    );
}

fn fairness_behaviour(ev: &Evaluator, r: &mut Report) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut ok = fairness(&[0.3, 0.3, 0.3]).unwrap().value == 0.0 && fairness(&[1e-3; 7]).unwrap().value == 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(2..8);
        let rates: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let c = 10f64.powf(rng.random_range(-3.0..3.0));
        let scaled: Vec<f64> = rates.iter().map(|x| x * c).collect();
        ok &= (fairness(&rates).unwrap().value - fairness(&scaled).unwrap().value).abs() <= 1e-12;
    }
    let base = Topology::with_datacenter(&[0.5, 1.0, 2.0], 5.0, 12).expect("topology");
    let k_totals = [12, 20, 28, 36];
    let points = ev.fairness_sweep(&base, &k_totals).expect("sweep");
    let fs: Vec<f64> = points.iter().map(|p| p.report.fairness.value).collect();
    for p in &points {
        println!(
            "    k_total={}: fairest allocation {:?} F={:.4} R_s={:.5}",
            p.k_total, p.allocation, p.report.fairness.value, p.report.switch_rate
        );
    }
    let monotone = fs.windows(2).all(|w| w[1] <= w[0]);
    r.record(
        "6 fairness properties and sweep",
        ok && monotone,
        format!(
            "equal->0 and scale invariance {}; best F over k_total {:?} = {:?} {}",
            if ok { "hold" } else { "VIOLATED" },
            k_totals,
            fs.iter().map(|f| format!("{f:.4}")).collect::<Vec<_>>(),
            if monotone { "nonincreasing" } else { "NOT nonincreasing" }
        ),
        t,
    );
}

/// Exhaustive Steane statistics for i.i.d. flips: parity rows written out
/// explicitly, correction on the qubit named by the syndrome.
fn steane_exhaustive(p: f64) -> (f64, [f64; 2]) {
    const ROWS: [u8; 3] = [0b1010101, 0b1100110, 0b1111000];
    let (mut t, mut err) = (0.0, [0.0; 2]);
    let mut mass = [0.0; 2];
    for e in 0u8..128 {
        let w = e.count_ones() as i32;
        let prob = p.powi(w) * (1.0 - p).powi(7 - w);
        let s = ROWS.iter().enumerate().fold(0u8, |acc, (i, row)| acc | (((row & e).count_ones() as u8 & 1) << i));
        let corrected = if s == 0 { e } else { e ^ (1 << (s - 1)) };
        let class = usize::from(s != 0);
        mass[class] += prob;
        if corrected.count_ones() % 2 == 1 {
            err[class] += prob;
        }
        if s != 0 {
            t += prob;
        }
    }
    (t, [err[0] / mass[0], err[1] / mass[1]])
}

fn oracles(r: &mut Report) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut failures = Vec::new();

    // Steane Monte Carlo vs exhaustive enumeration, 3 standard errors.
    let samples = 200_000u64;
    for p in [0.01, 0.05, 0.1] {
        let (t_ex, q_ex) = steane_exhaustive(p);
        let mc = estimate_inner_stats_iid(p, samples, &mut rng).unwrap();
        let n = samples as f64;
        let checks = [
            (mc.t_x, t_ex, n),
            (mc.t_z, t_ex, n),
            (mc.q_inner_x[0], q_ex[0], n * (1.0 - t_ex)),
            (mc.q_inner_x[1], q_ex[1], n * t_ex),
            (mc.q_inner_z[0], q_ex[0], n * (1.0 - t_ex)),
            (mc.q_inner_z[1], q_ex[1], n * t_ex),
        ];
        for (got, want, m) in checks {
            let se = (want * (1.0 - want) / m).sqrt().max(1e-12);
            if (got - want).abs() > 3.0 * se {
                failures.push(format!("steane p={p}: {got} vs {want} (3 SE = {})", 3.0 * se));
            }
        }
    }

    // Σ_m p(m) = 1.
    for _ in 0..1000 {
        let tv = [rng.random::<f64>(), rng.random::<f64>()];
        let total: f64 = [[false, false], [false, true], [true, false], [true, true]]
            .iter()
            .map(|m| syndrome_prob(m, &tv).unwrap())
            .sum();
        if (total - 1.0).abs() > 1e-12 {
            failures.push(format!("normalization {total}"));
        }
    }

    // Product form vs iterated XOR on 10³ random inputs.
    for _ in 0..1000 {
        let q: Vec<f64> = (0..2).map(|_| rng.random::<f64>() * 0.5).collect();
        let prod = end_to_end_from_parts(&[false, false], &[[q[0], 0.9], [q[1], 0.9]]).unwrap();
        let iter = combine_leaf_error(q[0], q[1]).unwrap();
        if (prod - iter).abs() > 1e-12 || !(0.0..=0.5).contains(&prod) {
            failures.push(format!("xor {prod} vs {iter}"));
        }
    }

    // rate_e2e vs term-by-term enumeration on synthetic fixtures.
    for _ in 0..200 {
        let leaf = |rng: &mut ChaCha8Rng| InnerLeafStats {
            t_x: rng.random::<f64>() * 0.3,
            t_z: rng.random::<f64>() * 0.3,
            q_inner_x: [rng.random::<f64>() * 0.02, rng.random::<f64>() * 0.2],
            q_inner_z: [rng.random::<f64>() * 0.02, rng.random::<f64>() * 0.2],
        };
        let inner = [leaf(&mut rng), leaf(&mut rng)];
        let k = rng.random_range(1..6);
        let outer = [0, 1].map(|_| OuterErrors {
            q_x: (0..k).map(|_| rng.random::<f64>() * 0.03).collect(),
            q_z: (0..k).map(|_| rng.random::<f64>() * 0.03).collect(),
        });
        let conn = ConnectionStats::new(inner, outer).unwrap();
        let fast = rate_e2e(&conn);
        let slow = enumerate_rate(&conn);
        if (fast - slow).abs() > 1e-12 {
            failures.push(format!("rate {fast} vs {slow}"));
        }
    }

    // error_likelihood n_max self-consistency.
    for _ in 0..1000 {
        let x = rng.random_range(-0.886..0.886);
        let s2 = rng.random_range(0.01..0.5);
        let a = error_likelihood(x, s2, 10).unwrap();
        let b = error_likelihood(x, s2, 20).unwrap();
        if (a - b).abs() > 1e-12 {
            failures.push(format!("likelihood n_max {a} vs {b}"));
        }
    }

    let pass = failures.is_empty();
    let detail = if pass {
        "Steane MC within 3 SE; normalization, XOR, rate enumeration, n_max consistency hold".to_string()
    } else {
        failures.into_iter().take(5).collect::<Vec<_>>().join("; ")
    };
    r.record("7 oracle equivalence suites", pass, detail, t);
}

fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

fn enumerate_rate(conn: &ConnectionStats) -> f64 {
    let mut total = 0.0;
    for j in 0..conn.k_main {
        for m in 0..16u32 {
            let bit = |i: u32| ((m >> i) & 1) as usize;
            let (mx, mz) = ([bit(0), bit(1)], [bit(2), bit(3)]);
            let mut px = 1.0;
            let mut pz = 1.0;
            let mut sx = 1.0;
            let mut sz = 1.0;
            for e in 0..2 {
                let leaf = &conn.inner[e];
                px *= if mx[e] == 1 { leaf.t_x } else { 1.0 - leaf.t_x };
                pz *= if mz[e] == 1 { leaf.t_z } else { 1.0 - leaf.t_z };
                let qx = leaf.q_inner_x[mx[e]] + conn.outer[e].q_x[j]
                    - 2.0 * leaf.q_inner_x[mx[e]] * conn.outer[e].q_x[j];
                let qz = leaf.q_inner_z[mz[e]] + conn.outer[e].q_z[j]
                    - 2.0 * leaf.q_inner_z[mz[e]] * conn.outer[e].q_z[j];
                sx *= 1.0 - 2.0 * qx;
                sz *= 1.0 - 2.0 * qz;
            }
            let r = 1.0 - h2(0.5 * (1.0 - sx)) - h2(0.5 * (1.0 - sz));
            total += px * pz * r.max(0.0);
        }
    }
    total
}

fn germ_properties(r: &mut Report) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut violations = 0usize;
    let outcome = |p: f64| {
        let mut o = BsmOutcome::from_quadratures(0.0, 0.0, 0.1, 10).unwrap();
        o.p_no_error = p;
        o
    };
    for _ in 0..1000 {
        let n = rng.random_range(2..6u32);
        let rounds: Vec<ClientRound> = (0..n)
            .map(|c| {
                let k = rng.random_range(0..8);
                ClientRound {
                    client: ClientId(c),
                    links: rank_links((0..k).map(|_| outcome(rng.random_range(0.25..1.0))).collect()),
                }
            })
            .collect();

        // Single connection: exactly min(k1, k2) pairs.
        let single = ConnectionSet::new([(ClientId(0), ClientId(1))]).unwrap();
        let m = germ_match(&rounds[..2], &single);
        if m.pairs.len() != rounds[0].links.len().min(rounds[1].links.len()) {
            violations += 1;
        }

        // Random allowed sets: no same-client pairs, no disallowed pairs,
        // every link accounted for once, deterministic.
        let mut pairs = vec![(ClientId(0), ClientId(1))];
        for a in 0..n {
            for b in a + 1..n {
                if rng.random_bool(0.4) {
                    pairs.push((ClientId(a), ClientId(b)));
                }
            }
        }
        let conns = ConnectionSet::new(pairs).unwrap();
        let m = germ_match(&rounds, &conns);
        let total: usize = rounds.iter().map(|r| r.links.len()).sum();
        let mut seen = std::collections::HashSet::new();
        for &(a, b) in &m.pairs {
            if a.client == b.client || !conns.allows(a.client, b.client) {
                violations += 1;
            }
            for l in [a, b] {
                if !seen.insert((l.client, l.index)) {
                    violations += 1;
                }
            }
        }
        for l in &m.unmatched {
            if !seen.insert((l.client, l.index)) {
                violations += 1;
            }
        }
        if seen.len() != total || m != germ_match(&rounds, &conns) {
            violations += 1;
        }
    }
    r.record(
        "8 GERM protocol properties",
        violations == 0,
        format!("1000 randomized instances, {violations} violations"),
        t,
    );
}

fn main() {
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut report = Report { lines: Vec::new() };
    let ev = Evaluator::new(inputs(SEED)).expect("inputs");

    oracles(&mut report);
    germ_properties(&mut report);
    symmetric_optimum(&ev, &mut report);
    asymmetric_bound(&ev, &mut report);
    placement(&ev, &mut report);
    saturation(&mut report);
    dominant_client(&ev, &mut report);
    fairness_behaviour(&ev, &mut report);

    println!("\nacceptance summary:");
    for (_, line) in &report.lines {
        println!("  {line}");
    }
    let failed = report.lines.iter().filter(|(pass, _)| !pass).count();
    println!("{} passed, {failed} failed", report.lines.len() - failed);
    if strict && failed > 0 {
        std::process::exit(1);
    }
}
