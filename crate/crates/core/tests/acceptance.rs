//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use itertools::Itertools;
use num_bigint::BigUint;
use rand::seq::index::sample as choose_indices;
use rand::Rng;

use pfcycles::completions::{
    completions_count, completions_count_block, completions_count_bruteforce, OccupiedVector,
};
use pfcycles::distributions::{
    empirical_joint_distribution, exact_joint_distribution, tv_distance, tv_distance_to_poisson,
};
use pfcycles::exact_math::{
    abel_closed_all_minus_one, abel_closed_last_zero, abel_sum, format_rational, rat, rat_int,
    to_f64, AbelSpec, ExactRational,
};
use pfcycles::moments::{
    cycle_len_prob_bound, enumerated_moments, expected_fixed_points, expected_k_cycles_exact,
    expected_k_cycles_mc, expected_transpositions, total_cycles_stats,
};
use pfcycles::parking::{for_each_parking_function, sample_into, CircleScratch};
use pfcycles::sampling::{run_sharded, worker_rng, DEFAULT_WORKERS};
use pfcycles::stein::{
    ordered_profile_pairs, stein_terms, tv_upper_bound, BCoefficient, SteinMode,
};
use pfcycles::structure::vertex_length_table;
use pfcycles::SeedPlan;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn plan(seed: u64) -> SeedPlan {
    SeedPlan::new(seed, DEFAULT_WORKERS)
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

fn enumeration_counts() -> Verdict {
    let mut notes = Vec::new();
    let mut ok = true;
    let mut last = Duration::ZERO;
    for n in 1..=8usize {
        let start = Instant::now();
        let mut count = 0u64;
        for_each_parking_function(n, false, |_| count += 1).unwrap();
        last = start.elapsed();
        let expected = BigUint::from(n as u64 + 1).pow(n as u32 - 1);
        ok &= BigUint::from(count) == expected;
        notes.push(count.to_string());
    }
    ok &= last < Duration::from_secs(120);
    verdict(
        ok,
        format!("counts [{}], n=8 in {}", notes.join(", "), secs(last)),
    )
}

fn moment_identities() -> Verdict {
    let mut ok = true;
    for n in 1..=7usize {
        let m = enumerated_moments(n, false).unwrap();
        ok &= m.mean(1) == rat_int(1);
        ok &= expected_fixed_points(n).unwrap() == rat_int(1);
        if n >= 2 {
            let tc = rat(n as i64, 2 * (n as i64 + 1));
            ok &= m.mean(2) == tc;
            ok &= expected_transpositions(n).unwrap() == tc;
        }
        for k in 1..=n {
            ok &= m.mean(k) == expected_k_cycles_exact(n, k, false).unwrap();
        }
    }
    let m7 = enumerated_moments(7, false).unwrap();
    verdict(
        ok,
        format!(
            "n<=7 all k exact; E[C_3] at n=7 = {}, E[K_7] = {}",
            format_rational(&m7.mean(3)),
            format_rational(&m7.total_mean)
        ),
    )
}

fn completion_formulas() -> Verdict {
    let mut ok = true;
    let mut exhaustive = 0;
    for n in 1..=5usize {
        for l in 0..=n {
            for v in (1..=n as u32).combinations(l) {
                let o = OccupiedVector::new(n, v).unwrap();
                ok &= completions_count(&o) == completions_count_bruteforce(&o, false).unwrap();
                exhaustive += 1;
            }
        }
    }
    let mut rng = worker_rng(2024, 0);
    for n in [6usize, 7] {
        for _ in 0..200 {
            let l = rng.gen_range(0..=n);
            let mut v: Vec<u32> = choose_indices(&mut rng, n, l)
                .into_iter()
                .map(|i| i as u32 + 1)
                .collect();
            v.sort_unstable();
            let o = OccupiedVector::new(n, v).unwrap();
            ok &= completions_count(&o) == completions_count_bruteforce(&o, false).unwrap();
        }
    }
    let mut blocks = 0;
    for n in 1..=30usize {
        for len in 1..=n {
            for i in 0..=n - len {
                let o = OccupiedVector::block(n, i, len).unwrap();
                ok &= completions_count_block(n, i, len).unwrap() == completions_count(&o);
                blocks += 1;
            }
            let prefix = OccupiedVector::block(n, 0, len).unwrap();
            let closed = rat_int(len as u64 + 1)
                * pfcycles::exact_math::signed_power(
                    &rat_int(n as u64 + 1),
                    n as i64 - len as i64 - 1,
                )
                .unwrap();
            ok &= rat_int(completions_count(&prefix)) == closed;
        }
    }
    verdict(
        ok,
        format!("{exhaustive} exhaustive v (n<=5), 400 random v (n=6,7), {blocks} blocks (n<=30)"),
    )
}

fn abel_identities() -> Verdict {
    let mut ok = true;
    let mut checked = 0;
    for m in 1..=4usize {
        for x in (0..m).map(|_| 1..=5i64).multi_cartesian_product() {
            let xr: Vec<ExactRational> = x.iter().map(|&v| rat_int(v)).collect();
            for n in 0..=8u32 {
                let all = AbelSpec::new(n, xr.clone(), vec![-1; m]).unwrap();
                ok &= abel_sum(&all).unwrap() == abel_closed_all_minus_one(n, &xr).unwrap();
                let mut p = vec![-1; m];
                p[m - 1] = 0;
                let last = AbelSpec::new(n, xr.clone(), p).unwrap();
                ok &= abel_sum(&last).unwrap() == abel_closed_last_zero(n, &xr).unwrap();
                checked += 2;
            }
        }
    }
    verdict(ok, format!("{checked} closed-form evaluations"))
}

fn cycle_length_bound() -> Verdict {
    let mut cycle_ok = true;
    let mut tail_ok = true;
    let mut worst_cycle = 0.0f64;
    let mut worst_tail = (0.0f64, 0usize, 0usize, 0usize);
    for n in 1..=7usize {
        let table = vertex_length_table(n, false).unwrap();
        let pop = rat_int(table.population);
        for a in 0..n {
            for k in 1..=n {
                let bound = cycle_len_prob_bound(n, k).unwrap();
                let p = rat_int(table.on_cycle_of_length[a][k]) / &pop;
                worst_cycle = worst_cycle.max(to_f64(&(p.clone() / &bound)));
                cycle_ok &= p <= bound;
                let p = rat_int(table.tail_of_length[a][k]) / &pop;
                let ratio = to_f64(&(p.clone() / &bound));
                if ratio > worst_tail.0 {
                    worst_tail = (ratio, n, a + 1, k);
                }
                tail_ok &= p <= bound;
            }
        }
    }
    let (ratio, n, a, k) = worst_tail;
    verdict(
        cycle_ok && tail_ok,
        format!(
            "cycle length: {} (max P/bound {worst_cycle:.4}); tail length: {} (max P/bound {ratio:.4} at n={n}, a={a}, k={k})",
            if cycle_ok { "holds" } else { "violated" },
            if tail_ok { "holds" } else { "violated" },
        ),
    )
}

fn sampler_exactness() -> Verdict {
    let samples = 1_600_000u64;
    let counts = run_sharded(
        samples,
        plan(31),
        |rng, count| {
            let mut counts: HashMap<Vec<u32>, u64> = HashMap::new();
            let mut buf = Vec::new();
            let mut scratch = CircleScratch::default();
            for _ in 0..count {
                sample_into(3, rng, &mut buf, &mut scratch);
                *counts.entry(buf.clone()).or_insert(0) += 1;
            }
            counts
        },
        |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        },
    );
    let mut all = Vec::new();
    for_each_parking_function(3, false, |p| all.push(p.to_vec())).unwrap();
    let worst = all
        .iter()
        .map(|p| (counts.get(p).copied().unwrap_or(0) as f64 / samples as f64 - 1.0 / 16.0).abs())
        .fold(0.0, f64::max);
    let ok = counts.len() == 16 && all.len() == 16 && worst < 0.005;
    verdict(ok, format!("16 outcomes, max |freq - 1/16| = {worst:.5}"))
}

fn k_cycle_means() -> Verdict {
    let start = Instant::now();
    let est = expected_k_cycles_mc(2000, 5, 100_000, plan(7)).unwrap();
    let elapsed = start.elapsed();
    let devs: Vec<f64> = est
        .iter()
        .map(|e| (e.k as f64 * e.mean - 1.0).abs())
        .collect();
    let ok = devs.iter().all(|&d| d < 0.05) && elapsed < Duration::from_secs(300);
    let shown = est
        .iter()
        .map(|e| format!("k={} {:.4}+-{:.4}", e.k, e.mean, e.stderr))
        .join(", ");
    verdict(ok, format!("{shown}; {}", secs(elapsed)))
}

fn exchangeability() -> Verdict {
    let pairs = ordered_profile_pairs(3, false).unwrap();
    let ok = pairs
        .iter()
        .all(|((w, w2), c)| pairs.get(&(w2.clone(), w.clone())) == Some(c));
    let total: u64 = pairs.values().sum();
    verdict(
        ok,
        format!(
            "{} distinct ordered pairs, {total} (pi, swap) in total",
            pairs.len()
        ),
    )
}

fn stein_bounds() -> Verdict {
    let mut ok = true;
    let mut quarter = Vec::new();
    let mut margin = f64::INFINITY;
    for n in [5usize, 6] {
        for d in 1..=3 {
            let r = stein_terms(
                n,
                d,
                SteinMode::Exact { force: false },
                BCoefficient::ThirdK,
            )
            .unwrap();
            for rec in &r.records {
                ok &= rec.a_within_bound() && rec.b_within_bound();
                margin = margin
                    .min(to_f64(&rec.bound_a) - rec.term_a)
                    .min(to_f64(&rec.bound_b) - rec.term_b);
            }
            let q = stein_terms(
                n,
                d,
                SteinMode::Exact { force: false },
                BCoefficient::QuarterK,
            )
            .unwrap();
            let holds = q.records.iter().all(|rec| rec.b_within_bound());
            quarter.push(format!(
                "n={n},d={d}:{}",
                if holds { "holds" } else { "fails" }
            ));
        }
    }
    verdict(
        ok,
        format!(
            "c_B=n/(3k): min slack {margin:.3}; c_B=n/(4k): {}",
            quarter.join(" ")
        ),
    )
}

fn tv_checks() -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for d in [1usize, 2] {
        let tv = tv_distance_to_poisson(&exact_joint_distribution(7, d, false).unwrap());
        let bound = to_f64(&tv_upper_bound(7, d).unwrap());
        ok &= tv <= bound.min(1.0);
        notes.push(format!("n=7 d={d} tv={tv:.6} bound={bound:.3}"));
    }
    let tv4 = tv_distance_to_poisson(&exact_joint_distribution(4, 1, false).unwrap());
    let tv8 = tv_distance_to_poisson(&exact_joint_distribution(8, 1, false).unwrap());
    ok &= tv8 < tv4;
    notes.push(format!("d=1 tv n=4 {tv4:.6} > n=8 {tv8:.6}"));

    let exact = exact_joint_distribution(7, 2, false).unwrap();
    let emp = empirical_joint_distribution(7, 2, 1_000_000, plan(99)).unwrap();
    let tv_exact = tv_distance_to_poisson(&exact);
    let tv_emp = tv_distance_to_poisson(&emp);
    let gap = tv_distance(&exact, &emp).unwrap();
    ok &= (tv_emp - tv_exact).abs() <= 0.01 && gap <= 0.01;
    notes.push(format!("empirical tv={tv_emp:.6}, law gap={gap:.5}"));
    verdict(ok, notes.join("; "))
}

fn total_cycles_order() -> Verdict {
    let n = 10_000usize;
    let t = total_cycles_stats(n, 10_000, plan(5)).unwrap();
    let ratio = t.mean / (n as f64).ln();
    let ok = (0.25..=1.5).contains(&ratio);
    verdict(
        ok,
        format!(
            "mean K = {:.4}+-{:.4}, H_n = {:.4}, mean/ln n = {ratio:.4}",
            t.mean,
            t.stderr,
            to_f64(&t.harmonic)
        ),
    )
}

/// Not scored: the large-n Monte Carlo comparison of the Stein terms with
/// their explicit bounds.
fn stein_large_n_note() -> String {
    let r = stein_terms(
        1000,
        3,
        SteinMode::MonteCarlo {
            samples: 10_000,
            plan: plan(1),
        },
        BCoefficient::ThirdK,
    )
    .unwrap();
    r.records
        .iter()
        .map(|rec| {
            format!(
                "k={} A {:.4}+-{:.4} vs {:.4}, B {:.4}+-{:.4} vs {:.4}",
                rec.k,
                rec.term_a,
                rec.term_a_stderr.unwrap(),
                to_f64(&rec.bound_a),
                rec.term_b,
                rec.term_b_stderr.unwrap(),
                to_f64(&rec.bound_b)
            )
        })
        .join("; ")
}

fn main() {
    type Check = fn() -> Verdict;
    let criteria: [(&str, Check); 11] = [
        ("enumeration totals (n+1)^(n-1), n=1..8", enumeration_counts),
        ("exact moment identities, n<=7", moment_identities),
        (
            "completion formulas vs oracle and block/prefix forms",
            completion_formulas,
        ),
        ("Abel closed forms vs direct sums", abel_identities),
        (
            "cycle and tail length probability bound, n<=7",
            cycle_length_bound,
        ),
        ("uniform sampler at n=3, 1.6e6 samples", sampler_exactness),
        ("k-cycle means at n=2000, 1e5 samples", k_cycle_means),
        ("exchangeable pair symmetry at n=3", exchangeability),
        (
            "exact Stein terms within bounds, n in {5,6}, d<=3",
            stein_bounds,
        ),
        ("total variation checks at small n", tv_checks),
        ("total cycle count order at n=1e4", total_cycles_order),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        if !v.pass {
            failures += 1;
        }
        println!(
            "{} [{:>2}] {name}: {} ({})",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail,
            secs(start.elapsed())
        );
    }
    println!(
        "NOTE Stein terms by Monte Carlo at n=1000, d=3 (not scored): {}",
        stein_large_n_note()
    );
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
