//! Exchangeable pair for cycle counts and the Poisson approximation terms.
//!
//! The pair move swaps the preferences at two uniformly chosen positions
//! `a < b`. With `W = (C_1, ..., C_d)` and `W'` the counts after the move,
//! event `A_k` means `C'_k = C_k + 1` and `B_k` means `C'_k = C_k - 1`, in both
//! cases with `C'_j = C_j` for `k < j <= d`. Event probabilities are always
//! read off actual before/after cycle counts.
//!
//! Two routes compute per-sequence event counts:
//!
//! * [`event_counts_bruteforce`] recounts cycles after every one of the
//!   `C(n,2)` swaps, `O(n^3)` per sequence.
//! * [`event_counts_fast`] recomputes only the cycles through `a` and `b`
//!   (the only ones a swap can create or destroy) in `O(1)` per pair, and
//!   only visits pairs that can touch a cycle of length `<= d`, giving
//!   `O(n d log n)` per sequence. Used for Monte Carlo at large `n`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::error::{guard, Error, Result};
use crate::exact_math::{rat, rat_int, serde_rational, serde_rational_opt, to_f64, ExactRational};
use crate::moments::mean_and_stderr_f64;
use crate::parking::{for_each_parking_function, sample_into, CircleScratch, PrefSeq};
use crate::sampling::{run_sharded, SeedPlan};
use crate::structure::{CycleCounter, CycleProfile, FunctionalGraph};

/// Default size guard for exact Stein terms.
pub const EXACT_STEIN_GUARD: usize = 7;

/// Swaps the preferences of cars `a < b` (1-based).
pub fn transpose_entries(seq: &PrefSeq, a: usize, b: usize) -> Result<PrefSeq> {
    if a == 0 || a >= b || b > seq.len() {
        return Err(Error::invalid(format!(
            "need 1 <= a < b <= {}, got a = {a}, b = {b}",
            seq.len()
        )));
    }
    let mut out = seq.clone();
    out.swap(a - 1, b - 1);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairEvent {
    /// `C_k` rose by one, `C_{k+1..d}` unchanged.
    A,
    /// `C_k` fell by one, `C_{k+1..d}` unchanged.
    B,
    Neither,
}

fn check_kd(k: usize, d: usize, n: usize) -> Result<()> {
    if k == 0 || k > d || d > n {
        return Err(Error::invalid(format!(
            "need 1 <= k <= d <= n, got k = {k}, d = {d}, n = {n}"
        )));
    }
    Ok(())
}

/// Classifies the move `w -> w_after` for level `k` with truncation `d`.
pub fn classify_transition(
    w: &CycleProfile,
    w_after: &CycleProfile,
    k: usize,
    d: usize,
) -> Result<PairEvent> {
    check_kd(k, d, w.n)?;
    let delta = |j: usize| w_after.count(j) as i64 - w.count(j) as i64;
    Ok(classify_delta(k, d, delta))
}

fn classify_delta(k: usize, d: usize, delta: impl Fn(usize) -> i64) -> PairEvent {
    if ((k + 1)..=d).any(|j| delta(j) != 0) {
        return PairEvent::Neither;
    }
    match delta(k) {
        1 => PairEvent::A,
        -1 => PairEvent::B,
        _ => PairEvent::Neither,
    }
}

/// For one sequence: how many of the `C(n,2)` swaps trigger `A_k` and `B_k`,
/// for every `k <= d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventCounts {
    pub pairs: u64,
    /// `a[k-1]` swaps trigger `A_k`.
    pub a: Vec<u64>,
    pub b: Vec<u64>,
}

impl EventCounts {
    fn new(n: usize, d: usize) -> Self {
        EventCounts {
            pairs: (n * n.saturating_sub(1) / 2) as u64,
            a: vec![0; d],
            b: vec![0; d],
        }
    }

    fn record(&mut self, d: usize, delta: impl Fn(usize) -> i64) {
        for k in 1..=d {
            match classify_delta(k, d, &delta) {
                PairEvent::A => self.a[k - 1] += 1,
                PairEvent::B => self.b[k - 1] += 1,
                PairEvent::Neither => {}
            }
        }
    }
}

/// Event counts by recounting cycles after every swap.
pub fn event_counts_bruteforce(prefs: &[u32], d: usize) -> EventCounts {
    let n = prefs.len();
    let mut counter = CycleCounter::default();
    let mut before = Vec::new();
    let mut after = Vec::new();
    counter.count_into(prefs, &mut before);
    let mut work = prefs.to_vec();
    let mut out = EventCounts::new(n, d);
    let at = |v: &[u32], j: usize| v.get(j - 1).copied().unwrap_or(0) as i64;
    for a in 0..n {
        for b in a + 1..n {
            work.swap(a, b);
            counter.count_into(&work, &mut after);
            out.record(d, |j| at(&after, j) - at(&before, j));
            work.swap(a, b);
        }
    }
    out
}

/// Exact `(P(A_k | seq), P(B_k | seq))` over a uniform swap.
///
/// With fewer than two positions there is no swap and both are zero.
pub fn conditional_event_probs(
    seq: &PrefSeq,
    k: usize,
    d: usize,
) -> Result<(ExactRational, ExactRational)> {
    let n = seq.len();
    check_kd(k, d, n)?;
    let counts = event_counts_bruteforce(seq.prefs(), d);
    if counts.pairs == 0 {
        return Ok((rat_int(0), rat_int(0)));
    }
    let p = rat_int(counts.pairs);
    Ok((rat_int(counts.a[k - 1]) / &p, rat_int(counts.b[k - 1]) / p))
}

/// Constant-time orbit queries on a functional graph: the number of
/// successor steps from one vertex to another.
struct OrbitIndex<'g> {
    graph: &'g FunctionalGraph,
    /// Entry/exit times of each vertex in the forest obtained by cutting
    /// every cycle edge (cycle vertices are the roots).
    enter: Vec<u32>,
    exit: Vec<u32>,
    /// Preimages in CSR form.
    pre_start: Vec<u32>,
    pre: Vec<u32>,
}

impl<'g> OrbitIndex<'g> {
    fn new(graph: &'g FunctionalGraph) -> Self {
        let succ = graph.succ0();
        let n = succ.len();
        let mut pre_start = vec![0u32; n + 1];
        for &s in succ {
            pre_start[s as usize + 1] += 1;
        }
        for i in 0..n {
            pre_start[i + 1] += pre_start[i];
        }
        let mut fill = pre_start.clone();
        let mut pre = vec![0u32; n];
        for (v, &s) in succ.iter().enumerate() {
            pre[fill[s as usize] as usize] = v as u32;
            fill[s as usize] += 1;
        }

        let tail = graph.tail0();
        let mut enter = vec![0u32; n];
        let mut exit = vec![0u32; n];
        let mut clock = 0u32;
        // Iterative DFS over tree children (preimages that are tree vertices).
        let mut stack: Vec<(u32, u32)> = Vec::new();
        for r in 0..n {
            if tail[r] != 0 {
                continue;
            }
            enter[r] = clock;
            clock += 1;
            stack.push((r as u32, pre_start[r]));
            while let Some(top) = stack.last_mut() {
                let (v, next) = *top;
                if next < pre_start[v as usize + 1] {
                    top.1 += 1;
                    let c = pre[next as usize];
                    if tail[c as usize] != 0 {
                        enter[c as usize] = clock;
                        clock += 1;
                        stack.push((c, pre_start[c as usize]));
                    }
                } else {
                    exit[v as usize] = clock;
                    stack.pop();
                }
            }
        }
        OrbitIndex {
            graph,
            enter,
            exit,
            pre_start,
            pre,
        }
    }

    fn preimages(&self, v: u32) -> &[u32] {
        &self.pre[self.pre_start[v as usize] as usize..self.pre_start[v as usize + 1] as usize]
    }

    /// Steps from `u` to `x` along successors, if `x` is on the orbit of `u`.
    fn distance(&self, u: u32, x: u32) -> Option<u32> {
        let g = self.graph;
        let (u, x) = (u as usize, x as usize);
        let tail = g.tail0();
        if tail[x] > 0 {
            let below = self.enter[x] <= self.enter[u] && self.enter[u] < self.exit[x];
            return below.then(|| tail[u] - tail[x]);
        }
        let r = g.root0()[u] as usize;
        let ids = g.cycle_id0();
        if ids[r] != ids[x] {
            return None;
        }
        let len = g.cycle_len_by_id(ids[x]);
        let pos = g.cycle_pos0();
        Some(tail[u] + (pos[x] + len - pos[r]) % len)
    }

    /// First of `a`, `b` reached from `start`, with the step count.
    fn first_hit(&self, start: u32, a: u32, b: u32) -> Option<(u32, u32)> {
        match (self.distance(start, a), self.distance(start, b)) {
            (Some(da), Some(db)) => Some(if da <= db { (a, da) } else { (b, db) }),
            (Some(da), None) => Some((a, da)),
            (None, Some(db)) => Some((b, db)),
            (None, None) => None,
        }
    }

    /// Cycle-length changes caused by swapping the successors of `a` and `b`:
    /// pushes `(length, +1)` for each new cycle and `(length, -1)` for each
    /// destroyed one.
    fn swap_delta(&self, a: u32, b: u32, out: &mut Vec<(u32, i32)>) {
        out.clear();
        let g = self.graph;
        let succ = g.succ0();
        if succ[a as usize] == succ[b as usize] {
            return;
        }
        let ids = g.cycle_id0();
        let (ca, cb) = (ids[a as usize], ids[b as usize]);
        if g.tail0()[a as usize] == 0 {
            out.push((g.cycle_len_by_id(ca), -1));
        }
        if g.tail0()[b as usize] == 0 && cb != ca {
            out.push((g.cycle_len_by_id(cb), -1));
        }
        // After the swap a -> succ(b) and b -> succ(a); everything else keeps
        // its successor, so follow old orbits until one of a, b is reached.
        let from_a = self.first_hit(succ[b as usize], a, b);
        let from_b = self.first_hit(succ[a as usize], a, b);
        match (from_a, from_b) {
            (Some((ta, wa)), Some((tb, wb))) if ta == b && tb == a => {
                out.push((wa + wb + 2, 1));
            }
            _ => {
                if let Some((t, w)) = from_a {
                    if t == a {
                        out.push((w + 1, 1));
                    }
                }
                if let Some((t, w)) = from_b {
                    if t == b {
                        out.push((w + 1, 1));
                    }
                }
            }
        }
    }
}

/// Event counts using local cycle surgery; agrees exactly with
/// [`event_counts_bruteforce`].
pub fn event_counts_fast(prefs: &[u32], d: usize) -> EventCounts {
    let n = prefs.len();
    let graph = FunctionalGraph::from_successors(prefs.iter().map(|&p| p - 1).collect());
    let index = OrbitIndex::new(&graph);
    let mut out = EventCounts::new(n, d);
    if n < 2 || d == 0 {
        return out;
    }
    let tail = graph.tail0();
    let ids = graph.cycle_id0();
    let key = |x: u32, y: u32| -> u64 {
        let (lo, hi) = if x < y { (x, y) } else { (y, x) };
        ((lo as u64) << 32) | hi as u64
    };
    let mut candidates: Vec<u64> = Vec::new();

    // Pairs touching an existing cycle of length <= d.
    for s in 0..n as u32 {
        if tail[s as usize] == 0 && graph.cycle_len_by_id(ids[s as usize]) as usize <= d {
            candidates.extend((0..n as u32).filter(|&t| t != s).map(|t| key(s, t)));
        }
    }
    // Pairs {x, y} where succ(y) reaches x within d - 1 steps, so the swap
    // can close a cycle of length <= d through x.
    let succ = graph.succ0();
    let mut frontier: Vec<u32> = Vec::new();
    let mut next: Vec<u32> = Vec::new();
    for x in 0..n as u32 {
        frontier.clear();
        frontier.push(x);
        for depth in 0..d {
            for &z in &frontier {
                for &y in index.preimages(z) {
                    if y != x {
                        candidates.push(key(x, y));
                    }
                }
            }
            if depth + 1 == d {
                break;
            }
            next.clear();
            for &z in &frontier {
                // Preimages of z within the backward ball, excluding x itself
                // (walks through x are covered at smaller depth).
                next.extend(index.preimages(z).iter().copied().filter(|&y| y != x));
            }
            std::mem::swap(&mut frontier, &mut next);
            if frontier.is_empty() {
                break;
            }
        }
    }
    candidates.sort_unstable();
    candidates.dedup();

    let mut delta = Vec::with_capacity(4);
    let mut by_len = vec![0i64; d + 1];
    for c in candidates {
        let (a, b) = ((c >> 32) as u32, c as u32);
        debug_assert!(a != b && succ.len() > b as usize);
        index.swap_delta(a, b, &mut delta);
        by_len.iter_mut().for_each(|v| *v = 0);
        for &(len, change) in &delta {
            if (len as usize) <= d {
                by_len[len as usize] += change as i64;
            }
        }
        out.record(d, |j| by_len[j]);
    }
    out
}

/// Multiplicities of ordered cycle-count pairs `(W, W')`.
pub type ProfilePairCounts = BTreeMap<(Vec<u32>, Vec<u32>), u64>;

/// Multiset of ordered profile pairs `(W, W')` over every parking function
/// and every unordered swap.
pub fn ordered_profile_pairs(n: usize, force: bool) -> Result<ProfilePairCounts> {
    guard("exchangeable pair enumeration", n, EXACT_STEIN_GUARD, force)?;
    let mut out = BTreeMap::new();
    let mut counter = CycleCounter::default();
    let (mut before, mut after) = (Vec::new(), Vec::new());
    for_each_parking_function(n, force, |prefs| {
        counter.count_into(prefs, &mut before);
        let mut work = prefs.to_vec();
        for a in 0..n {
            for b in a + 1..n {
                work.swap(a, b);
                counter.count_into(&work, &mut after);
                *out.entry((before.clone(), after.clone())).or_insert(0) += 1;
                work.swap(a, b);
            }
        }
    })?;
    Ok(out)
}

/// `(d^2+2dk+d+6k^2+4k+1)/(k(n-1)) + (dk+2k^2+10k+3)/(n-k)`.
pub fn lemma_bound_a(n: usize, k: usize, d: usize) -> Result<ExactRational> {
    check_bound_args(n, k, d)?;
    let (n, k, d) = (n as i64, k as i64, d as i64);
    Ok(
        rat(d * d + 2 * d * k + d + 6 * k * k + 4 * k + 1, k * (n - 1))
            + rat(d * k + 2 * k * k + 10 * k + 3, n - k),
    )
}

/// `(k+1)/(n-1) + (2d^2k+2d^2+dk^3-dk^2+2d+4k^3+2k^2+2)/(k(n-k))`.
pub fn lemma_bound_b(n: usize, k: usize, d: usize) -> Result<ExactRational> {
    check_bound_args(n, k, d)?;
    let (n, k, d) = (n as i64, k as i64, d as i64);
    let num =
        2 * d * d * k + 2 * d * d + d * k.pow(3) - d * k * k + 2 * d + 4 * k.pow(3) + 2 * k * k + 2;
    Ok(rat(k + 1, n - 1) + rat(num, k * (n - k)))
}

fn check_bound_args(n: usize, k: usize, d: usize) -> Result<()> {
    if k == 0 || k > d || d >= n {
        return Err(Error::invalid(format!(
            "need 1 <= k <= d < n, got k = {k}, d = {d}, n = {n}"
        )));
    }
    Ok(())
}

/// Total variation bound for `(C_1..C_d)` against independent Poisson(1/k):
/// `(4d^3+7d^2+4d)/(n-1) + (7d^3+39d^2+50d)/(6(n-d)) + (d^2+3d)/(2(n+1))
///  + (3d^5+26d^4+65d^3+46d^2+28d)/(12(n-d))`.
pub fn tv_upper_bound(n: usize, d: usize) -> Result<ExactRational> {
    if d == 0 || d >= n {
        return Err(Error::invalid(format!(
            "need 1 <= d < n, got d = {d}, n = {n}"
        )));
    }
    let (n, d) = (BigInt::from(n), BigInt::from(d));
    let r = |num: BigInt, den: BigInt| ExactRational::new(num, den);
    let d2 = &d * &d;
    let d3 = &d2 * &d;
    let d4 = &d3 * &d;
    let d5 = &d4 * &d;
    Ok(r(4 * &d3 + 7 * &d2 + 4 * &d, &n - 1)
        + r(7 * &d3 + 39 * &d2 + 50 * &d, 6 * (&n - &d))
        + r(&d2 + 3 * &d, 2 * (&n + 1))
        + r(
            3 * &d5 + 26 * &d4 + 65 * &d3 + 46 * &d2 + 28 * &d,
            12 * (&n - &d),
        ))
}

/// Choice of `c_k` in the `B_k` term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BCoefficient {
    /// `c_k = n/(3k)`
    #[default]
    ThirdK,
    /// `c_k = n/(4k)`, the same constant as the `A_k` term.
    QuarterK,
}

impl BCoefficient {
    fn divisor(self) -> i64 {
        match self {
            BCoefficient::ThirdK => 3,
            BCoefficient::QuarterK => 4,
        }
    }

    pub fn value(self, n: usize, k: usize) -> ExactRational {
        rat(n as i64, self.divisor() * k as i64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteinMode {
    Exact { force: bool },
    MonteCarlo { samples: u64, plan: SeedPlan },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteinRecord {
    pub k: usize,
    #[serde(with = "serde_rational")]
    pub lambda_k: ExactRational,
    /// `min(1, 1.4 / sqrt(lambda_k))`; always 1 here since `lambda_k <= 1`.
    pub alpha_k: f64,
    #[serde(with = "serde_rational")]
    pub c_k_a: ExactRational,
    #[serde(with = "serde_rational")]
    pub c_k_b: ExactRational,
    /// `E|lambda_k - c_k P(A_k | pi)|`
    pub term_a: f64,
    #[serde(with = "serde_rational_opt")]
    pub term_a_exact: Option<ExactRational>,
    pub term_a_stderr: Option<f64>,
    /// `E|C_k - c_k P(B_k | pi)|`
    pub term_b: f64,
    #[serde(with = "serde_rational_opt")]
    pub term_b_exact: Option<ExactRational>,
    pub term_b_stderr: Option<f64>,
    #[serde(with = "serde_rational")]
    pub bound_a: ExactRational,
    #[serde(with = "serde_rational")]
    pub bound_b: ExactRational,
}

impl SteinRecord {
    /// Term A does not exceed its bound (exact comparison when available).
    pub fn a_within_bound(&self) -> bool {
        match &self.term_a_exact {
            Some(t) => t <= &self.bound_a,
            None => self.term_a <= to_f64(&self.bound_a),
        }
    }

    pub fn b_within_bound(&self) -> bool {
        match &self.term_b_exact {
            Some(t) => t <= &self.bound_b,
            None => self.term_b <= to_f64(&self.bound_b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteinReport {
    pub n: usize,
    pub d: usize,
    pub method: String,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub c_b_rule: BCoefficient,
    pub records: Vec<SteinRecord>,
    /// Explicit four-term total variation bound.
    #[serde(with = "serde_rational")]
    pub total_bound: ExactRational,
}

/// Integer sums of `|m k P C_k - n b|` style numerators, one per `k`.
#[derive(Debug, Clone, Default)]
struct TermSums {
    population: u64,
    a: Vec<u128>,
    b: Vec<u128>,
}

/// Estimates (or computes exactly) both Stein terms for every `k <= d`.
pub fn stein_terms(n: usize, d: usize, mode: SteinMode, c_b: BCoefficient) -> Result<SteinReport> {
    if d == 0 || d >= n {
        return Err(Error::invalid(format!(
            "need 1 <= d < n, got d = {d}, n = {n}"
        )));
    }
    let pairs = (n * (n - 1) / 2) as i128;
    let m_b = c_b.divisor() as i128;
    let ni = n as i128;

    let base_record = |k: usize| -> Result<SteinRecord> {
        Ok(SteinRecord {
            k,
            lambda_k: rat(1, k as i64),
            alpha_k: (1.4 * (k as f64).sqrt()).min(1.0),
            c_k_a: rat(n as i64, 4 * k as i64),
            c_k_b: c_b.value(n, k),
            term_a: 0.0,
            term_a_exact: None,
            term_a_stderr: None,
            term_b: 0.0,
            term_b_exact: None,
            term_b_stderr: None,
            bound_a: lemma_bound_a(n, k, d)?,
            bound_b: lemma_bound_b(n, k, d)?,
        })
    };
    let mut records = (1..=d).map(base_record).collect::<Result<Vec<_>>>()?;

    // For one sequence, |1/k - (n/4k) a/P| = |4P - n a| / (4kP) and
    // |C_k - (n/(m k)) b/P| = |m k P C_k - n b| / (m k P).
    let numer_a = |a: u64| (4 * pairs - ni * a as i128).unsigned_abs();
    let numer_b = |k: usize, c: u32, b: u64| {
        (m_b * k as i128 * pairs * c as i128 - ni * b as i128).unsigned_abs()
    };

    let (method, samples, seed) = match mode {
        SteinMode::Exact { force } => {
            guard("exact Stein terms", n, EXACT_STEIN_GUARD, force)?;
            let mut sums = TermSums {
                a: vec![0; d],
                b: vec![0; d],
                ..Default::default()
            };
            let mut counter = CycleCounter::default();
            let mut counts = Vec::new();
            for_each_parking_function(n, force, |prefs| {
                counter.count_into(prefs, &mut counts);
                let ev = event_counts_bruteforce(prefs, d);
                sums.population += 1;
                for k in 1..=d {
                    sums.a[k - 1] += numer_a(ev.a[k - 1]);
                    sums.b[k - 1] += numer_b(k, counts[k - 1], ev.b[k - 1]);
                }
            })?;
            let pop = BigInt::from(sums.population);
            for (i, r) in records.iter_mut().enumerate() {
                let k = BigInt::from(i + 1);
                let p = BigInt::from(pairs);
                let ta = ExactRational::new(BigInt::from(sums.a[i]), 4 * &k * &p * &pop);
                let tb = ExactRational::new(BigInt::from(sums.b[i]), m_b * &k * &p * &pop);
                r.term_a = to_f64(&ta);
                r.term_b = to_f64(&tb);
                r.term_a_exact = Some(ta);
                r.term_b_exact = Some(tb);
            }
            ("exact".to_string(), None, None)
        }
        SteinMode::MonteCarlo { samples, plan } => {
            if samples == 0 {
                return Err(Error::invalid("samples must be positive"));
            }
            // Per-k sums and sums of squares of the per-sequence terms.
            #[derive(Default)]
            struct Acc {
                count: u64,
                a: Vec<(f64, f64)>,
                b: Vec<(f64, f64)>,
            }
            let acc = run_sharded(
                samples,
                plan,
                |rng, count| {
                    let mut acc = Acc {
                        count: 0,
                        a: vec![(0.0, 0.0); d],
                        b: vec![(0.0, 0.0); d],
                    };
                    let mut prefs = Vec::with_capacity(n);
                    let mut scratch = CircleScratch::default();
                    let mut counter = CycleCounter::default();
                    let mut counts = Vec::new();
                    for _ in 0..count {
                        sample_into(n, rng, &mut prefs, &mut scratch);
                        counter.count_into(&prefs, &mut counts);
                        let ev = event_counts_fast(&prefs, d);
                        acc.count += 1;
                        for k in 1..=d {
                            let ta = numer_a(ev.a[k - 1]) as f64 / (4 * k as i128 * pairs) as f64;
                            let tb = numer_b(k, counts[k - 1], ev.b[k - 1]) as f64
                                / (m_b * k as i128 * pairs) as f64;
                            acc.a[k - 1].0 += ta;
                            acc.a[k - 1].1 += ta * ta;
                            acc.b[k - 1].0 += tb;
                            acc.b[k - 1].1 += tb * tb;
                        }
                    }
                    acc
                },
                |mut x, y| {
                    x.count += y.count;
                    for (p, q) in x.a.iter_mut().zip(&y.a) {
                        p.0 += q.0;
                        p.1 += q.1;
                    }
                    for (p, q) in x.b.iter_mut().zip(&y.b) {
                        p.0 += q.0;
                        p.1 += q.1;
                    }
                    x
                },
            );
            for (i, r) in records.iter_mut().enumerate() {
                let (ma, sa) = mean_and_stderr_f64(acc.count, acc.a[i].0, acc.a[i].1);
                let (mb, sb) = mean_and_stderr_f64(acc.count, acc.b[i].0, acc.b[i].1);
                r.term_a = ma;
                r.term_a_stderr = Some(sa);
                r.term_b = mb;
                r.term_b_stderr = Some(sb);
            }
            ("mc".to_string(), Some(samples), Some(plan.seed))
        }
    };

    Ok(SteinReport {
        n,
        d,
        method,
        samples,
        seed,
        c_b_rule: c_b,
        records,
        total_bound: tv_upper_bound(n, d)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parking::{enumerate_parking_functions, is_parking_function, sample_uniform};
    use crate::sampling::worker_rng;
    use crate::structure::cycle_profile;
    use proptest::prelude::*;

    const FIG1: [u32; 12] = [6, 1, 2, 4, 1, 9, 1, 6, 8, 4, 2, 10];

    fn seq(v: &[u32]) -> PrefSeq {
        PrefSeq::new(v.to_vec()).unwrap()
    }

    #[test]
    fn transpose_examples() {
        assert_eq!(
            transpose_entries(&seq(&[1, 2]), 1, 2).unwrap(),
            seq(&[2, 1])
        );
        assert_eq!(
            transpose_entries(&seq(&[1, 1]), 1, 2).unwrap(),
            seq(&[1, 1])
        );
        let t = transpose_entries(&seq(&FIG1), 1, 2).unwrap();
        assert_eq!(t, seq(&[1, 6, 2, 4, 1, 9, 1, 6, 8, 4, 2, 10]));
        assert!(is_parking_function(&t));
        assert!(transpose_entries(&seq(&[1, 1]), 2, 1).is_err());
        assert!(transpose_entries(&seq(&[1, 1]), 1, 3).is_err());
    }

    #[test]
    fn transposition_is_an_involution_preserving_parking() {
        for n in 2..=5 {
            for pf in enumerate_parking_functions(n, false).unwrap() {
                for a in 1..=n {
                    for b in a + 1..=n {
                        let t = transpose_entries(&pf, a, b).unwrap();
                        assert!(is_parking_function(&t));
                        assert_eq!(transpose_entries(&t, a, b).unwrap(), pf);
                    }
                }
            }
        }
    }

    #[test]
    fn classification_examples() {
        let w = cycle_profile(&seq(&[2, 1]));
        let w2 = cycle_profile(&seq(&[1, 2]));
        for k in 1..=2 {
            assert_eq!(
                classify_transition(&w, &w, k, 2).unwrap(),
                PairEvent::Neither
            );
        }
        assert_eq!(
            classify_transition(&w, &w2, 1, 2).unwrap(),
            PairEvent::Neither
        );
        assert_eq!(classify_transition(&w, &w2, 2, 2).unwrap(), PairEvent::B);
        let same = cycle_profile(&seq(&[1, 1]));
        assert_eq!(
            classify_transition(&same, &same, 1, 1).unwrap(),
            PairEvent::Neither
        );
        assert!(classify_transition(&w, &w2, 3, 2).is_err());
    }

    #[test]
    fn conditional_probability_examples() {
        assert_eq!(
            conditional_event_probs(&seq(&[1]), 1, 1).unwrap(),
            (rat_int(0), rat_int(0))
        );
        assert_eq!(
            conditional_event_probs(&seq(&[1, 2]), 1, 1).unwrap(),
            (rat_int(0), rat_int(0))
        );
        assert_eq!(
            conditional_event_probs(&seq(&[2, 1]), 2, 2).unwrap().1,
            rat_int(1)
        );
    }

    #[test]
    fn fast_route_matches_bruteforce_exhaustively() {
        for n in 1..=6 {
            for pf in enumerate_parking_functions(n, false).unwrap() {
                for d in 1..=n.min(4) {
                    assert_eq!(
                        event_counts_fast(pf.prefs(), d),
                        event_counts_bruteforce(pf.prefs(), d),
                        "{pf} d={d}"
                    );
                }
            }
        }
    }

    proptest! {
        #[test]
        fn fast_route_matches_bruteforce_on_samples(n in 2usize..40, d in 1usize..6, seed in any::<u64>()) {
            let s = sample_uniform(n, &mut worker_rng(seed, 0));
            let d = d.min(n);
            prop_assert_eq!(event_counts_fast(s.prefs(), d), event_counts_bruteforce(s.prefs(), d));
        }

        #[test]
        fn fast_route_matches_bruteforce_on_any_map(
            prefs in (2usize..25).prop_flat_map(|n| prop::collection::vec(1..=n as u32, n)),
            d in 1usize..5,
        ) {
            let d = d.min(prefs.len());
            prop_assert_eq!(event_counts_fast(&prefs, d), event_counts_bruteforce(&prefs, d));
        }
    }

    #[test]
    fn exchangeable_at_small_n() {
        for n in 2..=4 {
            let pairs = ordered_profile_pairs(n, false).unwrap();
            for ((w, w2), count) in &pairs {
                assert_eq!(pairs.get(&(w2.clone(), w.clone())), Some(count), "n={n}");
            }
        }
    }

    #[test]
    fn bound_values() {
        assert_eq!(lemma_bound_a(7, 1, 2).unwrap(), rat(19, 3));
        assert_eq!(lemma_bound_a(6, 1, 2).unwrap(), rat(38, 5));
        assert_eq!(lemma_bound_a(100, 1, 1).unwrap(), rat(15, 99) + rat(16, 99));
        assert_eq!(lemma_bound_b(100, 1, 1).unwrap(), rat(2, 99) + rat(14, 99));
        // 3/6 + (16 + 8 + 16 - 8 + 4 + 32 + 8 + 2) / (2 * 5)
        assert_eq!(lemma_bound_b(7, 2, 2).unwrap(), rat(1, 2) + rat(78, 10));
        assert!(lemma_bound_a(3, 1, 3).is_err());
        assert!(lemma_bound_b(5, 3, 2).is_err());
        for n in 3..=50 {
            for d in 1..n {
                for k in 1..=d {
                    assert!(lemma_bound_a(n, k, d).unwrap() > rat_int(0));
                    assert!(lemma_bound_b(n, k, d).unwrap() > rat_int(0));
                    if d < n - 1 {
                        assert!(
                            lemma_bound_a(n + 1, k, d).unwrap() < lemma_bound_a(n, k, d).unwrap()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn tv_bound_values() {
        let expected = rat(15, 99) + rat(96, 594) + rat(4, 202) + rat(168, 1188);
        let got = tv_upper_bound(100, 1).unwrap();
        assert_eq!(got, expected);
        assert!((to_f64(&got) - 0.474347).abs() < 1e-6);
        assert!(tv_upper_bound(10, 9).unwrap() > rat_int(0));
        assert!(tv_upper_bound(5, 5).is_err());
        // Order d^5 / (n - d): the scaled value stays bounded.
        for d in 1..=5usize {
            for n in [10_000usize, 100_000, 1_000_000] {
                let scaled =
                    to_f64(&tv_upper_bound(n, d).unwrap()) * (n - d) as f64 / (d as f64).powi(5);
                assert!(scaled < 50.0, "d={d} n={n} scaled={scaled}");
            }
        }
    }

    #[test]
    fn exact_terms_at_six() {
        // Frozen from an independent brute-force computation.
        let r = stein_terms(
            6,
            2,
            SteinMode::Exact { force: false },
            BCoefficient::ThirdK,
        )
        .unwrap();
        assert_eq!(r.records[0].term_a_exact, Some(rat(188, 245)));
        assert_eq!(r.records[1].term_a_exact, Some(rat(24355, 67228)));
        assert_eq!(r.records[0].term_b_exact, Some(rat(169, 245)));
        assert_eq!(r.records[1].term_b_exact, Some(rat(12, 49)));
        assert_eq!(r.records[0].bound_a, rat(38, 5));
        assert!(r
            .records
            .iter()
            .all(|x| x.a_within_bound() && x.b_within_bound()));
        assert_eq!(r.total_bound, tv_upper_bound(6, 2).unwrap());

        let q = stein_terms(
            6,
            2,
            SteinMode::Exact { force: false },
            BCoefficient::QuarterK,
        )
        .unwrap();
        assert_eq!(q.records[0].term_a_exact, r.records[0].term_a_exact);
        assert_eq!(q.records[0].c_k_b, rat(3, 2));
    }

    #[test]
    fn stein_argument_checks() {
        assert!(stein_terms(
            3,
            3,
            SteinMode::Exact { force: false },
            BCoefficient::ThirdK
        )
        .is_err());
        assert!(matches!(
            stein_terms(
                8,
                2,
                SteinMode::Exact { force: false },
                BCoefficient::ThirdK
            ),
            Err(Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn mc_terms_track_exact_terms() {
        let exact = stein_terms(
            6,
            2,
            SteinMode::Exact { force: false },
            BCoefficient::ThirdK,
        )
        .unwrap();
        let mc = stein_terms(
            6,
            2,
            SteinMode::MonteCarlo {
                samples: 40_000,
                plan: SeedPlan::new(3, 4),
            },
            BCoefficient::ThirdK,
        )
        .unwrap();
        for (e, m) in exact.records.iter().zip(&mc.records) {
            assert!((e.term_a - m.term_a).abs() < 5.0 * m.term_a_stderr.unwrap() + 1e-12);
            assert!((e.term_b - m.term_b).abs() < 5.0 * m.term_b_stderr.unwrap() + 1e-12);
        }
    }
}
