//! Moments of cycle counts under the uniform law on parking functions.
//!
//! Exact means come from completion sums: by symmetry of coordinates, the
//! chance that a fixed increasing `k`-tuple carries a `k`-cycle is
//! `(k-1)! |PC_n(tuple)| / |PF_n|`. Monte Carlo estimates use the circular
//! sampler.

use itertools::Itertools;
use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::completions::{completions_count, OccupiedVector};
use crate::error::{guard, Error, Result};
use crate::exact_math::{
    factorial, rat, rat_int, serde_rational, signed_power, to_f64, ExactRational,
};
use crate::parking::{
    count_parking_functions, for_each_parking_function, sample_into, CircleScratch,
};
use crate::sampling::{run_sharded, SeedPlan};
use crate::structure::CycleCounter;

/// Default size guard for the exact `k`-cycle mean.
pub const K_CYCLE_GUARD: usize = 12;

fn ratio(num: BigUint, den: BigUint) -> ExactRational {
    ExactRational::new(BigInt::from(num), BigInt::from(den))
}

fn need_positive(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    Ok(())
}

/// `sum_i |PC_n((i))|`, which equals `(n+1)^(n-1)`.
pub fn single_spot_completion_sum(n: usize) -> Result<BigUint> {
    need_positive(n)?;
    let mut total = BigUint::zero();
    for i in 1..=n as u32 {
        total += completions_count(&OccupiedVector::new(n, vec![i])?);
    }
    Ok(total)
}

/// `sum_{i<j} |PC_n((i, j))|`, which equals `n (n+1)^(n-2) / 2`.
pub fn pair_completion_sum(n: usize) -> Result<BigUint> {
    if n < 2 {
        return Err(Error::invalid("pairs need n >= 2"));
    }
    let mut total = BigUint::zero();
    for pair in (1..=n as u32).combinations(2) {
        total += completions_count(&OccupiedVector::new(n, pair)?);
    }
    Ok(total)
}

/// Expected number of fixed points, evaluated through the completion sum.
pub fn expected_fixed_points(n: usize) -> Result<ExactRational> {
    let mean = ratio(single_spot_completion_sum(n)?, count_parking_functions(n)?);
    if !mean.is_one() {
        return Err(Error::Consistency(format!(
            "expected fixed points at n = {n} came out as {mean}, not 1"
        )));
    }
    Ok(mean)
}

/// `n / (2(n+1))`.
pub fn expected_transpositions(n: usize) -> Result<ExactRational> {
    if n < 2 {
        return Err(Error::invalid("transpositions need n >= 2"));
    }
    Ok(rat(n as i64, 2 * (n as i64 + 1)))
}

/// Exact `E[C_k]` as `(k-1)! / |PF_n| * sum over k-subsets of |PC_n(subset)|`.
pub fn expected_k_cycles_exact(n: usize, k: usize, force: bool) -> Result<ExactRational> {
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k = {k} must lie in [1, {n}]")));
    }
    guard("exact k-cycle mean", n, K_CYCLE_GUARD, force)?;
    let mut total = BigUint::zero();
    for subset in (1..=n as u32).combinations(k) {
        total += completions_count(&OccupiedVector::new(n, subset)?);
    }
    Ok(ratio(
        total * factorial(k as u64 - 1),
        count_parking_functions(n)?,
    ))
}

/// Finite-`n` reference `(1/k) (n/(n+1))^(k-1)` for the `k`-cycle mean.
pub fn cycle_mean_reference(n: usize, k: usize) -> ExactRational {
    let base = rat(n as i64, n as i64 + 1);
    rat(1, k as i64) * signed_power(&base, k as i64 - 1).expect("positive base")
}

/// `(k+1)/(n+1)`: bound on the chance that a vertex lies on a `k`-cycle, or
/// has tail length `k`.
pub fn cycle_len_prob_bound(n: usize, k: usize) -> Result<ExactRational> {
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k = {k} must lie in [1, {n}]")));
    }
    Ok(rat(k as i64 + 1, n as i64 + 1))
}

/// `H_n = 1 + 1/2 + ... + 1/n`.
pub fn harmonic(n: usize) -> ExactRational {
    (1..=n as i64).map(|k| rat(1, k)).sum()
}

/// Running sums of cycle counts over a batch of samples. All fields are
/// integers, so merging shards is exact and order-free.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CycleTally {
    pub samples: u64,
    /// `sum[k-1]` and `sum_sq[k-1]` accumulate `C_k` and `C_k^2`.
    pub sum: Vec<u64>,
    pub sum_sq: Vec<u64>,
    pub total_sum: u64,
    pub total_sum_sq: u64,
}

impl CycleTally {
    fn new(k_max: usize) -> Self {
        CycleTally {
            sum: vec![0; k_max],
            sum_sq: vec![0; k_max],
            ..Default::default()
        }
    }

    fn record(&mut self, counts: &[u32]) {
        self.samples += 1;
        for (k, slot) in self.sum.iter_mut().enumerate() {
            *slot += counts[k] as u64;
        }
        for (k, slot) in self.sum_sq.iter_mut().enumerate() {
            *slot += (counts[k] as u64).pow(2);
        }
        let total: u64 = counts.iter().map(|&c| c as u64).sum();
        self.total_sum += total;
        self.total_sum_sq += total * total;
    }

    fn merge(mut self, other: CycleTally) -> CycleTally {
        self.samples += other.samples;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
        self.total_sum += other.total_sum;
        self.total_sum_sq += other.total_sum_sq;
        self
    }
}

/// Sample mean and its standard error.
pub fn mean_and_stderr(samples: u64, sum: u64, sum_sq: u64) -> (f64, f64) {
    mean_and_stderr_f64(samples, sum as f64, sum_sq as f64)
}

/// Sample mean and standard error from floating-point sums.
pub fn mean_and_stderr_f64(samples: u64, sum: f64, sum_sq: f64) -> (f64, f64) {
    let n = samples as f64;
    let mean = sum / n;
    if samples < 2 {
        return (mean, 0.0);
    }
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    (mean, (var / n).sqrt())
}

/// Draws `samples` uniform parking functions of length `n` and tallies
/// `C_1..C_{k_max}` and the total cycle count.
pub fn sample_cycle_tally(n: usize, k_max: usize, samples: u64, plan: SeedPlan) -> CycleTally {
    run_sharded(
        samples,
        plan,
        |rng, count| {
            let mut tally = CycleTally::new(k_max);
            let mut prefs = Vec::with_capacity(n);
            let mut scratch = CircleScratch::default();
            let mut counter = CycleCounter::default();
            let mut counts = Vec::with_capacity(n);
            for _ in 0..count {
                sample_into(n, rng, &mut prefs, &mut scratch);
                counter.count_into(&prefs, &mut counts);
                tally.record(&counts);
            }
            tally
        },
        CycleTally::merge,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleMeanEstimate {
    pub k: usize,
    pub mean: f64,
    pub stderr: f64,
    /// `1/k`
    #[serde(with = "serde_rational")]
    pub limit: ExactRational,
    /// `(1/k)(n/(n+1))^(k-1)`
    #[serde(with = "serde_rational")]
    pub finite_reference: ExactRational,
}

/// Monte Carlo means of `C_1..C_{k_max}` with standard errors.
pub fn expected_k_cycles_mc(
    n: usize,
    k_max: usize,
    samples: u64,
    plan: SeedPlan,
) -> Result<Vec<CycleMeanEstimate>> {
    need_positive(n)?;
    if k_max == 0 || k_max > n {
        return Err(Error::invalid(format!(
            "k_max = {k_max} must lie in [1, {n}]"
        )));
    }
    if samples == 0 {
        return Err(Error::invalid("samples must be positive"));
    }
    let tally = sample_cycle_tally(n, k_max, samples, plan);
    Ok((1..=k_max)
        .map(|k| {
            let (mean, stderr) =
                mean_and_stderr(tally.samples, tally.sum[k - 1], tally.sum_sq[k - 1]);
            CycleMeanEstimate {
                k,
                mean,
                stderr,
                limit: rat(1, k as i64),
                finite_reference: cycle_mean_reference(n, k),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TotalCyclesStats {
    pub n: usize,
    pub samples: u64,
    pub mean: f64,
    pub stderr: f64,
    #[serde(with = "serde_rational")]
    pub harmonic: ExactRational,
}

/// Monte Carlo mean of the total number of cycles, next to `H_n`.
pub fn total_cycles_stats(n: usize, samples: u64, plan: SeedPlan) -> Result<TotalCyclesStats> {
    need_positive(n)?;
    if samples == 0 {
        return Err(Error::invalid("samples must be positive"));
    }
    let tally = sample_cycle_tally(n, 0, samples, plan);
    let (mean, stderr) = mean_and_stderr(tally.samples, tally.total_sum, tally.total_sum_sq);
    Ok(TotalCyclesStats {
        n,
        samples,
        mean,
        stderr,
        harmonic: harmonic(n),
    })
}

/// Exact means obtained by walking all of `PF_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumeratedMoments {
    pub n: usize,
    pub population: u64,
    /// `cycle_means[k-1] = E[C_k]`.
    #[serde(with = "rational_vec")]
    pub cycle_means: Vec<ExactRational>,
    #[serde(with = "serde_rational")]
    pub total_mean: ExactRational,
}

impl EnumeratedMoments {
    pub fn mean(&self, k: usize) -> ExactRational {
        self.cycle_means[k - 1].clone()
    }
}

pub fn enumerated_moments(n: usize, force: bool) -> Result<EnumeratedMoments> {
    need_positive(n)?;
    let mut sums = vec![0u64; n];
    let mut population = 0u64;
    let mut counter = CycleCounter::default();
    let mut counts = Vec::with_capacity(n);
    for_each_parking_function(n, force, |prefs| {
        population += 1;
        counter.count_into(prefs, &mut counts);
        for (s, &c) in sums.iter_mut().zip(&counts) {
            *s += c as u64;
        }
    })?;
    let cycle_means: Vec<ExactRational> = sums
        .iter()
        .map(|&s| rat_int(s) / rat_int(population))
        .collect();
    let total_mean = cycle_means.iter().sum();
    Ok(EnumeratedMoments {
        n,
        population,
        cycle_means,
        total_mean,
    })
}

/// Convenience: exact rational to `f64` for reporting.
pub fn approx(r: &ExactRational) -> f64 {
    to_f64(r)
}

mod rational_vec {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    use crate::exact_math::{format_rational, parse_rational, ExactRational};

    pub fn serialize<S: Serializer>(v: &[ExactRational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(format_rational))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<ExactRational>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| parse_rational(s).map_err(D::Error::custom))
            .collect()
    }
}
