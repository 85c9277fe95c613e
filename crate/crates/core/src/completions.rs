//! Counting parking completions.
//!
//! With spots `v_1 < ... < v_l` already taken, a completion is a preference
//! sequence for the remaining `n - l` cars under which every car parks.
//! Three independent routes are provided: the lattice-point sum, the closed
//! sum for a contiguous block, and exhaustive simulation.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{guard, Error, Result};
use crate::exact_math::{
    binomial, factorial_table, rat_int, signed_power, to_integer, ExactRational,
};
use crate::parking::park_unchecked;

/// Default size guard for the simulation oracle.
pub const BRUTEFORCE_GUARD: usize = 7;

/// Strictly increasing set of pre-occupied spots in `[1, n]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OccupiedVector {
    n: usize,
    v: Vec<u32>,
}

impl OccupiedVector {
    pub fn new(n: usize, v: Vec<u32>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n must be at least 1"));
        }
        if let Some(&bad) = v.iter().find(|&&x| x == 0 || x as usize > n) {
            return Err(Error::invalid(format!(
                "occupied spot {bad} outside [1, {n}]"
            )));
        }
        if v.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("occupied spots must be strictly increasing"));
        }
        Ok(OccupiedVector { n, v })
    }

    /// The contiguous block `i+1, ..., i+len`.
    pub fn block(n: usize, i: usize, len: usize) -> Result<Self> {
        OccupiedVector::new(n, (i + 1..=i + len).map(|s| s as u32).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spots(&self) -> &[u32] {
        &self.v
    }

    /// Number of occupied spots.
    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    /// `v_i - i` for each occupied spot; the lower bounds on partial sums.
    fn thresholds(&self) -> Vec<u64> {
        self.v
            .iter()
            .enumerate()
            .map(|(i, &s)| s as u64 - (i as u64 + 1))
            .collect()
    }
}

/// Lattice points `s` of length `l + 1` with `s_1 + ... + s_i >= v_i - i` and
/// total `n - l`, in lexicographic order.
#[derive(Debug, Clone)]
pub struct LatticePoints {
    thresholds: Vec<u64>,
    total: u64,
    point: Vec<u64>,
    started: bool,
    done: bool,
}

pub fn lattice_points(occ: &OccupiedVector) -> LatticePoints {
    let thresholds = occ.thresholds();
    let total = (occ.n() - occ.len()) as u64;
    let mut it = LatticePoints {
        point: vec![0; thresholds.len() + 1],
        thresholds,
        total,
        started: false,
        done: false,
    };
    it.fill_minimal(0, 0);
    it
}

impl LatticePoints {
    /// Smallest admissible values from `from` onward given the prefix sum.
    fn fill_minimal(&mut self, from: usize, mut prefix: u64) {
        let l = self.thresholds.len();
        for i in from..l {
            self.point[i] = self.thresholds[i].saturating_sub(prefix);
            prefix += self.point[i];
        }
        self.point[l] = self.total - prefix;
    }

    fn advance(&mut self) -> bool {
        let l = self.thresholds.len();
        let mut prefix: u64 = self.point[..l].iter().sum();
        for pos in (0..l).rev() {
            if prefix < self.total {
                self.point[pos] += 1;
                self.fill_minimal(pos + 1, prefix + 1);
                return true;
            }
            prefix -= self.point[pos];
        }
        false
    }
}

impl Iterator for LatticePoints {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
        } else if !self.advance() {
            self.done = true;
            return None;
        }
        Some(self.point.clone())
    }
}

/// `(s+1)^(s-1)` for `s = 0..=max`; the `s = 0` entry is `1^(-1) = 1`.
fn rooted_tree_table(max: usize) -> Vec<BigUint> {
    (0..=max)
        .map(|s| {
            if s == 0 {
                BigUint::one()
            } else {
                BigUint::from(s + 1).pow(s as u32 - 1)
            }
        })
        .collect()
}

/// Count of parking completions of `occ`: the sum over `L_n(v)` of
/// `multinomial(n-l; s) prod (s_i+1)^(s_i-1)`.
///
/// Evaluated by a dynamic program over prefix sums, writing the multinomial
/// as `prod C(s_1+...+s_i, s_i)`; cost `O(l (n-l)^2)`. With nothing occupied
/// this is `|PF_n| = (n+1)^(n-1)`.
pub fn completions_count(occ: &OccupiedVector) -> BigUint {
    let cars = occ.n() - occ.len();
    let trees = rooted_tree_table(cars);
    let binom: Vec<Vec<BigUint>> = (0..=cars as u64)
        .map(|p| (0..=p as i64).map(|s| binomial(p, s)).collect())
        .collect();
    let thresholds = occ.thresholds();
    // ways[p]: weighted count of admissible prefixes with sum p.
    let mut ways = vec![BigUint::zero(); cars + 1];
    ways[0] = BigUint::one();
    for step in 0..=thresholds.len() {
        let floor = thresholds.get(step).map_or(cars, |&t| t as usize);
        let mut next = vec![BigUint::zero(); cars + 1];
        for (p, slot) in next.iter_mut().enumerate() {
            if p < floor && step < thresholds.len() {
                continue;
            }
            for s in 0..=p {
                if ways[p - s].is_zero() {
                    continue;
                }
                *slot += &ways[p - s] * &binom[p][s] * &trees[s];
            }
        }
        ways = next;
    }
    std::mem::take(&mut ways[cars])
}

/// The same count as [`completions_count`], summing term by term over the
/// lattice points.
pub fn completions_count_lattice(occ: &OccupiedVector) -> BigUint {
    let cars = occ.n() - occ.len();
    let fact = factorial_table(cars);
    let trees = rooted_tree_table(cars);
    let mut total = BigUint::zero();
    for s in lattice_points(occ) {
        let mut denom = BigUint::one();
        let mut weight = BigUint::one();
        for &part in &s {
            denom *= &fact[part as usize];
            weight *= &trees[part as usize];
        }
        total += &fact[cars] / denom * weight;
    }
    total
}

/// Count for the contiguous block `i+1, ..., i+len`.
///
/// For `i >= 1` this is the closed sum
/// `sum_{k=i}^{n-len} C(n-len, k) (k+1)^(k-1) len (n-k)^(n-k-len-1)`, whose
/// terms can be fractional; for `i = 0` it is `(len+1)(n+1)^(n-len-1)`.
pub fn completions_count_block(n: usize, i: usize, len: usize) -> Result<BigUint> {
    if len == 0 {
        return Err(Error::invalid("block length must be at least 1"));
    }
    if n < len || i > n - len {
        return Err(Error::invalid(format!(
            "block start {i} with length {len} does not fit in [1, {n}]"
        )));
    }
    let (n, i, len) = (n as i64, i as i64, len as i64);
    let total = if i == 0 {
        rat_int(len + 1) * signed_power(&rat_int(n + 1), n - len - 1)?
    } else {
        let mut acc = ExactRational::zero();
        for k in i..=n - len {
            let coeff = BigInt::from(binomial((n - len) as u64, k)) * len;
            let trees = signed_power(&rat_int(k + 1), k - 1)?;
            let rest = signed_power(&rat_int(n - k), n - k - len - 1)?;
            acc += rat_int(coeff) * trees * rest;
        }
        acc
    };
    let integer = to_integer(&total).ok_or_else(|| {
        Error::Consistency(format!("block completion total {total} is not an integer"))
    })?;
    integer
        .to_biguint()
        .ok_or_else(|| Error::Consistency(format!("negative block completion total {integer}")))
}

/// Counts completions by parking every tuple in `[n]^(n-l)`.
pub fn completions_count_bruteforce(occ: &OccupiedVector, force: bool) -> Result<BigUint> {
    let n = occ.n();
    guard("brute-force completion count", n, BRUTEFORCE_GUARD, force)?;
    let cars = n - occ.len();
    if cars == 0 {
        return Ok(BigUint::one());
    }
    let mut base = vec![false; n + 1];
    for &s in occ.spots() {
        base[s as usize] = true;
    }
    // Shard on the first car's preference.
    let count: u64 = (1..=n as u32)
        .into_par_iter()
        .map(|first| {
            let mut prefs = vec![1u32; cars];
            prefs[0] = first;
            let mut taken = base.clone();
            let mut hits = 0u64;
            loop {
                taken.copy_from_slice(&base);
                if park_unchecked(&prefs, &mut taken).success {
                    hits += 1;
                }
                // Odometer over positions 1.. (position 0 is fixed).
                let mut pos = cars;
                loop {
                    if pos == 1 {
                        return hits;
                    }
                    pos -= 1;
                    if (prefs[pos] as usize) < n {
                        prefs[pos] += 1;
                        break;
                    }
                    prefs[pos] = 1;
                }
            }
        })
        .sum();
    Ok(BigUint::from(count))
}
