//! Preference sequences and parking functions.
//!
//! Spots and preferences are 1-based throughout, matching the usual
//! combinatorial convention; the text form is a comma-separated list such as
//! `6,1,2,4,1,9,1,6,8,4,2,10`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{guard, Error, Result};

/// Default size guard for exhaustive enumeration.
pub const ENUMERATION_GUARD: usize = 8;

/// A preference sequence in `[n]^n`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PrefSeq {
    prefs: Vec<u32>,
}

impl PrefSeq {
    pub fn new(prefs: Vec<u32>) -> Result<Self> {
        let n = prefs.len();
        if n == 0 {
            return Err(Error::invalid("preference sequence must be non-empty"));
        }
        if let Some((i, &p)) = prefs
            .iter()
            .enumerate()
            .find(|(_, &p)| p == 0 || p as usize > n)
        {
            return Err(Error::invalid(format!(
                "preference {p} of car {} is outside [1, {n}]",
                i + 1
            )));
        }
        Ok(PrefSeq { prefs })
    }

    /// Skips the range check; callers guarantee `1 <= p <= n`.
    pub(crate) fn from_vec_unchecked(prefs: Vec<u32>) -> Self {
        debug_assert!(prefs.iter().all(|&p| p >= 1 && p as usize <= prefs.len()));
        PrefSeq { prefs }
    }

    pub fn identity(n: usize) -> Self {
        PrefSeq::from_vec_unchecked((1..=n as u32).collect())
    }

    pub fn len(&self) -> usize {
        self.prefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prefs.is_empty()
    }

    pub fn prefs(&self) -> &[u32] {
        &self.prefs
    }

    pub fn into_vec(self) -> Vec<u32> {
        self.prefs
    }

    /// Preference of car `i` (1-based).
    pub fn get(&self, i: usize) -> u32 {
        self.prefs[i - 1]
    }

    pub(crate) fn swap(&mut self, a: usize, b: usize) {
        self.prefs.swap(a, b);
    }
}

impl fmt::Display for PrefSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.prefs.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl FromStr for PrefSeq {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let prefs = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::invalid(format!("bad preference {t:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        PrefSeq::new(prefs)
    }
}

impl Serialize for PrefSeq {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PrefSeq {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// Result of running cars through the one-way street.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParkingOutcome {
    pub success: bool,
    /// `assignment[i]` is the spot taken by car `i + 1`.
    pub assignment: Option<Vec<u32>>,
    /// 1-based index of the first car that found no spot.
    pub failed_car: Option<usize>,
}

/// Sorted criterion: the weakly increasing rearrangement satisfies `p_(i) <= i`.
pub fn is_parking_function(seq: &PrefSeq) -> bool {
    let mut sorted = seq.prefs.clone();
    sorted.sort_unstable();
    sorted.iter().enumerate().all(|(i, &p)| p as usize <= i + 1)
}

/// Pigeonhole criterion: at least `i` cars prefer a spot `<= i`, for every `i`.
pub fn satisfies_pigeonhole(seq: &PrefSeq) -> bool {
    let n = seq.len();
    let mut counts = vec![0usize; n + 1];
    for &p in &seq.prefs {
        counts[p as usize] += 1;
    }
    let mut cumulative = 0;
    (1..=n).all(|i| {
        cumulative += counts[i];
        cumulative >= i
    })
}

/// Parks `prefs` in order on `n` spots, some of which are already `occupied`.
///
/// Each car takes its preferred spot or the first free spot after it; a car
/// that reaches the end of the street fails.
pub fn simulate_parking(prefs: &[u32], occupied: &[u32], n: usize) -> Result<ParkingOutcome> {
    let mut taken = vec![false; n + 1];
    for &v in occupied {
        if v == 0 || v as usize > n {
            return Err(Error::invalid(format!(
                "occupied spot {v} outside [1, {n}]"
            )));
        }
        taken[v as usize] = true;
    }
    let free = taken[1..].iter().filter(|t| !**t).count();
    if prefs.len() > free {
        return Err(Error::invalid(format!(
            "{} cars but only {free} free spots",
            prefs.len()
        )));
    }
    if let Some(&p) = prefs.iter().find(|&&p| p == 0 || p as usize > n) {
        return Err(Error::invalid(format!("preference {p} outside [1, {n}]")));
    }
    Ok(park_unchecked(prefs, &mut taken))
}

/// `taken` is indexed 1..=n and is updated in place.
pub(crate) fn park_unchecked(prefs: &[u32], taken: &mut [bool]) -> ParkingOutcome {
    let n = taken.len() - 1;
    let mut assignment = Vec::with_capacity(prefs.len());
    for (car, &p) in prefs.iter().enumerate() {
        let mut spot = p as usize;
        while spot <= n && taken[spot] {
            spot += 1;
        }
        if spot > n {
            return ParkingOutcome {
                success: false,
                assignment: None,
                failed_car: Some(car + 1),
            };
        }
        taken[spot] = true;
        assignment.push(spot as u32);
    }
    ParkingOutcome {
        success: true,
        assignment: Some(assignment),
        failed_car: None,
    }
}

/// `|PF_n| = (n+1)^(n-1)`.
pub fn count_parking_functions(n: usize) -> Result<BigUint> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    Ok(BigUint::from(n + 1).pow(n as u32 - 1))
}

/// All parking functions of length `n` in lexicographic order.
pub fn enumerate_parking_functions(n: usize, force: bool) -> Result<ParkingFunctions> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    guard("parking function enumeration", n, ENUMERATION_GUARD, force)?;
    Ok(ParkingFunctions::new(n))
}

/// Backtracking enumerator over prefix-feasible sequences.
///
/// A prefix of length `m` extends to a parking function iff padding it with
/// `n - m` ones does, so every candidate is checked against that padding.
#[derive(Debug, Clone)]
pub struct ParkingFunctions {
    n: usize,
    prefs: Vec<u32>,
    /// `counts[v]` is how many entries of the current prefix equal `v`.
    counts: Vec<usize>,
    started: bool,
    done: bool,
}

impl ParkingFunctions {
    fn new(n: usize) -> Self {
        let mut counts = vec![0; n + 2];
        counts[1] = n;
        ParkingFunctions {
            n,
            prefs: vec![1; n],
            counts,
            started: false,
            done: false,
        }
    }

    /// Whether the current counts over a prefix of length `len` are extendable.
    fn feasible(&self, len: usize) -> bool {
        let slack = self.n - len;
        let mut cumulative = 0;
        for i in 1..=self.n {
            cumulative += self.counts[i];
            if cumulative + slack < i {
                return false;
            }
        }
        true
    }

    fn advance(&mut self) -> bool {
        let n = self.n;
        for pos in (0..n).rev() {
            let current = self.prefs[pos] as usize;
            self.counts[current] -= 1;
            // Raising a value only lowers prefix counts, so the first
            // infeasible value ends the scan at this position.
            if current < n {
                self.counts[current + 1] += 1;
                if self.feasible(pos + 1) {
                    self.prefs[pos] = current as u32 + 1;
                    for p in &mut self.prefs[pos + 1..] {
                        *p = 1;
                    }
                    self.counts[1] += n - pos - 1;
                    return true;
                }
                self.counts[current + 1] -= 1;
            }
        }
        false
    }
}

impl Iterator for ParkingFunctions {
    type Item = PrefSeq;

    fn next(&mut self) -> Option<PrefSeq> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
        } else if !self.advance() {
            self.done = true;
            return None;
        }
        Some(PrefSeq::from_vec_unchecked(self.prefs.clone()))
    }
}

/// Calls `f` on every parking function of length `n` without allocating a
/// `PrefSeq` per item.
pub fn for_each_parking_function(n: usize, force: bool, mut f: impl FnMut(&[u32])) -> Result<()> {
    let mut it = enumerate_parking_functions(n, force)?;
    it.started = true;
    loop {
        f(&it.prefs);
        if !it.advance() {
            return Ok(());
        }
    }
}

/// Exactly uniform parking function by the circular-street construction.
///
/// Draws `w` uniformly from `{1..n+1}^n`, parks it on a circle of `n + 1`
/// spots, and rotates so that the single empty spot becomes spot `n + 1`.
/// Each parking function is the image of exactly `n + 1` words.
pub fn sample_uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> PrefSeq {
    let mut word = Vec::with_capacity(n);
    let mut scratch = CircleScratch::default();
    sample_into(n, rng, &mut word, &mut scratch);
    PrefSeq::from_vec_unchecked(word)
}

/// Reusable buffers for repeated sampling.
#[derive(Debug, Default, Clone)]
pub struct CircleScratch {
    demand: Vec<u32>,
    filled: Vec<bool>,
}

/// Allocation-free variant of [`sample_uniform`]; writes into `out`.
pub fn sample_into<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
    out: &mut Vec<u32>,
    scratch: &mut CircleScratch,
) {
    assert!(n >= 1, "n must be at least 1");
    let spots = n + 1;
    out.clear();
    out.extend((0..n).map(|_| rng.gen_range(1..=spots as u32)));

    scratch.demand.clear();
    scratch.demand.resize(spots + 1, 0);
    scratch.filled.clear();
    scratch.filled.resize(spots + 1, false);
    for &w in out.iter() {
        scratch.demand[w as usize] += 1;
    }
    // The occupied set does not depend on arrival order, so sweep the circle
    // twice carrying the cars that are still looking for a spot.
    let mut waiting = 0u32;
    for lap in 0..2 {
        for spot in 1..=spots {
            if lap == 0 {
                waiting += scratch.demand[spot];
            }
            if waiting > 0 && !scratch.filled[spot] {
                scratch.filled[spot] = true;
                waiting -= 1;
            }
        }
    }
    let empty = (1..=spots)
        .find(|&s| !scratch.filled[s])
        .expect("n cars on n + 1 circular spots leave one empty") as u32;
    let modulus = spots as u32;
    for w in out.iter_mut() {
        *w = (*w + modulus - empty - 1) % modulus + 1;
    }
}
