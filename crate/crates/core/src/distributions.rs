//! Joint laws of `(C_1, ..., C_d)` and total variation distances.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{guard, Error, Result};
use crate::exact_math::{format_rational, rat_int, to_f64, ExactRational};
use crate::parking::{for_each_parking_function, sample_into, CircleScratch};
use crate::sampling::{run_sharded, SeedPlan};
use crate::structure::CycleCounter;

/// Default size guard for the exact joint law.
pub const JOINT_GUARD: usize = 8;

/// Probability masses, exact or as raw sample counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Masses {
    Exact {
        #[serde(with = "rational_map")]
        mass: BTreeMap<Vec<u32>, ExactRational>,
    },
    Empirical {
        #[serde(with = "count_map")]
        counts: BTreeMap<Vec<u32>, u64>,
        samples: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionMeta {
    pub n: usize,
    pub sample_count: Option<u64>,
    pub seed: Option<u64>,
}

/// Law of `(C_1, ..., C_d)` on a finite support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    pub d: usize,
    pub masses: Masses,
    pub meta: DistributionMeta,
}

impl JointDistribution {
    /// Builds a distribution from arbitrary `f64` masses, mainly for
    /// comparisons against reference laws. Masses are stored as exact
    /// rationals of their binary values.
    pub fn from_f64_masses(d: usize, n: usize, mass: BTreeMap<Vec<u32>, f64>) -> Result<Self> {
        let mut exact = BTreeMap::new();
        for (w, m) in mass {
            if w.len() != d {
                return Err(Error::invalid(format!("key {w:?} has length != {d}")));
            }
            let r = ExactRational::from_float(m)
                .ok_or_else(|| Error::invalid(format!("mass {m} is not finite")))?;
            exact.insert(w, r);
        }
        Ok(JointDistribution {
            d,
            masses: Masses::Exact { mass: exact },
            meta: DistributionMeta {
                n,
                sample_count: None,
                seed: None,
            },
        })
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.masses, Masses::Exact { .. })
    }

    pub fn kind(&self) -> &'static str {
        match self.masses {
            Masses::Exact { .. } => "exact",
            Masses::Empirical { .. } => "empirical",
        }
    }

    /// Support in lexicographic order.
    pub fn support(&self) -> Vec<Vec<u32>> {
        match &self.masses {
            Masses::Exact { mass } => mass.keys().cloned().collect(),
            Masses::Empirical { counts, .. } => counts.keys().cloned().collect(),
        }
    }

    /// Exact mass of `w`, if this is an exact law.
    pub fn exact_mass(&self, w: &[u32]) -> Option<ExactRational> {
        match &self.masses {
            Masses::Exact { mass } => Some(mass.get(w).cloned().unwrap_or_else(|| rat_int(0))),
            Masses::Empirical { .. } => None,
        }
    }

    pub fn mass(&self, w: &[u32]) -> f64 {
        match &self.masses {
            Masses::Exact { mass } => mass.get(w).map(to_f64).unwrap_or(0.0),
            Masses::Empirical { counts, samples } => counts
                .get(w)
                .map(|&c| c as f64 / *samples as f64)
                .unwrap_or(0.0),
        }
    }

    /// `(w, mass)` pairs in lexicographic order of `w`.
    pub fn masses_f64(&self) -> Vec<(Vec<u32>, f64)> {
        self.support()
            .into_iter()
            .map(|w| {
                let m = self.mass(&w);
                (w, m)
            })
            .collect()
    }

    /// Sum of all masses (exactly 1 for exact laws).
    pub fn total_mass(&self) -> f64 {
        match &self.masses {
            Masses::Exact { mass } => to_f64(&mass.values().sum::<ExactRational>()),
            Masses::Empirical { counts, samples } => {
                counts.values().sum::<u64>() as f64 / *samples as f64
            }
        }
    }

    /// Marginal law of the first `d2` coordinates.
    pub fn marginal(&self, d2: usize) -> Result<JointDistribution> {
        if d2 == 0 || d2 > self.d {
            return Err(Error::invalid(format!(
                "marginal dimension {d2} must lie in [1, {}]",
                self.d
            )));
        }
        let masses = match &self.masses {
            Masses::Exact { mass } => {
                let mut out: BTreeMap<Vec<u32>, ExactRational> = BTreeMap::new();
                for (w, m) in mass {
                    *out.entry(w[..d2].to_vec()).or_insert_with(|| rat_int(0)) += m;
                }
                Masses::Exact { mass: out }
            }
            Masses::Empirical { counts, samples } => {
                let mut out: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
                for (w, c) in counts {
                    *out.entry(w[..d2].to_vec()).or_insert(0) += c;
                }
                Masses::Empirical {
                    counts: out,
                    samples: *samples,
                }
            }
        };
        Ok(JointDistribution {
            d: d2,
            masses,
            meta: self.meta.clone(),
        })
    }

    /// Exact `E[C_k]` under an exact law.
    pub fn exact_mean(&self, k: usize) -> Option<ExactRational> {
        match &self.masses {
            Masses::Exact { mass } if (1..=self.d).contains(&k) => {
                Some(mass.iter().map(|(w, m)| rat_int(w[k - 1]) * m).sum())
            }
            _ => None,
        }
    }

    /// CSV export: one row per support point, `w` as `c1;c2;...`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("w,mass\n");
        for w in self.support() {
            let key = w.iter().map(u32::to_string).collect::<Vec<_>>().join(";");
            let value = match &self.masses {
                Masses::Exact { mass } => format_rational(&mass[&w]),
                Masses::Empirical { .. } => format!("{}", self.mass(&w)),
            };
            let _ = writeln!(out, "{key},{value}");
        }
        out
    }
}

/// `e^{-rate} rate^j / j!`.
pub fn poisson_pmf(rate: f64, j: u32) -> Result<f64> {
    if rate.is_nan() || rate <= 0.0 || rate.is_infinite() {
        return Err(Error::invalid(format!("rate must be positive, got {rate}")));
    }
    let mut p = (-rate).exp();
    for i in 1..=j {
        p *= rate / i as f64;
    }
    Ok(p)
}

/// `prod_k Poisson(1/k){w_k}` for `w = (w_1, ..., w_d)`.
pub fn product_poisson_pmf(w: &[u32]) -> f64 {
    w.iter()
        .enumerate()
        .map(|(i, &c)| poisson_pmf(1.0 / (i + 1) as f64, c).expect("positive rate"))
        .product()
}

fn check_dims(n: usize, d: usize) -> Result<()> {
    if n == 0 || d == 0 || d > n {
        return Err(Error::invalid(format!(
            "need 1 <= d <= n, got d = {d}, n = {n}"
        )));
    }
    Ok(())
}

/// Exact law of `(C_1, ..., C_d)` under the uniform law on `PF_n`.
pub fn exact_joint_distribution(n: usize, d: usize, force: bool) -> Result<JointDistribution> {
    check_dims(n, d)?;
    guard("exact joint distribution", n, JOINT_GUARD, force)?;
    let mut counts: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
    let mut total = 0u64;
    let mut counter = CycleCounter::default();
    let mut buf = Vec::new();
    for_each_parking_function(n, force, |prefs| {
        counter.count_into(prefs, &mut buf);
        total += 1;
        *counts.entry(buf[..d].to_vec()).or_insert(0) += 1;
    })?;
    let total = rat_int(total);
    let mass = counts
        .into_iter()
        .map(|(w, c)| (w, rat_int(c) / &total))
        .collect();
    Ok(JointDistribution {
        d,
        masses: Masses::Exact { mass },
        meta: DistributionMeta {
            n,
            sample_count: None,
            seed: None,
        },
    })
}

/// Empirical law of `(C_1, ..., C_d)` from `samples` uniform draws.
pub fn empirical_joint_distribution(
    n: usize,
    d: usize,
    samples: u64,
    plan: SeedPlan,
) -> Result<JointDistribution> {
    check_dims(n, d)?;
    if samples == 0 {
        return Err(Error::invalid("samples must be positive"));
    }
    let counts = run_sharded(
        samples,
        plan,
        |rng, count| {
            let mut counts: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
            let mut prefs = Vec::with_capacity(n);
            let mut scratch = CircleScratch::default();
            let mut counter = CycleCounter::default();
            let mut buf = Vec::new();
            for _ in 0..count {
                sample_into(n, rng, &mut prefs, &mut scratch);
                counter.count_into(&prefs, &mut buf);
                *counts.entry(buf[..d].to_vec()).or_insert(0) += 1;
            }
            counts
        },
        |mut a, b| {
            for (w, c) in b {
                *a.entry(w).or_insert(0) += c;
            }
            a
        },
    );
    Ok(JointDistribution {
        d,
        masses: Masses::Empirical { counts, samples },
        meta: DistributionMeta {
            n,
            sample_count: Some(samples),
            seed: Some(plan.seed),
        },
    })
}

/// Total variation distance to independent Poisson(1/k), `k = 1..d`.
///
/// The reference has infinite support; its mass off `supp(P)` is
/// `1 - Q(supp(P))`, so no truncation is needed.
pub fn tv_distance_to_poisson(p: &JointDistribution) -> f64 {
    let mut on_support = 0.0;
    let mut q_support = 0.0;
    for (w, m) in p.masses_f64() {
        let q = product_poisson_pmf(&w);
        on_support += (m - q).abs();
        q_support += q;
    }
    (0.5 * (on_support + (1.0 - q_support).max(0.0))).clamp(0.0, 1.0)
}

/// Total variation distance between two laws of the same dimension.
pub fn tv_distance(p: &JointDistribution, q: &JointDistribution) -> Result<f64> {
    if p.d != q.d {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            p.d, q.d
        )));
    }
    if let (Masses::Exact { mass: a }, Masses::Exact { mass: b }) = (&p.masses, &q.masses) {
        let keys: BTreeSet<&Vec<u32>> = a.keys().chain(b.keys()).collect();
        let zero = rat_int(0);
        let sum: ExactRational = keys
            .into_iter()
            .map(|w| {
                let diff = a.get(w).unwrap_or(&zero) - b.get(w).unwrap_or(&zero);
                if diff < zero {
                    -diff
                } else {
                    diff
                }
            })
            .sum();
        return Ok(to_f64(&sum) / 2.0);
    }
    let keys: BTreeSet<Vec<u32>> = p.support().into_iter().chain(q.support()).collect();
    let sum: f64 = keys.iter().map(|w| (p.mass(w) - q.mass(w)).abs()).sum();
    Ok((sum / 2.0).clamp(0.0, 1.0))
}

fn key_text(w: &[u32]) -> String {
    w.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
}

fn parse_key(s: &str) -> std::result::Result<Vec<u32>, String> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<u32>()
                .map_err(|e| format!("bad key {s:?}: {e}"))
        })
        .collect()
}

mod rational_map {
    use std::collections::BTreeMap;

    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    use super::{key_text, parse_key};
    use crate::exact_math::{format_rational, parse_rational, ExactRational};

    pub fn serialize<S: Serializer>(
        m: &BTreeMap<Vec<u32>, ExactRational>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        s.collect_map(m.iter().map(|(w, r)| (key_text(w), format_rational(r))))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<Vec<u32>, ExactRational>, D::Error> {
        BTreeMap::<String, String>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| {
                Ok((
                    parse_key(&k).map_err(D::Error::custom)?,
                    parse_rational(&v).map_err(D::Error::custom)?,
                ))
            })
            .collect()
    }
}

mod count_map {
    use std::collections::BTreeMap;

    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    use super::{key_text, parse_key};

    pub fn serialize<S: Serializer>(m: &BTreeMap<Vec<u32>, u64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(m.iter().map(|(w, c)| (key_text(w), c)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<Vec<u32>, u64>, D::Error> {
        BTreeMap::<String, u64>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| Ok((parse_key(&k).map_err(D::Error::custom)?, v)))
            .collect()
    }
}
