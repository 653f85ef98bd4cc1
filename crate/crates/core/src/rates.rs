//! End-to-end rates of swapped links, switch throughput and rate fairness.
//!
//! An end-to-end link at rank `j` joins one elementary link from each
//! endpoint. On each endpoint the inner-leaf error, conditioned on the
//! Steane syndrome `s`, and the outer-leaf error of the rank-`j` link act as
//! independent flips:
//!
//! ```text
//! Q_i(s, j) = q_inner(s)·(1 - q_outer(j)) + (1 - q_inner(s))·q_outer(j)
//! ```
//!
//! Links are classified by the syndrome vector `m` of their parents, giving
//!
//! ```text
//! Q_end(m, j) = ½·(1 - Π_i (1 - 2·Q_i(m_i, j)))
//! p(m)        = Π_i t_i^{m_i}·(1 - t_i)^{1 - m_i}
//! R_e2e       = Σ_j Σ_{m_X, m_Z} p_X(m_X)·p_Z(m_Z)·r(Q_X,end, Q_Z,end)
//! ```
//!
//! with `r(q_x, q_z) = max(0, 1 - h₂(q_x) - h₂(q_z))`.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::link::RankedLinkProfile;
use crate::steane::InnerLeafStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    X,
    Z,
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return domain(format!("{name} must lie in [0, 1], got {p}"));
    }
    Ok(())
}

/// Probability that exactly one of two independent flips occurs.
pub fn combine_leaf_error(q_inner: f64, q_outer: f64) -> Result<f64> {
    check_probability("q_inner", q_inner)?;
    check_probability("q_outer", q_outer)?;
    Ok(xor(q_inner, q_outer))
}

#[inline]
fn xor(a: f64, b: f64) -> f64 {
    a * (1.0 - b) + (1.0 - a) * b
}

/// Error of a link built from endpoints with per-syndrome errors
/// `q[i] = [Q_i(s=0), Q_i(s=1)]`, selected by the syndrome bits `m`.
pub fn end_to_end_from_parts(m: &[bool], q: &[[f64; 2]]) -> Result<f64> {
    if m.len() != q.len() {
        return domain(format!("syndrome vector has {} entries for {} endpoints", m.len(), q.len()));
    }
    let prod: f64 = m.iter().zip(q).map(|(&mi, qi)| 1.0 - 2.0 * qi[mi as usize]).product();
    Ok(0.5 * (1.0 - prod))
}

/// Probability of the syndrome vector `m` given per-endpoint syndrome rates `t`.
pub fn syndrome_prob(m: &[bool], t: &[f64]) -> Result<f64> {
    if m.len() != t.len() {
        return domain(format!("syndrome vector has {} entries for {} rates", m.len(), t.len()));
    }
    for &ti in t {
        check_probability("syndrome rate", ti)?;
    }
    Ok(m.iter().zip(t).map(|(&mi, &ti)| if mi { ti } else { 1.0 - ti }).product())
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

/// Hashing-bound yield per link, floored at zero.
pub fn secret_fraction(q_x: f64, q_z: f64) -> Result<f64> {
    check_probability("q_x", q_x)?;
    check_probability("q_z", q_z)?;
    Ok(yield_per_link(q_x, q_z))
}

#[inline]
fn yield_per_link(q_x: f64, q_z: f64) -> f64 {
    (1.0 - binary_entropy(q_x) - binary_entropy(q_z)).max(0.0)
}

/// Outer-leaf errors of one endpoint, rank 1 first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OuterErrors {
    pub q_x: Vec<f64>,
    pub q_z: Vec<f64>,
}

impl OuterErrors {
    pub fn from_profile(profile: &RankedLinkProfile) -> Self {
        Self {
            q_x: profile.q_outer_x.clone(),
            q_z: profile.q_outer_z.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.q_x.len().min(self.q_z.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, family: Family, j: usize) -> f64 {
        match family {
            Family::X => self.q_x[j],
            Family::Z => self.q_z[j],
        }
    }
}

/// Inputs for the rate of one connection.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionStats {
    pub k_main: usize,
    pub inner: [InnerLeafStats; 2],
    /// Outer errors restricted to ranks `1..=k_main`.
    pub outer: [OuterErrors; 2],
}

impl ConnectionStats {
    pub fn new(inner: [InnerLeafStats; 2], outer: [OuterErrors; 2]) -> Result<Self> {
        let k_main = outer[0].len().min(outer[1].len());
        let outer = outer.map(|o| OuterErrors {
            q_x: o.q_x[..k_main].to_vec(),
            q_z: o.q_z[..k_main].to_vec(),
        });
        let stats = Self { k_main, inner, outer };
        stats.validate()?;
        Ok(stats)
    }

    pub fn from_profiles(inner: [InnerLeafStats; 2], profiles: [&RankedLinkProfile; 2]) -> Result<Self> {
        Self::new(inner, profiles.map(OuterErrors::from_profile))
    }

    fn validate(&self) -> Result<()> {
        for leaf in &self.inner {
            check_probability("t_x", leaf.t_x)?;
            check_probability("t_z", leaf.t_z)?;
            for q in leaf.q_inner_x.iter().chain(&leaf.q_inner_z) {
                check_probability("q_inner", *q)?;
            }
        }
        for o in &self.outer {
            for q in o.q_x.iter().chain(&o.q_z) {
                check_probability("q_outer", *q)?;
            }
        }
        Ok(())
    }

    /// End-to-end error at 1-based rank `j` for syndrome vector `m`.
    pub fn end_to_end_error(&self, m: [bool; 2], j: usize, family: Family) -> Result<f64> {
        if j == 0 || j > self.k_main {
            return domain(format!("rank {j} outside 1..={}", self.k_main));
        }
        let q = [0, 1].map(|i| {
            let (_, q_inner) = self.inner[i].family(family);
            let q_outer = self.outer[i].get(family, j - 1);
            [xor(q_inner[0], q_outer), xor(q_inner[1], q_outer)]
        });
        end_to_end_from_parts(&m, &q)
    }

    /// Rate contributed by the link at 0-based rank `j`.
    pub fn rank_rate(&self, j: usize) -> f64 {
        pair_rate(
            [&self.inner[0], &self.inner[1]],
            [self.outer[0].q_x[j], self.outer[1].q_x[j]],
            [self.outer[0].q_z[j], self.outer[1].q_z[j]],
        )
    }
}

/// Rate of one swapped link whose endpoints have the given inner-leaf
/// statistics and outer-leaf errors.
pub fn pair_rate(inner: [&InnerLeafStats; 2], q_outer_x: [f64; 2], q_outer_z: [f64; 2]) -> f64 {
    let x = [0, 1].map(|i| inner[i].q_inner_x.map(|qi| xor(qi, q_outer_x[i])));
    let z = [0, 1].map(|i| inner[i].q_inner_z.map(|qi| xor(qi, q_outer_z[i])));
    link_rate(&x, &[inner[0].t_x, inner[1].t_x], &z, &[inner[0].t_z, inner[1].t_z])
}

/// All syndrome vectors of length `n`, as bit masks.
fn syndrome_vectors(n: usize) -> impl Iterator<Item = Vec<bool>> {
    (0u32..1 << n).map(move |bits| (0..n).map(|i| bits >> i & 1 == 1).collect())
}

/// Rate of one end-to-end link joining `q_x.len()` parents, summed over all
/// X and Z syndrome vectors.
pub fn link_rate(q_x: &[[f64; 2]], t_x: &[f64], q_z: &[[f64; 2]], t_z: &[f64]) -> f64 {
    let classes = |q: &[[f64; 2]], t: &[f64]| -> Vec<(f64, f64)> {
        syndrome_vectors(q.len())
            .map(|m| {
                let p: f64 = m.iter().zip(t).map(|(&mi, &ti)| if mi { ti } else { 1.0 - ti }).product();
                let prod: f64 = m.iter().zip(q).map(|(&mi, qi)| 1.0 - 2.0 * qi[mi as usize]).product();
                (p, 0.5 * (1.0 - prod))
            })
            .collect()
    };
    let xs = classes(q_x, t_x);
    let zs = classes(q_z, t_z);
    let mut rate = 0.0;
    for &(px, ex) in &xs {
        if px == 0.0 {
            continue;
        }
        for &(pz, ez) in &zs {
            if pz == 0.0 {
                continue;
            }
            rate += px * pz * yield_per_link(ex, ez);
        }
    }
    rate
}

/// Ebits per round delivered by one connection.
pub fn rate_e2e(conn: &ConnectionStats) -> f64 {
    (0..conn.k_main).map(|j| conn.rank_rate(j)).sum()
}

pub fn switch_rate(rates: &[f64]) -> f64 {
    rates.iter().sum()
}

/// Rate fairness `F = d/⟨R⟩`; zero means every connection is served equally.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fairness {
    pub value: f64,
    /// All rates were zero; `value` is then reported as 0.
    pub degenerate: bool,
}

/// `d² = ½ Σ_{i,j} (R_i - R_j)²` over ordered pairs, divided by the mean.
pub fn fairness(rates: &[f64]) -> Result<Fairness> {
    if rates.is_empty() {
        return domain("fairness needs at least one rate");
    }
    if let Some(r) = rates.iter().find(|r| !(**r >= 0.0) || !r.is_finite()) {
        return domain(format!("rates must be finite and >= 0, got {r}"));
    }
    let n = rates.len() as f64;
    let mean = rates.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return Ok(Fairness {
            value: 0.0,
            degenerate: true,
        });
    }
    // Pairwise rather than via the variance, so equal rates give exactly 0.
    let d2: f64 = rates
        .iter()
        .enumerate()
        .flat_map(|(i, a)| rates[i + 1..].iter().map(move |b| (a - b).powi(2)))
        .sum();
    Ok(Fairness {
        value: d2.sqrt() / mean,
        degenerate: false,
    })
}

/// Rates of every connection served by a switch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub per_connection_rates: Vec<f64>,
    pub switch_rate: f64,
    pub fairness: Fairness,
    /// `2·R_s/k_total`: ebits per resource state pair.
    pub per_mode_rate: f64,
}

impl RateReport {
    pub fn new(per_connection_rates: Vec<f64>, k_total: u32) -> Result<Self> {
        let switch_rate = switch_rate(&per_connection_rates);
        let fairness = fairness(&per_connection_rates)?;
        Ok(Self {
            per_connection_rates,
            switch_rate,
            fairness,
            per_mode_rate: 2.0 * switch_rate / f64::from(k_total.max(1)),
        })
    }
}
