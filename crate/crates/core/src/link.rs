//! Multiplexed elementary-link generation between the switch and a client.
//!
//! Each link is heralded by a GKP Bell-state measurement between two outer
//! leaves that meet halfway. The analog outcomes `p0`, `q0` fix the error
//! likelihood of each quadrature, and links are ranked by the probability
//! that neither quadrature is in error.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::noise::{fold_remainder, likelihood, NoiseParams, PreparationSampler, QuadratureRemainder};

/// Minimum number of rounds averaged into a ranked profile.
pub const MIN_PROFILE_TRIALS: u64 = 1_000;

/// Result of one outer-leaf Bell-state measurement.
///
/// The p-quadrature outcome determines the X-type error, the q-quadrature
/// outcome the Z-type error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsmOutcome {
    pub p0: QuadratureRemainder,
    pub q0: QuadratureRemainder,
    pub qx_outer: f64,
    pub qz_outer: f64,
    pub p_no_error: f64,
}

impl BsmOutcome {
    /// Builds an outcome from raw quadrature values observed under total
    /// noise variance `sigma2_tot`.
    pub fn from_quadratures(p0: f64, q0: f64, sigma2_tot: f64, n_max: u32) -> Result<Self> {
        let qx_outer = crate::noise::error_likelihood(p0, sigma2_tot, n_max)?;
        let qz_outer = crate::noise::error_likelihood(q0, sigma2_tot, n_max)?;
        Ok(Self::from_errors(fold_remainder(p0), fold_remainder(q0), qx_outer, qz_outer))
    }

    fn from_errors(p0: QuadratureRemainder, q0: QuadratureRemainder, qx: f64, qz: f64) -> Self {
        Self {
            p0,
            q0,
            qx_outer: qx,
            qz_outer: qz,
            p_no_error: (1.0 - qx) * (1.0 - qz),
        }
    }
}

/// Samples Bell-state measurements for one client distance.
#[derive(Debug, Clone, Copy)]
pub struct BsmSampler {
    prep: PreparationSampler,
    channel: Normal<f64>,
    sigma2_tot: f64,
    n_max: u32,
}

impl BsmSampler {
    pub fn new(l_km: f64, params: &NoiseParams) -> Result<Self> {
        if !(l_km > 0.0) || !l_km.is_finite() {
            return Err(Error::Domain(format!("client distance must be > 0, got {l_km}")));
        }
        params.validate()?;
        // Both leaves cross l/2 of fiber; the beam splitter sums their noise.
        let channel_var = 2.0 * crate::noise::channel_variance(l_km / 2.0, params)?;
        Ok(Self {
            prep: PreparationSampler::from_params(params)?,
            channel: Normal::new(0.0, channel_var.sqrt()).map_err(|e| Error::Domain(e.to_string()))?,
            sigma2_tot: params.bsm_variance(l_km)?,
            n_max: params.n_max,
        })
    }

    pub fn sigma2_tot(&self) -> f64 {
        self.sigma2_tot
    }

    fn quadrature<R: Rng + ?Sized>(&self, rng: &mut R) -> QuadratureRemainder {
        let x = self.prep.sample(rng).value() + self.prep.sample(rng).value() + self.channel.sample(rng);
        fold_remainder(x)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BsmOutcome {
        let p0 = self.quadrature(rng);
        let q0 = self.quadrature(rng);
        let qx = likelihood(p0.value(), self.sigma2_tot, self.n_max);
        let qz = likelihood(q0.value(), self.sigma2_tot, self.n_max);
        BsmOutcome::from_errors(p0, q0, qx, qz)
    }

    /// `k` links of one round, ranked.
    pub fn round<R: Rng + ?Sized>(&self, k: u32, rng: &mut R) -> Vec<RankedLink> {
        rank_links((0..k).map(|_| self.sample(rng)).collect())
    }
}

pub fn simulate_bsm<R: Rng + ?Sized>(l_km: f64, params: &NoiseParams, rng: &mut R) -> Result<BsmOutcome> {
    Ok(BsmSampler::new(l_km, params)?.sample(rng))
}

/// A link of one round together with its generation index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedLink {
    pub index: u32,
    pub outcome: BsmOutcome,
}

/// Sorts outcomes by descending `p_no_error`; equal values keep generation order.
pub fn rank_links(outcomes: Vec<BsmOutcome>) -> Vec<RankedLink> {
    let mut links: Vec<RankedLink> = outcomes
        .into_iter()
        .enumerate()
        .map(|(i, outcome)| RankedLink {
            index: i as u32,
            outcome,
        })
        .collect();
    links.sort_by(|a, b| b.outcome.p_no_error.total_cmp(&a.outcome.p_no_error));
    links
}

pub fn simulate_round<R: Rng + ?Sized>(
    l_km: f64,
    k: u32,
    params: &NoiseParams,
    rng: &mut R,
) -> Result<Vec<RankedLink>> {
    if k == 0 {
        return Err(Error::Domain("a round needs at least one link".into()));
    }
    Ok(BsmSampler::new(l_km, params)?.round(k, rng))
}

/// Expected outer-leaf error at each rank, rank 1 first.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedLinkProfile {
    pub distance_km: f64,
    pub k: u32,
    pub trials: u64,
    pub q_outer_x: Vec<f64>,
    pub q_outer_z: Vec<f64>,
    pub p_no_error_mean: Vec<f64>,
}

impl RankedLinkProfile {
    /// Profile of a noiseless client.
    pub fn perfect(k: u32) -> Self {
        Self {
            distance_km: 0.0,
            k,
            trials: 0,
            q_outer_x: vec![0.0; k as usize],
            q_outer_z: vec![0.0; k as usize],
            p_no_error_mean: vec![1.0; k as usize],
        }
    }
}

/// Running per-rank sums; shards can be merged before finishing.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileAccumulator {
    k: u32,
    rounds: u64,
    qx: Vec<f64>,
    qz: Vec<f64>,
    pne: Vec<f64>,
}

impl ProfileAccumulator {
    pub fn new(k: u32) -> Self {
        let n = k as usize;
        Self {
            k,
            rounds: 0,
            qx: vec![0.0; n],
            qz: vec![0.0; n],
            pne: vec![0.0; n],
        }
    }

    pub fn add_round(&mut self, round: &[RankedLink]) {
        debug_assert_eq!(round.len(), self.k as usize);
        for (j, link) in round.iter().enumerate() {
            self.qx[j] += link.outcome.qx_outer;
            self.qz[j] += link.outcome.qz_outer;
            self.pne[j] += link.outcome.p_no_error;
        }
        self.rounds += 1;
    }

    pub fn merge(&mut self, other: &ProfileAccumulator) {
        assert_eq!(self.k, other.k, "cannot merge profiles of different k");
        for j in 0..self.k as usize {
            self.qx[j] += other.qx[j];
            self.qz[j] += other.qz[j];
            self.pne[j] += other.pne[j];
        }
        self.rounds += other.rounds;
    }

    pub fn finish(self, distance_km: f64) -> RankedLinkProfile {
        let n = self.rounds.max(1) as f64;
        let mean = |v: Vec<f64>| v.into_iter().map(|s| s / n).collect::<Vec<_>>();
        RankedLinkProfile {
            distance_km,
            k: self.k,
            trials: self.rounds,
            q_outer_x: mean(self.qx),
            q_outer_z: mean(self.qz),
            p_no_error_mean: mean(self.pne),
        }
    }
}

/// Averages the ranked outcomes of `trials` independent rounds.
pub fn estimate_ranked_profile<R: Rng + ?Sized>(
    l_km: f64,
    k: u32,
    params: &NoiseParams,
    trials: u64,
    rng: &mut R,
) -> Result<RankedLinkProfile> {
    if trials < MIN_PROFILE_TRIALS {
        return Err(Error::Config(format!(
            "profile trials must be at least {MIN_PROFILE_TRIALS}, got {trials}"
        )));
    }
    if k == 0 {
        return Err(Error::Domain("a profile needs at least one link".into()));
    }
    let sampler = BsmSampler::new(l_km, params)?;
    let mut acc = ProfileAccumulator::new(k);
    for _ in 0..trials {
        acc.add_round(&sampler.round(k, rng));
    }
    Ok(acc.finish(l_km))
}
