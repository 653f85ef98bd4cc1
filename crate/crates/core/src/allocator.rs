//! Exhaustive searches over link allocations and switch placement.
//!
//! All searches go through an [`Evaluator`], which memoizes inner-leaf
//! statistics and ranked link profiles so that every `(distance, k)` pair is
//! simulated at most once per evaluator, even under concurrent use. Profiles
//! and rounds draw from seed-derived streams (see [`crate::seed`]), so two
//! allocations that share a client configuration see the same random numbers.

use std::collections::HashMap;
use std::hash::Hash;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::germ::{germ_match, match_datacenter, ClientId, ClientRound, ConnectionSet};
use crate::link::{estimate_ranked_profile, BsmSampler, RankedLinkProfile, MIN_PROFILE_TRIALS};
use crate::noise::{discard_window_for, NoiseParams};
use crate::rates::{pair_rate, rate_e2e, ConnectionStats, OuterErrors, RateReport};
use crate::seed::{self, Module, StreamKey};
use crate::steane::{estimate_inner_stats, InnerLeafStats, MIN_INNER_SAMPLES};

pub const DEFAULT_PROFILE_TRIALS: u64 = 10_000;
pub const DEFAULT_INNER_SAMPLES: u64 = 100_000;
pub const DEFAULT_FAIRNESS_THRESHOLD: f64 = 0.5;

/// Relative tolerance under which two objective values count as tied.
const TIE_RTOL: f64 = 1e-12;

/// How the discard window of each prepared qubit is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum NuSetting {
    /// Looked up from the distance of the link the qubit serves.
    #[default]
    Auto,
    Fixed(f64),
}

/// How expected rates are formed from simulated rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateMode {
    /// Average the outer-leaf errors per rank slot, then apply the rate
    /// formula to the averages.
    #[default]
    ExpectedRank,
    /// Apply the rate formula to every matched pair and average the rates.
    PerRound,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimInputs {
    /// Noise parameters; `nu` is overridden according to [`Self::nu`].
    pub params: NoiseParams,
    pub nu: NuSetting,
    pub profile_trials: u64,
    pub inner_samples: u64,
    pub seed: u64,
    pub rate_mode: RateMode,
}

impl Default for SimInputs {
    fn default() -> Self {
        Self {
            params: NoiseParams::default(),
            nu: NuSetting::Auto,
            profile_trials: DEFAULT_PROFILE_TRIALS,
            inner_samples: DEFAULT_INNER_SAMPLES,
            seed: 0,
            rate_mode: RateMode::ExpectedRank,
        }
    }
}

impl SimInputs {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if let NuSetting::Fixed(nu) = self.nu {
            self.params.with_nu(nu).validate()?;
        }
        if self.profile_trials < MIN_PROFILE_TRIALS {
            return Err(Error::Config(format!(
                "profile_trials must be at least {MIN_PROFILE_TRIALS}, got {}",
                self.profile_trials
            )));
        }
        if self.inner_samples < MIN_INNER_SAMPLES {
            return Err(Error::Config(format!(
                "inner_samples must be at least {MIN_INNER_SAMPLES}, got {}",
                self.inner_samples
            )));
        }
        Ok(())
    }

    /// Noise parameters for qubits serving a link of length `l_km`.
    pub fn params_at(&self, l_km: f64) -> Result<NoiseParams> {
        let nu = match self.nu {
            NuSetting::Auto => discard_window_for(l_km)?.nu,
            NuSetting::Fixed(nu) => nu,
        };
        let params = self.params.with_nu(nu);
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Client {
    pub id: ClientId,
    pub distance_km: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub clients: Vec<Client>,
    pub datacenter: Option<ClientId>,
    pub connections: ConnectionSet,
    pub k_total: u32,
}

impl Topology {
    pub fn new(
        clients: Vec<Client>,
        datacenter: Option<ClientId>,
        connections: ConnectionSet,
        k_total: u32,
    ) -> Result<Self> {
        let topology = Self {
            clients,
            datacenter,
            connections,
            k_total,
        };
        topology.validate()?;
        Ok(topology)
    }

    /// Clients 1 and 2, connected to each other.
    pub fn two_client(l1_km: f64, l2_km: f64, k_total: u32) -> Result<Self> {
        Self::new(
            vec![
                Client { id: ClientId(1), distance_km: l1_km },
                Client { id: ClientId(2), distance_km: l2_km },
            ],
            None,
            ConnectionSet::new([(ClientId(1), ClientId(2))])?,
            k_total,
        )
    }

    /// Clients `1..=n` at `client_km`, each connected to a data center with
    /// id `n + 1` at `datacenter_km`.
    pub fn with_datacenter(client_km: &[f64], datacenter_km: f64, k_total: u32) -> Result<Self> {
        let n = client_km.len() as u32;
        let dc = ClientId(n + 1);
        let mut clients: Vec<Client> = client_km
            .iter()
            .zip(1..)
            .map(|(&distance_km, id)| Client { id: ClientId(id), distance_km })
            .collect();
        clients.push(Client { id: dc, distance_km: datacenter_km });
        let connections = ConnectionSet::star(dc, (1..=n).map(ClientId))?;
        Self::new(clients, Some(dc), connections, k_total)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for c in &self.clients {
            if !(c.distance_km > 0.0 && c.distance_km.is_finite()) {
                return domain(format!("client {} distance must be > 0, got {}", c.id, c.distance_km));
            }
            if !seen.insert(c.id) {
                return domain(format!("client {} defined twice", c.id));
            }
        }
        if self.connections.is_empty() {
            return domain("topology has no connections");
        }
        for (a, b) in self.connections.pairs() {
            for id in [a, b] {
                if !seen.contains(&id) {
                    return domain(format!("connection ({a}, {b}) references undefined client {id}"));
                }
            }
        }
        if let Some(dc) = self.datacenter {
            if !seen.contains(&dc) {
                return domain(format!("data center {dc} is not a defined client"));
            }
            if self.connections.pairs().any(|(a, b)| a != dc && b != dc) {
                return domain("with a data center every connection must involve it");
            }
        }
        let need = 2 * self.connections.len() as u32;
        if self.k_total < need {
            return Err(Error::Infeasible(format!(
                "k_total = {} cannot give each of {} connections two links",
                self.k_total,
                self.connections.len()
            )));
        }
        Ok(())
    }

    pub fn position(&self, id: ClientId) -> Option<usize> {
        self.clients.iter().position(|c| c.id == id)
    }

    pub fn distance(&self, id: ClientId) -> Option<f64> {
        self.position(id).map(|i| self.clients[i].distance_km)
    }

    /// Fiber spool length of every inner leaf: the longest client distance.
    pub fn storage_distance(&self) -> f64 {
        self.clients.iter().map(|c| c.distance_km).fold(0.0, f64::max)
    }

    /// Clients other than the data center, in declaration order.
    pub fn edge_clients(&self) -> impl Iterator<Item = &Client> + '_ {
        self.clients.iter().filter(move |c| Some(c.id) != self.datacenter)
    }

    /// Checks a per-client link allocation (aligned with `clients`).
    pub fn check_allocation(&self, allocation: &[u32]) -> Result<()> {
        if allocation.len() != self.clients.len() {
            return Err(Error::Infeasible(format!(
                "allocation has {} entries for {} clients",
                allocation.len(),
                self.clients.len()
            )));
        }
        let total: u32 = allocation.iter().sum();
        if total != self.k_total {
            return Err(Error::Infeasible(format!(
                "allocation sums to {total}, expected k_total = {}",
                self.k_total
            )));
        }
        if let Some(i) = allocation.iter().position(|&k| k == 0) {
            return Err(Error::Infeasible(format!("client {} receives no links", self.clients[i].id)));
        }
        Ok(())
    }
}

type Cache<K, V> = Mutex<HashMap<K, Arc<OnceLock<Result<V>>>>>;

/// Insert-or-get with at-most-once computation per key.
fn memo<K: Eq + Hash, V: Clone>(cache: &Cache<K, V>, key: K, compute: impl FnOnce() -> Result<V>) -> Result<V> {
    let cell = cache.lock().expect("cache poisoned").entry(key).or_default().clone();
    cell.get_or_init(compute).clone()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct InnerKey {
    params: [u64; 4],
    storage: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct ProfileKey {
    params: [u64; 4],
    distance: u64,
    k: u32,
    lane: u64,
}

/// Memoizing rate evaluator for one set of simulation inputs.
pub struct Evaluator {
    inputs: SimInputs,
    inner: Cache<InnerKey, InnerLeafStats>,
    profiles: Cache<ProfileKey, Arc<RankedLinkProfile>>,
}

impl Evaluator {
    pub fn new(inputs: SimInputs) -> Result<Self> {
        inputs.validate()?;
        Ok(Self {
            inputs,
            inner: Mutex::default(),
            profiles: Mutex::default(),
        })
    }

    pub fn inputs(&self) -> &SimInputs {
        &self.inputs
    }

    /// Inner-leaf statistics of a qubit prepared for a link of `l_km` and
    /// stored for `l_storage_km`.
    pub fn inner_stats(&self, l_km: f64, l_storage_km: f64) -> Result<InnerLeafStats> {
        let params = self.inputs.params_at(l_km)?;
        let key = InnerKey {
            params: params.cache_key(),
            storage: l_storage_km.to_bits(),
        };
        memo(&self.inner, key, || {
            let mut rng = seed::stream(
                self.inputs.seed,
                StreamKey { module: Module::InnerLeaf, distance_km: l_storage_km, k: 0, lane: 0 },
            );
            estimate_inner_stats(l_storage_km, &params, self.inputs.inner_samples, &mut rng)
        })
    }

    /// Ranked outer-leaf profile of `k` links at `l_km`. Lane 0 is the
    /// canonical estimate; other lanes give independent replicas.
    pub fn profile(&self, l_km: f64, k: u32, lane: u64) -> Result<Arc<RankedLinkProfile>> {
        let params = self.inputs.params_at(l_km)?;
        let key = ProfileKey {
            params: params.cache_key(),
            distance: l_km.to_bits(),
            k,
            lane,
        };
        memo(&self.profiles, key, || {
            let mut rng = seed::stream(
                self.inputs.seed,
                StreamKey { module: Module::LinkProfile, distance_km: l_km, k, lane },
            );
            estimate_ranked_profile(l_km, k, &params, self.inputs.profile_trials, &mut rng).map(Arc::new)
        })
    }

    /// Rates of every connection, in connection order, for a per-client
    /// allocation aligned with `topology.clients`.
    pub fn evaluate_allocation(&self, topology: &Topology, allocation: &[u32]) -> Result<RateReport> {
        topology.validate()?;
        topology.check_allocation(allocation)?;
        let rates = if topology.datacenter.is_none()
            && topology.clients.len() == 2
            && self.inputs.rate_mode == RateMode::ExpectedRank
        {
            vec![self.two_client_rate(topology, allocation)?]
        } else {
            self.simulated_rates(topology, allocation)?
        };
        RateReport::new(rates, topology.k_total)
    }

    /// A single connection matches rank `j` with rank `j`, so the expected
    /// errors are exactly the two ranked profiles.
    fn two_client_rate(&self, topology: &Topology, allocation: &[u32]) -> Result<f64> {
        let storage = topology.storage_distance();
        let [a, b] = [0, 1].map(|i| topology.clients[i].distance_km);
        let (ka, kb) = (allocation[0], allocation[1]);
        let inner = [self.inner_stats(a, storage)?, self.inner_stats(b, storage)?];
        let pa = self.profile(a, ka, 0)?;
        let pb = if a == b && ka == kb { pa.clone() } else { self.profile(b, kb, 0)? };
        let conn = ConnectionStats::from_profiles(inner, [&pa, &pb])?;
        Ok(rate_e2e(&conn))
    }

    /// Joint simulation of all clients' rounds followed by matching.
    fn simulated_rates(&self, topology: &Topology, allocation: &[u32]) -> Result<Vec<f64>> {
        let storage = topology.storage_distance();
        let n = topology.clients.len();
        let mut samplers = Vec::with_capacity(n);
        let mut streams = Vec::with_capacity(n);
        let mut inner = Vec::with_capacity(n);
        for (c, &k) in topology.clients.iter().zip(allocation) {
            samplers.push(BsmSampler::new(c.distance_km, &self.inputs.params_at(c.distance_km)?)?);
            streams.push(seed::stream(
                self.inputs.seed,
                StreamKey {
                    module: Module::Round,
                    distance_km: c.distance_km,
                    k,
                    lane: u64::from(c.id.0),
                },
            ));
            inner.push(self.inner_stats(c.distance_km, storage)?);
        }

        let connections: Vec<(ClientId, ClientId)> = topology.connections.pairs().collect();
        let conn_index: HashMap<(ClientId, ClientId), usize> =
            connections.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let position: HashMap<ClientId, usize> =
            topology.clients.iter().enumerate().map(|(i, c)| (c.id, i)).collect();
        let dc_pos = topology.datacenter.map(|d| position[&d]);

        // Per connection and slot: summed [qx_a, qz_a, qx_b, qz_b] and fill count.
        let mut slots: Vec<Vec<([f64; 4], u64)>> = vec![Vec::new(); connections.len()];
        let mut per_round = vec![0.0; connections.len()];
        let trials = self.inputs.profile_trials;
        let mut rounds: Vec<ClientRound> = Vec::with_capacity(n);
        for _ in 0..trials {
            rounds.clear();
            for i in 0..n {
                rounds.push(ClientRound {
                    client: topology.clients[i].id,
                    links: samplers[i].round(allocation[i], &mut streams[i]),
                });
            }
            let matching = match dc_pos {
                Some(d) => {
                    let others: Vec<ClientRound> =
                        rounds.iter().enumerate().filter(|&(i, _)| i != d).map(|(_, r)| r.clone()).collect();
                    match_datacenter(&rounds[d], &others)
                }
                None => germ_match(&rounds, &topology.connections),
            };
            let mut fill = vec![0usize; connections.len()];
            for (x, y) in matching.pairs {
                let (x, y) = if x.client <= y.client { (x, y) } else { (y, x) };
                let c = conn_index[&(x.client, y.client)];
                let (px, py) = (position[&x.client], position[&y.client]);
                let ox = rounds[px].links[x.rank].outcome;
                let oy = rounds[py].links[y.rank].outcome;
                match self.inputs.rate_mode {
                    RateMode::ExpectedRank => {
                        let j = fill[c];
                        fill[c] += 1;
                        if slots[c].len() <= j {
                            slots[c].push(([0.0; 4], 0));
                        }
                        let slot = &mut slots[c][j];
                        slot.0[0] += ox.qx_outer;
                        slot.0[1] += ox.qz_outer;
                        slot.0[2] += oy.qx_outer;
                        slot.0[3] += oy.qz_outer;
                        slot.1 += 1;
                    }
                    RateMode::PerRound => {
                        per_round[c] += pair_rate(
                            [&inner[px], &inner[py]],
                            [ox.qx_outer, oy.qx_outer],
                            [ox.qz_outer, oy.qz_outer],
                        );
                    }
                }
            }
        }

        let trials = trials as f64;
        match self.inputs.rate_mode {
            RateMode::PerRound => Ok(per_round.into_iter().map(|r| r / trials).collect()),
            RateMode::ExpectedRank => connections
                .iter()
                .zip(&slots)
                .map(|(&(a, b), slots)| {
                    if slots.is_empty() {
                        return Ok(0.0);
                    }
                    let mean = |s: &([f64; 4], u64), i: usize| s.0[i] / s.1 as f64;
                    let outer = [
                        OuterErrors {
                            q_x: slots.iter().map(|s| mean(s, 0)).collect(),
                            q_z: slots.iter().map(|s| mean(s, 1)).collect(),
                        },
                        OuterErrors {
                            q_x: slots.iter().map(|s| mean(s, 2)).collect(),
                            q_z: slots.iter().map(|s| mean(s, 3)).collect(),
                        },
                    ];
                    let conn = ConnectionStats::new([inner[position[&a]], inner[position[&b]]], outer)?;
                    Ok(slots
                        .iter()
                        .enumerate()
                        .map(|(j, s)| s.1 as f64 / trials * conn.rank_rate(j))
                        .sum())
                })
                .collect(),
        }
    }

    fn evaluate_all(&self, topology: &Topology, allocations: Vec<Vec<u32>>) -> Result<Vec<Evaluated>> {
        allocations
            .into_par_iter()
            .map(|allocation| {
                let report = self.evaluate_allocation(topology, &allocation)?;
                Ok(Evaluated { allocation, report })
            })
            .collect()
    }

    /// Best `(k₁, k₂)` split of `k_total` between two clients.
    pub fn optimize_two_client(&self, l1_km: f64, l2_km: f64, k_total: u32) -> Result<AllocationResult> {
        if k_total < 2 {
            return Err(Error::Infeasible(format!("k_total must be at least 2, got {k_total}")));
        }
        let topology = Topology::two_client(l1_km, l2_km, k_total)?;
        let table = self.evaluate_all(&topology, (1..k_total).map(|k1| vec![k1, k_total - k1]).collect())?;
        let best = argmax(&table, |e| e.report.switch_rate).expect("at least one split");
        Ok(AllocationResult {
            allocation: table[best].allocation.clone(),
            rates: table[best].report.clone(),
            feasible: true,
            table,
        })
    }

    /// Placement of the switch along a fiber of `l_total_km`: each grid point
    /// `f` puts client 1 at `f·l_total` and client 2 at `(1 - f)·l_total`.
    pub fn optimize_placement(&self, l_total_km: f64, k_total: u32, grid: &[f64]) -> Result<PlacementResult> {
        if !grid.contains(&0.5) {
            return domain("placement grid must contain 0.5");
        }
        if let Some(f) = grid.iter().find(|&&f| !(f > 0.0 && f < 1.0)) {
            return domain(format!("split fractions must lie in (0, 1), got {f}"));
        }
        let points = grid
            .iter()
            .map(|&f| {
                let (l1, l2) = (f * l_total_km, (1.0 - f) * l_total_km);
                let best = self.optimize_two_client(l1, l2, k_total)?;
                Ok(PlacementPoint {
                    fraction: f,
                    l1_km: l1,
                    l2_km: l2,
                    allocation: best.allocation,
                    rate: best.rates.switch_rate,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let best = (0..points.len())
            .reduce(|i, j| {
                let (a, b) = (&points[i], &points[j]);
                match compare(b.rate, a.rate) {
                    std::cmp::Ordering::Greater => j,
                    std::cmp::Ordering::Less => i,
                    std::cmp::Ordering::Equal => {
                        if (b.fraction - 0.5).abs() < (a.fraction - 0.5).abs() {
                            j
                        } else {
                            i
                        }
                    }
                }
            })
            .expect("non-empty grid");
        Ok(PlacementResult {
            best_fraction: points[best].fraction,
            points,
        })
    }

    /// Data-center allocations: `k_d = k_total/2` on the data center and every
    /// composition of `k_total/2` over the other clients, or every split of
    /// the data-center share too when `enumerate_datacenter` is set.
    pub fn datacenter_allocations(&self, topology: &Topology, enumerate_datacenter: bool) -> Result<Vec<Vec<u32>>> {
        let dc = topology.datacenter.ok_or_else(|| Error::Domain("topology has no data center".into()))?;
        let dc_pos = topology.position(dc).expect("validated");
        let n = topology.clients.len() - 1;
        let k_total = topology.k_total;
        if !k_total.is_multiple_of(2) {
            return Err(Error::Infeasible(format!("k_total must be even, got {k_total}")));
        }
        if (k_total / 2) < n as u32 {
            return Err(Error::Infeasible(format!(
                "k_total/2 = {} cannot give each of {n} clients a link",
                k_total / 2
            )));
        }
        let dc_shares: Vec<u32> = if enumerate_datacenter {
            (n as u32..=k_total - n as u32).collect()
        } else {
            vec![k_total / 2]
        };
        let mut out = Vec::new();
        for k_d in dc_shares {
            for comp in compositions(k_total - k_d, n) {
                let mut alloc = comp;
                alloc.insert(dc_pos, k_d);
                out.push(alloc);
            }
        }
        Ok(out)
    }

    /// Highest switch rate among allocations with fairness below `threshold`;
    /// if none qualifies, the fairest allocation flagged infeasible.
    pub fn optimize_multi_fair(
        &self,
        topology: &Topology,
        threshold: f64,
        enumerate_datacenter: bool,
    ) -> Result<AllocationResult> {
        if !(threshold > 0.0) {
            return domain(format!("fairness threshold must be > 0, got {threshold}"));
        }
        let allocations = self.datacenter_allocations(topology, enumerate_datacenter)?;
        let table = self.evaluate_all(topology, allocations)?;
        let feasible: Vec<usize> = (0..table.len())
            .filter(|&i| table[i].report.fairness.value < threshold)
            .collect();
        let (best, ok) = if feasible.is_empty() {
            (argmax(&table, |e| -e.report.fairness.value).expect("non-empty"), false)
        } else {
            let sub: Vec<Evaluated> = feasible.iter().map(|&i| table[i].clone()).collect();
            (feasible[argmax(&sub, |e| e.report.switch_rate).expect("non-empty")], true)
        };
        Ok(AllocationResult {
            allocation: table[best].allocation.clone(),
            rates: table[best].report.clone(),
            feasible: ok,
            table,
        })
    }

    /// Switch rate of every data-center allocation with `k_d = k_total/2`.
    pub fn dominant_client_sweep(&self, topology: &Topology) -> Result<SweepResult> {
        let dc = topology.datacenter.ok_or_else(|| Error::Domain("topology has no data center".into()))?;
        let l_d = topology.distance(dc).expect("validated");
        if let Some(c) = topology.edge_clients().find(|c| c.distance_km >= l_d) {
            return domain(format!(
                "data center at {l_d} km must be farther than client {} at {} km",
                c.id, c.distance_km
            ));
        }
        let rows = self.evaluate_all(topology, self.datacenter_allocations(topology, false)?)?;
        let values: Vec<f64> = rows.iter().map(|r| r.report.switch_rate).collect();
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        Ok(SweepResult {
            rows,
            mean,
            std,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }

    /// Fairest allocation for each budget in `k_totals`, with the clients and
    /// data center of `base`.
    pub fn fairness_sweep(&self, base: &Topology, k_totals: &[u32]) -> Result<Vec<FairnessPoint>> {
        k_totals
            .iter()
            .map(|&k_total| {
                let topology = Topology { k_total, ..base.clone() };
                topology.validate()?;
                let table = self.evaluate_all(&topology, self.datacenter_allocations(&topology, false)?)?;
                let best = argmax(&table, |e| -e.report.fairness.value).expect("non-empty");
                Ok(FairnessPoint {
                    k_total,
                    allocation: table[best].allocation.clone(),
                    report: table[best].report.clone(),
                })
            })
            .collect()
    }
}

/// Compositions of `total` into `parts` positive integers, lexicographic.
pub fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    fn go(rest: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            prefix.push(rest);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 1..=rest.saturating_sub(parts as u32 - 1) {
            prefix.push(k);
            go(rest - k, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts > 0 && total >= parts as u32 {
        go(total, parts, &mut Vec::with_capacity(parts), &mut out);
    }
    out
}

fn compare(a: f64, b: f64) -> std::cmp::Ordering {
    let scale = a.abs().max(b.abs());
    if (a - b).abs() <= TIE_RTOL * scale {
        std::cmp::Ordering::Equal
    } else {
        a.total_cmp(&b)
    }
}

fn imbalance(allocation: &[u32]) -> u32 {
    allocation.iter().max().unwrap_or(&0) - allocation.iter().min().unwrap_or(&0)
}

/// Index of the best row: highest objective, then most balanced, then
/// lexicographically smallest allocation.
fn argmax(table: &[Evaluated], objective: impl Fn(&Evaluated) -> f64) -> Option<usize> {
    (0..table.len()).reduce(|i, j| {
        let (a, b) = (&table[i], &table[j]);
        let better = compare(objective(b), objective(a))
            .then_with(|| imbalance(&a.allocation).cmp(&imbalance(&b.allocation)))
            .then_with(|| a.allocation.cmp(&b.allocation));
        if better == std::cmp::Ordering::Greater {
            j
        } else {
            i
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluated {
    pub allocation: Vec<u32>,
    pub report: RateReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationResult {
    /// Per-client links, aligned with the topology's clients.
    pub allocation: Vec<u32>,
    pub rates: RateReport,
    pub feasible: bool,
    /// Every evaluated allocation.
    pub table: Vec<Evaluated>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlacementPoint {
    pub fraction: f64,
    pub l1_km: f64,
    pub l2_km: f64,
    pub allocation: Vec<u32>,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlacementResult {
    pub best_fraction: f64,
    pub points: Vec<PlacementPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<Evaluated>,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FairnessPoint {
    pub k_total: u32,
    pub allocation: Vec<u32>,
    pub report: RateReport,
}
