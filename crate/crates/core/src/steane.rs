//! [[7,1,3]] Steane-code lookup decoding of inner-leaf GKP qubits.
//!
//! Each CSS family is decoded independently with the [7,4] Hamming code whose
//! parity-check column for qubit `j` (0-based) is the binary form of `j + 1`.
//! A nonzero syndrome therefore names the qubit to flip directly. The logical
//! operator is supported on all seven qubits, so the residual error is a
//! logical flip exactly when it has odd weight.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::noise::{channel_variance, fold_remainder, likelihood, NoiseParams, PreparationSampler};

pub const BLOCK: usize = 7;
const MASK: u8 = 0x7f;

/// Minimum Monte Carlo sample count for inner-leaf estimation.
pub const MIN_INNER_SAMPLES: u64 = 10_000;

/// Physical flips on the seven GKP qubits of one inner leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ErrorPattern {
    x_flips: u8,
    z_flips: u8,
}

impl ErrorPattern {
    pub fn new(x_flips: u8, z_flips: u8) -> Result<Self> {
        if x_flips & !MASK != 0 || z_flips & !MASK != 0 {
            return Err(Error::Domain(format!(
                "flip masks must fit in 7 bits, got {x_flips:#x}/{z_flips:#x}"
            )));
        }
        Ok(Self { x_flips, z_flips })
    }

    pub fn x_flips(&self) -> u8 {
        self.x_flips
    }

    pub fn z_flips(&self) -> u8 {
        self.z_flips
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SteaneOutcome {
    pub s_x: bool,
    pub s_z: bool,
    pub logical_x_flip: bool,
    pub logical_z_flip: bool,
}

/// 3-bit Hamming syndrome of a 7-bit flip mask.
pub fn hamming_syndrome(mask: u8) -> u8 {
    (0..BLOCK)
        .filter(|j| mask >> j & 1 == 1)
        .fold(0, |acc, j| acc ^ (j as u8 + 1))
}

/// Decodes one CSS family: returns `(syndrome nontrivial, logical flip)`.
pub fn decode_family(mask: u8) -> (bool, bool) {
    let syndrome = hamming_syndrome(mask & MASK);
    let correction = if syndrome == 0 { 0 } else { 1u8 << (syndrome - 1) };
    let residual = (mask & MASK) ^ correction;
    (syndrome != 0, residual.count_ones() % 2 == 1)
}

pub fn steane_decode(pattern: ErrorPattern) -> SteaneOutcome {
    let (s_x, logical_x_flip) = decode_family(pattern.x_flips);
    let (s_z, logical_z_flip) = decode_family(pattern.z_flips);
    SteaneOutcome {
        s_x,
        s_z,
        logical_x_flip,
        logical_z_flip,
    }
}

/// Syndrome probability and syndrome-conditioned logical error rates of a
/// stored inner leaf, per quadrature family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerLeafStats {
    pub t_x: f64,
    pub t_z: f64,
    /// Logical X error probability indexed by syndrome `s ∈ {0, 1}`.
    pub q_inner_x: [f64; 2],
    pub q_inner_z: [f64; 2],
}

impl InnerLeafStats {
    /// Noiseless inner leaf.
    pub fn perfect() -> Self {
        Self {
            t_x: 0.0,
            t_z: 0.0,
            q_inner_x: [0.0; 2],
            q_inner_z: [0.0; 2],
        }
    }

    pub fn family(&self, family: crate::rates::Family) -> (f64, [f64; 2]) {
        match family {
            crate::rates::Family::X => (self.t_x, self.q_inner_x),
            crate::rates::Family::Z => (self.t_z, self.q_inner_z),
        }
    }
}

/// Mergeable counts for one quadrature family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FamilyTally {
    pub samples: u64,
    /// Samples per syndrome value.
    pub by_syndrome: [u64; 2],
    /// Logical flips per syndrome value.
    pub flips: [u64; 2],
}

impl FamilyTally {
    pub fn record(&mut self, mask: u8) {
        let (s, flip) = decode_family(mask);
        self.samples += 1;
        self.by_syndrome[s as usize] += 1;
        self.flips[s as usize] += flip as u64;
    }

    pub fn merge(&mut self, other: &FamilyTally) {
        self.samples += other.samples;
        for s in 0..2 {
            self.by_syndrome[s] += other.by_syndrome[s];
            self.flips[s] += other.flips[s];
        }
    }

    pub fn syndrome_rate(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.by_syndrome[1] as f64 / self.samples as f64
        }
    }

    /// Conditional logical error rate; zero when the syndrome class is empty.
    pub fn conditional(&self) -> [f64; 2] {
        let mut q = [0.0; 2];
        for s in 0..2 {
            if self.by_syndrome[s] > 0 {
                q[s] = self.flips[s] as f64 / self.by_syndrome[s] as f64;
            }
        }
        q
    }
}

/// Tallies `samples` blocks whose per-qubit flips are produced by `flip`.
pub fn tally_family<R, F>(samples: u64, rng: &mut R, mut flip: F) -> FamilyTally
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> bool,
{
    let mut tally = FamilyTally::default();
    for _ in 0..samples {
        let mut mask = 0u8;
        for j in 0..BLOCK {
            if flip(rng) {
                mask |= 1 << j;
            }
        }
        tally.record(mask);
    }
    tally
}

pub fn stats_from_tallies(x: &FamilyTally, z: &FamilyTally) -> InnerLeafStats {
    InnerLeafStats {
        t_x: x.syndrome_rate(),
        t_z: z.syndrome_rate(),
        q_inner_x: x.conditional(),
        q_inner_z: z.conditional(),
    }
}

fn check_samples(samples: u64) -> Result<()> {
    if samples < MIN_INNER_SAMPLES {
        return Err(Error::Config(format!(
            "inner-leaf samples must be at least {MIN_INNER_SAMPLES}, got {samples}"
        )));
    }
    Ok(())
}

/// Per-qubit flip sampler for a stored inner-leaf GKP qubit: truncated
/// preparation noise plus storage-channel noise, then a flip drawn with the
/// analog error likelihood of the folded remainder.
struct StoredQubit {
    prep: PreparationSampler,
    channel: Normal<f64>,
    sigma2: f64,
    n_max: u32,
}

impl StoredQubit {
    fn new(l_storage_km: f64, params: &NoiseParams) -> Result<Self> {
        params.validate()?;
        let cv = channel_variance(l_storage_km, params)?;
        Ok(Self {
            prep: PreparationSampler::from_params(params)?,
            channel: Normal::new(0.0, cv.sqrt()).map_err(|e| Error::Domain(e.to_string()))?,
            sigma2: params.sigma2_prep + cv,
            n_max: params.n_max,
        })
    }

    fn flip<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        let x = self.prep.sample(rng).value() + self.channel.sample(rng);
        let t = fold_remainder(x).value();
        let p = likelihood(t, self.sigma2, self.n_max);
        rng.random::<f64>() < p
    }
}

/// Monte Carlo estimate of the inner-leaf statistics after `l_storage_km` of
/// fiber storage. The two quadrature families use independent draws.
pub fn estimate_inner_stats<R: Rng + ?Sized>(
    l_storage_km: f64,
    params: &NoiseParams,
    samples: u64,
    rng: &mut R,
) -> Result<InnerLeafStats> {
    check_samples(samples)?;
    let qubit = StoredQubit::new(l_storage_km, params)?;
    let x = tally_family(samples, rng, |r| qubit.flip(r));
    let z = tally_family(samples, rng, |r| qubit.flip(r));
    Ok(stats_from_tallies(&x, &z))
}

/// Same estimate with i.i.d. physical flips of probability `p`, bypassing the
/// noise model.
pub fn estimate_inner_stats_iid<R: Rng + ?Sized>(
    p: f64,
    samples: u64,
    rng: &mut R,
) -> Result<InnerLeafStats> {
    check_samples(samples)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("flip probability must be in [0,1], got {p}")));
    }
    let x = tally_family(samples, rng, |r| r.random::<f64>() < p);
    let z = tally_family(samples, rng, |r| r.random::<f64>() < p);
    Ok(stats_from_tallies(&x, &z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Exhaustive enumeration over all 2^7 flip patterns of one family.
    fn exhaustive(p: f64) -> (f64, [f64; 2]) {
        let mut by_s = [0.0; 2];
        let mut flips = [0.0; 2];
        for mask in 0u8..128 {
            let w = mask.count_ones() as i32;
            let prob = p.powi(w) * (1.0 - p).powi(7 - w);
            // Syndrome from explicit parity-check rows.
            let rows = [0b1010101u8, 0b1100110, 0b1111000];
            let syn: Vec<u8> = rows.iter().map(|r| ((mask & r).count_ones() % 2) as u8).collect();
            let s = syn.contains(&1) as usize;
            let pos = syn[0] as usize | (syn[1] as usize) << 1 | (syn[2] as usize) << 2;
            let mut residual = mask;
            if pos != 0 {
                residual ^= 1 << (pos - 1);
            }
            by_s[s] += prob;
            if residual.count_ones() % 2 == 1 {
                flips[s] += prob;
            }
        }
        (by_s[1], [flips[0] / by_s[0], flips[1] / by_s[1]])
    }

    #[test]
    fn zero_pattern() {
        let out = steane_decode(ErrorPattern::default());
        assert_eq!(
            out,
            SteaneOutcome {
                s_x: false,
                s_z: false,
                logical_x_flip: false,
                logical_z_flip: false
            }
        );
    }

    #[test]
    fn single_flips_are_corrected() {
        for j in 0..7 {
            let out = steane_decode(ErrorPattern::new(1 << j, 1 << j).unwrap());
            assert!(out.s_x && out.s_z);
            assert!(!out.logical_x_flip && !out.logical_z_flip);
        }
        let out = steane_decode(ErrorPattern::new(1 << 3, 0).unwrap());
        assert!(out.s_x && !out.s_z && !out.logical_x_flip);
    }

    #[test]
    fn pattern_rejects_wide_masks() {
        assert!(ErrorPattern::new(0x80, 0).is_err());
        assert!(ErrorPattern::new(0, 0xff).is_err());
    }

    #[test]
    fn decoder_is_total_and_consistent() {
        for x in 0u8..128 {
            for z in 0u8..128 {
                let out = steane_decode(ErrorPattern::new(x, z).unwrap());
                assert_eq!((out.s_x, out.logical_x_flip), decode_family(x));
                assert_eq!((out.s_z, out.logical_z_flip), decode_family(z));
            }
        }
        // Weight-2 errors are miscorrected into logical flips.
        assert_eq!(decode_family(0b11), (true, true));
        // Stabilizers (weight-4 codewords) are harmless and silent.
        assert_eq!(decode_family(0b1111000), (false, false));
        // Weight-3 codewords are undetected logical operators.
        assert_eq!(decode_family(0b0000111), (false, true));
    }

    #[test]
    fn exhaustive_flip_fraction() {
        let p = 0.05;
        let mut logical = 0.0;
        let mut oracle_logical = 0.0;
        let (t, q) = exhaustive(p);
        for mask in 0u8..128 {
            let w = mask.count_ones() as i32;
            let prob = p.powi(w) * (1.0 - p).powi(7 - w);
            if decode_family(mask).1 {
                logical += prob;
            }
        }
        oracle_logical += (1.0 - t) * q[0] + t * q[1];
        assert!((logical - oracle_logical).abs() < 1e-15);
    }

    #[test]
    fn iid_monte_carlo_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for p in [0.01, 0.05, 0.1] {
            let (t, q) = exhaustive(p);
            let n = 200_000u64;
            let est = estimate_inner_stats_iid(p, n, &mut rng).unwrap();
            for (t_hat, q_hat) in [(est.t_x, est.q_inner_x), (est.t_z, est.q_inner_z)] {
                let se_t = (t * (1.0 - t) / n as f64).sqrt();
                assert!((t_hat - t).abs() < 3.0 * se_t, "p={p}: t {t_hat} vs {t}");
                let classes = [(1.0 - t) * n as f64, t * n as f64];
                for s in 0..2 {
                    let se = (q[s] * (1.0 - q[s]) / classes[s]).sqrt();
                    assert!((q_hat[s] - q[s]).abs() < 3.0 * se + 1e-12, "p={p} s={s}");
                }
            }
        }
    }

    #[test]
    fn convergence_rate() {
        // Error at 1e6 samples should be roughly 10x smaller than at 1e4.
        let p = 0.05;
        let (t, _) = exhaustive(p);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut small = 0.0;
        let reps = 20;
        for _ in 0..reps {
            let e = estimate_inner_stats_iid(p, 10_000, &mut rng).unwrap();
            small += (e.t_x - t).powi(2);
        }
        let small = (small / reps as f64).sqrt();
        let large = estimate_inner_stats_iid(p, 1_000_000, &mut rng).unwrap();
        let se_large = (t * (1.0 - t) / 1e6).sqrt();
        let se_small = (t * (1.0 - t) / 1e4).sqrt();
        assert!((large.t_x - t).abs() < 3.0 * se_large);
        assert!(small < 2.0 * se_small && small > 0.3 * se_small);
    }

    #[test]
    fn minimum_samples_enforced() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = NoiseParams::default();
        assert!(matches!(
            estimate_inner_stats(1.0, &p, 999, &mut rng),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            estimate_inner_stats_iid(0.1, 10, &mut rng),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn noiseless_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = NoiseParams::new(0.2, 1e-4, 0.0, 10).unwrap();
        let s = estimate_inner_stats(0.0, &p, 20_000, &mut rng).unwrap();
        assert_eq!(s.t_x, 0.0);
        assert_eq!(s.q_inner_x[0], 0.0);
        assert_eq!(s.q_inner_z[0], 0.0);
    }

    #[test]
    fn detected_syndrome_raises_residual_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = NoiseParams::new(0.2, 0.2, 0.0, 10).unwrap();
        let s = estimate_inner_stats(0.0, &p, 100_000, &mut rng).unwrap();
        assert!(s.q_inner_x[1] >= s.q_inner_x[0]);
        assert!(s.q_inner_z[1] >= s.q_inner_z[0]);
    }

    #[test]
    fn stats_grow_with_storage_distance() {
        let p = NoiseParams::default();
        let mut prev: Option<InnerLeafStats> = None;
        for l in [0.5, 1.0, 2.0, 2.5, 5.0] {
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let s = estimate_inner_stats(l, &p, 200_000, &mut rng).unwrap();
            if let Some(prev) = prev {
                assert!(s.t_x >= prev.t_x && s.t_z >= prev.t_z, "t at {l}");
                for k in 0..2 {
                    assert!(s.q_inner_x[k] >= prev.q_inner_x[k], "qx[{k}] at {l}");
                    assert!(s.q_inner_z[k] >= prev.q_inner_z[k], "qz[{k}] at {l}");
                }
            }
            prev = Some(s);
        }
    }
}
