//! Gaussian-displacement noise model for GKP qubits.
//!
//! Every quantity here is expressed in shot-noise units with vacuum variance
//! 1/2. A square GKP qubit has lattice spacing `√π`: even multiples of `√π`
//! decode to one logical value and odd multiples to the other, so a
//! quadrature displacement is a logical error when it lands closer to an odd
//! multiple than to an even one.
//!
//! Fiber loss is converted to additive displacement noise by following a
//! pure-loss channel of transmissivity `η` with a quantum-limited amplifier
//! of gain `1/η`, which leaves a Gaussian random displacement of variance
//! `(1 - η)/η` per quadrature.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{domain, Error, Result};

/// `√π`, the GKP lattice spacing.
pub const SQRT_PI: f64 = 1.772_453_850_905_515_9;

/// Half of the lattice spacing; remainders are folded into `[-HALF_CELL, HALF_CELL)`.
pub const HALF_CELL: f64 = SQRT_PI / 2.0;

/// Default fiber attenuation in dB/km.
pub const DEFAULT_ALPHA_DB_PER_KM: f64 = 0.2;

/// Default preparation noise variance, roughly 13 dB of GKP squeezing.
pub const DEFAULT_SIGMA2_PREP: f64 = 0.025;

/// Default truncation order of the periodic-Gaussian lattice sums.
pub const DEFAULT_N_MAX: u32 = 10;

/// Physical parameters of the displacement-noise model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub alpha_db_per_km: f64,
    pub sigma2_prep: f64,
    /// Discard window half-width applied to every prepared GKP qubit.
    pub nu: f64,
    pub n_max: u32,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            alpha_db_per_km: DEFAULT_ALPHA_DB_PER_KM,
            sigma2_prep: DEFAULT_SIGMA2_PREP,
            nu: 0.0,
            n_max: DEFAULT_N_MAX,
        }
    }
}

impl NoiseParams {
    pub fn new(alpha_db_per_km: f64, sigma2_prep: f64, nu: f64, n_max: u32) -> Result<Self> {
        let params = Self {
            alpha_db_per_km,
            sigma2_prep,
            nu,
            n_max,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_db_per_km > 0.0 && self.alpha_db_per_km.is_finite()) {
            return domain(format!("alpha_db_per_km must be > 0, got {}", self.alpha_db_per_km));
        }
        if !(self.sigma2_prep > 0.0 && self.sigma2_prep.is_finite()) {
            return domain(format!("sigma2_prep must be > 0, got {}", self.sigma2_prep));
        }
        if !(0.0..HALF_CELL).contains(&self.nu) {
            return domain(format!("nu must lie in [0, √π/2), got {}", self.nu));
        }
        if self.n_max < 5 {
            return domain(format!("n_max must be at least 5, got {}", self.n_max));
        }
        Ok(())
    }

    /// The lattice spacing, fixed at `√π`.
    pub fn lattice(&self) -> f64 {
        SQRT_PI
    }

    pub fn with_nu(self, nu: f64) -> Self {
        Self { nu, ..self }
    }

    /// Variance carried by each quadrature of a Bell-state measurement between
    /// two outer leaves that each travel half of `l_km`.
    pub fn bsm_variance(&self, l_km: f64) -> Result<f64> {
        Ok(2.0 * self.sigma2_prep + 2.0 * channel_variance(l_km / 2.0, self)?)
    }

    /// Variance of a stored inner-leaf qubit after `l_storage_km` of fiber spool.
    pub fn storage_variance(&self, l_storage_km: f64) -> Result<f64> {
        Ok(self.sigma2_prep + channel_variance(l_storage_km, self)?)
    }

    /// Stable key used for caching results that depend on these parameters.
    pub(crate) fn cache_key(&self) -> [u64; 4] {
        [
            self.alpha_db_per_km.to_bits(),
            self.sigma2_prep.to_bits(),
            self.nu.to_bits(),
            u64::from(self.n_max),
        ]
    }
}

/// A quadrature outcome folded into the fundamental cell `[-√π/2, √π/2)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct QuadratureRemainder(f64);

impl QuadratureRemainder {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Fiber transmissivity `10^(-alpha·l/10)`.
pub fn transmissivity(l_km: f64, alpha_db_per_km: f64) -> Result<f64> {
    if !(l_km >= 0.0) || !l_km.is_finite() {
        return domain(format!("fiber length must be >= 0, got {l_km}"));
    }
    Ok(10f64.powf(-alpha_db_per_km * l_km / 10.0))
}

/// Displacement-noise variance `(1 - η)/η` added by `l_km` of fiber.
pub fn channel_variance(l_km: f64, params: &NoiseParams) -> Result<f64> {
    let eta = transmissivity(l_km, params.alpha_db_per_km)?;
    let v = (1.0 - eta) / eta;
    if !v.is_finite() {
        return domain(format!("{l_km} km of fiber transmits nothing"));
    }
    Ok(v)
}

/// Folds `x` onto the lattice cell centred at the nearest multiple of `√π`.
pub fn fold_remainder(x: f64) -> QuadratureRemainder {
    let mut t = x - SQRT_PI * (x / SQRT_PI).round();
    if t >= HALF_CELL {
        t -= SQRT_PI;
    } else if t < -HALF_CELL {
        t += SQRT_PI;
    }
    QuadratureRemainder(t)
}

/// Probability that a remainder `t` observed under Gaussian noise of variance
/// `sigma2` came from an odd lattice shift, i.e. that rounding to the nearest
/// even multiple of `√π` is a logical error.
///
/// The odd and even periodic-Gaussian weights are summed over
/// `|n| <= n_max`. The result lies in `(0, 1/2]` for `|t| <= √π/2`.
pub fn error_likelihood(t: f64, sigma2: f64, n_max: u32) -> Result<f64> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return domain(format!("noise variance must be > 0, got {sigma2}"));
    }
    if !t.is_finite() {
        return domain("remainder must be finite");
    }
    Ok(likelihood(t, sigma2, n_max))
}

pub(crate) fn likelihood(t: f64, sigma2: f64, n_max: u32) -> f64 {
    let n_max = n_max as i64;
    let inv = -1.0 / (2.0 * sigma2);
    // Exponents are shifted by their maximum so that tiny variances do not
    // underflow both sums to zero.
    let mut top = f64::NEG_INFINITY;
    for n in -n_max..=n_max {
        let even = t - (2 * n) as f64 * SQRT_PI;
        let odd = t - (2 * n + 1) as f64 * SQRT_PI;
        top = top.max(inv * even * even).max(inv * odd * odd);
    }
    let mut even_sum = 0.0;
    let mut odd_sum = 0.0;
    for n in -n_max..=n_max {
        let even = t - (2 * n) as f64 * SQRT_PI;
        let odd = t - (2 * n + 1) as f64 * SQRT_PI;
        let e = inv * even * even - top;
        let o = inv * odd * odd - top;
        if e > -745.0 {
            even_sum += e.exp();
        }
        if o > -745.0 {
            odd_sum += o.exp();
        }
    }
    odd_sum / (odd_sum + even_sum)
}

/// Draws folded preparation noise, discarding samples that fall within `nu`
/// of the cell boundary.
#[derive(Debug, Clone, Copy)]
pub struct PreparationSampler {
    normal: Normal<f64>,
    accept: f64,
}

impl PreparationSampler {
    pub fn new(sigma2_prep: f64, nu: f64) -> Result<Self> {
        if !(0.0..HALF_CELL).contains(&nu) {
            return domain(format!("nu must lie in [0, √π/2), got {nu}"));
        }
        let normal = Normal::new(0.0, sigma2_prep.sqrt())
            .map_err(|e| Error::Domain(format!("invalid preparation variance {sigma2_prep}: {e}")))?;
        Ok(Self {
            normal,
            accept: HALF_CELL - nu,
        })
    }

    pub fn from_params(params: &NoiseParams) -> Result<Self> {
        Self::new(params.sigma2_prep, params.nu)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> QuadratureRemainder {
        loop {
            let t = fold_remainder(self.normal.sample(rng));
            if t.0.abs() <= self.accept {
                return t;
            }
        }
    }
}

/// Samples one prepared GKP qubit's quadrature remainder.
pub fn sample_prepared_remainder<R: Rng + ?Sized>(
    sigma2_prep: f64,
    nu: f64,
    rng: &mut R,
) -> Result<QuadratureRemainder> {
    Ok(PreparationSampler::new(sigma2_prep, nu)?.sample(rng))
}

/// Tabulated inter-nodal spacings (km) and their discard windows in units of `√π/20`.
pub const DISCARD_TABLE: [(f64, f64); 5] =
    [(0.5, 7.0), (1.0, 6.0), (2.0, 5.0), (2.5, 4.0), (5.0, 3.0)];

/// A discard window resolved from a distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscardWindow {
    pub nu: f64,
    /// Window in units of `√π/20`.
    pub multiplier: f64,
    /// Set when the distance lies outside the tabulated range and was clamped.
    pub extrapolated: bool,
}

/// Discard window for a given inter-nodal spacing, interpolated linearly
/// between the tabulated points.
pub fn discard_window_for(l_km: f64) -> Result<DiscardWindow> {
    if !(l_km > 0.0) || !l_km.is_finite() {
        return domain(format!("distance must be > 0, got {l_km}"));
    }
    let (first, last) = (DISCARD_TABLE[0], DISCARD_TABLE[DISCARD_TABLE.len() - 1]);
    let (multiplier, extrapolated) = if l_km < first.0 {
        (first.1, true)
    } else if l_km > last.0 {
        (last.1, true)
    } else {
        let m = DISCARD_TABLE
            .windows(2)
            .find(|w| l_km <= w[1].0)
            .map(|w| {
                let (l0, m0) = w[0];
                let (l1, m1) = w[1];
                m0 + (m1 - m0) * (l_km - l0) / (l1 - l0)
            })
            .unwrap_or(last.1);
        (m, false)
    };
    Ok(DiscardWindow {
        nu: multiplier * SQRT_PI / 20.0,
        multiplier,
        extrapolated,
    })
}
