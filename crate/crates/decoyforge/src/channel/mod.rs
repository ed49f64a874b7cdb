//! Forward simulation of the quantum channel and detectors.
//!
//! This module produces two things: ground-truth per-photon-number yield and
//! error tables (what the channel actually does to Fock states), and the
//! observed gains/error masses a protocol run would record (exact convex
//! combinations of the truth under the source photon statistics). The
//! estimators never see the truth tables; they see only the observables.

mod monte_carlo;
mod relay;

pub use monte_carlo::{bb84_gain_monte_carlo, mdi_s11_z_monte_carlo};
pub use relay::RELAY_CUTOFF;

use crate::error::{Error, Result};
use crate::sources::PhotonNumberDistribution;

/// Detector and channel parameters.
///
/// `total_loss_db` is the total transmission loss between the parties (for
/// the relay protocol the untrusted node sits at the midpoint). `e_0` is the
/// error rate of background events (one half for random dark counts).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub total_loss_db: f64,
    /// Receiver detection efficiency, folded into the overall transmittance.
    pub zeta: f64,
    /// Dark-count rate per receiver detector per gate.
    pub p_d: f64,
    /// Misalignment error probability.
    pub e_d: f64,
    /// Background error rate.
    pub e_0: f64,
    /// Error-correction inefficiency (used by the relay protocol's rate).
    pub f_ec: f64,
    /// Heralding detector efficiency (heralded sources only).
    pub eta_v: f64,
    /// Heralding dark-count rate (heralded sources only).
    pub p_dv: f64,
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("zeta", self.zeta),
            ("p_d", self.p_d),
            ("e_d", self.e_d),
            ("e_0", self.e_0),
            ("eta_v", self.eta_v),
            ("p_dv", self.p_dv),
        ];
        for (name, v) in probs {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in [0,1], got {v}"
                )));
            }
        }
        if self.total_loss_db < 0.0 || !self.total_loss_db.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "total_loss_db must be finite and non-negative, got {}",
                self.total_loss_db
            )));
        }
        if self.f_ec < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "f_ec must be at least 1, got {}",
                self.f_ec
            )));
        }
        Ok(())
    }

    /// End-to-end transmittance `10^(-loss/10)` (excluding `zeta`).
    pub fn transmittance(&self) -> f64 {
        10f64.powf(-self.total_loss_db / 10.0)
    }

    pub fn with_loss(&self, loss_db: f64) -> Self {
        Self {
            total_loss_db: loss_db,
            ..*self
        }
    }
}

/// Transmission probability of an n-photon pulse through a channel in which
/// each photon survives independently with probability `xi`:
/// `1 − (1−xi)^n`.
pub fn n_photon_transmittance(xi: f64, n: u32) -> f64 {
    1.0 - (1.0 - xi).powi(n as i32)
}

/// Binomial loss: the output photon-number distribution when each of `n`
/// input photons independently survives with probability `xi`.
pub fn binomial_loss(n: usize, xi: f64) -> Vec<f64> {
    let mut pmf = vec![0.0; n + 1];
    // C(n,k) xi^k (1-xi)^(n-k), built by the multiplicative recurrence.
    let q = 1.0 - xi;
    pmf[0] = q.powi(n as i32);
    if xi == 0.0 {
        return pmf;
    }
    for k in 1..=n {
        pmf[k] = pmf[k - 1] * ((n - k + 1) as f64 / k as f64) * (xi / q.max(f64::MIN_POSITIVE));
    }
    if xi == 1.0 {
        // The recurrence degenerates at q = 0; the distribution is one-hot.
        pmf.iter_mut().for_each(|p| *p = 0.0);
        pmf[n] = 1.0;
    }
    pmf
}

/// Ground-truth yields and error rates per photon number for the
/// point-to-point protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct Bb84Truth {
    pub yields: Vec<f64>,
    pub errors: Vec<f64>,
}

impl Bb84Truth {
    pub fn k_max(&self) -> usize {
        self.yields.len() - 1
    }

    /// Error mass `t_k = s_k e_k`.
    pub fn error_mass(&self, k: usize) -> f64 {
        self.yields[k] * self.errors[k]
    }
}

/// Standard threshold-detector model with overall single-photon
/// transmittance `η = ξ·ζ`:
/// yield `s_k = 1 − (1−p_d)(1−η)^k`, error mass
/// `t_k = e_0 p_d (1−η)^k + e_d [1 − (1−η)^k]`.
pub fn bb84_truth(params: &ChannelParams, k_max: usize) -> Result<Bb84Truth> {
    params.validate()?;
    let eta = params.transmittance() * params.zeta;
    let mut yields = Vec::with_capacity(k_max + 1);
    let mut errors = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let miss = (1.0 - eta).powi(k as i32);
        let s = 1.0 - (1.0 - params.p_d) * miss;
        let t = params.e_0 * params.p_d * miss + params.e_d * (1.0 - miss);
        yields.push(s);
        errors.push(if s > 0.0 { t / s } else { params.e_0 });
    }
    Ok(Bb84Truth { yields, errors })
}

/// Basis of a relay-protocol truth table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    X,
    Z,
}

/// Ground-truth per-pair yields and error rates for the relay protocol,
/// indexed by the photon numbers (j,k) the two parties emitted.
#[derive(Debug, Clone, PartialEq)]
pub struct MdiTruth {
    cutoff: usize,
    yields: Vec<f64>,
    errors: Vec<f64>,
}

impl MdiTruth {
    pub fn new(cutoff: usize, yields: Vec<f64>, errors: Vec<f64>) -> Result<Self> {
        let n = (cutoff + 1) * (cutoff + 1);
        if yields.len() != n || errors.len() != n {
            return Err(Error::InvalidParameter(format!(
                "truth table must hold {n} entries for cutoff {cutoff}"
            )));
        }
        Ok(Self {
            cutoff,
            yields,
            errors,
        })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    #[inline]
    fn idx(&self, j: usize, k: usize) -> usize {
        j * (self.cutoff + 1) + k
    }

    pub fn yield_at(&self, j: usize, k: usize) -> f64 {
        self.yields[self.idx(j, k)]
    }

    pub fn error_at(&self, j: usize, k: usize) -> f64 {
        self.errors[self.idx(j, k)]
    }

    pub fn error_mass_at(&self, j: usize, k: usize) -> f64 {
        self.yield_at(j, k) * self.error_at(j, k)
    }
}

/// Simulate the untrusted relay for every photon-number pair up to the
/// cutoff. See [`relay`] for the model: binomial loss on each arm with
/// per-arm transmittance √(ξζ), a balanced beamsplitter Bell-state analyzer
/// with four unit-efficiency threshold detectors and dark counts, one-sided
/// polarization flip with probability `e_d`, and (in the X basis) a uniform
/// average over the relative phase of the two pulses.
pub fn mdi_truth(params: &ChannelParams, basis: Basis) -> Result<MdiTruth> {
    params.validate()?;
    relay::simulate_truth(params, basis)
}

/// An observed gain together with its error mass `T = S·E`.
///
/// Carrying the mass rather than the rate keeps `S = 0` well-defined; the
/// rate is reported as `None` in that case.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Observation {
    pub gain: f64,
    pub error_mass: f64,
}

impl Observation {
    pub fn error_rate(&self) -> Option<f64> {
        if self.gain > 0.0 {
            Some(self.error_mass / self.gain)
        } else {
            None
        }
    }
}

/// Observed gain and error mass for one source against a point-to-point
/// truth table: `S = Σ_k a_k s_k`, `T = Σ_k a_k s_k e_k`.
pub fn bb84_observe(truth: &Bb84Truth, source: &PhotonNumberDistribution) -> Result<Observation> {
    if source.k_max() < truth.k_max() {
        return Err(Error::InvalidParameter(format!(
            "source cutoff {} below truth cutoff {}",
            source.k_max(),
            truth.k_max()
        )));
    }
    let mut gain = 0.0;
    let mut mass = 0.0;
    for k in 0..=truth.k_max() {
        gain += source.coeff(k) * truth.yields[k];
        mass += source.coeff(k) * truth.error_mass(k);
    }
    Ok(Observation {
        gain,
        error_mass: mass,
    })
}

/// Observed gain and error mass for a source pair against a relay truth
/// table: `S = Σ_{jk} a_j b_k s_jk`, `T = Σ_{jk} a_j b_k s_jk e_jk`.
pub fn mdi_observe(
    truth: &MdiTruth,
    alice: &PhotonNumberDistribution,
    bob: &PhotonNumberDistribution,
) -> Result<Observation> {
    if alice.k_max() < truth.cutoff() || bob.k_max() < truth.cutoff() {
        return Err(Error::InvalidParameter(format!(
            "source cutoffs ({}, {}) below truth cutoff {}",
            alice.k_max(),
            bob.k_max(),
            truth.cutoff()
        )));
    }
    let mut gain = 0.0;
    let mut mass = 0.0;
    for j in 0..=truth.cutoff() {
        let aj = alice.coeff(j);
        if aj == 0.0 {
            continue;
        }
        for k in 0..=truth.cutoff() {
            let w = aj * bob.coeff(k);
            gain += w * truth.yield_at(j, k);
            mass += w * truth.error_mass_at(j, k);
        }
    }
    Ok(Observation {
        gain,
        error_mass: mass,
    })
}
