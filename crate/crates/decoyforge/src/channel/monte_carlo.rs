//! Monte-Carlo cross-checks of the channel models.
//!
//! These samplers deliberately avoid the analytic yield formulas and the
//! amplitude machinery: the BB84 check draws photon numbers and per-photon
//! survival directly, and the relay check uses the two elementary routing
//! rules that hold when at most one photon arrives per arm (equal
//! polarizations bunch into one port, orthogonal ones route independently).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ChannelParams;
use crate::sources::PhotonNumberDistribution;

/// Sampled estimate of the total gain for one source through the
/// point-to-point channel: a click is any surviving photon or a dark count.
pub fn bb84_gain_monte_carlo(
    params: &ChannelParams,
    source: &PhotonNumberDistribution,
    trials: u64,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eta = params.transmittance() * params.zeta;
    let cumulative: Vec<f64> = source
        .coeffs()
        .iter()
        .scan(0.0, |acc, &p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let k_max = source.k_max();

    let mut clicks = 0u64;
    for _ in 0..trials {
        let u: f64 = rng.random();
        // Tail mass beyond the cutoff is collapsed onto k_max; it is far
        // below the sampling resolution for the intensities used here.
        let k = cumulative.partition_point(|&c| c < u).min(k_max);
        let mut detected = false;
        for _ in 0..k {
            if rng.random::<f64>() < eta {
                detected = true;
            }
        }
        if !detected {
            detected = rng.random::<f64>() < params.p_d;
        }
        if detected {
            clicks += 1;
        }
    }
    clicks as f64 / trials as f64
}

/// Sampled estimate of the relay yield for a single-photon pair in the
/// Z basis, averaging over random bit choices.
pub fn mdi_s11_z_monte_carlo(params: &ChannelParams, trials: u64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let arm = (params.transmittance() * params.zeta).sqrt();

    let mut successes = 0u64;
    for _ in 0..trials {
        let bit_a = rng.random::<bool>();
        let bit_b = rng.random::<bool>();
        let pol_a = bit_a ^ (rng.random::<f64>() < params.e_d);
        let pol_b = bit_b;
        let a_arrives = rng.random::<f64>() < arm;
        let b_arrives = rng.random::<f64>() < arm;

        // Mode occupancy: bit0=cH, bit1=cV, bit2=dH, bit3=dV.
        let mode = |port: bool, pol: bool| (port as u8) * 2 + pol as u8;
        let mut occupied = 0u8;
        match (a_arrives, b_arrives) {
            (true, true) if pol_a == pol_b => {
                // Indistinguishable photons bunch into one random port.
                let port = rng.random::<bool>();
                occupied |= 1 << mode(port, pol_a);
            }
            (true, true) => {
                occupied |= 1 << mode(rng.random::<bool>(), pol_a);
                occupied |= 1 << mode(rng.random::<bool>(), pol_b);
            }
            (true, false) => occupied |= 1 << mode(rng.random::<bool>(), pol_a),
            (false, true) => occupied |= 1 << mode(rng.random::<bool>(), pol_b),
            (false, false) => {}
        }

        let mut clicked = occupied;
        for det in 0..4 {
            if clicked & (1 << det) == 0 && rng.random::<f64>() < params.p_d {
                clicked |= 1 << det;
            }
        }
        if matches!(clicked, 0b0011 | 0b1100 | 0b1001 | 0b0110) {
            successes += 1;
        }
    }
    successes as f64 / trials as f64
}
