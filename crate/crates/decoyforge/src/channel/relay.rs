//! Fock-space simulation of the untrusted measurement relay.
//!
//! Both arms feed a balanced beamsplitter whose two output ports are each
//! monitored in two polarization modes by threshold detectors, four in all
//! (`cH`, `cV`, `dH`, `dV`). A success is an announcement of either
//! two-detector coincidence class:
//!
//! * same port, orthogonal polarizations (`cH&cV` or `dH&dV`), and
//! * opposite ports, orthogonal polarizations (`cH&dV` or `cV&dH`),
//!
//! with the remaining two detectors silent. Z-basis pulses carry `H`/`V`
//! polarization (distinguishable when the bits differ), X-basis pulses carry
//! the diagonal states and interfere; X-basis results are averaged over the
//! relative phase of the two pulses on a uniform 64-point grid.
//!
//! Detector efficiency is folded into the arm transmittance (each arm sees
//! binomial loss with per-arm transmittance √(ξζ)), so the detectors here
//! are ideal apart from dark counts. Misalignment acts on one arm as an
//! orthogonal polarization flip with probability `e_d`.
//!
//! The interference core is exact: for each pair of arrived photon numbers
//! the joint amplitude over the four output modes is expanded by multinomial
//! bookkeeping, giving the probability of every detector-occupancy pattern.
//! That table depends only on the basis, so it is built once per process.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_complex::Complex64;

use super::{binomial_loss, Basis, ChannelParams, MdiTruth};
use crate::error::Result;

/// Photon-number cutoff per arm for the relay truth tables.
pub const RELAY_CUTOFF: usize = 6;

/// Phase-average resolution for X-basis inputs.
const PHASE_POINTS: usize = 64;

/// Detector-occupancy bit assignments: bit0=cH, bit1=cV, bit2=dH, bit3=dV.
const PSI_PLUS_PATTERNS: [u8; 2] = [0b0011, 0b1100];
const PSI_MINUS_PATTERNS: [u8; 2] = [0b1001, 0b0110];

const MAX_PHOTONS: usize = 2 * RELAY_CUTOFF;

fn factorials() -> [f64; MAX_PHOTONS + 1] {
    let mut f = [1.0; MAX_PHOTONS + 1];
    for k in 1..=MAX_PHOTONS {
        f[k] = f[k - 1] * k as f64;
    }
    f
}

/// Single-photon amplitudes over (cH, cV, dH, dV) for a pulse entering the
/// beamsplitter from the first arm (`+` port sign) in the given basis and
/// logical bit.
fn alice_modes(basis: Basis, bit: u8) -> [Complex64; 4] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let r = |v: f64| Complex64::new(v, 0.0);
    match (basis, bit) {
        (Basis::Z, 0) => [r(s), r(0.0), r(s), r(0.0)],
        (Basis::Z, _) => [r(0.0), r(s), r(0.0), r(s)],
        (Basis::X, 0) => [r(0.5), r(0.5), r(0.5), r(0.5)],
        (Basis::X, _) => [r(0.5), r(-0.5), r(0.5), r(-0.5)],
    }
}

/// Second-arm amplitudes: opposite beamsplitter sign and an overall pulse
/// phase `e^{iφ}` relative to the first arm.
fn bob_modes(basis: Basis, bit: u8, phi: f64) -> [Complex64; 4] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let ph = Complex64::from_polar(1.0, phi);
    let r = |v: f64| ph * v;
    match (basis, bit) {
        (Basis::Z, 0) => [r(s), r(0.0), r(-s), r(0.0)],
        (Basis::Z, _) => [r(0.0), r(s), r(0.0), r(-s)],
        (Basis::X, 0) => [r(0.5), r(0.5), r(-0.5), r(-0.5)],
        (Basis::X, _) => [r(0.5), r(-0.5), r(-0.5), r(0.5)],
    }
}

/// Probability of each detector-occupancy bitmask after interfering `m`
/// photons in single-photon state `va` with `n` photons in `vb`.
fn occupancy_masks(
    m: usize,
    va: &[Complex64; 4],
    n: usize,
    vb: &[Complex64; 4],
    fact: &[f64; MAX_PHOTONS + 1],
) -> [f64; 16] {
    // Joint amplitude per occupancy vector o = ma + nb over the four modes:
    //   amp(o) = sqrt(Π o_i!) / sqrt(m! n!)
    //            · Σ_{ma+nb=o} [m!/Π ma_i!][n!/Π nb_i!] Π va_i^{ma_i} vb_i^{nb_i}
    // accumulated over all compositions. BTreeMap keeps the summation order
    // fixed so repeated runs are bit-identical.
    let mut acc: BTreeMap<[u8; 4], Complex64> = BTreeMap::new();

    let term = |v: &[Complex64; 4], c: [usize; 4], total: usize| -> Option<Complex64> {
        let mut w = Complex64::new(fact[total], 0.0);
        for (vi, ci) in v.iter().zip(c) {
            if ci > 0 && vi.norm_sqr() == 0.0 {
                return None;
            }
            w *= vi.powu(ci as u32) / fact[ci];
        }
        Some(w)
    };

    for a0 in 0..=m {
        for a1 in 0..=(m - a0) {
            for a2 in 0..=(m - a0 - a1) {
                let a3 = m - a0 - a1 - a2;
                let ca = [a0, a1, a2, a3];
                let Some(wa) = term(va, ca, m) else { continue };
                for b0 in 0..=n {
                    for b1 in 0..=(n - b0) {
                        for b2 in 0..=(n - b0 - b1) {
                            let b3 = n - b0 - b1 - b2;
                            let cb = [b0, b1, b2, b3];
                            let Some(wb) = term(vb, cb, n) else { continue };
                            let key = [
                                (a0 + b0) as u8,
                                (a1 + b1) as u8,
                                (a2 + b2) as u8,
                                (a3 + b3) as u8,
                            ];
                            *acc.entry(key).or_insert(Complex64::new(0.0, 0.0)) += wa * wb;
                        }
                    }
                }
            }
        }
    }

    let norm = fact[m] * fact[n];
    let mut masks = [0.0; 16];
    for (occ, amp) in acc {
        let weight: f64 = occ.iter().map(|&o| fact[o as usize]).product();
        let p = amp.norm_sqr() * weight / norm;
        let mut mask = 0u8;
        for (i, &o) in occ.iter().enumerate() {
            if o > 0 {
                mask |= 1 << i;
            }
        }
        masks[mask as usize] += p;
    }
    masks
}

struct RelayTable {
    /// Indexed by (((m * (CUT+1) + n) * 2 + alice_bit) * 2 + bob_bit).
    masks: Vec<[f64; 16]>,
}

impl RelayTable {
    fn build(basis: Basis) -> Self {
        let fact = factorials();
        let dim = RELAY_CUTOFF + 1;
        let mut masks = vec![[0.0; 16]; dim * dim * 4];
        for m in 0..=RELAY_CUTOFF {
            for n in 0..=RELAY_CUTOFF {
                for abit in 0..2u8 {
                    let va = alice_modes(basis, abit);
                    for bbit in 0..2u8 {
                        let entry = match basis {
                            Basis::Z => {
                                let vb = bob_modes(basis, bbit, 0.0);
                                occupancy_masks(m, &va, n, &vb, &fact)
                            }
                            Basis::X => {
                                let mut avg = [0.0; 16];
                                for t in 0..PHASE_POINTS {
                                    let phi =
                                        2.0 * std::f64::consts::PI * t as f64 / PHASE_POINTS as f64;
                                    let vb = bob_modes(basis, bbit, phi);
                                    let one = occupancy_masks(m, &va, n, &vb, &fact);
                                    for (a, o) in avg.iter_mut().zip(one) {
                                        *a += o;
                                    }
                                }
                                avg.iter_mut().for_each(|a| *a /= PHASE_POINTS as f64);
                                avg
                            }
                        };
                        let idx = ((m * dim + n) * 2 + abit as usize) * 2 + bbit as usize;
                        masks[idx] = entry;
                    }
                }
            }
        }
        Self { masks }
    }

    #[inline]
    fn get(&self, m: usize, n: usize, abit: u8, bbit: u8) -> &[f64; 16] {
        let dim = RELAY_CUTOFF + 1;
        &self.masks[((m * dim + n) * 2 + abit as usize) * 2 + bbit as usize]
    }
}

fn table(basis: Basis) -> &'static RelayTable {
    static Z: OnceLock<RelayTable> = OnceLock::new();
    static X: OnceLock<RelayTable> = OnceLock::new();
    match basis {
        Basis::Z => Z.get_or_init(|| RelayTable::build(Basis::Z)),
        Basis::X => X.get_or_init(|| RelayTable::build(Basis::X)),
    }
}

/// Probability that exactly the detectors in `pattern` click given photons
/// occupy the modes in `mask`: occupied detectors always click, empty ones
/// dark-count with probability `p_d`.
fn click_probability(pattern: u8, mask: u8, p_d: f64) -> f64 {
    if mask & !pattern != 0 {
        return 0.0;
    }
    let dark = (pattern & !mask).count_ones() as i32;
    let silent = (!pattern & 0xF).count_ones() as i32;
    p_d.powi(dark) * (1.0 - p_d).powi(silent)
}

pub(super) fn simulate_truth(params: &ChannelParams, basis: Basis) -> Result<MdiTruth> {
    let tbl = table(basis);
    let arm = (params.transmittance() * params.zeta).sqrt();
    let loss_pmf: Vec<Vec<f64>> = (0..=RELAY_CUTOFF).map(|n| binomial_loss(n, arm)).collect();

    // Success-pattern probabilities per occupancy mask.
    let mut p_plus = [0.0; 16];
    let mut p_minus = [0.0; 16];
    for mask in 0..16u8 {
        p_plus[mask as usize] = PSI_PLUS_PATTERNS
            .iter()
            .map(|&c| click_probability(c, mask, params.p_d))
            .sum();
        p_minus[mask as usize] = PSI_MINUS_PATTERNS
            .iter()
            .map(|&c| click_probability(c, mask, params.p_d))
            .sum();
    }

    let dim = RELAY_CUTOFF + 1;
    let mut yields = vec![0.0; dim * dim];
    let mut errors = vec![0.0; dim * dim];
    for j in 0..=RELAY_CUTOFF {
        for k in 0..=RELAY_CUTOFF {
            let mut gain = 0.0;
            let mut error_mass = 0.0;
            for bit_a in 0..2u8 {
                for bit_b in 0..2u8 {
                    // An announcement in the Z basis implies the bits differ;
                    // in the X basis the same-port class implies they agree
                    // and the cross-port class that they differ.
                    let (plus_is_error, minus_is_error) = match basis {
                        Basis::Z => (bit_a == bit_b, bit_a == bit_b),
                        Basis::X => (bit_a != bit_b, bit_a == bit_b),
                    };
                    for (flip, flip_w) in [(0u8, 1.0 - params.e_d), (1u8, params.e_d)] {
                        if flip_w == 0.0 {
                            continue;
                        }
                        let eff_a = bit_a ^ flip;
                        for (m, &w_a) in loss_pmf[j].iter().enumerate() {
                            for (n, &w_b) in loss_pmf[k].iter().enumerate() {
                                let w = 0.25 * flip_w * w_a * w_b;
                                if w == 0.0 {
                                    continue;
                                }
                                let masks = tbl.get(m, n, eff_a, bit_b);
                                for (mask, &pm) in masks.iter().enumerate() {
                                    if pm == 0.0 {
                                        continue;
                                    }
                                    let plus = pm * p_plus[mask];
                                    let minus = pm * p_minus[mask];
                                    gain += w * (plus + minus);
                                    if plus_is_error {
                                        error_mass += w * plus;
                                    }
                                    if minus_is_error {
                                        error_mass += w * minus;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            yields[j * dim + k] = gain;
            errors[j * dim + k] = if gain > 0.0 {
                error_mass / gain
            } else {
                params.e_0
            };
        }
    }
    MdiTruth::new(RELAY_CUTOFF, yields, errors)
}
