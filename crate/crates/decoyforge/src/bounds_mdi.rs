//! MDI-QKD decoy-state estimators: pair gains amended by inclusion-exclusion,
//! the pairwise lower bound on the single-photon-pair yield, its three-source
//! maximum, the tightened upper bound on the single-photon-pair error mass
//! obtained by eliminating all two-sided variables up to three photons, and
//! the key rate.
//!
//! Alice's coefficients are written `a`, Bob's `b`; a pair observable `S_lr`
//! refers to Alice's source `l` and Bob's source `r`. The determinant
//! machinery is shared with the one-sided case: [`g_func`] applied to Bob's
//! triple is the second-side analogue.

use crate::error::{Error, Result};
use crate::sources::{g_func, PhotonNumberDistribution, SourceTriple};

pub use crate::bounds_bb84::binary_entropy;

/// Two-sided variables eliminated by the error-mass bound (everything both
/// sides can emit with at most three photons, except the single-photon pair
/// itself). Hard-coded; `residual_set_matches_definition` regenerates it
/// from the membership rule.
pub const ELIMINATED_PAIRS: [(usize, usize); 8] = [
    (1, 2),
    (2, 1),
    (2, 2),
    (1, 3),
    (2, 3),
    (3, 3),
    (3, 2),
    (3, 1),
];

/// Residual set of the error-mass elimination: `m,n ≥ 1`, `m+n ≥ 5`, minus
/// the eliminated corner pairs (2,3), (3,3), (3,2). Equivalently: at least
/// one side beyond three photons.
pub fn in_j0(m: usize, n: usize) -> bool {
    m >= 1 && n >= 1 && m + n >= 5 && !matches!((m, n), (2, 3) | (3, 3) | (3, 2))
}

/// Residual set of the yield bound: `m,n ≥ 1`, `m+n ≥ 4`.
pub fn in_j1(m: usize, n: usize) -> bool {
    m >= 1 && n >= 1 && m + n >= 4
}

/// Inclusion-exclusion removal of vacuum contributions from a pair
/// observable: `S_lr − a_0^l S_0r − b_0^r S_l0 + a_0^l b_0^r S_00`.
/// Clamped at zero: the amended value is a probability mass.
pub fn amended_pair(
    pair: f64,
    a0: f64,
    alice_vacuum: f64,
    b0: f64,
    bob_vacuum: f64,
    both_vacuum: f64,
) -> f64 {
    (pair - a0 * alice_vacuum - b0 * bob_vacuum + a0 * b0 * both_vacuum).max(0.0)
}

/// Pairwise lower bound on the single-photon-pair yield from two sources per
/// side (`l` the lower, `r` the higher intensity on each side):
///
/// ```text
///        (a1l a2r b1l b2r − a1r a2l b1r b2l) S̃_ll
///      − b1l b2l (a1l a2r − a1r a2l) S̃_lr − a1l a2l (b1l b2r − b1r b2l) S̃_rl
/// s̲11 = ─────────────────────────────────────────────────────────────────
///            a1l b1l (a1l a2r − a1r a2l)(b1l b2r − b1r b2l)
/// ```
pub fn s11_lower_pair(
    a_l: &PhotonNumberDistribution,
    b_l: &PhotonNumberDistribution,
    a_r: &PhotonNumberDistribution,
    b_r: &PhotonNumberDistribution,
    amended_ll: f64,
    amended_lr: f64,
    amended_rl: f64,
) -> Result<f64> {
    let da = a_l.coeff(1) * a_r.coeff(2) - a_r.coeff(1) * a_l.coeff(2);
    let db = b_l.coeff(1) * b_r.coeff(2) - b_r.coeff(1) * b_l.coeff(2);
    let den = a_l.coeff(1) * b_l.coeff(1) * da * db;
    if den <= 0.0 {
        return Err(Error::NonPositiveDenominator(format!(
            "pair-yield denominator {den} (da={da}, db={db})"
        )));
    }
    let head = a_l.coeff(1) * a_r.coeff(2) * b_l.coeff(1) * b_r.coeff(2)
        - a_r.coeff(1) * a_l.coeff(2) * b_r.coeff(1) * b_l.coeff(2);
    let numerator = head * amended_ll
        - b_l.coeff(1) * b_l.coeff(2) * da * amended_lr
        - a_l.coeff(1) * a_l.coeff(2) * db * amended_rl;
    Ok(numerator / den)
}

/// Amended pair gains for the three non-vacuum source pairs, indexed by
/// (Alice source, Bob source) with 0=x, 1=y, 2=z.
pub type PairMatrix = [[f64; 3]; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwisePairYieldBounds {
    pub xy: f64,
    pub xz: f64,
    pub yz: f64,
}

/// Three-source lower bound on the single-photon-pair yield: evaluates the
/// pairwise bound for (x,y), (x,z) and (y,z), checks that (x,y) attains the
/// maximum, and returns it.
pub fn s11_lower_4(alice: &SourceTriple, bob: &SourceTriple, amended: &PairMatrix) -> Result<f64> {
    Ok(s11_lower_4_detail(alice, bob, amended)?.xy)
}

pub fn s11_lower_4_detail(
    alice: &SourceTriple,
    bob: &SourceTriple,
    amended: &PairMatrix,
) -> Result<PairwisePairYieldBounds> {
    let pair = |l: usize, r: usize| -> Result<f64> {
        let (al, ar) = (dist(alice, l), dist(alice, r));
        let (bl, br) = (dist(bob, l), dist(bob, r));
        s11_lower_pair(al, bl, ar, br, amended[l][l], amended[l][r], amended[r][l])
    };
    let xy = pair(0, 1)?;
    let xz = pair(0, 2)?;
    let yz = pair(1, 2)?;
    let tol = 1e-9 * xy.abs().max(xz.abs()).max(yz.abs()).max(1e-3);
    if xy + tol < xz || xz + tol < yz {
        return Err(Error::ConditionViolated(format!(
            "pairwise pair-yield bounds out of order: xy={xy}, xz={xz}, yz={yz}"
        )));
    }
    Ok(PairwisePairYieldBounds { xy, xz, yz })
}

fn dist(triple: &SourceTriple, index: usize) -> &PhotonNumberDistribution {
    match index {
        0 => &triple.x,
        1 => &triple.y,
        _ => &triple.z,
    }
}

/// Residual coefficient of the pairwise yield bound at `(m,n)` in the
/// residual set: the weight of the unknown `s_mn` in
/// `s_11 = s̲_11(l,r) + Σ_{J1} f(m,n) s_mn`. Non-negative under the ratio
/// conditions on both sides.
pub fn f_s11(
    a_l: &PhotonNumberDistribution,
    b_l: &PhotonNumberDistribution,
    a_r: &PhotonNumberDistribution,
    b_r: &PhotonNumberDistribution,
    m: usize,
    n: usize,
) -> Result<f64> {
    if !in_j1(m, n) {
        return Err(Error::InvalidParameter(format!(
            "({m},{n}) is not in the yield residual set"
        )));
    }
    let da = a_l.coeff(1) * a_r.coeff(2) - a_r.coeff(1) * a_l.coeff(2);
    let db = b_l.coeff(1) * b_r.coeff(2) - b_r.coeff(1) * b_l.coeff(2);
    let den = a_l.coeff(1) * b_l.coeff(1) * da * db;
    if den <= 0.0 {
        return Err(Error::NonPositiveDenominator(format!(
            "pair-yield denominator {den}"
        )));
    }
    let da_m = a_l.coeff(1) * a_r.coeff(m) - a_r.coeff(1) * a_l.coeff(m);
    let db_n = b_l.coeff(2) * b_r.coeff(n) - b_r.coeff(2) * b_l.coeff(n);
    let numerator =
        a_l.coeff(2) * b_l.coeff(n) * da_m * db + a_l.coeff(m) * b_l.coeff(1) * da * db_n;
    Ok(numerator / den)
}

/// Two-source upper bound on the single-photon-pair error rate: the amended
/// error mass of the lowest pair divided by `a_1^x b_1^x s̲_11`.
#[allow(clippy::too_many_arguments)]
pub fn e11_upper_3(
    a_x: &PhotonNumberDistribution,
    b_x: &PhotonNumberDistribution,
    error_mass_xx: f64,
    error_mass_0x: f64,
    error_mass_x0: f64,
    error_mass_00: f64,
    s11_lower: f64,
) -> Result<f64> {
    if s11_lower <= 0.0 {
        return Err(Error::NonPositiveDenominator(format!(
            "pair-yield bound is {s11_lower}; error rate unbounded (report 1)"
        )));
    }
    if a_x.coeff(1) <= 0.0 || b_x.coeff(1) <= 0.0 {
        return Err(Error::ZeroCoefficient(
            "single-photon coefficient of the low pair".into(),
        ));
    }
    let numerator = amended_pair(
        error_mass_xx,
        a_x.coeff(0),
        error_mass_0x,
        b_x.coeff(0),
        error_mass_x0,
        error_mass_00,
    );
    Ok(numerator / (a_x.coeff(1) * b_x.coeff(1) * s11_lower))
}

/// Tightened upper bound on the single-photon-pair error mass, eliminating
/// every two-sided error variable with at most three photons per side.
///
/// With Bob-side cofactors `𝒯^l = (b2y b3z − b2z b3y) T̃_lx −
/// (b2x b3z − b2z b3x) T̃_ly + (b2x b3y − b2y b3x) T̃_lz`, the bound is
///
/// ```text
///        (a2y a3z − a2z a3y) 𝒯^x − (a2x a3z − a2z a3x) 𝒯^y + (a2x a3y − a2y a3x) 𝒯^z
/// t̄11 = ──────────────────────────────────────────────────────────────────────────
///                  a1z a2z a3z 𝒢(1,2,3) · b1z b2z b3z ℋ(1,2,3)
/// ```
pub fn t11_upper_4(
    alice: &SourceTriple,
    bob: &SourceTriple,
    amended_t: &PairMatrix,
) -> Result<f64> {
    let g123 = g_func(alice, 1, 2, 3)?;
    let h123 = g_func(bob, 1, 2, 3)?;
    if g123 <= 0.0 || h123 <= 0.0 {
        return Err(Error::NonPositiveDenominator(format!(
            "triple determinants must be positive: alice {g123}, bob {h123}"
        )));
    }
    let (ax, ay, az) = (&alice.x, &alice.y, &alice.z);
    let (bx, by, bz) = (&bob.x, &bob.y, &bob.z);
    let bob_cof = [
        by.coeff(2) * bz.coeff(3) - bz.coeff(2) * by.coeff(3),
        bx.coeff(2) * bz.coeff(3) - bz.coeff(2) * bx.coeff(3),
        bx.coeff(2) * by.coeff(3) - by.coeff(2) * bx.coeff(3),
    ];
    let script = |l: usize| {
        bob_cof[0] * amended_t[l][0] - bob_cof[1] * amended_t[l][1] + bob_cof[2] * amended_t[l][2]
    };
    let alice_cof = [
        ay.coeff(2) * az.coeff(3) - az.coeff(2) * ay.coeff(3),
        ax.coeff(2) * az.coeff(3) - az.coeff(2) * ax.coeff(3),
        ax.coeff(2) * ay.coeff(3) - ay.coeff(2) * ax.coeff(3),
    ];
    let numerator = alice_cof[0] * script(0) - alice_cof[1] * script(1) + alice_cof[2] * script(2);
    let denominator = az.coeff(1)
        * az.coeff(2)
        * az.coeff(3)
        * g123
        * bz.coeff(1)
        * bz.coeff(2)
        * bz.coeff(3)
        * h123;
    Ok(numerator / denominator)
}

/// Residual coefficient of the error-mass elimination at `(m,n)` in the
/// residual set:
/// `−a_m^z 𝒢'(m) b_n^z ℋ'(n) / (a_1^z 𝒢(1,2,3) b_1^z ℋ(1,2,3))`,
/// where the primed determinant is `𝒢(m,2,3)` for `m ≤ 2` and `𝒢(2,3,m)`
/// for `m ≥ 3` (the two branch expressions agree where both apply).
/// Non-positive on the residual set under the source conditions.
pub fn f_t11(alice: &SourceTriple, bob: &SourceTriple, m: usize, n: usize) -> Result<f64> {
    if !in_j0(m, n) {
        return Err(Error::InvalidParameter(format!(
            "({m},{n}) is not in the error residual set"
        )));
    }
    let g123 = g_func(alice, 1, 2, 3)?;
    let h123 = g_func(bob, 1, 2, 3)?;
    if g123 <= 0.0 || h123 <= 0.0 {
        return Err(Error::NonPositiveDenominator(format!(
            "triple determinants must be positive: alice {g123}, bob {h123}"
        )));
    }
    let g_prime = primed_determinant(alice, m)?;
    let h_prime = primed_determinant(bob, n)?;
    Ok(-(alice.z.coeff(m) * g_prime * bob.z.coeff(n) * h_prime)
        / (alice.z.coeff(1) * g123 * bob.z.coeff(1) * h123))
}

fn primed_determinant(triple: &SourceTriple, m: usize) -> Result<f64> {
    if m <= 2 {
        g_func(triple, m, 2, 3)
    } else {
        g_func(triple, 2, 3, m)
    }
}

/// Upper bound on the single-photon-pair error rate: `t̄_11 / s̲_11`.
pub fn e11_upper_4(t11_upper: f64, s11_lower: f64) -> Result<f64> {
    if s11_lower <= 0.0 {
        return Err(Error::NonPositiveDenominator(format!(
            "pair-yield bound is {s11_lower}; error rate unbounded (report 1)"
        )));
    }
    Ok(t11_upper / s11_lower)
}

/// Asymptotic key rate per pulse pair:
/// `a_1^z b_1^z s_11^Z [1 − H(e_11^X)] − S_zz^Z f H(E_zz^Z)`.
#[allow(clippy::too_many_arguments)]
pub fn mdi_key_rate(
    a1_signal: f64,
    b1_signal: f64,
    s11_z: f64,
    e11_x: f64,
    signal_gain_z: f64,
    signal_error_rate_z: f64,
    f_ec: f64,
) -> f64 {
    a1_signal * b1_signal * s11_z * (1.0 - binary_entropy(e11_x))
        - signal_gain_z * f_ec * binary_entropy(signal_error_rate_z)
}

/// Bound estimates for one MDI evaluation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MdiBounds {
    pub s11_lower_pairwise: PairwisePairYieldBounds,
    pub s11_lower_4: f64,
    pub e11_upper_3: f64,
    pub t11_upper_4: f64,
    pub e11_upper_4: f64,
}

impl MdiBounds {
    pub fn clamped_for_report(&self) -> Self {
        let c = |v: f64| v.clamp(0.0, 1.0);
        Self {
            s11_lower_pairwise: PairwisePairYieldBounds {
                xy: c(self.s11_lower_pairwise.xy),
                xz: c(self.s11_lower_pairwise.xz),
                yz: c(self.s11_lower_pairwise.yz),
            },
            s11_lower_4: c(self.s11_lower_4),
            e11_upper_3: c(self.e11_upper_3),
            t11_upper_4: c(self.t11_upper_4),
            e11_upper_4: c(self.e11_upper_4),
        }
    }
}
