//! BB84 decoy-state estimators: vacuum-amended gains, two- and three-source
//! lower bounds on the single-photon yield, the tightened three-source upper
//! bound on the single-photon error mass, and the key rate.
//!
//! Conventions: `S` is an observed gain, `T = S·E` an observed error mass,
//! `s_k`/`t_k` the unknown per-photon-number yield and error mass. Amending
//! removes the vacuum contribution so sums start at one photon. Internal
//! algebra never clamps; clamping to declared ranges happens only in
//! [`Bb84Bounds::clamped_for_report`].

use crate::error::{Error, Result};
use crate::sources::{g_func, PhotonNumberDistribution, SourceTriple};

/// Binary Shannon entropy in bits; zero at both endpoints.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Vacuum-amended gain `S_l − a_0^l S_0`, clamped at zero: the amended gain
/// is a probability mass, so a negative value can only be cancellation noise.
pub fn amended_gain(gain: f64, a0: f64, vacuum_gain: f64) -> f64 {
    (gain - a0 * vacuum_gain).max(0.0)
}

/// Vacuum-amended error mass `T_l − a_0^l T_0`, clamped at zero like
/// [`amended_gain`].
pub fn amended_error_mass(error_mass: f64, a0: f64, vacuum_error_mass: f64) -> f64 {
    (error_mass - a0 * vacuum_error_mass).max(0.0)
}

/// Two-source lower bound on the single-photon yield:
/// `(a_2^y S̃_x − a_2^x S̃_y) / (a_1^x a_2^y − a_1^y a_2^x)`.
///
/// Valid whenever the (x,y) ratio chain holds (caller's precondition); the
/// denominator is then positive.
pub fn s1_lower_3(
    x: &PhotonNumberDistribution,
    y: &PhotonNumberDistribution,
    amended_x: f64,
    amended_y: f64,
) -> Result<f64> {
    let den = x.coeff(1) * y.coeff(2) - y.coeff(1) * x.coeff(2);
    if den <= 0.0 {
        return Err(Error::NonPositiveDenominator(format!(
            "a1^x a2^y - a1^y a2^x = {den} (ratio condition violated or degenerate pair)"
        )));
    }
    Ok((y.coeff(2) * amended_x - x.coeff(2) * amended_y) / den)
}

/// The three pairwise yield bounds of a source triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseYieldBounds {
    pub xy: f64,
    pub xz: f64,
    pub yz: f64,
}

/// Three-source lower bound on the single-photon yield. Computes all three
/// pairwise bounds, checks that the (x,y) pair attains the maximum (which
/// the ratio and determinant conditions guarantee), and returns it.
pub fn s1_lower_4(
    triple: &SourceTriple,
    amended_x: f64,
    amended_y: f64,
    amended_z: f64,
) -> Result<f64> {
    Ok(s1_lower_4_detail(triple, amended_x, amended_y, amended_z)?.xy)
}

pub fn s1_lower_4_detail(
    triple: &SourceTriple,
    amended_x: f64,
    amended_y: f64,
    amended_z: f64,
) -> Result<PairwiseYieldBounds> {
    let xy = s1_lower_3(&triple.x, &triple.y, amended_x, amended_y)?;
    let xz = s1_lower_3(&triple.x, &triple.z, amended_x, amended_z)?;
    let yz = s1_lower_3(&triple.y, &triple.z, amended_y, amended_z)?;
    let tol = 1e-9 * xy.abs().max(xz.abs()).max(yz.abs()).max(1e-3);
    if xy + tol < xz || xz + tol < yz {
        return Err(Error::ConditionViolated(format!(
            "pairwise yield bounds out of order: xy={xy}, xz={xz}, yz={yz}"
        )));
    }
    Ok(PairwiseYieldBounds { xy, xz, yz })
}

/// Residual coefficient of the two-source yield bound at photon number
/// `m ≥ 3`: the weight with which the unknown `s_m` enters
/// `s_1 = s̲_1(lo,hi) + Σ_{m≥3} f(m) s_m`. Non-negative under the pair
/// condition, which is what makes the bound one-sided.
pub fn f_s1(lo: &PhotonNumberDistribution, hi: &PhotonNumberDistribution, m: usize) -> Result<f64> {
    if m < 3 {
        return Err(Error::InvalidParameter(format!(
            "residual coefficients start at photon number 3, got {m}"
        )));
    }
    let den = lo.coeff(1) * hi.coeff(2) - hi.coeff(1) * lo.coeff(2);
    if den <= 0.0 {
        return Err(Error::NonPositiveDenominator(format!(
            "a1^lo a2^hi - a1^hi a2^lo = {den}"
        )));
    }
    Ok((lo.coeff(2) * hi.coeff(m) - hi.coeff(2) * lo.coeff(m)) / den)
}

/// Two-source upper bound on the single-photon error rate:
/// `(T_x − a_0^x T_0) / (a_1^x s̲_1)`, i.e. all multi-photon error mass is
/// charged to the single-photon pulses.
pub fn e1_upper_3(
    x: &PhotonNumberDistribution,
    error_mass_x: f64,
    vacuum_error_mass: f64,
    s1_lower: f64,
) -> Result<f64> {
    if s1_lower <= 0.0 {
        return Err(Error::NonPositiveDenominator(format!(
            "single-photon yield bound is {s1_lower}; error rate unbounded (report 1)"
        )));
    }
    if x.coeff(1) <= 0.0 {
        return Err(Error::ZeroCoefficient("a1 of the low decoy source".into()));
    }
    let numerator = amended_error_mass(error_mass_x, x.coeff(0), vacuum_error_mass);
    Ok(numerator / (x.coeff(1) * s1_lower))
}

/// Three-source upper bound on the single-photon error mass, obtained by
/// eliminating the two- and three-photon error masses from the three
/// amended relations. Cofactor form:
///
/// `[(a_2^y a_3^z − a_2^z a_3^y) T̃_x − (a_2^x a_3^z − a_2^z a_3^x) T̃_y
///   + (a_2^x a_3^y − a_2^y a_3^x) T̃_z] / (a_1^z a_2^z a_3^z 𝒢(1,2,3))`.
pub fn t1_upper_4(
    triple: &SourceTriple,
    amended_t_x: f64,
    amended_t_y: f64,
    amended_t_z: f64,
) -> Result<f64> {
    let g123 = g_func(triple, 1, 2, 3)?;
    if g123 <= 0.0 {
        return Err(Error::NonPositiveDenominator(format!(
            "triple determinant at (1,2,3) is {g123}"
        )));
    }
    let (x, y, z) = (&triple.x, &triple.y, &triple.z);
    let cof_x = y.coeff(2) * z.coeff(3) - z.coeff(2) * y.coeff(3);
    let cof_y = x.coeff(2) * z.coeff(3) - z.coeff(2) * x.coeff(3);
    let cof_z = x.coeff(2) * y.coeff(3) - y.coeff(2) * x.coeff(3);
    let numerator = cof_x * amended_t_x - cof_y * amended_t_y + cof_z * amended_t_z;
    let denominator = z.coeff(1) * z.coeff(2) * z.coeff(3) * g123;
    Ok(numerator / denominator)
}

/// Residual coefficient of the three-source error-mass elimination at
/// photon number `k ≥ 4`:
/// `−a_k^z 𝒢(2,3,k) / (a_1^z 𝒢(1,2,3))`.
/// Non-positive under the determinant condition, which turns the eliminated
/// expression into an upper bound.
pub fn f_t1(triple: &SourceTriple, k: usize) -> Result<f64> {
    if k < 4 {
        return Err(Error::InvalidParameter(format!(
            "eliminated photon numbers are 1..=3; residual starts at 4, got {k}"
        )));
    }
    let g123 = g_func(triple, 1, 2, 3)?;
    if g123 <= 0.0 {
        return Err(Error::NonPositiveDenominator(format!(
            "triple determinant at (1,2,3) is {g123}"
        )));
    }
    let gk = g_func(triple, 2, 3, k)?;
    Ok(-(triple.z.coeff(k) * gk) / (triple.z.coeff(1) * g123))
}

/// Upper bound on the single-photon error rate from the tightened error
/// mass: `t̄_1 / s̲_1`. Raw ratio; report-level clamping is separate.
pub fn e1_upper_4(t1_upper: f64, s1_lower: f64) -> Result<f64> {
    if s1_lower <= 0.0 {
        return Err(Error::NonPositiveDenominator(format!(
            "single-photon yield bound is {s1_lower}; error rate unbounded (report 1)"
        )));
    }
    Ok(t1_upper / s1_lower)
}

/// Asymptotic key rate per pulse:
/// `a_1^z s_1 [1 − H(e_1)] − S_z H(E_z)`. May be negative.
pub fn bb84_key_rate(
    a1_signal: f64,
    s1: f64,
    e1: f64,
    signal_gain: f64,
    signal_error_rate: f64,
) -> f64 {
    a1_signal * s1 * (1.0 - binary_entropy(e1)) - signal_gain * binary_entropy(signal_error_rate)
}

/// Bound estimates for one BB84 evaluation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bb84Bounds {
    pub s1_lower_3: f64,
    pub s1_lower_4: f64,
    pub e1_upper_3: f64,
    pub e1_upper_4: f64,
    pub t1_upper_4: f64,
}

impl Bb84Bounds {
    /// Clamp every field to its declared range for reporting. The raw values
    /// keep their algebraic identities; this is the presentation layer.
    pub fn clamped_for_report(&self) -> Self {
        Self {
            s1_lower_3: self.s1_lower_3.clamp(0.0, 1.0),
            s1_lower_4: self.s1_lower_4.clamp(0.0, 1.0),
            e1_upper_3: self.e1_upper_3.clamp(0.0, 1.0),
            e1_upper_4: self.e1_upper_4.clamp(0.0, 1.0),
            t1_upper_4: self.t1_upper_4.clamp(0.0, 1.0),
        }
    }
}
