//! Photon-number distributions for practical QKD sources, and the structural
//! ratio/determinant conditions on which every decoy-state bound in this
//! crate rests.
//!
//! A source is described by the diagonal Fock-basis coefficients of its
//! emitted state, truncated at `k_max`. Three laws are built in (Poissonian
//! for weak coherent pulses, thermal/geometric, and a heralded single-photon
//! source with a click-probability heralding model); arbitrary coefficient
//! vectors can be supplied for adversarial tests.

use crate::error::{Error, Result};

/// Default coefficient cutoff for condition checks and BB84 observables.
pub const DEFAULT_K_MAX: usize = 20;

/// Negative tolerance for sign checks on ratio chains and the triple
/// determinant, relative to the magnitude of the terms involved.
/// Differences of ratios cancel, so exact-zero checks are too strict.
pub const SIGN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    Poisson,
    Thermal,
    Hsps,
    Vacuum,
    /// Explicit coefficient vector (test and adversarial constructions).
    Custom,
}

/// Which party a source triple belongs to. Purely descriptive: the same
/// algebra applies to both sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Alice,
    Bob,
}

/// A diagonal photon-number distribution truncated at `k_max`.
///
/// Invariants: every coefficient is non-negative and the truncated sum does
/// not exceed 1 (up to 1e-12 of rounding); the mass missing from the sum is
/// the tail of the untruncated law.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonNumberDistribution {
    coeffs: Vec<f64>,
    intensity: f64,
    kind: SourceKind,
}

impl PhotonNumberDistribution {
    /// Poissonian law `e^{-mu} mu^k / k!`, the photon-number statistics of a
    /// phase-randomized weak coherent pulse.
    pub fn poisson(mu: f64, k_max: usize) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "poisson intensity must be positive, got {mu}"
            )));
        }
        check_k_max(k_max)?;
        let mut coeffs = Vec::with_capacity(k_max + 1);
        let mut c = (-mu).exp();
        coeffs.push(c);
        for k in 1..=k_max {
            c *= mu / k as f64;
            coeffs.push(c);
        }
        Ok(Self {
            coeffs,
            intensity: mu,
            kind: SourceKind::Poisson,
        })
    }

    /// Thermal (geometric) law `mu^k / (mu+1)^{k+1}`.
    pub fn thermal(mu: f64, k_max: usize) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "thermal intensity must be positive, got {mu}"
            )));
        }
        check_k_max(k_max)?;
        let ratio = mu / (mu + 1.0);
        let mut coeffs = Vec::with_capacity(k_max + 1);
        let mut c = 1.0 / (mu + 1.0);
        coeffs.push(c);
        for _ in 1..=k_max {
            c *= ratio;
            coeffs.push(c);
        }
        Ok(Self {
            coeffs,
            intensity: mu,
            kind: SourceKind::Thermal,
        })
    }

    /// Heralded single-photon source: a Poissonian pair source of pump mean
    /// `mu` whose idler arm is watched by a threshold detector with
    /// efficiency `eta_v` and dark-count rate `p_dv`.
    ///
    /// Conditioned on a herald click, the signal-arm distribution is
    /// `p_k ∝ Poisson(mu)[k] · [1 − (1−p_dv)(1−eta_v)^k]`, normalized by the
    /// total heralding probability `1 − (1−p_dv) e^{−mu·eta_v}` (closed form
    /// over the untruncated law, so the truncated vector keeps a true tail).
    pub fn hsps(mu: f64, eta_v: f64, p_dv: f64, k_max: usize) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "hsps pump intensity must be positive, got {mu}"
            )));
        }
        if !(eta_v > 0.0 && eta_v <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "heralding efficiency must lie in (0,1], got {eta_v}"
            )));
        }
        if !(0.0..1.0).contains(&p_dv) {
            return Err(Error::InvalidParameter(format!(
                "heralding dark-count rate must lie in [0,1), got {p_dv}"
            )));
        }
        check_k_max(k_max)?;
        let parent = Self::poisson(mu, k_max)?;
        let norm = 1.0 - (1.0 - p_dv) * (-mu * eta_v).exp();
        let coeffs = parent
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &p)| {
                let herald = 1.0 - (1.0 - p_dv) * (1.0 - eta_v).powi(k as i32);
                p * herald / norm
            })
            .collect();
        Ok(Self {
            coeffs,
            intensity: mu,
            kind: SourceKind::Hsps,
        })
    }

    /// The vacuum source: all mass at photon number zero. Represented as an
    /// ordinary distribution so the gain algebra needs no special case.
    pub fn vacuum(k_max: usize) -> Self {
        let mut coeffs = vec![0.0; k_max + 1];
        coeffs[0] = 1.0;
        Self {
            coeffs,
            intensity: 0.0,
            kind: SourceKind::Vacuum,
        }
    }

    /// Build a distribution from an explicit coefficient vector.
    pub fn from_coeffs(coeffs: Vec<f64>, intensity: f64, kind: SourceKind) -> Result<Self> {
        if coeffs.len() < 4 {
            return Err(Error::InvalidParameter(
                "coefficient vector must cover photon numbers 0..=3".into(),
            ));
        }
        if coeffs.iter().any(|&c| !(c >= 0.0) || !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "coefficients must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = coeffs.iter().sum();
        if sum > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "coefficients sum to {sum} > 1"
            )));
        }
        Ok(Self {
            coeffs,
            intensity,
            kind,
        })
    }

    /// Coefficient at photon number `k`; zero above the cutoff.
    #[inline]
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn k_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Nominal intensity setting. For Poisson and thermal sources this is the
    /// mean photon number; for heralded sources it is the pump mean (the
    /// post-heralding mean differs slightly).
    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn kind(&self) -> SourceKind {
        self.kind
    }

    /// Mass of the untruncated law above `k_max` (clamped at zero against
    /// rounding noise).
    pub fn tail_mass(&self) -> f64 {
        (1.0 - self.coeffs.iter().sum::<f64>()).max(0.0)
    }
}

fn check_k_max(k_max: usize) -> Result<()> {
    if k_max < 3 {
        return Err(Error::InvalidParameter(format!(
            "k_max must be at least 3 (the bounds use photon numbers 1..=3), got {k_max}"
        )));
    }
    Ok(())
}

/// Three non-vacuum sources with strictly increasing intensities. The bounds
/// refer to them as the low (`x`), middle (`y`) and high/signal (`z`) source.
///
/// Condition reports are always recomputed from the coefficients; nothing is
/// cached on the triple.
#[derive(Debug, Clone)]
pub struct SourceTriple {
    pub x: PhotonNumberDistribution,
    pub y: PhotonNumberDistribution,
    pub z: PhotonNumberDistribution,
    pub side: Side,
}

impl SourceTriple {
    pub fn new(
        x: PhotonNumberDistribution,
        y: PhotonNumberDistribution,
        z: PhotonNumberDistribution,
        side: Side,
    ) -> Result<Self> {
        if !(x.intensity() < y.intensity() && y.intensity() < z.intensity()) {
            return Err(Error::InvalidParameter(format!(
                "triple intensities must be strictly increasing, got ({}, {}, {})",
                x.intensity(),
                y.intensity(),
                z.intensity()
            )));
        }
        if x.k_max() != y.k_max() || y.k_max() != z.k_max() {
            return Err(Error::InvalidParameter(
                "triple distributions must share a cutoff".into(),
            ));
        }
        Ok(Self { x, y, z, side })
    }

    /// Check the pairwise ratio chains on (x,y) and (y,z) and the triple
    /// determinant condition, as required before any 4-intensity bound.
    pub fn verify_conditions(&self, index_max: usize) -> Result<()> {
        let xy = check_pair_condition(&self.x, &self.y, self.x.k_max())?;
        if !xy.holds {
            return Err(Error::ConditionViolated(format!(
                "(x,y) ratio chain fails at k={:?}",
                xy.first_violation
            )));
        }
        let yz = check_pair_condition(&self.y, &self.z, self.y.k_max())?;
        if !yz.holds {
            return Err(Error::ConditionViolated(format!(
                "(y,z) ratio chain fails at k={:?}",
                yz.first_violation
            )));
        }
        let triple = check_triple_condition(self, index_max)?;
        if !triple.holds {
            return Err(Error::ConditionViolated(format!(
                "determinant condition fails at {:?}",
                triple.witnesses.first()
            )));
        }
        Ok(())
    }
}

/// The coefficient determinant used by every multi-source elimination:
/// with `g_m^l = a_m^l / a_m^z`,
/// `(g_i^x − g_j^x)(g_j^y − g_k^y) − (g_i^y − g_j^y)(g_j^x − g_k^x)`.
///
/// Applied to Bob's triple this is the second-side analogue built from the
/// `b` coefficients; the algebra is identical.
pub fn g_func(triple: &SourceTriple, i: usize, j: usize, k: usize) -> Result<f64> {
    if i == 0 || j == 0 || k == 0 {
        return Err(Error::InvalidParameter(
            "determinant indices start at photon number 1".into(),
        ));
    }
    let g = |m: usize| -> Result<(f64, f64)> {
        let az = triple.z.coeff(m);
        if az <= 0.0 {
            return Err(Error::ZeroCoefficient(format!(
                "signal coefficient at photon number {m}"
            )));
        }
        Ok((triple.x.coeff(m) / az, triple.y.coeff(m) / az))
    };
    let (gi_x, gi_y) = g(i)?;
    let (gj_x, gj_y) = g(j)?;
    let (gk_x, gk_y) = g(k)?;
    Ok((gi_x - gj_x) * (gj_y - gk_y) - (gi_y - gj_y) * (gj_x - gk_x))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairConditionReport {
    pub holds: bool,
    /// Photon number of the first broken link: 1 when the 2-vs-1 anchor
    /// fails, otherwise the smallest k ≥ 3 whose ratio drops below the
    /// 2-photon anchor.
    pub first_violation: Option<usize>,
}

/// Verify the ratio chain `a_k^hi/a_k^lo ≥ a_2^hi/a_2^lo ≥ a_1^hi/a_1^lo`
/// for all 2 ≤ k ≤ k_max, using cross-products so zero tail coefficients
/// need no division.
pub fn check_pair_condition(
    lo: &PhotonNumberDistribution,
    hi: &PhotonNumberDistribution,
    k_max: usize,
) -> Result<PairConditionReport> {
    if lo.k_max() < k_max.max(2) || hi.k_max() < k_max.max(2) {
        return Err(Error::InvalidParameter(format!(
            "distributions truncate below the requested k_max={k_max}"
        )));
    }
    for (name, d) in [("low", lo), ("high", hi)] {
        if d.coeff(1) <= 0.0 || d.coeff(2) <= 0.0 {
            return Err(Error::ZeroCoefficient(format!(
                "{name} source has a zero anchor coefficient at photon number 1 or 2"
            )));
        }
    }
    let tol = |a: f64, b: f64| SIGN_TOLERANCE * a.abs().max(b.abs()).max(1e-300);

    // Anchor link: a_2^hi a_1^lo ≥ a_1^hi a_2^lo.
    let lhs = hi.coeff(2) * lo.coeff(1);
    let rhs = hi.coeff(1) * lo.coeff(2);
    if lhs < rhs - tol(lhs, rhs) {
        return Ok(PairConditionReport {
            holds: false,
            first_violation: Some(1),
        });
    }
    // Chain links: a_k^hi a_2^lo ≥ a_2^hi a_k^lo for k ≥ 3 (k = 2 is trivial).
    for k in 3..=k_max {
        let lhs = hi.coeff(k) * lo.coeff(2);
        let rhs = hi.coeff(2) * lo.coeff(k);
        if lhs < rhs - tol(lhs, rhs) {
            return Ok(PairConditionReport {
                holds: false,
                first_violation: Some(k),
            });
        }
    }
    Ok(PairConditionReport {
        holds: true,
        first_violation: None,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleConditionReport {
    pub holds: bool,
    pub witnesses: Vec<(usize, usize, usize)>,
}

/// Evaluate the determinant condition over all index triples
/// 1 ≤ i ≤ j ≤ k ≤ index_max with k−j ≥ j−i, reporting every negative value
/// beyond the cancellation tolerance.
pub fn check_triple_condition(
    triple: &SourceTriple,
    index_max: usize,
) -> Result<TripleConditionReport> {
    if index_max < 3 {
        return Err(Error::InvalidParameter(format!(
            "index_max must be at least 3, got {index_max}"
        )));
    }
    let mut witnesses = Vec::new();
    for i in 1..=index_max {
        for j in i..=index_max {
            for k in j..=index_max {
                if k - j < j - i {
                    continue;
                }
                let az = |m: usize| triple.z.coeff(m);
                if az(i) <= 0.0 || az(j) <= 0.0 || az(k) <= 0.0 {
                    return Err(Error::ZeroCoefficient(format!(
                        "signal coefficient vanishes among photon numbers ({i},{j},{k})"
                    )));
                }
                let g = |m: usize, d: &PhotonNumberDistribution| d.coeff(m) / az(m);
                let term1 =
                    (g(i, &triple.x) - g(j, &triple.x)) * (g(j, &triple.y) - g(k, &triple.y));
                let term2 =
                    (g(i, &triple.y) - g(j, &triple.y)) * (g(j, &triple.x) - g(k, &triple.x));
                let value = term1 - term2;
                let scale = term1.abs().max(term2.abs()).max(1e-300);
                if value < -SIGN_TOLERANCE * scale {
                    witnesses.push((i, j, k));
                }
            }
        }
    }
    Ok(TripleConditionReport {
        holds: witnesses.is_empty(),
        witnesses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    fn poisson_triple(x: f64, y: f64, z: f64, k_max: usize) -> SourceTriple {
        SourceTriple::new(
            PhotonNumberDistribution::poisson(x, k_max).unwrap(),
            PhotonNumberDistribution::poisson(y, k_max).unwrap(),
            PhotonNumberDistribution::poisson(z, k_max).unwrap(),
            Side::Alice,
        )
        .unwrap()
    }

    #[test]
    fn poisson_head_coefficient() {
        let d = PhotonNumberDistribution::poisson(0.2, 10).unwrap();
        assert!(rel_close(d.coeff(0), (-0.2f64).exp(), 1e-12));
        // Direct formula check for a few k.
        let mut fact = 1.0;
        for k in 0..=10usize {
            if k > 0 {
                fact *= k as f64;
            }
            let expect = (-0.2f64).exp() * 0.2f64.powi(k as i32) / fact;
            assert!(rel_close(d.coeff(k), expect, 1e-12), "k={k}");
        }
    }

    #[test]
    fn poisson_ratio_is_intensity() {
        let d = PhotonNumberDistribution::poisson(0.2, 10).unwrap();
        assert!((d.coeff(1) / d.coeff(0) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn poisson_vacuum_limit() {
        let d = PhotonNumberDistribution::poisson(1e-9, 5).unwrap();
        assert!((d.coeff(0) - 1.0).abs() < 1e-8);
        assert!(d.coeff(1) < 2e-9);
        assert!(d.coeff(2) < 1e-17);
    }

    #[test]
    fn poisson_rejects_bad_parameters() {
        assert!(PhotonNumberDistribution::poisson(0.0, 10).is_err());
        assert!(PhotonNumberDistribution::poisson(-1.0, 10).is_err());
        assert!(PhotonNumberDistribution::poisson(0.5, 2).is_err());
    }

    #[test]
    fn thermal_small_cases() {
        let d = PhotonNumberDistribution::thermal(1.0, 10).unwrap();
        assert!((d.coeff(0) - 0.5).abs() < 1e-15);
        assert!((d.coeff(1) - 0.25).abs() < 1e-15);

        let d = PhotonNumberDistribution::thermal(0.5, 10).unwrap();
        for k in 0..10 {
            assert!(
                (d.coeff(k + 1) / d.coeff(k) - 1.0 / 3.0).abs() < 1e-15,
                "k={k}"
            );
        }
    }

    #[test]
    fn thermal_truncated_sum_is_geometric_series() {
        let d = PhotonNumberDistribution::thermal(0.2, 20).unwrap();
        let sum: f64 = d.coeffs().iter().sum();
        let expect = 1.0 - (0.2f64 / 1.2).powi(21);
        assert!((sum - expect).abs() < 1e-14);
    }

    #[test]
    fn hsps_perfect_heralding_removes_vacuum() {
        let d = PhotonNumberDistribution::hsps(0.1, 1.0, 0.0, 10).unwrap();
        assert_eq!(d.coeff(0), 0.0);
        assert!(d.coeff(1) > 0.0);
        // With eta_v = 1 every k >= 1 heralds with certainty, so the
        // distribution is the vacuum-stripped Poisson law renormalized.
        let pois = PhotonNumberDistribution::poisson(0.1, 10).unwrap();
        let norm = 1.0 - (-0.1f64).exp();
        for k in 1..=10 {
            assert!(rel_close(d.coeff(k), pois.coeff(k) / norm, 1e-12), "k={k}");
        }
    }

    #[test]
    fn hsps_dark_count_only_limit_recovers_parent() {
        let d = PhotonNumberDistribution::hsps(0.1, 1e-12, 1e-6, 10).unwrap();
        let pois = PhotonNumberDistribution::poisson(0.1, 10).unwrap();
        for k in 0..=10 {
            assert!(rel_close(d.coeff(k), pois.coeff(k), 1e-4), "k={k}");
        }
    }

    #[test]
    fn hsps_matches_monte_carlo_heralding() {
        // Independent check of the heralding formula: sample photon numbers
        // from the Poisson law and herald each draw through a simulated
        // threshold detector, then compare conditional frequencies.
        use rand::{Rng, SeedableRng};
        let (mu, eta_v, p_dv) = (0.1, 0.75, 1e-6);
        let d = PhotonNumberDistribution::hsps(mu, eta_v, p_dv, 10).unwrap();

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xD5_2001);
        let pois = PhotonNumberDistribution::poisson(mu, 24).unwrap();
        let cumulative: Vec<f64> = pois
            .coeffs()
            .iter()
            .scan(0.0, |acc, &p| {
                *acc += p;
                Some(*acc)
            })
            .collect();

        let trials = 2_000_000u64;
        let mut heralded = 0u64;
        let mut counts = [0u64; 5];
        for _ in 0..trials {
            let u: f64 = rng.random();
            let k = cumulative.partition_point(|&c| c < u).min(24);
            let mut click = rng.random::<f64>() < p_dv;
            for _ in 0..k {
                if rng.random::<f64>() < eta_v {
                    click = true;
                }
            }
            if click {
                heralded += 1;
                if k < counts.len() {
                    counts[k] += 1;
                }
            }
        }
        assert!(heralded > 100_000);
        for (k, &n) in counts.iter().enumerate() {
            let freq = n as f64 / heralded as f64;
            let expect = d.coeff(k);
            let sigma = (expect * (1.0 - expect) / heralded as f64).sqrt();
            assert!(
                (freq - expect).abs() < 5.0 * sigma + 1e-9,
                "k={k}: freq={freq} expect={expect} sigma={sigma}"
            );
        }
    }

    #[test]
    fn hsps_rejects_bad_parameters() {
        assert!(PhotonNumberDistribution::hsps(0.1, 0.0, 0.0, 10).is_err());
        assert!(PhotonNumberDistribution::hsps(0.1, 1.5, 0.0, 10).is_err());
        assert!(PhotonNumberDistribution::hsps(0.1, 0.5, 1.0, 10).is_err());
        assert!(PhotonNumberDistribution::hsps(-0.1, 0.5, 0.0, 10).is_err());
    }

    #[test]
    fn vacuum_is_one_hot() {
        let v = PhotonNumberDistribution::vacuum(8);
        assert_eq!(v.coeff(0), 1.0);
        assert_eq!(v.coeffs()[1..].iter().sum::<f64>(), 0.0);
        assert_eq!(v.tail_mass(), 0.0);
    }

    #[test]
    fn triple_requires_increasing_intensities() {
        let d = |mu| PhotonNumberDistribution::poisson(mu, 10).unwrap();
        assert!(SourceTriple::new(d(0.2), d(0.2), d(0.5), Side::Alice).is_err());
        assert!(SourceTriple::new(d(0.5), d(0.2), d(0.1), Side::Alice).is_err());
        assert!(SourceTriple::new(d(0.1), d(0.2), d(0.5), Side::Alice).is_ok());
    }

    #[test]
    fn g_func_degenerate_indices_vanish() {
        let t = poisson_triple(0.1, 0.2, 0.5, 10);
        assert_eq!(g_func(&t, 2, 2, 2).unwrap(), 0.0);
        assert_eq!(g_func(&t, 1, 1, 4).unwrap(), 0.0);
    }

    #[test]
    fn g_func_identical_low_sources_vanish() {
        let d = PhotonNumberDistribution::poisson(0.2, 10).unwrap();
        let t = SourceTriple {
            x: d.clone(),
            y: d,
            z: PhotonNumberDistribution::poisson(0.5, 10).unwrap(),
            side: Side::Alice,
        };
        for (i, j, k) in [(1, 2, 3), (1, 3, 5), (2, 2, 4)] {
            assert_eq!(g_func(&t, i, j, k).unwrap(), 0.0);
        }
    }

    #[test]
    fn g_func_matches_determinant_and_is_positive() {
        // Independent route: the same quantity is the 3x3 determinant of
        // rows (g_m^x, g_m^y, 1) for m = i, j, k.
        let t = poisson_triple(0.1, 0.2, 0.5, 10);
        let det = |i: usize, j: usize, k: usize| {
            let row = |m: usize| {
                let az = t.z.coeff(m);
                [t.x.coeff(m) / az, t.y.coeff(m) / az, 1.0]
            };
            let (r1, r2, r3) = (row(i), row(j), row(k));
            r1[0] * (r2[1] * r3[2] - r2[2] * r3[1]) - r1[1] * (r2[0] * r3[2] - r2[2] * r3[0])
                + r1[2] * (r2[0] * r3[1] - r2[1] * r3[0])
        };
        let g = g_func(&t, 1, 2, 3).unwrap();
        assert!(g > 0.0);
        assert!(rel_close(g, det(1, 2, 3), 1e-12));
        // Cyclic row permutations leave the determinant unchanged.
        assert!(rel_close(g_func(&t, 2, 3, 5).unwrap(), det(5, 2, 3), 1e-12));
    }

    #[test]
    fn g_func_antisymmetric_in_source_roles() {
        let t = poisson_triple(0.1, 0.2, 0.5, 12);
        let swapped = SourceTriple {
            x: t.y.clone(),
            y: t.x.clone(),
            z: t.z.clone(),
            side: Side::Alice,
        };
        for (i, j, k) in [(1, 2, 3), (1, 2, 5), (2, 3, 6), (1, 4, 9)] {
            let a = g_func(&t, i, j, k).unwrap();
            let b = g_func(&swapped, i, j, k).unwrap();
            assert!((a + b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300));
        }
    }

    #[test]
    fn g_func_stable_under_cutoff_extension() {
        let short = poisson_triple(0.1, 0.2, 0.5, 12);
        let long = poisson_triple(0.1, 0.2, 0.5, 30);
        for (i, j, k) in [(1, 2, 3), (2, 3, 8), (1, 5, 12)] {
            let a = g_func(&short, i, j, k).unwrap();
            let b = g_func(&long, i, j, k).unwrap();
            assert_eq!(a, b, "({i},{j},{k})");
        }
    }

    #[test]
    fn pair_condition_poisson_and_thermal_hold() {
        let p = |mu| PhotonNumberDistribution::poisson(mu, 20).unwrap();
        let t = |mu| PhotonNumberDistribution::thermal(mu, 20).unwrap();
        assert!(check_pair_condition(&p(0.2), &p(0.5), 20).unwrap().holds);
        assert!(check_pair_condition(&t(0.1), &t(0.4), 20).unwrap().holds);
    }

    #[test]
    fn pair_condition_flags_inflated_low_coefficient() {
        let lo = PhotonNumberDistribution::poisson(0.2, 20).unwrap();
        let hi = PhotonNumberDistribution::poisson(0.5, 20).unwrap();
        let mut coeffs = lo.coeffs().to_vec();
        coeffs[3] *= 10.0;
        // Renormalize so the vector stays a distribution; a uniform scale
        // leaves every ratio in the chain unchanged.
        let sum: f64 = coeffs.iter().sum();
        coeffs.iter_mut().for_each(|c| *c /= sum);
        let adversarial =
            PhotonNumberDistribution::from_coeffs(coeffs, 0.2, SourceKind::Custom).unwrap();
        let report = check_pair_condition(&adversarial, &hi, 20).unwrap();
        assert!(!report.holds);
        assert_eq!(report.first_violation, Some(3));
    }

    #[test]
    fn triple_condition_holds_for_practical_sources() {
        let t = poisson_triple(0.1, 0.2, 0.5, 10);
        assert!(check_triple_condition(&t, 8).unwrap().holds);

        let th = |mu| PhotonNumberDistribution::thermal(mu, 10).unwrap();
        let t = SourceTriple::new(th(0.1), th(0.2), th(0.5), Side::Bob).unwrap();
        assert!(check_triple_condition(&t, 8).unwrap().holds);
    }

    #[test]
    fn triple_condition_degenerate_equal_sources() {
        let d = PhotonNumberDistribution::poisson(0.2, 10).unwrap();
        let t = SourceTriple {
            x: d.clone(),
            y: d,
            z: PhotonNumberDistribution::poisson(0.5, 10).unwrap(),
            side: Side::Alice,
        };
        let report = check_triple_condition(&t, 8).unwrap();
        assert!(report.holds, "all determinants vanish, none negative");
    }

    #[test]
    fn ratio_of_one_minus_powers_is_monotone() {
        // (1 - v^m)/(1 - v^n), m > n >= 1, is non-decreasing in v on (0,1).
        for m in 2..=10usize {
            for n in 1..m {
                let mut prev = f64::NEG_INFINITY;
                for step in 1..1000 {
                    let v = step as f64 / 1000.0;
                    let f = (1.0 - v.powi(m as i32)) / (1.0 - v.powi(n as i32));
                    assert!(f >= prev - 1e-12, "m={m} n={n} v={v}: {f} < {prev}");
                    prev = f;
                }
            }
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn triple_intensities() -> impl Strategy<Value = (f64, f64, f64)> {
            (0.01f64..0.9, 0.02f64..0.3, 0.02f64..0.3).prop_map(|(x, d1, d2)| {
                let y = x + d1;
                let z = y + d2;
                (x, y, z)
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn practical_triples_satisfy_all_conditions(
                (x, y, z) in triple_intensities(),
                family in 0usize..3,
            ) {
                let build = |mu: f64| match family {
                    0 => PhotonNumberDistribution::poisson(mu, DEFAULT_K_MAX),
                    1 => PhotonNumberDistribution::thermal(mu, DEFAULT_K_MAX),
                    _ => PhotonNumberDistribution::hsps(mu, 0.75, 1e-6, DEFAULT_K_MAX),
                };
                let t = SourceTriple::new(
                    build(x).unwrap(),
                    build(y).unwrap(),
                    build(z).unwrap(),
                    Side::Alice,
                ).unwrap();
                prop_assert!(check_pair_condition(&t.x, &t.y, DEFAULT_K_MAX).unwrap().holds);
                prop_assert!(check_pair_condition(&t.y, &t.z, DEFAULT_K_MAX).unwrap().holds);
                prop_assert!(check_pair_condition(&t.x, &t.z, DEFAULT_K_MAX).unwrap().holds);
                prop_assert!(check_triple_condition(&t, 8).unwrap().holds);
            }

            #[test]
            fn distributions_are_subnormalized(
                mu in 0.01f64..1.5,
                family in 0usize..3,
            ) {
                let d = match family {
                    0 => PhotonNumberDistribution::poisson(mu, DEFAULT_K_MAX),
                    1 => PhotonNumberDistribution::thermal(mu, DEFAULT_K_MAX),
                    _ => PhotonNumberDistribution::hsps(mu, 0.75, 1e-6, DEFAULT_K_MAX),
                }.unwrap();
                prop_assert!(d.coeffs().iter().all(|&c| c >= 0.0));
                let sum: f64 = d.coeffs().iter().sum();
                prop_assert!(sum <= 1.0 + 1e-12);
            }
        }
    }
}
