//! Noncollinear (off-axis) correlations at lowest order in the inverse
//! detector distances: the auxiliary functions D₁–D₃, the closed-form C̄ for
//! detectors at polar angle Θ_d on opposite sides of the beam axis, the
//! mirror-pair variant, and the quadrature oracles that back the closed
//! forms.
//!
//! Validity: well-monochromatized beam, w ≫ w_z, w k₀ ≫ 1. The precondition
//! ratios are surfaced as warnings so approximation breakdown can be probed.

use std::f64::consts::PI;

use crate::dists::occupation;
use crate::numerics::{bracket_support, integrate_1d_with_breaks, integrate_pair, QuadSpec};
use crate::params::{BeamSpec, DetectorSpec, SourceSpec};
use crate::{Error, Result};

/// Values of the auxiliary functions D₁ ≤ D₂ ≤ D₃ at a detector angle
/// (squared-wavenumber scale).
#[derive(Debug, Clone, Copy)]
pub struct OffAxisAux {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

/// D₁ = δk_z² sin²Θ + δk_⊥² cos²Θ + 2 w_z² δk_z² δk_⊥² (1−cosΘ)²,
/// D₂ = D₁ + 2 w² δk_z² δk_⊥² sin²Θ,
/// D₃ = D₂ + 4 a² δk_z² δk_⊥² sin²Θ + 4 d² δk_z² δk_⊥² cos²Θ.
pub fn d_funcs(theta_d: f64, src: &SourceSpec, beam: &BeamSpec, det: &DetectorSpec) -> OffAxisAux {
    let (sin, cos) = theta_d.sin_cos();
    let (s2, c2) = (sin * sin, cos * cos);
    let kk = beam.dk_z * beam.dk_z * beam.dk_perp * beam.dk_perp;
    let d1 = beam.dk_z * beam.dk_z * s2
        + beam.dk_perp * beam.dk_perp * c2
        + 2.0 * src.w_z * src.w_z * kk * (1.0 - cos) * (1.0 - cos);
    let d2 = d1 + 2.0 * src.w * src.w * kk * s2;
    let d3 = d2 + 4.0 * kk * (det.a * det.a * s2 + det.d * det.d * c2);
    OffAxisAux { d1, d2, d3 }
}

/// Precondition ratios for the off-axis closed forms; values below 10 are
/// reported.
pub fn offaxis_warnings(src: &SourceSpec, beam: &BeamSpec) -> Vec<String> {
    let mut out = Vec::new();
    if src.w_z > 0.0 && src.w / src.w_z < 10.0 {
        out.push(format!("w/w_z = {:.2} below 10", src.w / src.w_z));
    }
    if src.w * beam.k0 < 10.0 {
        out.push(format!("w·k0 = {:.2} below 10", src.w * beam.k0));
    }
    if !beam.well_monochromatized(0.25) {
        out.push(format!("dk_z/k0 = {:.3} not well-monochromatized", beam.dk_z / beam.k0));
    }
    out
}

/// Normalized two-particle distribution for detectors at
/// r̄₁ = r̄₁(sinΘ cosΦ, sinΘ sinΦ, cosΘ), r̄₂ = r̄₂(−sinΘ cosΦ, −sinΘ sinΦ, cosΘ):
///
/// C̄ = 1 − sign · D₁/(2√(D₂D₃))
///       · exp[−w²k₀²δk_⊥⁴ sin²2Θ/(2D₁D₂) − δk_z²δk_⊥²(r̄₁−r̄₂)²/D₃].
///
/// Φ drops out by cylindrical symmetry. The lateral-suppression exponent
/// carries δk_⊥⁴, as the quadrature oracle of the Gaussian k-integration
/// requires (and as the mirror-pair form states).
pub fn c_offaxis(
    theta_d: f64,
    r1: f64,
    r2: f64,
    src: &SourceSpec,
    beam: &BeamSpec,
    det: &DetectorSpec,
) -> f64 {
    let aux = d_funcs(theta_d, src, beam, det);
    let sin2t = (2.0 * theta_d).sin();
    let wk = src.w * beam.k0;
    let dkp2 = beam.dk_perp * beam.dk_perp;
    let lateral = wk * wk * dkp2 * dkp2 * sin2t * sin2t / (2.0 * aux.d1 * aux.d2);
    let dr = r1 - r2;
    let longitudinal = beam.dk_z * beam.dk_z * dkp2 * dr * dr / aux.d3;
    let dip = aux.d1 / (2.0 * (aux.d2 * aux.d3).sqrt()) * (-lateral - longitudinal).exp();
    1.0 - src.statistics.exchange_sign() * dip
}

/// Mirror-pair geometry r̄₁ = (x, y, z), r̄₂ = (−x, −y, z):
///
/// C̄ = 1 − sign · D̃₁/(2√(D̃₂D̃₃)) · exp[−2w²k₀²δk_⊥⁴(x²+y²)z²/(D̃₁D̃₂)]
///
/// with D̃ᵢ = r̄²Dᵢ(Θ) for sinΘ = √(x²+y²)/r̄; both detectors sit at the same
/// radius, so the longitudinal separation term is absent.
pub fn c_symmetric_pair(
    x: f64,
    y: f64,
    z: f64,
    src: &SourceSpec,
    beam: &BeamSpec,
    det: &DetectorSpec,
) -> f64 {
    let rho2 = x * x + y * y;
    let r = (rho2 + z * z).sqrt();
    let kk = beam.dk_z * beam.dk_z * beam.dk_perp * beam.dk_perp;
    let d1 = beam.dk_z * beam.dk_z * rho2
        + beam.dk_perp * beam.dk_perp * z * z
        + 2.0 * src.w_z * src.w_z * kk * (r - z) * (r - z);
    let d2 = d1 + 2.0 * src.w * src.w * kk * rho2;
    let d3 = d2 + 4.0 * kk * (det.a * det.a * rho2 + det.d * det.d * z * z);
    let wk = src.w * beam.k0;
    let dkp4 = beam.dk_perp.powi(4);
    let lateral = 2.0 * wk * wk * dkp4 * rho2 * z * z / (d1 * d2);
    let dip = d1 / (2.0 * (d2 * d3).sqrt()) * (-lateral).exp();
    1.0 - src.statistics.exchange_sign() * dip
}

/// Off-axis monochromator profile f²(k, Θ): the squared window amplitude at
/// momentum k directed along either detector axis.
pub fn mono_f2_tilted(k: f64, theta_d: f64, beam: &BeamSpec) -> f64 {
    let (sin, cos) = theta_d.sin_cos();
    let norm = ((2.0 * PI).powi(3) * beam.dk_z.powi(2) * beam.dk_perp.powi(4)).sqrt();
    let expo = -k * k * sin * sin / (2.0 * beam.dk_perp * beam.dk_perp)
        - (k * cos - beam.k0).powi(2) / (2.0 * beam.dk_z * beam.dk_z);
    expo.exp() / norm
}

/// Quadrature oracle for the off-axis correlators: the radial momentum
/// integrals of the lowest-order angular reduction.
#[derive(Debug, Clone)]
pub struct OffAxisOracle {
    /// ρ̄⁽¹⁾ at r̄₁ and r̄₂ (λ²-scaled).
    pub rho1_r1: f64,
    pub rho1_r2: f64,
    /// Interference term (λ⁴-scaled), exchange-symmetrized real part.
    pub interference: f64,
    /// 1 − sign·Ī/(ρ̄₁ρ̄₂) assembled from the quadratures.
    pub c: f64,
    pub abs_error: f64,
}

fn occupation_or_zero(k: f64, src: &SourceSpec) -> f64 {
    occupation(0.5 * k * k / src.mass, src).unwrap_or(0.0)
}

/// Single-detector radial integrand weight N(ω_k) f²(k,Θ) e^{−w_z²k²(1−cosΘ)²}.
fn spectral_weight(k: f64, theta_d: f64, src: &SourceSpec, beam: &BeamSpec) -> f64 {
    let omc = 1.0 - theta_d.cos();
    occupation_or_zero(k, src)
        * mono_f2_tilted(k, theta_d, beam)
        * (-src.w_z * src.w_z * k * k * omc * omc).exp()
}

/// Radial window for the tilted spectrum, centered on the stationary point of
/// the f²(k,Θ) exponent.
fn tilted_window(theta_d: f64, src: &SourceSpec, beam: &BeamSpec, spec: &QuadSpec) -> (f64, f64) {
    let (sin, cos) = theta_d.sin_cos();
    let a = sin * sin / (beam.dk_perp * beam.dk_perp) + cos * cos / (beam.dk_z * beam.dk_z);
    let center = beam.k0 * cos / (beam.dk_z * beam.dk_z) / a;
    let sigma = (1.0 / a).sqrt();
    let env = |k: f64| spectral_weight(k, theta_d, src, beam);
    bracket_support(env, center, spec.k_window_sigmas * sigma, 1e-6 * beam.k0, 1e-10)
}

/// Evaluate the quadrature oracle at angle `theta_d` and radii (r1, r2).
pub fn appendix_oracles(
    theta_d: f64,
    r1: f64,
    r2: f64,
    src: &SourceSpec,
    beam: &BeamSpec,
    det: &DetectorSpec,
    spec: &QuadSpec,
) -> Result<OffAxisOracle> {
    let lam2 = src.coupling * src.coupling;
    let m = src.mass;
    let w2 = src.w * src.w;
    let (lo, hi) = tilted_window(theta_d, src, beam, spec);
    let breaks = {
        let mut b = vec![lo, hi];
        if src.mu > 0.0 {
            let kf = (2.0 * src.mass * src.mu).sqrt();
            if kf > lo && kf < hi {
                b.insert(1, kf);
            }
        }
        b
    };

    let radial = integrate_1d_with_breaks(|k| spectral_weight(k, theta_d, src, beam), &breaks, spec)?;
    let rho_pref = |r: f64| lam2 * m * m / ((2.0 * PI).powi(4) * w2 * r * r);
    let rho1_r1 = rho_pref(r1) * radial.value;
    let rho1_r2 = rho_pref(r2) * radial.value;

    let (sin, cos) = theta_d.sin_cos();
    let res2 = det.a * det.a * sin * sin + det.d * det.d * cos * cos;
    let omc2 = (1.0 - cos) * (1.0 - cos);
    let dr = r1 - r2;
    let f = |k1: f64, k2: f64| {
        let dk = k1 - k2;
        occupation_or_zero(k1, src)
            * occupation_or_zero(k2, src)
            * mono_f2_tilted(k1, theta_d, beam)
            * mono_f2_tilted(k2, theta_d, beam)
            * (dk * dr).cos()
            * (-dk * dk * res2).exp()
            * (-(k1 * k1 + k2 * k2) * (w2 * sin * sin + src.w_z * src.w_z * omc2)).exp()
    };
    // Positive-kernel scale: the diagonal weight squared.
    let srow = integrate_1d_with_breaks(
        |k| spectral_weight(k, theta_d, src, beam) * (-k * k * w2 * sin * sin).exp(),
        &breaks,
        spec,
    )?;
    let q2 = integrate_pair(f, &breaks, srow.value * srow.value, spec)?;
    let i_pref = lam2 * lam2 * m.powi(4)
        / (2.0 * (2.0 * PI).powi(8) * w2 * w2 * r1 * r1 * r2 * r2);
    let interference = i_pref * q2.value;

    let denom = rho1_r1 * rho1_r2;
    if denom <= 0.0 {
        return Err(Error::Domain("oracle single-particle distribution vanished".into()));
    }
    let sign = src.statistics.exchange_sign();
    let c = 1.0 - sign * interference / denom;
    let abs_error = (i_pref * q2.abs_error
        + (interference / denom).abs()
            * 2.0
            * rho_pref(r1)
            * radial.abs_error
            * rho1_r2.abs())
        / denom;
    Ok(OffAxisOracle { rho1_r1, rho1_r2, interference, c, abs_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Statistics;
    use proptest::prelude::*;

    fn src() -> SourceSpec {
        // Flat occupation over the window: closed-form validity domain.
        SourceSpec::new(1.0, 0.05, 5.0, 288.0).unwrap()
    }

    fn beam() -> BeamSpec {
        BeamSpec::new(20.0, 0.5, 0.5).unwrap()
    }

    #[test]
    fn d_funcs_at_zero_angle() {
        let det = DetectorSpec::new(0.7, 1.3).unwrap();
        let aux = d_funcs(0.0, &src(), &beam(), &det);
        let dkp2 = 0.25;
        assert!((aux.d1 - dkp2).abs() < 1e-15);
        assert!((aux.d2 - dkp2).abs() < 1e-15);
        let want_d3 = dkp2 * (1.0 + 4.0 * 0.25 * 1.3 * 1.3);
        assert!((aux.d3 - want_d3).abs() < 1e-15);
    }

    #[test]
    fn d_funcs_at_right_angle() {
        let mut s = src();
        s.w_z = 0.0;
        let det = DetectorSpec::ideal();
        let aux = d_funcs(std::f64::consts::FRAC_PI_2, &s, &beam(), &det);
        let dkz2 = 0.25;
        assert!((aux.d1 - dkz2).abs() < 1e-15);
        assert!((aux.d2 - aux.d1 - 2.0 * 0.25 * 0.25).abs() < 1e-15);
        assert!((aux.d3 - aux.d2).abs() < 1e-15);
    }

    #[test]
    fn reduces_to_collinear_form_at_zero_angle() {
        let s = src();
        let b = beam();
        let det = DetectorSpec::new(3.0, 2.0).unwrap();
        let (z1, z2) = (163.0, 160.0);
        let got = c_offaxis(0.0, z1, z2, &s, &b, &det);
        let dkd2 = 4.0 * b.dk_z * b.dk_z * det.d * det.d;
        let dz = z1 - z2;
        let want = 1.0
            - 0.5 / (1.0 + dkd2).sqrt()
                * (-dz * dz / (1.0 / (b.dk_z * b.dk_z) + 4.0 * det.d * det.d)).exp();
        assert!((got - want).abs() < 1e-15);
        // Point detectors at equal radii: the 0.5 floor.
        assert_eq!(c_offaxis(0.0, 160.0, 160.0, &s, &b, &DetectorSpec::ideal()), 0.5);
    }

    #[test]
    fn tilt_makes_the_dip_strictly_shallower() {
        let s = src();
        let b = beam();
        let det = DetectorSpec::ideal();
        // The lateral suppression is Gaussian in sin2Θ; probe small tilts
        // where the dip is still alive.
        let mut prev_depth = 1.0 - c_offaxis(0.0, 160.0, 160.0, &s, &b, &det);
        for i in 1..=5 {
            let th = 0.01 * i as f64;
            let depth = 1.0 - c_offaxis(th, 160.0, 160.0, &s, &b, &det);
            assert!(depth < prev_depth && depth > 0.0, "theta={th}: {depth} !< {prev_depth}");
            prev_depth = depth;
        }
    }

    #[test]
    fn symmetric_pair_reductions() {
        let s = src();
        let b = beam();
        let det = DetectorSpec::new(0.0, 2.0).unwrap();
        // On-axis pair: no separation term.
        let got = c_symmetric_pair(0.0, 0.0, 160.0, &s, &b, &det);
        let want = 1.0 - 0.5 / (1.0 + 4.0 * b.dk_z * b.dk_z * det.d * det.d).sqrt();
        assert!((got - want).abs() < 1e-15);
        // Mirror of c_offaxis at equal radii through sinΘ = ρ/r̄.
        let (x, y, z) = (3.0, 4.0, 160.0);
        let r = (x * x + y * y + z * z as f64).sqrt();
        let th = ((x * x + y * y) as f64).sqrt().atan2(z);
        let via_angle = c_offaxis(th, r, r, &s, &b, &det);
        let direct = c_symmetric_pair(x, y, z, &s, &b, &det);
        assert!((via_angle - direct).abs() < 1e-12, "{via_angle} vs {direct}");
    }

    #[test]
    fn lateral_separation_shrinks_the_pair_dip() {
        let s = src();
        let b = beam();
        let det = DetectorSpec::ideal();
        let mut prev = 1.0 - c_symmetric_pair(0.0, 0.0, 160.0, &s, &b, &det);
        for i in 1..=5 {
            let x = 2.0 * i as f64;
            let depth = 1.0 - c_symmetric_pair(x, 0.0, 160.0, &s, &b, &det);
            assert!(depth < prev);
            prev = depth;
        }
    }

    #[test]
    fn continuity_at_small_angle_is_quadratic() {
        let s = src();
        let b = beam();
        let det = DetectorSpec::new(1.0, 1.0).unwrap();
        let c0 = c_offaxis(0.0, 162.0, 160.0, &s, &b, &det);
        let d1 = (c_offaxis(1e-3, 162.0, 160.0, &s, &b, &det) - c0).abs();
        let d2 = (c_offaxis(1e-2, 162.0, 160.0, &s, &b, &det) - c0).abs();
        // O(Θ²) scaling: two decades in Θ² between the probes.
        let slope = (d2 / d1).log10();
        assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn boson_mirror_identity() {
        let mut s = src();
        let b = beam();
        let det = DetectorSpec::new(0.5, 0.5).unwrap();
        let cf = c_offaxis(0.2, 162.0, 160.0, &s, &b, &det);
        s.statistics = Statistics::Boson;
        let cb = c_offaxis(0.2, 162.0, 160.0, &s, &b, &det);
        assert!((cf + cb - 2.0).abs() < 1e-15);
    }

    #[test]
    fn tilted_profile_peak_location() {
        // As δk_z → 0 the stationary point of f(k,Θ) satisfies k cosΘ = k₀.
        let mut b = beam();
        b.dk_z = 0.05;
        let th = 0.3f64;
        let mut best = (0.0, 0.0);
        for i in 0..4000 {
            let k = 15.0 + 10.0 * i as f64 / 4000.0;
            let v = mono_f2_tilted(k, th, &b);
            if v > best.1 {
                best = (k, v);
            }
        }
        assert!((best.0 * th.cos() - b.k0).abs() / b.k0 < 2e-3, "k*cosΘ = {}", best.0 * th.cos());
    }

    #[test]
    fn oracle_backs_the_closed_form() {
        // Narrow transverse window keeps the off-axis dip alive at finite
        // tilt, so the comparison carries weight.
        let s = src();
        let b = BeamSpec::new(20.0, 0.1, 0.5).unwrap();
        let det = DetectorSpec::new(0.5, 0.5).unwrap();
        let spec = QuadSpec::default();
        for (th, r1, r2) in [(0.03, 160.0, 160.0), (0.05, 160.0, 159.0)] {
            let oracle = appendix_oracles(th, r1, r2, &s, &b, &det, &spec).unwrap();
            let closed = c_offaxis(th, r1, r2, &s, &b, &det);
            let dip = 1.0 - closed;
            assert!(dip > 0.05, "test point lost its dip: {dip}");
            assert!(
                (oracle.c - closed).abs() < 0.03 * dip,
                "theta={th}: oracle {} vs closed {closed}",
                oracle.c
            );
        }
    }

    #[test]
    fn oracle_at_zero_angle_matches_collinear_gauss() {
        // Lowest order in 1/z̄: compare against the collinear Gaussian path
        // with point-lateral detectors.
        use crate::collinear::{c_normalized, CollinearSetup};
        use crate::params::Method;
        let s = src();
        let b = beam();
        let det = DetectorSpec::new(0.0, 1.0).unwrap();
        let spec = QuadSpec::default();
        let oracle = appendix_oracles(0.0, 161.0, 160.0, &s, &b, &det, &spec).unwrap();
        let setup = CollinearSetup::new(s, b, det, 161.0, 160.0).unwrap();
        let cg = c_normalized(&setup, Method::GaussianApprox, &spec).unwrap().value;
        let dip = 1.0 - cg;
        assert!((oracle.c - cg).abs() < 0.03 * dip, "oracle {} vs gauss {cg}", oracle.c);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        /// Added terms are nonnegative: D₁ ≤ D₂ ≤ D₃ everywhere.
        #[test]
        fn d_funcs_ordered(
            theta in 0.0f64..std::f64::consts::FRAC_PI_2,
            wz in 0.0f64..0.5,
            a in 0.0f64..5.0,
            d in 0.0f64..5.0,
        ) {
            let mut s = src();
            s.w_z = wz;
            let det = DetectorSpec::new(a, d).unwrap();
            let aux = d_funcs(theta, &s, &beam(), &det);
            prop_assert!(aux.d1 > 0.0);
            prop_assert!(aux.d1 <= aux.d2 && aux.d2 <= aux.d3);
        }

        /// Exchange symmetry r̄₁ ↔ r̄₂.
        #[test]
        fn exchange_symmetry(theta in 0.0f64..0.8, r1 in 120.0f64..200.0, r2 in 120.0f64..200.0) {
            let s = src();
            let det = DetectorSpec::new(0.5, 0.5).unwrap();
            let c12 = c_offaxis(theta, r1, r2, &s, &beam(), &det);
            let c21 = c_offaxis(theta, r2, r1, &s, &beam(), &det);
            prop_assert!((c12 - c21).abs() < 1e-14);
        }

        /// The mirror-pair closed form is c_offaxis evaluated at the pair's
        /// polar angle and common radius.
        #[test]
        fn pair_identity(x in 0.0f64..20.0, y in 0.0f64..20.0, z in 100.0f64..200.0) {
            let s = src();
            let det = DetectorSpec::new(1.0, 2.0).unwrap();
            let r = (x * x + y * y + z * z).sqrt();
            let th = (x * x + y * y).sqrt().atan2(z);
            let via_angle = c_offaxis(th, r, r, &s, &beam(), &det);
            let direct = c_symmetric_pair(x, y, z, &s, &beam(), &det);
            let dip = (1.0 - direct).abs().max(1e-12);
            prop_assert!((via_angle - direct).abs() / dip < 1e-10);
        }
    }
}
