//! Physical parameters, unit conventions, and SI conversion.
//!
//! Internally everything is expressed in natural units ħ = 1, m = 1 (the
//! emitted particle's mass), with lengths in units of the lateral window
//! size `w`.  Energies then carry units ħ²/(m w²) and wavenumbers 1/w,
//! matching the convention of the collinear formulas and keeping all
//! exponentials O(1).

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Reduced Planck constant (J·s), CODATA 2018.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Quantum statistics of the emitted particles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    #[default]
    Fermion,
    Boson,
    Classical,
}

impl Statistics {
    /// Sign of the exchange (interference) term in the normalized
    /// two-particle distribution: C̄ = 1 − sign · Ī/(ρ̄₁ρ̄₂).
    ///
    /// Fermions dip (+1), bosons bunch (−1), classical particles carry no
    /// exchange term (0).
    pub fn exchange_sign(self) -> f64 {
        match self {
            Statistics::Fermion => 1.0,
            Statistics::Boson => -1.0,
            Statistics::Classical => 0.0,
        }
    }
}

/// Thermal source: Gaussian emitting window and occupation of the initial
/// state.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SourceSpec {
    /// Lateral size of the circular emitting window (unit length internally).
    pub w: f64,
    /// Depth of the emitting region along the beam axis.
    pub w_z: f64,
    /// Inverse temperature β (units m w²/ħ²).
    pub beta: f64,
    /// Chemical potential / Fermi level μ (units ħ²/(m w²)).
    pub mu: f64,
    /// Particle mass (1 in natural units).
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default)]
    pub statistics: Statistics,
    /// Emission coupling λ. Scales unnormalized distributions (ρ̄ ∝ λ²,
    /// Ī ∝ λ⁴) and cancels in every normalized output; kept so the
    /// intermediates carry their full prefactors.
    #[serde(default = "one")]
    pub coupling: f64,
}

fn one() -> f64 {
    1.0
}

impl SourceSpec {
    /// Natural-unit source with mass 1, coupling 1, Fermi statistics.
    pub fn new(w: f64, w_z: f64, beta: f64, mu: f64) -> Result<Self> {
        let s = SourceSpec {
            w,
            w_z,
            beta,
            mu,
            mass: 1.0,
            statistics: Statistics::Fermion,
            coupling: 1.0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_statistics(mut self, statistics: Statistics) -> Self {
        self.statistics = statistics;
        self
    }

    pub fn with_coupling(mut self, coupling: f64) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w > 0.0) {
            return Err(Error::InvalidParam(format!("w must be > 0, got {}", self.w)));
        }
        if !(self.w_z >= 0.0) {
            return Err(Error::InvalidParam(format!("w_z must be >= 0, got {}", self.w_z)));
        }
        if !(self.beta > 0.0) {
            return Err(Error::InvalidParam(format!("beta must be > 0, got {}", self.beta)));
        }
        if !(self.mass > 0.0) {
            return Err(Error::InvalidParam(format!("mass must be > 0, got {}", self.mass)));
        }
        Ok(())
    }
}

/// Gaussian monochromator window around the beam momentum k₀ ẑ.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BeamSpec {
    /// Central momentum magnitude, beam along +z (units 1/w).
    pub k0: f64,
    /// Transverse window width δk_⊥.
    pub dk_perp: f64,
    /// Longitudinal window width δk_z.
    pub dk_z: f64,
}

impl BeamSpec {
    pub fn new(k0: f64, dk_perp: f64, dk_z: f64) -> Result<Self> {
        let b = BeamSpec { k0, dk_perp, dk_z };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k0 > 0.0) {
            return Err(Error::InvalidParam(format!("k0 must be > 0, got {}", self.k0)));
        }
        if !(self.dk_perp > 0.0) {
            return Err(Error::InvalidParam(format!(
                "dk_perp must be > 0, got {}",
                self.dk_perp
            )));
        }
        if !(self.dk_z > 0.0) {
            return Err(Error::InvalidParam(format!("dk_z must be > 0, got {}", self.dk_z)));
        }
        Ok(())
    }

    /// Whether the beam qualifies as well-monochromatized for the closed-form
    /// paths, `dk_z < k0 * max_ratio`. The default gate is `max_ratio = 1/4`.
    pub fn well_monochromatized(&self, max_ratio: f64) -> bool {
        self.dk_z < self.k0 * max_ratio
    }
}

/// Gaussian detector acceptance: lateral mouth `a`, longitudinal resolution
/// `d`. Zero means ideal (point) resolution in that direction.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DetectorSpec {
    pub a: f64,
    pub d: f64,
}

impl DetectorSpec {
    pub fn new(a: f64, d: f64) -> Result<Self> {
        let det = DetectorSpec { a, d };
        det.validate()?;
        Ok(det)
    }

    /// Ideal point detectors.
    pub fn ideal() -> Self {
        DetectorSpec { a: 0.0, d: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a >= 0.0) {
            return Err(Error::InvalidParam(format!("a must be >= 0, got {}", self.a)));
        }
        if !(self.d >= 0.0) {
            return Err(Error::InvalidParam(format!("d must be >= 0, got {}", self.d)));
        }
        Ok(())
    }
}

/// Detector placement.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Geometry {
    /// Both detectors on the longitudinal z axis.
    Collinear { z1: f64, z2: f64 },
    /// Detectors at polar angle Θ_d on opposite sides of the axis,
    /// at radial distances r1, r2. Φ drops out of all results
    /// (cylindrical symmetry) but is accepted for completeness.
    OffAxis { theta_d: f64, phi: f64, r1: f64, r2: f64 },
    /// Mirror pair r₁ = (x, y, z), r₂ = (−x, −y, z).
    SymmetricPair { x: f64, y: f64, z: f64 },
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Geometry::Collinear { z1, z2 } => z1 > 0.0 && z2 > 0.0,
            Geometry::OffAxis { r1, r2, .. } => r1 > 0.0 && r2 > 0.0,
            Geometry::SymmetricPair { x, y, z } => z > 0.0 && (x * x + y * y + z * z) > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParam(format!("radial distances must be > 0: {self:?}")))
        }
    }

    /// Far-field validity warnings: every detector distance should dominate
    /// the window size and the detector resolutions. Ratios below
    /// `min_ratio` (conventionally 20) are reported, not rejected.
    pub fn far_field_warnings(
        &self,
        src: &SourceSpec,
        det: &DetectorSpec,
        min_ratio: f64,
    ) -> Vec<String> {
        let dists: Vec<f64> = match *self {
            Geometry::Collinear { z1, z2 } => vec![z1, z2],
            Geometry::OffAxis { r1, r2, .. } => vec![r1, r2],
            Geometry::SymmetricPair { x, y, z } => vec![(x * x + y * y + z * z).sqrt()],
        };
        let mut warnings = Vec::new();
        for (name, scale) in [("w", src.w), ("a", det.a), ("d", det.d)] {
            if scale <= 0.0 {
                continue;
            }
            for &r in &dists {
                if r / scale < min_ratio {
                    warnings.push(format!(
                        "far-field ratio r/{name} = {:.3} below {min_ratio}",
                        r / scale
                    ));
                }
            }
        }
        warnings
    }
}

/// Evaluation route for the correlators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Closed form (well-monochromatized, far field).
    Analytic,
    /// Gaussian (saddle-point) reduction of the angular integrals,
    /// momentum integrals by quadrature.
    #[serde(rename = "gauss")]
    GaussianApprox,
    /// Full quadrature, no Gaussian approximation.
    Numeric,
}

/// Evaluation diagnostics attached to a [`CorrResult`].
#[derive(Debug, Clone, Default, Serialize)]
pub struct EvalMeta {
    /// Total quadrature subdivisions across all nested integrals.
    pub subdivisions: usize,
    /// Highest azimuthal (Bessel) series order summed, if applicable.
    pub bessel_terms: usize,
    /// Residual imaginary part relative to the value. The production
    /// interference path integrates the exchange-symmetrized real integrand,
    /// so this is zero by construction.
    pub imag_residual: f64,
    pub warnings: Vec<String>,
}

/// A correlation value with its evaluation route and error estimate.
#[derive(Debug, Clone, Serialize)]
pub struct CorrResult {
    pub value: f64,
    pub method: Method,
    /// Conservative quadrature error estimate (0 for closed forms).
    pub abs_error: f64,
    pub meta: EvalMeta,
}

impl CorrResult {
    pub fn exact(value: f64, method: Method) -> Self {
        CorrResult { value, method, abs_error: 0.0, meta: EvalMeta::default() }
    }

    /// Sanity band for a normalized fermion C̄ on valid far-field inputs:
    /// [0.45, 1.05] catches sign errors while tolerating quadrature noise
    /// around the exact 0.5 floor.
    pub fn in_fermion_band(&self) -> bool {
        (0.45..=1.05).contains(&self.value)
    }
}

/// Scale anchors of the natural unit system, kept for converting back to SI.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct UnitScales {
    /// Unit of length: the lateral window size w, in meters.
    pub length_m: f64,
    /// Particle mass in kg.
    pub mass_kg: f64,
}

impl UnitScales {
    /// Unit of energy ħ²/(m w²), in joules.
    pub fn energy_j(&self) -> f64 {
        HBAR * HBAR / (self.mass_kg * self.length_m * self.length_m)
    }
}

/// Full parameter set in SI units (meters, joules, kilograms, 1/m, 1/J).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SiParams {
    pub w_m: f64,
    pub w_z_m: f64,
    pub beta_per_j: f64,
    pub mu_j: f64,
    pub mass_kg: f64,
    #[serde(default)]
    pub statistics: Statistics,
    #[serde(default = "one")]
    pub coupling: f64,
    pub k0_per_m: f64,
    pub dk_perp_per_m: f64,
    pub dk_z_per_m: f64,
    pub a_m: f64,
    pub d_m: f64,
    /// Geometry with all lengths in meters.
    pub geometry: Geometry,
}

/// Convert SI parameters to natural units (ħ = m = 1, lengths in units of w).
pub fn to_natural(
    si: &SiParams,
) -> Result<(SourceSpec, BeamSpec, DetectorSpec, Geometry, UnitScales)> {
    if !(si.w_m > 0.0) {
        return Err(Error::UnitConversion(format!(
            "window size w must be > 0 m, got {}",
            si.w_m
        )));
    }
    if !(si.mass_kg > 0.0) {
        return Err(Error::UnitConversion(format!(
            "mass must be > 0 kg, got {}",
            si.mass_kg
        )));
    }
    let scales = UnitScales { length_m: si.w_m, mass_kg: si.mass_kg };
    let e0 = scales.energy_j();
    let w = si.w_m;

    let src = SourceSpec {
        w: 1.0,
        w_z: si.w_z_m / w,
        beta: si.beta_per_j * e0,
        mu: si.mu_j / e0,
        mass: 1.0,
        statistics: si.statistics,
        coupling: si.coupling,
    };
    src.validate()?;
    let beam = BeamSpec::new(si.k0_per_m * w, si.dk_perp_per_m * w, si.dk_z_per_m * w)?;
    let det = DetectorSpec::new(si.a_m / w, si.d_m / w)?;
    let geometry = match si.geometry {
        Geometry::Collinear { z1, z2 } => Geometry::Collinear { z1: z1 / w, z2: z2 / w },
        Geometry::OffAxis { theta_d, phi, r1, r2 } => {
            Geometry::OffAxis { theta_d, phi, r1: r1 / w, r2: r2 / w }
        }
        Geometry::SymmetricPair { x, y, z } => {
            Geometry::SymmetricPair { x: x / w, y: y / w, z: z / w }
        }
    };
    geometry.validate()?;
    Ok((src, beam, det, geometry, scales))
}

/// Convert natural-unit specs back to SI using the recorded scales.
/// Inverse of [`to_natural`].
pub fn to_si(
    src: &SourceSpec,
    beam: &BeamSpec,
    det: &DetectorSpec,
    geometry: &Geometry,
    scales: &UnitScales,
) -> SiParams {
    let w = scales.length_m * src.w;
    let e0 = HBAR * HBAR / (scales.mass_kg * w * w);
    SiParams {
        w_m: w,
        w_z_m: src.w_z * w,
        beta_per_j: src.beta / e0,
        mu_j: src.mu * e0,
        mass_kg: src.mass * scales.mass_kg,
        statistics: src.statistics,
        coupling: src.coupling,
        k0_per_m: beam.k0 / w,
        dk_perp_per_m: beam.dk_perp / w,
        dk_z_per_m: beam.dk_z / w,
        a_m: det.a * w,
        d_m: det.d * w,
        geometry: match *geometry {
            Geometry::Collinear { z1, z2 } => Geometry::Collinear { z1: z1 * w, z2: z2 * w },
            Geometry::OffAxis { theta_d, phi, r1, r2 } => {
                Geometry::OffAxis { theta_d, phi, r1: r1 * w, r2: r2 * w }
            }
            Geometry::SymmetricPair { x, y, z } => {
                Geometry::SymmetricPair { x: x * w, y: y * w, z: z * w }
            }
        },
    }
}

/// On-disk parameter file: natural-unit specs or an SI block, selected by
/// the `units` field. See `docs/params-schema.md`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "units", rename_all = "UPPERCASE")]
pub enum ParamsFile {
    Si(SiParams),
    #[serde(rename = "natural")]
    Natural {
        source: SourceSpec,
        beam: BeamSpec,
        detector: DetectorSpec,
        geometry: Geometry,
    },
}

impl ParamsFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::InvalidParam(format!("parameter file: {e}")))
    }

    /// Resolve to natural-unit specs, converting from SI if necessary.
    pub fn resolve(&self) -> Result<(SourceSpec, BeamSpec, DetectorSpec, Geometry)> {
        match self {
            ParamsFile::Si(si) => {
                let (src, beam, det, geo, _) = to_natural(si)?;
                Ok((src, beam, det, geo))
            }
            ParamsFile::Natural { source, beam, detector, geometry } => {
                source.validate()?;
                beam.validate()?;
                detector.validate()?;
                geometry.validate()?;
                Ok((*source, *beam, *detector, *geometry))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn electron_si() -> SiParams {
        // a = 2 mm, w = 18 nm, k0 = 1e11 m^-1, z = 0.1 m
        SiParams {
            w_m: 18e-9,
            w_z_m: 0.9e-9,
            beta_per_j: 1e19,
            mu_j: 1e-18,
            mass_kg: 9.109_383_701_5e-31,
            statistics: Statistics::Fermion,
            coupling: 1.0,
            k0_per_m: 1e11,
            dk_perp_per_m: 5e9,
            dk_z_per_m: 5e9,
            a_m: 2e-3,
            d_m: 1e-4,
            geometry: Geometry::Collinear { z1: 0.1, z2: 0.1 },
        }
    }

    #[test]
    fn electron_set_converts_to_window_units() {
        let (src, beam, det, geo, _) = to_natural(&electron_si()).unwrap();
        assert_eq!(src.w, 1.0);
        assert!((det.a - 1.1111e5).abs() / 1.1111e5 < 1e-4);
        assert!((beam.k0 - 1800.0).abs() < 1e-9);
        match geo {
            Geometry::Collinear { z1, .. } => {
                assert!((z1 - 5.5556e6).abs() / 5.5556e6 < 1e-4);
            }
            _ => panic!("geometry variant changed"),
        }
    }

    #[test]
    fn identity_scaling_for_unit_window() {
        let mut si = electron_si();
        si.w_m = 1.0;
        si.a_m = 1.0;
        let (_, _, det, _, _) = to_natural(&si).unwrap();
        assert_eq!(det.a, 1.0);
    }

    #[test]
    fn natural_parameters_pass_through() {
        // A beam already expressed in window units keeps its numbers.
        let beam = BeamSpec::new(20.0, 0.5, 0.5).unwrap();
        assert_eq!(beam.k0, 20.0);
        let file = serde_json::json!({
            "units": "natural",
            "source": {"w": 1.0, "w_z": 0.05, "beta": 5.0, "mu": 210.125},
            "beam": {"k0": 20.0, "dk_perp": 0.5, "dk_z": 0.5},
            "detector": {"a": 0.0, "d": 0.0},
            "geometry": {"type": "collinear", "z1": 160.0, "z2": 160.0}
        });
        let parsed = ParamsFile::from_json(&file.to_string()).unwrap();
        let (_, b, _, _) = parsed.resolve().unwrap();
        assert_eq!(b.k0, 20.0);
    }

    #[test]
    fn si_round_trip() {
        let si = electron_si();
        let (src, beam, det, geo, scales) = to_natural(&si).unwrap();
        let back = to_si(&src, &beam, &det, &geo, &scales);
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
        assert!(rel(back.w_m, si.w_m) < 1e-12);
        assert!(rel(back.beta_per_j, si.beta_per_j) < 1e-12);
        assert!(rel(back.mu_j, si.mu_j) < 1e-12);
        assert!(rel(back.k0_per_m, si.k0_per_m) < 1e-12);
        assert!(rel(back.a_m, si.a_m) < 1e-12);
        match (back.geometry, si.geometry) {
            (Geometry::Collinear { z1: a, .. }, Geometry::Collinear { z1: b, .. }) => {
                assert!(rel(a, b) < 1e-12)
            }
            _ => panic!("geometry variant changed"),
        }
    }

    #[test]
    fn nonpositive_window_is_rejected() {
        let mut si = electron_si();
        si.w_m = 0.0;
        assert!(matches!(to_natural(&si), Err(Error::UnitConversion(_))));
    }

    #[test]
    fn boson_sign_flips_and_classical_vanishes() {
        assert_eq!(Statistics::Fermion.exchange_sign(), 1.0);
        assert_eq!(Statistics::Boson.exchange_sign(), -1.0);
        assert_eq!(Statistics::Classical.exchange_sign(), 0.0);
    }

    #[test]
    fn far_field_warnings_trip_below_ratio() {
        let src = SourceSpec::new(1.0, 0.05, 5.0, 210.0).unwrap();
        let det = DetectorSpec::new(5.0, 0.0).unwrap();
        let geo = Geometry::Collinear { z1: 50.0, z2: 160.0 };
        let warnings = geo.far_field_warnings(&src, &det, 20.0);
        // z1/a = 10 < 20 trips; z1/w = 50 does not.
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("r/a"));
    }
}
