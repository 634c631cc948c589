//! Experiment-scale visibility estimates.
//!
//! For each recorded experiment the closed-form dip depth factorizes at
//! z̄₁ = z̄₂ = z into
//!
//!   depth = 1/2 · [1 + 2a²w²k₀²/z²]⁻¹ · [1 + 4δk_z²d²]^{−1/2},
//!
//! a lateral (coherence-area) factor and a longitudinal (resolution) factor.
//! Both are dimensionless, so they can be computed directly from SI inputs.
//!
//! The longitudinal factor needs a mapping from the quoted coherence and
//! detector scales: δk_z = 1/(2 Δℓ_coh) (the longitudinal coherence length is
//! 1/(2δk_z)) and d = Δℓ_det. Time scales are converted with the beam
//! velocity. The mapping reproduces the X-ray anchor (computed 0.37 vs
//! quoted 0.4); the published per-experiment numbers are carried alongside
//! the computed ones, since the original estimates round aggressively.

use serde::{Deserialize, Serialize};

use crate::params::Statistics;
use crate::{Error, Result};

/// Longitudinal coherence/detector scales, as lengths or as times plus the
/// beam velocity.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum CoherenceScale {
    Lengths { coh_m: f64, det_m: f64 },
    Times { coh_s: f64, det_s: f64, velocity_mps: f64 },
}

impl CoherenceScale {
    /// Resolve to (Δℓ_coh, Δℓ_det) in meters.
    pub fn lengths(&self) -> (f64, f64) {
        match *self {
            CoherenceScale::Lengths { coh_m, det_m } => (coh_m, det_m),
            CoherenceScale::Times { coh_s, det_s, velocity_mps } => {
                (coh_s * velocity_mps, det_s * velocity_mps)
            }
        }
    }
}

/// One recorded experiment (SI units).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentPreset {
    pub name: String,
    pub statistics: Statistics,
    pub a_m: f64,
    pub w_m: f64,
    pub k0_per_m: f64,
    pub z_m: f64,
    pub coherence: Option<CoherenceScale>,
    /// Published order-of-magnitude factors, where stated.
    pub quoted_lateral: Option<f64>,
    pub quoted_longitudinal: Option<f64>,
    pub quoted_depth: Option<f64>,
    pub notes: String,
}

impl ExperimentPreset {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("a", self.a_m),
            ("w", self.w_m),
            ("k0", self.k0_per_m),
            ("z", self.z_m),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidParam(format!(
                    "preset {}: {name} must be > 0, got {v}",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// Built-in preset registry (embedded copy of `presets.json`).
pub fn builtin_presets() -> Vec<ExperimentPreset> {
    serde_json::from_str(include_str!("presets.json"))
        .expect("embedded preset registry is well-formed")
}

pub fn find_preset(name: &str) -> Result<ExperimentPreset> {
    builtin_presets()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::InvalidParam(format!("unknown preset '{name}'")))
}

/// Lateral visibility factor 1 / [1 + 2 a²w²k₀²/z²] ∈ (0, 1].
pub fn lateral_factor(preset: &ExperimentPreset) -> f64 {
    let x = preset.a_m * preset.w_m * preset.k0_per_m / preset.z_m;
    1.0 / (1.0 + 2.0 * x * x)
}

/// Longitudinal visibility factor 1/√(1 + 4 δk_z² d²) under the mapping
/// δk_z = 1/(2Δℓ_coh), d = Δℓ_det, i.e. 1/√(1 + (Δℓ_det/Δℓ_coh)²).
/// None when the preset records no coherence scales.
pub fn longitudinal_factor(preset: &ExperimentPreset) -> Option<f64> {
    preset.coherence.map(|c| {
        let (coh, det) = c.lengths();
        let ratio = det / coh;
        1.0 / (1.0 + ratio * ratio).sqrt()
    })
}

/// Visibility report: computed factors, published factors, and the combined
/// dip depth from each.
#[derive(Debug, Clone, Serialize)]
pub struct DipReport {
    pub name: String,
    pub statistics: Statistics,
    pub computed_lateral: f64,
    pub computed_longitudinal: Option<f64>,
    /// 1/2 · lateral · longitudinal (longitudinal taken as 1 when unknown).
    pub computed_depth: f64,
    pub quoted_lateral: Option<f64>,
    pub quoted_longitudinal: Option<f64>,
    /// 1/2 · quoted lateral · quoted longitudinal, where both are published.
    pub depth_from_quoted: Option<f64>,
    pub quoted_depth: Option<f64>,
    pub notes: String,
}

pub fn dip_report(preset: &ExperimentPreset) -> DipReport {
    let lat = lateral_factor(preset);
    let lon = longitudinal_factor(preset);
    let depth_from_quoted = match (preset.quoted_lateral, preset.quoted_longitudinal) {
        (Some(l), Some(g)) => Some(0.5 * l * g),
        _ => None,
    };
    DipReport {
        name: preset.name.clone(),
        statistics: preset.statistics,
        computed_lateral: lat,
        computed_longitudinal: lon,
        computed_depth: 0.5 * lat * lon.unwrap_or(1.0),
        quoted_lateral: preset.quoted_lateral,
        quoted_longitudinal: preset.quoted_longitudinal,
        depth_from_quoted,
        quoted_depth: preset.quoted_depth,
        notes: preset.notes.clone(),
    }
}

/// Plain-text rendering of a report.
pub fn render_report(r: &DipReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("preset: {}\n", r.name));
    out.push_str(&format!("statistics: {:?}\n", r.statistics));
    out.push_str(&format!("lateral factor (computed): {:.6e}\n", r.computed_lateral));
    match r.computed_longitudinal {
        Some(v) => out.push_str(&format!("longitudinal factor (computed): {v:.6e}\n")),
        None => out.push_str("longitudinal factor (computed): n/a\n"),
    }
    out.push_str(&format!("dip depth (computed): {:.6e}\n", r.computed_depth));
    if let Some(v) = r.quoted_lateral {
        out.push_str(&format!("lateral factor (published): {v:.3e}\n"));
    }
    if let Some(v) = r.quoted_longitudinal {
        out.push_str(&format!("longitudinal factor (published): {v:.3e}\n"));
    }
    if let Some(v) = r.depth_from_quoted {
        out.push_str(&format!("dip depth (from published factors): {v:.3e}\n"));
    }
    if let Some(v) = r.quoted_depth {
        out.push_str(&format!("dip depth (published): {v:.3e}\n"));
    }
    out.push_str(&format!("notes: {}\n", r.notes));
    out
}
