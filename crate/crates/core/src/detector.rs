//! Detector constants and order-of-magnitude kinetic estimates (CGS units).

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, FieldError, Result};
use crate::kinetics;

/// Boltzmann constant in erg/K.
pub const BOLTZMANN: f64 = 1.380_649e-16;

/// Variance prefactor of the per-cell trace fluctuations: twice the
/// predecoherence trace 4/(3π).
pub const FLUCTUATION_PREFACTOR: f64 = 8.0 / (3.0 * std::f64::consts::PI);

/// Gas and detector constants. All lengths in cm, times in s, masses in g.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorParams {
    /// Gas temperature, K.
    pub temperature: f64,
    /// Mass of one gas atom.
    pub atom_mass: f64,
    /// Mean free path λ.
    pub mean_free_path: f64,
    /// Mean free time τ.
    pub mean_free_time: f64,
    /// Number density n of gas atoms, cm⁻³.
    pub number_density: f64,
    /// Box size L.
    pub box_size: f64,
    /// Length of the particle track inside the box.
    pub track_length: f64,
    /// Mean distance l between excited atoms along the track.
    pub excitation_spacing: f64,
    /// Size Λ of the cells over which local intricacy is averaged.
    pub cell_size: f64,
    /// Number density of the surrounding air, cm⁻³.
    pub ambient_density: f64,
    /// Mass of one air molecule.
    pub ambient_molecule_mass: f64,
}

impl Default for DetectorParams {
    /// Argon detector at standard conditions, 10 cm box, 10 MeV alpha track.
    fn default() -> Self {
        Self {
            temperature: 273.15,
            atom_mass: 6.63e-23,
            mean_free_path: 1e-5,
            mean_free_time: 1e-10,
            number_density: 1e19,
            box_size: 10.0,
            track_length: 10.0,
            excitation_spacing: 1e-5,
            cell_size: 1e-4,
            ambient_density: 2.687e19,
            ambient_molecule_mass: 4.81e-23,
        }
    }
}

impl DetectorParams {
    /// Checks every invariant and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        let positive = [
            ("temperature", self.temperature),
            ("atom_mass", self.atom_mass),
            ("mean_free_path", self.mean_free_path),
            ("mean_free_time", self.mean_free_time),
            ("number_density", self.number_density),
            ("box_size", self.box_size),
            ("excitation_spacing", self.excitation_spacing),
            ("cell_size", self.cell_size),
            ("ambient_density", self.ambient_density),
            ("ambient_molecule_mass", self.ambient_molecule_mass),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                errors.push(FieldError::new(
                    format!("detector.{name}"),
                    format!("must be positive and finite, got {value}"),
                ));
            }
        }
        if !(self.track_length.is_finite() && self.track_length >= 0.0) {
            errors.push(FieldError::new(
                "detector.track_length",
                format!("must be non-negative and finite, got {}", self.track_length),
            ));
        } else if self.track_length > 3f64.sqrt() * self.box_size {
            errors.push(FieldError::new(
                "detector.track_length",
                "track does not fit inside the box",
            ));
        }
        if self.cell_size < self.mean_free_path {
            errors.push(FieldError::new(
                "detector.cell_size",
                format!(
                    "cell size Λ = {} must be at least the mean free path λ = {}",
                    self.cell_size, self.mean_free_path
                ),
            ));
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }

    /// Thermal velocity (3k_BT/2m)^{1/2}, cm/s.
    pub fn thermal_velocity(&self) -> f64 {
        thermal_velocity(self.temperature, self.atom_mass)
    }

    /// One-dimensional coordinate velocity v′ = v/√3 at which the kinetic
    /// argument moves the entanglement front, cm/s.
    pub fn front_velocity(&self) -> f64 {
        self.thermal_velocity() / 3f64.sqrt()
    }

    /// Random-walk diffusion coefficient λ²/(6τ), cm²/s.
    pub fn diffusion_coefficient(&self) -> f64 {
        diffusion_coefficient(self.mean_free_path, self.mean_free_time)
    }

    /// Number of gas atoms in one intricacy cell, nΛ³.
    pub fn atoms_per_cell(&self) -> f64 {
        self.number_density * self.cell_size.powi(3)
    }
}

/// (3k_BT/2m)^{1/2} in cm/s. Zero temperature gives zero velocity.
pub fn thermal_velocity(temperature: f64, mass: f64) -> f64 {
    (3.0 * BOLTZMANN * temperature / (2.0 * mass)).sqrt()
}

/// λ²/(6τ).
pub fn diffusion_coefficient(mean_free_path: f64, mean_free_time: f64) -> f64 {
    mean_free_path * mean_free_path / (6.0 * mean_free_time)
}

/// Maxwell mean speed (8k_BT/πm)^{1/2} of the air molecules, cm/s.
fn mean_speed(temperature: f64, mass: f64) -> f64 {
    (8.0 * BOLTZMANN * temperature / (std::f64::consts::PI * mass)).sqrt()
}

/// 0.01→0.99 rise width of the traveling-wave profile, in mean free paths.
pub fn profile_rise_width() -> f64 {
    static WIDTH: OnceLock<f64> = OnceLock::new();
    *WIDTH.get_or_init(|| {
        kinetics::solve_traveling_wave(kinetics::MIN_PROFILE_LENGTH, 1e-8)
            .map(|p| p.rise_width(0.01, 0.99))
            .expect("reference traveling-wave profile must solve")
    })
}

/// Order-of-magnitude figures for an entanglement wave in the detector.
///
/// Every entry is an order-of-magnitude estimate; callers should compare
/// against reference figures within a factor of ten, not tighter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    /// cm/s
    pub thermal_velocity: f64,
    /// cm/s
    pub front_velocity: f64,
    /// cm²/s
    pub diffusion_coefficient: f64,
    /// Time for one front to cross the box, s.
    pub fill_time: f64,
    /// Air molecules hitting the box per second.
    pub collision_rate: f64,
    /// Entanglement waves present in the box at any time.
    pub concurrent_waves: f64,
    /// Width of the active part of one front, cm.
    pub front_width: f64,
    /// Active front regions crossing any given point.
    pub active_front_regions: f64,
    /// Fluctuation coefficient A, s⁻¹ (without the p₁p₂ factor).
    pub fluctuation_rate: f64,
    pub units: String,
}

/// The chain of detector estimates, from thermal velocity to the
/// fluctuation coefficient.
pub fn detector_estimates(params: &DetectorParams) -> Result<EstimateReport> {
    params.validate()?;
    let thermal_velocity = params.thermal_velocity();
    let front_velocity = params.front_velocity();
    let fill_time = params.box_size / front_velocity;
    // Kinetic wall flux n·v̄/4 on an outer area of order L².
    let wall_flux = params.ambient_density
        * mean_speed(params.temperature, params.ambient_molecule_mass)
        / 4.0;
    let collision_rate = wall_flux * params.box_size * params.box_size;
    let concurrent_waves = collision_rate * fill_time;
    let front_width = profile_rise_width() * params.mean_free_path;
    let active_front_regions = concurrent_waves * front_width / params.box_size;
    let fluctuation_rate = fluctuation_rate_a(params, 0.5, 0.5)?.coefficient;
    Ok(EstimateReport {
        thermal_velocity,
        front_velocity,
        diffusion_coefficient: params.diffusion_coefficient(),
        fill_time,
        collision_rate,
        concurrent_waves,
        front_width,
        active_front_regions,
        fluctuation_rate,
        units: "CGS (cm, s, g); order-of-magnitude estimates".into(),
    })
}

/// The fluctuation coefficient A with the quantities that feed it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationRate {
    /// A = (8/3π)(1/τ)Σ_β f_β, s⁻¹.
    pub coefficient: f64,
    /// p₁p₂, reported separately; ⟨(δp₁)²⟩ = A·p₁p₂·δt.
    pub probability_factor: f64,
    /// Number of cells along the track, track_length/Λ.
    pub cells_on_track: f64,
    /// Initial intricacy of one track cell, 1/(n·l·Λ²).
    pub cell_intricacy: f64,
    /// The alternative scaling 10¹¹(l/Λ)² s⁻¹, reported alongside the
    /// explicit chain (the two agree in order of magnitude near Λ = 10λ).
    pub quadratic_scaling_estimate: f64,
}

/// Fluctuation coefficient from the explicit cell chain for a track in
/// channel 1 with probabilities (p₁, p₂).
pub fn fluctuation_rate_a(params: &DetectorParams, p1: f64, p2: f64) -> Result<FluctuationRate> {
    params.validate()?;
    let mut errors = Vec::new();
    for (name, p) in [("p1", p1), ("p2", p2)] {
        if !(0.0..=1.0).contains(&p) {
            errors.push(FieldError::new(name, format!("probability out of [0, 1]: {p}")));
        }
    }
    if errors.is_empty() && (p1 + p2 - 1.0).abs() > 1e-12 {
        errors.push(FieldError::new("p1 + p2", format!("must equal 1, got {}", p1 + p2)));
    }
    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }
    let cells_on_track = params.track_length / params.cell_size;
    let cell_intricacy = 1.0
        / (params.number_density * params.excitation_spacing * params.cell_size.powi(2));
    let sum_f = cells_on_track * cell_intricacy;
    let ratio = params.excitation_spacing / params.cell_size;
    Ok(FluctuationRate {
        coefficient: fluctuation_rate_from_cells(sum_f, params.mean_free_time),
        probability_factor: p1 * p2,
        cells_on_track,
        cell_intricacy,
        quadratic_scaling_estimate: 1e11 * ratio * ratio,
    })
}

/// (8/3π)·Σ_β f_β / τ.
pub fn fluctuation_rate_from_cells(sum_f: f64, mean_free_time: f64) -> f64 {
    FLUCTUATION_PREFACTOR * sum_f / mean_free_time
}
