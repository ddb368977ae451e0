//! Contagion–diffusion kinetics of the local measure of intricacy.
//!
//! The field f₁(x, t) ∈ [0, 1] obeys
//!
//! ```text
//! ∂f₁/∂t = f₁(1 − f₁)/τ + D Δf₁
//! ```
//!
//! in reduced units (λ = τ = 1, D = 1/6). The solver is explicit and operator
//! split: one diffusion step, one logistic contagion step, then the optional
//! track source. Walls are no-flux.

mod front;
mod io;
mod wave;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use front::{front_position, measure_front_speed, FrontSpeed};
pub use io::{parse_field_csv, write_field_csv, write_profile_csv};
pub use wave::{solve_traveling_wave, WaveProfile, MIN_PROFILE_LENGTH};

/// Diffusion coefficient in reduced units, λ²/(6τ) with λ = τ = 1.
pub const REDUCED_DIFFUSION: f64 = 1.0 / 6.0;

/// Largest contagion step, in units of τ.
pub const MAX_CONTAGION_STEP: f64 = 0.25;

/// Front velocity v′ = 3^{-1/2} of the kinetic random-walk argument, λ/τ.
pub fn kinetic_front_speed() -> f64 {
    1.0 / 3f64.sqrt()
}

/// Minimal (pulled-front) speed 2√(D/τ) of the free equation, τ = 1.
pub fn pulled_front_speed(diffusion: f64) -> f64 {
    2.0 * diffusion.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    One,
    Three,
}

impl Dimension {
    pub fn rank(self) -> usize {
        match self {
            Dimension::One => 1,
            Dimension::Three => 3,
        }
    }
}

/// Direct generation of intricacy along the particle track.
#[derive(Debug, Clone, PartialEq)]
pub struct Source {
    /// Generation rate per grid point, per τ.
    pub rates: Vec<f64>,
    /// The source is switched off once the field time reaches this value.
    pub active_until: f64,
}

/// Local measure of intricacy f₁ on a regular grid. The complementary
/// f₀ = 1 − f₁ is never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct IntricacyField {
    dimension: Dimension,
    spacing: f64,
    extent: [usize; 3],
    values: Vec<f64>,
    time: f64,
    source: Option<Source>,
}

impl IntricacyField {
    pub fn zeros_1d(points: usize, spacing: f64) -> Result<Self> {
        Self::from_values(Dimension::One, [points, 1, 1], spacing, vec![0.0; points])
    }

    pub fn zeros_3d(extent: [usize; 3], spacing: f64) -> Result<Self> {
        let n = extent.iter().product();
        Self::from_values(Dimension::Three, extent, spacing, vec![0.0; n])
    }

    /// Builds a field from raw values, checking the grid shape and bounds.
    pub fn from_values(
        dimension: Dimension,
        extent: [usize; 3],
        spacing: f64,
        values: Vec<f64>,
    ) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::config("field.spacing", format!("must be positive, got {spacing}")));
        }
        if extent.contains(&0) {
            return Err(Error::config("field.extent", "every axis needs at least one point"));
        }
        if dimension == Dimension::One && (extent[1] != 1 || extent[2] != 1) {
            return Err(Error::config("field.extent", "a 1D field has extent [n, 1, 1]"));
        }
        let expected: usize = extent.iter().product();
        if values.len() != expected {
            return Err(Error::config(
                "field.values",
                format!("expected {expected} values, got {}", values.len()),
            ));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::config(
                "field.values",
                format!("value {v} at index {i} outside [0, 1]"),
            ));
        }
        Ok(Self {
            dimension,
            spacing,
            extent,
            values,
            time: 0.0,
            source: None,
        })
    }

    /// 1D field carrying a traveling-wave profile whose front (g = 0) sits
    /// at `front_position`; f₁ = 0 ahead of it and 1 beyond the profile tail.
    pub fn from_profile_1d(
        profile: &WaveProfile,
        points: usize,
        spacing: f64,
        front_position: f64,
    ) -> Result<Self> {
        let values = (0..points)
            .map(|i| profile.value_at(i as f64 * spacing - front_position))
            .collect();
        Self::from_values(Dimension::One, [points, 1, 1], spacing, values)
    }

    pub fn with_source(mut self, source: Source) -> Result<Self> {
        if source.rates.len() != self.values.len() {
            return Err(Error::config(
                "field.source",
                format!(
                    "expected {} rates, got {}",
                    self.values.len(),
                    source.rates.len()
                ),
            ));
        }
        if source.rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::config("field.source", "rates must be non-negative"));
        }
        self.source = Some(source);
        Ok(self)
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn extent(&self) -> [usize; 3] {
        self.extent
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn source(&self) -> Option<&Source> {
        self.source.as_ref()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.extent[0] * (j + self.extent[1] * k)
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::config("field.values", format!("value {value} outside [0, 1]")));
        }
        let idx = self.index(i, j, k);
        self.values[idx] = value;
        Ok(())
    }

    /// Σ f₁ · h^dim.
    pub fn total(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spacing.powi(self.dimension.rank() as i32)
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Largest diffusion step allowed by the explicit scheme, h²/(2·dim·D).
    pub fn diffusion_step_bound(&self, diffusion: f64) -> f64 {
        self.spacing * self.spacing / (2.0 * self.dimension.rank() as f64 * diffusion)
    }

    /// Logistic update f₁ ← f₁ + f₁(1 − f₁)·δt (τ = 1).
    pub fn contagion_step(&mut self, dt: f64) -> Result<()> {
        check_step(dt)?;
        if dt > MAX_CONTAGION_STEP {
            return Err(Error::Stability {
                condition: "contagion step δt ≤ τ/4",
                dt,
                bound: MAX_CONTAGION_STEP,
            });
        }
        for f in &mut self.values {
            *f += *f * (1.0 - *f) * dt;
        }
        self.check_bounds("contagion")
    }

    /// Explicit central-difference diffusion step with no-flux walls.
    pub fn diffusion_step(&mut self, dt: f64, diffusion: f64) -> Result<()> {
        check_step(dt)?;
        if !(diffusion.is_finite() && diffusion >= 0.0) {
            return Err(Error::config("diffusion", format!("must be non-negative, got {diffusion}")));
        }
        if diffusion == 0.0 {
            return Ok(());
        }
        let bound = self.diffusion_step_bound(diffusion);
        if dt > bound {
            return Err(Error::Stability {
                condition: "CFL δt ≤ h²/(2·dim·D)",
                dt,
                bound,
            });
        }
        let coef = diffusion * dt / (self.spacing * self.spacing);
        let [nx, ny, nz] = self.extent;
        let three_d = self.dimension == Dimension::Three;
        let old = &self.values;
        let mut next = vec![0.0; old.len()];
        // Pure gather stencil: each plane reads only `old`, so the parallel
        // result is identical to the sequential one.
        next.par_chunks_mut(nx * ny)
            .enumerate()
            .for_each(|(k, plane)| {
                for j in 0..ny {
                    for i in 0..nx {
                        let at = |ii: usize, jj: usize, kk: usize| old[ii + nx * (jj + ny * kk)];
                        let c = at(i, j, k);
                        let mut lap = at(i.saturating_sub(1), j, k) + at((i + 1).min(nx - 1), j, k)
                            - 2.0 * c;
                        if three_d {
                            lap += at(i, j.saturating_sub(1), k) + at(i, (j + 1).min(ny - 1), k)
                                - 2.0 * c;
                            lap += at(i, j, k.saturating_sub(1)) + at(i, j, (k + 1).min(nz - 1))
                                - 2.0 * c;
                        }
                        plane[i + nx * j] = c + coef * lap;
                    }
                }
            });
        self.values = next;
        self.check_bounds("diffusion")
    }

    fn source_step(&mut self, dt: f64) {
        if let Some(source) = &self.source {
            if self.time < source.active_until {
                for (f, r) in self.values.iter_mut().zip(&source.rates) {
                    *f = (*f + r * dt).min(1.0);
                }
            }
        }
    }

    /// Operator-split evolution up to `params.t_end`.
    pub fn evolve(&mut self, params: &EvolveParams) -> Result<()> {
        self.evolve_observed(params, |_| {})
    }

    /// Like [`evolve`](Self::evolve), also returning snapshots taken every
    /// `snapshot_every` time units (the initial and final states included).
    pub fn evolve_with_history(
        &mut self,
        params: &EvolveParams,
        snapshot_every: f64,
    ) -> Result<Vec<IntricacyField>> {
        if !(snapshot_every > 0.0) {
            return Err(Error::config("snapshot_every", "must be positive"));
        }
        let mut history = vec![self.snapshot()];
        let mut next = self.time + snapshot_every;
        self.evolve_observed(params, |field| {
            if field.time >= next - 1e-9 {
                history.push(field.snapshot());
                next += snapshot_every;
            }
        })?;
        if history.last().map(|s| s.time) != Some(self.time) {
            history.push(self.snapshot());
        }
        Ok(history)
    }

    fn evolve_observed(&mut self, params: &EvolveParams, mut observe: impl FnMut(&Self)) -> Result<()> {
        params.validate()?;
        if params.diffusion > 0.0 {
            let bound = self.diffusion_step_bound(params.diffusion);
            if params.dt > bound {
                return Err(Error::Stability {
                    condition: "CFL δt ≤ h²/(2·dim·D)",
                    dt: params.dt,
                    bound,
                });
            }
        }
        if let FrontMode::Imposed { .. } = params.front {
            if self.dimension != Dimension::One {
                return Err(Error::config("front", "imposed fronts are one-dimensional"));
            }
        }
        let mut steps = 0u64;
        while self.time < params.t_end - 1e-12 {
            let dt = params.dt.min(params.t_end - self.time);
            self.diffusion_step(dt, params.diffusion)?;
            self.contagion_step(dt)?;
            self.source_step(dt);
            steps += 1;
            self.time = (self.time + dt).min(params.t_end);
            if let FrontMode::Imposed { speed, start } = params.front {
                let front = start + speed * self.time;
                let h = self.spacing;
                for (i, f) in self.values.iter_mut().enumerate() {
                    if i as f64 * h > front {
                        *f = 0.0;
                    }
                }
            }
            if steps.is_multiple_of(64) && self.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!(
                    "non-finite intricacy at t = {}",
                    self.time
                )));
            }
            observe(self);
        }
        Ok(())
    }

    fn snapshot(&self) -> Self {
        Self {
            source: None,
            ..self.clone()
        }
    }

    fn check_bounds(&mut self, stage: &str) -> Result<()> {
        for f in &mut self.values {
            if !f.is_finite() || *f < -1e-12 || *f > 1.0 + 1e-12 {
                return Err(Error::Numerical(format!(
                    "{stage} step produced f₁ = {f} at t = {}",
                    self.time
                )));
            }
            *f = f.clamp(0.0, 1.0);
        }
        Ok(())
    }
}

fn check_step(dt: f64) -> Result<()> {
    if dt.is_finite() && dt > 0.0 {
        Ok(())
    } else {
        Err(Error::config("dt", format!("must be positive and finite, got {dt}")))
    }
}

/// How the leading edge of the field is treated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum FrontMode {
    /// The equation as written; fronts select their own speed.
    Free,
    /// Free-boundary mode: f₁ is held at zero ahead of a front at
    /// `start + speed·t`.
    Imposed { speed: f64, start: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveParams {
    pub t_end: f64,
    pub dt: f64,
    pub diffusion: f64,
    pub front: FrontMode,
}

impl EvolveParams {
    pub fn free(t_end: f64, dt: f64) -> Self {
        Self {
            t_end,
            dt,
            diffusion: REDUCED_DIFFUSION,
            front: FrontMode::Free,
        }
    }

    fn validate(&self) -> Result<()> {
        check_step(self.dt)?;
        if self.dt > MAX_CONTAGION_STEP {
            return Err(Error::Stability {
                condition: "contagion step δt ≤ τ/4",
                dt: self.dt,
                bound: MAX_CONTAGION_STEP,
            });
        }
        if !self.t_end.is_finite() {
            return Err(Error::config("t_end", "must be finite"));
        }
        if !(self.diffusion.is_finite() && self.diffusion >= 0.0) {
            return Err(Error::config("diffusion", "must be non-negative"));
        }
        if let FrontMode::Imposed { speed, start } = self.front {
            if !(speed.is_finite() && speed >= 0.0 && start.is_finite()) {
                return Err(Error::config("front", "imposed front needs finite speed ≥ 0 and start"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_points_of_contagion() {
        let mut zero = IntricacyField::zeros_1d(16, 0.5).unwrap();
        zero.contagion_step(0.1).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
        let mut full = IntricacyField::from_values(Dimension::One, [8, 1, 1], 0.5, vec![1.0; 8]).unwrap();
        full.contagion_step(0.25).unwrap();
        assert!(full.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn logistic_matches_closed_form() {
        // f(t) = f₀eᵗ/(1 − f₀ + f₀eᵗ), f₀ = 0.1, t = 1 → 0.231969
        let f0: f64 = 0.1;
        let exact = f0 * 1f64.exp() / (1.0 - f0 + f0 * 1f64.exp());
        assert!((exact - 0.2320).abs() < 1e-4);
        let mut field = IntricacyField::from_values(Dimension::One, [4, 1, 1], 1.0, vec![f0; 4]).unwrap();
        let dt = 1e-4;
        for _ in 0..10_000 {
            field.contagion_step(dt).unwrap();
        }
        assert!((field.values()[0] - exact).abs() < 1e-4);
    }

    #[test]
    fn rejects_unstable_steps() {
        let mut field = IntricacyField::zeros_1d(16, 0.5).unwrap();
        assert!(matches!(field.contagion_step(0.3), Err(Error::Stability { .. })));
        // h²/(2D) = 0.25/(1/3) = 0.75
        assert!(matches!(
            field.diffusion_step(0.8, REDUCED_DIFFUSION),
            Err(Error::Stability { .. })
        ));
        assert!(field.diffusion_step(0.7, REDUCED_DIFFUSION).is_ok());
        let mut cube = IntricacyField::zeros_3d([4, 4, 4], 0.5).unwrap();
        // 3D bound is a third of the 1D one.
        assert!(cube.diffusion_step(0.3, REDUCED_DIFFUSION).is_err());
        assert!(field.contagion_step(-1.0).is_err());
    }

    #[test]
    fn uniform_field_does_not_diffuse() {
        let mut field = IntricacyField::from_values(Dimension::One, [32, 1, 1], 0.5, vec![0.37; 32]).unwrap();
        field.diffusion_step(0.5, REDUCED_DIFFUSION).unwrap();
        assert!(field.values().iter().all(|&v| v == 0.37));
    }

    #[test]
    fn no_flux_diffusion_conserves_total() {
        let values: Vec<f64> = (0..200).map(|i| if (90..110).contains(&i) { 0.9 } else { 0.05 }).collect();
        let mut field = IntricacyField::from_values(Dimension::One, [200, 1, 1], 0.25, values).unwrap();
        let before = field.total();
        for _ in 0..500 {
            field.diffusion_step(0.15, REDUCED_DIFFUSION).unwrap();
        }
        assert!((field.total() - before).abs() <= 1e-12 * before);

        let mut cube = IntricacyField::zeros_3d([6, 5, 4], 0.5).unwrap();
        cube.set(2, 2, 1, 1.0).unwrap();
        cube.set(0, 4, 3, 0.5).unwrap();
        let before = cube.total();
        for _ in 0..200 {
            cube.diffusion_step(0.2, REDUCED_DIFFUSION).unwrap();
        }
        assert!((cube.total() - before).abs() <= 1e-12 * before);
    }

    #[test]
    fn zero_field_stays_zero() {
        let mut field = IntricacyField::zeros_1d(64, 0.5).unwrap();
        field.evolve(&EvolveParams::free(20.0, 0.1)).unwrap();
        assert!(field.values().iter().all(|&v| v == 0.0));
        assert!((field.time() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn source_generation_is_clamped() {
        let mut rates = vec![0.0; 10];
        rates[3] = 5.0;
        let mut field = IntricacyField::zeros_1d(10, 1.0)
            .unwrap()
            .with_source(Source { rates, active_until: 1.0 })
            .unwrap();
        field.evolve(&EvolveParams::free(0.5, 0.1)).unwrap();
        assert_eq!(field.get(3, 0, 0), 1.0);
        field.evolve(&EvolveParams::free(2.0, 0.1)).unwrap();
        let (lo, hi) = field.min_max();
        assert!(lo >= 0.0 && hi < 1.0);
        assert_eq!(field.get(3, 0, 0), hi);
        assert!(field.get(4, 0, 0) > 0.0);
    }

    #[test]
    fn imposed_front_needs_one_dimension() {
        let mut cube = IntricacyField::zeros_3d([4, 4, 4], 1.0).unwrap();
        let params = EvolveParams {
            front: FrontMode::Imposed { speed: 0.5, start: 1.0 },
            ..EvolveParams::free(1.0, 0.1)
        };
        assert!(cube.evolve(&params).is_err());
    }

    #[test]
    fn rejects_out_of_range_values() {
        assert!(IntricacyField::from_values(Dimension::One, [2, 1, 1], 1.0, vec![0.5, 1.5]).is_err());
        assert!(IntricacyField::from_values(Dimension::One, [2, 1, 1], 1.0, vec![0.5]).is_err());
        assert!(IntricacyField::from_values(Dimension::One, [2, 2, 1], 1.0, vec![0.5; 4]).is_err());
    }
}
