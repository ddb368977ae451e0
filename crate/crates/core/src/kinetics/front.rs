use serde::Serialize;

use super::{Dimension, IntricacyField};
use crate::error::{Error, Result};

/// Outcome of a front-speed measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum FrontSpeed {
    /// Least-squares slope of the level-crossing position, λ/τ.
    Speed { speed: f64, samples: usize },
    /// The field never crosses the level (uniform, saturated or empty).
    NoFront,
}

impl FrontSpeed {
    pub fn speed(&self) -> Option<f64> {
        match *self {
            FrontSpeed::Speed { speed, .. } => Some(speed),
            FrontSpeed::NoFront => None,
        }
    }
}

/// Position of the rightmost downward crossing of `level`, interpolated
/// linearly between grid points.
pub fn front_position(field: &IntricacyField, level: f64) -> Option<f64> {
    let v = field.values();
    let k = v.windows(2).rposition(|w| w[0] >= level && w[1] < level)?;
    let t = (v[k] - level) / (v[k] - v[k + 1]);
    Some((k as f64 + t) * field.spacing())
}

/// Front speed from a 1D evolution history, fitted over its last half.
pub fn measure_front_speed(history: &[IntricacyField], level: f64) -> Result<FrontSpeed> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::config("level", format!("must lie in (0, 1), got {level}")));
    }
    if history.iter().any(|f| f.dimension() != Dimension::One) {
        return Err(Error::config("history", "front speed is measured on 1D fields"));
    }
    let tail = &history[history.len() / 2..];
    let points: Vec<(f64, f64)> = tail
        .iter()
        .filter_map(|f| front_position(f, level).map(|x| (f.time(), x)))
        .collect();
    if points.len() < 2 {
        return Ok(FrontSpeed::NoFront);
    }
    let n = points.len() as f64;
    let mean_t = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_x = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, x) in &points {
        sxy += (t - mean_t) * (x - mean_x);
        sxx += (t - mean_t) * (t - mean_t);
    }
    if sxx == 0.0 {
        return Ok(FrontSpeed::NoFront);
    }
    Ok(FrontSpeed::Speed {
        speed: sxy / sxx,
        samples: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saturated_field_has_no_front() {
        let full = IntricacyField::from_values(Dimension::One, [10, 1, 1], 1.0, vec![1.0; 10]).unwrap();
        let history: Vec<_> = (0..4).map(|i| full.clone().with_time(i as f64)).collect();
        assert_eq!(measure_front_speed(&history, 0.5).unwrap(), FrontSpeed::NoFront);
    }

    #[test]
    fn synthetic_front_speed_is_recovered() {
        let history: Vec<_> = (0..20)
            .map(|step| {
                let t = step as f64;
                let values = (0..200)
                    .map(|i| 1.0 / (1.0 + ((i as f64 * 0.5 - 10.0 - 0.7 * t) * 2.0).exp()))
                    .collect();
                IntricacyField::from_values(Dimension::One, [200, 1, 1], 0.5, values)
                    .unwrap()
                    .with_time(t)
            })
            .collect();
        let speed = measure_front_speed(&history, 0.5).unwrap().speed().unwrap();
        assert!((speed - 0.7).abs() < 1e-3, "{speed}");
    }

    #[test]
    fn level_must_be_interior() {
        assert!(measure_front_speed(&[], 1.0).is_err());
    }
}
