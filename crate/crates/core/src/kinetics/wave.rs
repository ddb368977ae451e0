//! Traveling-wave profile of an entanglement front.
//!
//! In reduced units the profile g(z), z = x − v′t ≤ 0, of a front moving at
//! v′ = 3^{-1/2} solves
//!
//! ```text
//! (1/6) g″ + 3^{-1/2} g′ + g(1 − g) = 0,   g(0) = 0,   g(−∞) = 1.
//! ```
//!
//! The profile is the separatrix leaving the saddle at g = 1. Shooting from
//! z = 0 toward −∞ runs against the saddle's unstable direction, so the
//! shooting slope g′(0) is located by bisection but the profile itself is
//! traced from the saddle toward z = 0, where errors decay. The two routes
//! must agree on g′(0).

use serde::Serialize;

use crate::error::{Error, Result};

/// Shortest profile domain, in mean free paths.
pub const MIN_PROFILE_LENGTH: f64 = 20.0;

const INTEGRATION_STEP: f64 = 1e-3;
const MAX_SAMPLE_SPACING: f64 = 1e-2;
const SHOOTING_BRACKET: (f64, f64) = (-5.0, 0.0);
const BISECTION_WIDTH: f64 = 1e-12;
/// Distance u = 1 − g from the saddle at which the tail is seeded.
const TAIL_SEED: f64 = 1e-10;

fn inv_sqrt3() -> f64 {
    1.0 / 3f64.sqrt()
}

/// Decay rate 3 − √3 of 1 − g as z → −∞.
pub fn tail_rate() -> f64 {
    3.0 - 3f64.sqrt()
}

/// g″ from the profile equation.
fn second_derivative(g: f64, dg: f64) -> f64 {
    -6.0 * (inv_sqrt3() * dg + g * (1.0 - g))
}

/// One RK4 step of the first-order system (g, g′) in z; `h` may be negative.
fn rk4(g: f64, dg: f64, h: f64) -> (f64, f64) {
    let f = |g: f64, dg: f64| (dg, second_derivative(g, dg));
    let (k1g, k1d) = f(g, dg);
    let (k2g, k2d) = f(g + 0.5 * h * k1g, dg + 0.5 * h * k1d);
    let (k3g, k3d) = f(g + 0.5 * h * k2g, dg + 0.5 * h * k2d);
    let (k4g, k4d) = f(g + h * k3g, dg + h * k3d);
    (
        g + h / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g),
        dg + h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shot {
    /// g exceeded 1: the slope is too steep.
    Overshoot,
    /// g turned back below 1: the slope is too shallow.
    Undershoot,
    /// Neither happened within the domain.
    Undecided,
}

/// Integrates from z = 0 toward −∞ with g(0) = 0, g′(0) = `slope`.
fn shoot(slope: f64, length: f64) -> Shot {
    let (mut g, mut dg) = (0.0, slope);
    let steps = (length / INTEGRATION_STEP).ceil() as usize;
    for _ in 0..steps {
        (g, dg) = rk4(g, dg, -INTEGRATION_STEP);
        if g > 1.0 {
            return Shot::Overshoot;
        }
        // Moving toward −z, g must keep increasing: g′ < 0.
        if dg >= 0.0 {
            return Shot::Undershoot;
        }
    }
    Shot::Undecided
}

/// Bisection on g′(0) over the fixed bracket [−5, 0].
fn shooting_slope(length: f64) -> Result<f64> {
    let (mut steep, mut shallow) = SHOOTING_BRACKET;
    let horizon = length + MIN_PROFILE_LENGTH;
    if shoot(steep, horizon) != Shot::Overshoot || shoot(shallow, horizon) == Shot::Overshoot {
        return Err(Error::Numerical(format!(
            "shooting bracket failure: g′(0) ∈ [{}, {}] does not straddle the profile",
            SHOOTING_BRACKET.0, SHOOTING_BRACKET.1
        )));
    }
    while shallow - steep > BISECTION_WIDTH {
        let mid = 0.5 * (steep + shallow);
        match shoot(mid, horizon) {
            Shot::Overshoot => steep = mid,
            Shot::Undershoot => shallow = mid,
            Shot::Undecided => return Ok(mid),
        }
    }
    Ok(0.5 * (steep + shallow))
}

/// Uniform nodes of the separatrix traced from the saddle toward g = 0.
struct Separatrix {
    start: f64,
    g: Vec<f64>,
    dg: Vec<f64>,
}

impl Separatrix {
    fn trace() -> Result<Self> {
        let mut g = vec![1.0 - TAIL_SEED];
        let mut dg = vec![-tail_rate() * TAIL_SEED];
        let max_steps = (200.0 / INTEGRATION_STEP) as usize;
        while *g.last().unwrap() >= 0.0 {
            if g.len() > max_steps {
                return Err(Error::Numerical("separatrix never reached g = 0".into()));
            }
            let (ng, nd) = rk4(*g.last().unwrap(), *dg.last().unwrap(), INTEGRATION_STEP);
            if !ng.is_finite() || !nd.is_finite() {
                return Err(Error::Numerical("non-finite separatrix".into()));
            }
            g.push(ng);
            dg.push(nd);
        }
        Ok(Self { start: 0.0, g, dg })
    }

    fn node(&self, k: usize) -> f64 {
        self.start + k as f64 * INTEGRATION_STEP
    }

    /// Quintic Hermite interpolation of (g, g′) at `z` inside the node range.
    fn eval(&self, z: f64) -> (f64, f64) {
        let last = self.g.len() - 2;
        let k = (((z - self.start) / INTEGRATION_STEP).floor() as usize).min(last);
        let h = INTEGRATION_STEP;
        let t = (z - self.node(k)) / h;
        let (y0, d0, y1, d1) = (self.g[k], self.dg[k], self.g[k + 1], self.dg[k + 1]);
        let (s0, s1) = (second_derivative(y0, d0), second_derivative(y1, d1));
        let (t2, t3) = (t * t, t * t * t);
        let (t4, t5) = (t3 * t, t3 * t2);
        let value = y0 * (1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5)
            + h * d0 * (t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5)
            + h * h * s0 * 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5)
            + y1 * (10.0 * t3 - 15.0 * t4 + 6.0 * t5)
            + h * d1 * (-4.0 * t3 + 7.0 * t4 - 3.0 * t5)
            + h * h * s1 * 0.5 * (t3 - 2.0 * t4 + t5);
        let slope = (y0 * (-30.0 * t2 + 60.0 * t3 - 30.0 * t4)
            + h * d0 * (1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4)
            + h * h * s0 * 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4)
            + y1 * (30.0 * t2 - 60.0 * t3 + 30.0 * t4)
            + h * d1 * (-12.0 * t2 + 28.0 * t3 - 15.0 * t4)
            + h * h * s1 * 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4))
            / h;
        (value, slope)
    }

    /// Position where g crosses zero.
    fn zero_crossing(&self) -> f64 {
        let k = self.g.len() - 2;
        let (mut lo, mut hi) = (self.node(k), self.node(k + 1));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid).0 >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    fn value(&self, z: f64) -> f64 {
        if z < self.start {
            1.0 - TAIL_SEED * (tail_rate() * (z - self.start)).exp()
        } else {
            self.eval(z).0
        }
    }
}

/// Sampled traveling-wave profile on [−Z, 0].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveProfile {
    /// Sample positions, ascending from −Z to 0, in mean free paths.
    pub z: Vec<f64>,
    pub g: Vec<f64>,
    /// g′(0) found by bisection shooting.
    pub shooting_slope: f64,
    /// g′(0) of the traced separatrix.
    pub slope: f64,
    /// Largest pointwise residual of the profile equation, evaluated with
    /// sixth-order central differences on the samples.
    pub residual: f64,
}

impl WaveProfile {
    pub fn spacing(&self) -> f64 {
        self.z[1] - self.z[0]
    }

    pub fn length(&self) -> f64 {
        -self.z[0]
    }

    /// g at any z: zero ahead of the front, linear interpolation on the
    /// samples, exponential approach to 1 beyond the domain.
    pub fn value_at(&self, z: f64) -> f64 {
        if z >= 0.0 {
            return 0.0;
        }
        let z0 = self.z[0];
        if z <= z0 {
            let u = 1.0 - self.g[0];
            return 1.0 - u * (tail_rate() * (z - z0)).exp();
        }
        let x = (z - z0) / self.spacing();
        let k = (x.floor() as usize).min(self.z.len() - 2);
        let t = x - k as f64;
        (self.g[k] * (1.0 - t) + self.g[k + 1] * t).clamp(0.0, 1.0)
    }

    /// Distance between the points where g crosses `high` and `low`.
    pub fn rise_width(&self, low: f64, high: f64) -> f64 {
        (self.crossing(low) - self.crossing(high)).abs()
    }

    fn crossing(&self, level: f64) -> f64 {
        // g is non-increasing in z.
        let k = self
            .g
            .windows(2)
            .position(|w| w[0] >= level && w[1] < level)
            .unwrap_or(0);
        let (g0, g1) = (self.g[k], self.g[k + 1]);
        let t = if g0 == g1 { 0.0 } else { (g0 - level) / (g0 - g1) };
        self.z[k] + t * self.spacing()
    }

    pub fn is_monotone(&self) -> bool {
        self.g.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Solves the traveling-wave equation on [−`length`, 0].
///
/// Fails if `length` is shorter than [`MIN_PROFILE_LENGTH`], if the
/// shooting bracket does not contain the profile, or if the sampled profile
/// misses `tolerance` on the equation residual.
pub fn solve_traveling_wave(length: f64, tolerance: f64) -> Result<WaveProfile> {
    if !(length.is_finite() && length >= MIN_PROFILE_LENGTH) {
        return Err(Error::config(
            "domain_length",
            format!("must be at least {MIN_PROFILE_LENGTH} mean free paths, got {length}"),
        ));
    }
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(Error::config("tolerance", "must be positive"));
    }
    let shooting_slope = shooting_slope(length)?;
    let separatrix = Separatrix::trace()?;
    let origin = separatrix.zero_crossing();
    let slope = separatrix.eval(origin).1;

    let n = (length / MAX_SAMPLE_SPACING).ceil() as usize;
    let spacing = length / n as f64;
    let z: Vec<f64> = (0..=n).map(|i| -((n - i) as f64) * spacing).collect();
    let mut g: Vec<f64> = z.iter().map(|&zi| separatrix.value(origin + zi)).collect();
    g[n] = 0.0;

    let residual = residual(&g, spacing);
    let profile = WaveProfile {
        z,
        g,
        shooting_slope,
        slope,
        residual,
    };
    if residual > tolerance {
        return Err(Error::Numerical(format!(
            "profile residual {residual:e} exceeds tolerance {tolerance:e}"
        )));
    }
    if !profile.is_monotone() {
        return Err(Error::Numerical("profile is not monotone".into()));
    }
    Ok(profile)
}

/// Max |(1/6)g″ + 3^{-1/2}g′ + g(1 − g)| over interior samples.
pub(crate) fn residual(g: &[f64], h: f64) -> f64 {
    g.windows(7)
        .map(|w| {
            let d1 = (-w[0] + 9.0 * w[1] - 45.0 * w[2] + 45.0 * w[4] - 9.0 * w[5] + w[6]) / (60.0 * h);
            let d2 = (2.0 * w[0] - 27.0 * w[1] + 270.0 * w[2] - 490.0 * w[3] + 270.0 * w[4]
                - 27.0 * w[5]
                + 2.0 * w[6])
                / (180.0 * h * h);
            (d2 / 6.0 + inv_sqrt3() * d1 + w[3] * (1.0 - w[3])).abs()
        })
        .fold(0.0, f64::max)
}
