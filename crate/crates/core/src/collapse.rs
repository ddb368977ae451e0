//! Stochastic collapse of channel probabilities.
//!
//! Each channel j carries a probability pⱼ and, per cell β of the detector,
//! a measure of intricacy f_βj. Every pair of live channels exchanges
//! probability through a zero-mean increment with variance rate
//!
//! ```text
//! w_jj′ = (K₂/τ)·φ(pⱼ)φ(pⱼ′)·Σ_β (f_βj + f_βj′)(1 − Σ_{k≠j,j′} p_k f_βk)
//! ```
//!
//! with K₂ = 8/(3π) and φ(p) = p in the default interpolation mode. The
//! resulting covariance is C_jj′ = −w_jj′δt off the diagonal with zero row
//! sums. The process is a martingale with absorbing faces, so a trial ends
//! with a single surviving channel and channel j wins with probability pⱼ(0).

use faer::{Mat, Side};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::FLUCTUATION_PREFACTOR;
use crate::error::{Error, FieldError, Result};
use crate::kinetics::IntricacyField;
use crate::rng;

/// Tolerance on Σp = 1 after every step.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    pub probabilities: Vec<f64>,
    pub mute: Vec<bool>,
    /// Channels whose probability has been absorbed at zero.
    pub absorbed: Vec<bool>,
    /// Time in units of τ.
    pub time: f64,
}

impl ChannelState {
    pub fn new(probabilities: Vec<f64>, mute: Vec<bool>) -> Result<Self> {
        let n = probabilities.len();
        if n < 2 {
            return Err(Error::config("initial", "need at least two channels"));
        }
        if mute.len() != n {
            return Err(Error::config("mute", format!("expected {n} flags, got {}", mute.len())));
        }
        if probabilities.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::config("initial", "probabilities must be finite and non-negative"));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::config("initial", format!("probabilities sum to {sum}, not 1")));
        }
        let probabilities: Vec<f64> = probabilities.iter().map(|p| p / sum).collect();
        let absorbed = probabilities.iter().map(|&p| p == 0.0).collect();
        Ok(Self {
            probabilities,
            mute,
            absorbed,
            time: 0.0,
        })
    }

    pub fn channels(&self) -> usize {
        self.probabilities.len()
    }

    pub fn live(&self) -> usize {
        self.absorbed.iter().filter(|a| !**a).count()
    }

    /// The surviving channel once all others are absorbed.
    pub fn winner(&self) -> Option<usize> {
        if self.live() == 1 {
            self.absorbed.iter().position(|a| !a)
        } else {
            None
        }
    }
}

/// Time dependence of the cell intricacies.
#[derive(Debug, Clone, PartialEq)]
pub enum Growth {
    Constant,
    /// f ← f + f(1 − f)δt/τ, integrated exactly.
    Logistic,
    /// f = min(1, f₀·e^{rate·t}).
    Cascade { rate: f64 },
    /// Piecewise-linear interpolation between snapshots `[channel][cell]`,
    /// held constant after the last one.
    Frames { times: Vec<f64>, frames: Vec<Vec<Vec<f64>>> },
    /// All cells muted: no fluctuations at all.
    Mute,
}

/// Cell intricacies f_βj(t), stored `[channel][cell]`. Identical cells
/// may be stored once with a multiplicity.
#[derive(Debug, Clone, PartialEq)]
pub struct IntricacySchedule {
    initial: Vec<Vec<f64>>,
    multiplicity: Vec<f64>,
    growth: Growth,
}

impl IntricacySchedule {
    pub fn new(initial: Vec<Vec<f64>>, growth: Growth) -> Result<Self> {
        let channels = initial.len();
        if channels < 2 {
            return Err(Error::config("schedule", "need at least two channels"));
        }
        let cells = initial[0].len();
        if cells == 0 || initial.iter().any(|row| row.len() != cells) {
            return Err(Error::config("schedule", "every channel needs the same non-zero cell count"));
        }
        let in_range = |rows: &[Vec<f64>]| rows.iter().flatten().all(|f| (0.0..=1.0).contains(f));
        if !in_range(&initial) {
            return Err(Error::config("schedule", "cell intricacies must lie in [0, 1]"));
        }
        match &growth {
            Growth::Cascade { rate } if !(rate.is_finite() && *rate >= 0.0) => {
                return Err(Error::config("schedule.rate", "must be non-negative"));
            }
            Growth::Frames { times, frames } => {
                if times.len() != frames.len() || times.is_empty() {
                    return Err(Error::config("schedule.frames", "need one time per frame"));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
                    return Err(Error::config("schedule.frames", "times must increase"));
                }
                for frame in frames {
                    if frame.len() != channels || frame.iter().any(|r| r.len() != cells) || !in_range(frame) {
                        return Err(Error::config("schedule.frames", "frame shape or values invalid"));
                    }
                }
            }
            _ => {}
        }
        let multiplicity = vec![1.0; cells];
        Ok(Self {
            initial,
            multiplicity,
            growth,
        })
    }

    /// Equal intricacy in every cell, chosen so that Σ_β f_βj = `sums[j]`.
    pub fn uniform(sums: &[f64], cells: usize, growth: Growth) -> Result<Self> {
        if cells == 0 {
            return Err(Error::config("schedule.cells", "must be at least 1"));
        }
        let rows = sums
            .iter()
            .map(|&s| {
                let f = s / cells as f64;
                if (0.0..=1.0).contains(&f) {
                    Ok(vec![f])
                } else {
                    Err(Error::config(
                        "schedule",
                        format!("Σf = {s} cannot be spread over {cells} cells with f ≤ 1"),
                    ))
                }
            })
            .collect::<Result<_>>()?;
        let mut schedule = Self::new(rows, growth)?;
        schedule.multiplicity = vec![cells as f64];
        Ok(schedule)
    }

    /// Channel `active` follows the recorded 1D field, every other channel
    /// is mute. Cells are the grid points.
    pub fn from_field_history(history: &[IntricacyField], channels: usize, active: usize) -> Result<Self> {
        if history.is_empty() || active >= channels {
            return Err(Error::config("schedule", "need a history and a valid active channel"));
        }
        let frame = |field: &IntricacyField| -> Vec<Vec<f64>> {
            (0..channels)
                .map(|j| {
                    if j == active {
                        field.values().to_vec()
                    } else {
                        vec![0.0; field.values().len()]
                    }
                })
                .collect()
        };
        let frames: Vec<_> = history.iter().map(frame).collect();
        let times = history.iter().map(|f| f.time() - history[0].time()).collect();
        Self::new(frames[0].clone(), Growth::Frames { times, frames })
    }

    pub fn channels(&self) -> usize {
        self.initial.len()
    }

    /// Number of cells β, multiplicities included.
    pub fn cells(&self) -> usize {
        self.multiplicity.iter().sum::<f64>() as usize
    }

    pub fn growth(&self) -> &Growth {
        &self.growth
    }

    /// Channels with f ≡ 0 in every cell at all times.
    pub fn mute_flags(&self) -> Vec<bool> {
        let zero = |row: &[f64]| row.iter().all(|&f| f == 0.0);
        (0..self.channels())
            .map(|j| match &self.growth {
                Growth::Mute => true,
                Growth::Frames { frames, .. } => frames.iter().all(|fr| zero(&fr[j])),
                _ => zero(&self.initial[j]),
            })
            .collect()
    }

    /// f_βj at time t (τ units) into `out`.
    pub fn values_at(&self, t: f64, out: &mut Vec<Vec<f64>>) {
        out.clone_from(&self.initial);
        match &self.growth {
            Growth::Constant => {}
            Growth::Mute => out.iter_mut().flatten().for_each(|f| *f = 0.0),
            Growth::Logistic => {
                let e = t.exp();
                for f in out.iter_mut().flatten() {
                    if *f > 0.0 && *f < 1.0 {
                        *f = *f * e / (1.0 - *f + *f * e);
                    }
                }
            }
            Growth::Cascade { rate } => {
                let e = (rate * t).exp();
                out.iter_mut().flatten().for_each(|f| *f = (*f * e).min(1.0));
            }
            Growth::Frames { times, frames } => {
                let k = times.partition_point(|&s| s <= t);
                if k == 0 {
                    out.clone_from(&frames[0]);
                } else if k == times.len() {
                    out.clone_from(&frames[k - 1]);
                } else {
                    let s = (t - times[k - 1]) / (times[k] - times[k - 1]);
                    for (j, row) in out.iter_mut().enumerate() {
                        for (b, f) in row.iter_mut().enumerate() {
                            *f = frames[k - 1][j][b] * (1.0 - s) + frames[k][j][b] * s;
                        }
                    }
                }
            }
        }
    }

    /// Σ_β f_βj at time t.
    pub fn sums_at(&self, t: f64) -> Vec<f64> {
        let mut f = Vec::new();
        self.values_at(t, &mut f);
        f.iter()
            .map(|row| row.iter().zip(&self.multiplicity).map(|(f, m)| f * m).sum())
            .collect()
    }
}

/// How channel traces depend on the probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TraceProfile {
    /// Traces proportional to pⱼ.
    #[default]
    Interpolation,
    /// Traces proportional to pⱼ^exponent, 0 < exponent ≤ 1.
    Custom { exponent: f64 },
}

impl TraceProfile {
    fn weight(&self, p: f64) -> f64 {
        match *self {
            TraceProfile::Interpolation => p,
            TraceProfile::Custom { exponent } => p.powf(exponent),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum IncrementLaw {
    #[default]
    Gaussian,
    /// Difference of two Poisson counts with mean `mean` each, rescaled to
    /// the pair variance.
    CompoundPoisson { mean: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FluctuationModel {
    pub prefactor: f64,
    /// Mean free time; schedule and state times are in these units.
    pub tau: f64,
    pub profile: TraceProfile,
    pub increments: IncrementLaw,
}

impl Default for FluctuationModel {
    fn default() -> Self {
        Self {
            prefactor: FLUCTUATION_PREFACTOR,
            tau: 1.0,
            profile: TraceProfile::Interpolation,
            increments: IncrementLaw::Gaussian,
        }
    }
}

impl FluctuationModel {
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if !(self.prefactor.is_finite() && self.prefactor > 0.0) {
            errors.push(FieldError::new("model.prefactor", "must be positive"));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            errors.push(FieldError::new("model.tau", "must be positive"));
        }
        if let TraceProfile::Custom { exponent } = self.profile {
            if !(exponent > 0.0 && exponent <= 1.0) {
                errors.push(FieldError::new("model.profile.exponent", "must lie in (0, 1]"));
            }
        }
        if let IncrementLaw::CompoundPoisson { mean } = self.increments {
            if !(mean.is_finite() && mean > 0.0) {
                errors.push(FieldError::new("model.increments.mean", "must be positive"));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }
}

/// Scratch buffers reused across steps of one trial.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    cells: Vec<Vec<f64>>,
    cells_time: Option<f64>,
    load: Vec<f64>,
    rates: Vec<(usize, usize, f64)>,
    channel_rate: Vec<f64>,
    delta: Vec<f64>,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }

    fn refresh(&mut self, schedule: &IntricacySchedule, t: f64) {
        let fresh = match schedule.growth {
            Growth::Constant | Growth::Mute => self.cells_time.is_some(),
            _ => self.cells_time == Some(t),
        };
        if !fresh {
            schedule.values_at(t, &mut self.cells);
            self.cells_time = Some(t);
        }
    }
}

/// Variance rates w_jj′ per unit time for j < j′, into `work.rates`.
fn pair_rates(p: &[f64], multiplicity: &[f64], model: &FluctuationModel, work: &mut Workspace) {
    let f = &work.cells;
    let n = p.len();
    let cells = f[0].len();
    work.load.clear();
    work.load.extend((0..cells).map(|b| (0..n).map(|k| p[k] * f[k][b]).sum::<f64>()));
    let scale = model.prefactor / model.tau;
    work.rates.clear();
    for j in 0..n {
        for j2 in (j + 1)..n {
            let phi = model.profile.weight(p[j]) * model.profile.weight(p[j2]);
            if phi == 0.0 {
                continue;
            }
            let (fj, fj2) = (&f[j], &f[j2]);
            let mut s = 0.0;
            for b in 0..cells {
                let pair = fj[b] + fj2[b];
                if pair > 0.0 {
                    let others = work.load[b] - p[j] * fj[b] - p[j2] * fj2[b];
                    s += multiplicity[b] * pair * (1.0 - others).max(0.0);
                }
            }
            let w = scale * phi * s;
            if w > 0.0 {
                work.rates.push((j, j2, w));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Covariance {
    /// `matrix[j][j′]`, rows summing to zero.
    pub matrix: Vec<Vec<f64>>,
    /// Frobenius distance moved by the positive-semidefinite repair.
    pub repair_distance: f64,
}

/// Covariance of the probability increments over one step `dt`.
pub fn covariance_matrix(
    state: &ChannelState,
    schedule: &IntricacySchedule,
    model: &FluctuationModel,
    dt: f64,
) -> Result<Covariance> {
    model.validate()?;
    let mut work = Workspace::new();
    work.refresh(schedule, state.time);
    pair_rates(&state.probabilities, &schedule.multiplicity, model, &mut work);
    let n = state.channels();
    let mut c = vec![vec![0.0; n]; n];
    for &(j, j2, w) in &work.rates {
        c[j][j2] = -w * dt;
        c[j2][j] = -w * dt;
    }
    for j in 0..n {
        c[j][j] = -(0..n).filter(|&k| k != j).map(|k| c[j][k]).sum::<f64>();
    }
    if c.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite covariance".into()));
    }
    let (matrix, repair_distance) = project_psd(&c)?;
    Ok(Covariance {
        matrix,
        repair_distance,
    })
}

/// Nearest positive-semidefinite matrix on the zero-sum subspace, by
/// clipping negative eigenvalues.
fn project_psd(c: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, f64)> {
    let n = c.len();
    let m = Mat::<f64>::from_fn(n, n, |i, j| c[i][j]);
    let eig = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let values = eig.S().column_vector();
    let scale = (0..n).map(|i| values[i].abs()).fold(0.0, f64::max);
    if (0..n).all(|i| values[i] >= -1e-14 * scale) {
        return Ok((c.to_vec(), 0.0));
    }
    let u = eig.U();
    let mut out = vec![vec![0.0; n]; n];
    for k in 0..n {
        let lambda = values[k].max(0.0);
        for i in 0..n {
            for j in 0..n {
                out[i][j] += u[(i, k)] * lambda * u[(j, k)];
            }
        }
    }
    // the all-ones vector stays in the kernel; restore exact zero row sums
    for (i, row) in out.iter_mut().enumerate() {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| row[j]).sum();
        row[i] = -off;
    }
    let dist = c
        .iter()
        .flatten()
        .zip(out.iter().flatten())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok((out, dist))
}

fn sample_pair<R: Rng + ?Sized>(variance: f64, law: IncrementLaw, rng: &mut R) -> f64 {
    match law {
        IncrementLaw::Gaussian => {
            let xi: f64 = rng.sample(StandardNormal);
            variance.sqrt() * xi
        }
        IncrementLaw::CompoundPoisson { mean } => {
            let pois = Poisson::new(mean).expect("validated mean");
            let (a, b): (f64, f64) = (pois.sample(rng), pois.sample(rng));
            (variance / (2.0 * mean)).sqrt() * (a - b)
        }
    }
}

/// One raw increment δp at fixed `dt` and the state's time, before
/// clamping: each pair j < j′
/// exchanges an independent zero-mean amount of variance w_jj′·dt, which
/// reproduces the covariance of [`covariance_matrix`] exactly.
pub fn fluctuation_increment<R: Rng + ?Sized>(
    state: &ChannelState,
    schedule: &IntricacySchedule,
    model: &FluctuationModel,
    dt: f64,
    rng: &mut R,
) -> Vec<f64> {
    let mut work = Workspace::new();
    work.refresh(schedule, state.time);
    pair_rates(&state.probabilities, &schedule.multiplicity, model, &mut work);
    let mut delta = vec![0.0; state.channels()];
    for &(j, j2, w) in &work.rates {
        let d = sample_pair(w * dt, model.increments, rng);
        delta[j] += d;
        delta[j2] -= d;
    }
    delta
}

/// Step-size and termination policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepPolicy {
    /// Largest step, τ units.
    pub max_dt: f64,
    /// Each live channel's increment standard deviation is kept below
    /// `shrink · min(pⱼ, 1 − pⱼ)`.
    pub shrink: f64,
    /// Probabilities below this are absorbed at zero.
    pub absorption: f64,
    pub max_steps: u64,
    /// Keep every k-th state of the trajectory (0 disables).
    pub record_every: u64,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self {
            max_dt: 0.01,
            shrink: 0.1,
            absorption: 1e-9,
            max_steps: 10_000_000,
            record_every: 0,
        }
    }
}

impl StepPolicy {
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if !(self.max_dt.is_finite() && self.max_dt > 0.0) {
            errors.push(FieldError::new("policy.max_dt", "must be positive"));
        }
        if !(self.shrink > 0.0 && self.shrink <= 1.0) {
            errors.push(FieldError::new("policy.shrink", "must lie in (0, 1]"));
        }
        if !(self.absorption > 0.0 && self.absorption < 0.5) {
            errors.push(FieldError::new("policy.absorption", "must lie in (0, 0.5)"));
        }
        if self.max_steps == 0 {
            errors.push(FieldError::new("policy.max_steps", "must be at least 1"));
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepReport {
    pub dt: f64,
    /// Probability mass removed by clamping negatives and by absorption.
    pub clamped: f64,
}

/// Advances `state` by one adaptive step.
pub fn fluctuation_step<R: Rng + ?Sized>(
    state: &mut ChannelState,
    schedule: &IntricacySchedule,
    model: &FluctuationModel,
    policy: &StepPolicy,
    work: &mut Workspace,
    rng: &mut R,
) -> Result<StepReport> {
    if state.winner().is_some() {
        return Ok(StepReport::default());
    }
    work.refresh(schedule, state.time);
    let p = &state.probabilities;
    pair_rates(p, &schedule.multiplicity, model, work);
    work.channel_rate.clear();
    work.channel_rate.resize(p.len(), 0.0);
    for &(j, j2, w) in &work.rates {
        work.channel_rate[j] += w;
        work.channel_rate[j2] += w;
    }
    let mut dt = policy.max_dt;
    for (j, &r) in work.channel_rate.iter().enumerate() {
        if r > 0.0 {
            let sd = policy.shrink * p[j].min(1.0 - p[j]);
            dt = dt.min(sd * sd / r);
        }
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Numerical(format!("step size {dt} at p = {p:?}")));
    }
    work.delta.clear();
    work.delta.resize(p.len(), 0.0);
    let delta = &mut work.delta;
    for &(j, j2, w) in &work.rates {
        let d = sample_pair(w * dt, model.increments, rng);
        delta[j] += d;
        delta[j2] -= d;
    }
    if delta.iter().any(|d| !d.is_finite()) {
        return Err(Error::Numerical("non-finite increment".into()));
    }
    let mut clamped = 0.0;
    for (j, pj) in state.probabilities.iter_mut().enumerate() {
        if state.absorbed[j] {
            continue;
        }
        *pj += delta[j];
        if *pj < policy.absorption {
            clamped += pj.abs();
            *pj = 0.0;
            state.absorbed[j] = true;
        }
    }
    let sum: f64 = state.probabilities.iter().sum();
    if !(sum > 0.0) {
        return Err(Error::Numerical("all probability absorbed".into()));
    }
    state.probabilities.iter_mut().for_each(|q| *q /= sum);
    let total: f64 = state.probabilities.iter().sum();
    if (total - 1.0).abs() > SIMPLEX_TOLERANCE {
        return Err(Error::Numerical(format!("simplex violated: Σp = {total}")));
    }
    state.time += dt;
    Ok(StepReport { dt, clamped })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseOutcome {
    /// Surviving channel, or `None` if the step cap was reached first.
    pub winner: Option<usize>,
    /// τ units.
    pub collapse_time: f64,
    pub steps: u64,
    pub clamp_bias: f64,
    /// Absorbed channels found non-zero after a step; zero by construction.
    pub revivals: u64,
    pub final_probabilities: Vec<f64>,
    /// `(t, p)` every `record_every` steps.
    pub trajectory: Vec<(f64, Vec<f64>)>,
}

pub fn run_trial<R: Rng + ?Sized>(
    initial: &[f64],
    schedule: &IntricacySchedule,
    model: &FluctuationModel,
    policy: &StepPolicy,
    rng: &mut R,
) -> Result<CollapseOutcome> {
    model.validate()?;
    policy.validate()?;
    if initial.len() != schedule.channels() {
        return Err(Error::config("initial", "channel count differs from the schedule"));
    }
    let mut state = ChannelState::new(initial.to_vec(), schedule.mute_flags())?;
    for j in 0..state.channels() {
        if state.probabilities[j] < policy.absorption && !state.absorbed[j] {
            state.probabilities[j] = 0.0;
            state.absorbed[j] = true;
        }
    }
    let sum: f64 = state.probabilities.iter().sum();
    state.probabilities.iter_mut().for_each(|q| *q /= sum);
    let mut work = Workspace::new();
    let (mut steps, mut clamp_bias, mut revivals) = (0u64, 0.0, 0u64);
    let mut trajectory = Vec::new();
    if policy.record_every > 0 {
        trajectory.push((0.0, state.probabilities.clone()));
    }
    while state.winner().is_none() && steps < policy.max_steps {
        let report = fluctuation_step(&mut state, schedule, model, policy, &mut work, rng)?;
        steps += 1;
        clamp_bias += report.clamped;
        revivals += state
            .absorbed
            .iter()
            .zip(&state.probabilities)
            .filter(|(a, p)| **a && **p != 0.0)
            .count() as u64;
        if policy.record_every > 0 && steps % policy.record_every == 0 {
            trajectory.push((state.time, state.probabilities.clone()));
        }
    }
    let winner = state.winner();
    if let Some(w) = winner {
        state.probabilities.iter_mut().for_each(|p| *p = 0.0);
        state.probabilities[w] = 1.0;
    }
    Ok(CollapseOutcome {
        winner,
        collapse_time: state.time,
        steps,
        clamp_bias,
        revivals,
        final_probabilities: state.probabilities,
        trajectory,
    })
}

/// Per-trial row for export.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub winner: Option<usize>,
    pub collapse_time: f64,
    pub collapse_time_steps: u64,
    pub clamp_bias: f64,
    pub revivals: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BornReport {
    pub trials: u64,
    pub initial: Vec<f64>,
    pub wins: Vec<u64>,
    pub frequencies: Vec<f64>,
    /// Binomial standard error √(pⱼ(1 − pⱼ)/n) at the initial probabilities.
    pub standard_errors: Vec<f64>,
    /// Trials that hit the step cap.
    pub no_collapse: u64,
    /// Trials aborted by a numerical failure.
    pub failures: u64,
    pub failure_messages: Vec<String>,
    pub revivals: u64,
    pub max_clamp_bias: f64,
    pub median_collapse_time: f64,
    pub records: Vec<TrialRecord>,
}

impl BornReport {
    /// Largest |frequency − pⱼ| in units of the standard error.
    pub fn max_sigma(&self) -> f64 {
        self.frequencies
            .iter()
            .zip(&self.initial)
            .zip(&self.standard_errors)
            .map(|((f, p), se)| if *se > 0.0 { (f - p).abs() / se } else if f == p { 0.0 } else { f64::INFINITY })
            .fold(0.0, f64::max)
    }
}

/// Runs `n_trials` independent trials; trial i draws from stream i of the
/// collapse domain, so the report does not depend on scheduling.
pub fn born_rule_experiment(
    n_trials: u64,
    initial: &[f64],
    schedule: &IntricacySchedule,
    model: &FluctuationModel,
    policy: &StepPolicy,
    seed: u64,
) -> Result<BornReport> {
    model.validate()?;
    policy.validate()?;
    if n_trials == 0 {
        return Err(Error::config("trials", "must be at least 1"));
    }
    ChannelState::new(initial.to_vec(), schedule.mute_flags())?;
    let outcomes: Vec<std::result::Result<CollapseOutcome, String>> = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let mut rng: ChaCha8Rng = rng::stream(seed, rng::DOMAIN_COLLAPSE, i);
            run_trial(initial, schedule, model, policy, &mut rng).map_err(|e| e.to_string())
        })
        .collect();
    let channels = initial.len();
    let mut wins = vec![0u64; channels];
    let (mut no_collapse, mut failures, mut revivals) = (0, 0, 0);
    let mut failure_messages = Vec::new();
    let mut max_clamp_bias: f64 = 0.0;
    let mut times = Vec::new();
    let mut records = Vec::with_capacity(outcomes.len());
    for (i, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(o) => {
                match o.winner {
                    Some(w) => {
                        wins[w] += 1;
                        times.push(o.collapse_time);
                    }
                    None => no_collapse += 1,
                }
                revivals += o.revivals;
                max_clamp_bias = max_clamp_bias.max(o.clamp_bias);
                records.push(TrialRecord {
                    trial: i as u64,
                    winner: o.winner,
                    collapse_time: o.collapse_time,
                    collapse_time_steps: o.steps,
                    clamp_bias: o.clamp_bias,
                    revivals: o.revivals,
                });
            }
            Err(msg) => {
                failures += 1;
                if failure_messages.len() < 10 {
                    failure_messages.push(format!("trial {i}: {msg}"));
                }
            }
        }
    }
    let n = n_trials as f64;
    times.sort_by(f64::total_cmp);
    let median_collapse_time = if times.is_empty() { f64::NAN } else { times[times.len() / 2] };
    Ok(BornReport {
        trials: n_trials,
        initial: initial.to_vec(),
        frequencies: wins.iter().map(|&w| w as f64 / n).collect(),
        standard_errors: initial.iter().map(|p| (p * (1.0 - p) / n).sqrt()).collect(),
        wins,
        no_collapse,
        failures,
        failure_messages,
        revivals,
        max_clamp_bias,
        median_collapse_time,
        records,
    })
}
