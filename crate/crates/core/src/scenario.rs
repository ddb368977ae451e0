//! Scenario configuration, execution and output.
//!
//! A scenario is a TOML document naming one `kind` plus the parameter block
//! for that kind:
//!
//! ```toml
//! kind = "collapse"
//! seed = 7
//!
//! [collapse]
//! trials = 10000
//! initial = [0.3, 0.7]
//! intricacy = [10.0, 0.0]
//! ```
//!
//! Unknown keys, and blocks belonging to another kind, are rejected. Every
//! output is a pure function of the configuration and the seed; the
//! manifest written next to the outputs carries their SHA-256 digests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::collapse::{self, FluctuationModel, Growth, IntricacySchedule, StepPolicy};
use crate::detector::{self, DetectorParams};
use crate::error::{Error, FieldError, Result};
use crate::kinetics::{
    self, Dimension, EvolveParams, FrontMode, IntricacyField, Source, REDUCED_DIFFUSION,
};
use crate::predecoherence::{self, Construction, DisorderSpec, NoiseFamily};
use crate::rng;
use crate::sectors::{self, Kernel, ModelSpec, Packet, Region};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "INTRICACY_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "intricacy-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Estimate,
    Wavefront,
    Field,
    Sectors,
    Predecoherence,
    Collapse,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        ScenarioKind::Estimate,
        ScenarioKind::Wavefront,
        ScenarioKind::Field,
        ScenarioKind::Sectors,
        ScenarioKind::Predecoherence,
        ScenarioKind::Collapse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Estimate => "estimate",
            ScenarioKind::Wavefront => "wavefront",
            ScenarioKind::Field => "field",
            ScenarioKind::Sectors => "sectors",
            ScenarioKind::Predecoherence => "predecoherence",
            ScenarioKind::Collapse => "collapse",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateScenario {
    /// Probability of the channel carrying the track.
    pub p1: f64,
}

impl Default for EstimateScenario {
    fn default() -> Self {
        Self { p1: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WavefrontScenario {
    /// Profile domain length, λ.
    pub length: f64,
    pub tolerance: f64,
}

impl Default for WavefrontScenario {
    fn default() -> Self {
        Self {
            length: kinetics::MIN_PROFILE_LENGTH,
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialField {
    /// f₁ = 1 within `seed_radius` of the left wall (1D) or of the track
    /// axis (3D), 0 elsewhere.
    Seed,
    /// Traveling-wave profile with its front at `profile_front` (1D only).
    Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldScenario {
    pub dimension: Dimension,
    /// Grid points of a 1D run.
    pub points: usize,
    /// Grid extent of a 3D run; the track runs along the first axis.
    pub extent: [usize; 3],
    /// Grid spacing, λ.
    pub spacing: f64,
    /// Time step, τ.
    pub dt: f64,
    pub t_end: f64,
    pub diffusion: f64,
    pub initial: InitialField,
    pub seed_radius: f64,
    pub profile_front: f64,
    pub front: FrontMode,
    /// Direct generation rate on the track, per τ (0 disables).
    pub track_rate: f64,
    pub track_until: f64,
    pub snapshot_every: f64,
    /// Level whose crossing defines the front position.
    pub level: f64,
}

impl Default for FieldScenario {
    fn default() -> Self {
        Self {
            dimension: Dimension::One,
            points: 1200,
            extent: [64, 17, 17],
            spacing: 0.25,
            dt: 0.05,
            t_end: 200.0,
            diffusion: REDUCED_DIFFUSION,
            initial: InitialField::Seed,
            seed_radius: 1.0,
            profile_front: 10.0,
            front: FrontMode::Free,
            track_rate: 0.0,
            track_until: 0.0,
            snapshot_every: 1.0,
            level: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SectorsScenario {
    pub dt: f64,
    pub steps: usize,
    pub record_every: usize,
    /// Window for the intricacy estimate; the whole grid when absent.
    pub region: Option<Region>,
    pub model: ModelSpec,
}

impl Default for SectorsScenario {
    fn default() -> Self {
        Self {
            dt: 0.01,
            steps: 1000,
            record_every: 50,
            region: None,
            model: ModelSpec {
                atoms: 1,
                grid_points: 48,
                spacing: 0.5,
                particle_mass: 1.0,
                atom_mass: 10.0,
                particle_atom: Kernel {
                    strength: 4.0,
                    range: 0.7,
                },
                atom_atom: Kernel::ZERO,
                particle: Packet {
                    center: 7.0,
                    width: 1.5,
                    momentum: 1.5,
                },
                atom_packets: vec![Packet {
                    center: 14.0,
                    width: 0.8,
                    momentum: 0.0,
                }],
                bose_symmetric: false,
                max_amplitudes: sectors::DEFAULT_MAX_AMPLITUDES,
                norm_tolerance: 1e-4,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredecoherenceScenario {
    pub size: usize,
    pub samples: usize,
    pub family: NoiseFamily,
    pub construction: Construction,
    pub haar_rotation: bool,
    pub strength: f64,
}

impl Default for PredecoherenceScenario {
    fn default() -> Self {
        Self {
            size: 1024,
            samples: 50,
            family: NoiseFamily::GammaMatched,
            construction: Construction::Superposed,
            haar_rotation: false,
            strength: 1.0,
        }
    }
}

/// Time dependence of the collapse-channel intricacies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScheduleSpec {
    Constant,
    Logistic,
    Cascade {
        rate: f64,
    },
    /// Channel `channel` follows a free 1D kinetics run seeded at the left
    /// wall; every other channel is mute.
    Field {
        channel: usize,
        points: usize,
        spacing: f64,
        dt: f64,
        t_end: f64,
        snapshot_every: f64,
    },
    Mute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CollapseScenario {
    pub trials: u64,
    pub initial: Vec<f64>,
    /// Σ_β f_βj per channel at t = 0 (ignored by the field schedule).
    pub intricacy: Vec<f64>,
    pub cells: usize,
    pub schedule: ScheduleSpec,
    pub model: FluctuationModel,
    pub policy: StepPolicy,
}

impl Default for CollapseScenario {
    fn default() -> Self {
        Self {
            trials: 10_000,
            initial: vec![0.5, 0.5],
            intricacy: vec![10.0, 0.0],
            cells: 100,
            schedule: ScheduleSpec::Constant,
            model: FluctuationModel::default(),
            policy: StepPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ScenarioParams {
    Estimate(EstimateScenario),
    Wavefront(WavefrontScenario),
    Field(FieldScenario),
    Sectors(SectorsScenario),
    Predecoherence(PredecoherenceScenario),
    Collapse(CollapseScenario),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub formats: Vec<OutputFormat>,
    pub detector: DetectorParams,
    pub params: ScenarioParams,
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv, OutputFormat::Json]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: ScenarioKind,
    #[serde(default)]
    seed: u64,
    output_dir: Option<PathBuf>,
    #[serde(default = "default_formats")]
    formats: Vec<OutputFormat>,
    #[serde(default)]
    detector: DetectorParams,
    estimate: Option<EstimateScenario>,
    wavefront: Option<WavefrontScenario>,
    field: Option<FieldScenario>,
    sectors: Option<SectorsScenario>,
    predecoherence: Option<PredecoherenceScenario>,
    collapse: Option<CollapseScenario>,
}

/// Names the offending key of a TOML error: the enclosing `[table]` plus
/// the key on the error's line.
fn locate(text: &str, span: Option<std::ops::Range<usize>>) -> String {
    let Some(span) = span else {
        return "<document>".into();
    };
    let start = span.start.min(text.len());
    let line_start = text[..start].rfind('\n').map_or(0, |i| i + 1);
    let line_end = text[start..].find('\n').map_or(text.len(), |i| start + i);
    let line = &text[line_start..line_end];
    let table = text[..line_start]
        .lines()
        .rev()
        .find_map(|l| {
            let l = l.trim();
            l.strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .map(|t| t.trim_matches(|c| c == '[' || c == ']').trim().to_string())
        });
    let key = match line.split_once('=') {
        Some((k, _)) => k.trim().to_string(),
        None => text[span.start.min(text.len())..span.end.min(text.len())]
            .trim()
            .trim_matches(|c| c == '[' || c == ']')
            .to_string(),
    };
    match (table, key.is_empty()) {
        (Some(t), false) => format!("{t}.{key}"),
        (Some(t), true) => t,
        (None, false) => key,
        (None, true) => "<document>".into(),
    }
}

/// Parses and validates a scenario document.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        let reason = match line {
            Some(l) => format!("{} (line {l})", e.message().trim()),
            None => e.message().trim().to_string(),
        };
        Error::Config(vec![FieldError::new(locate(text, e.span()), reason)])
    })?;
    let mut errors = Vec::new();
    let blocks = [
        (ScenarioKind::Estimate, raw.estimate.is_some()),
        (ScenarioKind::Wavefront, raw.wavefront.is_some()),
        (ScenarioKind::Field, raw.field.is_some()),
        (ScenarioKind::Sectors, raw.sectors.is_some()),
        (ScenarioKind::Predecoherence, raw.predecoherence.is_some()),
        (ScenarioKind::Collapse, raw.collapse.is_some()),
    ];
    for (kind, present) in blocks {
        if present && kind != raw.kind {
            errors.push(FieldError::new(
                kind.name(),
                format!("block does not apply to a `{}` scenario", raw.kind.name()),
            ));
        }
    }
    if raw.formats.is_empty() {
        errors.push(FieldError::new("formats", "select at least one of csv, json"));
    }
    if let Err(Error::Config(e)) = raw.detector.validate().map_err(|e| e.under("detector")) {
        errors.extend(e);
    }
    let params = match raw.kind {
        ScenarioKind::Estimate => ScenarioParams::Estimate(raw.estimate.unwrap_or_default()),
        ScenarioKind::Wavefront => ScenarioParams::Wavefront(raw.wavefront.unwrap_or_default()),
        ScenarioKind::Field => ScenarioParams::Field(raw.field.unwrap_or_default()),
        ScenarioKind::Sectors => ScenarioParams::Sectors(raw.sectors.unwrap_or_default()),
        ScenarioKind::Predecoherence => {
            ScenarioParams::Predecoherence(raw.predecoherence.unwrap_or_default())
        }
        ScenarioKind::Collapse => ScenarioParams::Collapse(raw.collapse.unwrap_or_default()),
    };
    if let Err(e) = validate_params(&params, raw.seed) {
        match e.under(raw.kind.name()) {
            Error::Config(e) => errors.extend(e),
            other => return Err(other),
        }
    }
    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }
    Ok(ScenarioConfig {
        kind: raw.kind,
        seed: raw.seed,
        output_dir: raw.output_dir,
        formats: raw.formats,
        detector: raw.detector,
        params,
    })
}

fn check(errors: &mut Vec<FieldError>, ok: bool, path: &str, reason: &str) {
    if !ok {
        errors.push(FieldError::new(path, reason));
    }
}

fn collect(errors: &mut Vec<FieldError>, result: Result<()>, prefix: Option<&str>) -> Result<()> {
    match result {
        Ok(()) => Ok(()),
        Err(e) => {
            let e = match prefix {
                Some(p) => e.under(p),
                None => e,
            };
            match e {
                Error::Config(list) => {
                    errors.extend(list);
                    Ok(())
                }
                other => Err(other),
            }
        }
    }
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

fn validate_params(params: &ScenarioParams, seed: u64) -> Result<()> {
    let mut errors = Vec::new();
    match params {
        ScenarioParams::Estimate(p) => {
            check(&mut errors, (0.0..=1.0).contains(&p.p1), "p1", "must lie in [0, 1]");
        }
        ScenarioParams::Wavefront(p) => {
            check(
                &mut errors,
                p.length.is_finite() && p.length >= kinetics::MIN_PROFILE_LENGTH,
                "length",
                "must be at least 20 mean free paths",
            );
            check(&mut errors, positive(p.tolerance), "tolerance", "must be positive");
        }
        ScenarioParams::Field(p) => {
            check(&mut errors, positive(p.spacing), "spacing", "must be positive");
            check(&mut errors, positive(p.dt), "dt", "must be positive");
            check(&mut errors, p.t_end.is_finite() && p.t_end >= 0.0, "t_end", "must be non-negative");
            check(&mut errors, p.diffusion.is_finite() && p.diffusion >= 0.0, "diffusion", "must be non-negative");
            check(&mut errors, p.seed_radius.is_finite() && p.seed_radius >= 0.0, "seed_radius", "must be non-negative");
            check(&mut errors, positive(p.snapshot_every), "snapshot_every", "must be positive");
            check(&mut errors, p.level > 0.0 && p.level < 1.0, "level", "must lie in (0, 1)");
            check(&mut errors, p.track_rate.is_finite() && p.track_rate >= 0.0, "track_rate", "must be non-negative");
            check(&mut errors, p.track_until.is_finite(), "track_until", "must be finite");
            match p.dimension {
                Dimension::One => check(&mut errors, p.points >= 3, "points", "need at least 3 points"),
                Dimension::Three => {
                    check(&mut errors, p.extent.iter().all(|&n| n >= 3), "extent", "every axis needs at least 3 points");
                    check(
                        &mut errors,
                        p.extent.iter().product::<usize>() <= 1 << 24,
                        "extent",
                        "grid too large",
                    );
                    check(&mut errors, p.initial == InitialField::Seed, "initial", "3D runs start from a seed");
                    check(&mut errors, p.front == FrontMode::Free, "front", "imposed fronts are one-dimensional");
                }
            }
            if p.dt > 0.0 && p.spacing > 0.0 && p.diffusion > 0.0 {
                let dim = if p.dimension == Dimension::One { 1.0 } else { 3.0 };
                let bound = (p.spacing * p.spacing / (2.0 * dim * p.diffusion)).min(kinetics::MAX_CONTAGION_STEP);
                check(&mut errors, p.dt <= bound, "dt", &format!("exceeds the stability bound {bound}"));
            }
        }
        ScenarioParams::Sectors(p) => {
            check(&mut errors, positive(p.dt), "dt", "must be positive");
            check(&mut errors, p.record_every > 0, "record_every", "must be at least 1");
            collect(&mut errors, p.model.validate(), Some("model"))?;
            if let Some(r) = p.region {
                let m = p.model.grid_points;
                let ok = |(a, b): (usize, usize)| a < b && b <= m;
                check(&mut errors, ok(r.particle) && ok(r.atom), "region", "windows must be non-empty and inside the grid");
            }
            if errors.is_empty() {
                let gen = sectors::build_generator(&p.model)?;
                check(
                    &mut errors,
                    p.dt <= gen.max_step(),
                    "dt",
                    &format!("exceeds the RK4 stability bound {}", gen.max_step()),
                );
            }
        }
        ScenarioParams::Predecoherence(p) => {
            check(&mut errors, p.samples >= 1, "samples", "must be at least 1");
            collect(&mut errors, disorder_spec(p, seed).validate(), None)?;
        }
        ScenarioParams::Collapse(p) => {
            check(&mut errors, p.trials >= 1, "trials", "must be at least 1");
            check(&mut errors, p.initial.len() >= 2, "initial", "need at least two channels");
            let sum: f64 = p.initial.iter().sum();
            check(
                &mut errors,
                p.initial.iter().all(|x| x.is_finite() && *x >= 0.0) && (sum - 1.0).abs() <= 1e-9,
                "initial",
                "probabilities must be non-negative and sum to 1",
            );
            check(&mut errors, p.cells >= 1, "cells", "must be at least 1");
            collect(&mut errors, p.model.validate(), None)?;
            collect(&mut errors, p.policy.validate(), None)?;
            match &p.schedule {
                ScheduleSpec::Field { channel, points, spacing, dt, t_end, snapshot_every } => {
                    check(&mut errors, *channel < p.initial.len(), "schedule.channel", "no such channel");
                    check(&mut errors, *points >= 3, "schedule.points", "need at least 3 points");
                    check(&mut errors, positive(*spacing), "schedule.spacing", "must be positive");
                    check(&mut errors, positive(*t_end), "schedule.t_end", "must be positive");
                    check(&mut errors, positive(*snapshot_every), "schedule.snapshot_every", "must be positive");
                    let bound = (spacing * spacing * 3.0).min(kinetics::MAX_CONTAGION_STEP);
                    check(&mut errors, positive(*dt) && *dt <= bound, "schedule.dt", &format!("must lie in (0, {bound}]"));
                }
                _ => {
                    check(
                        &mut errors,
                        p.intricacy.len() == p.initial.len(),
                        "intricacy",
                        "need one Σf per channel",
                    );
                    if errors.is_empty() {
                        collect(&mut errors, build_schedule(p).map(|_| ()), None)?;
                    }
                }
            }
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(errors))
    }
}

fn disorder_spec(p: &PredecoherenceScenario, seed: u64) -> DisorderSpec {
    DisorderSpec {
        size: p.size,
        family: p.family,
        construction: p.construction,
        haar_rotation: p.haar_rotation,
        strength: p.strength,
        seed,
    }
}

fn build_schedule(p: &CollapseScenario) -> Result<IntricacySchedule> {
    let growth = match &p.schedule {
        ScheduleSpec::Constant => Growth::Constant,
        ScheduleSpec::Logistic => Growth::Logistic,
        ScheduleSpec::Cascade { rate } => Growth::Cascade { rate: *rate },
        ScheduleSpec::Mute => Growth::Mute,
        ScheduleSpec::Field { channel, points, spacing, dt, t_end, snapshot_every } => {
            let mut field = seed_field_1d(*points, *spacing, 1.0)?;
            let history = field
                .evolve_with_history(&EvolveParams::free(*t_end, *dt), *snapshot_every)
                .map_err(|e| e.under("schedule"))?;
            return IntricacySchedule::from_field_history(&history, p.initial.len(), *channel);
        }
    };
    IntricacySchedule::uniform(&p.intricacy, p.cells, growth)
}

fn seed_field_1d(points: usize, spacing: f64, radius: f64) -> Result<IntricacyField> {
    let values = (0..points)
        .map(|i| if i as f64 * spacing < radius { 1.0 } else { 0.0 })
        .collect();
    IntricacyField::from_values(Dimension::One, [points, 1, 1], spacing, values)
}

/// One written output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub kind: ScenarioKind,
    pub seed: u64,
    pub version: String,
    pub config: serde_json::Value,
    pub outputs: Vec<OutputEntry>,
    /// Seconds; the only field that differs between identical runs.
    pub wall_time_seconds: f64,
}

pub const MANIFEST_FILE: &str = "manifest.json";

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

struct Emitter<'a> {
    dir: &'a Path,
    formats: &'a [OutputFormat],
    outputs: Vec<OutputEntry>,
}

impl Emitter<'_> {
    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        self.outputs.push(OutputEntry {
            file: name.to_string(),
            bytes: contents.len(),
            sha256: sha256_hex(contents.as_bytes()),
        });
        Ok(())
    }

    fn csv(&mut self, name: &str, contents: impl FnOnce() -> String) -> Result<()> {
        if self.formats.contains(&OutputFormat::Csv) {
            self.write(name, &contents())?;
        }
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        if self.formats.contains(&OutputFormat::Json) {
            let mut text = serde_json::to_string_pretty(value)
                .map_err(|e| Error::Numerical(format!("serializing {name}: {e}")))?;
            text.push('\n');
            self.write(name, &text)?;
        }
        Ok(())
    }
}

/// Runs a validated scenario, writing its outputs and `manifest.json` into
/// `out_dir` (created if missing).
pub fn run_scenario(config: &ScenarioConfig, out_dir: &Path) -> Result<RunManifest> {
    let started = Instant::now();
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::io(format!("creating {}", out_dir.display()), e))?;
    let mut emit = Emitter {
        dir: out_dir,
        formats: &config.formats,
        outputs: Vec::new(),
    };
    let result = match &config.params {
        ScenarioParams::Estimate(p) => run_estimate(&config.detector, p, &mut emit),
        ScenarioParams::Wavefront(p) => run_wavefront(p, &mut emit),
        ScenarioParams::Field(p) => run_field(p, &mut emit),
        ScenarioParams::Sectors(p) => run_sectors(p, &mut emit),
        ScenarioParams::Predecoherence(p) => run_predecoherence(p, config.seed, &mut emit),
        ScenarioParams::Collapse(p) => run_collapse(p, config.seed, &mut emit),
    };
    result.map_err(|e| e.context(format!("{} scenario", config.kind.name())))?;
    let manifest = RunManifest {
        kind: config.kind,
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: serde_json::to_value(config)
            .map_err(|e| Error::Numerical(format!("serializing config: {e}")))?,
        outputs: emit.outputs,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    let mut text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Numerical(format!("serializing manifest: {e}")))?;
    text.push('\n');
    let path = out_dir.join(MANIFEST_FILE);
    std::fs::write(&path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    Ok(manifest)
}

#[derive(Serialize)]
struct EstimateOutput {
    estimates: detector::EstimateReport,
    fluctuation: detector::FluctuationRate,
    /// ⟨(δp₁)²⟩/δt = A·p₁p₂, s⁻¹.
    variance_rate: f64,
}

fn run_estimate(params: &DetectorParams, p: &EstimateScenario, emit: &mut Emitter) -> Result<()> {
    let estimates = detector::detector_estimates(params)?;
    let fluctuation = detector::fluctuation_rate_a(params, p.p1, 1.0 - p.p1)?;
    emit.csv("estimates.csv", || {
        let rows: [(&str, f64, &str); 13] = [
            ("thermal_velocity", estimates.thermal_velocity, "cm/s"),
            ("front_velocity", estimates.front_velocity, "cm/s"),
            ("diffusion_coefficient", estimates.diffusion_coefficient, "cm^2/s"),
            ("fill_time", estimates.fill_time, "s"),
            ("collision_rate", estimates.collision_rate, "1/s"),
            ("concurrent_waves", estimates.concurrent_waves, "1"),
            ("front_width", estimates.front_width, "cm"),
            ("active_front_regions", estimates.active_front_regions, "1"),
            ("fluctuation_rate", fluctuation.coefficient, "1/s"),
            ("cells_on_track", fluctuation.cells_on_track, "1"),
            ("cell_intricacy", fluctuation.cell_intricacy, "1"),
            ("quadratic_scaling_estimate", fluctuation.quadratic_scaling_estimate, "1/s"),
            ("variance_rate", fluctuation.coefficient * fluctuation.probability_factor, "1/s"),
        ];
        let mut out = String::from("quantity,value,unit\n");
        for (name, value, unit) in rows {
            let _ = writeln!(out, "{name},{value},{unit}");
        }
        out
    })?;
    let variance_rate = fluctuation.coefficient * fluctuation.probability_factor;
    emit.json(
        "estimates.json",
        &EstimateOutput {
            estimates,
            fluctuation,
            variance_rate,
        },
    )
}

#[derive(Serialize)]
struct WavefrontSummary {
    length_lambda: f64,
    samples: usize,
    spacing_lambda: f64,
    g_at_front: f64,
    g_at_far_end: f64,
    max_residual: f64,
    slope_at_front: f64,
    shooting_slope: f64,
    rise_width_lambda: f64,
    monotone: bool,
}

fn run_wavefront(p: &WavefrontScenario, emit: &mut Emitter) -> Result<()> {
    let profile = kinetics::solve_traveling_wave(p.length, p.tolerance)?;
    emit.csv("profile.csv", || kinetics::write_profile_csv(&profile))?;
    emit.json(
        "wavefront.json",
        &WavefrontSummary {
            length_lambda: profile.length(),
            samples: profile.z.len(),
            spacing_lambda: profile.spacing(),
            g_at_front: *profile.g.last().expect("non-empty profile"),
            g_at_far_end: profile.g[0],
            max_residual: profile.residual,
            slope_at_front: profile.slope,
            shooting_slope: profile.shooting_slope,
            rise_width_lambda: profile.rise_width(0.01, 0.99),
            monotone: profile.is_monotone(),
        },
    )
}

#[derive(Serialize)]
struct FieldSummary {
    dimension: Dimension,
    final_time_tau: f64,
    total_intricacy: f64,
    measured_front_speed: kinetics::FrontSpeed,
    pulled_front_speed: f64,
    kinetic_front_speed: f64,
    imposed_front_speed: Option<f64>,
    units: &'static str,
}

/// Initial field of a field scenario.
pub fn initial_field(p: &FieldScenario) -> Result<IntricacyField> {
    let mut field = match (p.dimension, p.initial) {
        (Dimension::One, InitialField::Seed) => seed_field_1d(p.points, p.spacing, p.seed_radius)?,
        (Dimension::One, InitialField::Profile) => {
            let profile = kinetics::solve_traveling_wave(kinetics::MIN_PROFILE_LENGTH, 1e-8)?;
            IntricacyField::from_profile_1d(&profile, p.points, p.spacing, p.profile_front)?
        }
        (Dimension::Three, _) => {
            let [nx, ny, nz] = p.extent;
            let (cy, cz) = ((ny / 2) as f64, (nz / 2) as f64);
            let mut values = vec![0.0; nx * ny * nz];
            for k in 0..nz {
                for j in 0..ny {
                    let r = ((j as f64 - cy).hypot(k as f64 - cz)) * p.spacing;
                    if r <= p.seed_radius {
                        for i in 0..nx {
                            values[i + nx * (j + ny * k)] = 1.0;
                        }
                    }
                }
            }
            IntricacyField::from_values(Dimension::Three, p.extent, p.spacing, values)?
        }
    };
    if p.track_rate > 0.0 {
        let on_track: Vec<f64> = match p.dimension {
            Dimension::One => (0..p.points)
                .map(|i| if i as f64 * p.spacing < p.seed_radius { p.track_rate } else { 0.0 })
                .collect(),
            Dimension::Three => {
                let [nx, ny, nz] = p.extent;
                let (cy, cz) = ((ny / 2) as f64, (nz / 2) as f64);
                (0..nx * ny * nz)
                    .map(|idx| {
                        let (j, k) = (idx / nx % ny, idx / (nx * ny));
                        let r = ((j as f64 - cy).hypot(k as f64 - cz)) * p.spacing;
                        if r <= p.seed_radius { p.track_rate } else { 0.0 }
                    })
                    .collect()
            }
        };
        field = field.with_source(Source {
            rates: on_track,
            active_until: p.track_until,
        })?;
    }
    Ok(field)
}

fn run_field(p: &FieldScenario, emit: &mut Emitter) -> Result<()> {
    let mut field = initial_field(p)?;
    let params = EvolveParams {
        t_end: p.t_end,
        dt: p.dt,
        diffusion: p.diffusion,
        front: p.front,
    };
    let history = field.evolve_with_history(&params, p.snapshot_every)?;
    let speed = if p.dimension == Dimension::One {
        kinetics::measure_front_speed(&history, p.level)?
    } else {
        kinetics::FrontSpeed::NoFront
    };
    emit.csv("field.csv", || kinetics::write_field_csv(&field))?;
    emit.csv("history.csv", || {
        let mut out = String::from("t_tau,total_intricacy_lambda_dim,front_position_lambda\n");
        for snap in &history {
            let front = if snap.dimension() == Dimension::One {
                kinetics::front_position(snap, p.level).map(|x| x.to_string()).unwrap_or_default()
            } else {
                String::new()
            };
            let _ = writeln!(out, "{},{},{}", snap.time(), snap.total(), front);
        }
        out
    })?;
    emit.json(
        "field.json",
        &FieldSummary {
            dimension: p.dimension,
            final_time_tau: field.time(),
            total_intricacy: field.total(),
            measured_front_speed: speed,
            pulled_front_speed: kinetics::pulled_front_speed(p.diffusion),
            kinetic_front_speed: kinetics::kinetic_front_speed(),
            imposed_front_speed: match p.front {
                FrontMode::Imposed { speed, .. } => Some(speed),
                FrontMode::Free => None,
            },
            units: "reduced: length λ, time τ",
        },
    )
}

#[derive(Serialize)]
struct SectorsSummary {
    atoms: usize,
    grid_points: usize,
    kinetic_stencil: &'static str,
    boundary: &'static str,
    dt: f64,
    steps: usize,
    norm_bound: f64,
    final_time: f64,
    final_sector_norms: Vec<f64>,
    final_intricacy: sectors::IntricacyEstimate,
    symmetric_norms: Vec<f64>,
}

fn sector_label(q: usize, atoms: usize) -> String {
    (0..atoms).map(|n| if q & (1 << n) != 0 { '1' } else { '0' }).collect()
}

fn run_sectors(p: &SectorsScenario, emit: &mut Emitter) -> Result<()> {
    let gen = sectors::build_generator(&p.model)?;
    let start = sectors::SectorStack::initial(&p.model)?;
    let region = p.region.unwrap_or(Region::all(p.model.grid_points));
    let (last, rows) = sectors::evolve_series(&start, &gen, p.dt, p.steps, p.record_every, region)?;
    let atoms = p.model.atoms;
    emit.csv("sectors.csv", || {
        let mut out = String::from("t_tau");
        for q in 0..(1 << atoms) {
            let _ = write!(out, ",norm_sq_{}", sector_label(q, atoms));
        }
        out.push_str(",f_diagonal,f_coherent\n");
        for row in &rows {
            let _ = write!(out, "{}", row.time);
            for n in &row.sector_norms {
                let _ = write!(out, ",{n}");
            }
            let _ = writeln!(out, ",{},{}", row.intricacy.diagonal, row.intricacy.coherent);
        }
        out
    })?;
    let sym = sectors::symmetrize(&last);
    let final_row = rows.last().expect("at least the initial row");
    emit.json(
        "sectors.json",
        &SectorsSummary {
            atoms,
            grid_points: p.model.grid_points,
            kinetic_stencil: "3-point central difference",
            boundary: "periodic",
            dt: p.dt,
            steps: p.steps,
            norm_bound: gen.norm_bound(),
            final_time: last.time,
            final_sector_norms: final_row.sector_norms.clone(),
            final_intricacy: final_row.intricacy,
            symmetric_norms: sym.components.iter().map(|c| sectors::norm_sqr(c)).collect(),
        },
    )
}

fn run_predecoherence(p: &PredecoherenceScenario, seed: u64, emit: &mut Emitter) -> Result<()> {
    let spec = disorder_spec(p, seed);
    let summary = predecoherence::ensemble(&spec, p.samples)?;
    emit.csv("samples.csv", || {
        let mut out = String::from("sample,k_plus,k_minus,ks\n");
        for s in &summary.samples {
            let _ = writeln!(out, "{},{},{},{}", s.index, s.k_plus, s.k_minus, s.ks);
        }
        out
    })?;
    if emit.formats.contains(&OutputFormat::Csv) {
        let first = predecoherence::split_positive_negative(&predecoherence::sample_indexed(&spec, 0)?)?;
        let scale = p.size as f64 / p.strength;
        let mut out = String::from("index,eigenvalue,wigner_scaled\n");
        for (i, l) in first.eigenvalues.iter().enumerate() {
            let _ = writeln!(out, "{i},{l},{}", l * scale);
        }
        emit.write("spectrum.csv", &out)?;
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        size: usize,
        samples: usize,
        family: NoiseFamily,
        construction: Construction,
        mean_k: f64,
        k_std_error: f64,
        target_k: f64,
        relative_deviation: f64,
        mean_ks: f64,
        max_trace_imbalance: f64,
        per_sample: &'a [predecoherence::SampleStats],
    }
    emit.json(
        "summary.json",
        &Summary {
            size: summary.size,
            samples: summary.samples.len(),
            family: summary.family,
            construction: summary.construction,
            mean_k: summary.mean_k,
            k_std_error: summary.k_std_error,
            target_k: summary.target_k,
            relative_deviation: summary.relative_deviation,
            mean_ks: summary.mean_ks,
            max_trace_imbalance: summary
                .samples
                .iter()
                .map(|s| (s.k_plus - s.k_minus).abs())
                .fold(0.0, f64::max),
            per_sample: &summary.samples,
        },
    )
}

fn run_collapse(p: &CollapseScenario, seed: u64, emit: &mut Emitter) -> Result<()> {
    let schedule = build_schedule(p)?;
    let report = collapse::born_rule_experiment(p.trials, &p.initial, &schedule, &p.model, &p.policy, seed)?;
    emit.csv("trials.csv", || {
        let mut out = String::from("trial,winner,collapse_time_steps,collapse_time_tau,clamp_bias\n");
        for r in &report.records {
            let winner = r.winner.map(|w| w.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.trial, winner, r.collapse_time_steps, r.collapse_time, r.clamp_bias
            );
        }
        out
    })?;
    if p.policy.record_every > 0 && emit.formats.contains(&OutputFormat::Csv) {
        let mut rng = rng::stream(seed, rng::DOMAIN_COLLAPSE, 0);
        let trial = collapse::run_trial(&p.initial, &schedule, &p.model, &p.policy, &mut rng)?;
        let mut out = String::from("t_tau");
        for j in 0..p.initial.len() {
            let _ = write!(out, ",p{j}");
        }
        out.push('\n');
        for (t, probs) in &trial.trajectory {
            let _ = write!(out, "{t}");
            for q in probs {
                let _ = write!(out, ",{q}");
            }
            out.push('\n');
        }
        emit.write("trajectory.csv", &out)?;
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        trials: u64,
        initial: &'a [f64],
        wins: &'a [u64],
        frequencies: &'a [f64],
        standard_errors: &'a [f64],
        max_deviation_sigma: f64,
        no_collapse: u64,
        failures: u64,
        failure_messages: &'a [String],
        revivals: u64,
        max_clamp_bias: f64,
        median_collapse_time_tau: f64,
        initial_intricacy_sums: Vec<f64>,
    }
    emit.json(
        "collapse.json",
        &Summary {
            trials: report.trials,
            initial: &report.initial,
            wins: &report.wins,
            frequencies: &report.frequencies,
            standard_errors: &report.standard_errors,
            max_deviation_sigma: report.max_sigma(),
            no_collapse: report.no_collapse,
            failures: report.failures,
            failure_messages: &report.failure_messages,
            revivals: report.revivals,
            max_clamp_bias: report.max_clamp_bias,
            median_collapse_time_tau: report.median_collapse_time,
            initial_intricacy_sums: schedule.sums_at(0.0),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_collapse_config_gets_defaults() {
        let cfg = parse_config("kind = \"collapse\"\n").unwrap();
        assert_eq!(cfg.kind, ScenarioKind::Collapse);
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.formats, vec![OutputFormat::Csv, OutputFormat::Json]);
        match cfg.params {
            ScenarioParams::Collapse(c) => assert_eq!(c, CollapseScenario::default()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_config("kind = \"collapse\"\n[collapse]\nfoo = 1\n").unwrap_err();
        let Error::Config(list) = err else { panic!() };
        assert!(list[0].path.contains("foo") || list[0].reason.contains("foo"), "{list:?}");
        let err = parse_config("kind = \"estimate\"\nfoo = 1\n").unwrap_err();
        assert!(err.to_string().contains("foo"));
    }

    #[test]
    fn cell_smaller_than_mean_free_path_is_rejected() {
        let text = "kind = \"estimate\"\n[detector]\ncell_size = 1e-6\nmean_free_path = 1e-5\n";
        let Error::Config(list) = parse_config(text).unwrap_err() else { panic!() };
        assert!(list.iter().any(|e| e.path.starts_with("detector.")), "{list:?}");
    }

    #[test]
    fn foreign_blocks_are_rejected() {
        let Error::Config(list) = parse_config("kind = \"collapse\"\n[field]\ndt = 0.1\n").unwrap_err() else {
            panic!()
        };
        assert_eq!(list[0].path, "field");
    }

    #[test]
    fn field_level_errors_are_collected() {
        let text = "kind = \"collapse\"\n[collapse]\ntrials = 0\ninitial = [0.5, 0.6]\n";
        let Error::Config(list) = parse_config(text).unwrap_err() else { panic!() };
        let paths: Vec<_> = list.iter().map(|e| e.path.as_str()).collect();
        assert!(paths.contains(&"collapse.trials"), "{paths:?}");
        assert!(paths.contains(&"collapse.initial"), "{paths:?}");
    }

    #[test]
    fn wrong_value_type_points_at_the_key() {
        let Error::Config(list) = parse_config("kind = \"field\"\n[field]\ndt = \"fast\"\n").unwrap_err() else {
            panic!()
        };
        assert_eq!(list[0].path, "field.dt");
    }

    #[test]
    fn unstable_field_step_is_a_config_error() {
        let text = "kind = \"field\"\n[field]\nspacing = 0.1\ndt = 0.1\n";
        assert!(matches!(parse_config(text), Err(Error::Config(_))));
    }

    #[test]
    fn nested_tables_parse() {
        let text = r#"
kind = "collapse"
seed = 3
formats = ["json"]

[collapse]
trials = 1000
initial = [0.2, 0.3, 0.5]
intricacy = [5.0, 5.0, 0.0]
cells = 10
schedule = { kind = "cascade", rate = 0.5 }

[collapse.model]
profile = { mode = "custom", exponent = 0.5 }

[collapse.policy]
max_dt = 0.005
"#;
        let cfg = parse_config(text).unwrap();
        let ScenarioParams::Collapse(c) = cfg.params else { panic!() };
        assert_eq!(c.schedule, ScheduleSpec::Cascade { rate: 0.5 });
        assert_eq!(c.policy.max_dt, 0.005);
        assert_eq!(c.policy.absorption, 1e-9);
    }
}
