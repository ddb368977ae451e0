//! CSV snapshots of fields and profiles.
//!
//! Field snapshots look like
//!
//! ```text
//! # intricacy field; reduced units: length = mean free path λ, time = mean free time τ
//! # dimension=one spacing=0.25 extent=400x1x1 t=12.5
//! i,j,k,f1
//! 0,0,0,1
//! ...
//! ```
//!
//! Values are written with Rust's shortest round-trip formatting, so a
//! parsed snapshot is bit-identical to the field that was written.

use std::fmt::Write as _;

use super::{Dimension, IntricacyField, WaveProfile};
use crate::error::{Error, Result};

const FIELD_BANNER: &str =
    "# intricacy field; reduced units: length = mean free path λ, time = mean free time τ";
const FIELD_HEADER: &str = "i,j,k,f1";
/// Largest grid a snapshot may declare.
const MAX_POINTS: usize = 1 << 24;

pub fn write_field_csv(field: &IntricacyField) -> String {
    let [nx, ny, nz] = field.extent();
    let dim = match field.dimension() {
        Dimension::One => "one",
        Dimension::Three => "three",
    };
    let mut out = String::new();
    out.push_str(FIELD_BANNER);
    out.push('\n');
    let _ = writeln!(
        out,
        "# dimension={dim} spacing={} extent={nx}x{ny}x{nz} t={}",
        field.spacing(),
        field.time()
    );
    out.push_str(FIELD_HEADER);
    out.push('\n');
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let _ = writeln!(out, "{i},{j},{k},{}", field.get(i, j, k));
            }
        }
    }
    out
}

pub fn write_profile_csv(profile: &WaveProfile) -> String {
    let mut out = String::from(
        "# traveling-wave profile g(z); z in mean free paths λ, front at z = 0\nz_lambda,g\n",
    );
    for (z, g) in profile.z.iter().zip(&profile.g) {
        let _ = writeln!(out, "{z},{g}");
    }
    out
}

fn parse_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        line,
        reason: reason.into(),
    }
}

struct Meta {
    dimension: Dimension,
    spacing: f64,
    extent: [usize; 3],
    time: f64,
}

fn parse_meta(line_no: usize, line: &str) -> Result<Meta> {
    let body = line.trim_start_matches('#').trim();
    let (mut dimension, mut spacing, mut extent, mut time) = (None, None, None, None);
    for item in body.split_whitespace() {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| parse_err(line_no, format!("expected key=value, got `{item}`")))?;
        let bad = |what: &str| parse_err(line_no, format!("invalid {what} `{value}`"));
        match key {
            "dimension" => {
                dimension = Some(match value {
                    "one" => Dimension::One,
                    "three" => Dimension::Three,
                    _ => return Err(bad("dimension")),
                })
            }
            "spacing" => spacing = Some(value.parse::<f64>().map_err(|_| bad("spacing"))?),
            "extent" => {
                let parts: Vec<usize> = value
                    .split('x')
                    .map(|p| p.parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("extent"))?;
                let [a, b, c]: [usize; 3] = parts.try_into().map_err(|_| bad("extent"))?;
                extent = Some([a, b, c]);
            }
            "t" => time = Some(value.parse::<f64>().map_err(|_| bad("time"))?),
            other => return Err(parse_err(line_no, format!("unknown metadata key `{other}`"))),
        }
    }
    let missing = |k: &str| parse_err(line_no, format!("missing metadata `{k}`"));
    Ok(Meta {
        dimension: dimension.ok_or_else(|| missing("dimension"))?,
        spacing: spacing.ok_or_else(|| missing("spacing"))?,
        extent: extent.ok_or_else(|| missing("extent"))?,
        time: time.ok_or_else(|| missing("t"))?,
    })
}

/// Reads a snapshot written by [`write_field_csv`]. Every grid point must
/// appear exactly once.
pub fn parse_field_csv(text: &str) -> Result<IntricacyField> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let mut meta = None;
    let mut header_seen = false;
    for (no, line) in lines.by_ref() {
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if rest.split_whitespace().next().is_some_and(|t| t.contains('=')) {
                if meta.is_some() {
                    return Err(parse_err(no, "duplicate metadata line"));
                }
                meta = Some(parse_meta(no, line)?);
            }
            continue;
        }
        if line.trim() != FIELD_HEADER {
            return Err(parse_err(no, format!("expected header `{FIELD_HEADER}`")));
        }
        header_seen = true;
        break;
    }
    if !header_seen {
        return Err(parse_err(0, "missing header row"));
    }
    let meta = meta.ok_or_else(|| parse_err(0, "missing metadata line"))?;
    let [nx, ny, nz] = meta.extent;
    let total = nx
        .checked_mul(ny)
        .and_then(|v| v.checked_mul(nz))
        .filter(|&n| n > 0 && n <= MAX_POINTS)
        .ok_or_else(|| parse_err(0, "extent is empty or too large"))?;

    let mut values = vec![f64::NAN; total];
    let mut seen = 0usize;
    for (no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let mut index = || -> Result<usize> {
            cols.next()
                .ok_or_else(|| parse_err(no, "too few columns"))?
                .trim()
                .parse::<usize>()
                .map_err(|_| parse_err(no, "invalid grid index"))
        };
        let (i, j, k) = (index()?, index()?, index()?);
        let value: f64 = cols
            .next()
            .ok_or_else(|| parse_err(no, "too few columns"))?
            .trim()
            .parse()
            .map_err(|_| parse_err(no, "invalid f1 value"))?;
        if cols.next().is_some() {
            return Err(parse_err(no, "too many columns"));
        }
        if i >= nx || j >= ny || k >= nz {
            return Err(parse_err(no, format!("index ({i}, {j}, {k}) outside extent")));
        }
        let slot = &mut values[i + nx * (j + ny * k)];
        if !slot.is_nan() {
            return Err(parse_err(no, format!("duplicate point ({i}, {j}, {k})")));
        }
        if !(0.0..=1.0).contains(&value) {
            return Err(parse_err(no, format!("f1 = {value} outside [0, 1]")));
        }
        *slot = value;
        seen += 1;
    }
    if seen != total {
        return Err(parse_err(0, format!("expected {total} points, found {seen}")));
    }
    if !meta.time.is_finite() {
        return Err(parse_err(0, "time must be finite"));
    }
    Ok(IntricacyField::from_values(meta.dimension, meta.extent, meta.spacing, values)?.with_time(meta.time))
}
