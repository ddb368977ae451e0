//! Acceptance criteria, one verdict line each.
//!
//! Runs without the test harness so every line is printed; the process
//! exits non-zero if any criterion fails.

mod common;

use std::path::Path;
use std::time::Instant;

use intricacy_core::collapse::{self, ChannelState, FluctuationModel, Growth, IntricacySchedule, StepPolicy};
use intricacy_core::detector::{self, DetectorParams};
use intricacy_core::kinetics::{
    self, EvolveParams, FrontMode, IntricacyField, MIN_PROFILE_LENGTH, REDUCED_DIFFUSION,
};
use intricacy_core::predecoherence::{self, DisorderSpec, NoiseFamily};
use intricacy_core::rng;
use intricacy_core::scenario;
use intricacy_core::sectors::{build_generator, evolve_sectors, SectorStack};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn require(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn target_k() -> f64 {
    4.0 / (3.0 * std::f64::consts::PI)
}

/// Mean K over `samples` matrices of size `n`.
fn mean_k(n: usize, samples: usize, seed: u64) -> Result<f64, String> {
    let spec = DisorderSpec::new(n, NoiseFamily::GammaMatched, seed);
    let summary = predecoherence::ensemble(&spec, samples).map_err(|e| e.to_string())?;
    Ok(summary.mean_k)
}

fn predecoherence_constant() -> Verdict {
    let start = Instant::now();
    let k = mean_k(1024, 50, 2024)?;
    let secs = start.elapsed().as_secs_f64();
    let dev = (k - target_k()).abs() / target_k();
    let trend: Vec<f64> = [(64, 400), (256, 100)]
        .iter()
        .map(|&(n, s)| mean_k(n, s, 2024).map(|k| (k - target_k()).abs()))
        .collect::<Result<_, _>>()?;
    let gaps = [trend[0], trend[1], (k - target_k()).abs()];
    let detail = format!(
        "K(1024, 50) = {k:.5} vs 4/(3π) = {:.5} ({:.3}%), {secs:.1} s; |ΔK| at N = 64/256/1024: {:.2e} / {:.2e} / {:.2e}",
        target_k(),
        100.0 * dev,
        gaps[0],
        gaps[1],
        gaps[2]
    );
    require(dev < 0.02 && secs < 60.0 && gaps[0] > gaps[1] && gaps[1] > gaps[2], detail)
}

fn semicircle_law() -> Verdict {
    let spec = DisorderSpec::new(2048, NoiseFamily::GammaMatched, 99);
    let m = predecoherence::sample_fluctuation_matrix(&spec).map_err(|e| e.to_string())?;
    let ks = predecoherence::semicircle_test(&m).map_err(|e| e.to_string())?;
    // Independent KS against the closed-form CDF.
    let mut y: Vec<f64> = m.eigenvalues().map_err(|e| e.to_string())?.iter().map(|l| l * 2048.0).collect();
    y.sort_by(f64::total_cmp);
    let cdf = |x: f64| {
        let x = x.clamp(-2.0, 2.0);
        0.5 + (x * (4.0 - x * x).sqrt() / 4.0 + (x / 2.0).asin()) / std::f64::consts::PI
    };
    let n = y.len() as f64;
    let own = y
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max((c - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max);
    require(
        ks < 0.02 && (ks - own).abs() < 1e-9,
        format!("KS(N = 2048) = {ks:.4} (independent recomputation {own:.4}), support [{:.3}, {:.3}]", y[0], y[y.len() - 1]),
    )
}

fn traveling_wave() -> Verdict {
    let p = kinetics::solve_traveling_wave(MIN_PROFILE_LENGTH, 1e-8).map_err(|e| e.to_string())?;
    let h = p.spacing();
    let d1 = [-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
    let d2 = [1.0 / 90.0, -3.0 / 20.0, 3.0 / 2.0, -49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];
    let v = 1.0 / 3f64.sqrt();
    let residual = (3..p.g.len() - 3)
        .map(|i| {
            let w = &p.g[i - 3..=i + 3];
            let g1: f64 = w.iter().zip(&d1).map(|(g, c)| g * c).sum::<f64>() / h;
            let g2: f64 = w.iter().zip(&d2).map(|(g, c)| g * c).sum::<f64>() / (h * h);
            (REDUCED_DIFFUSION * g2 + v * g1 + p.g[i] * (1.0 - p.g[i])).abs()
        })
        .fold(0.0, f64::max);
    let g0 = p.value_at(0.0);
    let far = (p.value_at(-20.0) - 1.0).abs();
    let width = p.rise_width(0.01, 0.99);
    require(
        residual < 1e-8 && p.residual < 1e-8 && g0 == 0.0 && far < 1e-6 && p.is_monotone(),
        format!(
            "residual {residual:.1e} (solver {:.1e}), g(0) = {g0}, |g(−20λ) − 1| = {far:.1e}, monotone {}, 0.01→0.99 width {width:.3} λ",
            p.residual,
            p.is_monotone()
        ),
    )
}

fn seed_1d(points: usize, spacing: f64) -> IntricacyField {
    let values = (0..points).map(|i| if (i as f64) * spacing < 1.0 { 1.0 } else { 0.0 }).collect();
    IntricacyField::from_values(kinetics::Dimension::One, [points, 1, 1], spacing, values).unwrap()
}

fn front_speeds() -> Verdict {
    let pulled = 2.0 * REDUCED_DIFFUSION.sqrt();
    let mut free = seed_1d(1200, 0.25);
    let history = free
        .evolve_with_history(&EvolveParams::free(200.0, 0.05), 1.0)
        .map_err(|e| e.to_string())?;
    let measured = kinetics::measure_front_speed(&history, 0.5)
        .map_err(|e| e.to_string())?
        .speed()
        .ok_or("free run shows no front")?;

    let kinetic = 1.0 / 3f64.sqrt();
    let mut bounded = seed_1d(600, 0.25);
    let params = EvolveParams {
        front: FrontMode::Imposed { speed: kinetic, start: 1.0 },
        ..EvolveParams::free(200.0, 0.05)
    };
    let history = bounded.evolve_with_history(&params, 1.0).map_err(|e| e.to_string())?;
    let imposed = kinetics::measure_front_speed(&history, 0.5)
        .map_err(|e| e.to_string())?
        .speed()
        .ok_or("imposed run shows no front")?;
    // The support edge must sit within one cell behind the imposed boundary.
    let edge_lag = history
        .iter()
        .skip(1)
        .map(|f| {
            let last = f.values().iter().rposition(|&v| v > 0.0).unwrap_or(0) as f64 * f.spacing();
            1.0 + kinetic * f.time() - last
        })
        .fold(0.0, f64::max);
    let free_dev = (measured - pulled).abs() / pulled;
    let bounded_dev = (imposed - kinetic).abs() / kinetic;
    require(
        free_dev < 0.05 && bounded_dev < 0.01 && edge_lag <= 0.25 + 1e-9,
        format!(
            "free {measured:.4} vs 2√(D/τ) = {pulled:.4} ({:.2}%); imposed {imposed:.4} vs 3^-1/2 = {kinetic:.4} ({:.2}%), edge lag ≤ {edge_lag:.3} λ; free/kinetic ratio {:.3}",
            100.0 * free_dev,
            100.0 * bounded_dev,
            measured / kinetic
        ),
    )
}

fn sector_sum_rule() -> Verdict {
    let spec = common::spec(2, 16);
    let gen = build_generator(&spec).map_err(|e| e.to_string())?;
    let start = SectorStack::initial(&spec).map_err(|e| e.to_string())?;
    let out = evolve_sectors(&start, &gen, 0.02, 50).map_err(|e| e.to_string())?;
    let direct = common::taylor_evolve(&spec, &start.sectors[0], 1.0, 10);
    let err = common::rel_err(&out.total(), &direct);
    let drift = (out.sector_norms()[0] - 1.0).abs();
    let pattern = gen.coupling_pattern();
    let mut sparsity_ok = true;
    for (to, row) in pattern.iter().enumerate() {
        for (from, &nz) in row.iter().enumerate() {
            let superset = to & from == from;
            let step = to.count_ones().saturating_sub(from.count_ones());
            sparsity_ok &= nz == (superset && step <= 1);
        }
    }
    require(
        err < 1e-6 && drift < 1e-8 && sparsity_ok,
        format!("‖ΣΦ − Ψ‖/‖Ψ‖ = {err:.2e}, sector-0 drift {drift:.2e}, sparsity pattern exact: {sparsity_ok}"),
    )
}

fn born_rule() -> Verdict {
    let model = FluctuationModel::default();
    let policy = StepPolicy::default();
    let two = IntricacySchedule::uniform(&[10.0, 0.0], 100, Growth::Constant).map_err(|e| e.to_string())?;
    let r2 = collapse::born_rule_experiment(10_000, &[0.3, 0.7], &two, &model, &policy, 6).map_err(|e| e.to_string())?;
    let three = IntricacySchedule::uniform(&[10.0, 10.0, 0.0], 100, Growth::Constant).map_err(|e| e.to_string())?;
    let r3 = collapse::born_rule_experiment(10_000, &[0.2, 0.3, 0.5], &three, &model, &policy, 6)
        .map_err(|e| e.to_string())?;
    let f1 = r2.frequencies[0];
    let per_channel_ok = r3
        .frequencies
        .iter()
        .zip(&r3.initial)
        .all(|(f, p)| (f - p).abs() <= 3.0 * (p * (1.0 - p) / 1e4).sqrt());
    let clean = |r: &collapse::BornReport| r.no_collapse == 0 && r.failures == 0 && r.revivals == 0;
    require(
        (f1 - 0.3).abs() <= 0.014 && per_channel_ok && clean(&r2) && clean(&r3),
        format!(
            "(0.3, 0.7): P(1) = {f1:.4}; (0.2, 0.3, 0.5): {:.4?} (max {:.2}σ); uncollapsed {}+{}, revivals {}+{}, failures {}+{}",
            r3.frequencies,
            r3.max_sigma(),
            r2.no_collapse,
            r3.no_collapse,
            r2.revivals,
            r3.revivals,
            r2.failures,
            r3.failures
        ),
    )
}

fn variance_law() -> Verdict {
    let model = FluctuationModel::default();
    let schedule = IntricacySchedule::uniform(&[10.0, 0.0], 100, Growth::Constant).map_err(|e| e.to_string())?;
    let state = ChannelState::new(vec![0.5, 0.5], schedule.mute_flags()).map_err(|e| e.to_string())?;
    let dt = 0.01;
    let mut rng = rng::stream(7, rng::DOMAIN_COLLAPSE, 0);
    let n = 100_000;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n {
        let d = collapse::fluctuation_increment(&state, &schedule, &model, dt, &mut rng)[0];
        sum += d;
        sum_sq += d * d;
    }
    let mean = sum / n as f64;
    let var = sum_sq / n as f64 - mean * mean;
    let expected = 8.0 / (3.0 * std::f64::consts::PI) * 10.0 * 0.5 * 0.5 * dt;
    let dev = (var - expected).abs() / expected;
    require(dev < 0.05, format!("Var(δp₁) = {var:.5} vs {expected:.5} ({:.2}%)", 100.0 * dev))
}

fn within_decade(x: f64, reference: f64) -> bool {
    (x / reference).log10().abs() <= 1.0
}

fn order_of_magnitude() -> Verdict {
    let params = DetectorParams::default();
    let ratio = params.cell_size / params.mean_free_path;
    let report = detector::detector_estimates(&params).map_err(|e| e.to_string())?;
    let a = detector::fluctuation_rate_a(&params, 0.5, 0.5).map_err(|e| e.to_string())?;
    require(
        (ratio - 10.0).abs() < 1e-9
            && within_decade(report.fill_time, 1e-4)
            && within_decade(report.concurrent_waves, 1e22)
            && within_decade(a.coefficient, 1e9),
        format!(
            "fill {:.2e} s, concurrent waves {:.2e}, A = {:.2e} s⁻¹ (Λ = {ratio}λ)",
            report.fill_time, report.concurrent_waves, a.coefficient
        ),
    )
}

const SMALL_SCENARIOS: [&str; 6] = [
    "kind = \"estimate\"\nseed = 1\n",
    "kind = \"wavefront\"\n",
    "kind = \"field\"\n[field]\npoints = 160\nt_end = 10.0\n",
    "kind = \"sectors\"\n[sectors]\nsteps = 40\nrecord_every = 10\n",
    "kind = \"predecoherence\"\nseed = 5\n[predecoherence]\nsize = 48\nsamples = 6\n",
    "kind = \"collapse\"\nseed = 9\n[collapse]\ntrials = 300\ninitial = [0.2, 0.3, 0.5]\nintricacy = [10.0, 10.0, 0.0]\ncells = 10\n[collapse.policy]\nrecord_every = 100\n",
];

fn outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != scenario::MANIFEST_FILE)
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism() -> Verdict {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    for (i, text) in SMALL_SCENARIOS.iter().enumerate() {
        let config = scenario::parse_config(text).map_err(|e| e.to_string())?;
        let a = tmp.path().join(format!("{i}a"));
        let b = tmp.path().join(format!("{i}b"));
        let ma = scenario::run_scenario(&config, &a).map_err(|e| e.to_string())?;
        let mb = scenario::run_scenario(&config, &b).map_err(|e| e.to_string())?;
        if ma.outputs != mb.outputs {
            return Err(format!("{} checksums differ", config.kind.name()));
        }
        let (oa, ob) = (outputs(&a), outputs(&b));
        if oa != ob || oa.is_empty() {
            return Err(format!("{} outputs differ", config.kind.name()));
        }
        compared += oa.len();
    }
    Ok(format!("{compared} output files byte-identical across reruns of all six scenario kinds"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("predecoherence constant", predecoherence_constant),
        ("semicircle law", semicircle_law),
        ("traveling wave", traveling_wave),
        ("front-speed dichotomy", front_speeds),
        ("sector sum rule", sector_sum_rule),
        ("Born rule", born_rule),
        ("variance law", variance_law),
        ("order-of-magnitude estimates", order_of_magnitude),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("[{tag}] {}. {name}: {detail} [{:.1} s]", i + 1, start.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
