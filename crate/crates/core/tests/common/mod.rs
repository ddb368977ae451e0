//! Reference Schrödinger evolution written independently of the sector
//! generator: coordinates are decoded per amplitude and the potentials are
//! recomputed from the spec.

#![allow(dead_code)]

use faer::c64;
use intricacy_core::sectors::*;

pub fn spec(atoms: usize, m: usize) -> ModelSpec {
    ModelSpec {
        atoms,
        grid_points: m,
        spacing: 1.0,
        particle_mass: 1.0,
        atom_mass: 4.0,
        particle_atom: Kernel { strength: 1.2, range: 1.0 },
        atom_atom: Kernel { strength: 0.7, range: 1.5 },
        particle: Packet { center: 3.0, width: 1.5, momentum: 0.8 },
        atom_packets: (0..atoms)
            .map(|n| Packet { center: 8.0 + 2.5 * n as f64, width: 1.2, momentum: 0.1 * n as f64 })
            .collect(),
        bose_symmetric: false,
        max_amplitudes: DEFAULT_MAX_AMPLITUDES,
        norm_tolerance: 1e-6,
    }
}

pub fn gaussian(k: &Kernel, a: usize, b: usize, spec: &ModelSpec) -> f64 {
    let m = spec.grid_points as f64;
    let raw = (a as f64 - b as f64).abs();
    let d = raw.min(m - raw) * spec.spacing;
    k.strength * (-d * d / (2.0 * k.range * k.range)).exp()
}

/// H = K_B + Σ K_A + Σ U + Σ V, applied directly.
pub fn apply_h(spec: &ModelSpec, psi: &[c64]) -> Vec<c64> {
    let m = spec.grid_points;
    let dims = spec.atoms + 1;
    let h2 = spec.spacing * spec.spacing;
    let mut out = vec![c64::new(0.0, 0.0); psi.len()];
    let mut coords = vec![0usize; dims];
    for (idx, o) in out.iter_mut().enumerate() {
        let mut rest = idx;
        for c in coords.iter_mut() {
            *c = rest % m;
            rest /= m;
        }
        let encode = |cs: &[usize]| cs.iter().rev().fold(0, |acc, &c| acc * m + c);
        let mut acc = c64::new(0.0, 0.0);
        for axis in 0..dims {
            let mass = if axis == 0 { spec.particle_mass } else { spec.atom_mass };
            let mut plus = coords.clone();
            plus[axis] = (coords[axis] + 1) % m;
            let mut minus = coords.clone();
            minus[axis] = (coords[axis] + m - 1) % m;
            acc += (psi[idx] * 2.0 - psi[encode(&plus)] - psi[encode(&minus)]) / (2.0 * mass * h2);
        }
        let mut pot = 0.0;
        for n in 1..dims {
            pot += gaussian(&spec.particle_atom, coords[0], coords[n], spec);
            for n2 in (n + 1)..dims {
                pot += gaussian(&spec.atom_atom, coords[n], coords[n2], spec);
            }
        }
        *o = acc + psi[idx] * pot;
    }
    out
}

/// exp(−iHt)ψ by a Taylor series in small substeps.
pub fn taylor_evolve(spec: &ModelSpec, psi: &[c64], t: f64, substeps: usize) -> Vec<c64> {
    let dt = t / substeps as f64;
    let mut state = psi.to_vec();
    for _ in 0..substeps {
        let mut term = state.clone();
        let mut sum = state.clone();
        for k in 1..60 {
            term = apply_h(spec, &term)
                .into_iter()
                .map(|z| z * c64::new(0.0, -dt / k as f64))
                .collect();
            let size: f64 = term.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for (s, z) in sum.iter_mut().zip(&term) {
                *s += z;
            }
            if size < 1e-18 {
                break;
            }
        }
        state = sum;
    }
    state
}

pub fn rel_err(a: &[c64], b: &[c64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    diff / norm(b)
}
