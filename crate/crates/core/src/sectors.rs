//! Entanglement-indexed Schrödinger evolution for a particle and N ≤ 3 atoms.
//!
//! The wave function is split into 2^N sector components Φ_q, one per
//! bitstring q (bit n set when atom n is intricate with the particle). The
//! components evolve under a non-self-adjoint generator H′ whose sum over
//! sectors reproduces ordinary Schrödinger evolution of Ψ = Σ_q Φ_q.
//!
//! Configuration space is a periodic 1D grid of M points for the particle
//! coordinate y and each atom coordinate xₙ; ħ = 1. Kinetic energy uses the
//! 3-point stencil. A state array is indexed `y + M·(x₁ + M·(x₂ + …))`.

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, FieldError, Result};

/// Default cap on 2^N·M^(N+1).
pub const DEFAULT_MAX_AMPLITUDES: usize = 1 << 21;

/// Largest δt·‖H′‖ accepted by the RK4 integrator.
pub const RK4_STABILITY: f64 = 2.5;

/// Single-index matrices, basis order (|0⟩, |1⟩); entry `[row][col]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexMatrices {
    pub p0: [[f64; 2]; 2],
    pub p1: [[f64; 2]; 2],
    /// Raising operator |1⟩⟨0|.
    pub s: [[f64; 2]; 2],
    /// S·P₀ + P₁.
    pub a: [[f64; 2]; 2],
    /// Pair operator on |i⟩⊗|j⟩, basis index 2i + j.
    pub o: [[f64; 4]; 4],
}

fn mul2(x: &[[f64; 2]; 2], y: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut r = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = (0..2).map(|k| x[i][k] * y[k][j]).sum();
        }
    }
    r
}

fn kron(x: &[[f64; 2]; 2], y: &[[f64; 2]; 2]) -> [[f64; 4]; 4] {
    let mut r = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            r[i][j] = x[i / 2][j / 2] * y[i % 2][j % 2];
        }
    }
    r
}

pub fn build_index_matrices() -> IndexMatrices {
    let p0 = [[1.0, 0.0], [0.0, 0.0]];
    let p1 = [[0.0, 0.0], [0.0, 1.0]];
    let s = [[0.0, 0.0], [1.0, 0.0]];
    let sp0 = mul2(&s, &p0);
    let mut a = sp0;
    for i in 0..2 {
        for j in 0..2 {
            a[i][j] += p1[i][j];
        }
    }
    let mut o = [[0.0; 4]; 4];
    for term in [kron(&p0, &p0), kron(&p1, &p1), kron(&sp0, &p1), kron(&p1, &sp0)] {
        for i in 0..4 {
            for j in 0..4 {
                o[i][j] += term[i][j];
            }
        }
    }
    IndexMatrices { p0, p1, s, a, o }
}

/// Gaussian interaction kernel s·exp(−d²/2r²), d the periodic distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Kernel {
    pub strength: f64,
    pub range: f64,
}

impl Kernel {
    pub const ZERO: Kernel = Kernel {
        strength: 0.0,
        range: 1.0,
    };
}

/// Gaussian wave packet exp(−(x − c)²/4w² + ikx), periodically wrapped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Packet {
    pub center: f64,
    pub width: f64,
    #[serde(default)]
    pub momentum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub atoms: usize,
    pub grid_points: usize,
    pub spacing: f64,
    pub particle_mass: f64,
    pub atom_mass: f64,
    /// Particle–atom potential U(y, x).
    pub particle_atom: Kernel,
    /// Atom–atom potential V(x, x′).
    #[serde(default = "zero_kernel")]
    pub atom_atom: Kernel,
    pub particle: Packet,
    /// One packet per atom.
    pub atom_packets: Vec<Packet>,
    /// Symmetrize ψ over atom permutations.
    #[serde(default)]
    pub bose_symmetric: bool,
    #[serde(default = "default_cap")]
    pub max_amplitudes: usize,
    /// Allowed relative drift of ‖Σ_q Φ_q‖ during evolution.
    #[serde(default = "default_norm_tolerance")]
    pub norm_tolerance: f64,
}

fn zero_kernel() -> Kernel {
    Kernel::ZERO
}
fn default_cap() -> usize {
    DEFAULT_MAX_AMPLITUDES
}
fn default_norm_tolerance() -> f64 {
    1e-6
}

impl ModelSpec {
    /// Amplitudes per sector, M^(N+1).
    pub fn sector_len(&self) -> usize {
        self.grid_points.pow(self.atoms as u32 + 1)
    }

    pub fn sector_count(&self) -> usize {
        1 << self.atoms
    }

    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        let mut push = |path: &str, reason: String| errors.push(FieldError::new(path, reason));
        if !(1..=3).contains(&self.atoms) {
            push("atoms", format!("must be 1, 2 or 3, got {}", self.atoms));
        }
        if self.grid_points < 3 {
            push("grid_points", format!("must be at least 3, got {}", self.grid_points));
        }
        for (name, v) in [
            ("spacing", self.spacing),
            ("particle_mass", self.particle_mass),
            ("atom_mass", self.atom_mass),
            ("norm_tolerance", self.norm_tolerance),
        ] {
            if !(v.is_finite() && v > 0.0) {
                push(name, format!("must be positive, got {v}"));
            }
        }
        for (name, k) in [("particle_atom", self.particle_atom), ("atom_atom", self.atom_atom)] {
            if !k.strength.is_finite() {
                push(name, "strength must be finite".into());
            }
            if !(k.range.is_finite() && k.range > 0.0) {
                push(name, format!("range must be positive, got {}", k.range));
            }
        }
        if self.atom_packets.len() != self.atoms {
            push(
                "atom_packets",
                format!("expected {} packets, got {}", self.atoms, self.atom_packets.len()),
            );
        }
        for (i, p) in std::iter::once(&self.particle).chain(&self.atom_packets).enumerate() {
            let path = if i == 0 { "particle".to_string() } else { format!("atom_packets[{}]", i - 1) };
            if !(p.width.is_finite() && p.width > 0.0 && p.center.is_finite() && p.momentum.is_finite()) {
                push(&path, "needs finite center and momentum and positive width".into());
            }
        }
        if (1..=3).contains(&self.atoms) && self.grid_points >= 3 {
            let total = self
                .grid_points
                .checked_pow(self.atoms as u32 + 1)
                .and_then(|n| n.checked_mul(self.sector_count()));
            match total {
                Some(n) if n <= self.max_amplitudes => {}
                _ => push(
                    "grid_points",
                    format!(
                        "2^N·M^(N+1) exceeds the cap of {} amplitudes",
                        self.max_amplitudes
                    ),
                ),
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }

    fn length(&self) -> f64 {
        self.grid_points as f64 * self.spacing
    }

    fn periodic_distance(&self, a: usize, b: usize) -> f64 {
        let m = self.grid_points;
        let d = a.abs_diff(b);
        d.min(m - d) as f64 * self.spacing
    }

    fn packet(&self, p: &Packet) -> Vec<c64> {
        let l = self.length();
        (0..self.grid_points)
            .map(|i| {
                let x = i as f64 * self.spacing;
                let mut d = (x - p.center).rem_euclid(l);
                if d > l / 2.0 {
                    d -= l;
                }
                let amp = (-d * d / (4.0 * p.width * p.width)).exp();
                c64::from_polar(amp, p.momentum * x)
            })
            .collect()
    }
}

/// Matrix-free H′ for one model.
#[derive(Debug, Clone)]
pub struct Generator {
    atoms: usize,
    m: usize,
    len: usize,
    /// 1/(2·mass·h²) per axis; axis 0 is the particle.
    kinetic: Vec<f64>,
    /// U(y, xₙ) on the full grid, per atom.
    u: Vec<Vec<f64>>,
    /// V(xₙ, xₙ′) on the full grid, per pair n < n′.
    v: Vec<((usize, usize), Vec<f64>)>,
    norm_bound: f64,
    norm_tolerance: f64,
}

impl Generator {
    pub fn atoms(&self) -> usize {
        self.atoms
    }

    pub fn grid_points(&self) -> usize {
        self.m
    }

    pub fn sector_len(&self) -> usize {
        self.len
    }

    /// Upper bound on the operator norm of H′: kinetic bound plus √2·max|U|
    /// per atom and √3·max|V| per pair (‖A‖ = √2, ‖O‖ = √3).
    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    /// Largest δt accepted by [`evolve_sectors`].
    pub fn max_step(&self) -> f64 {
        RK4_STABILITY / self.norm_bound
    }

    fn coordinate(&self, index: usize, axis: usize) -> usize {
        index / self.m.pow(axis as u32) % self.m
    }

    fn kinetic_into(&self, phi: &[c64], out: &mut [c64]) {
        let m = self.m;
        for (axis, &c) in self.kinetic.iter().enumerate() {
            let stride = m.pow(axis as u32);
            for (idx, o) in out.iter_mut().enumerate() {
                let x = idx / stride % m;
                let up = if x + 1 == m { idx + stride - m * stride } else { idx + stride };
                let down = if x == 0 { idx + (m - 1) * stride } else { idx - stride };
                *o += (phi[idx] * 2.0 - phi[up] - phi[down]) * c;
            }
        }
    }

    /// H′ applied to a stack of sector components.
    pub fn apply(&self, phi: &[Vec<c64>]) -> Vec<Vec<c64>> {
        let sectors = phi.len();
        let mut out = vec![vec![c64::new(0.0, 0.0); self.len]; sectors];
        for q in 0..sectors {
            let target = &mut out[q];
            self.kinetic_into(&phi[q], target);
            for (n, u) in self.u.iter().enumerate() {
                let bit = 1 << n;
                if q & bit != 0 {
                    let (a, b) = (&phi[q], &phi[q ^ bit]);
                    for i in 0..self.len {
                        target[i] += (a[i] + b[i]) * u[i];
                    }
                }
            }
            for ((n, n2), v) in &self.v {
                let (b1, b2) = (1 << n, 1 << n2);
                match (q & b1 != 0, q & b2 != 0) {
                    (false, false) => {
                        for i in 0..self.len {
                            target[i] += phi[q][i] * v[i];
                        }
                    }
                    (true, true) => {
                        let (a, b, c) = (&phi[q], &phi[q ^ b1], &phi[q ^ b2]);
                        for i in 0..self.len {
                            target[i] += (a[i] + b[i] + c[i]) * v[i];
                        }
                    }
                    _ => {}
                }
            }
        }
        out
    }

    /// Whether the block H′_{to←from} has a nonzero entry, found by applying
    /// the assembled operator to a probe supported on sector `from`.
    pub fn block_is_nonzero(&self, to: usize, from: usize) -> bool {
        let sectors = 1 << self.atoms;
        let mut probe = vec![vec![c64::new(0.0, 0.0); self.len]; sectors];
        for (i, p) in probe[from].iter_mut().enumerate() {
            *p = c64::new(1.0 + (i % 7) as f64, (i % 3) as f64);
        }
        self.apply(&probe)[to].iter().any(|z| *z != c64::new(0.0, 0.0))
    }

    /// Full 2^N × 2^N block sparsity pattern, `[to][from]`.
    pub fn coupling_pattern(&self) -> Vec<Vec<bool>> {
        let s = 1 << self.atoms;
        (0..s)
            .map(|to| (0..s).map(|from| self.block_is_nonzero(to, from)).collect())
            .collect()
    }
}

pub fn build_generator(spec: &ModelSpec) -> Result<Generator> {
    spec.validate()?;
    let m = spec.grid_points;
    let len = spec.sector_len();
    let h2 = spec.spacing * spec.spacing;
    let mut kinetic = vec![1.0 / (2.0 * spec.particle_mass * h2)];
    kinetic.extend(std::iter::repeat_n(1.0 / (2.0 * spec.atom_mass * h2), spec.atoms));
    let coord = |idx: usize, axis: usize| idx / m.pow(axis as u32) % m;
    let kernel = |k: &Kernel, a: usize, b: usize| {
        if k.strength == 0.0 {
            return 0.0;
        }
        let d = spec.periodic_distance(a, b);
        k.strength * (-d * d / (2.0 * k.range * k.range)).exp()
    };
    let u: Vec<Vec<f64>> = (0..spec.atoms)
        .map(|n| (0..len).map(|i| kernel(&spec.particle_atom, coord(i, 0), coord(i, n + 1))).collect())
        .collect();
    let mut v = Vec::new();
    for n in 0..spec.atoms {
        for n2 in (n + 1)..spec.atoms {
            let values: Vec<f64> = (0..len)
                .map(|i| kernel(&spec.atom_atom, coord(i, n + 1), coord(i, n2 + 1)))
                .collect();
            v.push(((n, n2), values));
        }
    }
    let max_abs = |vals: &[f64]| vals.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let norm_bound = 4.0 * kinetic.iter().sum::<f64>()
        + u.iter().map(|x| 2f64.sqrt() * max_abs(x)).sum::<f64>()
        + v.iter().map(|(_, x)| 3f64.sqrt() * max_abs(x)).sum::<f64>();
    Ok(Generator {
        atoms: spec.atoms,
        m,
        len,
        kinetic,
        u,
        v,
        norm_bound,
        norm_tolerance: spec.norm_tolerance,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectorStack {
    /// Φ_q indexed by the bitstring q.
    pub sectors: Vec<Vec<c64>>,
    pub time: f64,
}

impl SectorStack {
    /// Φ₀…₀ = ψ·χ normalized to 1, every other sector zero.
    pub fn initial(spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        let m = spec.grid_points;
        let chi = spec.packet(&spec.particle);
        let atom_waves: Vec<Vec<c64>> = spec.atom_packets.iter().map(|p| spec.packet(p)).collect();
        let perms = if spec.bose_symmetric {
            permutations(spec.atoms)
        } else {
            vec![(0..spec.atoms).collect()]
        };
        let len = spec.sector_len();
        let mut psi = vec![c64::new(0.0, 0.0); len];
        for (idx, slot) in psi.iter_mut().enumerate() {
            let y = idx % m;
            let mut sum = c64::new(0.0, 0.0);
            for perm in &perms {
                let mut prod = c64::new(1.0, 0.0);
                for (n, &packet) in perm.iter().enumerate() {
                    prod *= atom_waves[packet][idx / m.pow(n as u32 + 1) % m];
                }
                sum += prod;
            }
            *slot = chi[y] * sum;
        }
        let norm = norm(&psi);
        if norm == 0.0 {
            return Err(Error::config("atom_packets", "symmetrized initial state vanishes"));
        }
        psi.iter_mut().for_each(|z| *z /= norm);
        let mut sectors = vec![vec![c64::new(0.0, 0.0); len]; spec.sector_count()];
        sectors[0] = psi;
        Ok(Self { sectors, time: 0.0 })
    }

    /// Σ_q Φ_q.
    pub fn total(&self) -> Vec<c64> {
        let mut sum = self.sectors[0].clone();
        for s in &self.sectors[1..] {
            for (a, b) in sum.iter_mut().zip(s) {
                *a += b;
            }
        }
        sum
    }

    /// ‖Φ_q‖² per sector.
    pub fn sector_norms(&self) -> Vec<f64> {
        self.sectors.iter().map(|s| norm_sqr(s)).collect()
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

pub fn norm_sqr(v: &[c64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn norm(v: &[c64]) -> f64 {
    norm_sqr(v).sqrt()
}

fn axpy(y: &[Vec<c64>], a: c64, x: &[Vec<c64>]) -> Vec<Vec<c64>> {
    y.iter()
        .zip(x)
        .map(|(ys, xs)| ys.iter().zip(xs).map(|(p, q)| p + a * q).collect())
        .collect()
}

/// RK4 integration of i dΦ/dt = H′Φ for `steps` steps of `dt`.
pub fn evolve_sectors(stack: &SectorStack, gen: &Generator, dt: f64, steps: usize) -> Result<SectorStack> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::config("dt", format!("must be positive, got {dt}")));
    }
    if stack.sectors.len() != 1 << gen.atoms || stack.sectors.iter().any(|s| s.len() != gen.len) {
        return Err(Error::config("stack", "shape does not match the generator"));
    }
    if dt > gen.max_step() {
        return Err(Error::Stability {
            condition: "RK4 δt·‖H′‖ ≤ 2.5",
            dt,
            bound: gen.max_step(),
        });
    }
    let minus_i = c64::new(0.0, -1.0);
    let rhs = |phi: &[Vec<c64>]| -> Vec<Vec<c64>> {
        let mut out = gen.apply(phi);
        out.iter_mut().flatten().for_each(|z| *z *= minus_i);
        out
    };
    let initial_norm = norm(&stack.total());
    let mut phi = stack.sectors.clone();
    let h = c64::new(dt, 0.0);
    for step in 0..steps {
        let k1 = rhs(&phi);
        let k2 = rhs(&axpy(&phi, h * 0.5, &k1));
        let k3 = rhs(&axpy(&phi, h * 0.5, &k2));
        let k4 = rhs(&axpy(&phi, h, &k3));
        for q in 0..phi.len() {
            for i in 0..gen.len {
                phi[q][i] += (k1[q][i] + (k2[q][i] + k3[q][i]) * 2.0 + k4[q][i]) * (dt / 6.0);
            }
        }
        let now = SectorStack { sectors: phi, time: 0.0 };
        let drift = (norm(&now.total()) - initial_norm).abs() / initial_norm.max(f64::MIN_POSITIVE);
        if !drift.is_finite() || drift > gen.norm_tolerance {
            return Err(Error::Numerical(format!(
                "‖Σ_q Φ_q‖ drifted by {drift:e} after {} steps",
                step + 1
            )));
        }
        phi = now.sectors;
    }
    Ok(SectorStack {
        sectors: phi,
        time: stack.time + dt * steps as f64,
    })
}

/// Grid windows `[start, end)` in the particle and atom coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub particle: (usize, usize),
    pub atom: (usize, usize),
}

impl Region {
    pub fn all(grid_points: usize) -> Self {
        Self {
            particle: (0, grid_points),
            atom: (0, grid_points),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntricacyEstimate {
    /// Σ popcount-weighted sector norms over Σ sector norms, cross terms
    /// between sectors dropped.
    pub diagonal: f64,
    /// The same numerator without normalization.
    pub raw: f64,
    /// Re⟨Ψ, Σ_{q∋n} Φ_q⟩ over ‖Ψ‖², cross terms kept. The intricate and
    /// non-intricate parts of Ψ add up to exactly 1 in this measure.
    pub coherent: f64,
}

/// Fraction of intricate atoms in `region`. Atom n counts at a
/// configuration when y lies in the particle window and xₙ in the atom
/// window; with a full region the diagonal value is
/// Σ_q (|q|/N)‖Φ_q‖² / Σ_q ‖Φ_q‖².
pub fn intricacy_from_sectors(stack: &SectorStack, gen: &Generator, region: Region) -> Result<IntricacyEstimate> {
    let m = gen.m;
    let valid = |(a, b): (usize, usize)| a < b && b <= m;
    if !valid(region.particle) || !valid(region.atom) {
        return Err(Error::config("region", "empty or outside the grid"));
    }
    let n_atoms = gen.atoms;
    let total = stack.total();
    let (mut num, mut den, mut coh_num, mut coh_den) = (0.0, 0.0, 0.0, 0.0);
    for idx in 0..gen.len {
        let y = gen.coordinate(idx, 0);
        if y < region.particle.0 || y >= region.particle.1 {
            continue;
        }
        for n in 0..n_atoms {
            let x = gen.coordinate(idx, n + 1);
            if x < region.atom.0 || x >= region.atom.1 {
                continue;
            }
            let mut intricate = c64::new(0.0, 0.0);
            for (q, phi) in stack.sectors.iter().enumerate() {
                let w = phi[idx].norm_sqr();
                den += w;
                if q & (1 << n) != 0 {
                    num += w;
                    intricate += phi[idx];
                }
            }
            coh_num += (total[idx].conj() * intricate).re;
            coh_den += total[idx].norm_sqr();
        }
    }
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
    Ok(IntricacyEstimate {
        diagonal: ratio(num, den),
        raw: num / n_atoms as f64,
        coherent: ratio(coh_num, coh_den),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricStack {
    /// Ξ_r for r = 0…N.
    pub components: Vec<Vec<c64>>,
    pub time: f64,
}

pub fn symmetrize(stack: &SectorStack) -> SymmetricStack {
    let n = stack.sectors.len().trailing_zeros() as usize;
    let len = stack.sectors[0].len();
    let mut components = vec![vec![c64::new(0.0, 0.0); len]; n + 1];
    for (q, phi) in stack.sectors.iter().enumerate() {
        let r = q.count_ones() as usize;
        for (a, b) in components[r].iter_mut().zip(phi) {
            *a += b;
        }
    }
    SymmetricStack {
        components,
        time: stack.time,
    }
}

/// One row of a sector time series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesRow {
    pub time: f64,
    pub sector_norms: Vec<f64>,
    pub intricacy: IntricacyEstimate,
}

/// Evolves in chunks of `every` steps, recording a row before the first
/// chunk and after each one.
pub fn evolve_series(
    stack: &SectorStack,
    gen: &Generator,
    dt: f64,
    steps: usize,
    every: usize,
    region: Region,
) -> Result<(SectorStack, Vec<SeriesRow>)> {
    if every == 0 {
        return Err(Error::config("record_every", "must be at least 1"));
    }
    let row = |s: &SectorStack| -> Result<SeriesRow> {
        Ok(SeriesRow {
            time: s.time,
            sector_norms: s.sector_norms(),
            intricacy: intricacy_from_sectors(s, gen, region)?,
        })
    };
    let mut rows = vec![row(stack)?];
    let mut current = stack.clone();
    let mut done = 0;
    while done < steps {
        let chunk = every.min(steps - done);
        current = evolve_sectors(&current, gen, dt, chunk)?;
        done += chunk;
        rows.push(row(&current)?);
    }
    Ok((current, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn apply2(m: &[[f64; 2]; 2], v: [f64; 2]) -> [f64; 2] {
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    #[test]
    fn index_algebra() {
        let im = build_index_matrices();
        let sum = [[im.p0[0][0] + im.p1[0][0], im.p0[0][1] + im.p1[0][1]], [im.p0[1][0] + im.p1[1][0], im.p0[1][1] + im.p1[1][1]]];
        assert_eq!(sum, [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(mul2(&im.p0, &im.p1), [[0.0; 2]; 2]);
        assert_eq!(mul2(&im.s, &im.s), [[0.0; 2]; 2]);
        // A sends both indices to 1 and never produces 0
        assert_eq!(apply2(&im.a, [1.0, 0.0]), [0.0, 1.0]);
        assert_eq!(apply2(&im.a, [0.0, 1.0]), [0.0, 1.0]);
        assert_eq!(im.a[0], [0.0, 0.0]);
        // O: 00→00, 01→11, 10→11, 11→11
        let image = |col: usize| (0..4).find(|&r| im.o[r][col] != 0.0).unwrap();
        assert_eq!([image(0), image(1), image(2), image(3)], [0, 3, 3, 3]);
        for col in 0..4 {
            assert_eq!((0..4).filter(|&r| im.o[r][col] != 0.0).count(), 1);
        }
    }

    pub(super) fn small_spec(atoms: usize, m: usize) -> ModelSpec {
        ModelSpec {
            atoms,
            grid_points: m,
            spacing: 1.0,
            particle_mass: 1.0,
            atom_mass: 4.0,
            particle_atom: Kernel { strength: 0.8, range: 1.0 },
            atom_atom: Kernel { strength: 0.5, range: 1.0 },
            particle: Packet { center: 3.0, width: 1.5, momentum: 0.6 },
            atom_packets: (0..atoms)
                .map(|n| Packet { center: 8.0 + 2.0 * n as f64, width: 1.2, momentum: 0.0 })
                .collect(),
            bose_symmetric: false,
            max_amplitudes: DEFAULT_MAX_AMPLITUDES,
            norm_tolerance: 1e-6,
        }
    }

    #[test]
    fn spec_validation() {
        let mut spec = small_spec(2, 16);
        assert!(spec.validate().is_ok());
        spec.atoms = 4;
        assert!(spec.validate().is_err());
        let mut spec = small_spec(3, 64);
        assert!(matches!(spec.validate(), Err(Error::Config(_))));
        spec.max_amplitudes = usize::MAX;
        assert!(spec.validate().is_ok());
    }

    #[test]
    fn initial_state_is_normalized_sector_zero() {
        let spec = small_spec(2, 12);
        let stack = SectorStack::initial(&spec).unwrap();
        let norms = stack.sector_norms();
        assert!((norms[0] - 1.0).abs() < 1e-14);
        assert!(norms[1..].iter().all(|&n| n == 0.0));
        let gen = build_generator(&spec).unwrap();
        let f = intricacy_from_sectors(&stack, &gen, Region::all(12)).unwrap();
        assert_eq!(f.diagonal, 0.0);
        assert_eq!(f.coherent, 0.0);
    }

    #[test]
    fn coupling_pattern_is_bitwise_superset() {
        for atoms in 1..=3 {
            let gen = build_generator(&small_spec(atoms, 6)).unwrap();
            let pattern = gen.coupling_pattern();
            for (to, row) in pattern.iter().enumerate() {
                for (from, &nz) in row.iter().enumerate() {
                    let allowed = to & from == from && (to.count_ones() - from.count_ones()) <= 1;
                    assert_eq!(nz, allowed, "N={atoms} block {to}←{from}");
                }
            }
        }
    }

    #[test]
    fn free_generator_is_block_diagonal() {
        let mut spec = small_spec(2, 6);
        spec.particle_atom = Kernel::ZERO;
        spec.atom_atom = Kernel::ZERO;
        let pattern = build_generator(&spec).unwrap().coupling_pattern();
        for (to, row) in pattern.iter().enumerate() {
            for (from, &nz) in row.iter().enumerate() {
                assert_eq!(nz, to == from);
            }
        }
    }

    #[test]
    fn no_coupling_leaves_upper_sector_empty() {
        let mut spec = small_spec(1, 16);
        spec.particle_atom = Kernel::ZERO;
        let gen = build_generator(&spec).unwrap();
        let out = evolve_sectors(&SectorStack::initial(&spec).unwrap(), &gen, 0.05, 40).unwrap();
        assert!(out.sectors[1].iter().all(|z| *z == c64::new(0.0, 0.0)));
    }

    #[test]
    fn unstable_step_is_rejected() {
        let spec = small_spec(1, 8);
        let gen = build_generator(&spec).unwrap();
        let stack = SectorStack::initial(&spec).unwrap();
        assert!(matches!(
            evolve_sectors(&stack, &gen, gen.max_step() * 1.01, 1),
            Err(Error::Stability { .. })
        ));
    }

    #[test]
    fn symmetrize_preserves_the_sum() {
        let spec = small_spec(2, 8);
        let gen = build_generator(&spec).unwrap();
        let stack = evolve_sectors(&SectorStack::initial(&spec).unwrap(), &gen, 0.05, 10).unwrap();
        let sym = symmetrize(&stack);
        assert_eq!(sym.components.len(), 3);
        let a = stack.total();
        let mut b = vec![c64::new(0.0, 0.0); a.len()];
        for c in &sym.components {
            for (x, y) in b.iter_mut().zip(c) {
                *x += y;
            }
        }
        let diff: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-15);
        let one = evolve_sectors(&SectorStack::initial(&small_spec(1, 8)).unwrap(), &build_generator(&small_spec(1, 8)).unwrap(), 0.05, 5).unwrap();
        let s1 = symmetrize(&one);
        assert_eq!(s1.components[0], one.sectors[0]);
        assert_eq!(s1.components[1], one.sectors[1]);
    }

    #[test]
    fn region_must_be_nonempty() {
        let spec = small_spec(1, 8);
        let gen = build_generator(&spec).unwrap();
        let stack = SectorStack::initial(&spec).unwrap();
        let bad = Region { particle: (3, 3), atom: (0, 8) };
        assert!(intricacy_from_sectors(&stack, &gen, bad).is_err());
    }
}
