//! Exact evolution of two atoms on a ring of field modes.
//!
//! The ring has circumference `L` and carries `M` modes with wavenumbers
//! `k = 2πm/L`, `m = ±1 … ±M/2`, and linear dispersion `ω_k = |k|`. Each atom
//! couples through `g_k = g/√(2ω_k M)` times
//! `(σ⁺ + σ⁻)(a_k e^{ikx} + a_k† e^{-ikx})`; the rotating-wave variant keeps
//! only `σ⁺a_k e^{ikx} + σ⁻a_k† e^{-ikx}`. The Fock space is cut at `n_max`
//! photons in total.
//!
//! An optional third level `F` at energy `ω_A + gap` couples to both `G`
//! and `E` with strength `ε` through the same mode functions.
//!
//! The Hamiltonian is stored sparse and diagonalized block by block, where
//! blocks are the connected components of its coupling graph.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fit::{power_law_fit, LinearFit};
use crate::linalg::hermitian_eigen;
use crate::state::{BasisLabel, JointState, Level};

pub const DIM_CAP: usize = 20_000;
/// Intensities below this count as zero in `g²`.
pub const INTENSITY_FLOOR: f64 = 1e-14;
const RESIDUAL_TOL: f64 = 1e-10;
const NORM_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-12;
const MIN_OVERLAP: f64 = 0.9;
const CLUSTER_TOL: f64 = 1e-9;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dressing {
    /// Energy of `F` above `E`.
    pub gap: f64,
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeConfig {
    pub ring_length: f64,
    pub n_modes: usize,
    pub positions: [f64; 2],
    pub omega_a: f64,
    pub coupling: f64,
    pub counter_rotating: bool,
    pub n_max: usize,
    pub dressing: Option<Dressing>,
    /// When false the `G ↔ E` coupling is absent, leaving only the dressing.
    pub ge_coupling: bool,
    pub dim_cap: usize,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self {
            ring_length: 16.0,
            n_modes: 32,
            positions: [0.0, 8.0],
            omega_a: 1.0,
            coupling: 1e-3,
            counter_rotating: true,
            n_max: 2,
            dressing: None,
            ge_coupling: true,
            dim_cap: DIM_CAP,
        }
    }
}

fn binomial(n: usize, k: usize) -> usize {
    let mut acc: u128 = 1;
    for i in 0..k as u128 {
        acc = acc * (n as u128 - i) / (i + 1);
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

impl LatticeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.ring_length.is_finite() && self.ring_length > 0.0) {
            return bad(format!("ring length must be positive, got {}", self.ring_length));
        }
        if self.n_modes < 2 || self.n_modes % 2 != 0 {
            return bad(format!("n_modes must be even and ≥ 2, got {}", self.n_modes));
        }
        for x in self.positions {
            if !(0.0..self.ring_length).contains(&x) {
                return bad(format!("position {x} outside [0, {})", self.ring_length));
            }
        }
        if !(self.omega_a.is_finite() && self.omega_a > 0.0) {
            return bad(format!("omega_a must be positive, got {}", self.omega_a));
        }
        if !(self.coupling.is_finite() && self.coupling >= 0.0) {
            return bad(format!("coupling must be non-negative, got {}", self.coupling));
        }
        if self.n_max < 1 {
            return bad("n_max must be at least 1".into());
        }
        if let Some(d) = self.dressing {
            if !(d.gap.is_finite() && d.gap > 0.0 && d.strength.is_finite() && d.strength >= 0.0) {
                return bad(format!("invalid dressing {d:?}"));
            }
        }
        Ok(())
    }

    pub fn levels(&self) -> &'static [Level] {
        if self.dressing.is_some() {
            &[Level::G, Level::E, Level::F]
        } else {
            &[Level::G, Level::E]
        }
    }

    /// Photon-sector size times the atomic levels squared.
    pub fn dimension(&self) -> usize {
        let l = self.levels().len();
        binomial(self.n_modes + self.n_max, self.n_max).saturating_mul(l * l)
    }

    /// Wavenumbers ordered `+1, -1, +2, -2, …` in units of `2π/L`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n_modes)
            .map(|j| {
                let m = (j / 2 + 1) as f64;
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * 2.0 * PI * m / self.ring_length
            })
            .collect()
    }

    /// Shortest distance between two points on the ring.
    pub fn ring_distance(&self, a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(self.ring_length);
        d.min(self.ring_length - d)
    }
}

/// Ordered basis with label lookup.
#[derive(Debug, Clone)]
pub struct LatticeBasis {
    labels: Vec<BasisLabel>,
    index: HashMap<BasisLabel, usize>,
    n_modes: usize,
}

fn photon_sector(n_modes: usize, n_max: usize) -> Vec<Vec<u8>> {
    fn fill(prefix: &mut Vec<u8>, remaining: usize, n_modes: usize, out: &mut Vec<Vec<u8>>) {
        if prefix.len() == n_modes {
            out.push(prefix.clone());
            return;
        }
        for n in 0..=remaining {
            prefix.push(n as u8);
            fill(prefix, remaining - n, n_modes, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    fill(&mut Vec::with_capacity(n_modes), n_max, n_modes, &mut out);
    out.sort_by_key(|occ| occ.iter().map(|&n| n as usize).sum::<usize>());
    out
}

impl LatticeBasis {
    fn new(levels: &[Level], n_modes: usize, n_max: usize) -> Self {
        let sector = photon_sector(n_modes, n_max);
        let mut labels = Vec::with_capacity(levels.len() * levels.len() * sector.len());
        for &a in levels {
            for &b in levels {
                for occ in &sector {
                    labels.push(BasisLabel::new(a, b, occ.clone()));
                }
            }
        }
        let index = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        Self { labels, index, n_modes }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> &BasisLabel {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &BasisLabel) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn vector(&self, state: &JointState) -> Result<Array1<Complex64>> {
        let mut v = Array1::zeros(self.len());
        for (label, amp) in state.iter() {
            let i = self
                .index_of(label)
                .ok_or_else(|| Error::Domain(format!("label {label:?} is outside the model basis")))?;
            v[i] = *amp;
        }
        Ok(v)
    }

    pub fn joint_state(&self, v: &Array1<Complex64>) -> JointState {
        let mut s = JointState::new(self.n_modes);
        for (i, amp) in v.iter().enumerate() {
            if *amp != c(0.0, 0.0) {
                s.add(self.labels[i].clone(), *amp).expect("basis labels are distinct");
            }
        }
        s
    }
}

/// Eigen-decomposition of one connected block.
#[derive(Debug, Clone)]
pub struct SpectralBlock {
    pub indices: Vec<usize>,
    pub values: Array1<f64>,
    pub vectors: Array2<Complex64>,
}

#[derive(Debug)]
pub struct LatticeModel {
    config: LatticeConfig,
    basis: Arc<LatticeBasis>,
    entries: Vec<(usize, usize, Complex64)>,
    wavenumbers: Vec<f64>,
    spectrum: OnceLock<Vec<SpectralBlock>>,
}

fn level_energy(level: Level, cfg: &LatticeConfig) -> f64 {
    match level {
        Level::G => 0.0,
        Level::E => cfg.omega_a,
        Level::F => cfg.omega_a + cfg.dressing.map_or(0.0, |d| d.gap),
    }
}

/// Atomic transitions `(from, to, strength, raising)`.
fn transitions(cfg: &LatticeConfig) -> Vec<(Level, Level, f64, bool)> {
    let mut t = Vec::new();
    if cfg.ge_coupling && cfg.coupling > 0.0 {
        t.push((Level::G, Level::E, cfg.coupling, true));
        t.push((Level::E, Level::G, cfg.coupling, false));
    }
    if let Some(d) = cfg.dressing.filter(|d| d.strength > 0.0) {
        t.push((Level::G, Level::F, d.strength, true));
        t.push((Level::F, Level::G, d.strength, false));
        t.push((Level::E, Level::F, d.strength, true));
        t.push((Level::F, Level::E, d.strength, false));
    }
    t
}

/// Assembles the truncated Hamiltonian.
pub fn build_model(config: &LatticeConfig) -> Result<LatticeModel> {
    config.validate()?;
    let dim = config.dimension();
    if dim > config.dim_cap {
        return Err(Error::DimensionExceeded { dim, cap: config.dim_cap });
    }
    let basis = LatticeBasis::new(config.levels(), config.n_modes, config.n_max);
    let ks = config.wavenumbers();
    let omegas: Vec<f64> = ks.iter().map(|k| k.abs()).collect();
    let norms: Vec<f64> = omegas.iter().map(|w| 1.0 / (2.0 * w * config.n_modes as f64).sqrt()).collect();
    let trans = transitions(config);
    let mut h: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
    for (j, label) in basis.labels.iter().enumerate() {
        let photons = label.photons() as usize;
        let diag: f64 = level_energy(label.atom1, config)
            + level_energy(label.atom2, config)
            + label.occupations.iter().zip(&omegas).map(|(&n, w)| n as f64 * w).sum::<f64>();
        *h.entry((j, j)).or_default() += c(diag, 0.0);
        for atom in 0..2 {
            let (level, x) = if atom == 0 { (label.atom1, config.positions[0]) } else { (label.atom2, config.positions[1]) };
            for &(from, to, strength, raising) in &trans {
                if from != level {
                    continue;
                }
                for k in 0..config.n_modes {
                    let gk = strength * norms[k];
                    let n = label.occupations[k];
                    let phase = Complex64::from_polar(1.0, ks[k] * x);
                    let mut push = |occ: Vec<u8>, amp: Complex64| {
                        let target = if atom == 0 {
                            BasisLabel::new(to, label.atom2, occ)
                        } else {
                            BasisLabel::new(label.atom1, to, occ)
                        };
                        let i = basis.index[&target];
                        *h.entry((i, j)).or_default() += amp;
                    };
                    if (config.counter_rotating || raising) && n > 0 {
                        let mut occ = label.occupations.clone();
                        occ[k] -= 1;
                        push(occ, phase * gk * (n as f64).sqrt());
                    }
                    if (config.counter_rotating || !raising) && photons < config.n_max {
                        let mut occ = label.occupations.clone();
                        occ[k] += 1;
                        push(occ, phase.conj() * gk * (n as f64 + 1.0).sqrt());
                    }
                }
            }
        }
    }
    for (&(i, j), v) in &h {
        let mirror = h.get(&(j, i)).copied().unwrap_or_default();
        if (v - mirror.conj()).norm() > HERMITIAN_TOL {
            return Err(Error::NumericalFailure(format!("Hamiltonian not Hermitian at ({i}, {j})")));
        }
    }
    let entries = h.into_iter().filter(|(_, v)| v.norm() > 0.0).map(|((i, j), v)| (i, j, v)).collect();
    Ok(LatticeModel { config: config.clone(), basis: Arc::new(basis), entries, wavenumbers: ks, spectrum: OnceLock::new() })
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

impl LatticeModel {
    pub fn config(&self) -> &LatticeConfig {
        &self.config
    }

    pub fn basis(&self) -> &LatticeBasis {
        &self.basis
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    /// Nonzero Hamiltonian entries `(row, col, value)`, sorted.
    pub fn hamiltonian_entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn mode_frequencies(&self) -> Vec<f64> {
        self.wavenumbers.iter().map(|k| k.abs()).collect()
    }

    /// Largest group velocity `|dω/dk|`; the dispersion is linear.
    pub fn max_group_velocity(&self) -> f64 {
        1.0
    }

    pub fn hamiltonian_dense(&self) -> Array2<Complex64> {
        let n = self.dimension();
        let mut m = Array2::zeros((n, n));
        for &(i, j, v) in &self.entries {
            m[[i, j]] = v;
        }
        m
    }

    pub fn apply_hamiltonian(&self, v: &Array1<Complex64>) -> Array1<Complex64> {
        let mut out = Array1::zeros(v.len());
        for &(i, j, h) in &self.entries {
            out[i] += h * v[j];
        }
        out
    }

    fn blocks(&self) -> Vec<Vec<usize>> {
        let n = self.dimension();
        let mut parent: Vec<usize> = (0..n).collect();
        for &(i, j, _) in &self.entries {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..n {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().push(i);
        }
        groups.into_values().collect()
    }

    /// Eigen-decomposition, computed once and cached.
    pub fn spectrum(&self) -> Result<&[SpectralBlock]> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s);
        }
        let blocks = self.blocks();
        let mut position = vec![0usize; self.dimension()];
        let mut owner = vec![0usize; self.dimension()];
        for (b, idx) in blocks.iter().enumerate() {
            for (p, &i) in idx.iter().enumerate() {
                position[i] = p;
                owner[i] = b;
            }
        }
        let mut dense: Vec<Array2<Complex64>> = blocks.iter().map(|idx| Array2::zeros((idx.len(), idx.len()))).collect();
        for &(i, j, v) in &self.entries {
            dense[owner[i]][[position[i], position[j]]] = v;
        }
        let mut out = Vec::with_capacity(blocks.len());
        for (indices, h) in blocks.into_iter().zip(dense) {
            let (values, vectors) = hermitian_eigen(&h)?;
            let residual = (h.dot(&vectors) - &vectors * &values.mapv(|x| c(x, 0.0)))
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            if !(residual <= RESIDUAL_TOL) {
                return Err(Error::NumericalFailure(format!("eigendecomposition residual {residual:e}")));
            }
            out.push(SpectralBlock { indices, values, vectors });
        }
        Ok(self.spectrum.get_or_init(|| out))
    }

    pub fn vacuum_vector(&self, atom1: Level, atom2: Level) -> Result<Array1<Complex64>> {
        let label = BasisLabel::vacuum(atom1, atom2, self.config.n_modes);
        let i = self
            .basis
            .index_of(&label)
            .ok_or_else(|| Error::Domain(format!("levels {atom1}{atom2} not in the model")))?;
        let mut v = Array1::zeros(self.dimension());
        v[i] = c(1.0, 0.0);
        Ok(v)
    }

    /// `exp(-iHt)|ψ⟩` through the cached eigenbasis.
    pub fn evolve(&self, initial: &Array1<Complex64>, t: f64) -> Result<EvolvedState> {
        if initial.len() != self.dimension() {
            return Err(Error::Domain(format!("state has {} entries, model has {}", initial.len(), self.dimension())));
        }
        if !t.is_finite() {
            return Err(Error::Domain(format!("time must be finite, got {t}")));
        }
        if t == 0.0 {
            return Ok(EvolvedState { time: t, vector: initial.clone(), basis: Arc::clone(&self.basis) });
        }
        let mut out = Array1::zeros(self.dimension());
        for block in self.spectrum()? {
            let local: Array1<Complex64> = block.indices.iter().map(|&i| initial[i]).collect();
            if local.iter().all(|z| *z == c(0.0, 0.0)) {
                continue;
            }
            let mut coeff = block.vectors.t().mapv(|z| z.conj()).dot(&local);
            for (a, &lambda) in coeff.iter_mut().zip(block.values.iter()) {
                *a *= Complex64::from_polar(1.0, -lambda * t);
            }
            let evolved = block.vectors.dot(&coeff);
            for (&i, z) in block.indices.iter().zip(evolved) {
                out[i] = z;
            }
        }
        let before: f64 = initial.iter().map(|z| z.norm_sqr()).sum();
        let after: f64 = out.iter().map(|z| z.norm_sqr()).sum();
        if (after - before).abs() > NORM_TOL * before.max(f64::MIN_POSITIVE) {
            return Err(Error::NumericalFailure(format!("norm drift {:e}", (after - before).abs())));
        }
        Ok(EvolvedState { time: t, vector: out, basis: Arc::clone(&self.basis) })
    }

    pub fn evolve_state(&self, initial: &JointState, t: f64) -> Result<EvolvedState> {
        self.evolve(&self.basis.vector(initial)?, t)
    }

    /// Positive-frequency field at `x`: `E⁺(x) = Σ_k i√(ω_k/2M) a_k e^{ikx}`.
    pub fn field_probe(&self, x: f64) -> FieldProbe {
        let m = self.config.n_modes as f64;
        FieldProbe {
            coefficients: self
                .wavenumbers
                .iter()
                .map(|&k| c(0.0, (k.abs() / (2.0 * m)).sqrt()) * Complex64::from_polar(1.0, k * x))
                .collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvolvedState {
    pub time: f64,
    vector: Array1<Complex64>,
    basis: Arc<LatticeBasis>,
}

impl EvolvedState {
    pub fn vector(&self) -> &Array1<Complex64> {
        &self.vector
    }

    pub fn joint_state(&self) -> JointState {
        self.basis.joint_state(&self.vector)
    }

    pub fn amplitude(&self, label: &BasisLabel) -> Complex64 {
        self.basis.index_of(label).map_or(c(0.0, 0.0), |i| self.vector[i])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.vector.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Amplitude on `|G₁E₂, vac⟩`.
pub fn transfer_amplitude(evolved: &EvolvedState) -> Complex64 {
    evolved.amplitude(&BasisLabel::vacuum(Level::G, Level::E, evolved.basis.n_modes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Atom {
    One,
    Two,
}

/// Probability of finding the given atom in `E`.
pub fn excitation_probability(evolved: &EvolvedState, atom: Atom) -> f64 {
    evolved
        .vector
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let l = evolved.basis.label(*i);
            match atom {
                Atom::One => l.atom1 == Level::E,
                Atom::Two => l.atom2 == Level::E,
            }
        })
        .map(|(_, z)| z.norm_sqr())
        .sum()
}

/// Linear combination `Σ_k c_k a_k` of annihilation operators.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldProbe {
    pub coefficients: Vec<Complex64>,
}

impl FieldProbe {
    pub fn single_mode(n_modes: usize, mode: usize) -> Self {
        let mut coefficients = vec![c(0.0, 0.0); n_modes];
        coefficients[mode] = c(1.0, 0.0);
        Self { coefficients }
    }

    pub fn apply(&self, basis: &LatticeBasis, v: &Array1<Complex64>) -> Array1<Complex64> {
        let mut out = Array1::zeros(v.len());
        for (j, amp) in v.iter().enumerate() {
            if *amp == c(0.0, 0.0) {
                continue;
            }
            let label = basis.label(j);
            for (k, coeff) in self.coefficients.iter().enumerate() {
                let n = label.occupations[k];
                if n == 0 || *coeff == c(0.0, 0.0) {
                    continue;
                }
                let mut lowered = label.clone();
                lowered.occupations[k] -= 1;
                let i = basis.index_of(&lowered).expect("lowering stays inside the truncation");
                out[i] += coeff * amp * (n as f64).sqrt();
            }
        }
        out
    }
}

fn norm_sqr(v: &Array1<Complex64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// `⟨E⁻(x)E⁺(x)⟩` with unit detector efficiency.
pub fn glauber_detection(model: &LatticeModel, evolved: &EvolvedState, x: f64) -> f64 {
    norm_sqr(&model.field_probe(x).apply(&evolved.basis, &evolved.vector))
}

/// Equal-time `g²` for two arbitrary probes.
pub fn g2_from_probes(basis: &LatticeBasis, v: &Array1<Complex64>, p1: &FieldProbe, p2: &FieldProbe) -> Result<f64> {
    let once1 = p1.apply(basis, v);
    let i1 = norm_sqr(&once1);
    let i2 = norm_sqr(&p2.apply(basis, v));
    let intensity = i1.min(i2);
    if intensity < INTENSITY_FLOOR {
        return Err(Error::DenominatorUnderflow { intensity });
    }
    Ok(norm_sqr(&p2.apply(basis, &once1)) / (i1 * i2))
}

pub fn g2_coherence(model: &LatticeModel, evolved: &EvolvedState, x1: f64, x2: f64) -> Result<f64> {
    g2_from_probes(&evolved.basis, &evolved.vector, &model.field_probe(x1), &model.field_probe(x2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CausalityRow {
    pub g: f64,
    pub b: Complex64,
    /// `P₂` starting from `|E₁G₂, vac⟩`.
    pub p2_excited: f64,
    /// `P₂` starting from `|G₁G₂, vac⟩`.
    pub p2_ground: f64,
    pub delta_p2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CausalityScan {
    pub rows: Vec<CausalityRow>,
    pub b_fit: LinearFit,
    pub delta_fit: LinearFit,
}

/// Evolves both initial states of atom 1 for each coupling and fits the
/// power laws of `|b|` and `ΔP₂` in `g`.
pub fn causality_scan(base: &LatticeConfig, couplings: &[f64], t: f64) -> Result<CausalityScan> {
    let mut rows = Vec::with_capacity(couplings.len());
    for &g in couplings {
        let model = build_model(&LatticeConfig { coupling: g, ..base.clone() })?;
        let excited = model.evolve(&model.vacuum_vector(Level::E, Level::G)?, t)?;
        let ground = model.evolve(&model.vacuum_vector(Level::G, Level::G)?, t)?;
        let p2_excited = excitation_probability(&excited, Atom::Two);
        let p2_ground = excitation_probability(&ground, Atom::Two);
        rows.push(CausalityRow {
            g,
            b: transfer_amplitude(&excited),
            p2_excited,
            p2_ground,
            delta_p2: (p2_excited - p2_ground).abs(),
        });
    }
    let gs: Vec<f64> = rows.iter().map(|r| r.g).collect();
    let b_fit = power_law_fit(&gs, &rows.iter().map(|r| r.b.norm()).collect::<Vec<_>>())?;
    let delta_fit = power_law_fit(&gs, &rows.iter().map(|r| r.delta_p2).collect::<Vec<_>>())?;
    Ok(CausalityScan { rows, b_fit, delta_fit })
}

/// Exact eigenstate of `model` closest to the basis vector `bare`, taken as
/// the normalized projection onto the (near-)degenerate eigenspace with the
/// largest overlap. Returns the state and its overlap with `bare`.
pub fn nearest_eigenstate(model: &LatticeModel, bare: &Array1<Complex64>) -> Result<(Array1<Complex64>, f64)> {
    let spectrum = model.spectrum()?;
    let mut best: Option<(usize, usize, f64)> = None;
    for (b, block) in spectrum.iter().enumerate() {
        let local: Array1<Complex64> = block.indices.iter().map(|&i| bare[i]).collect();
        let weights = block.vectors.t().mapv(|z| z.conj()).dot(&local);
        for (n, w) in weights.iter().enumerate() {
            if best.is_none_or(|(_, _, o)| w.norm() > o) {
                best = Some((b, n, w.norm()));
            }
        }
    }
    let (b, n, _) = best.ok_or(Error::ZeroState)?;
    let block = &spectrum[b];
    let lambda = block.values[n];
    let tol = CLUSTER_TOL * lambda.abs().max(1.0);
    let local: Array1<Complex64> = block.indices.iter().map(|&i| bare[i]).collect();
    let mut projected = Array1::<Complex64>::zeros(block.indices.len());
    for (m, &mu) in block.values.iter().enumerate() {
        if (mu - lambda).abs() <= tol {
            let v = block.vectors.column(m);
            let w: Complex64 = v.iter().zip(&local).map(|(a, x)| a.conj() * x).sum();
            projected = projected + &v.mapv(|z| z * w);
        }
    }
    let overlap = norm_sqr(&projected).sqrt();
    if overlap < MIN_OVERLAP {
        return Err(Error::EigenstateAmbiguity { overlap });
    }
    let mut out = Array1::zeros(bare.len());
    for (&i, z) in block.indices.iter().zip(projected) {
        out[i] = z / overlap;
    }
    Ok((out, overlap))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DressedRow {
    pub epsilon: f64,
    pub b_dressed: Complex64,
    pub b_bare: Complex64,
    pub relative_difference: f64,
    /// `|⟨bare|dressed⟩|` of the initial states.
    pub overlap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DressedComparison {
    pub rows: Vec<DressedRow>,
    /// Power law of the relative difference in `ε`, over rows with `ε > 0`.
    pub fit: Option<LinearFit>,
}

/// Compares `b` after `Δt` of `G ↔ E` coupling for the dressed initial
/// state (eigenstate of the dressing-only Hamiltonian nearest
/// `|E₁G₂, vac⟩`) and the bare one. Both evolve under the same switched-on
/// Hamiltonian.
pub fn dressed_amplitude_compare(base: &LatticeConfig, gap: f64, epsilons: &[f64], delta_t: f64) -> Result<DressedComparison> {
    let mut rows = Vec::with_capacity(epsilons.len());
    for &epsilon in epsilons {
        let dressing = Some(Dressing { gap, strength: epsilon });
        let off = build_model(&LatticeConfig { dressing, ge_coupling: false, ..base.clone() })?;
        let on = build_model(&LatticeConfig { dressing, ge_coupling: true, ..base.clone() })?;
        let bare = off.vacuum_vector(Level::E, Level::G)?;
        let (dressed, overlap) = nearest_eigenstate(&off, &bare)?;
        let b_dressed = transfer_amplitude(&on.evolve(&dressed, delta_t)?);
        let b_bare = transfer_amplitude(&on.evolve(&bare, delta_t)?);
        if b_bare.norm() == 0.0 {
            return Err(Error::NumericalFailure("bare transfer amplitude vanished".into()));
        }
        rows.push(DressedRow {
            epsilon,
            b_dressed,
            b_bare,
            relative_difference: (b_dressed - b_bare).norm() / b_bare.norm(),
            overlap,
        });
    }
    let fitted: Vec<&DressedRow> = rows.iter().filter(|r| r.epsilon > 0.0 && r.relative_difference > 0.0).collect();
    let fit = if fitted.len() >= 2 {
        Some(power_law_fit(
            &fitted.iter().map(|r| r.epsilon).collect::<Vec<_>>(),
            &fitted.iter().map(|r| r.relative_difference).collect::<Vec<_>>(),
        )?)
    } else {
        None
    };
    Ok(DressedComparison { rows, fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_triangle, QuadOptions};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn small(g: f64) -> LatticeConfig {
        LatticeConfig { n_modes: 8, coupling: g, ..Default::default() }
    }

    fn max_diff(a: &Array1<Complex64>, b: &Array1<Complex64>) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn dimension_cap() {
        let cfg = LatticeConfig { n_modes: 200, ..Default::default() };
        assert!(matches!(build_model(&cfg), Err(Error::DimensionExceeded { .. })));
        assert_eq!(small(0.1).dimension(), 4 * 45);
        let dressed = LatticeConfig { dressing: Some(Dressing { gap: 1.0, strength: 0.0 }), ..small(0.1) };
        assert_eq!(build_model(&dressed).unwrap().dimension(), 9 * 45);
    }

    #[test]
    fn invalid_configs() {
        for cfg in [
            LatticeConfig { n_modes: 7, ..small(0.1) },
            LatticeConfig { positions: [0.0, 16.0], ..small(0.1) },
            LatticeConfig { n_max: 0, ..small(0.1) },
            LatticeConfig { coupling: -1.0, ..small(0.1) },
        ] {
            assert!(matches!(build_model(&cfg), Err(Error::InvalidConfig(_))), "{cfg:?}");
        }
    }

    #[test]
    fn zero_coupling_is_diagonal() {
        let model = build_model(&small(0.0)).unwrap();
        assert!(model.hamiltonian_entries().iter().all(|&(i, j, _)| i == j));
        let v = model.vacuum_vector(Level::E, Level::G).unwrap();
        let e = model.evolve(&v, 3.0).unwrap();
        assert_eq!(transfer_amplitude(&e), c(0.0, 0.0));
        let amp = e.amplitude(&BasisLabel::vacuum(Level::E, Level::G, 8));
        assert_relative_eq!(amp.norm(), 1.0, max_relative = 1e-14);
        assert!((amp - Complex64::from_polar(1.0, -3.0)).norm() < 1e-13);
    }

    #[test]
    fn evolution_is_a_group() {
        let model = build_model(&small(0.2)).unwrap();
        let v = model.vacuum_vector(Level::E, Level::G).unwrap();
        let at_zero = model.evolve(&v, 0.0).unwrap();
        assert_eq!(at_zero.vector(), &v);
        assert_eq!(transfer_amplitude(&at_zero), c(0.0, 0.0));
        let two_step = model.evolve(model.evolve(&v, 1.3).unwrap().vector(), 2.1).unwrap();
        let one_step = model.evolve(&v, 3.4).unwrap();
        assert!(max_diff(two_step.vector(), one_step.vector()) < 1e-11);
        assert!((one_step.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectrum_splits_by_parity() {
        let full = build_model(&small(0.1)).unwrap();
        assert_eq!(full.spectrum().unwrap().len(), 2);
        let rwa = build_model(&LatticeConfig { counter_rotating: false, ..small(0.1) }).unwrap();
        assert!(rwa.spectrum().unwrap().len() > 2);
    }

    #[test]
    fn counter_rotating_terms_change_excitation_number() {
        let full = build_model(&small(0.1)).unwrap();
        let rwa = build_model(&LatticeConfig { counter_rotating: false, ..small(0.1) }).unwrap();
        let excitations = |l: &BasisLabel| {
            (l.atom1 == Level::E) as i64 + (l.atom2 == Level::E) as i64 + l.photons() as i64
        };
        let rwa_entries: BTreeMap<(usize, usize), Complex64> =
            rwa.hamiltonian_entries().iter().map(|&(i, j, v)| ((i, j), v)).collect();
        let mut extra = 0;
        for &(i, j, v) in full.hamiltonian_entries() {
            let delta = excitations(full.basis().label(i)) - excitations(full.basis().label(j));
            match rwa_entries.get(&(i, j)) {
                Some(w) => {
                    assert!((v - w).norm() < 1e-15);
                    assert_eq!(delta, 0);
                }
                None => {
                    assert_eq!(delta.abs(), 2);
                    extra += 1;
                }
            }
        }
        assert_eq!(extra + rwa_entries.len(), full.hamiltonian_entries().len());
        assert!(extra > 0);
    }

    #[test]
    fn excitation_probabilities() {
        let model = build_model(&small(0.3)).unwrap();
        let v = model.vacuum_vector(Level::E, Level::G).unwrap();
        let start = model.evolve(&v, 0.0).unwrap();
        assert_relative_eq!(excitation_probability(&start, Atom::One), 1.0, max_relative = 1e-14);
        assert!(excitation_probability(&start, Atom::Two) < 1e-28);
        let later = model.evolve(&v, 5.0).unwrap();
        let mut by_level = [0.0; 4];
        for (i, z) in later.vector().iter().enumerate() {
            let l = model.basis().label(i);
            by_level[2 * l.atom1.index() + l.atom2.index()] += z.norm_sqr();
        }
        assert_relative_eq!(by_level.iter().sum::<f64>(), 1.0, max_relative = 1e-12);
        let p1 = excitation_probability(&later, Atom::One);
        assert_relative_eq!(p1, by_level[2] + by_level[3], max_relative = 1e-12);
    }

    /// Second-order Dyson term with `H₀ = diag H`, `V = H - H₀`.
    fn dyson_second_order(model: &LatticeModel, from: usize, to: usize, t: f64) -> Complex64 {
        let n = model.dimension();
        let mut energy = vec![0.0; n];
        let mut v_from = BTreeMap::new();
        let mut v_to = BTreeMap::new();
        for &(i, j, h) in model.hamiltonian_entries() {
            if i == j {
                energy[i] = h.re;
            } else if j == from {
                v_from.insert(i, h);
            } else if i == to {
                v_to.insert(j, h);
            }
        }
        let paths: Vec<(f64, Complex64)> = v_from
            .iter()
            .filter_map(|(m, a)| v_to.get(m).map(|b| (energy[*m], a * b)))
            .collect();
        let (ei, ef) = (energy[from], energy[to]);
        let integral = integrate_triangle(
            |t1, t2| {
                paths
                    .iter()
                    .map(|&(em, w)| w * Complex64::from_polar(1.0, (ef - em) * t1 + (em - ei) * t2))
                    .sum()
            },
            t,
            1.0,
            &QuadOptions::relative(1e-10),
        )
        .unwrap();
        -integral.value * Complex64::from_polar(1.0, -ef * t)
    }

    #[test]
    fn exact_amplitude_matches_second_order_dyson() {
        for (g, t) in [(1e-3, 4.0), (1e-2, 2.5)] {
            let model = build_model(&small(g)).unwrap();
            let basis = model.basis();
            let from = basis.index_of(&BasisLabel::vacuum(Level::E, Level::G, 8)).unwrap();
            let to = basis.index_of(&BasisLabel::vacuum(Level::G, Level::E, 8)).unwrap();
            let exact = transfer_amplitude(&model.evolve(&model.vacuum_vector(Level::E, Level::G).unwrap(), t).unwrap());
            let dyson = dyson_second_order(&model, from, to, t);
            assert!((exact - dyson).norm() <= 1e-3 * dyson.norm(), "g={g}: {exact} vs {dyson}");
        }
    }

    #[test]
    fn truncation_is_stable() {
        for g in [1e-3, 1e-2, 3e-2] {
            let b = |n_max| {
                let model = build_model(&LatticeConfig { n_max, ..small(g) }).unwrap();
                transfer_amplitude(&model.evolve(&model.vacuum_vector(Level::E, Level::G).unwrap(), 4.0).unwrap())
            };
            let (b1, b2) = (b(1), b(2));
            assert!((b2 - b1).norm() / b2.norm() <= 10.0 * (g / 1.0f64).powi(2), "g={g}");
        }
    }

    #[test]
    fn glauber_detection_properties() {
        let cfg = LatticeConfig { n_modes: 16, coupling: 0.1, counter_rotating: false, ..Default::default() };
        let model = build_model(&cfg).unwrap();
        let vacuum = model.evolve(&model.vacuum_vector(Level::G, Level::G).unwrap(), 2.0).unwrap();
        assert_eq!(glauber_detection(&model, &vacuum, 3.0), 0.0);
        let source = model.evolve(&model.vacuum_vector(Level::E, Level::G).unwrap(), 1.0).unwrap();
        let far = 8.0;
        assert!(cfg.ring_distance(far, cfg.positions[0]) > model.max_group_velocity() * source.time);
        assert!(glauber_detection(&model, &source, far) > 10.0 * INTENSITY_FLOOR);
        for i in 0..32 {
            assert!(glauber_detection(&model, &source, i as f64 * 0.5) >= 0.0);
        }
    }

    #[test]
    fn g2_examples() {
        let model = build_model(&LatticeConfig { n_max: 1, coupling: 0.2, ..small(0.2) }).unwrap();
        let single = model.evolve(&model.vacuum_vector(Level::E, Level::G).unwrap(), 3.0).unwrap();
        assert_eq!(g2_coherence(&model, &single, 1.0, 5.0).unwrap(), 0.0);

        let fock = build_model(&small(0.0)).unwrap();
        let basis = fock.basis();
        let (a0, a1, b0, b1) = (0.8, 0.6, c(0.28, 0.0), c(0.0, 0.96));
        let mut v = Array1::zeros(basis.len());
        for (na, nb, amp) in [(0u8, 0u8, b0 * a0), (1, 0, b0 * a1), (0, 1, b1 * a0), (1, 1, b1 * a1)] {
            let mut occ = vec![0; 8];
            occ[2] = na;
            occ[5] = nb;
            v[basis.index_of(&BasisLabel::new(Level::G, Level::G, occ)).unwrap()] = amp;
        }
        let g2 = g2_from_probes(basis, &v, &FieldProbe::single_mode(8, 2), &FieldProbe::single_mode(8, 5)).unwrap();
        assert!((g2 - 1.0).abs() < 1e-9);

        let empty = fock.evolve(&fock.vacuum_vector(Level::G, Level::G).unwrap(), 1.0).unwrap();
        assert!(matches!(g2_coherence(&fock, &empty, 0.0, 1.0), Err(Error::DenominatorUnderflow { .. })));
    }

    #[test]
    fn dressed_comparison() {
        let base = LatticeConfig { n_modes: 6, ..small(1e-2) };
        let eps = [0.0, 1e-4, 1e-3];
        let cmp = dressed_amplitude_compare(&base, 1.0, &eps, 3.0).unwrap();
        assert!(cmp.rows[0].relative_difference <= 1e-10);
        for r in &cmp.rows[1..] {
            assert!(1.0 - r.overlap <= 10.0 * r.epsilon * r.epsilon, "{r:?}");
        }
        assert!(cmp.fit.unwrap().slope >= 1.0);
    }

    #[test]
    fn degenerate_exchange_pair_is_ambiguous() {
        let model = build_model(&LatticeConfig { n_max: 1, ..small(0.1) }).unwrap();
        let bare = model.vacuum_vector(Level::E, Level::G).unwrap();
        assert!(matches!(nearest_eigenstate(&model, &bare), Err(Error::EigenstateAmbiguity { .. })));
    }

    #[test]
    fn label_round_trip() {
        let model = build_model(&small(0.1)).unwrap();
        let e = model.evolve(&model.vacuum_vector(Level::E, Level::G).unwrap(), 2.0).unwrap();
        let joint = e.joint_state();
        let back = model.basis().vector(&joint).unwrap();
        assert!(max_diff(&back, e.vector()) == 0.0);
        let outside = JointState::from_entries(3, [(BasisLabel::vacuum(Level::E, Level::G, 3), c(1.0, 0.0))]).unwrap();
        assert!(model.evolve_state(&outside, 1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn hamiltonian_is_hermitian(
            half_modes in 1usize..4,
            n_max in 1usize..3,
            x1 in 0.0f64..16.0,
            x2 in 0.0f64..16.0,
            g in 0.0f64..1.0,
            cr in any::<bool>(),
            eps in proptest::option::of(0.0f64..0.5),
        ) {
            let cfg = LatticeConfig {
                n_modes: 2 * half_modes,
                n_max,
                positions: [x1, x2],
                coupling: g,
                counter_rotating: cr,
                dressing: eps.map(|strength| Dressing { gap: 0.7, strength }),
                ..Default::default()
            };
            let h = build_model(&cfg).unwrap().hamiltonian_dense();
            let dev = (&h - &h.t().mapv(|z| z.conj())).iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(dev <= 1e-12);
        }

        #[test]
        fn evolution_preserves_norm(g in 0.0f64..0.5, t in 0.0f64..20.0) {
            let model = build_model(&LatticeConfig { n_modes: 4, ..small(g) }).unwrap();
            let e = model.evolve(&model.vacuum_vector(Level::E, Level::G).unwrap(), t).unwrap();
            prop_assert!((e.norm_sqr() - 1.0).abs() <= 1e-12);
        }
    }
}
