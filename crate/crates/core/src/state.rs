//! Joint states of two atoms and a truncated set of field modes, and the
//! two-qubit reductions used to certify entanglement.
//!
//! Basis labels are ordered atom 1 level, atom 2 level (both `G < E < F`),
//! then photon occupations lexicographically. Two-qubit objects use the
//! order `|G₁G₂⟩, |G₁E₂⟩, |E₁G₂⟩, |E₁E₂⟩`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use ndarray_linalg::SVD;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::hermitian_eigen;

/// A state is a product across a cut iff exactly one Schmidt value exceeds this.
pub const PRODUCT_TOL: f64 = 1e-10;

/// Validation tolerance for densities and normalized states.
pub const STATE_TOL: f64 = 1e-12;

const EMPTY_PROJECTION: f64 = 1e-15;

const EIGEN_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    G,
    E,
    F,
}

impl Level {
    pub fn index(self) -> usize {
        self as usize
    }

    /// Index within the two-level `{G, E}` subspace.
    pub fn qubit(self) -> Option<usize> {
        match self {
            Level::G => Some(0),
            Level::E => Some(1),
            Level::F => None,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::G => "G",
            Level::E => "E",
            Level::F => "F",
        })
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "G" | "g" => Ok(Level::G),
            "E" | "e" => Ok(Level::E),
            "F" | "f" => Ok(Level::F),
            other => Err(Error::Domain(format!("unknown atomic level '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisLabel {
    pub atom1: Level,
    pub atom2: Level,
    pub occupations: Vec<u8>,
}

impl BasisLabel {
    pub fn new(atom1: Level, atom2: Level, occupations: Vec<u8>) -> Self {
        Self { atom1, atom2, occupations }
    }

    pub fn vacuum(atom1: Level, atom2: Level, n_modes: usize) -> Self {
        Self::new(atom1, atom2, vec![0; n_modes])
    }

    pub fn photons(&self) -> u32 {
        self.occupations.iter().map(|&n| n as u32).sum()
    }

    pub fn is_vacuum(&self) -> bool {
        self.occupations.iter().all(|&n| n == 0)
    }
}

/// Sparse amplitude map over [`BasisLabel`]s with a fixed mode count.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    n_modes: usize,
    amplitudes: BTreeMap<BasisLabel, Complex64>,
    normalized: bool,
}

impl JointState {
    pub fn new(n_modes: usize) -> Self {
        Self { n_modes, amplitudes: BTreeMap::new(), normalized: false }
    }

    /// Builds a state from unique labels.
    pub fn from_entries<I>(n_modes: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (BasisLabel, Complex64)>,
    {
        let mut state = Self::new(n_modes);
        for (label, amp) in entries {
            state.check_label(&label)?;
            if state.amplitudes.insert(label.clone(), amp).is_some() {
                return Err(Error::Domain(format!("duplicate basis label {label:?}")));
            }
        }
        state.normalized = state.norm_is_unit();
        Ok(state)
    }

    fn check_label(&self, label: &BasisLabel) -> Result<()> {
        if label.occupations.len() != self.n_modes {
            return Err(Error::Domain(format!(
                "label has {} occupations, state has {} modes",
                label.occupations.len(),
                self.n_modes
            )));
        }
        Ok(())
    }

    fn norm_is_unit(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= STATE_TOL
    }

    /// Adds `amp` to the amplitude at `label`.
    pub fn add(&mut self, label: BasisLabel, amp: Complex64) -> Result<()> {
        self.check_label(&label)?;
        *self.amplitudes.entry(label).or_insert(Complex64::new(0.0, 0.0)) += amp;
        self.normalized = self.norm_is_unit();
        Ok(())
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn amplitude(&self, label: &BasisLabel) -> Complex64 {
        self.amplitudes.get(label).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BasisLabel, &Complex64)> {
        self.amplitudes.iter()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// Weight of all labels with at least one atom in `F`.
    pub fn f_weight(&self) -> f64 {
        self.amplitudes
            .iter()
            .filter(|(l, _)| l.atom1 == Level::F || l.atom2 == Level::F)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Line-oriented fixture text: a `# n_modes = M` line, a header, then one
    /// `atom1,atom2,occupations,re,im` record per label with space-separated
    /// occupations.
    pub fn to_fixture(&self) -> String {
        let mut out = format!("# n_modes = {}\natom1,atom2,occupations,re,im\n", self.n_modes);
        for (label, amp) in &self.amplitudes {
            let occ: Vec<String> = label.occupations.iter().map(|n| n.to_string()).collect();
            out.push_str(&format!("{},{},{},{},{}\n", label.atom1, label.atom2, occ.join(" "), amp.re, amp.im));
        }
        out
    }

    pub fn from_fixture(text: &str) -> Result<Self> {
        let mut n_modes = None;
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let bad = |what: &str| Error::Domain(format!("fixture line {}: {what}", lineno + 1));
            if line.is_empty() || line.starts_with("atom1,") {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((key, value)) = rest.split_once('=') {
                    if key.trim() == "n_modes" {
                        n_modes = Some(value.trim().parse::<usize>().map_err(|_| bad("bad n_modes"))?);
                    }
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(bad("expected 5 fields"));
            }
            let occupations = fields[2]
                .split_whitespace()
                .map(|t| t.parse::<u8>().map_err(|_| bad("bad occupation")))
                .collect::<Result<Vec<u8>>>()?;
            let re = fields[3].trim().parse::<f64>().map_err(|_| bad("bad re"))?;
            let im = fields[4].trim().parse::<f64>().map_err(|_| bad("bad im"))?;
            let label = BasisLabel::new(fields[0].parse()?, fields[1].parse()?, occupations);
            entries.push((label, Complex64::new(re, im)));
        }
        let n_modes = match n_modes {
            Some(n) => n,
            None => entries.first().map(|(l, _)| l.occupations.len()).unwrap_or(0),
        };
        Self::from_entries(n_modes, entries)
    }
}

/// Rescales to unit norm.
pub fn normalize(state: &JointState) -> Result<JointState> {
    let norm = state.norm_sqr().sqrt();
    if !(norm >= 1e-300) {
        return Err(Error::ZeroState);
    }
    let amplitudes = state.amplitudes.iter().map(|(l, a)| (l.clone(), a / norm)).collect();
    Ok(JointState { n_modes: state.n_modes, amplitudes, normalized: true })
}

/// Pure state of two qubits in the order `GG, GE, EG, EE`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitPure {
    pub amps: [Complex64; 4],
}

impl TwoQubitPure {
    pub fn new(gg: Complex64, ge: Complex64, eg: Complex64, ee: Complex64) -> Self {
        Self { amps: [gg, ge, eg, ee] }
    }

    /// `a|E₁G₂⟩ + b|G₁E₂⟩`
    pub fn exchange(a: Complex64, b: Complex64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self::new(zero, b, a, zero)
    }

    pub fn gg(&self) -> Complex64 {
        self.amps[0]
    }
    pub fn ge(&self) -> Complex64 {
        self.amps[1]
    }
    pub fn eg(&self) -> Complex64 {
        self.amps[2]
    }
    pub fn ee(&self) -> Complex64 {
        self.amps[3]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if !(n >= 1e-300) {
            return Err(Error::ZeroState);
        }
        Ok(Self { amps: self.amps.map(|a| a / n) })
    }

    /// Concurrence of the normalized state, `2|a_GG a_EE - a_GE a_EG|`.
    pub fn concurrence(&self) -> f64 {
        let n = self.norm_sqr();
        if n == 0.0 {
            return 0.0;
        }
        (2.0 * (self.gg() * self.ee() - self.ge() * self.eg()).norm() / n).min(1.0)
    }

    /// Schmidt values across the atom 1 | atom 2 cut, non-increasing.
    pub fn schmidt_values(&self) -> Vec<f64> {
        let m = Array2::from_shape_vec((2, 2), self.amps.to_vec()).expect("2x2");
        singular_values(m.view())
    }

    pub fn density(&self) -> Result<TwoQubitDensity> {
        let v = self.normalized()?;
        let m = Array2::from_shape_fn((4, 4), |(i, j)| v.amps[i] * v.amps[j].conj());
        TwoQubitDensity::new(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VacuumProjection {
    /// Zero-photon amplitudes with both atoms in `{G, E}`, not renormalized.
    pub pure: TwoQubitPure,
    /// Norm of everything else.
    pub residual_norm: f64,
    /// All vacuum-sector amplitudes are below 1e-15.
    pub empty: bool,
}

/// Restricts the state to the zero-photon, `{G, E}` sector.
pub fn project_vacuum(state: &JointState) -> VacuumProjection {
    let mut amps = [Complex64::new(0.0, 0.0); 4];
    let mut residual = 0.0;
    for (label, amp) in state.iter() {
        match (label.is_vacuum(), label.atom1.qubit(), label.atom2.qubit()) {
            (true, Some(i), Some(j)) => amps[2 * i + j] += amp,
            _ => residual += amp.norm_sqr(),
        }
    }
    let empty = amps.iter().all(|a| a.norm() < EMPTY_PROJECTION);
    VacuumProjection { pure: TwoQubitPure { amps }, residual_norm: residual.sqrt(), empty }
}

/// One tensor factor of the joint space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Subsystem {
    Atom1,
    Atom2,
    Mode(usize),
}

/// Assignment of every tensor factor to side A or side B.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bipartition {
    n_modes: usize,
    side_a: BTreeSet<Subsystem>,
}

impl Bipartition {
    /// Factors listed go to side A, the rest to side B.
    pub fn new(n_modes: usize, side_a: &[Subsystem]) -> Result<Self> {
        for s in side_a {
            if let Subsystem::Mode(k) = s {
                if *k >= n_modes {
                    return Err(Error::Domain(format!("mode {k} out of range for {n_modes} modes")));
                }
            }
        }
        Ok(Self { n_modes, side_a: side_a.iter().copied().collect() })
    }

    /// Atom 1 alone against atom 2 and the whole field.
    pub fn atom1_vs_rest(n_modes: usize) -> Self {
        Self { n_modes, side_a: [Subsystem::Atom1].into_iter().collect() }
    }

    pub fn contains(&self, s: Subsystem) -> bool {
        self.side_a.contains(&s)
    }

    fn split_key(&self, label: &BasisLabel) -> (Vec<u8>, Vec<u8>) {
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut push = |s: Subsystem, v: u8| if self.contains(s) { a.push(v) } else { b.push(v) };
        push(Subsystem::Atom1, label.atom1.index() as u8);
        push(Subsystem::Atom2, label.atom2.index() as u8);
        for (k, &n) in label.occupations.iter().enumerate() {
            push(Subsystem::Mode(k), n);
        }
        (a, b)
    }
}

fn singular_values(m: ArrayView2<Complex64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let (_, s, _) = m.to_owned().svd(false, false).expect("SVD of a finite matrix");
    let mut s = s.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Singular values of the amplitude matrix reshaped by `cut`, non-increasing.
///
/// Only sub-labels that actually occur become rows or columns; all-zero
/// rows and columns do not change the spectrum.
pub fn schmidt_values(state: &JointState, cut: &Bipartition) -> Result<Vec<f64>> {
    if cut.n_modes != state.n_modes {
        return Err(Error::Domain("bipartition and state disagree on the mode count".into()));
    }
    let mut rows: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut cols: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut entries = Vec::with_capacity(state.len());
    for (label, amp) in state.iter() {
        let (a, b) = cut.split_key(label);
        let nr = rows.len();
        let i = *rows.entry(a).or_insert(nr);
        let nc = cols.len();
        let j = *cols.entry(b).or_insert(nc);
        entries.push((i, j, *amp));
    }
    let mut m = Array2::<Complex64>::zeros((rows.len(), cols.len()));
    for (i, j, amp) in entries {
        m[[i, j]] += amp;
    }
    Ok(singular_values(m.view()))
}

/// Exactly one Schmidt value above [`PRODUCT_TOL`].
pub fn is_product(values: &[f64]) -> bool {
    values.iter().filter(|&&v| v > PRODUCT_TOL).count() == 1
}

/// Hermitian, positive, unit-trace 4×4 matrix over `GG, GE, EG, EE`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitDensity {
    matrix: Array2<Complex64>,
}

impl TwoQubitDensity {
    pub fn new(matrix: Array2<Complex64>) -> Result<Self> {
        if matrix.dim() != (4, 4) {
            return Err(Error::InvalidDensity(format!("shape {:?}", matrix.dim())));
        }
        let herm = matrix
            .indexed_iter()
            .map(|((i, j), v)| (v - matrix[[j, i]].conj()).norm())
            .fold(0.0, f64::max);
        if herm > STATE_TOL {
            return Err(Error::InvalidDensity(format!("not Hermitian (deviation {herm:e})")));
        }
        let trace: Complex64 = (0..4).map(|i| matrix[[i, i]]).sum();
        if (trace - 1.0).norm() > STATE_TOL {
            return Err(Error::InvalidDensity(format!("trace {trace}")));
        }
        let (eig, _) = hermitian_eigen(&matrix)?;
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -STATE_TOL {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[[row, col]]
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let (eig, _) = hermitian_eigen(&self.matrix).expect("validated Hermitian matrix");
        eig.to_vec()
    }

    pub fn rank(&self, tol: f64) -> usize {
        self.eigenvalues().into_iter().filter(|&v| v > tol).count()
    }

    /// Four lines of `re im` pairs, one line per row.
    pub fn to_fixture(&self) -> String {
        let mut out = String::new();
        for i in 0..4 {
            let row: Vec<String> = (0..4).map(|j| format!("{} {}", self.matrix[[i, j]].re, self.matrix[[i, j]].im)).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_fixture(text: &str) -> Result<Self> {
        let rows: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).collect();
        if rows.len() != 4 {
            return Err(Error::InvalidDensity(format!("expected 4 rows, got {}", rows.len())));
        }
        let mut m = Array2::<Complex64>::zeros((4, 4));
        for (i, row) in rows.iter().enumerate() {
            let vals = row
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| Error::InvalidDensity(format!("row {}: bad number '{t}'", i + 1))))
                .collect::<Result<Vec<f64>>>()?;
            if vals.len() != 8 {
                return Err(Error::InvalidDensity(format!("row {}: expected 8 numbers", i + 1)));
            }
            for j in 0..4 {
                m[[i, j]] = Complex64::new(vals[2 * j], vals[2 * j + 1]);
            }
        }
        Self::new(m)
    }
}

/// Traces out the field. The result is divided by the total weight so it
/// carries unit trace.
pub fn partial_trace_field(state: &JointState) -> Result<TwoQubitDensity> {
    if let Some((_, amp)) = state
        .iter()
        .find(|(l, a)| (l.atom1 == Level::F || l.atom2 == Level::F) && a.norm() > STATE_TOL)
    {
        return Err(Error::InvalidLevels { weight: amp.norm_sqr() });
    }
    let mut sectors: BTreeMap<&[u8], [Complex64; 4]> = BTreeMap::new();
    for (label, amp) in state.iter() {
        if let (Some(i), Some(j)) = (label.atom1.qubit(), label.atom2.qubit()) {
            sectors.entry(&label.occupations).or_default()[2 * i + j] += amp;
        }
    }
    let mut rho = Array2::<Complex64>::zeros((4, 4));
    for v in sectors.values() {
        for i in 0..4 {
            for j in 0..4 {
                rho[[i, j]] += v[i] * v[j].conj();
            }
        }
    }
    let trace: f64 = (0..4).map(|i| rho[[i, i]].re).sum();
    if !(trace >= 1e-300) {
        return Err(Error::ZeroState);
    }
    rho.mapv_inplace(|v| v / trace);
    // Symmetrize away the last bits of round-off.
    let rho = Array2::from_shape_fn((4, 4), |(i, j)| 0.5 * (rho[[i, j]] + rho[[j, i]].conj()));
    TwoQubitDensity::new(rho)
}

/// Two-qubit concurrence `max(0, λ₁ - λ₂ - λ₃ - λ₄)`, with `λᵢ` the square
/// roots of the eigenvalues of `ρ (Y⊗Y) ρ* (Y⊗Y)`.
///
/// The eigenvalues are taken from the Hermitian `√ρ ρ̃ √ρ`, which has the
/// same spectrum.
pub fn concurrence(rho: &TwoQubitDensity) -> f64 {
    let m = rho.matrix();
    let (eig, vecs) = hermitian_eigen(m).expect("validated Hermitian matrix");
    // Round-off eigenvalues of a rank-deficient ρ would otherwise leak
    // ~1e-8 into √ρ.
    let sqrt_diag = eig.mapv(|v| if v > EIGEN_FLOOR { v.sqrt() } else { 0.0 });
    let sqrt_rho = Array2::from_shape_fn((4, 4), |(i, j)| {
        (0..4).map(|k| vecs[[i, k]] * sqrt_diag[k] * vecs[[j, k]].conj()).sum::<Complex64>()
    });
    // (Y⊗Y) is the anti-diagonal (-1, 1, 1, -1); conjugation by it flips the
    // index order and multiplies by the product of the two signs.
    let sign = [-1.0, 1.0, 1.0, -1.0];
    let tilde = Array2::from_shape_fn((4, 4), |(i, j)| m[[3 - i, 3 - j]].conj() * sign[i] * sign[j]);
    let inner = sqrt_rho.dot(&tilde).dot(&sqrt_rho);
    let inner = Array2::from_shape_fn((4, 4), |(i, j)| 0.5 * (inner[[i, j]] + inner[[j, i]].conj()));
    let (mu, _) = hermitian_eigen(&inner).expect("Hermitian product");
    let mut lambda: Vec<f64> = mu.iter().map(|&v| if v > EIGEN_FLOOR { v.sqrt() } else { 0.0 }).collect();
    lambda.sort_by(|a, b| b.total_cmp(a));
    (lambda[0] - lambda[1] - lambda[2] - lambda[3]).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn vac(a1: Level, a2: Level) -> BasisLabel {
        BasisLabel::vacuum(a1, a2, 2)
    }

    fn one(a1: Level, a2: Level, k: usize) -> BasisLabel {
        let mut occ = vec![0; 2];
        occ[k] = 1;
        BasisLabel::new(a1, a2, occ)
    }

    #[test]
    fn projection_splits_off_photon_terms() {
        let (a, b, g) = (c(0.6), c(0.7), c((1.0f64 - 0.36 - 0.49).sqrt()));
        let s = JointState::from_entries(
            2,
            [(vac(Level::E, Level::G), a), (vac(Level::G, Level::E), b), (one(Level::E, Level::G, 1), g)],
        )
        .unwrap();
        let p = project_vacuum(&s);
        assert_eq!(p.pure.eg(), a);
        assert_eq!(p.pure.ge(), b);
        assert_relative_eq!(p.residual_norm, g.re, max_relative = 1e-15);
        assert!(!p.empty);
        let sv = p.pure.schmidt_values();
        assert!(sv.iter().all(|&v| v > PRODUCT_TOL));
    }

    #[test]
    fn projection_of_photon_only_state_is_empty() {
        let s = JointState::from_entries(2, [(one(Level::E, Level::G, 0), c(1.0))]).unwrap();
        let p = project_vacuum(&s);
        assert!(p.empty);
        assert_relative_eq!(p.residual_norm, 1.0);
    }

    #[test]
    fn schmidt_examples() {
        let product = JointState::from_entries(2, [(vac(Level::E, Level::G), c(1.0))]).unwrap();
        let sv = schmidt_values(&product, &Bipartition::atom1_vs_rest(2)).unwrap();
        assert_eq!(sv.len(), 1);
        assert_relative_eq!(sv[0], 1.0);
        assert!(is_product(&sv));

        let bell = JointState::from_entries(
            2,
            [(vac(Level::E, Level::G), c(FRAC_1_SQRT_2)), (vac(Level::G, Level::E), c(FRAC_1_SQRT_2))],
        )
        .unwrap();
        let sv = schmidt_values(&bell, &Bipartition::atom1_vs_rest(2)).unwrap();
        assert_relative_eq!(sv[0], FRAC_1_SQRT_2, max_relative = 1e-14);
        assert_relative_eq!(sv[1], FRAC_1_SQRT_2, max_relative = 1e-14);
        assert!(!is_product(&sv));

        // Atom 1 together with mode 0 against atom 2 and mode 1: the photon in
        // mode 0 travels with atom 1, so this is still a product.
        let s = JointState::from_entries(
            2,
            [(one(Level::G, Level::G, 0), c(0.6)), (vac(Level::E, Level::G), c(0.8))],
        )
        .unwrap();
        let cut = Bipartition::new(2, &[Subsystem::Atom1, Subsystem::Mode(0)]).unwrap();
        assert!(is_product(&schmidt_values(&s, &cut).unwrap()));
        assert!(Bipartition::new(2, &[Subsystem::Mode(2)]).is_err());
    }

    #[test]
    fn trace_examples() {
        let pure = JointState::from_entries(
            2,
            [(vac(Level::E, Level::G), c(0.6)), (vac(Level::G, Level::E), c(0.8))],
        )
        .unwrap();
        let rho = partial_trace_field(&pure).unwrap();
        assert_eq!(rho.rank(1e-12), 1);
        assert_relative_eq!(concurrence(&rho), 2.0 * 0.6 * 0.8, max_relative = 1e-12);

        let mixed = JointState::from_entries(
            2,
            [(vac(Level::E, Level::G), c(FRAC_1_SQRT_2)), (one(Level::G, Level::E, 0), c(FRAC_1_SQRT_2))],
        )
        .unwrap();
        let rho = partial_trace_field(&mixed).unwrap();
        // EG <-> GE coherence lives at (2, 1).
        assert!(rho.get(2, 1).norm() < 1e-15);
        assert_relative_eq!(rho.get(1, 1).re, 0.5);
        assert_relative_eq!(rho.get(2, 2).re, 0.5);
        assert_eq!(concurrence(&rho), 0.0);

        let with_f = JointState::from_entries(2, [(vac(Level::F, Level::G), c(1.0))]).unwrap();
        assert!(matches!(partial_trace_field(&with_f), Err(Error::InvalidLevels { .. })));
    }

    #[test]
    fn concurrence_examples() {
        let bell = TwoQubitPure::exchange(c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2));
        assert_relative_eq!(concurrence(&bell.density().unwrap()), 1.0, max_relative = 1e-12);
        assert_relative_eq!(bell.concurrence(), 1.0, max_relative = 1e-15);
        let product = TwoQubitPure::new(c(0.6), c(0.8), c(0.0), c(0.0));
        assert!(concurrence(&product.density().unwrap()) < 1e-7);
        assert_eq!(product.concurrence(), 0.0);
        let (a, b) = (Complex64::new(0.3, 0.4), Complex64::new(0.0, -(0.75f64).sqrt()));
        let s = TwoQubitPure::exchange(a, b);
        assert_relative_eq!(concurrence(&s.density().unwrap()), 2.0 * a.norm() * b.norm(), max_relative = 1e-10);
    }

    #[test]
    fn normalize_examples() {
        let s = JointState::from_entries(2, [(vac(Level::E, Level::G), c(2.0)), (vac(Level::G, Level::E), c(0.0))])
            .unwrap();
        assert!(!s.is_normalized());
        let n = normalize(&s).unwrap();
        assert!(n.is_normalized());
        assert_eq!(n.amplitude(&vac(Level::E, Level::G)), c(1.0));
        assert_eq!(n.amplitude(&vac(Level::G, Level::E)), c(0.0));
        let again = normalize(&n).unwrap();
        for (l, a) in n.iter() {
            assert!((again.amplitude(l) - a).norm() <= 1e-15);
        }
        let zero = JointState::from_entries(2, [(vac(Level::E, Level::G), c(0.0))]).unwrap();
        assert_eq!(normalize(&zero).unwrap_err(), Error::ZeroState);
    }

    #[test]
    fn duplicate_labels_rejected() {
        let err = JointState::from_entries(2, [(vac(Level::E, Level::G), c(1.0)), (vac(Level::E, Level::G), c(1.0))]);
        assert!(err.is_err());
        assert!(JointState::from_entries(2, [(BasisLabel::vacuum(Level::E, Level::G, 3), c(1.0))]).is_err());
    }

    #[test]
    fn density_validation() {
        let mut m = Array2::<Complex64>::zeros((4, 4));
        m[[0, 0]] = c(0.5);
        assert!(TwoQubitDensity::new(m.clone()).is_err());
        m[[1, 1]] = c(0.5);
        assert!(TwoQubitDensity::new(m.clone()).is_ok());
        m[[0, 1]] = Complex64::new(0.0, 0.1);
        assert!(TwoQubitDensity::new(m.clone()).is_err());
        m[[1, 0]] = Complex64::new(0.0, -0.1);
        assert!(TwoQubitDensity::new(m.clone()).is_ok());
        m[[0, 1]] = c(0.9);
        m[[1, 0]] = c(0.9);
        assert!(matches!(TwoQubitDensity::new(m), Err(Error::InvalidDensity(_))));
    }

    #[test]
    fn fixture_text() {
        let s = JointState::from_entries(
            2,
            [(vac(Level::E, Level::G), Complex64::new(0.6, -0.1)), (one(Level::G, Level::G, 1), c(0.2))],
        )
        .unwrap();
        let text = s.to_fixture();
        assert!(text.contains("E,G,0 0,0.6,-0.1"));
        assert_eq!(JointState::from_fixture(&text).unwrap(), s);
        let rho = TwoQubitPure::exchange(c(0.6), c(0.8)).density().unwrap();
        let back = TwoQubitDensity::from_fixture(&rho.to_fixture()).unwrap();
        assert_eq!(back, rho);
        assert!(JointState::from_fixture("X,G,0,1,0").is_err());
    }
}
