//! Post-selection on photon-free outcomes, entanglement concentration with
//! a three-level pulse, ensemble statistics, classical mutual information
//! and the XOR time capsule.
//!
//! All sampling goes through a caller-supplied RNG or an explicit 64-bit
//! seed, so every Monte Carlo result is reproducible.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::amplitude::{amplitude_total_closed, AtomPairConfig};
use crate::error::{Error, Result};
use crate::state::{normalize, project_vacuum, BasisLabel, JointState, Level, TwoQubitPure};

const PLAN_TOL: f64 = 1e-9;

/// Derives an independent sub-seed for trial `index` (SplitMix64 finalizer).
pub fn trial_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Deterministic outcome of the no-photon filter.
#[derive(Debug, Clone, PartialEq)]
pub struct PostSelection {
    pub keep_probability: f64,
    pub reject_probability: f64,
    /// Renormalized vacuum-sector state; `None` when nothing survives.
    pub kept: Option<TwoQubitPure>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Branch<T> {
    Kept(T),
    Rejected,
}

impl<T> Branch<T> {
    pub fn is_kept(&self) -> bool {
        matches!(self, Branch::Kept(_))
    }
}

fn require_normalized(state: &JointState) -> Result<()> {
    if state.is_normalized() {
        Ok(())
    } else {
        Err(Error::Domain(format!("state must be normalized (norm² = {})", state.norm_sqr())))
    }
}

fn postselection(state: &JointState) -> Result<PostSelection> {
    require_normalized(state)?;
    let projection = project_vacuum(state);
    let keep = projection.pure.norm_sqr().min(1.0);
    let kept = if keep >= 1e-300 { Some(projection.pure.normalized()?) } else { None };
    Ok(PostSelection { keep_probability: keep, reject_probability: 1.0 - keep, kept })
}

/// Ideal detector array: keeps the trial iff no photon is present.
///
/// Vacuum labels with an atom in `F` count as rejected.
pub fn postselect_no_photon(state: &JointState) -> Result<PostSelection> {
    let sel = postselection(state)?;
    if sel.kept.is_none() {
        return Err(Error::ZeroState);
    }
    Ok(sel)
}

/// Samples one detector readout.
pub fn postselect_sampled<R: Rng + ?Sized>(state: &JointState, rng: &mut R) -> Result<Branch<TwoQubitPure>> {
    let sel = postselection(state)?;
    Ok(match sel.kept {
        Some(kept) if rng.random::<f64>() < sel.keep_probability => Branch::Kept(kept),
        _ => Branch::Rejected,
    })
}

/// Which atom receives the `G ↔ F` pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulsedAtom {
    Atom1,
    Atom2,
}

/// Pulse that balances `a|E₁G₂⟩ + b|G₁E₂⟩`.
///
/// The pulse maps `|G⟩ → cos θ e^{iφ}|G⟩ + sin θ |F⟩` on the target atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentrationPlan {
    pub theta: f64,
    pub phase: f64,
    pub success_prob: f64,
    pub target: PulsedAtom,
}

fn wrap_phase(p: f64) -> f64 {
    let w = p.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

fn plan_pair(larger: Complex64, smaller: Complex64, target: PulsedAtom) -> ConcentrationPlan {
    let total = larger.norm_sqr() + smaller.norm_sqr();
    ConcentrationPlan {
        theta: (smaller.norm() / larger.norm()).clamp(0.0, 1.0).acos(),
        phase: wrap_phase(smaller.arg() - larger.arg()),
        success_prob: 2.0 * smaller.norm_sqr() / total,
        target,
    }
}

/// Plan for pulsing atom 2, which needs `|a| ≥ |b| > 0`.
pub fn plan_concentration(a: Complex64, b: Complex64) -> Result<ConcentrationPlan> {
    if b.norm() == 0.0 {
        return Err(Error::DegenerateInput);
    }
    if b.norm() > a.norm() {
        return Err(Error::OrderingError);
    }
    Ok(plan_pair(a, b, PulsedAtom::Atom2))
}

/// Mirror image for `|b| ≥ |a| > 0`: the pulse goes to atom 1.
pub fn plan_concentration_mirrored(a: Complex64, b: Complex64) -> Result<ConcentrationPlan> {
    if a.norm() == 0.0 {
        return Err(Error::DegenerateInput);
    }
    if a.norm() > b.norm() {
        return Err(Error::OrderingError);
    }
    Ok(plan_pair(b, a, PulsedAtom::Atom1))
}

/// Picks whichever atom holds the larger amplitude's `G` level.
pub fn plan_for(a: Complex64, b: Complex64) -> Result<ConcentrationPlan> {
    if a.norm() >= b.norm() {
        plan_concentration(a, b)
    } else {
        plan_concentration_mirrored(a, b)
    }
}

/// Pure state of two three-level atoms, indexed `[atom1][atom2]` by
/// [`Level::index`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomPairPure {
    pub amps: [[Complex64; 3]; 3],
}

impl AtomPairPure {
    pub fn from_two_qubit(s: &TwoQubitPure) -> Self {
        let mut amps = [[Complex64::new(0.0, 0.0); 3]; 3];
        amps[0][0] = s.gg();
        amps[0][1] = s.ge();
        amps[1][0] = s.eg();
        amps[1][1] = s.ee();
        Self { amps }
    }

    pub fn get(&self, atom1: Level, atom2: Level) -> Complex64 {
        self.amps[atom1.index()][atom2.index()]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().flatten().map(|a| a.norm_sqr()).sum()
    }

    fn scaled(&self, s: f64) -> Self {
        Self { amps: self.amps.map(|row| row.map(|a| a * s)) }
    }

    fn two_qubit_part(&self) -> TwoQubitPure {
        TwoQubitPure::new(self.amps[0][0], self.amps[0][1], self.amps[1][0], self.amps[1][1])
    }
}

/// Deterministic result of pulse plus `F` measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationBranches {
    /// Normalized state after finding the target atom outside `F`.
    pub kept: Option<TwoQubitPure>,
    pub keep_probability: f64,
    pub reject_probability: f64,
    /// State right after the pulse, before the `F` measurement.
    pub pulsed: AtomPairPure,
}

fn check_plan(state: &AtomPairPure, plan: &ConcentrationPlan) -> Result<()> {
    let (a, b) = (state.get(Level::E, Level::G), state.get(Level::G, Level::E));
    let expected = match plan.target {
        PulsedAtom::Atom2 => plan_concentration(a, b),
        PulsedAtom::Atom1 => plan_concentration_mirrored(a, b),
    }?;
    let deviation = (expected.theta - plan.theta)
        .abs()
        .max((expected.success_prob - plan.success_prob).abs())
        .max(wrap_phase(expected.phase - plan.phase).abs());
    if deviation > PLAN_TOL {
        return Err(Error::PlanMismatch { deviation });
    }
    Ok(())
}

/// Applies the pulse and resolves the `F` measurement into both branches.
pub fn concentration_branches(state: &AtomPairPure, plan: &ConcentrationPlan) -> Result<ConcentrationBranches> {
    let norm = state.norm_sqr().sqrt();
    if !(norm >= 1e-300) {
        return Err(Error::ZeroState);
    }
    let state = state.scaled(1.0 / norm);
    check_plan(&state, plan)?;
    let (c, s) = (plan.theta.cos(), plan.theta.sin());
    let rot = Complex64::from_polar(1.0, plan.phase);
    let (g, f) = (Level::G.index(), Level::F.index());
    let mut out = state;
    for other in 0..3 {
        let (ag, af) = match plan.target {
            PulsedAtom::Atom2 => (state.amps[other][g], state.amps[other][f]),
            PulsedAtom::Atom1 => (state.amps[g][other], state.amps[f][other]),
        };
        let new_g = ag * rot * c - af * s;
        let new_f = ag * s + af * rot.conj() * c;
        match plan.target {
            PulsedAtom::Atom2 => {
                out.amps[other][g] = new_g;
                out.amps[other][f] = new_f;
            }
            PulsedAtom::Atom1 => {
                out.amps[g][other] = new_g;
                out.amps[f][other] = new_f;
            }
        }
    }
    let reject: f64 = (0..3)
        .map(|other| match plan.target {
            PulsedAtom::Atom2 => out.amps[other][f].norm_sqr(),
            PulsedAtom::Atom1 => out.amps[f][other].norm_sqr(),
        })
        .sum();
    // Population with the spectator atom in F never reaches the kept branch either.
    let kept_part = out.two_qubit_part();
    let keep = kept_part.norm_sqr();
    let kept = if keep >= 1e-300 { Some(kept_part.normalized()?) } else { None };
    Ok(ConcentrationBranches { kept, keep_probability: keep, reject_probability: reject.max(1.0 - keep), pulsed: out })
}

/// Samples the `F` measurement after the pulse.
pub fn apply_concentration<R: Rng + ?Sized>(
    state: &AtomPairPure,
    plan: &ConcentrationPlan,
    rng: &mut R,
) -> Result<Branch<TwoQubitPure>> {
    let branches = concentration_branches(state, plan)?;
    Ok(match branches.kept {
        Some(kept) if rng.random::<f64>() < branches.keep_probability => Branch::Kept(kept),
        _ => Branch::Rejected,
    })
}

/// `I(X;Y)` in bits from a 2×2 table of joint counts.
pub fn mutual_information(counts: [[u64; 2]; 2]) -> Result<f64> {
    let total: u64 = counts.iter().flatten().sum();
    if total == 0 {
        return Err(Error::EmptyCounts);
    }
    let n = total as f64;
    let px = [(counts[0][0] + counts[0][1]) as f64 / n, (counts[1][0] + counts[1][1]) as f64 / n];
    let py = [(counts[0][0] + counts[1][0]) as f64 / n, (counts[0][1] + counts[1][1]) as f64 / n];
    let mut info = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            let pxy = counts[x][y] as f64 / n;
            if pxy > 0.0 {
                info += pxy * (pxy / (px[x] * py[y])).log2();
            }
        }
    }
    Ok(info.max(0.0))
}

/// Shannon entropy in bits of a two-outcome distribution.
pub fn binary_entropy(p: f64) -> f64 {
    [p, 1.0 - p].iter().filter(|&&q| q > 0.0).map(|&q| -q * q.log2()).sum()
}

/// Where the ensemble's atom pairs come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairSource {
    /// `b` from the two-process closed form, `|γ|² = photon_weight` in a
    /// one-photon term `|G₁G₂, 1⟩`, and `a = √(1 - b² - |γ|²)`.
    Exchange { cfg: AtomPairConfig, photon_weight: f64 },
    /// Given `(a, b)` rescaled to carry weight `1 - photon_weight`.
    Synthetic { a: Complex64, b: Complex64, photon_weight: f64 },
}

impl PairSource {
    /// The state `a|E₁G₂,0⟩ + b|G₁E₂,0⟩ + γ|G₁G₂,1⟩` over a single mode.
    pub fn joint_state(&self) -> Result<JointState> {
        let (a, b, w) = match *self {
            PairSource::Exchange { cfg, photon_weight } => {
                let b = amplitude_total_closed(&cfg)?.b;
                let rest = 1.0 - b.norm_sqr() - photon_weight;
                if !(rest >= 0.0) {
                    return Err(Error::InvalidConfig(format!("|b|² + photon weight exceeds 1 (|b| = {})", b.norm())));
                }
                (Complex64::new(rest.sqrt(), 0.0), b, photon_weight)
            }
            PairSource::Synthetic { a, b, photon_weight } => {
                let n = a.norm_sqr() + b.norm_sqr();
                if !(n > 0.0) {
                    return Err(Error::ZeroState);
                }
                let s = ((1.0 - photon_weight).max(0.0) / n).sqrt();
                (a * s, b * s, photon_weight)
            }
        };
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidConfig(format!("photon weight {w} outside [0, 1]")));
        }
        let mut entries = vec![
            (BasisLabel::vacuum(Level::E, Level::G, 1), a),
            (BasisLabel::vacuum(Level::G, Level::E, 1), b),
        ];
        if w > 0.0 {
            entries.push((BasisLabel::new(Level::G, Level::G, vec![1]), Complex64::new(w.sqrt(), 0.0)));
        }
        normalize(&JointState::from_entries(1, entries)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub n_input: u64,
    pub n_photon_rejected: u64,
    pub n_f_rejected: u64,
    pub n_kept: u64,
    /// Zero when nothing was kept.
    pub mean_concurrence: f64,
    /// Zero when nothing was kept.
    pub mutual_info_bits: f64,
    pub seed: u64,
    /// Kept-pair outcomes indexed `[atom1][atom2]`, 1 meaning `E`.
    pub joint_counts: [[u64; 2]; 2],
}

/// Runs `n` independent pairs through post-selection, concentration and a
/// computational-basis measurement of both atoms.
///
/// Trial `i` draws from its own generator seeded with `trial_seed(seed, i)`.
pub fn run_ensemble(source: &PairSource, n: u64, seed: u64) -> Result<EnsembleStats> {
    if n == 0 {
        return Err(Error::Domain("ensemble needs n > 0".into()));
    }
    let state = source.joint_state()?;
    let selection = postselection(&state)?;
    let concentration = match selection.kept {
        Some(kept) => {
            let plan = plan_for(kept.eg(), kept.ge())?;
            Some(concentration_branches(&AtomPairPure::from_two_qubit(&kept), &plan)?)
        }
        None => None,
    };
    let mut stats = EnsembleStats {
        n_input: n,
        n_photon_rejected: 0,
        n_f_rejected: 0,
        n_kept: 0,
        mean_concurrence: 0.0,
        mutual_info_bits: 0.0,
        seed,
        joint_counts: [[0; 2]; 2],
    };
    let mut concurrence_sum = 0.0;
    for i in 0..n {
        let mut rng = rng_from_seed(trial_seed(seed, i));
        if rng.random::<f64>() >= selection.keep_probability {
            stats.n_photon_rejected += 1;
            continue;
        }
        let branches = concentration.as_ref().expect("kept branch has a plan");
        let kept = match branches.kept {
            Some(k) if rng.random::<f64>() < branches.keep_probability => k,
            _ => {
                stats.n_f_rejected += 1;
                continue;
            }
        };
        stats.n_kept += 1;
        concurrence_sum += kept.concurrence();
        let (x, y) = measure_pair(&kept, &mut rng);
        stats.joint_counts[x as usize][y as usize] += 1;
    }
    if stats.n_kept > 0 {
        stats.mean_concurrence = concurrence_sum / stats.n_kept as f64;
        stats.mutual_info_bits = mutual_information(stats.joint_counts)?;
    }
    Ok(stats)
}

/// Computational-basis measurement of both atoms; `true` means `E`.
pub fn measure_pair<R: Rng + ?Sized>(state: &TwoQubitPure, rng: &mut R) -> (bool, bool) {
    let norm = state.norm_sqr();
    let u = rng.random::<f64>() * norm;
    let mut acc = 0.0;
    for (k, amp) in state.amps.iter().enumerate() {
        acc += amp.norm_sqr();
        if u < acc {
            return (k >= 2, k % 2 == 1);
        }
    }
    let last = state.amps.iter().rposition(|a| a.norm_sqr() > 0.0).unwrap_or(3);
    (last >= 2, last % 2 == 1)
}

/// XOR of message bits with the local halves of the shared pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapsuleRecord {
    pub ciphertext: Vec<bool>,
    pub pair_count: usize,
}

pub fn capsule_encode(message: &[bool], local_outcomes: &[bool]) -> Result<CapsuleRecord> {
    if message.len() != local_outcomes.len() {
        return Err(Error::LengthMismatch { left: message.len(), right: local_outcomes.len() });
    }
    let ciphertext: Vec<bool> = message.iter().zip(local_outcomes).map(|(m, l)| m ^ l).collect();
    Ok(CapsuleRecord { pair_count: ciphertext.len(), ciphertext })
}

/// Second XOR with the remote halves; recovers the message only when the
/// remote outcomes equal the local ones.
pub fn capsule_decode(record: &CapsuleRecord, remote_outcomes: &[bool]) -> Result<Vec<bool>> {
    if record.ciphertext.len() != remote_outcomes.len() {
        return Err(Error::LengthMismatch { left: record.ciphertext.len(), right: remote_outcomes.len() });
    }
    Ok(record.ciphertext.iter().zip(remote_outcomes).map(|(c, r)| c ^ r).collect())
}

/// How the two halves of a measured pair relate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairCorrelation {
    Correlated,
    AntiCorrelated,
    Independent,
}

/// Measurement records of `n` pairs: uniformly random local bits with remote
/// bits set by `correlation`.
///
/// For the exchange Bell state `(|E₁G₂⟩ + |G₁E₂⟩)/√2` the raw records are
/// anti-correlated; the remote party complements its bits to read the capsule.
pub fn sample_pair_outcomes<R: Rng + ?Sized>(
    n: usize,
    correlation: PairCorrelation,
    rng: &mut R,
) -> (Vec<bool>, Vec<bool>) {
    let mut local = Vec::with_capacity(n);
    let mut remote = Vec::with_capacity(n);
    for _ in 0..n {
        let l: bool = rng.random();
        let r = match correlation {
            PairCorrelation::Correlated => l,
            PairCorrelation::AntiCorrelated => !l,
            PairCorrelation::Independent => rng.random(),
        };
        local.push(l);
        remote.push(r);
    }
    (local, remote)
}

pub fn format_bits(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

pub fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::Domain(format!("bit strings use '0'/'1', found '{other}'"))),
        })
        .collect()
}
