//! Full and effective Hamiltonians and Lindblad operators for every gate
//! variant.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{embed_product, embed_site_operator, SiteSpec, SparseOperator, SystemLayout};
use crate::interactions::CouplingSet;
use crate::pulses::{GaussianPulse, Pulse, Window};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateVariant {
    /// Molecular controls, one atomic target.
    ManyToOne { n_controls: usize },
    /// One molecular control, atomic targets.
    OneToMany { n_targets: usize },
}

/// How the molecular auxiliary level is modelled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelMode {
    /// Single effective `|2⟩` level (three-level molecules).
    Effective,
    /// Both `|2+⟩` and `|2-⟩` resolved (four-level molecules).
    Explicit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    Full,
    Effective,
}

/// Rydberg decay rates in rad/μs, each split equally into `|g⟩` and `|e⟩`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DecayRates {
    /// Total decay rate of `|r⟩`.
    pub gamma_r: f64,
    /// Total decay rate of `|R⟩`.
    pub gamma_big_r: f64,
}

/// Van der Waals shifts of one atom pair, rad/μs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RydbergPairShift {
    pub atoms: (usize, usize),
    /// Shift of `|rr⟩`.
    pub u_rr: f64,
    /// Shift of `|RR⟩`.
    pub u_big_rr: f64,
}

/// Physical parameters of one gate. All frequencies in rad/μs, times in μs.
#[derive(Clone, Debug, PartialEq)]
pub struct GateConfig {
    pub variant: GateVariant,
    pub channel_mode: ChannelMode,
    pub layout: SystemLayout,
    pub couplings: CouplingSet,
    /// Common detuning of the ground-Rydberg drives (one-to-many only).
    pub delta: f64,
    pub pair_shifts: Vec<RydbergPairShift>,
    /// Drives on `|g⟩↔|r⟩` and `|e⟩↔|r⟩`; signs live on the pulses.
    pub pulses: [GaussianPulse; 2],
    pub decay: DecayRates,
    pub window: Window,
}

impl GateConfig {
    /// Layout implied by a variant: molecules first for many-to-one, the
    /// molecule first then the atoms for one-to-many.
    pub fn layout_for(variant: GateVariant, mode: ChannelMode) -> Result<SystemLayout> {
        let molecule = match mode {
            ChannelMode::Effective => SiteSpec::Molecule3,
            ChannelMode::Explicit => SiteSpec::Molecule4,
        };
        let sites = match variant {
            GateVariant::ManyToOne { n_controls } if n_controls >= 1 => {
                let mut s = vec![molecule; n_controls];
                s.push(SiteSpec::Atom4);
                s
            }
            GateVariant::OneToMany { n_targets } if n_targets >= 1 => {
                let mut s = vec![molecule];
                s.extend(std::iter::repeat_n(SiteSpec::Atom4, n_targets));
                s
            }
            _ => return Err(Error::config("gate needs at least one control and one target")),
        };
        SystemLayout::new(sites)
    }

    /// Pairwise shifts with the same `U₁`, `U₂` on every atom pair.
    pub fn uniform_pair_shifts(layout: &SystemLayout, u_rr: f64, u_big_rr: f64) -> Vec<RydbergPairShift> {
        let atoms = layout.atom_sites();
        let mut out = Vec::new();
        for (i, &a) in atoms.iter().enumerate() {
            for &b in &atoms[i + 1..] {
                out.push(RydbergPairShift { atoms: (a, b), u_rr, u_big_rr });
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let expected = Self::layout_for(self.variant, self.channel_mode)?;
        if expected != self.layout {
            return Err(Error::config("layout does not match the gate variant and channel mode"));
        }
        let molecules = self.layout.molecule_sites();
        let atoms = self.layout.atom_sites();
        for &m in &molecules {
            for &a in &atoms {
                if self.couplings.get(m, a).is_none() {
                    return Err(Error::config(format!(
                        "missing coupling for molecule {m} and atom {a}"
                    )));
                }
            }
        }
        for p in &self.couplings.pairs {
            if !molecules.contains(&p.molecule) || !atoms.contains(&p.atom) {
                return Err(Error::config(format!(
                    "coupling ({}, {}) does not join a molecule to an atom",
                    p.molecule, p.atom
                )));
            }
        }
        match self.variant {
            GateVariant::ManyToOne { .. } => {
                if self.delta != 0.0 || !self.pair_shifts.is_empty() {
                    return Err(Error::config(
                        "many-to-one gates take no detuning and no Rydberg pair shifts",
                    ));
                }
            }
            GateVariant::OneToMany { .. } => {
                if !(self.delta.is_finite() && self.delta != 0.0) {
                    return Err(Error::config("one-to-many gates require a nonzero detuning"));
                }
                for (i, &a) in atoms.iter().enumerate() {
                    for &b in &atoms[i + 1..] {
                        let n = self
                            .pair_shifts
                            .iter()
                            .filter(|s| s.atoms == (a, b) || s.atoms == (b, a))
                            .count();
                        if n != 1 {
                            return Err(Error::config(format!(
                                "atom pair ({a}, {b}) needs exactly one U entry, found {n}"
                            )));
                        }
                    }
                }
            }
        }
        if self.decay.gamma_r < 0.0 || self.decay.gamma_big_r < 0.0 {
            return Err(Error::config("decay rates must be non-negative"));
        }
        Ok(())
    }

    pub fn atom_site(&self) -> Option<usize> {
        match self.variant {
            GateVariant::ManyToOne { n_controls } => Some(n_controls),
            GateVariant::OneToMany { .. } => None,
        }
    }
}

/// Time-dependence of a drive term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Envelope {
    /// `Ω_k(t)`.
    Pulse(usize),
    /// `Ω_j(t) Ω_k(t)`.
    Product(usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriveTerm {
    pub envelope: Envelope,
    /// Enters the Hamiltonian as `f(t) (T + T†)`.
    pub operator: SparseOperator,
}

/// `H(t) = H_static + Σ_k f_k(t) (T_k + T_k†)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeDependentHamiltonian {
    pub static_part: SparseOperator,
    pub drive_terms: Vec<DriveTerm>,
    pub pulses: Vec<Pulse>,
}

impl TimeDependentHamiltonian {
    pub fn dim(&self) -> usize {
        self.static_part.dim()
    }

    pub fn envelope_value(&self, envelope: Envelope, t: f64) -> f64 {
        match envelope {
            Envelope::Pulse(k) => self.pulses[k].evaluate(t),
            Envelope::Product(j, k) => self.pulses[j].evaluate(t) * self.pulses[k].evaluate(t),
        }
    }

    /// Realized operator at time `t`.
    pub fn at(&self, t: f64) -> SparseOperator {
        let mut h = self.static_part.clone();
        for term in &self.drive_terms {
            let f = self.envelope_value(term.envelope, t);
            h = h.add(&term.operator.hermitize().scale(C64::from(f))).expect("same dimension");
        }
        h
    }

    /// Adds `shift · 𝟙` to the static part.
    pub fn with_energy_offset(&self, shift: f64) -> Self {
        let mut out = self.clone();
        out.static_part = out
            .static_part
            .add(&SparseOperator::identity(self.dim()).scale(C64::from(shift)))
            .expect("same dimension");
        out
    }
}

fn half() -> C64 {
    C64::from(0.5)
}

fn atom_drives(layout: &SystemLayout) -> Result<Vec<DriveTerm>> {
    let mut terms = Vec::new();
    for (k, lower) in [(0usize, "g"), (1usize, "e")] {
        let mut op = SparseOperator::zero(layout.dim());
        for a in layout.atom_sites() {
            op = op.add(&embed_site_operator(layout, a, lower, "r")?.scale(half()))?;
        }
        terms.push(DriveTerm { envelope: Envelope::Pulse(k), operator: op });
    }
    Ok(terms)
}

/// `Σ (V/2)|0r⟩⟨2R| + H.c.` over all molecule-atom pairs.
fn exchange_terms(cfg: &GateConfig) -> Result<SparseOperator> {
    let layout = &cfg.layout;
    let mut t = SparseOperator::zero(layout.dim());
    for m in layout.molecule_sites() {
        for a in layout.atom_sites() {
            let p = cfg
                .couplings
                .get(m, a)
                .ok_or_else(|| Error::config(format!("missing coupling for molecule {m}, atom {a}")))?;
            match cfg.channel_mode {
                ChannelMode::Effective => {
                    let op = embed_product(layout, &[(m, "0", "2"), (a, "r", "R")])?;
                    t = t.add(&op.scale(C64::from(p.effective_half())))?;
                }
                ChannelMode::Explicit => {
                    for (aux, v) in [("2+", p.v_plus_half), ("2-", p.v_minus_half)] {
                        let op = embed_product(layout, &[(m, "0", aux), (a, "r", "R")])?;
                        t = t.add(&op.scale(v))?;
                    }
                }
            }
        }
    }
    Ok(t.hermitize())
}

fn pulses_of(cfg: &GateConfig) -> Vec<Pulse> {
    cfg.pulses.iter().map(|p| Pulse::Gaussian(*p)).collect()
}

pub fn build_full_many_to_one(cfg: &GateConfig) -> Result<TimeDependentHamiltonian> {
    cfg.validate()?;
    if !matches!(cfg.variant, GateVariant::ManyToOne { .. }) {
        return Err(Error::config("expected a many-to-one configuration"));
    }
    Ok(TimeDependentHamiltonian {
        static_part: exchange_terms(cfg)?,
        drive_terms: atom_drives(&cfg.layout)?,
        pulses: pulses_of(cfg),
    })
}

pub fn build_full_one_to_many(cfg: &GateConfig) -> Result<TimeDependentHamiltonian> {
    cfg.validate()?;
    if !matches!(cfg.variant, GateVariant::OneToMany { .. }) {
        return Err(Error::config("expected a one-to-many configuration"));
    }
    let layout = &cfg.layout;
    let mut stat = exchange_terms(cfg)?;
    for a in layout.atom_sites() {
        stat = stat.add(&embed_site_operator(layout, a, "r", "r")?.scale(C64::from(-cfg.delta)))?;
    }
    for s in &cfg.pair_shifts {
        let (a, b) = s.atoms;
        let rr = embed_product(layout, &[(a, "r", "r"), (b, "r", "r")])?;
        let big = embed_product(layout, &[(a, "R", "R"), (b, "R", "R")])?;
        stat = stat.add(&rr.scale(C64::from(s.u_rr)))?;
        stat = stat.add(&big.scale(C64::from(s.u_big_rr)))?;
    }
    Ok(TimeDependentHamiltonian {
        static_part: stat,
        drive_terms: atom_drives(layout)?,
        pulses: pulses_of(cfg),
    })
}

/// Drive confined to the all-controls-`|1⟩` block; everything else inert.
pub fn build_eff_many_to_one(cfg: &GateConfig) -> Result<TimeDependentHamiltonian> {
    cfg.validate()?;
    let atom = cfg
        .atom_site()
        .ok_or_else(|| Error::config("expected a many-to-one configuration"))?;
    let layout = &cfg.layout;
    let mut drive_terms = Vec::new();
    for (k, lower) in [(0usize, "g"), (1usize, "e")] {
        let mut factors: Vec<(usize, &str, &str)> =
            layout.molecule_sites().into_iter().map(|m| (m, "1", "1")).collect();
        factors.push((atom, lower, "r"));
        drive_terms.push(DriveTerm {
            envelope: Envelope::Pulse(k),
            operator: embed_product(layout, &factors)?.scale(half()),
        });
    }
    Ok(TimeDependentHamiltonian {
        static_part: SparseOperator::zero(layout.dim()),
        drive_terms,
        pulses: pulses_of(cfg),
    })
}

/// Second-order effective Hamiltonian on the molecule-`|1⟩` ground block of
/// the one-to-two gate.
pub fn build_eff_one_to_many(cfg: &GateConfig) -> Result<TimeDependentHamiltonian> {
    cfg.validate()?;
    match cfg.variant {
        GateVariant::OneToMany { n_targets: 2 } => {}
        GateVariant::OneToMany { n_targets } => {
            return Err(Error::UnsupportedEffectiveModel(format!(
                "no effective one-to-many model for {n_targets} targets"
            )))
        }
        _ => return Err(Error::config("expected a one-to-many configuration")),
    }
    let layout = &cfg.layout;
    let dim = layout.dim();
    let idx = |name: &str| layout.parse_basis_name(name);
    let (gg, ge, eg, ee) = (idx("1gg")?, idx("1ge")?, idx("1eg")?, idx("1ee")?);
    let scale = 1.0 / (4.0 * cfg.delta);
    let c = |v: f64| C64::from(v * scale);

    // (|1gg⟩ + |1ee⟩)(⟨1ge| + ⟨1eg|)
    let flip_flop = SparseOperator::from_triplets(
        dim,
        [gg, ee].into_iter().flat_map(|r| [ge, eg].into_iter().map(move |col| (r, col, c(1.0)))),
    )?;
    // Diagonal Stark terms carry a factor 1/2 so that T + T† restores them.
    let stark_1 =
        SparseOperator::from_triplets(dim, [(gg, gg, c(1.0)), (ge, ge, c(0.5)), (eg, eg, c(0.5))])?;
    let stark_2 =
        SparseOperator::from_triplets(dim, [(ee, ee, c(1.0)), (ge, ge, c(0.5)), (eg, eg, c(0.5))])?;
    Ok(TimeDependentHamiltonian {
        static_part: SparseOperator::zero(dim),
        drive_terms: vec![
            DriveTerm { envelope: Envelope::Product(0, 1), operator: flip_flop },
            DriveTerm { envelope: Envelope::Product(0, 0), operator: stark_1 },
            DriveTerm { envelope: Envelope::Product(1, 1), operator: stark_2 },
        ],
        pulses: pulses_of(cfg),
    })
}

/// Dispatches to the right builder for the variant.
pub fn build_hamiltonian(cfg: &GateConfig, kind: ModelKind) -> Result<TimeDependentHamiltonian> {
    match (cfg.variant, kind) {
        (GateVariant::ManyToOne { .. }, ModelKind::Full) => build_full_many_to_one(cfg),
        (GateVariant::ManyToOne { .. }, ModelKind::Effective) => build_eff_many_to_one(cfg),
        (GateVariant::OneToMany { .. }, ModelKind::Full) => build_full_one_to_many(cfg),
        (GateVariant::OneToMany { .. }, ModelKind::Effective) => build_eff_one_to_many(cfg),
    }
}

/// Jump operators `√rate |target⟩⟨source|`, four per atom.
#[derive(Clone, Debug, PartialEq)]
pub struct LindbladSet {
    pub operators: Vec<SparseOperator>,
}

impl LindbladSet {
    pub fn empty() -> Self {
        LindbladSet { operators: Vec::new() }
    }

    pub fn is_trivial(&self) -> bool {
        self.operators.iter().all(SparseOperator::is_zero)
    }
}

pub fn build_lindblad_set(cfg: &GateConfig) -> Result<LindbladSet> {
    let DecayRates { gamma_r, gamma_big_r } = cfg.decay;
    if gamma_r < 0.0 || gamma_big_r < 0.0 || !gamma_r.is_finite() || !gamma_big_r.is_finite() {
        return Err(Error::config("decay rates must be finite and non-negative"));
    }
    let layout = &cfg.layout;
    let mut operators = Vec::new();
    for a in layout.atom_sites() {
        for (source, rate) in [("r", gamma_r), ("R", gamma_big_r)] {
            let amp = C64::from((rate / 2.0).sqrt());
            for target in ["g", "e"] {
                operators.push(embed_site_operator(layout, a, target, source)?.scale(amp));
            }
        }
    }
    Ok(LindbladSet { operators })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::QuantumState;
    use crate::interactions::{triangle_preset, CenterSlot};
    use nalgebra::DMatrix;
    use std::f64::consts::TAU;

    const MHZ: f64 = TAU;

    pub(crate) fn two_to_one(v: f64, omega: f64) -> GateConfig {
        let variant = GateVariant::ManyToOne { n_controls: 2 };
        let layout = GateConfig::layout_for(variant, ChannelMode::Effective).unwrap();
        GateConfig {
            variant,
            channel_mode: ChannelMode::Effective,
            couplings: CouplingSet::uniform(&layout, v / 2.0),
            layout,
            delta: 0.0,
            pair_shifts: vec![],
            pulses: [
                GaussianPulse::centered(omega, 0.27, 1.0).unwrap(),
                GaussianPulse::centered(omega, 0.27, -1.0).unwrap(),
            ],
            decay: DecayRates::default(),
            window: Window::for_sigma(0.27),
        }
    }

    fn one_to_many(n: usize, u1: f64, u2: f64) -> GateConfig {
        let variant = GateVariant::OneToMany { n_targets: n };
        let layout = GateConfig::layout_for(variant, ChannelMode::Effective).unwrap();
        GateConfig {
            variant,
            channel_mode: ChannelMode::Effective,
            couplings: CouplingSet::uniform(&layout, MHZ * 4.04 / 2.0),
            pair_shifts: GateConfig::uniform_pair_shifts(&layout, u1, u2),
            layout,
            delta: MHZ * 2.0,
            pulses: [
                GaussianPulse::centered(MHZ * 0.71, 2.25, 1.0).unwrap(),
                GaussianPulse::centered(MHZ * 0.71, 2.25, 1.0).unwrap(),
            ],
            decay: DecayRates::default(),
            window: Window::for_sigma(2.25),
        }
    }

    fn three_to_one_explicit() -> GateConfig {
        let variant = GateVariant::ManyToOne { n_controls: 3 };
        let layout = GateConfig::layout_for(variant, ChannelMode::Explicit).unwrap();
        let geometry = triangle_preset(1.0, CenterSlot::Last).unwrap();
        let mut cfg = two_to_one(0.0, MHZ * 1.05);
        cfg.variant = variant;
        cfg.channel_mode = ChannelMode::Explicit;
        cfg.couplings = CouplingSet::from_geometry(&layout, &geometry, 1.72, 4911.0).unwrap();
        cfg.layout = layout;
        cfg
    }

    /// Dense oracle for Hermiticity of the realized H(t).
    fn dense_hermitian(h: &TimeDependentHamiltonian, t: f64) -> bool {
        let m = h.at(t).to_dense();
        (&m - m.adjoint()).iter().all(|z| z.norm() < 1e-12)
    }

    fn count_exchange_pairs(h: &SparseOperator) -> usize {
        h.entries().iter().filter(|e| e.0 < e.1).count()
    }

    #[test]
    fn full_two_to_one_structure() {
        let cfg = two_to_one(MHZ * 4.04, MHZ * 1.05);
        let h = build_full_many_to_one(&cfg).unwrap();
        assert_eq!(h.dim(), 36);
        let l = &cfg.layout;
        // Two exchange terms, each with the free molecule's three levels.
        assert_eq!(count_exchange_pairs(&h.static_part), 2 * 3);
        let a = l.parse_basis_name("10r").unwrap();
        let b = l.parse_basis_name("12R").unwrap();
        assert!((h.static_part.get(a, b) - C64::from(MHZ * 2.02)).norm() < 1e-12);
        assert_eq!(h.drive_terms.len(), 2);
        for t in [0.0, 0.3, 1.08, 2.0] {
            assert!(dense_hermitian(&h, t));
        }
    }

    #[test]
    fn zero_drive_leaves_static_part() {
        let cfg = two_to_one(MHZ * 4.04, 0.0);
        let h = build_full_many_to_one(&cfg).unwrap();
        for t in [0.0, 0.5, 1.08] {
            assert_eq!(h.at(t), h.static_part);
        }
    }

    #[test]
    fn explicit_three_to_one_structure() {
        let cfg = three_to_one_explicit();
        let h = build_full_many_to_one(&cfg).unwrap();
        assert_eq!(h.dim(), 256);
        // 6 channel pairs, each padded by the two free molecules (4 levels each).
        assert_eq!(count_exchange_pairs(&h.static_part), 6 * 16);
        for t in [0.1, 1.0, 2.0] {
            assert!(dense_hermitian(&h, t));
        }
    }

    #[test]
    fn one_to_two_static_diagonal() {
        let (u1, u2) = (MHZ * 1774.6, MHZ * 126.9);
        let cfg = one_to_many(2, u1, u2);
        let h = build_full_one_to_many(&cfg).unwrap();
        let l = &cfg.layout;
        assert_eq!(h.dim(), 48);
        let d = h.static_part.diagonal();
        let delta = cfg.delta;
        // Oracle: evaluate each diagonal term directly.
        for i in 0..l.dim() {
            let labels = l.labels_of(i);
            let n_r = labels[1..].iter().filter(|s| **s == "r").count() as f64;
            let rr = if labels[1] == "r" && labels[2] == "r" { u1 } else { 0.0 };
            let big = if labels[1] == "R" && labels[2] == "R" { u2 } else { 0.0 };
            assert!((d[i].re - (rr + big - n_r * delta)).abs() < 1e-9);
        }
        let i = l.parse_basis_name("0rr").unwrap();
        assert!((d[i].re - (u1 - 2.0 * delta)).abs() < 1e-9);
    }

    #[test]
    fn one_to_three_pair_terms() {
        let (u1, u2) = (MHZ * 4206.4, MHZ * 300.8);
        let cfg = one_to_many(3, u1, u2);
        assert_eq!(cfg.pair_shifts.len(), 3);
        let h = build_full_one_to_many(&cfg).unwrap();
        let l = &cfg.layout;
        let d = h.static_part.diagonal();
        let rrr = l.parse_basis_name("1rrr").unwrap();
        assert!((d[rrr].re - (3.0 * u1 - 3.0 * cfg.delta)).abs() < 1e-9);
        let rrg = l.parse_basis_name("0RRg").unwrap();
        assert!((d[rrg].re - u2).abs() < 1e-9);
        assert!(dense_hermitian(&h, 4.0));
    }

    #[test]
    fn one_to_many_requires_pair_shifts() {
        let mut cfg = one_to_many(2, 1.0, 1.0);
        cfg.pair_shifts.clear();
        assert!(build_full_one_to_many(&cfg).is_err());
        let mut cfg = one_to_many(2, 1.0, 1.0);
        cfg.delta = 0.0;
        assert!(build_full_one_to_many(&cfg).is_err());
        let mut cfg = two_to_one(1.0, 1.0);
        cfg.couplings.pairs.pop();
        assert!(build_full_many_to_one(&cfg).is_err());
    }

    #[test]
    fn effective_two_to_one_support() {
        let cfg = two_to_one(MHZ * 4.04, MHZ * 1.05);
        let h = build_eff_many_to_one(&cfg).unwrap();
        let l = &cfg.layout;
        let t0 = cfg.pulses[0].t0;
        let blocked = QuantumState::basis(36, l.parse_basis_name("00g").unwrap()).unwrap();
        for t in [0.0, t0, 2.0] {
            assert!(h.at(t).apply(&blocked).unwrap().norm() == 0.0);
        }
        let psi = QuantumState::basis(36, l.parse_basis_name("11g").unwrap()).unwrap();
        let out = h.at(t0).apply(&psi).unwrap();
        let r = l.parse_basis_name("11r").unwrap();
        assert!((out.amplitudes()[r] - C64::from(MHZ * 1.05 / 2.0)).norm() < 1e-12);
        assert!((out.norm() - MHZ * 1.05 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn effective_three_to_one_support() {
        let mut cfg = three_to_one_explicit();
        cfg.channel_mode = ChannelMode::Effective;
        cfg.layout = GateConfig::layout_for(cfg.variant, ChannelMode::Effective).unwrap();
        cfg.couplings = CouplingSet::uniform(&cfg.layout, 1.0);
        let h = build_eff_many_to_one(&cfg).unwrap().at(1.08);
        let l = &cfg.layout;
        let allowed: Vec<usize> =
            ["111g", "111e", "111r"].iter().map(|n| l.parse_basis_name(n).unwrap()).collect();
        assert!(!h.is_zero());
        for &(r, c, _) in h.entries() {
            assert!(allowed.contains(&r) && allowed.contains(&c));
        }
    }

    #[test]
    fn effective_one_to_two_elements_and_spectrum() {
        let mut cfg = one_to_many(2, 1.0, 1.0);
        let omega = 3.0;
        for p in cfg.pulses.iter_mut() {
            p.omega_max = omega;
        }
        let h = build_eff_one_to_many(&cfg).unwrap();
        let l = &cfg.layout;
        let t0 = cfg.pulses[0].t0;
        let m = h.at(t0);
        let eps = omega * omega / (4.0 * cfg.delta);
        let (gg, ge) = (l.parse_basis_name("1gg").unwrap(), l.parse_basis_name("1ge").unwrap());
        assert!((m.get(gg, ge) - C64::from(eps)).norm() < 1e-12);

        let block: Vec<usize> =
            ["1gg", "1ge", "1eg", "1ee"].iter().map(|n| l.parse_basis_name(n).unwrap()).collect();
        let dense = m.to_dense();
        let sub = DMatrix::from_fn(4, 4, |i, j| dense[(block[i], block[j])]);
        let mut ev: Vec<f64> = sub.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let want = [0.0, 2.0 * eps, 2.0 * eps, 4.0 * eps];
        for (a, b) in ev.iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{ev:?}");
        }
        let zero_mol = QuantumState::basis(48, l.parse_basis_name("0ge").unwrap()).unwrap();
        assert_eq!(m.apply(&zero_mol).unwrap().norm(), 0.0);
    }

    #[test]
    fn effective_one_to_three_unsupported() {
        let cfg = one_to_many(3, 1.0, 1.0);
        assert!(matches!(build_eff_one_to_many(&cfg), Err(Error::UnsupportedEffectiveModel(_))));
    }

    #[test]
    fn lindblad_operators() {
        let mut cfg = two_to_one(1.0, 1.0);
        let zero = build_lindblad_set(&cfg).unwrap();
        assert_eq!(zero.operators.len(), 4);
        assert!(zero.is_trivial());

        let g1 = MHZ * 4.580e-3;
        let g2 = MHZ * 2.393e-3;
        cfg.decay = DecayRates { gamma_r: g1, gamma_big_r: g2 };
        let set = build_lindblad_set(&cfg).unwrap();
        let max = set.operators[0].entries().iter().map(|e| e.2.norm_sqr()).fold(0.0, f64::max);
        assert!((max - g1 / 2.0).abs() < 1e-15);

        // Σ L†L is diagonal: γ₁ on |r⟩, γ₂ on |R⟩ (dense oracle).
        let l = &cfg.layout;
        let mut acc = DMatrix::<C64>::zeros(l.dim(), l.dim());
        for op in &set.operators {
            let d = op.to_dense();
            acc += d.adjoint() * d;
        }
        for i in 0..l.dim() {
            for j in 0..l.dim() {
                let want = if i != j {
                    0.0
                } else {
                    match l.labels_of(i)[2] {
                        "r" => g1,
                        "R" => g2,
                        _ => 0.0,
                    }
                };
                assert!((acc[(i, j)] - C64::from(want)).norm() < 1e-15);
            }
        }

        cfg.decay.gamma_r = -1.0;
        assert!(build_lindblad_set(&cfg).is_err());
    }

    #[test]
    fn drives_preserve_molecular_configuration() {
        // With V = 0, H(t) commutes with every molecular-configuration projector.
        let cfg = two_to_one(0.0, MHZ * 1.05);
        let h = build_full_many_to_one(&cfg).unwrap().at(0.9).to_dense();
        let l = &cfg.layout;
        for m0 in ["0", "1", "2"] {
            for m1 in ["0", "1", "2"] {
                let p = embed_product(l, &[(0, m0, m0), (1, m1, m1)]).unwrap().to_dense();
                let c = &h * &p - &p * &h;
                assert!(c.iter().all(|z| z.norm() < 1e-12));
            }
        }
    }

    #[test]
    fn dressed_pair_splits_by_v() {
        // Constant drive, one molecule in |0⟩: the {|10r⟩, |12R⟩} block has ±V/2.
        let v = MHZ * 4.04;
        let cfg = two_to_one(v, MHZ * 1.05);
        let h = build_full_many_to_one(&cfg).unwrap();
        let l = &cfg.layout;
        let idx = [l.parse_basis_name("10r").unwrap(), l.parse_basis_name("12R").unwrap()];
        let d = h.static_part.to_dense();
        let sub = DMatrix::from_fn(2, 2, |i, j| d[(idx[i], idx[j])]);
        let mut ev: Vec<f64> = sub.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] + v / 2.0).abs() < 1e-12 && (ev[1] - v / 2.0).abs() < 1e-12);
    }

    #[test]
    fn undriven_one_to_many_is_block_diagonal() {
        // Every static off-diagonal element exchanges |0r⟩ ↔ |2R⟩ on one atom.
        let cfg = one_to_many(2, MHZ * 1774.6, MHZ * 126.9);
        let h = build_full_one_to_many(&cfg).unwrap();
        let l = &cfg.layout;
        for &(r, c, _) in h.static_part.entries() {
            if r == c {
                continue;
            }
            let (a, b) = (l.labels_of(r), l.labels_of(c));
            let changed: Vec<usize> = (0..3).filter(|&k| a[k] != b[k]).collect();
            assert_eq!(changed.len(), 2);
            assert_eq!(changed[0], 0);
            let mut pair = [a[0], b[0]];
            pair.sort();
            assert_eq!(pair, ["0", "2"]);
        }
    }
}
