//! Ideal gate targets, fidelity curves, truth tables, full-versus-effective
//! comparisons and blockade diagnostics.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::dynamics::{evolve_density, evolve_state, IntegratorOptions, Observables, Trajectory};
use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, QuantumState, SystemLayout};
use crate::model::{build_hamiltonian, build_lindblad_set, GateConfig, GateVariant, ModelKind};

fn is_computational(label: &str, atom: bool) -> bool {
    if atom {
        label == "g" || label == "e"
    } else {
        label == "0" || label == "1"
    }
}

fn flip(label: &'static str) -> &'static str {
    match label {
        "g" => "e",
        "e" => "g",
        other => other,
    }
}

/// Conditional-flip permutation on the computational subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct IdealGateMap {
    pub variant: GateVariant,
    pub layout: SystemLayout,
}

impl IdealGateMap {
    pub fn new(cfg: &GateConfig) -> Self {
        IdealGateMap { variant: cfg.variant, layout: cfg.layout.clone() }
    }

    pub fn is_computational_index(&self, index: usize) -> bool {
        let labels = self.layout.labels_of(index);
        self.layout.sites().iter().zip(&labels).all(|(s, l)| is_computational(l, s.is_atom()))
    }

    /// Computational basis indices in layout order.
    pub fn computational_basis(&self) -> Vec<usize> {
        (0..self.layout.dim()).filter(|&i| self.is_computational_index(i)).collect()
    }

    fn triggered(&self, labels: &[&str]) -> bool {
        self.layout.molecule_sites().iter().all(|&m| labels[m] == "1")
    }

    pub fn ideal_output(&self, labels: &[&str]) -> Result<Vec<&'static str>> {
        let index = self.layout.index_of(labels)?;
        if !self.is_computational_index(index) {
            return Err(Error::InvalidState(format!(
                "{} is outside the computational subspace",
                self.layout.basis_name(index)
            )));
        }
        let mut out = self.layout.labels_of(index);
        if self.triggered(labels) {
            for a in self.layout.atom_sites() {
                out[a] = flip(out[a]);
            }
        }
        Ok(out)
    }

    pub fn map_index(&self, index: usize) -> Result<usize> {
        let labels = self.layout.labels_of(index);
        let out = self.ideal_output(&labels)?;
        self.layout.index_of(&out)
    }

    /// Linear extension of the permutation to a superposition.
    pub fn ideal_state(&self, psi: &QuantumState) -> Result<QuantumState> {
        let mut out = vec![C64::default(); psi.dim()];
        for (i, &a) in psi.amplitudes().iter().enumerate() {
            if a != C64::default() {
                out[self.map_index(i)?] += a;
            }
        }
        QuantumState::new(out)
    }
}

/// Initial state of a propagation.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    /// Every molecule in `|1⟩`, every atom in `|g⟩`.
    Trigger,
    /// Equal-weight superposition of all computational basis states.
    Uniform,
    Basis(String),
    /// Normalized on construction.
    Amplitudes(Vec<(String, C64)>),
}

impl InitialState {
    pub fn parse(spec: &str) -> Result<Self> {
        match spec {
            "trigger" => Ok(InitialState::Trigger),
            "uniform" => Ok(InitialState::Uniform),
            s if s.contains(':') || s.contains(',') => {
                let mut terms = Vec::new();
                for part in s.split(',') {
                    let (name, amp) = part
                        .split_once(':')
                        .ok_or_else(|| Error::config(format!("expected label:amplitude, got {part:?}")))?;
                    let amp = parse_complex(amp.trim())?;
                    terms.push((name.trim().to_string(), amp));
                }
                Ok(InitialState::Amplitudes(terms))
            }
            s => Ok(InitialState::Basis(s.to_string())),
        }
    }

    pub fn resolve(&self, map: &IdealGateMap) -> Result<QuantumState> {
        let layout = &map.layout;
        let dim = layout.dim();
        match self {
            InitialState::Trigger => {
                let labels: Vec<&str> =
                    layout.sites().iter().map(|s| if s.is_atom() { "g" } else { "1" }).collect();
                QuantumState::basis(dim, layout.index_of(&labels)?)
            }
            InitialState::Uniform => {
                let mut amps = vec![C64::default(); dim];
                for i in map.computational_basis() {
                    amps[i] = C64::from(1.0);
                }
                QuantumState::normalized(amps)
            }
            InitialState::Basis(name) => QuantumState::basis(dim, layout.parse_basis_name(name)?),
            InitialState::Amplitudes(terms) => {
                let mut amps = vec![C64::default(); dim];
                for (name, a) in terms {
                    amps[layout.parse_basis_name(name)?] += a;
                }
                QuantumState::normalized(amps)
            }
        }
    }
}

/// Parses `a`, `a+bi`, `a-bi` or `bi`.
fn parse_complex(s: &str) -> Result<C64> {
    let bad = || Error::config(format!("cannot parse amplitude {s:?}"));
    let Some(body) = s.strip_suffix('i') else {
        return s.parse::<f64>().map(C64::from).map_err(|_| bad());
    };
    let split = body
        .char_indices()
        .skip(1)
        .filter(|&(k, c)| (c == '+' || c == '-') && !matches!(body.as_bytes()[k - 1], b'e' | b'E'))
        .map(|(k, _)| k)
        .last();
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => x.parse::<f64>().map_err(|_| bad())?,
    };
    Ok(C64::new(re.parse::<f64>().map_err(|_| bad())?, im))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    pub model: ModelKind,
    pub with_decay: bool,
    pub samples: usize,
    pub integrator: IntegratorOptions,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            model: ModelKind::Full,
            with_decay: false,
            samples: 201,
            integrator: IntegratorOptions::default(),
        }
    }
}

/// Population columns for an initial state: input, ideal output and the
/// singly-excited `|r⟩` states of a basis input, or every computational state
/// of a superposition.
pub fn default_population_columns(map: &IdealGateMap, psi0: &QuantumState) -> Result<Vec<(String, usize)>> {
    let layout = &map.layout;
    let support: Vec<usize> =
        (0..psi0.dim()).filter(|&i| psi0.amplitudes()[i] != C64::default()).collect();
    let mut idx = Vec::new();
    if let [only] = support[..] {
        idx.push(only);
        if let Ok(out) = map.map_index(only) {
            idx.push(out);
        }
        let labels = layout.labels_of(only);
        for a in layout.atom_sites() {
            let mut l = labels.clone();
            l[a] = "r";
            idx.push(layout.index_of(&l)?);
        }
    } else {
        idx = map.computational_basis();
    }
    let mut seen = std::collections::BTreeSet::new();
    idx.retain(|i| seen.insert(*i));
    Ok(idx.into_iter().map(|i| (format!("pop_{}", layout.basis_name(i)), i)).collect())
}

/// Propagates `initial` and records `F(t)` against its ideal output.
pub fn gate_fidelity_curve(
    cfg: &GateConfig,
    initial: &InitialState,
    opts: &RunOptions,
) -> Result<Trajectory> {
    let map = IdealGateMap::new(cfg);
    let psi0 = initial.resolve(&map)?;
    let columns = default_population_columns(&map, &psi0)?;
    Ok(propagate(cfg, &psi0, &map, columns, opts)?.0)
}

enum Final {
    Pure(QuantumState),
    Mixed(DensityMatrix),
}

fn propagate(
    cfg: &GateConfig,
    psi0: &QuantumState,
    map: &IdealGateMap,
    populations: Vec<(String, usize)>,
    opts: &RunOptions,
) -> Result<(Trajectory, Final)> {
    let h = build_hamiltonian(cfg, opts.model)?;
    let reference = map.ideal_state(psi0)?;
    let obs = Observables { populations, reference: Some(reference) };
    let times = cfg.window.sample_times(opts.samples);
    if opts.with_decay {
        let lindblad = build_lindblad_set(cfg)?;
        let rho0 = DensityMatrix::from_pure(psi0);
        let (traj, rho) = evolve_density(&h, &lindblad, &rho0, cfg.window, &times, &obs, &opts.integrator)?;
        Ok((traj, Final::Mixed(rho)))
    } else {
        let (traj, psi) = evolve_state(&h, psi0, cfg.window, &times, &obs, &opts.integrator)?;
        Ok((traj, Final::Pure(psi)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruthRow {
    pub input: String,
    pub output: String,
    /// Final population of the ideal output.
    pub p_ideal: f64,
    /// Phase of the ideal-output amplitude (coherent runs only).
    pub phase: Option<f64>,
    /// Final population outside the computational subspace.
    pub leakage: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruthTable {
    pub rows: Vec<TruthRow>,
}

impl TruthTable {
    pub fn worst(&self) -> Option<&TruthRow> {
        self.rows.iter().min_by(|a, b| a.p_ideal.total_cmp(&b.p_ideal))
    }

    pub fn row(&self, input: &str) -> Option<&TruthRow> {
        self.rows.iter().find(|r| r.input == input)
    }
}

/// One propagation per computational basis input.
pub fn truth_table(cfg: &GateConfig, opts: &RunOptions) -> Result<TruthTable> {
    let map = IdealGateMap::new(cfg);
    let comp = map.computational_basis();
    let run = RunOptions { samples: 2, ..*opts };
    let mut rows = Vec::with_capacity(comp.len());
    for &i in &comp {
        let psi0 = QuantumState::basis(cfg.layout.dim(), i)?;
        let out = map.map_index(i)?;
        let (_, fin) = propagate(cfg, &psi0, &map, Vec::new(), &run)?;
        let pops: Vec<f64> = match &fin {
            Final::Pure(psi) => psi.populations(),
            Final::Mixed(rho) => rho.populations(),
        };
        let total: f64 = pops.iter().sum();
        let in_comp: f64 = comp.iter().map(|&j| pops[j]).sum();
        let phase = match &fin {
            Final::Pure(psi) => Some(psi.amplitudes()[out].arg()),
            Final::Mixed(_) => None,
        };
        rows.push(TruthRow {
            input: cfg.layout.basis_name(i),
            output: cfg.layout.basis_name(out),
            p_ideal: pops[out],
            phase,
            leakage: total - in_comp,
        });
    }
    Ok(TruthTable { rows })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FullVsEffective {
    pub times: Vec<f64>,
    pub full: Vec<f64>,
    pub effective: Vec<f64>,
    pub max_gap: f64,
}

/// Runs the full and effective models on one grid and compares `F(t)`.
pub fn full_vs_effective(cfg: &GateConfig, initial: &InitialState, opts: &RunOptions) -> Result<FullVsEffective> {
    if let GateVariant::OneToMany { n_targets } = cfg.variant {
        if n_targets != 2 {
            return Err(Error::UnsupportedEffectiveModel(format!(
                "no effective one-to-many model for {n_targets} targets"
            )));
        }
    }
    let map = IdealGateMap::new(cfg);
    let psi0 = initial.resolve(&map)?;
    let full = propagate(cfg, &psi0, &map, Vec::new(), &RunOptions { model: ModelKind::Full, ..*opts })?.0;
    let eff = propagate(cfg, &psi0, &map, Vec::new(), &RunOptions { model: ModelKind::Effective, ..*opts })?.0;
    let f = full.fidelity.unwrap_or_default();
    let e = eff.fidelity.unwrap_or_default();
    let max_gap = f.iter().zip(&e).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(FullVsEffective { times: full.times, full: f, effective: e, max_gap })
}

/// Splitting between the extreme dressed eigenvalues of the static block
/// reached from `molecular_config` with the first atom in `|r⟩`.
pub fn blockade_gap(cfg: &GateConfig, molecular_config: &[&str]) -> Result<f64> {
    let layout = &cfg.layout;
    let molecules = layout.molecule_sites();
    if molecular_config.len() != molecules.len() {
        return Err(Error::config(format!(
            "expected {} molecular labels, got {}",
            molecules.len(),
            molecular_config.len()
        )));
    }
    if !molecular_config.contains(&"0") {
        return Err(Error::config("blockade needs at least one molecule in |0>"));
    }
    let atoms = layout.atom_sites();
    let mut labels = vec![""; layout.n_sites()];
    for (&m, &l) in molecules.iter().zip(molecular_config) {
        labels[m] = l;
    }
    for (k, &a) in atoms.iter().enumerate() {
        labels[a] = if k == 0 { "r" } else { "g" };
    }
    let start = layout.index_of(&labels)?;
    let h = build_hamiltonian(cfg, ModelKind::Full)?.static_part;

    let mut block = vec![start];
    let mut k = 0;
    while k < block.len() {
        let i = block[k];
        for &(r, c, v) in h.entries() {
            if v != C64::default() && r == i && !block.contains(&c) {
                block.push(c);
            }
        }
        k += 1;
    }
    if block.len() == 1 {
        return Ok(0.0);
    }
    let n = block.len();
    let sub = DMatrix::from_fn(n, n, |a, b| h.get(block[a], block[b]));
    let ev = sub.symmetric_eigenvalues();
    let (lo, hi) = ev.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    Ok(hi - lo)
}

/// `(|a⟩ ± |b⟩)/√2` helper for callers building dressed states.
pub fn dressed_pair(dim: usize, a: usize, b: usize, sign: f64) -> Result<QuantumState> {
    let mut amps = vec![C64::default(); dim];
    amps[a] = C64::from(FRAC_1_SQRT_2);
    amps[b] = C64::from(sign * FRAC_1_SQRT_2);
    QuantumState::new(amps)
}
