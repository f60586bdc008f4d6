//! Run specification, mode dispatch and CSV emission.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::config::ConfigFile;
use crate::dynamics::IntegratorOptions;
use crate::error::{Error, Result};
use crate::gates::{
    blockade_gap, default_population_columns, full_vs_effective, truth_table, IdealGateMap, InitialState,
    RunOptions,
};
use crate::model::{GateConfig, ModelKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Populations,
    Fidelity,
    FullVsEffective,
    TruthTable,
    BlockadeGap,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    Preset(String),
    Config(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub source: Source,
    pub mode: Mode,
    /// Forces decay on; otherwise the configuration decides.
    pub with_decay: bool,
    pub model: ModelKind,
    pub initial: Option<String>,
    pub samples: usize,
    pub tol: Option<f64>,
}

impl RunSpec {
    pub fn new(source: Source, mode: Mode) -> Self {
        RunSpec {
            source,
            mode,
            with_decay: false,
            model: ModelKind::Full,
            initial: None,
            samples: 201,
            tol: None,
        }
    }
}

pub fn load_config(source: &Source) -> Result<ConfigFile> {
    match source {
        Source::Preset(name) => ConfigFile::preset(name),
        Source::Config(path) => ConfigFile::from_json(&std::fs::read_to_string(path)?),
    }
}

fn num(x: f64) -> String {
    format!("{x:.11e}")
}

fn initial_of(spec: &RunSpec) -> Result<InitialState> {
    match &spec.initial {
        Some(s) => InitialState::parse(s),
        None => Ok(InitialState::Trigger),
    }
}

/// Produces the CSV text for a run.
pub fn run(spec: &RunSpec) -> Result<String> {
    if spec.samples < 2 {
        return Err(Error::config("samples must be at least 2"));
    }
    let file = load_config(&spec.source)?;
    let cfg = file.to_gate_config()?;
    let mut integrator = IntegratorOptions::default();
    if let Some(tol) = spec.tol {
        if !(tol > 0.0) {
            return Err(Error::config("tolerance must be positive"));
        }
        integrator.rtol = tol;
        integrator.atol = tol * 1e-2;
    }
    let opts = RunOptions {
        model: spec.model,
        with_decay: spec.with_decay || file.with_decay,
        samples: spec.samples,
        integrator,
    };
    match spec.mode {
        Mode::Populations => populations_csv(&cfg, &initial_of(spec)?, &opts),
        Mode::Fidelity => fidelity_csv(&cfg, &initial_of(spec)?, &opts),
        Mode::FullVsEffective => {
            let cmp = full_vs_effective(&cfg, &initial_of(spec)?, &opts)?;
            let mut out = String::from("t_us,fidelity_full,fidelity_effective,gap\n");
            for k in 0..cmp.times.len() {
                let (f, e) = (cmp.full[k], cmp.effective[k]);
                let _ = writeln!(out, "{},{},{},{}", num(cmp.times[k]), num(f), num(e), num((f - e).abs()));
            }
            Ok(out)
        }
        Mode::TruthTable => {
            let table = truth_table(&cfg, &opts)?;
            let mut out = String::from("input,output,p_ideal,phase,leakage\n");
            for r in &table.rows {
                let phase = r.phase.map(num).unwrap_or_default();
                let _ = writeln!(out, "{},{},{},{},{}", r.input, r.output, num(r.p_ideal), phase, num(r.leakage));
            }
            Ok(out)
        }
        Mode::BlockadeGap => blockade_csv(&cfg),
    }
}

fn trajectory_csv(
    cfg: &GateConfig,
    traj: &crate::dynamics::Trajectory,
    with_pulses: bool,
    with_decay: bool,
) -> String {
    let total = if with_decay { "trace" } else { "norm" };
    let mut out = String::from("t_us");
    for l in &traj.population_labels {
        out.push(',');
        out.push_str(l);
    }
    if with_pulses {
        out.push_str(",omega_1_mhz,omega_2_mhz");
    }
    if traj.fidelity.is_some() {
        out.push_str(",fidelity");
    }
    let _ = writeln!(out, ",{total}");
    for (k, &t) in traj.times.iter().enumerate() {
        out.push_str(&num(t));
        for p in &traj.populations[k] {
            out.push(',');
            out.push_str(&num(*p));
        }
        if with_pulses {
            for p in &cfg.pulses {
                out.push(',');
                out.push_str(&num(p.evaluate(t) / std::f64::consts::TAU));
            }
        }
        if let Some(f) = &traj.fidelity {
            out.push(',');
            out.push_str(&num(f[k]));
        }
        let _ = writeln!(out, ",{}", num(traj.total[k]));
    }
    out
}

fn populations_csv(cfg: &GateConfig, initial: &InitialState, opts: &RunOptions) -> Result<String> {
    let traj = crate::gates::gate_fidelity_curve(cfg, initial, opts)?;
    Ok(trajectory_csv(cfg, &traj, true, opts.with_decay))
}

fn fidelity_csv(cfg: &GateConfig, initial: &InitialState, opts: &RunOptions) -> Result<String> {
    let mut traj = crate::gates::gate_fidelity_curve(cfg, initial, opts)?;
    traj.population_labels.clear();
    for row in traj.populations.iter_mut() {
        row.clear();
    }
    Ok(trajectory_csv(cfg, &traj, false, opts.with_decay))
}

fn blockade_csv(cfg: &GateConfig) -> Result<String> {
    let n = cfg.layout.molecule_sites().len();
    let mut out = String::from("molecules,gap_mhz\n");
    for bits in 0..(1usize << n) {
        let labels: Vec<&str> = (0..n).map(|k| if bits >> (n - 1 - k) & 1 == 1 { "1" } else { "0" }).collect();
        if !labels.contains(&"0") {
            continue;
        }
        let gap = blockade_gap(cfg, &labels)?;
        let _ = writeln!(out, "{},{}", labels.concat(), num(gap / std::f64::consts::TAU));
    }
    Ok(out)
}

/// Population column labels a `populations` run would emit.
pub fn population_columns(cfg: &GateConfig, initial: &InitialState) -> Result<Vec<String>> {
    let map = IdealGateMap::new(cfg);
    let psi0 = initial.resolve(&map)?;
    Ok(default_population_columns(&map, &psi0)?.into_iter().map(|c| c.0).collect())
}
