//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::collections::BTreeMap;
use std::f64::consts::{SQRT_2, TAU};
use std::time::Instant;

use nalgebra::Vector3;
use num_complex::Complex64 as C64;

use molryd::cli::{self, Mode, RunSpec, Source};
use molryd::config::{ConfigFile, PRESETS};
use molryd::dynamics::{evolve_density, evolve_state, IntegratorOptions, Observables};
use molryd::gates::{blockade_gap, full_vs_effective, gate_fidelity_curve, truth_table, IdealGateMap, InitialState, RunOptions};
use molryd::hilbert::{embed_site_operator, DensityMatrix, QuantumState, SiteSpec, SparseOperator, SystemLayout};
use molryd::interactions::{dipole_coupling, reduce_channels, DipoleChannel, Geometry, MolecularTransition, Polarization};
use molryd::model::{build_hamiltonian, build_lindblad_set, DecayRates, DriveTerm, Envelope, GateConfig, ModelKind, TimeDependentHamiltonian};
use molryd::pulses::{area_linear, area_quadratic, solve_width_for_area, AreaCondition, GaussianPulse, Pulse, Window};

const MHZ: f64 = TAU;

struct Report {
    failed: usize,
    /// Fidelity CSVs from the first run of each preset, compared again for determinism.
    csv: BTreeMap<String, String>,
}

impl Report {
    fn line(&mut self, id: u32, title: &str, ok: bool, details: &str, secs: f64) {
        if !ok {
            self.failed += 1;
        }
        println!("{} C{id} {title}: {details} [{secs:.2} s]", if ok { "PASS" } else { "FAIL" });
    }

    fn preset_csv(&mut self, name: &str) -> String {
        let csv = run_preset(name);
        self.csv.entry(name.to_string()).or_insert_with(|| csv.clone());
        csv
    }
}

fn preset(name: &str) -> GateConfig {
    ConfigFile::preset(name).unwrap().to_gate_config().unwrap()
}

fn run_preset(name: &str) -> String {
    cli::run(&RunSpec::new(Source::Preset(name.into()), Mode::Fidelity)).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let j = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(j).unwrap().parse().unwrap()).collect()
}

fn last(v: &[f64]) -> f64 {
    *v.last().unwrap()
}

fn drift(v: &[f64]) -> f64 {
    v.iter().map(|x| (x - v[0]).abs()).fold(0.0, f64::max)
}

fn within(got: f64, want: f64, rel: f64) -> bool {
    (got / want - 1.0).abs() <= rel
}

fn coupling_pipeline(r: &mut Report) {
    let t = Instant::now();
    let g = Geometry::with_z_axis(vec![Vector3::zeros(), Vector3::new(1.0, 0.0, 0.0)]).unwrap();
    let ch = |m| DipoleChannel::new(m, Polarization::Minus, 1.72, 4911.0).unwrap();
    let vp = dipole_coupling(&g, 0, 1, &ch(MolecularTransition::ToPlus)).unwrap();
    let vm = dipole_coupling(&g, 0, 1, &ch(MolecularTransition::ToMinus)).unwrap();
    let v = 2.0 * reduce_channels(vp, vm).unwrap().effective_half;
    let (a, b, c) = (vp.norm() / MHZ, vm.norm() / MHZ, v / MHZ);
    let ok = within(a, 0.64, 0.02) && within(b, 1.91, 0.02) && within(c, 4.04, 0.02);
    let d = format!("|V+/2| = {a:.4} MHz (0.64), |V-/2| = {b:.4} MHz (1.91), V = {c:.4} MHz (4.04), tol 2%");
    r.line(1, "coupling pipeline", ok, &d, t.elapsed().as_secs_f64());
}

fn pulse_areas(r: &mut Report) {
    let t = Instant::now();
    let two = preset("fig2");
    let four = preset("fig4");
    let a2 = area_linear(&two.pulses[0].into(), two.window);
    let a4 = area_quadratic(&four.pulses[0].into(), four.delta, four.window);
    let ok = within(a2, TAU, 0.01) && within(a4, TAU, 0.01);
    let d = format!("linear area {:.5} = {:.5}·2π, quadratic area {:.5} = {:.5}·2π, tol 1%", a2, a2 / TAU, a4, a4 / TAU);
    r.line(2, "pulse-area closure", ok, &d, t.elapsed().as_secs_f64());
}

fn fig2_reproduction(r: &mut Report, norms: &mut Vec<(String, f64)>) {
    let t = Instant::now();
    let cfg = preset("fig2");
    let opts = RunOptions::default();
    let uniform = gate_fidelity_curve(&cfg, &InitialState::Uniform, &opts).unwrap();
    let f = uniform.final_fidelity().unwrap();
    norms.push(("fig2 uniform".into(), uniform.max_total_drift()));
    let csv = r.preset_csv("fig2");
    norms.push(("fig2 trigger".into(), drift(&column(&csv, "norm"))));
    let table = truth_table(&cfg, &opts).unwrap();
    let p11 = table.row("11g").unwrap().p_ideal;
    let blocked = table.rows.iter().filter(|row| !row.input.starts_with("11")).map(|row| row.p_ideal).fold(1.0, f64::min);
    let gap = full_vs_effective(&cfg, &InitialState::Uniform, &opts).unwrap().max_gap;
    let secs = t.elapsed().as_secs_f64();
    let ok = f >= 0.99 && p11 >= 0.99 && blocked >= 0.98 && gap <= 0.02 && secs <= 5.0;
    let d = format!(
        "uniform F = {f:.6} (>= 0.99), P(11e|11g) = {p11:.6} (>= 0.99), min blocked P = {blocked:.6} (>= 0.98), \
         full-vs-effective gap = {gap:.2e} (<= 0.02), runtime <= 5 s"
    );
    r.line(3, "two-to-one coherent", ok, &d, secs);
}

fn fig4_reproduction(r: &mut Report, norms: &mut Vec<(String, f64)>) -> f64 {
    let t = Instant::now();
    let cfg = preset("fig4");
    let opts = RunOptions::default();
    let csv = r.preset_csv("fig4");
    let f = last(&column(&csv, "fidelity"));
    norms.push(("fig4 trigger".into(), drift(&column(&csv, "norm"))));
    let table = truth_table(&cfg, &opts).unwrap();
    let p = table.row("1gg").unwrap().p_ideal;
    let zero = table.rows.iter().filter(|row| row.input.starts_with('0')).map(|row| row.p_ideal).fold(1.0, f64::min);
    let gap = full_vs_effective(&cfg, &InitialState::Trigger, &opts).unwrap().max_gap;
    let secs = t.elapsed().as_secs_f64();
    let uniform = gate_fidelity_curve(&cfg, &InitialState::Uniform, &RunOptions { samples: 2, ..opts })
        .unwrap()
        .final_fidelity()
        .unwrap();
    let ok = f >= 0.99 && p >= 0.98 && zero >= 0.98 && gap <= 0.03 && secs <= 30.0;
    let d = format!(
        "F(1gg) = {f:.6} (>= 0.99), P(1ee|1gg) = {p:.6} (>= 0.98), min molecule-0 P = {zero:.6} (>= 0.98), \
         full-vs-effective gap = {gap:.4} (<= 0.03), runtime <= 30 s; uniform-input F = {uniform:.6}"
    );
    r.line(4, "one-to-two coherent", ok, &d, secs);
    f
}

fn decay_reproduction(r: &mut Report, coherent_fig4: f64, traces: &mut Vec<(String, f64)>) {
    let t = Instant::now();
    let coherent_fig2 = last(&column(&r.preset_csv("fig2"), "fidelity"));
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, base) in [("fig5a", coherent_fig2), ("fig5b", coherent_fig4)] {
        let csv = r.preset_csv(name);
        let f = last(&column(&csv, "fidelity"));
        traces.push((name.into(), drift(&column(&csv, "trace"))));
        let drop = base - f;
        ok &= drop > 0.0 && drop <= 0.01;
        parts.push(format!("{name} F = {f:.6}, drop = {drop:.5}"));
    }
    let secs = t.elapsed().as_secs_f64();
    ok &= secs <= 120.0;
    let d = format!("{} (0 < drop <= 0.01), runtime <= 120 s", parts.join("; "));
    r.line(5, "spontaneous decay", ok, &d, secs);
}

fn fig6_reproduction(r: &mut Report, norms: &mut Vec<(String, f64)>) {
    let t = Instant::now();
    let csv_a = r.preset_csv("fig6a");
    let fa = last(&column(&csv_a, "fidelity"));
    norms.push(("fig6a trigger".into(), drift(&column(&csv_a, "norm"))));
    let t_b = Instant::now();
    let csv_b = r.preset_csv("fig6b");
    let secs_b = t_b.elapsed().as_secs_f64();
    let fb = last(&column(&csv_b, "fidelity"));
    norms.push(("fig6b trigger".into(), drift(&column(&csv_b, "norm"))));
    let ok = fa >= 0.99 && fb >= 0.99 && secs_b <= 300.0;
    let d = format!(
        "three-to-one F(111g) = {fa:.6}, one-to-three F(1ggg) = {fb:.6} (>= 0.99), one-to-three runtime {secs_b:.1} s (<= 300 s)"
    );
    r.line(6, "four-qubit gates", ok, &d, t.elapsed().as_secs_f64());
}

fn two_level(omega: f64) -> TimeDependentHamiltonian {
    TimeDependentHamiltonian {
        static_part: SparseOperator::zero(2),
        drive_terms: vec![DriveTerm {
            envelope: Envelope::Pulse(0),
            operator: SparseOperator::from_triplets(2, [(0, 1, C64::from(0.5))]).unwrap(),
        }],
        pulses: vec![Pulse::Constant(omega)],
    }
}

fn property_suite(r: &mut Report, norms: &[(String, f64)], traces: &[(String, f64)]) {
    let t = Instant::now();
    let mut failures: Vec<String> = Vec::new();
    let mut check = |ok: bool, what: String| {
        if !ok {
            failures.push(what);
        }
    };

    // Hermiticity at deterministic sample times.
    for name in PRESETS {
        let cfg = preset(name);
        let kinds: &[ModelKind] = if name == "fig6b" { &[ModelKind::Full] } else { &[ModelKind::Full, ModelKind::Effective] };
        for &kind in kinds {
            let h = build_hamiltonian(&cfg, kind).unwrap();
            let herm = cfg.window.sample_times(101).iter().all(|&s| h.at(s).check_hermitian(1e-12));
            check(herm, format!("{name} {kind:?} not Hermitian"));
        }
    }

    let worst_norm = norms.iter().map(|n| n.1).fold(0.0, f64::max);
    for (name, d) in norms {
        check(*d <= 1e-6, format!("{name} norm drift {d:.2e}"));
    }
    let worst_trace = traces.iter().map(|n| n.1).fold(0.0, f64::max);
    for (name, d) in traces {
        check(*d <= 1e-6, format!("{name} trace drift {d:.2e}"));
    }

    // Positivity of the final density matrix with decay.
    let mut min_eig = f64::INFINITY;
    for name in ["fig5a", "fig6a"] {
        let cfg = preset(name);
        let h = build_hamiltonian(&cfg, ModelKind::Full).unwrap();
        let l = build_lindblad_set(&cfg).unwrap();
        let map = IdealGateMap::new(&cfg);
        let psi = InitialState::Trigger.resolve(&map).unwrap();
        let (_, rho) = evolve_density(
            &h,
            &l,
            &DensityMatrix::from_pure(&psi),
            cfg.window,
            &cfg.window.sample_times(2),
            &Observables::default(),
            &IntegratorOptions::default(),
        )
        .unwrap();
        min_eig = min_eig.min(rho.min_eigenvalue());
    }
    check(min_eig >= -1e-6, format!("min eigenvalue {min_eig:.2e}"));

    // Zero-rate Lindblad against Schrödinger on a preset.
    let mut cfg = preset("fig2");
    cfg.decay = DecayRates::default();
    let h = build_hamiltonian(&cfg, ModelKind::Full).unwrap();
    let l = build_lindblad_set(&cfg).unwrap();
    let map = IdealGateMap::new(&cfg);
    let psi = InitialState::Uniform.resolve(&map).unwrap();
    let trig = InitialState::Trigger.resolve(&map).unwrap();
    let psi = QuantumState::normalized(psi.amplitudes().iter().zip(trig.amplitudes()).map(|(a, b)| a + b).collect()).unwrap();
    let obs = Observables { populations: vec![], reference: Some(map.ideal_state(&psi).unwrap()) };
    let times = cfg.window.sample_times(41);
    let opts = IntegratorOptions::default();
    let (a, psi_t) = evolve_state(&h, &psi, cfg.window, &times, &obs, &opts).unwrap();
    let (b, rho_t) = evolve_density(&h, &l, &DensityMatrix::from_pure(&psi), cfg.window, &times, &obs, &opts).unwrap();
    let pure = DensityMatrix::from_pure(&psi_t);
    let lind_gap = pure
        .data()
        .iter()
        .zip(rho_t.data())
        .map(|(x, y)| (x - y).norm())
        .chain(a.fidelity.unwrap().iter().zip(b.fidelity.unwrap().iter()).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    check(lind_gap <= 1e-6, format!("zero-rate Lindblad differs by {lind_gap:.2e}"));

    // Rabi oracle.
    let omega = MHZ * 1.05;
    let w = Window::new(0.0, 2.0).unwrap();
    let obs = Observables { populations: vec![("e".into(), 1)], reference: None };
    let (traj, _) = evolve_state(&two_level(omega), &QuantumState::basis(2, 0).unwrap(), w, &w.sample_times(41), &obs, &opts).unwrap();
    let rabi = traj
        .times
        .iter()
        .zip(&traj.populations)
        .map(|(&s, p)| (p[0] - (omega * s / 2.0).sin().powi(2)).abs())
        .fold(0.0, f64::max);
    check(rabi <= 1e-6, format!("Rabi error {rabi:.2e}"));

    // Exponential decay oracle on a lone atom.
    let atom = SystemLayout::new(vec![SiteSpec::Atom4]).unwrap();
    let gamma = MHZ * 4.58e-3 * 100.0;
    let amp = C64::from((gamma / 2.0).sqrt());
    let set = molryd::model::LindbladSet {
        operators: vec![
            embed_site_operator(&atom, 0, "g", "r").unwrap().scale(amp),
            embed_site_operator(&atom, 0, "e", "r").unwrap().scale(amp),
        ],
    };
    let h0 = TimeDependentHamiltonian { static_part: SparseOperator::zero(4), drive_terms: vec![], pulses: vec![] };
    let w = Window::new(0.0, 4.0).unwrap();
    let obs = Observables { populations: vec![("g".into(), 0), ("r".into(), 2)], reference: None };
    let rho0 = DensityMatrix::from_pure(&QuantumState::basis(4, 2).unwrap());
    let (traj, _) = evolve_density(&h0, &set, &rho0, w, &w.sample_times(41), &obs, &opts).unwrap();
    let decay = traj
        .times
        .iter()
        .zip(&traj.populations)
        .map(|(&s, p)| {
            let pr = (-gamma * s).exp();
            (p[1] - pr).abs().max((p[0] - (1.0 - pr) / 2.0).abs())
        })
        .fold(0.0, f64::max);
    check(decay <= 1e-6, format!("decay error {decay:.2e}"));

    // Blockade splittings.
    let cfg = preset("fig2");
    let v = MHZ * 4.04;
    let single = (blockade_gap(&cfg, &["1", "0"]).unwrap() - v).abs().max((blockade_gap(&cfg, &["0", "1"]).unwrap() - v).abs());
    let both = (blockade_gap(&cfg, &["0", "0"]).unwrap() - SQRT_2 * v).abs();
    check(single <= 1e-10 && both <= 1e-10, format!("blockade errors {single:.2e} {both:.2e}"));

    // Effective model closes an exact X when the area is exactly 2π.
    let mut cfg = preset("fig2");
    let om = cfg.pulses[0].omega_max;
    let sigma = solve_width_for_area(om, AreaCondition::Linear, TAU).unwrap();
    let t0 = 8.0 * sigma;
    cfg.pulses = [GaussianPulse::new(om, t0, sigma, 1.0).unwrap(), GaussianPulse::new(om, t0, sigma, -1.0).unwrap()];
    cfg.window = Window::new(0.0, 2.0 * t0).unwrap();
    let eff = RunOptions { model: ModelKind::Effective, samples: 2, ..Default::default() };
    let fx = gate_fidelity_curve(&cfg, &InitialState::Trigger, &eff).unwrap().final_fidelity().unwrap();
    check(fx >= 1.0 - 1e-4, format!("effective X fidelity {fx:.8}"));

    let ok = failures.is_empty();
    let d = format!(
        "max norm drift {worst_norm:.2e}, max trace drift {worst_trace:.2e}, min eigenvalue {min_eig:.2e}, \
         zero-rate Lindblad gap {lind_gap:.2e}, Rabi {rabi:.2e}, decay {decay:.2e}, blockade {:.2e}, \
         effective X F = {fx:.8}{}",
        single.max(both),
        if ok { String::new() } else { format!("; failing: {}", failures.join(", ")) }
    );
    r.line(7, "property suite", ok, &d, t.elapsed().as_secs_f64());
}

fn determinism(r: &mut Report) {
    let t = Instant::now();
    let mut differing = Vec::new();
    for name in PRESETS {
        let first = match r.csv.get(name) {
            Some(c) => c.clone(),
            None => r.preset_csv(name),
        };
        if run_preset(name) != first {
            differing.push(name);
        }
    }
    let ok = differing.is_empty();
    let d = if ok {
        format!("{} preset CSVs byte-identical across two runs", PRESETS.len())
    } else {
        format!("differing: {}", differing.join(", "))
    };
    r.line(8, "determinism", ok, &d, t.elapsed().as_secs_f64());
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut r = Report { failed: 0, csv: BTreeMap::new() };
    let mut norms = Vec::new();
    let mut traces = Vec::new();
    coupling_pipeline(&mut r);
    pulse_areas(&mut r);
    fig2_reproduction(&mut r, &mut norms);
    let f4 = fig4_reproduction(&mut r, &mut norms);
    decay_reproduction(&mut r, f4, &mut traces);
    fig6_reproduction(&mut r, &mut norms);
    property_suite(&mut r, &norms, &traces);
    determinism(&mut r);
    println!("acceptance: {} of 8 criteria passed", 8 - r.failed);
    if r.failed > 0 {
        std::process::exit(1);
    }
}
