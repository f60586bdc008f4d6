//! Time propagation: Schrödinger and Lindblad right-hand sides, an adaptive
//! Dormand–Prince 5(4) integrator with dense output and a fixed-step RK4.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, QuantumState, SparseOperator};
use crate::model::{Envelope, LindbladSet, TimeDependentHamiltonian};
use crate::pulses::Window;

/// `dy/dt = f(t, y)` on a complex vector.
pub trait OdeRhs {
    fn dim(&self) -> usize;
    fn eval(&mut self, t: f64, y: &[C64], dy: &mut [C64]);
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    /// Adaptive Dormand–Prince 5(4) with PI step control.
    Dopri5,
    /// Classical RK4 with step at most `dt`, aligned to the sample times.
    Rk4 { dt: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorOptions {
    pub method: Method,
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step size, if any.
    pub max_step: Option<f64>,
    pub max_steps: usize,
    pub initial_step: Option<f64>,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            method: Method::Dopri5,
            rtol: 1e-8,
            atol: 1e-10,
            max_step: None,
            max_steps: 20_000_000,
            initial_step: None,
        }
    }
}

impl IntegratorOptions {
    pub fn with_rtol(rtol: f64) -> Self {
        IntegratorOptions { rtol, ..Default::default() }
    }

    /// Caps the step at `0.05 / max|H_ii|` so every diagonal phase is
    /// resolved explicitly.
    pub fn with_phase_resolving_cap(mut self, h: &TimeDependentHamiltonian) -> Self {
        let d = max_abs_diagonal(h);
        if d > 0.0 {
            self.max_step = Some(0.05 / d);
        }
        self
    }
}

/// Largest static diagonal magnitude plus the drive diagonals at their peak.
pub fn max_abs_diagonal(h: &TimeDependentHamiltonian) -> f64 {
    let mut diag: Vec<f64> = h.static_part.diagonal().iter().map(|z| z.norm()).collect();
    for term in &h.drive_terms {
        let peak = match term.envelope {
            Envelope::Pulse(k) => peak_of(h, k),
            Envelope::Product(j, k) => peak_of(h, j) * peak_of(h, k),
        };
        for (i, z) in term.operator.hermitize().diagonal().iter().enumerate() {
            diag[i] += peak * z.norm();
        }
    }
    diag.into_iter().fold(0.0, f64::max)
}

fn peak_of(h: &TimeDependentHamiltonian, k: usize) -> f64 {
    match h.pulses[k] {
        crate::pulses::Pulse::Gaussian(g) => g.omega_max,
        crate::pulses::Pulse::Constant(v) => v.abs(),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFE: f64 = 0.9;
const FAC1: f64 = 0.2;
const FAC2: f64 = 10.0;
const BETA: f64 = 0.04;

fn check_samples(window: Window, samples: &[f64]) -> Result<()> {
    for w in samples.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::config("sample times must be strictly increasing"));
        }
    }
    if let (Some(&a), Some(&b)) = (samples.first(), samples.last()) {
        if a < window.start || b > window.end {
            return Err(Error::config("sample times must lie inside the integration window"));
        }
    }
    Ok(())
}

fn rms_norm(v: &[C64], scale_ref: &[C64], rtol: f64, atol: f64) -> f64 {
    let s: f64 = v
        .iter()
        .zip(scale_ref)
        .map(|(e, y)| {
            let sc = atol + rtol * y.norm();
            (e.norm() / sc).powi(2)
        })
        .sum();
    (s / v.len() as f64).sqrt()
}

fn initial_step<R: OdeRhs>(rhs: &mut R, t: f64, y: &[C64], f0: &[C64], opts: &IntegratorOptions, hmax: f64) -> f64 {
    let n = y.len();
    let d0 = rms_norm(y, y, opts.rtol, opts.atol);
    let d1 = rms_norm(f0, y, opts.rtol, opts.atol);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(hmax);
    let y1: Vec<C64> = (0..n).map(|i| y[i] + f0[i] * h0).collect();
    let mut f1 = vec![C64::default(); n];
    rhs.eval(t + h0, &y1, &mut f1);
    let diff: Vec<C64> = (0..n).map(|i| f1[i] - f0[i]).collect();
    let d2 = rms_norm(&diff, y, opts.rtol, opts.atol) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(hmax)
}

/// Integrates from `window.start` to `window.end`, calling `on_sample(k, t_k, y(t_k))`
/// for every requested sample time. Returns the final state.
pub fn integrate<R: OdeRhs>(
    rhs: &mut R,
    window: Window,
    y0: Vec<C64>,
    sample_times: &[f64],
    opts: &IntegratorOptions,
    mut on_sample: impl FnMut(usize, f64, &[C64]),
) -> Result<(Vec<C64>, IntegrationStats)> {
    if y0.len() != rhs.dim() {
        return Err(Error::DimensionMismatch { expected: rhs.dim(), got: y0.len() });
    }
    check_samples(window, sample_times)?;
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(Error::config("tolerances must be positive"));
    }
    match opts.method {
        Method::Dopri5 => dopri5(rhs, window, y0, sample_times, opts, &mut on_sample),
        Method::Rk4 { dt } => rk4(rhs, window, y0, sample_times, dt, &mut on_sample),
    }
}

fn dopri5<R: OdeRhs>(
    rhs: &mut R,
    window: Window,
    mut y: Vec<C64>,
    samples: &[f64],
    opts: &IntegratorOptions,
    on_sample: &mut dyn FnMut(usize, f64, &[C64]),
) -> Result<(Vec<C64>, IntegrationStats)> {
    let n = y.len();
    let zero = C64::default();
    let mut k1 = vec![zero; n];
    let mut k2 = vec![zero; n];
    let mut k3 = vec![zero; n];
    let mut k4 = vec![zero; n];
    let mut k5 = vec![zero; n];
    let mut k6 = vec![zero; n];
    let mut k7 = vec![zero; n];
    let mut ys = vec![zero; n];
    let mut y5 = vec![zero; n];
    let mut err_v = vec![zero; n];
    let mut dense = vec![zero; n];

    let mut stats = IntegrationStats::default();
    let mut t = window.start;
    let hmax = opts.max_step.unwrap_or(window.duration()).min(window.duration());
    let mut next = 0;
    while next < samples.len() && samples[next] <= t {
        on_sample(next, samples[next], &y);
        next += 1;
    }

    rhs.eval(t, &y, &mut k1);
    stats.evaluations += 1;
    let mut h = match opts.initial_step {
        Some(h) => h.min(hmax),
        None => {
            stats.evaluations += 1;
            initial_step(rhs, t, &y, &k1, opts, hmax)
        }
    };
    let expo1 = 0.2 - BETA * 0.75;
    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;
    let mut steps = 0usize;

    while t < window.end {
        if steps >= opts.max_steps {
            return Err(Error::StepBudgetExhausted { t, max_steps: opts.max_steps });
        }
        if h < 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        let last = t + 1.01 * h >= window.end;
        if last {
            h = window.end - t;
        }
        steps += 1;

        for i in 0..n {
            ys[i] = y[i] + (k1[i] * A21) * h;
        }
        rhs.eval(t + C2 * h, &ys, &mut k2);
        for i in 0..n {
            ys[i] = y[i] + (k1[i] * A31 + k2[i] * A32) * h;
        }
        rhs.eval(t + C3 * h, &ys, &mut k3);
        for i in 0..n {
            ys[i] = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * h;
        }
        rhs.eval(t + C4 * h, &ys, &mut k4);
        for i in 0..n {
            ys[i] = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * h;
        }
        rhs.eval(t + C5 * h, &ys, &mut k5);
        for i in 0..n {
            ys[i] = y[i] + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * h;
        }
        rhs.eval(t + h, &ys, &mut k6);
        for i in 0..n {
            y5[i] = y[i] + (k1[i] * A71 + k3[i] * A73 + k4[i] * A74 + k5[i] * A75 + k6[i] * A76) * h;
        }
        rhs.eval(t + h, &y5, &mut k7);
        stats.evaluations += 6;
        for i in 0..n {
            err_v[i] = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
        }
        let err: f64 = {
            let s: f64 = (0..n)
                .map(|i| {
                    let sc = opts.atol + opts.rtol * y[i].norm().max(y5[i].norm());
                    (err_v[i].norm() / sc).powi(2)
                })
                .sum();
            (s / n as f64).sqrt()
        };
        if !err.is_finite() {
            return Err(Error::NonFinite { t });
        }
        let fac11 = err.powf(expo1);
        let fac = (fac11 / facold.powf(BETA) / SAFE).clamp(1.0 / FAC2, 1.0 / FAC1);
        let mut h_new = h / fac;

        if err <= 1.0 {
            facold = err.max(1e-4);
            stats.accepted += 1;
            let t_new = if last { window.end } else { t + h };
            if next < samples.len() && samples[next] <= t_new {
                // Hairer's continuous extension; `dense` holds the fourth coefficient.
                for i in 0..n {
                    dense[i] = (k1[i] * D1 + k3[i] * D3 + k4[i] * D4 + k5[i] * D5 + k6[i] * D6 + k7[i] * D7) * h;
                }
                while next < samples.len() && samples[next] <= t_new {
                    let s = ((samples[next] - t) / h).clamp(0.0, 1.0);
                    let s1 = 1.0 - s;
                    for i in 0..n {
                        let ydiff = y5[i] - y[i];
                        let bspl = k1[i] * h - ydiff;
                        let c3 = ydiff - k7[i] * h - bspl;
                        ys[i] = y[i] + (ydiff + (bspl + (c3 + dense[i] * s1) * s) * s1) * s;
                    }
                    on_sample(next, samples[next], &ys);
                    next += 1;
                }
            }
            std::mem::swap(&mut y, &mut y5);
            std::mem::swap(&mut k1, &mut k7);
            t = t_new;
            if last_rejected {
                h_new = h_new.min(h);
            }
            last_rejected = false;
            h = h_new.min(hmax);
        } else {
            stats.rejected += 1;
            h /= (fac11 / SAFE).min(1.0 / FAC1);
            last_rejected = true;
        }
    }
    Ok((y, stats))
}

fn rk4<R: OdeRhs>(
    rhs: &mut R,
    window: Window,
    mut y: Vec<C64>,
    samples: &[f64],
    dt: f64,
    on_sample: &mut dyn FnMut(usize, f64, &[C64]),
) -> Result<(Vec<C64>, IntegrationStats)> {
    if !(dt > 0.0) {
        return Err(Error::config("RK4 step must be positive"));
    }
    let n = y.len();
    let zero = C64::default();
    let (mut k1, mut k2, mut k3, mut k4, mut ys) =
        (vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]);
    let mut stats = IntegrationStats::default();
    let mut stops: Vec<f64> = samples.to_vec();
    if stops.last().is_none_or(|&s| s < window.end) {
        stops.push(window.end);
    }
    let mut t = window.start;
    for (k, &stop) in stops.iter().enumerate() {
        let span = stop - t;
        if span > 0.0 {
            let m = (span / dt).ceil().max(1.0) as usize;
            let h = span / m as f64;
            for j in 0..m {
                let tj = t + h * j as f64;
                rhs.eval(tj, &y, &mut k1);
                for i in 0..n {
                    ys[i] = y[i] + k1[i] * (0.5 * h);
                }
                rhs.eval(tj + 0.5 * h, &ys, &mut k2);
                for i in 0..n {
                    ys[i] = y[i] + k2[i] * (0.5 * h);
                }
                rhs.eval(tj + 0.5 * h, &ys, &mut k3);
                for i in 0..n {
                    ys[i] = y[i] + k3[i] * h;
                }
                rhs.eval(tj + h, &ys, &mut k4);
                for i in 0..n {
                    y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
                }
                if !y.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite { t: tj + h });
                }
                stats.evaluations += 4;
                stats.accepted += 1;
            }
            t = stop;
        }
        if k < samples.len() {
            on_sample(k, stop, &y);
        }
    }
    Ok((y, stats))
}

/// Hamiltonian in CSR form on the union sparsity pattern of all its terms.
struct CsrHamiltonian {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    base: Vec<C64>,
    /// Per drive term: (envelope, positions into the pattern, coefficients).
    terms: Vec<(Envelope, Vec<(usize, C64)>)>,
    pulses: Vec<crate::pulses::Pulse>,
    vals: Vec<C64>,
}

impl CsrHamiltonian {
    fn new(h: &TimeDependentHamiltonian, extra_static: Option<&SparseOperator>) -> Self {
        let dim = h.dim();
        let mut stat = h.static_part.clone();
        if let Some(e) = extra_static {
            stat = stat.add(e).expect("same dimension");
        }
        let drives: Vec<SparseOperator> = h.drive_terms.iter().map(|d| d.operator.hermitize()).collect();
        let mut pattern: Vec<(usize, usize)> = stat.entries().iter().map(|e| (e.0, e.1)).collect();
        for d in &drives {
            pattern.extend(d.entries().iter().map(|e| (e.0, e.1)));
        }
        pattern.sort_unstable();
        pattern.dedup();
        let mut row_ptr = vec![0usize; dim + 1];
        for &(r, _) in &pattern {
            row_ptr[r + 1] += 1;
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let cols: Vec<usize> = pattern.iter().map(|p| p.1).collect();
        let pos = |r: usize, c: usize| pattern.binary_search(&(r, c)).expect("in pattern");
        let mut base = vec![C64::default(); pattern.len()];
        for &(r, c, v) in stat.entries() {
            base[pos(r, c)] += v;
        }
        let terms = h
            .drive_terms
            .iter()
            .zip(&drives)
            .map(|(t, d)| (t.envelope, d.entries().iter().map(|&(r, c, v)| (pos(r, c), v)).collect()))
            .collect();
        let vals = base.clone();
        CsrHamiltonian { row_ptr, cols, base, terms, pulses: h.pulses.clone(), vals }
    }

    fn update(&mut self, t: f64) {
        self.vals.copy_from_slice(&self.base);
        for (env, entries) in &self.terms {
            let f = match *env {
                Envelope::Pulse(k) => self.pulses[k].evaluate(t),
                Envelope::Product(j, k) => self.pulses[j].evaluate(t) * self.pulses[k].evaluate(t),
            };
            if f != 0.0 {
                for &(p, v) in entries {
                    self.vals[p] += v * f;
                }
            }
        }
    }

    fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }
}

/// `dψ/dt = −i H(t) ψ`.
pub struct SchrodingerRhs {
    h: CsrHamiltonian,
}

impl SchrodingerRhs {
    pub fn new(h: &TimeDependentHamiltonian) -> Self {
        SchrodingerRhs { h: CsrHamiltonian::new(h, None) }
    }
}

impl OdeRhs for SchrodingerRhs {
    fn dim(&self) -> usize {
        self.h.dim()
    }

    fn eval(&mut self, t: f64, y: &[C64], dy: &mut [C64]) {
        self.h.update(t);
        let h = &self.h;
        for r in 0..h.dim() {
            let mut acc = C64::default();
            for p in h.row_ptr[r]..h.row_ptr[r + 1] {
                acc += h.vals[p] * y[h.cols[p]];
            }
            dy[r] = C64::new(acc.im, -acc.re);
        }
    }
}

/// Lindblad right-hand side on a row-major dense ρ:
/// `dρ = −i(A − A†) + Σ L ρ L†` with `A = (H − i/2 Σ L†L) ρ`.
pub struct LindbladRhs {
    h: CsrHamiltonian,
    /// Jump operators as `(dst, src, amplitude)` lists.
    jumps: Vec<Vec<(usize, usize, C64)>>,
    a: Vec<C64>,
}

impl LindbladRhs {
    pub fn new(h: &TimeDependentHamiltonian, lindblad: &LindbladSet) -> Result<Self> {
        let dim = h.dim();
        let mut loss = SparseOperator::zero(dim);
        let mut jumps = Vec::new();
        for l in &lindblad.operators {
            if l.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: l.dim() });
            }
            if l.is_zero() {
                continue;
            }
            loss = loss.add(&l.adjoint().matmul(l)?)?;
            jumps.push(l.entries().to_vec());
        }
        let extra = loss.scale(C64::new(0.0, -0.5));
        Ok(LindbladRhs { h: CsrHamiltonian::new(h, Some(&extra)), jumps, a: vec![C64::default(); dim * dim] })
    }
}

impl OdeRhs for LindbladRhs {
    fn dim(&self) -> usize {
        let d = self.h.dim();
        d * d
    }

    fn eval(&mut self, t: f64, y: &[C64], dy: &mut [C64]) {
        self.h.update(t);
        let h = &self.h;
        let d = h.dim();
        let a = &mut self.a;
        for r in 0..d {
            let row = &mut a[r * d..(r + 1) * d];
            row.fill(C64::default());
            for p in h.row_ptr[r]..h.row_ptr[r + 1] {
                let v = h.vals[p];
                let src = &y[h.cols[p] * d..(h.cols[p] + 1) * d];
                for (x, s) in row.iter_mut().zip(src) {
                    *x += v * s;
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                let z = a[i * d + j] - a[j * d + i].conj();
                dy[i * d + j] = C64::new(z.im, -z.re);
            }
        }
        for jump in &self.jumps {
            for &(a1, s1, c1) in jump {
                for &(b2, s2, c2) in jump {
                    dy[a1 * d + b2] += c1 * c2.conj() * y[s1 * d + s2];
                }
            }
        }
    }
}

/// What to record along a trajectory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Observables {
    /// Column label and basis index.
    pub populations: Vec<(String, usize)>,
    pub reference: Option<QuantumState>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub population_labels: Vec<String>,
    /// `populations[k][j]` is observable `j` at sample `k`.
    pub populations: Vec<Vec<f64>>,
    pub fidelity: Option<Vec<f64>>,
    /// `‖ψ‖²` or `Tr ρ` at each sample.
    pub total: Vec<f64>,
    /// Sum of all basis populations at each sample.
    pub population_sum: Vec<f64>,
    pub stats: IntegrationStats,
}

impl Trajectory {
    fn with_capacity(obs: &Observables, n: usize) -> Self {
        Trajectory {
            times: Vec::with_capacity(n),
            population_labels: obs.populations.iter().map(|p| p.0.clone()).collect(),
            populations: Vec::with_capacity(n),
            fidelity: obs.reference.as_ref().map(|_| Vec::with_capacity(n)),
            total: Vec::with_capacity(n),
            population_sum: Vec::with_capacity(n),
            stats: IntegrationStats::default(),
        }
    }

    pub fn final_fidelity(&self) -> Option<f64> {
        self.fidelity.as_ref().and_then(|f| f.last().copied())
    }

    pub fn final_population(&self, label: &str) -> Option<f64> {
        let j = self.population_labels.iter().position(|l| l == label)?;
        self.populations.last().map(|row| row[j])
    }

    /// Largest deviation of `total` from its initial value.
    pub fn max_total_drift(&self) -> f64 {
        let t0 = self.total.first().copied().unwrap_or(1.0);
        self.total.iter().map(|x| (x - t0).abs()).fold(0.0, f64::max)
    }
}

fn check_reference(obs: &Observables, dim: usize) -> Result<()> {
    if let Some(r) = &obs.reference {
        if r.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: r.dim() });
        }
    }
    for (_, i) in &obs.populations {
        if *i >= dim {
            return Err(Error::config(format!("population index {i} out of range")));
        }
    }
    Ok(())
}

pub fn evolve_state(
    h: &TimeDependentHamiltonian,
    psi0: &QuantumState,
    window: Window,
    sample_times: &[f64],
    obs: &Observables,
    opts: &IntegratorOptions,
) -> Result<(Trajectory, QuantumState)> {
    let dim = h.dim();
    if psi0.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: psi0.dim() });
    }
    check_reference(obs, dim)?;
    let mut rhs = SchrodingerRhs::new(h);
    let mut traj = Trajectory::with_capacity(obs, sample_times.len());
    let (y, stats) = integrate(&mut rhs, window, psi0.amplitudes().to_vec(), sample_times, opts, |_, t, y| {
        traj.times.push(t);
        traj.populations.push(obs.populations.iter().map(|&(_, i)| y[i].norm_sqr()).collect());
        let norm2: f64 = y.iter().map(|z| z.norm_sqr()).sum();
        traj.total.push(norm2);
        traj.population_sum.push(norm2);
        if let (Some(f), Some(r)) = (traj.fidelity.as_mut(), obs.reference.as_ref()) {
            f.push(overlap(r.amplitudes(), y).norm_sqr());
        }
    })?;
    traj.stats = stats;
    Ok((traj, QuantumState::unchecked(y)))
}

pub fn evolve_density(
    h: &TimeDependentHamiltonian,
    lindblad: &LindbladSet,
    rho0: &DensityMatrix,
    window: Window,
    sample_times: &[f64],
    obs: &Observables,
    opts: &IntegratorOptions,
) -> Result<(Trajectory, DensityMatrix)> {
    let dim = h.dim();
    if rho0.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: rho0.dim() });
    }
    check_reference(obs, dim)?;
    let mut rhs = LindbladRhs::new(h, lindblad)?;
    let mut traj = Trajectory::with_capacity(obs, sample_times.len());
    let (y, stats) = integrate(&mut rhs, window, rho0.data().to_vec(), sample_times, opts, |_, t, y| {
        traj.times.push(t);
        traj.populations.push(obs.populations.iter().map(|&(_, i)| y[i * dim + i].re).collect());
        let tr: f64 = (0..dim).map(|i| y[i * dim + i].re).sum();
        traj.total.push(tr);
        traj.population_sum.push(tr);
        if let (Some(f), Some(r)) = (traj.fidelity.as_mut(), obs.reference.as_ref()) {
            f.push(expectation(y, dim, r.amplitudes()));
        }
    })?;
    traj.stats = stats;
    Ok((traj, DensityMatrix::unchecked(dim, y)))
}

fn overlap(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn expectation(rho: &[C64], dim: usize, psi: &[C64]) -> f64 {
    let mut acc = C64::default();
    for i in 0..dim {
        if psi[i] == C64::default() {
            continue;
        }
        let row: C64 = (0..dim).map(|j| rho[i * dim + j] * psi[j]).sum();
        acc += psi[i].conj() * row;
    }
    acc.re
}

/// `|⟨ψ_ref|ψ⟩|²`.
pub fn fidelity_pure(psi: &QuantumState, psi_ref: &QuantumState) -> Result<f64> {
    Ok(psi_ref.inner(psi)?.norm_sqr().clamp(0.0, 1.0))
}

/// `⟨ψ_ref|ρ|ψ_ref⟩`.
pub fn fidelity_mixed(rho: &DensityMatrix, psi_ref: &QuantumState) -> Result<f64> {
    if rho.dim() != psi_ref.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), got: psi_ref.dim() });
    }
    Ok(expectation(rho.data(), rho.dim(), psi_ref.amplitudes()).clamp(0.0, 1.0))
}
