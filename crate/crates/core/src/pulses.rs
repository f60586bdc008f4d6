//! Gaussian drive envelopes, pulse areas and the gate-closure width solver.

use std::f64::consts::{PI, SQRT_2, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed time interval `[start, end]` in μs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !(end > start) || !start.is_finite() || !end.is_finite() {
            return Err(Error::config(format!("empty time window [{start}, {end}]")));
        }
        Ok(Window { start, end })
    }

    /// `[0, 8σ]`, the default gate window for a pulse centred at `4σ`.
    pub fn for_sigma(sigma: f64) -> Self {
        Window { start: 0.0, end: 8.0 * sigma }
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    /// `n ≥ 2` evenly spaced times from start to end inclusive.
    pub fn sample_times(&self, n: usize) -> Vec<f64> {
        let n = n.max(2);
        (0..n)
            .map(|k| {
                if k == n - 1 {
                    self.end
                } else {
                    self.start + self.duration() * k as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

/// `sign · Ω_max · exp(−(t − t₀)² / 2σ²)`, amplitudes in rad/μs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianPulse {
    pub omega_max: f64,
    pub t0: f64,
    pub sigma: f64,
    pub sign: f64,
}

impl GaussianPulse {
    pub fn new(omega_max: f64, t0: f64, sigma: f64, sign: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::config("pulse width must be positive"));
        }
        if !(omega_max >= 0.0) {
            return Err(Error::config("peak amplitude must be non-negative"));
        }
        if sign != 1.0 && sign != -1.0 {
            return Err(Error::config("pulse sign must be +1 or -1"));
        }
        Ok(GaussianPulse { omega_max, t0, sigma, sign })
    }

    /// Pulse centred in the default `[0, 8σ]` window.
    pub fn centered(omega_max: f64, sigma: f64, sign: f64) -> Result<Self> {
        Self::new(omega_max, 4.0 * sigma, sigma, sign)
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        let x = (t - self.t0) / self.sigma;
        self.sign * self.omega_max * (-0.5 * x * x).exp()
    }

    pub fn with_sign(mut self, sign: f64) -> Self {
        self.sign = sign;
        self
    }
}

/// Drive envelope used by the Hamiltonian builders.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Pulse {
    Gaussian(GaussianPulse),
    /// Constant amplitude, for diagnostics.
    Constant(f64),
}

impl Pulse {
    pub fn evaluate(&self, t: f64) -> f64 {
        match self {
            Pulse::Gaussian(g) => g.evaluate(t),
            Pulse::Constant(v) => *v,
        }
    }
}

impl From<GaussianPulse> for Pulse {
    fn from(g: GaussianPulse) -> Self {
        Pulse::Gaussian(g)
    }
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    // Split up front so narrow features are never missed by the first estimate.
    const PANELS: usize = 16;
    let h = (b - a) / PANELS as f64;
    (0..PANELS)
        .map(|k| {
            let lo = a + h * k as f64;
            let hi = if k == PANELS - 1 { b } else { lo + h };
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            recurse(&f, lo, hi, fa, fm, fb, whole, tol / PANELS as f64, 50)
        })
        .sum()
}

const AREA_TOL: f64 = 1e-9;

/// `∫ √2 |Ω(t)| dt` over `window`: bright-state area for equal-magnitude
/// drives on both ground-Rydberg transitions.
pub fn area_linear(pulse: &Pulse, window: Window) -> f64 {
    adaptive_simpson(|t| SQRT_2 * pulse.evaluate(t).abs(), window.start, window.end, AREA_TOL)
}

/// `∫ Ω(t)² / Δ dt` over `window`: second-order (virtual excitation) area.
pub fn area_quadratic(pulse: &Pulse, delta: f64, window: Window) -> f64 {
    adaptive_simpson(
        |t| {
            let o = pulse.evaluate(t);
            o * o / delta
        },
        window.start,
        window.end,
        AREA_TOL,
    )
}

/// Which gate-closure condition a width is solved for.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AreaCondition {
    /// `∫ √2 Ω dt = target`.
    Linear,
    /// `∫ Ω²/Δ dt = target`.
    Quadratic { delta: f64 },
}

/// Width σ whose full-line Gaussian area equals `target` (2π closes the gate).
/// The result is re-checked on the default `[0, 8σ]` window and rejected if
/// truncation moves the area by more than 1%.
pub fn solve_width_for_area(omega_max: f64, condition: AreaCondition, target: f64) -> Result<f64> {
    if !(omega_max > 0.0) || !(target > 0.0) {
        return Err(Error::config("peak amplitude and target area must be positive"));
    }
    let sigma = match condition {
        AreaCondition::Linear => target / (SQRT_2 * omega_max * TAU.sqrt()),
        AreaCondition::Quadratic { delta } => {
            if !(delta > 0.0) {
                return Err(Error::config("detuning must be positive"));
            }
            target * delta / (omega_max * omega_max * PI.sqrt())
        }
    };
    let pulse = Pulse::Gaussian(GaussianPulse::centered(omega_max, sigma, 1.0)?);
    let window = Window::for_sigma(sigma);
    let area = match condition {
        AreaCondition::Linear => area_linear(&pulse, window),
        AreaCondition::Quadratic { delta } => area_quadratic(&pulse, delta, window),
    };
    if (area / target - 1.0).abs() > 0.01 {
        return Err(Error::config(format!(
            "windowed area {area} deviates from target {target} by more than 1%"
        )));
    }
    Ok(sigma)
}
