//! JSON gate configuration in laboratory units and the named presets.
//!
//! Frequencies are linear (MHz or kHz) and converted to rad/μs on load.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interactions::{collinear_preset, triangle_preset, CenterSlot, CouplingSet};
use crate::model::{ChannelMode, DecayRates, GateConfig, GateVariant};
use crate::pulses::{GaussianPulse, Window};

pub const PRESETS: [&str; 6] = ["fig2", "fig4", "fig5a", "fig5b", "fig6a", "fig6b"];

const GAMMA1_KHZ: f64 = 4.580;
const GAMMA2_KHZ: f64 = 2.393;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantKind {
    ManyToOne,
    OneToMany,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKind {
    Triangle,
    Collinear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterSite {
    First,
    Last,
}

/// Positions derived from a named arrangement and dipole moments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub kind: GeometryKind,
    pub distance_um: f64,
    pub center: CenterSite,
    pub d_molecule_debye: f64,
    pub d_atom_debye: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub variant: VariantKind,
    /// Controls for many-to-one, targets for one-to-many.
    pub n_qubits_varied: usize,
    pub channel_mode: ChannelMode,
    pub omega_max_mhz: f64,
    pub sigma_us: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_us: Option<[f64; 2]>,
    pub sign_1: f64,
    pub sign_2: f64,
    /// Uniform molecule-atom coupling `V`; ignored when `geometry` is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometrySpec>,
    #[serde(default)]
    pub delta_mhz: f64,
    #[serde(default)]
    pub u1_mhz: f64,
    #[serde(default)]
    pub u2_mhz: f64,
    #[serde(default)]
    pub gamma1_khz: f64,
    #[serde(default)]
    pub gamma2_khz: f64,
    /// Whether runs include spontaneous decay unless overridden.
    #[serde(default)]
    pub with_decay: bool,
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let fig2 = ConfigFile {
            variant: VariantKind::ManyToOne,
            n_qubits_varied: 2,
            channel_mode: ChannelMode::Effective,
            omega_max_mhz: 1.05,
            sigma_us: 0.27,
            t0_us: None,
            window_us: None,
            sign_1: 1.0,
            sign_2: -1.0,
            v_mhz: Some(4.04),
            geometry: None,
            delta_mhz: 0.0,
            u1_mhz: 0.0,
            u2_mhz: 0.0,
            gamma1_khz: GAMMA1_KHZ,
            gamma2_khz: GAMMA2_KHZ,
            with_decay: false,
        };
        let fig4 = ConfigFile {
            variant: VariantKind::OneToMany,
            omega_max_mhz: 0.71,
            sigma_us: 2.25,
            sign_2: 1.0,
            delta_mhz: 2.0,
            u1_mhz: 1774.6,
            u2_mhz: 126.9,
            ..fig2.clone()
        };
        Ok(match name {
            "fig2" => fig2,
            "fig4" => fig4,
            "fig5a" => ConfigFile { with_decay: true, ..fig2 },
            "fig5b" => ConfigFile { with_decay: true, ..fig4 },
            "fig6a" => ConfigFile {
                n_qubits_varied: 3,
                channel_mode: ChannelMode::Explicit,
                v_mhz: None,
                geometry: Some(GeometrySpec {
                    kind: GeometryKind::Triangle,
                    distance_um: 1.0,
                    center: CenterSite::Last,
                    d_molecule_debye: 1.72,
                    d_atom_debye: 4911.0,
                }),
                ..fig2
            },
            "fig6b" => ConfigFile { n_qubits_varied: 3, u1_mhz: 4206.4, u2_mhz: 300.8, ..fig4 },
            other => {
                return Err(Error::config(format!(
                    "unknown preset {other:?}; expected one of {}",
                    PRESETS.join(", ")
                )))
            }
        })
    }

    pub fn variant(&self) -> GateVariant {
        match self.variant {
            VariantKind::ManyToOne => GateVariant::ManyToOne { n_controls: self.n_qubits_varied },
            VariantKind::OneToMany => GateVariant::OneToMany { n_targets: self.n_qubits_varied },
        }
    }

    /// Physical configuration in rad/μs and μs.
    pub fn to_gate_config(&self) -> Result<GateConfig> {
        let variant = self.variant();
        let layout = GateConfig::layout_for(variant, self.channel_mode)?;
        let omega = TAU * self.omega_max_mhz;
        let t0 = self.t0_us.unwrap_or(4.0 * self.sigma_us);
        let pulses = [
            GaussianPulse::new(omega, t0, self.sigma_us, self.sign_1)?,
            GaussianPulse::new(omega, t0, self.sigma_us, self.sign_2)?,
        ];
        let window = match self.window_us {
            Some([a, b]) => Window::new(a, b)?,
            None => Window::for_sigma(self.sigma_us),
        };
        let couplings = match (&self.geometry, self.v_mhz) {
            (Some(g), _) => {
                let center = match g.center {
                    CenterSite::First => CenterSlot::First,
                    CenterSite::Last => CenterSlot::Last,
                };
                let geometry = match g.kind {
                    GeometryKind::Triangle => triangle_preset(g.distance_um, center)?,
                    GeometryKind::Collinear => collinear_preset(g.distance_um, center)?,
                };
                if geometry.positions().len() != layout.n_sites() {
                    return Err(Error::config(format!(
                        "{:?} geometry has {} sites but the gate has {}",
                        g.kind,
                        geometry.positions().len(),
                        layout.n_sites()
                    )));
                }
                let set = CouplingSet::from_geometry(&layout, &geometry, g.d_molecule_debye, g.d_atom_debye)?;
                if self.channel_mode == ChannelMode::Effective {
                    let mut pairs = Vec::new();
                    for p in &set.pairs {
                        let v = p.reduce()?.effective_half;
                        pairs.push(crate::interactions::PairCoupling::effective(p.molecule, p.atom, v));
                    }
                    CouplingSet::new(pairs)
                } else {
                    set
                }
            }
            (None, Some(v)) => {
                let half = TAU * v / 2.0;
                match self.channel_mode {
                    ChannelMode::Effective => CouplingSet::uniform(&layout, half),
                    ChannelMode::Explicit => {
                        return Err(Error::config("explicit channel mode requires a geometry"))
                    }
                }
            }
            (None, None) => return Err(Error::config("either v_mhz or geometry must be given")),
        };
        let (delta, pair_shifts) = match self.variant {
            VariantKind::ManyToOne => (0.0, Vec::new()),
            VariantKind::OneToMany => (
                TAU * self.delta_mhz,
                GateConfig::uniform_pair_shifts(&layout, TAU * self.u1_mhz, TAU * self.u2_mhz),
            ),
        };
        if self.variant == VariantKind::ManyToOne
            && (self.delta_mhz != 0.0 || self.u1_mhz != 0.0 || self.u2_mhz != 0.0)
        {
            return Err(Error::config("many-to-one gates take no delta_mhz, u1_mhz or u2_mhz"));
        }
        let decay = DecayRates {
            gamma_r: TAU * 1e-3 * self.gamma1_khz,
            gamma_big_r: TAU * 1e-3 * self.gamma2_khz,
        };
        let cfg = GateConfig {
            variant,
            channel_mode: self.channel_mode,
            layout,
            couplings,
            delta,
            pair_shifts,
            pulses,
            decay,
            window,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
