//! Molecule-atom dipole-dipole couplings from 3-D geometry.
//!
//! Couplings are half-coupling matrix elements `⟨0r|H_DD|2±R⟩` in rad/μs.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::Vector3;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::SystemLayout;

/// Coulomb-metre per Debye.
pub const DEBYE: f64 = 3.33564e-30;
/// Coulomb constant 1/(4πε₀) in N·m²/C².
pub const COULOMB_CONSTANT: f64 = 8.9875e9;
/// Reduced Planck constant in J·s.
pub const HBAR: f64 = 1.05457e-34;

/// Spherical component index of a dipole operator (`Δm` of the transition).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarization {
    Plus,
    Zero,
    Minus,
}

impl Polarization {
    fn index(self) -> usize {
        match self {
            Polarization::Plus => 0,
            Polarization::Zero => 1,
            Polarization::Minus => 2,
        }
    }

    pub fn delta_m(self) -> i32 {
        match self {
            Polarization::Plus => 1,
            Polarization::Zero => 0,
            Polarization::Minus => -1,
        }
    }
}

/// Molecular transition out of `|0⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MolecularTransition {
    /// `|0⟩ → |2+⟩`, `Δm = +1`.
    ToPlus,
    /// `|0⟩ → |2-⟩`, `Δm = -1`.
    ToMinus,
    /// `|0⟩ → |2⟩`, `Δm = 0`.
    ToZero,
}

impl MolecularTransition {
    pub fn polarization(self) -> Polarization {
        match self {
            MolecularTransition::ToPlus => Polarization::Plus,
            MolecularTransition::ToMinus => Polarization::Minus,
            MolecularTransition::ToZero => Polarization::Zero,
        }
    }
}

/// One exchange channel `|0r⟩ ↔ |2R⟩`, described by the upward process in
/// which the molecule leaves `|0⟩` and the atom goes from `|r⟩` to `|R⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DipoleChannel {
    pub molecule: MolecularTransition,
    /// `Δm_j` of the atomic `|r⟩ → |R⟩` transition.
    pub atom: Polarization,
    pub d_molecule_debye: f64,
    pub d_atom_debye: f64,
}

impl DipoleChannel {
    pub fn new(
        molecule: MolecularTransition,
        atom: Polarization,
        d_molecule_debye: f64,
        d_atom_debye: f64,
    ) -> Result<Self> {
        if !(d_molecule_debye > 0.0 && d_atom_debye > 0.0) {
            return Err(Error::config("transition dipole moments must be positive"));
        }
        Ok(DipoleChannel { molecule, atom, d_molecule_debye, d_atom_debye })
    }
}

/// Coefficients of the spherical products `d_A^p d_M^q` in the near-field
/// dipole-dipole operator, indexed `[p][q]` with order `+, 0, -`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngularCoefficients([[C64; 3]; 3]);

impl AngularCoefficients {
    pub fn get(&self, atom: Polarization, molecule: Polarization) -> C64 {
        self.0[atom.index()][molecule.index()]
    }
}

/// Angular structure of `H_DD` for a pair axis at polar angle `theta` and
/// azimuth `phi` relative to the quantization axis.
pub fn angular_coefficients(theta: f64, phi: f64) -> AngularCoefficients {
    let (s, c) = theta.sin_cos();
    let iso = C64::from((1.0 - 3.0 * c * c) / 2.0);
    let mixed = 3.0 * FRAC_1_SQRT_2 * s * c;
    let quad = -1.5 * s * s;
    let e = |k: i32| C64::from_polar(1.0, k as f64 * phi);
    // Rows: atom component; columns: molecule component.
    AngularCoefficients([
        [e(-2) * quad, e(-1) * mixed, iso],
        [e(-1) * mixed, iso * 2.0, -e(1) * mixed],
        [iso, -e(1) * mixed, e(2) * quad],
    ])
}

/// Positions of all sites in μm plus the quantization axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    positions: Vec<Vector3<f64>>,
    quantization_axis: Vector3<f64>,
}

impl Geometry {
    pub fn new(positions: Vec<Vector3<f64>>, quantization_axis: Vector3<f64>) -> Result<Self> {
        if (quantization_axis.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::config("quantization axis must have unit norm"));
        }
        for i in 0..positions.len() {
            for j in i + 1..positions.len() {
                if (positions[i] - positions[j]).norm() <= 0.0 {
                    return Err(Error::config(format!("sites {i} and {j} coincide")));
                }
            }
        }
        Ok(Geometry { positions, quantization_axis })
    }

    pub fn with_z_axis(positions: Vec<Vector3<f64>>) -> Result<Self> {
        Self::new(positions, Vector3::z())
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    pub fn quantization_axis(&self) -> Vector3<f64> {
        self.quantization_axis
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        (self.positions[a] - self.positions[b]).norm()
    }

    /// Distance and spherical angles `(R, θ, φ)` of the molecule→atom vector
    /// in the frame whose z axis is the quantization axis.
    pub fn pair_angles(&self, molecule: usize, atom: usize) -> Result<(f64, f64, f64)> {
        let n = self.positions.len();
        if molecule >= n || atom >= n {
            return Err(Error::config(format!("site index out of range for {n} positions")));
        }
        let d = self.positions[atom] - self.positions[molecule];
        let r = d.norm();
        if r <= 0.0 {
            return Err(Error::config(format!("sites {molecule} and {atom} coincide")));
        }
        let (ex, ey, ez) = self.frame();
        let (x, y, z) = (d.dot(&ex), d.dot(&ey), d.dot(&ez));
        let theta = (z / r).clamp(-1.0, 1.0).acos();
        let phi = y.atan2(x);
        Ok((r, theta, phi))
    }

    fn frame(&self) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
        let ez = self.quantization_axis;
        let reference = if ez.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let ex = (reference - ez * reference.dot(&ez)).normalize();
        let ey = ez.cross(&ex);
        (ex, ey, ez)
    }
}

/// Half-coupling `⟨0r|H_DD|2R⟩` (rad/μs) of one channel for a molecule-atom
/// pair of `geometry`.
pub fn dipole_coupling(
    geometry: &Geometry,
    molecule: usize,
    atom: usize,
    channel: &DipoleChannel,
) -> Result<C64> {
    let (r_um, theta, phi) = geometry.pair_angles(molecule, atom)?;
    let coefficient =
        angular_coefficients(theta, phi).get(channel.atom, channel.molecule.polarization());
    Ok(coefficient.conj() * dipole_scale(channel, r_um))
}

/// `d_A d_M / (4πε₀ R³ ħ)` in rad/μs.
fn dipole_scale(channel: &DipoleChannel, r_um: f64) -> f64 {
    let r = r_um * 1e-6;
    let energy = COULOMB_CONSTANT * channel.d_atom_debye * channel.d_molecule_debye * DEBYE * DEBYE
        / (r * r * r);
    energy / HBAR * 1e-6
}

/// Result of collapsing the `2+` and `2-` channels onto one effective state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelReduction {
    /// `√(|V₊/2|² + |V₋/2|²)`.
    pub effective_half: f64,
    /// `(V₊, V₋) / norm`. The effective auxiliary state is
    /// `conj(w₊)|2+⟩ + conj(w₋)|2-⟩`.
    pub weights: [C64; 2],
}

pub fn reduce_channels(v_plus_half: C64, v_minus_half: C64) -> Result<ChannelReduction> {
    let norm = v_plus_half.norm().hypot(v_minus_half.norm());
    if norm == 0.0 {
        return Err(Error::DegenerateChannel);
    }
    Ok(ChannelReduction {
        effective_half: norm,
        weights: [v_plus_half / norm, v_minus_half / norm],
    })
}

/// Couplings of one molecule-atom pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCoupling {
    pub molecule: usize,
    pub atom: usize,
    pub v_plus_half: C64,
    pub v_minus_half: C64,
}

impl PairCoupling {
    /// Single effective channel of half-coupling `v_half`.
    pub fn effective(molecule: usize, atom: usize, v_half: f64) -> Self {
        PairCoupling { molecule, atom, v_plus_half: C64::from(v_half), v_minus_half: C64::default() }
    }

    pub fn effective_half(&self) -> f64 {
        self.v_plus_half.norm().hypot(self.v_minus_half.norm())
    }

    /// Same as [`reduce_channels`] on this pair.
    pub fn reduce(&self) -> Result<ChannelReduction> {
        reduce_channels(self.v_plus_half, self.v_minus_half)
    }
}

/// All molecule-atom couplings of a register.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CouplingSet {
    pub pairs: Vec<PairCoupling>,
}

impl CouplingSet {
    pub fn new(pairs: Vec<PairCoupling>) -> Self {
        CouplingSet { pairs }
    }

    /// Same effective half-coupling on every molecule-atom pair of `layout`.
    pub fn uniform(layout: &SystemLayout, v_half: f64) -> Self {
        let atoms = layout.atom_sites();
        let pairs = layout
            .molecule_sites()
            .into_iter()
            .flat_map(|m| atoms.iter().map(move |&a| PairCoupling::effective(m, a, v_half)))
            .collect();
        CouplingSet { pairs }
    }

    /// Both resolved channels (`0→2+` and `0→2-`, atom `Δm_j = -1`) for every
    /// molecule-atom pair of `layout` placed at `geometry`.
    pub fn from_geometry(
        layout: &SystemLayout,
        geometry: &Geometry,
        d_molecule_debye: f64,
        d_atom_debye: f64,
    ) -> Result<Self> {
        if geometry.positions().len() != layout.n_sites() {
            return Err(Error::DimensionMismatch {
                expected: layout.n_sites(),
                got: geometry.positions().len(),
            });
        }
        let plus = DipoleChannel::new(
            MolecularTransition::ToPlus,
            Polarization::Minus,
            d_molecule_debye,
            d_atom_debye,
        )?;
        let minus = DipoleChannel { molecule: MolecularTransition::ToMinus, ..plus };
        let mut pairs = Vec::new();
        for m in layout.molecule_sites() {
            for a in layout.atom_sites() {
                pairs.push(PairCoupling {
                    molecule: m,
                    atom: a,
                    v_plus_half: dipole_coupling(geometry, m, a, &plus)?,
                    v_minus_half: dipole_coupling(geometry, m, a, &minus)?,
                });
            }
        }
        Ok(CouplingSet { pairs })
    }

    pub fn get(&self, molecule: usize, atom: usize) -> Option<&PairCoupling> {
        self.pairs.iter().find(|p| p.molecule == molecule && p.atom == atom)
    }
}

/// Where the central site goes in the site ordering of a preset geometry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CenterSlot {
    First,
    Last,
}

fn ring_geometry(n: usize, radius_um: f64, center: CenterSlot) -> Result<Geometry> {
    if !(radius_um > 0.0) {
        return Err(Error::config("centroid distance must be positive"));
    }
    let outer = (0..n).map(|k| {
        let phi = 2.0 * PI * k as f64 / n as f64;
        Vector3::new(radius_um * phi.cos(), radius_um * phi.sin(), 0.0)
    });
    let mut positions = Vec::with_capacity(n + 1);
    if center == CenterSlot::First {
        positions.push(Vector3::zeros());
    }
    positions.extend(outer);
    if center == CenterSlot::Last {
        positions.push(Vector3::zeros());
    }
    Geometry::with_z_axis(positions)
}

/// Three outer sites on an equilateral triangle in the plane perpendicular to
/// ẑ, at azimuths 0, 2π/3 and 4π/3, with the central site at the centroid.
pub fn triangle_preset(centroid_distance_um: f64, center: CenterSlot) -> Result<Geometry> {
    ring_geometry(3, centroid_distance_um, center)
}

/// Two outer sites on opposite sides of the central site, along x̂.
pub fn collinear_preset(distance_um: f64, center: CenterSlot) -> Result<Geometry> {
    ring_geometry(2, distance_um, center)
}
