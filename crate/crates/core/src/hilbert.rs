//! Tensor-product basis of a heterogeneous qudit register and sparse operators
//! acting on it.
//!
//! Basis states are ordered row-major over the sites in layout order: the last
//! site varies fastest. Within a site, levels follow the order returned by
//! [`SiteSpec::labels`].

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest Hilbert-space dimension a layout may have.
pub const MAX_DIM: usize = 4096;

const MOLECULE3_LABELS: [&str; 3] = ["0", "1", "2"];
const MOLECULE4_LABELS: [&str; 4] = ["0", "1", "2+", "2-"];
const ATOM4_LABELS: [&str; 4] = ["g", "e", "r", "R"];

/// Level structure of a single site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SiteSpec {
    /// Polar molecule with qubit levels `0`, `1` and one auxiliary level `2`.
    Molecule3,
    /// Polar molecule with both auxiliary levels `2+` and `2-` resolved.
    Molecule4,
    /// Rydberg atom with ground levels `g`, `e` and Rydberg levels `r`, `R`.
    Atom4,
}

impl SiteSpec {
    pub fn labels(&self) -> &'static [&'static str] {
        match self {
            SiteSpec::Molecule3 => &MOLECULE3_LABELS,
            SiteSpec::Molecule4 => &MOLECULE4_LABELS,
            SiteSpec::Atom4 => &ATOM4_LABELS,
        }
    }

    pub fn dim(&self) -> usize {
        self.labels().len()
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, SiteSpec::Atom4)
    }

    pub fn is_molecule(&self) -> bool {
        !self.is_atom()
    }

    pub fn level(&self, label: &str) -> Option<usize> {
        self.labels().iter().position(|l| *l == label)
    }
}

/// Ordered list of sites defining the composite Hilbert space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemLayout {
    sites: Vec<SiteSpec>,
    strides: Vec<usize>,
    dim: usize,
}

impl SystemLayout {
    pub fn new(sites: Vec<SiteSpec>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::config("layout must contain at least one site"));
        }
        let mut dim = 1usize;
        for s in &sites {
            dim = dim
                .checked_mul(s.dim())
                .filter(|d| *d <= MAX_DIM)
                .ok_or_else(|| {
                    Error::config(format!("layout dimension exceeds the cap of {MAX_DIM}"))
                })?;
        }
        let mut strides = vec![1usize; sites.len()];
        for i in (0..sites.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * sites[i + 1].dim();
        }
        Ok(SystemLayout { sites, strides, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sites(&self) -> &[SiteSpec] {
        &self.sites
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn site(&self, index: usize) -> Result<SiteSpec> {
        self.sites.get(index).copied().ok_or_else(|| {
            Error::config(format!(
                "site index {index} out of range for a {}-site layout",
                self.sites.len()
            ))
        })
    }

    pub fn molecule_sites(&self) -> Vec<usize> {
        (0..self.sites.len()).filter(|&i| self.sites[i].is_molecule()).collect()
    }

    pub fn atom_sites(&self) -> Vec<usize> {
        (0..self.sites.len()).filter(|&i| self.sites[i].is_atom()).collect()
    }

    /// Per-site level indices of basis state `index`.
    pub fn levels_of(&self, index: usize) -> Vec<usize> {
        debug_assert!(index < self.dim);
        self.sites
            .iter()
            .zip(&self.strides)
            .map(|(s, stride)| (index / stride) % s.dim())
            .collect()
    }

    /// Level of a single site in basis state `index`.
    pub fn level_at(&self, index: usize, site: usize) -> usize {
        (index / self.strides[site]) % self.sites[site].dim()
    }

    pub fn index_of_levels(&self, levels: &[usize]) -> Result<usize> {
        if levels.len() != self.sites.len() {
            return Err(Error::DimensionMismatch {
                expected: self.sites.len(),
                got: levels.len(),
            });
        }
        let mut index = 0;
        for ((lvl, s), stride) in levels.iter().zip(&self.sites).zip(&self.strides) {
            if *lvl >= s.dim() {
                return Err(Error::config(format!("level {lvl} out of range for {s:?}")));
            }
            index += lvl * stride;
        }
        Ok(index)
    }

    pub fn labels_of(&self, index: usize) -> Vec<&'static str> {
        self.levels_of(index)
            .into_iter()
            .zip(&self.sites)
            .map(|(l, s)| s.labels()[l])
            .collect()
    }

    pub fn index_of(&self, labels: &[&str]) -> Result<usize> {
        if labels.len() != self.sites.len() {
            return Err(Error::DimensionMismatch {
                expected: self.sites.len(),
                got: labels.len(),
            });
        }
        let levels = labels
            .iter()
            .zip(&self.sites)
            .enumerate()
            .map(|(i, (l, s))| {
                s.level(l)
                    .ok_or_else(|| Error::config(format!("unknown label '{l}' at site {i}")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.index_of_levels(&levels)
    }

    /// All basis label tuples in index order.
    pub fn enumerate_basis(&self) -> Vec<Vec<&'static str>> {
        (0..self.dim).map(|i| self.labels_of(i)).collect()
    }

    /// Compact name of a basis state, e.g. `11g` or `2+1e`.
    pub fn basis_name(&self, index: usize) -> String {
        self.labels_of(index).concat()
    }

    /// Inverse of [`basis_name`](Self::basis_name).
    pub fn parse_basis_name(&self, name: &str) -> Result<usize> {
        let mut rest = name.trim();
        let mut levels = Vec::with_capacity(self.sites.len());
        for (i, site) in self.sites.iter().enumerate() {
            let mut best: Option<(usize, usize)> = None;
            for (lvl, label) in site.labels().iter().enumerate() {
                if rest.starts_with(label) && best.is_none_or(|(_, len)| label.len() > len) {
                    best = Some((lvl, label.len()));
                }
            }
            let (lvl, len) = best.ok_or_else(|| {
                Error::config(format!("cannot parse basis label '{name}' at site {i}"))
            })?;
            levels.push(lvl);
            rest = &rest[len..];
        }
        if !rest.is_empty() {
            return Err(Error::config(format!(
                "basis label '{name}' has trailing characters '{rest}'"
            )));
        }
        self.index_of_levels(&levels)
    }
}

/// Sparse complex matrix in canonical coordinate form: entries sorted by
/// `(row, col)`, duplicates summed, exact zeros removed.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
    hermitian: bool,
}

impl SparseOperator {
    pub fn zero(dim: usize) -> Self {
        SparseOperator { dim, entries: Vec::new(), hermitian: true }
    }

    pub fn identity(dim: usize) -> Self {
        SparseOperator {
            dim,
            entries: (0..dim).map(|i| (i, i, C64::new(1.0, 0.0))).collect(),
            hermitian: true,
        }
    }

    /// Assembles an operator from unordered triplets.
    pub fn from_triplets(
        dim: usize,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, C64)> = triplets.into_iter().collect();
        if let Some(&(r, c, _)) = entries.iter().find(|(r, c, _)| *r >= dim || *c >= dim) {
            return Err(Error::config(format!(
                "entry ({r}, {c}) out of range for dimension {dim}"
            )));
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|e| e.2 != C64::new(0.0, 0.0));
        let mut op = SparseOperator { dim, entries: merged, hermitian: false };
        op.hermitian = op.check_hermitian(1e-12);
        Ok(op)
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        let dim = m.nrows();
        Self::from_triplets(
            dim,
            (0..dim).flat_map(|r| (0..dim).map(move |c| (r, c, m[(r, c)]))),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Hermiticity flag computed at construction (tolerance 1e-12).
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries
            .binary_search_by_key(&(row, col), |&(r, c, _)| (r, c))
            .map(|i| self.entries[i].2)
            .unwrap_or_default()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        let mut d = vec![C64::default(); self.dim];
        for &(r, c, v) in &self.entries {
            if r == c {
                d[r] = v;
            }
        }
        d
    }

    /// Elementwise check of `A = A†` within `tol`.
    pub fn check_hermitian(&self, tol: f64) -> bool {
        self.entries
            .iter()
            .all(|&(r, c, v)| (v - self.get(c, r).conj()).norm() <= tol)
    }

    fn check_dim(&self, other: usize) -> Result<()> {
        if self.dim != other {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other });
        }
        Ok(())
    }

    pub fn add(&self, other: &SparseOperator) -> Result<SparseOperator> {
        self.check_dim(other.dim)?;
        Self::from_triplets(
            self.dim,
            self.entries.iter().chain(other.entries.iter()).copied(),
        )
    }

    pub fn scale(&self, factor: C64) -> SparseOperator {
        Self::from_triplets(self.dim, self.entries.iter().map(|&(r, c, v)| (r, c, v * factor)))
            .expect("indices already validated")
    }

    pub fn adjoint(&self) -> SparseOperator {
        Self::from_triplets(self.dim, self.entries.iter().map(|&(r, c, v)| (c, r, v.conj())))
            .expect("indices already validated")
    }

    /// `A + A†`.
    pub fn hermitize(&self) -> SparseOperator {
        self.add(&self.adjoint()).expect("same dimension")
    }

    /// Sparse matrix product `self · other`.
    pub fn matmul(&self, other: &SparseOperator) -> Result<SparseOperator> {
        self.check_dim(other.dim)?;
        let mut row_start = vec![0usize; other.dim + 1];
        for &(r, _, _) in &other.entries {
            row_start[r + 1] += 1;
        }
        for i in 0..other.dim {
            row_start[i + 1] += row_start[i];
        }
        let mut out = Vec::new();
        for &(r, k, a) in &self.entries {
            for &(_, c, b) in &other.entries[row_start[k]..row_start[k + 1]] {
                out.push((r, c, a * b));
            }
        }
        Self::from_triplets(self.dim, out)
    }

    /// `y = A x` on raw amplitude slices.
    pub fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        y.iter_mut().for_each(|v| *v = C64::default());
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
    }

    pub fn apply(&self, psi: &QuantumState) -> Result<QuantumState> {
        self.check_dim(psi.dim())?;
        let mut out = vec![C64::default(); self.dim];
        self.apply_into(psi.amplitudes(), &mut out);
        Ok(QuantumState::unchecked(out))
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }
}

/// `|bra⟩⟨ket|` on one site, identity on every other site.
pub fn embed_site_operator(
    layout: &SystemLayout,
    site: usize,
    bra: &str,
    ket: &str,
) -> Result<SparseOperator> {
    embed_product(layout, &[(site, bra, ket)])
}

/// Product of two single-site transition operators on distinct sites.
pub fn embed_two_site(
    layout: &SystemLayout,
    a: (usize, &str, &str),
    b: (usize, &str, &str),
) -> Result<SparseOperator> {
    if a.0 == b.0 {
        return Err(Error::config(format!(
            "two-site embedding requires distinct sites, got {} twice",
            a.0
        )));
    }
    embed_product(layout, &[a, b])
}

/// Product of transition operators `|bra⟩⟨ket|` on pairwise distinct sites.
pub fn embed_product(
    layout: &SystemLayout,
    factors: &[(usize, &str, &str)],
) -> Result<SparseOperator> {
    let mut resolved = Vec::with_capacity(factors.len());
    for (k, &(site, bra, ket)) in factors.iter().enumerate() {
        if factors[..k].iter().any(|f| f.0 == site) {
            return Err(Error::config(format!("site {site} appears twice in a product")));
        }
        let spec = layout.site(site)?;
        let lookup = |label: &str| {
            spec.level(label).ok_or_else(|| {
                Error::config(format!("unknown label '{label}' for {spec:?} at site {site}"))
            })
        };
        resolved.push((site, lookup(bra)?, lookup(ket)?));
    }
    let one = C64::new(1.0, 0.0);
    let entries = (0..layout.dim()).filter_map(|col| {
        let mut row = col;
        for &(site, bra, ket) in &resolved {
            if layout.level_at(col, site) != ket {
                return None;
            }
            row = row - ket * layout.strides[site] + bra * layout.strides[site];
        }
        Some((row, col, one))
    });
    SparseOperator::from_triplets(layout.dim(), entries)
}

/// Pure state over the enumerated basis.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    amplitudes: Vec<C64>,
}

impl QuantumState {
    /// Validates `‖ψ‖ = 1` within 1e-8.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let s = QuantumState { amplitudes };
        let n = s.norm();
        if (n - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidState(format!("state norm is {n}, expected 1")));
        }
        Ok(s)
    }

    /// Normalizes the given amplitudes.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let n = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Ok(QuantumState { amplitudes: amplitudes.into_iter().map(|a| a / n).collect() })
    }

    pub(crate) fn unchecked(amplitudes: Vec<C64>) -> Self {
        QuantumState { amplitudes }
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::DimensionMismatch { expected: dim, got: index });
        }
        let mut a = vec![C64::default(); dim];
        a[index] = C64::new(1.0, 0.0);
        Ok(QuantumState { amplitudes: a })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &QuantumState) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Dense density matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl DensityMatrix {
    /// Validates Hermiticity (1e-10), unit trace (1e-8) and positivity (-1e-8).
    pub fn new(dim: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: data.len() });
        }
        let rho = DensityMatrix { dim, data };
        if rho.hermiticity_defect() > 1e-10 {
            return Err(Error::InvalidState("density matrix is not Hermitian".into()));
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidState(format!("density matrix trace is {tr}")));
        }
        let min = rho.min_eigenvalue();
        if min < -1e-8 {
            return Err(Error::InvalidState(format!(
                "density matrix has negative eigenvalue {min}"
            )));
        }
        Ok(rho)
    }

    pub(crate) fn unchecked(dim: usize, data: Vec<C64>) -> Self {
        DensityMatrix { dim, data }
    }

    pub fn from_pure(psi: &QuantumState) -> Self {
        let a = psi.amplitudes();
        let dim = a.len();
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(a[i] * a[j].conj());
            }
        }
        DensityMatrix { dim, data }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let mut data = vec![C64::default(); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = C64::new(1.0 / dim as f64, 0.0);
        }
        DensityMatrix { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim + col]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i].re).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.data[i * self.dim + i].re).collect()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.data[i * d + j] - self.data[j * d + i].conj()).norm());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.to_dense();
        let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }
}
