//! Graded vector spaces with a fixed named basis, sparse vectors over such a
//! basis, and degree-homogeneous linear maps.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{self, Scalar};

#[derive(Debug, PartialEq, Eq)]
struct SpaceData {
    basis: Vec<(String, i64)>,
    index: BTreeMap<String, usize>,
}

/// A finite-dimensional graded vector space with an ordered, named basis.
///
/// The basis order is canonical and fixed after construction. Cloning is
/// cheap; equality compares basis content.
#[derive(Clone)]
pub struct GradedSpace(Arc<SpaceData>);

impl PartialEq for GradedSpace {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}
impl Eq for GradedSpace {}

impl fmt::Debug for GradedSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GradedSpace{:?}", self.0.basis)
    }
}

impl GradedSpace {
    pub fn new(basis: Vec<(String, i64)>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, (name, _)) in basis.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::Argument(format!("duplicate basis name `{name}`")));
            }
        }
        Ok(GradedSpace(Arc::new(SpaceData { basis, index })))
    }

    /// Builder over `(&str, i64)` pairs, for fixtures.
    pub fn from_pairs(pairs: &[(&str, i64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|(n, d)| (n.to_string(), *d)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.basis.len()
    }

    pub fn degree(&self, i: usize) -> i64 {
        self.0.basis[i].1
    }

    pub fn name(&self, i: usize) -> &str {
        &self.0.basis[i].0
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.0.index.get(name).copied()
    }

    pub fn basis(&self) -> &[(String, i64)] {
        &self.0.basis
    }

    /// The shift `V[1]`: same names, every degree lowered by one.
    pub fn shifted(&self) -> GradedSpace {
        GradedSpace::new(
            self.0
                .basis
                .iter()
                .map(|(n, d)| (n.clone(), d - 1))
                .collect(),
        )
        .expect("names stay unique under shift")
    }

    /// Indices of basis elements of the given degree, in basis order.
    pub fn indices_of_degree(&self, degree: i64) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.degree(i) == degree).collect()
    }

    /// Sorted list of degrees occurring in the basis.
    pub fn degrees_present(&self) -> Vec<i64> {
        let mut ds: Vec<i64> = self.0.basis.iter().map(|(_, d)| *d).collect();
        ds.sort_unstable();
        ds.dedup();
        ds
    }
}

/// Sparse coefficient vector over a space's basis. Zero entries are never
/// stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SparseVec(pub BTreeMap<usize, Scalar>);

impl SparseVec {
    pub fn zero() -> Self {
        SparseVec(BTreeMap::new())
    }

    pub fn unit(i: usize) -> Self {
        let mut m = BTreeMap::new();
        m.insert(i, scalar::one());
        SparseVec(m)
    }

    pub fn from_entries(entries: Vec<(usize, Scalar)>) -> Self {
        let mut v = SparseVec::zero();
        for (i, c) in entries {
            v.add_scaled_unit(i, &c);
        }
        v
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Scalar {
        self.0.get(&i).cloned().unwrap_or_else(scalar::zero)
    }

    pub fn add_scaled_unit(&mut self, i: usize, c: &Scalar) {
        if c.is_zero() {
            return;
        }
        let entry = self.0.entry(i).or_insert_with(scalar::zero);
        *entry += c;
        if entry.is_zero() {
            self.0.remove(&i);
        }
    }

    pub fn add_scaled(&mut self, other: &SparseVec, c: &Scalar) {
        if c.is_zero() {
            return;
        }
        for (i, x) in &other.0 {
            self.add_scaled_unit(*i, &(x * c));
        }
    }

    pub fn scale(&self, c: &Scalar) -> SparseVec {
        if c.is_zero() {
            return SparseVec::zero();
        }
        SparseVec(self.0.iter().map(|(i, x)| (*i, x * c)).collect())
    }

    pub fn negate(&self) -> SparseVec {
        SparseVec(self.0.iter().map(|(i, x)| (*i, -x)).collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Scalar)> {
        self.0.iter().map(|(i, c)| (*i, c))
    }

    /// Degree of a homogeneous vector in `space`; `None` for zero or mixed.
    pub fn homogeneous_degree(&self, space: &GradedSpace) -> Option<i64> {
        let mut deg = None;
        for (i, _) in self.iter() {
            match deg {
                None => deg = Some(space.degree(i)),
                Some(d) if d != space.degree(i) => return None,
                _ => {}
            }
        }
        deg
    }
}

/// A degree-homogeneous linear map between graded spaces, stored column-wise.
///
/// Every nonzero entry connects basis elements whose degrees differ exactly
/// by `degree`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearMap {
    pub source: GradedSpace,
    pub target: GradedSpace,
    pub degree: i64,
    columns: BTreeMap<usize, SparseVec>,
}

impl LinearMap {
    pub fn zero(source: GradedSpace, target: GradedSpace, degree: i64) -> Self {
        LinearMap { source, target, degree, columns: BTreeMap::new() }
    }

    pub fn identity(space: GradedSpace) -> Self {
        let mut m = LinearMap::zero(space.clone(), space.clone(), 0);
        for i in 0..space.dim() {
            m.columns.insert(i, SparseVec::unit(i));
        }
        m
    }

    /// Adds `c * e_to` to the image of `e_from`, enforcing homogeneity.
    pub fn add_entry(&mut self, from: usize, to: usize, c: Scalar) -> Result<()> {
        if c.is_zero() {
            return Ok(());
        }
        if self.target.degree(to) != self.source.degree(from) + self.degree {
            return Err(Error::DegreeMismatch(format!(
                "entry {} -> {} violates map degree {}",
                self.source.name(from),
                self.target.name(to),
                self.degree
            )));
        }
        let col = self.columns.entry(from).or_default();
        col.add_scaled_unit(to, &c);
        if col.is_zero() {
            self.columns.remove(&from);
        }
        Ok(())
    }

    pub fn from_entries(
        source: GradedSpace,
        target: GradedSpace,
        degree: i64,
        entries: Vec<(usize, usize, Scalar)>,
    ) -> Result<Self> {
        let mut m = LinearMap::zero(source, target, degree);
        for (from, to, c) in entries {
            m.add_entry(from, to, c)?;
        }
        Ok(m)
    }

    /// Sets the image of basis element `from` to `col`, enforcing homogeneity.
    pub fn set_column(&mut self, from: usize, col: SparseVec) -> Result<()> {
        if col.is_zero() {
            self.columns.remove(&from);
            return Ok(());
        }
        for (to, _) in col.iter() {
            if self.target.degree(to) != self.source.degree(from) + self.degree {
                return Err(Error::DegreeMismatch(format!(
                    "column {} contains inhomogeneous entry {}",
                    self.source.name(from),
                    self.target.name(to)
                )));
            }
        }
        self.columns.insert(from, col);
        Ok(())
    }

    pub fn column(&self, from: usize) -> SparseVec {
        self.columns.get(&from).cloned().unwrap_or_default()
    }

    pub fn apply_basis(&self, from: usize) -> SparseVec {
        self.column(from)
    }

    pub fn apply(&self, v: &SparseVec) -> SparseVec {
        let mut out = SparseVec::zero();
        for (i, c) in v.iter() {
            if let Some(col) = self.columns.get(&i) {
                out.add_scaled(col, c);
            }
        }
        out
    }

    /// `self . other` (apply `other` first).
    pub fn compose(&self, other: &LinearMap) -> Result<LinearMap> {
        if other.target != self.source {
            return Err(Error::SpaceMismatch("compose: inner target != outer source".into()));
        }
        let mut out = LinearMap::zero(
            other.source.clone(),
            self.target.clone(),
            self.degree + other.degree,
        );
        for (i, col) in &other.columns {
            let v = self.apply(col);
            out.set_column(*i, v)?;
        }
        Ok(out)
    }

    pub fn add(&self, other: &LinearMap) -> Result<LinearMap> {
        if self.source != other.source || self.target != other.target || self.degree != other.degree
        {
            return Err(Error::SpaceMismatch("add: incompatible linear maps".into()));
        }
        let mut out = self.clone();
        for (i, col) in &other.columns {
            let mut c = out.column(*i);
            c.add_scaled(col, &scalar::one());
            out.set_column(*i, c)?;
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Scalar) -> LinearMap {
        let mut out = LinearMap::zero(self.source.clone(), self.target.clone(), self.degree);
        if c.is_zero() {
            return out;
        }
        for (i, col) in &self.columns {
            out.columns.insert(*i, col.scale(c));
        }
        out
    }

    pub fn sub(&self, other: &LinearMap) -> Result<LinearMap> {
        self.add(&other.scale(&-scalar::one()))
    }

    pub fn is_zero(&self) -> bool {
        self.columns.is_empty()
    }

    /// Graded commutator `[a, b] = a.b - (-1)^{|a||b|} b.a` on endomorphisms.
    pub fn commutator(&self, other: &LinearMap) -> Result<LinearMap> {
        let ab = self.compose(other)?;
        let ba = other.compose(self)?;
        ab.sub(&ba.scale(&scalar::neg_one_pow(self.degree * other.degree)))
    }
}
