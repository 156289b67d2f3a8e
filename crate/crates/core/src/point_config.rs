//! Finite point configurations on Euclidean space.
//!
//! A [`Configuration`] is a finite multiset of points of `R^d`, stored as merged atoms with
//! integer multiplicities and kept in lexicographic order of coordinates, so two configurations
//! are equal as multisets exactly when they are equal as values. A [`LabeledSequence`] is an
//! ordered list of points; [`LabeledSequence::unlabel`] forgets the order and
//! [`Configuration::canonical_label`] picks one deterministic ordering back.

use std::cmp::Ordering;
use std::fmt;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{lex_cmp, squared_distance, Scalar};

/// A point of `R^d` with finite coordinates.
#[derive(Clone, PartialEq)]
pub struct Point<S>(Vec<S>);

impl<S: Scalar> Point<S> {
    pub fn new(coords: Vec<S>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("points need at least one coordinate".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Point(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![S::zero(); dim.max(1)])
    }

    pub fn coords(&self) -> &[S] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn squared_distance(&self, other: &Self) -> S {
        squared_distance(&self.0, &other.0)
    }

    pub fn distance(&self, other: &Self) -> S {
        self.squared_distance(other).sqrt()
    }

    pub fn into_coords(self) -> Vec<S> {
        self.0
    }
}

impl<S: fmt::Debug> fmt::Debug for Point<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.0).finish()
    }
}

impl From<f64> for Point<f64> {
    fn from(x: f64) -> Self {
        Point::new(vec![x]).expect("finite coordinate")
    }
}

/// One atom of a configuration: a location and its (positive) multiplicity.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom<S> {
    pub point: Point<S>,
    pub multiplicity: usize,
}

/// A finite multiset of points in `R^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration<S> {
    dim: usize,
    atoms: Vec<Atom<S>>,
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// How a count is compared against `n` in [`Configuration::in_concentration_set`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMode {
    Eq,
    Geq,
    Leq,
}

impl CountMode {
    pub fn holds(self, count: usize, n: usize) -> bool {
        match self {
            CountMode::Eq => count == n,
            CountMode::Geq => count >= n,
            CountMode::Leq => count <= n,
        }
    }
}

impl<S: Scalar> Configuration<S> {
    pub fn empty(dim: usize) -> Self {
        Configuration { dim, atoms: Vec::new() }
    }

    /// Build from (point, multiplicity) pairs; duplicates merge and zero multiplicities are rejected.
    pub fn from_atoms<I>(dim: usize, atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Point<S>, usize)>,
    {
        let mut raw: Vec<Atom<S>> = Vec::new();
        for (point, multiplicity) in atoms {
            check_dim(dim, point.dim())?;
            if multiplicity == 0 {
                return Err(Error::InvalidParameter("atom multiplicity must be positive".into()));
            }
            raw.push(Atom { point, multiplicity });
        }
        Ok(Self::from_sorted_merge(dim, raw))
    }

    /// One unit of mass per listed point.
    pub fn from_points<I>(dim: usize, points: I) -> Result<Self>
    where
        I: IntoIterator<Item = Point<S>>,
    {
        Self::from_atoms(dim, points.into_iter().map(|p| (p, 1)))
    }

    /// Convenience constructor for one-dimensional configurations.
    pub fn from_reals(xs: &[S]) -> Result<Self> {
        Self::from_points(1, xs.iter().map(|&x| Point::new(vec![x])).collect::<Result<Vec<_>>>()?)
    }

    fn from_sorted_merge(dim: usize, mut raw: Vec<Atom<S>>) -> Self {
        raw.sort_by(|a, b| lex_cmp(a.point.coords(), b.point.coords()));
        let mut atoms: Vec<Atom<S>> = Vec::with_capacity(raw.len());
        for atom in raw {
            match atoms.last_mut() {
                Some(last) if lex_cmp(last.point.coords(), atom.point.coords()) == Ordering::Equal => {
                    last.multiplicity += atom.multiplicity;
                }
                _ => atoms.push(atom),
            }
        }
        Configuration { dim, atoms }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom<S>] {
        &self.atoms
    }

    /// Total mass `γX`.
    pub fn total_mass(&self) -> usize {
        self.atoms.iter().map(|a| a.multiplicity).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// True when every atom has multiplicity one.
    pub fn is_simple(&self) -> bool {
        self.atoms.iter().all(|a| a.multiplicity == 1)
    }

    /// Atoms expanded into a list with one entry per unit of mass, in atom order.
    pub fn expanded(&self) -> Vec<&Point<S>> {
        self.atoms
            .iter()
            .flat_map(|a| std::iter::repeat_n(&a.point, a.multiplicity))
            .collect()
    }

    /// The value `γE`.
    pub fn count(&self, window: &Window<S>) -> Result<usize> {
        check_dim(self.dim, window.dim())?;
        Ok(self
            .atoms
            .iter()
            .filter(|a| window.contains(&a.point))
            .map(|a| a.multiplicity)
            .sum())
    }

    /// Mass carried by atoms in the open interior of `window`.
    pub fn count_interior(&self, window: &Window<S>) -> Result<usize> {
        check_dim(self.dim, window.dim())?;
        Ok(self
            .atoms
            .iter()
            .filter(|a| window.contains_interior(&a.point))
            .map(|a| a.multiplicity)
            .sum())
    }

    /// The restriction `γ_E`.
    pub fn restrict(&self, window: &Window<S>) -> Result<Self> {
        check_dim(self.dim, window.dim())?;
        Ok(self.filtered(|p| window.contains(p)))
    }

    /// Restriction to the open interior of `window`.
    pub fn restrict_interior(&self, window: &Window<S>) -> Result<Self> {
        check_dim(self.dim, window.dim())?;
        Ok(self.filtered(|p| window.contains_interior(p)))
    }

    fn filtered(&self, keep: impl Fn(&Point<S>) -> bool) -> Self {
        Configuration {
            dim: self.dim,
            atoms: self.atoms.iter().filter(|a| keep(&a.point)).cloned().collect(),
        }
    }

    /// Multiset sum `γ + η`.
    pub fn superpose(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let raw = self.atoms.iter().chain(&other.atoms).cloned().collect();
        Ok(Self::from_sorted_merge(self.dim, raw))
    }

    /// Membership in the concentration set `Ξ_{=n}(E)`, `Ξ_{≥n}(E)` or `Ξ_{≤n}(E)`.
    pub fn in_concentration_set(&self, window: &Window<S>, n: usize, mode: CountMode) -> Result<bool> {
        Ok(mode.holds(self.count(window)?, n))
    }

    /// `γ + δ_x`.
    pub fn with_point(&self, point: Point<S>) -> Result<Self> {
        check_dim(self.dim, point.dim())?;
        let mut raw = self.atoms.clone();
        raw.push(Atom { point, multiplicity: 1 });
        Ok(Self::from_sorted_merge(self.dim, raw))
    }

    /// Relocate the whole mass of atom `index` to `to`.
    pub fn with_atom_moved(&self, index: usize, to: Point<S>) -> Result<Self> {
        check_dim(self.dim, to.dim())?;
        let mut raw = self.atoms.clone();
        raw[index].point = to;
        Ok(Self::from_sorted_merge(self.dim, raw))
    }

    /// A deterministic labeling: points by increasing distance to `anchor`, ties broken
    /// lexicographically, multiplicities expanded into repeated entries.
    pub fn canonical_label(&self, anchor: &Point<S>) -> Result<LabeledSequence<S>> {
        check_dim(self.dim, anchor.dim())?;
        let mut order: Vec<(S, &Atom<S>)> =
            self.atoms.iter().map(|a| (a.point.squared_distance(anchor), a)).collect();
        order.sort_by(|(da, a), (db, b)| {
            da.partial_cmp(db)
                .unwrap_or(Ordering::Equal)
                .then_with(|| lex_cmp(a.point.coords(), b.point.coords()))
        });
        let points = order
            .into_iter()
            .flat_map(|(_, a)| std::iter::repeat_n(a.point.clone(), a.multiplicity))
            .collect();
        Ok(LabeledSequence { dim: self.dim, points })
    }
}

/// Localizing window: a half-open box `[lo, hi)` or a closed ball.
#[derive(Clone, Debug, PartialEq)]
pub enum Window<S> {
    Box { lo: Vec<S>, hi: Vec<S> },
    Ball { center: Point<S>, radius: S },
}

impl<S: Scalar> Window<S> {
    pub fn new_box(lo: Vec<S>, hi: Vec<S>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::InvalidWindow("box bounds must have equal positive length".into()));
        }
        if lo.iter().chain(&hi).any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l < h)) {
            return Err(Error::InvalidWindow("box needs lo < hi on every axis".into()));
        }
        Ok(Window::Box { lo, hi })
    }

    /// The interval `[lo, hi)` on the real line.
    pub fn interval(lo: S, hi: S) -> Result<Self> {
        Self::new_box(vec![lo], vec![hi])
    }

    /// The cube `[lo, hi)^dim`.
    pub fn cube(dim: usize, lo: S, hi: S) -> Result<Self> {
        Self::new_box(vec![lo; dim], vec![hi; dim])
    }

    pub fn ball(center: Point<S>, radius: S) -> Result<Self> {
        if !(radius > S::zero()) || !radius.is_finite() {
            return Err(Error::InvalidWindow("ball radius must be positive and finite".into()));
        }
        Ok(Window::Ball { center, radius })
    }

    pub fn dim(&self) -> usize {
        match self {
            Window::Box { lo, .. } => lo.len(),
            Window::Ball { center, .. } => center.dim(),
        }
    }

    /// Half-open membership for boxes, closed membership for balls.
    pub fn contains(&self, p: &Point<S>) -> bool {
        self.contains_coords(p.coords())
    }

    pub fn contains_coords(&self, x: &[S]) -> bool {
        match self {
            Window::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(c, (l, h))| l <= c && c < h),
            Window::Ball { center, radius } => squared_distance(x, center.coords()) <= *radius * *radius,
        }
    }

    /// Membership in the open interior.
    pub fn contains_interior(&self, p: &Point<S>) -> bool {
        let x = p.coords();
        match self {
            Window::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(c, (l, h))| l < c && c < h),
            Window::Ball { center, radius } => squared_distance(x, center.coords()) < *radius * *radius,
        }
    }

    /// Distance from `x` to the closed complement of the interior; zero outside the interior.
    pub fn distance_to_complement(&self, x: &[S]) -> S {
        match self {
            Window::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(&c, (&l, &h))| (c - l).min(h - c))
                .fold(S::infinity(), S::min)
                .max(S::zero()),
            Window::Ball { center, radius } => (*radius - squared_distance(x, center.coords()).sqrt()).max(S::zero()),
        }
    }

    /// Distance from `x` to the window (zero inside).
    pub fn distance_to(&self, x: &[S]) -> S {
        match self {
            Window::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(&c, (&l, &h))| {
                    let d = (l - c).max(c - h).max(S::zero());
                    d * d
                })
                .sum::<S>()
                .sqrt(),
            Window::Ball { center, radius } => (squared_distance(x, center.coords()).sqrt() - *radius).max(S::zero()),
        }
    }

    pub fn volume(&self) -> S {
        match self {
            Window::Box { lo, hi } => lo.iter().zip(hi).map(|(&l, &h)| h - l).fold(S::one(), |acc, w| acc * w),
            Window::Ball { radius, .. } => {
                // V_d = V_{d-2} * 2π r² / d
                let d = self.dim();
                let pi = S::lit(std::f64::consts::PI);
                let r2 = *radius * *radius;
                let (mut v, start) = if d % 2 == 0 { (S::one(), 2) } else { (S::lit(2.0) * *radius, 3) };
                let mut k = start;
                while k <= d {
                    v = v * S::lit(2.0) * pi * r2 / S::of_usize(k);
                    k += 2;
                }
                v
            }
        }
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> (Vec<S>, Vec<S>) {
        match self {
            Window::Box { lo, hi } => (lo.clone(), hi.clone()),
            Window::Ball { center, radius } => (
                center.coords().iter().map(|&c| c - *radius).collect(),
                center.coords().iter().map(|&c| c + *radius).collect(),
            ),
        }
    }

    pub fn diameter(&self) -> S {
        match self {
            Window::Box { lo, hi } => squared_distance(lo, hi).sqrt(),
            Window::Ball { radius, .. } => S::lit(2.0) * *radius,
        }
    }
}

/// A labeled (ordered) finite sequence of points.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSequence<S> {
    dim: usize,
    points: Vec<Point<S>>,
}

impl<S: Scalar> LabeledSequence<S> {
    pub fn new(dim: usize, points: Vec<Point<S>>) -> Result<Self> {
        for p in &points {
            check_dim(dim, p.dim())?;
        }
        Ok(LabeledSequence { dim, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Point<S>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The unlabeling map: one unit of mass per entry.
    pub fn unlabel(&self) -> Configuration<S> {
        let raw = self.points.iter().map(|p| Atom { point: p.clone(), multiplicity: 1 }).collect();
        Configuration::from_sorted_merge(self.dim, raw)
    }

    /// The first `min(m, len)` entries.
    pub fn truncate(&self, m: usize) -> Self {
        LabeledSequence { dim: self.dim, points: self.points.iter().take(m).cloned().collect() }
    }

    /// Entries reordered so that position `p` holds entry `order[p]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        LabeledSequence { dim: self.dim, points: order.iter().map(|&i| self.points[i].clone()).collect() }
    }

    /// `sqrt(Σ_p d(x_p, y_p)²)` for sequences of equal length.
    pub fn product_distance(&self, other: &Self) -> Result<S> {
        check_dim(self.dim, other.dim)?;
        if self.len() != other.len() {
            return Err(Error::InvalidParameter("sequences of different length".into()));
        }
        Ok(self
            .points
            .iter()
            .zip(&other.points)
            .map(|(x, y)| x.squared_distance(y))
            .sum::<S>()
            .sqrt())
    }
}

// JSON wire formats.

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomWire<S> {
    x: Vec<S>,
    m: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigurationWire<S> {
    dim: usize,
    atoms: Vec<AtomWire<S>>,
}

impl<S: Scalar + Serialize> Serialize for Configuration<S> {
    /// Atoms are written in canonical-label order around the origin.
    fn serialize<Z: Serializer>(&self, serializer: Z) -> std::result::Result<Z::Ok, Z::Error> {
        let origin = Point::origin(self.dim);
        let mut atoms: Vec<&Atom<S>> = self.atoms.iter().collect();
        atoms.sort_by(|a, b| {
            a.point
                .squared_distance(&origin)
                .partial_cmp(&b.point.squared_distance(&origin))
                .unwrap_or(Ordering::Equal)
                .then_with(|| lex_cmp(a.point.coords(), b.point.coords()))
        });
        ConfigurationWire {
            dim: self.dim,
            atoms: atoms.into_iter().map(|a| AtomWire { x: a.point.coords().to_vec(), m: a.multiplicity }).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de, S: Scalar + DeserializeOwned> Deserialize<'de> for Configuration<S> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = ConfigurationWire::<S>::deserialize(deserializer)?;
        let atoms = wire
            .atoms
            .into_iter()
            .map(|a| Point::new(a.x).map(|p| (p, a.m)))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        Configuration::from_atoms(wire.dim, atoms).map_err(serde::de::Error::custom)
    }
}

impl<S: Scalar + Serialize> Serialize for Point<S> {
    fn serialize<Z: Serializer>(&self, serializer: Z) -> std::result::Result<Z::Ok, Z::Error> {
        self.0.serialize(serializer)
    }
}

impl<'de, S: Scalar + DeserializeOwned> Deserialize<'de> for Point<S> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        Point::new(Vec::<S>::deserialize(deserializer)?).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum WindowWire<S> {
    Box { lo: Vec<S>, hi: Vec<S> },
    Ball { center: Vec<S>, radius: S },
}

impl<S: Scalar + Serialize> Serialize for Window<S> {
    fn serialize<Z: Serializer>(&self, serializer: Z) -> std::result::Result<Z::Ok, Z::Error> {
        match self {
            Window::Box { lo, hi } => WindowWire::Box { lo: lo.clone(), hi: hi.clone() },
            Window::Ball { center, radius } => WindowWire::Ball { center: center.coords().to_vec(), radius: *radius },
        }
        .serialize(serializer)
    }
}

impl<'de, S: Scalar + DeserializeOwned> Deserialize<'de> for Window<S> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let window = match WindowWire::<S>::deserialize(deserializer)? {
            WindowWire::Box { lo, hi } => Window::new_box(lo, hi),
            WindowWire::Ball { center, radius } => Point::new(center).and_then(|c| Window::ball(c, radius)),
        };
        window.map_err(serde::de::Error::custom)
    }
}
