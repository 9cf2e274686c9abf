//! Self-maps on a finite domain `[0, n)` or on the naturals.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A domain element.
pub type Point = u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MapError {
    #[error("point {x} is outside the domain [0,{size})")]
    OutOfDomain { x: Point, size: u64 },
    #[error("malformed input: {0}")]
    Parse(String),
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("arithmetic overflow evaluating at {0}")]
    Overflow(Point),
}

/// Table on `[0, n)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FiniteTable {
    table: Vec<Point>,
}

impl FiniteTable {
    pub fn new(table: Vec<Point>) -> Result<Self, MapError> {
        let n = table.len() as u64;
        if n == 0 {
            return Err(MapError::InvalidMap("finite domain must be nonempty".into()));
        }
        if let Some((i, &v)) = table.iter().enumerate().find(|(_, &v)| v >= n) {
            return Err(MapError::InvalidMap(format!(
                "table entry {v} at index {i} is outside [0,{n})"
            )));
        }
        Ok(FiniteTable { table })
    }

    pub fn identity(n: usize) -> Self {
        FiniteTable {
            table: (0..n as Point).collect(),
        }
    }

    pub fn size(&self) -> u64 {
        self.table.len() as u64
    }

    pub fn table(&self) -> &[Point] {
        &self.table
    }
}

/// A map on the naturals: `x < N` reads the prefix, `x >= N` maps to `x + c[x mod m]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DescribedNatMap {
    prefix: Vec<Point>,
    shifts: Vec<i64>,
}

impl DescribedNatMap {
    pub fn new(prefix: Vec<Point>, shifts: Vec<i64>) -> Result<Self, MapError> {
        if shifts.is_empty() {
            return Err(MapError::InvalidMap("modulus must be at least 1".into()));
        }
        let n = prefix.len() as u64;
        let m = shifts.len() as u64;
        for (r, &c) in shifts.iter().enumerate() {
            let r = r as u64;
            // least x >= N with x = r (mod m)
            let x = n + (r + m - n % m) % m;
            if (x as i128) + (c as i128) < 0 {
                return Err(MapError::InvalidMap(format!(
                    "shift {c} on residue {r} sends {x} below zero"
                )));
            }
            if c.unsigned_abs() > (1u64 << 62) {
                return Err(MapError::InvalidMap(format!("shift {c} is too large")));
            }
        }
        Ok(DescribedNatMap { prefix, shifts })
    }

    pub fn prefix(&self) -> &[Point] {
        &self.prefix
    }

    pub fn prefix_len(&self) -> u64 {
        self.prefix.len() as u64
    }

    pub fn shifts(&self) -> &[i64] {
        &self.shifts
    }

    pub fn modulus(&self) -> u64 {
        self.shifts.len() as u64
    }

    pub fn shift_at(&self, x: Point) -> i64 {
        self.shifts[(x % self.modulus()) as usize]
    }

    /// `max |c_r| + 1`.
    pub fn step_bound(&self) -> u64 {
        self.shifts.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0) + 1
    }

    /// Largest prefix image, or 0.
    pub fn prefix_max(&self) -> Point {
        self.prefix.iter().copied().max().unwrap_or(0)
    }

    pub fn eval(&self, x: Point) -> Result<Point, MapError> {
        if x < self.prefix_len() {
            return Ok(self.prefix[x as usize]);
        }
        let y = x as i128 + self.shift_at(x) as i128;
        if y > u64::MAX as i128 {
            return Err(MapError::Overflow(x));
        }
        Ok(y as Point)
    }

    pub fn is_identity(&self) -> bool {
        self.prefix.iter().enumerate().all(|(i, &v)| v == i as Point)
            && self.shifts.iter().all(|&c| c == 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SelfMap {
    Finite(FiniteTable),
    Nat(DescribedNatMap),
}

impl SelfMap {
    pub fn finite(table: Vec<Point>) -> Result<Self, MapError> {
        FiniteTable::new(table).map(SelfMap::Finite)
    }

    pub fn nat(prefix: Vec<Point>, shifts: Vec<i64>) -> Result<Self, MapError> {
        DescribedNatMap::new(prefix, shifts).map(SelfMap::Nat)
    }

    /// `n ↦ n + 1` on the naturals.
    pub fn succ() -> Self {
        SelfMap::Nat(DescribedNatMap {
            prefix: vec![],
            shifts: vec![1],
        })
    }

    /// Identity on the naturals.
    pub fn identity_nat() -> Self {
        SelfMap::Nat(DescribedNatMap {
            prefix: vec![],
            shifts: vec![0],
        })
    }

    /// `n ↦ n + 2`.
    pub fn shift_by_two() -> Self {
        SelfMap::Nat(DescribedNatMap {
            prefix: vec![],
            shifts: vec![2],
        })
    }

    /// `0 ↦ 2`, `k ↦ k + 1` for `k >= 1`.
    pub fn bullet() -> Self {
        SelfMap::Nat(DescribedNatMap {
            prefix: vec![2],
            shifts: vec![1],
        })
    }

    /// `0 ↦ 2`, odd `x ↦ x + 3`, even `x >= 2 ↦ x - 1`: orbit of 0 is 0,2,1,4,3,6,5,...
    pub fn succ_conjugate() -> Self {
        SelfMap::Nat(DescribedNatMap {
            prefix: vec![2],
            shifts: vec![-1, 3],
        })
    }

    pub fn as_nat(&self) -> Option<&DescribedNatMap> {
        match self {
            SelfMap::Nat(d) => Some(d),
            SelfMap::Finite(_) => None,
        }
    }

    pub fn is_nat(&self) -> bool {
        matches!(self, SelfMap::Nat(_))
    }

    /// Domain size, `None` for the naturals.
    pub fn domain_size(&self) -> Option<u64> {
        match self {
            SelfMap::Finite(t) => Some(t.size()),
            SelfMap::Nat(_) => None,
        }
    }

    pub fn contains(&self, x: Point) -> bool {
        self.domain_size().is_none_or(|n| x < n)
    }

    pub fn check_point(&self, x: Point) -> Result<(), MapError> {
        match self.domain_size() {
            Some(size) if x >= size => Err(MapError::OutOfDomain { x, size }),
            _ => Ok(()),
        }
    }

    pub fn check_set(&self, s: &PointSet) -> Result<(), MapError> {
        match s.max() {
            Some(x) => self.check_point(x),
            None => Ok(()),
        }
    }

    pub fn eval(&self, x: Point) -> Result<Point, MapError> {
        match self {
            SelfMap::Finite(t) => t
                .table
                .get(x as usize)
                .copied()
                .filter(|_| x < t.size())
                .ok_or(MapError::OutOfDomain { x, size: t.size() }),
            SelfMap::Nat(d) => d.eval(x),
        }
    }

    pub fn iterate(&self, x: Point, k: u64) -> Result<Point, MapError> {
        self.check_point(x)?;
        let mut y = x;
        for _ in 0..k {
            y = self.eval(y)?;
        }
        Ok(y)
    }

    pub fn image(&self, s: &PointSet) -> Result<PointSet, MapError> {
        let v = s.iter().map(|x| self.eval(x)).collect::<Result<Vec<_>, _>>()?;
        Ok(PointSet::new(v))
    }

    pub fn is_identity(&self) -> bool {
        match self {
            SelfMap::Finite(t) => t.table.iter().enumerate().all(|(i, &v)| v == i as Point),
            SelfMap::Nat(d) => d.is_identity(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&MapDoc::from(self)).expect("map serialization")
    }
}

impl fmt::Display for SelfMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_json())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum MapDoc {
    Finite {
        size: u64,
        table: Vec<Point>,
    },
    Nat {
        modulus: u64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        prefix: Vec<Point>,
        shifts: Vec<i64>,
    },
}

impl From<&SelfMap> for MapDoc {
    fn from(m: &SelfMap) -> Self {
        match m {
            SelfMap::Finite(t) => MapDoc::Finite {
                size: t.size(),
                table: t.table.clone(),
            },
            SelfMap::Nat(d) => MapDoc::Nat {
                modulus: d.modulus(),
                prefix: d.prefix.clone(),
                shifts: d.shifts.clone(),
            },
        }
    }
}

impl Serialize for SelfMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        MapDoc::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for SelfMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = MapDoc::deserialize(d)?;
        from_doc(doc).map_err(serde::de::Error::custom)
    }
}

fn from_doc(doc: MapDoc) -> Result<SelfMap, MapError> {
    match doc {
        MapDoc::Finite { size, table } => {
            if size != table.len() as u64 {
                return Err(MapError::InvalidMap(format!(
                    "size {size} does not match table length {}",
                    table.len()
                )));
            }
            SelfMap::finite(table)
        }
        MapDoc::Nat {
            modulus,
            prefix,
            shifts,
        } => {
            if modulus != shifts.len() as u64 {
                return Err(MapError::InvalidMap(format!(
                    "modulus {modulus} does not match {} shifts",
                    shifts.len()
                )));
            }
            SelfMap::nat(prefix, shifts)
        }
    }
}

/// Parse the JSON map format.
pub fn parse_map(text: &[u8]) -> Result<SelfMap, MapError> {
    let doc: MapDoc =
        serde_json::from_slice(text).map_err(|e| MapError::Parse(e.to_string()))?;
    from_doc(doc)
}

/// Strictly increasing finite set of points.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct PointSet(Vec<Point>);

impl PointSet {
    pub fn new(mut v: Vec<Point>) -> Self {
        v.sort_unstable();
        v.dedup();
        PointSet(v)
    }

    pub fn empty() -> Self {
        PointSet(Vec::new())
    }

    pub fn singleton(x: Point) -> Self {
        PointSet(vec![x])
    }

    pub fn range(lo: Point, hi: Point) -> Self {
        PointSet((lo..=hi).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, x: Point) -> bool {
        self.0.binary_search(&x).is_ok()
    }

    pub fn min(&self) -> Option<Point> {
        self.0.first().copied()
    }

    pub fn max(&self) -> Option<Point> {
        self.0.last().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = Point> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[Point] {
        &self.0
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.iter().all(|x| other.contains(x))
    }

    pub fn union(&self, other: &PointSet) -> PointSet {
        PointSet::new(self.iter().chain(other.iter()).collect())
    }

    pub fn difference(&self, other: &PointSet) -> PointSet {
        PointSet(self.iter().filter(|&x| !other.contains(x)).collect())
    }

    pub fn without(&self, x: Point) -> PointSet {
        PointSet(self.iter().filter(|&y| y != x).collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&SetDoc { set: self.0.clone() }).expect("set serialization")
    }

    /// Parse `{"set":[...]}`.
    pub fn parse(text: &str) -> Result<Self, MapError> {
        let doc: SetDoc = serde_json::from_str(text).map_err(|e| MapError::Parse(e.to_string()))?;
        Ok(PointSet::new(doc.set))
    }
}

impl FromIterator<Point> for PointSet {
    fn from_iter<T: IntoIterator<Item = Point>>(iter: T) -> Self {
        PointSet::new(iter.into_iter().collect())
    }
}

impl From<Vec<Point>> for PointSet {
    fn from(v: Vec<Point>) -> Self {
        PointSet::new(v)
    }
}

impl fmt::Display for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "}}")
    }
}

impl Serialize for PointSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PointSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Vec::<Point>::deserialize(d).map(PointSet::new)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SetDoc {
    set: Vec<Point>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntervalDoc {
    interval: [Point; 2],
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: Point,
    hi: Point,
}

impl Interval {
    pub fn new(lo: Point, hi: Point) -> Result<Self, MapError> {
        if lo > hi {
            return Err(MapError::InvalidMap(format!("interval [{lo},{hi}] is empty")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn lo(&self) -> Point {
        self.lo
    }

    pub fn hi(&self) -> Point {
        self.hi
    }

    pub fn contains(&self, x: Point) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn to_set(&self) -> PointSet {
        PointSet::range(self.lo, self.hi)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&IntervalDoc {
            interval: [self.lo, self.hi],
        })
        .expect("interval serialization")
    }

    /// Parse `{"interval":[lo,hi]}`.
    pub fn parse(text: &str) -> Result<Self, MapError> {
        let doc: IntervalDoc =
            serde_json::from_str(text).map_err(|e| MapError::Parse(e.to_string()))?;
        Interval::new(doc.interval[0], doc.interval[1])
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}
