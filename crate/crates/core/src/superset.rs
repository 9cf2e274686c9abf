//! Finite supersets `G(I*) ⊇ I*` that a map sends into themselves.

use serde::Serialize;
use thiserror::Error;

use crate::orbit::{orbit, OrbitResult};
use crate::selfmap::{DescribedNatMap, MapError, Point, PointSet, SelfMap};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SupersetError {
    #[error("the orbit of {0} is infinite, so no finite invariant set contains it")]
    InfiniteOrbit(Point),
    #[error("this construction needs a map on the naturals")]
    NotNatDomain,
    #[error("profile does not apply: {0}")]
    ProfileInvalid(String),
    #[error(transparent)]
    Map(#[from] MapError),
}

/// Union of the orbits of `I* ∪ H`.
pub fn build_g_orbit_union(
    map: &SelfMap,
    istar: &PointSet,
    h: &PointSet,
) -> Result<PointSet, SupersetError> {
    let mut pts = Vec::new();
    for a in istar.union(h).iter() {
        match orbit(map, a)? {
            OrbitResult::Finite { tail, cycle } => {
                pts.extend(tail);
                pts.extend(cycle);
            }
            OrbitResult::Infinite { .. } => return Err(SupersetError::InfiniteOrbit(a)),
        }
    }
    Ok(PointSet::new(pts))
}

/// `I* ⊆ G` and `α(G) ⊆ G`.
pub fn check_superset_closure(
    map: &SelfMap,
    istar: &PointSet,
    g: &PointSet,
) -> Result<bool, MapError> {
    map.check_set(g)?;
    Ok(istar.is_subset(g) && map.image(g)?.is_subset(g))
}

/// A map on ℕ with `α(α(n)) = α(n) ≥ n`: every image is a fixed point at or above
/// its preimage. `b_n` are the fixed points in increasing order, `α(a) = b_{j(a)}`
/// and `r(a)` is the index of the first fixed point above `a`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxCondProfile {
    map: DescribedNatMap,
}

impl MaxCondProfile {
    pub fn map(&self) -> &DescribedNatMap {
        &self.map
    }

    pub fn alpha(&self, a: Point) -> Point {
        self.map.eval(a).expect("images dominate inputs")
    }

    pub fn is_fixed(&self, x: Point) -> bool {
        self.alpha(x) == x
    }

    /// Number of fixed points below `v`.
    pub fn fixed_count_below(&self, v: Point) -> u64 {
        let d = &self.map;
        let n = d.prefix_len();
        let head = (0..v.min(n)).filter(|&x| d.prefix()[x as usize] == x).count() as u64;
        if v <= n {
            return head;
        }
        let m = d.modulus();
        let len = v - n;
        let zeros = d.shifts().iter().filter(|&&c| c == 0).count() as u64;
        let rest = (n..n + len % m).filter(|&x| d.shift_at(x) == 0).count() as u64;
        head + (len / m) * zeros + rest
    }

    /// Fixed points in increasing order.
    pub fn fixed_points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..).filter(move |&x| self.is_fixed(x))
    }

    /// `b_n`.
    pub fn b(&self, n: u64) -> Point {
        self.fixed_points().nth(n as usize).expect("infinitely many fixed points")
    }

    pub fn j(&self, a: Point) -> u64 {
        self.fixed_count_below(self.alpha(a))
    }

    pub fn r(&self, a: Point) -> u64 {
        self.fixed_count_below(a + 1)
    }

    fn check_interval_variant(&self) -> Result<(), SupersetError> {
        let b0 = self.b(0);
        for x in 1..b0 {
            if self.alpha(x) > self.alpha(x - 1) {
                return Err(SupersetError::ProfileInvalid(format!(
                    "j increases from {} to {x} below the first fixed point {b0}",
                    x - 1
                )));
            }
        }
        let top = b0 + self.map.prefix_len() + 2 * self.map.modulus();
        for a in b0 + 1..=top {
            if !self.is_fixed(a) && self.j(a) != self.r(a) {
                return Err(SupersetError::ProfileInvalid(format!(
                    "{a} is not sent to the next fixed point above it"
                )));
            }
        }
        Ok(())
    }
}

/// Profile of a map with `α(α(n)) = α(n) ≥ n`, or `None` when that fails.
///
/// Beyond the prefix `α(x) = x + c_{x mod m}`, so checking `x < N + m` covers ℕ.
pub fn analyze_maxcond(map: &SelfMap) -> Result<Option<MaxCondProfile>, SupersetError> {
    let d = map.as_nat().ok_or(SupersetError::NotNatDomain)?;
    for x in 0..d.prefix_len() + d.modulus() {
        let y = d.eval(x)?;
        if y < x || d.eval(y)? != y {
            return Ok(None);
        }
    }
    Ok(Some(MaxCondProfile { map: d.clone() }))
}

/// `⋃_{a ∈ I* ∪ H} {a, α(a)}` for `H` with some `a ∈ I*` dominating `j` on `H`.
pub fn build_g_maxcond(
    profile: &MaxCondProfile,
    istar: &PointSet,
    h: &PointSet,
) -> Result<PointSet, SupersetError> {
    let jmax_h = h.iter().map(|x| profile.j(x)).max();
    let dominated = jmax_h.is_none_or(|jh| istar.iter().any(|a| profile.j(a) >= jh));
    if istar.is_empty() || !dominated {
        return Err(SupersetError::ProfileInvalid(format!(
            "no element of {istar} dominates j on {h}"
        )));
    }
    Ok(istar
        .union(h)
        .iter()
        .flat_map(|a| [a, profile.alpha(a)])
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IntervalBounds {
    pub u_star: Point,
    pub u_max: Point,
    pub v: Point,
}

/// Admissible left ends `u ∈ [u_star, u_max]` and right end `v` of interval supersets
/// `[u, v]` whose maximum is an image of `I*`.
pub fn interval_superset_bounds(
    profile: &MaxCondProfile,
    map: &SelfMap,
    istar: &PointSet,
) -> Result<IntervalBounds, SupersetError> {
    if map.as_nat() != Some(&profile.map) {
        return Err(SupersetError::ProfileInvalid("profile belongs to another map".into()));
    }
    let u_max = istar
        .min()
        .ok_or_else(|| SupersetError::ProfileInvalid("empty I*".into()))?;
    profile.check_interval_variant()?;
    let v = istar.iter().map(|a| profile.alpha(a)).max().unwrap();
    let b0 = profile.b(0);
    let u_star = (0..=b0).find(|&n| profile.alpha(n) <= v).unwrap();
    Ok(IntervalBounds { u_star, u_max, v })
}
