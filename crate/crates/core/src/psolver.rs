//! Finite supersets that a map preserves up to one removed point: the predicates,
//! the three-part decomposition of a candidate, existence and explicit solutions,
//! and a bounded search for factorizations `φ = β ∘ α`.

use serde::Serialize;
use thiserror::Error;

use crate::orbit::{self, OrbitOracle, OrbitResult};
use crate::selfmap::{MapError, Point, PointSet, SelfMap};
use crate::structure::NatStructure;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PError {
    #[error("structure violation: {0}")]
    StructureViolation(String),
    #[error("the solution fails the inside-I* removal property on {istar}")]
    NotAP2Solution { istar: PointSet },
    #[error("query set is empty")]
    EmptyQuery,
    #[error(transparent)]
    Map(#[from] MapError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PMode {
    /// Removed point anywhere in `G(I*)`.
    P1,
    /// Removed point inside `I*`.
    P2,
}

/// `I* ⊆ G`, the removal point lies in `G` (P1) or `I*` (P2), and `φ(G \ {u}) ⊆ G`.
pub fn check_p(
    mode: PMode,
    map: &SelfMap,
    g: &PointSet,
    u: Point,
    istar: &PointSet,
) -> Result<bool, MapError> {
    map.check_set(g)?;
    let u_ok = match mode {
        PMode::P1 => g.contains(u),
        PMode::P2 => istar.contains(u),
    };
    Ok(u_ok && istar.is_subset(g) && map.image(&g.without(u))?.is_subset(g))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HShape {
    /// `G` meets an infinite orbit: the removal point is ξ of the infinite part.
    InfiniteMeet,
    /// Every orbit through `G` is finite.
    AllFinite,
}

/// Partition of `G` into infinite-orbit points `h`, finite-orbit points reaching
/// the removal point `h_bar`, and the remaining finite-orbit points `h_tilde`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HDecomposition {
    pub h: PointSet,
    pub h_bar: PointSet,
    pub h_tilde: PointSet,
    pub shape: HShape,
}

fn prefix_until(o: &OrbitResult, t: u64) -> impl Iterator<Item = Point> + '_ {
    (0..=t).map(move |k| o.point_at(k))
}

fn full_points(o: &OrbitResult) -> Vec<Point> {
    match o {
        OrbitResult::Finite { tail, cycle } => tail.iter().chain(cycle).copied().collect(),
        OrbitResult::Infinite { .. } => unreachable!("finite orbit expected"),
    }
}

/// Splits `G` by orbit type and checks that `(G, v)` has one of the two shapes
/// that make `φ(G \ {v}) ⊆ G`.
pub fn decompose_hhh(map: &SelfMap, g: &PointSet, v: Point) -> Result<HDecomposition, PError> {
    map.check_set(g)?;
    let oracle = OrbitOracle::new(map);
    let orbits = g.iter().map(|a| oracle.orbit(a)).collect::<Result<Vec<_>, _>>()?;
    let (mut h, mut h_bar, mut h_tilde) = (vec![], vec![], vec![]);
    for (a, o) in g.iter().zip(&orbits) {
        if !o.is_finite() {
            h.push(a);
        } else if o.contains(v) {
            h_bar.push(a);
        } else {
            h_tilde.push(a);
        }
    }
    let mut rebuilt: Vec<Point> = Vec::new();
    for (a, o) in g.iter().zip(&orbits) {
        if h_tilde.contains(&a) {
            rebuilt.extend(full_points(o));
        }
    }
    let shape = if h.is_empty() {
        if h_bar.is_empty() {
            return Err(PError::StructureViolation(format!(
                "no point of {g} reaches the removal point {v}"
            )));
        }
        for (a, o) in g.iter().zip(&orbits) {
            if h_bar.contains(&a) {
                rebuilt.extend(prefix_until(o, o.hitting_time(v).unwrap()));
            }
        }
        HShape::AllFinite
    } else {
        if !h_bar.is_empty() {
            return Err(PError::StructureViolation(format!(
                "finite-orbit points {} reach the removal point while {g} meets an infinite orbit",
                PointSet::new(h_bar)
            )));
        }
        let hs = PointSet::new(h.clone());
        let x = orbit::xi(map, &hs)?.ok_or_else(|| {
            PError::StructureViolation(format!("infinite orbits of {hs} do not meet"))
        })?;
        if x.point != v {
            return Err(PError::StructureViolation(format!(
                "removal point {v} differs from the meeting point {} of {hs}",
                x.point
            )));
        }
        for (a, o) in g.iter().zip(&orbits) {
            if hs.contains(a) {
                rebuilt.extend(prefix_until(o, x.hitting_times[&a]));
            }
        }
        HShape::InfiniteMeet
    };
    if PointSet::new(rebuilt) != *g {
        return Err(PError::StructureViolation(format!(
            "{g} is not the union of its orbit pieces"
        )));
    }
    Ok(HDecomposition {
        h: PointSet::new(h),
        h_bar: PointSet::new(h_bar),
        h_tilde: PointSet::new(h_tilde),
        shape,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Construction {
    /// Whole orbits of finite-orbit elements, plus the infinite-orbit elements'
    /// segments up to their meeting point ξ, which is also the removal point.
    OrbitSegments,
    /// `G(I*) = {ã, φ(ã), …, φⁿ(ã)}` with `n` the last step at which the orbit of
    /// `ã` visits `I*`, and removal point `φⁿ(ã)`.
    FullOrbit { start: Point },
}

/// Computable `G` and removal point `u` for a map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PSolution {
    pub mode: PMode,
    pub construction: Construction,
    map: SelfMap,
}

impl PSolution {
    pub fn new(mode: PMode, construction: Construction, map: SelfMap) -> Self {
        PSolution {
            mode,
            construction,
            map,
        }
    }

    pub fn map(&self) -> &SelfMap {
        &self.map
    }

    pub fn g(&self, istar: &PointSet) -> Result<PointSet, PError> {
        Ok(self.pair(istar)?.0)
    }

    pub fn u(&self, istar: &PointSet) -> Result<Point, PError> {
        Ok(self.pair(istar)?.1)
    }

    /// `(G(I*), u(I*))`.
    pub fn pair(&self, istar: &PointSet) -> Result<(PointSet, Point), PError> {
        if istar.is_empty() {
            return Err(PError::EmptyQuery);
        }
        self.map.check_set(istar)?;
        match self.construction {
            Construction::FullOrbit { start } => {
                let o = orbit::orbit(&self.map, start)?;
                let n = istar
                    .iter()
                    .map(|x| o.hitting_time(x))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| {
                        PError::StructureViolation(format!("orbit of {start} misses part of {istar}"))
                    })?
                    .into_iter()
                    .max()
                    .unwrap();
                Ok((prefix_until(&o, n).collect(), o.point_at(n)))
            }
            Construction::OrbitSegments => {
                let oracle = OrbitOracle::new(&self.map);
                let mut g = Vec::new();
                let mut infinite = Vec::new();
                for a in istar.iter() {
                    let o = oracle.orbit(a)?;
                    if o.is_finite() {
                        g.extend(full_points(&o));
                    } else {
                        infinite.push(a);
                    }
                }
                if infinite.is_empty() {
                    return Ok((PointSet::new(g), istar.min().unwrap()));
                }
                let hs = PointSet::new(infinite);
                let x = orbit::xi(&self.map, &hs)?.ok_or_else(|| {
                    PError::StructureViolation(format!("infinite orbits of {hs} do not meet"))
                })?;
                for a in hs.iter() {
                    let o = oracle.orbit(a)?;
                    g.extend(prefix_until(&o, x.hitting_times[&a]));
                }
                Ok((PointSet::new(g), x.point))
            }
        }
    }
}

/// Some `(G, u)` with removal point in `G` exists iff every two infinite orbits meet.
pub fn solve_p1(map: &SelfMap) -> Option<PSolution> {
    orbit::check_p_tilde(map).then(|| PSolution {
        mode: PMode::P1,
        construction: Construction::OrbitSegments,
        map: map.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderScope {
    All,
    InfiniteOnly,
}

/// Whether any two points in scope are comparable under "one lies on the other's orbit".
pub fn is_total_order(map: &SelfMap, scope: OrderScope) -> Result<bool, MapError> {
    match map {
        SelfMap::Nat(_) => NatStructure::new(map)
            .expect("map on ℕ")
            .is_total(scope == OrderScope::InfiniteOnly),
        SelfMap::Finite(t) => {
            if scope == OrderScope::InfiniteOnly {
                return Ok(true);
            }
            let oracle = OrbitOracle::new(map);
            let orbits = (0..t.size())
                .map(|a| oracle.orbit(a))
                .collect::<Result<Vec<_>, _>>()?;
            for a in 0..t.size() {
                for b in a + 1..t.size() {
                    if !orbits[a as usize].contains(b) && !orbits[b as usize].contains(a) {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
    }
}

/// A point whose orbit is the whole domain; the least one for finite tables.
pub fn has_full_orbit(map: &SelfMap) -> Result<Option<Point>, MapError> {
    match map {
        SelfMap::Nat(_) => NatStructure::new(map).expect("map on ℕ").full_orbit_start(),
        SelfMap::Finite(t) => {
            for a in 0..t.size() {
                if full_points(&orbit::orbit(map, a)?).len() as u64 == t.size() {
                    return Ok(Some(a));
                }
            }
            Ok(None)
        }
    }
}

/// Some `(G, u)` with removal point in `I*` exists iff the orbit order is total on
/// the infinite-orbit points. Uses the full-orbit construction when a full orbit
/// exists.
pub fn solve_p2(map: &SelfMap) -> Result<Option<PSolution>, MapError> {
    if !is_total_order(map, OrderScope::InfiniteOnly)? {
        return Ok(None);
    }
    let construction = match has_full_orbit(map)? {
        Some(start) => Construction::FullOrbit { start },
        None => Construction::OrbitSegments,
    };
    Ok(Some(PSolution {
        mode: PMode::P2,
        construction,
        map: map.clone(),
    }))
}

/// All subsets of `[0, bound]` with 1 to `max_len` elements.
pub fn small_subsets(bound: Point, max_len: usize) -> Vec<PointSet> {
    fn rec(start: Point, bound: Point, left: usize, cur: &mut Vec<Point>, out: &mut Vec<PointSet>) {
        if !cur.is_empty() {
            out.push(PointSet::new(cur.clone()));
        }
        if left == 0 {
            return;
        }
        for x in start..=bound {
            cur.push(x);
            rec(x + 1, bound, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, bound, max_len, &mut Vec::new(), &mut out);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Rejection {
    NotABijection,
    /// `α(x) ∉ G(I*)` for some `x ∈ G(I*)`.
    LeavesSuperset { istar: PointSet, x: Point },
    /// No point of `G(I*)` has an infinite orbit under `β = φ ∘ α⁻¹`.
    NoInfiniteOrbit { istar: PointSet },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndivisibilityReport {
    pub bound: Point,
    pub sets_checked: usize,
    /// Bijections of `[0, bound]` that preserve every sampled `G(I*)`.
    pub closure_candidates: u64,
    /// Candidates whose `β` also has an infinite orbit through every sampled `G(I*)`.
    pub survivors: Vec<Vec<Point>>,
}

fn sampled_pairs(
    sol: &PSolution,
    bound: Point,
) -> Result<Vec<(PointSet, PointSet, Point)>, PError> {
    let mut out = Vec::new();
    for istar in small_subsets(bound, 3) {
        let (g, u) = sol.pair(&istar)?;
        if !check_p(PMode::P2, sol.map(), &g, u, &istar)? {
            return Err(PError::NotAP2Solution { istar });
        }
        out.push((istar, g, u));
    }
    Ok(out)
}

fn effective_bound(map: &SelfMap, bound: Point) -> Point {
    map.domain_size().map_or(bound, |n| bound.min(n - 1))
}

/// `β = φ ∘ α⁻¹` where `α` permutes `[0, alpha.len())` and fixes everything else.
pub fn factor_beta(map: &SelfMap, alpha: &[Point]) -> Result<SelfMap, MapError> {
    let mut inv = vec![0; alpha.len()];
    for (x, &y) in alpha.iter().enumerate() {
        inv[y as usize] = x as Point;
    }
    let alpha_inv = |x: Point| inv.get(x as usize).copied().unwrap_or(x);
    match map {
        SelfMap::Finite(t) => {
            SelfMap::finite((0..t.size()).map(|x| map.eval(alpha_inv(x))).collect::<Result<_, _>>()?)
        }
        SelfMap::Nat(d) => {
            let n = d.prefix_len().max(alpha.len() as u64);
            let prefix = (0..n).map(|x| map.eval(alpha_inv(x))).collect::<Result<_, _>>()?;
            SelfMap::nat(prefix, d.shifts().to_vec())
        }
    }
}

fn survives(
    map: &SelfMap,
    alpha: &[Point],
    sets: &[(PointSet, PointSet, Point)],
) -> Result<Result<(), Rejection>, PError> {
    let beta = factor_beta(map, alpha)?;
    let oracle = OrbitOracle::new(&beta);
    for (istar, g, _) in sets {
        let mut any = false;
        for a in g.iter() {
            if !oracle.orbit(a)?.is_finite() {
                any = true;
                break;
            }
        }
        if !any {
            return Ok(Err(Rejection::NoInfiniteOrbit {
                istar: istar.clone(),
            }));
        }
    }
    Ok(Ok(()))
}

/// Checks one candidate `α` (a permutation of `[0, alpha.len())`).
pub fn check_indivisibility_candidate(
    map: &SelfMap,
    sol: &PSolution,
    alpha: &[Point],
) -> Result<Result<(), Rejection>, PError> {
    let mut seen = vec![false; alpha.len()];
    for &y in alpha {
        if y as usize >= alpha.len() || std::mem::replace(&mut seen[y as usize], true) {
            return Ok(Err(Rejection::NotABijection));
        }
    }
    if alpha.is_empty() {
        return Ok(Err(Rejection::NotABijection));
    }
    let bound = effective_bound(map, alpha.len() as Point - 1);
    let sets = sampled_pairs(sol, bound)?;
    for (istar, g, _) in &sets {
        for x in g.iter() {
            let ax = alpha.get(x as usize).copied().unwrap_or(x);
            if !g.contains(ax) {
                return Ok(Err(Rejection::LeavesSuperset {
                    istar: istar.clone(),
                    x,
                }));
            }
        }
    }
    survives(map, alpha, &sets)
}

/// Searches every permutation `α` of `[0, bound]` that maps each sampled `G(I*)`
/// (for `I* ⊆ [0, bound]`, `|I*| ≤ 3`) into itself and such that `φ ∘ α⁻¹` has an
/// infinite orbit through every sampled `G(I*)`.
pub fn indivisibility_check(
    map: &SelfMap,
    sol: &PSolution,
    bound: Point,
) -> Result<IndivisibilityReport, PError> {
    let bound = effective_bound(map, bound);
    let sets = sampled_pairs(sol, bound)?;
    let size = bound as usize + 1;
    // allowed[x]: images of x compatible with every sampled G containing x
    let mut allowed: Vec<Vec<bool>> = vec![vec![true; size]; size];
    for (_, g, _) in &sets {
        for x in g.iter().filter(|&x| x <= bound) {
            for (y, ok) in allowed[x as usize].iter_mut().enumerate() {
                *ok &= g.contains(y as Point);
            }
        }
    }
    let mut report = IndivisibilityReport {
        bound,
        sets_checked: sets.len(),
        closure_candidates: 0,
        survivors: Vec::new(),
    };
    let mut alpha = Vec::with_capacity(size);
    let mut used = vec![false; size];
    search(map, &sets, &allowed, &mut alpha, &mut used, &mut report)?;
    Ok(report)
}

fn search(
    map: &SelfMap,
    sets: &[(PointSet, PointSet, Point)],
    allowed: &[Vec<bool>],
    alpha: &mut Vec<Point>,
    used: &mut [bool],
    report: &mut IndivisibilityReport,
) -> Result<(), PError> {
    let x = alpha.len();
    if x == allowed.len() {
        report.closure_candidates += 1;
        if survives(map, alpha, sets)?.is_ok() {
            report.survivors.push(alpha.clone());
        }
        return Ok(());
    }
    for y in 0..allowed.len() {
        if allowed[x][y] && !used[y] {
            used[y] = true;
            alpha.push(y as Point);
            search(map, sets, allowed, alpha, used, report)?;
            alpha.pop();
            used[y] = false;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: &[u64]) -> SelfMap {
        SelfMap::finite(v.to_vec()).unwrap()
    }

    fn s(v: &[u64]) -> PointSet {
        PointSet::new(v.to_vec())
    }

    fn fix0() -> SelfMap {
        SelfMap::nat(vec![0], vec![1]).unwrap()
    }

    #[test]
    fn check_p_examples() {
        let succ = SelfMap::succ();
        let g = PointSet::range(0, 4);
        assert!(check_p(PMode::P2, &succ, &g, 4, &s(&[1, 4])).unwrap());
        assert!(!check_p(PMode::P2, &succ, &g, 1, &s(&[1, 4])).unwrap());
        let m = t(&[1, 1, 0]);
        assert!(check_p(PMode::P1, &m, &s(&[1]), 1, &s(&[1])).unwrap());
        // removal point outside I* is fine for P1 only
        assert!(check_p(PMode::P1, &succ, &g, 4, &s(&[1])).unwrap());
        assert!(!check_p(PMode::P2, &succ, &g, 4, &s(&[1])).unwrap());
    }

    #[test]
    fn decompose_examples() {
        let d = decompose_hhh(&fix0(), &PointSet::range(0, 3), 3).unwrap();
        assert_eq!((d.h, d.h_bar, d.h_tilde), (s(&[1, 2, 3]), s(&[]), s(&[0])));
        assert_eq!(d.shape, HShape::InfiniteMeet);
        let d = decompose_hhh(&t(&[1, 2, 0]), &s(&[0, 1, 2]), 0).unwrap();
        assert_eq!((d.h, d.h_bar, d.h_tilde), (s(&[]), s(&[0, 1, 2]), s(&[])));
        assert_eq!(d.shape, HShape::AllFinite);
        let d = decompose_hhh(&SelfMap::succ(), &PointSet::range(0, 3), 3).unwrap();
        assert_eq!((d.h, d.h_bar, d.h_tilde), (PointSet::range(0, 3), s(&[]), s(&[])));
    }

    #[test]
    fn decompose_rejects_bad_shapes() {
        let succ = SelfMap::succ();
        assert!(matches!(
            decompose_hhh(&succ, &PointSet::range(0, 3), 2),
            Err(PError::StructureViolation(_))
        ));
        assert!(matches!(
            decompose_hhh(&succ, &s(&[0, 2]), 2),
            Err(PError::StructureViolation(_))
        ));
        assert!(matches!(
            decompose_hhh(&t(&[1, 2, 0, 3]), &s(&[0, 1, 2]), 3),
            Err(PError::StructureViolation(_))
        ));
    }

    #[test]
    fn solve_p1_examples() {
        let sol = solve_p1(&SelfMap::succ()).unwrap();
        assert_eq!(sol.pair(&s(&[2, 5])).unwrap(), (PointSet::range(2, 5), 5));
        assert!(solve_p1(&SelfMap::shift_by_two()).is_none());
        let m = t(&[1, 2, 0, 3]);
        let sol = solve_p1(&m).unwrap();
        let (g, v) = sol.pair(&s(&[0, 3])).unwrap();
        assert_eq!((g.clone(), v), (PointSet::range(0, 3), 0));
        assert!(check_p(PMode::P1, &m, &g, v, &s(&[0, 3])).unwrap());
    }

    #[test]
    fn total_order_examples() {
        assert!(is_total_order(&SelfMap::succ(), OrderScope::All).unwrap());
        assert!(!is_total_order(&SelfMap::shift_by_two(), OrderScope::All).unwrap());
        assert!(!is_total_order(&SelfMap::bullet(), OrderScope::All).unwrap());
        assert!(is_total_order(&t(&[1, 2, 0]), OrderScope::All).unwrap());
        assert!(!is_total_order(&t(&[1, 0, 3, 2]), OrderScope::All).unwrap());
        assert!(is_total_order(&t(&[1, 0, 3, 2]), OrderScope::InfiniteOnly).unwrap());
    }

    #[test]
    fn solve_p2_examples() {
        let sol = solve_p2(&SelfMap::succ()).unwrap().unwrap();
        assert_eq!(sol.construction, Construction::FullOrbit { start: 0 });
        let (g, u) = sol.pair(&s(&[1, 4])).unwrap();
        assert_eq!(u, 4);
        assert!(s(&[1, 2, 3, 4]).is_subset(&g));
        assert!(solve_p2(&SelfMap::bullet()).unwrap().is_none());
        let sol = solve_p2(&fix0()).unwrap().unwrap();
        assert_eq!(sol.construction, Construction::OrbitSegments);
        for istar in small_subsets(8, 3) {
            let (g, u) = sol.pair(&istar).unwrap();
            assert!(check_p(PMode::P2, &fix0(), &g, u, &istar).unwrap(), "{istar}");
        }
    }

    #[test]
    fn full_orbit_examples() {
        assert_eq!(has_full_orbit(&SelfMap::succ()).unwrap(), Some(0));
        assert_eq!(has_full_orbit(&SelfMap::succ_conjugate()).unwrap(), Some(0));
        assert_eq!(has_full_orbit(&SelfMap::bullet()).unwrap(), None);
        assert_eq!(has_full_orbit(&t(&[2, 0, 1])).unwrap(), Some(0));
        assert_eq!(has_full_orbit(&t(&[1, 1, 1])).unwrap(), None);
        assert_eq!(has_full_orbit(&t(&[1, 2, 2])).unwrap(), Some(0));
    }

    #[test]
    fn subsets_enumeration() {
        assert_eq!(small_subsets(12, 3).len(), 13 + 78 + 286);
        assert_eq!(small_subsets(2, 3).len(), 7);
    }

    #[test]
    fn indivisibility_examples() {
        let succ = SelfMap::succ();
        let sol = solve_p2(&succ).unwrap().unwrap();
        let r = indivisibility_check(&succ, &sol, 8).unwrap();
        assert_eq!(r.survivors, vec![(0..=8).collect::<Vec<_>>()]);
        let rej = check_indivisibility_candidate(&succ, &sol, &[1, 0]).unwrap();
        assert_eq!(
            rej,
            Err(Rejection::LeavesSuperset {
                istar: s(&[0]),
                x: 0
            })
        );
        let conj = SelfMap::succ_conjugate();
        let sol = solve_p2(&conj).unwrap().unwrap();
        let r = indivisibility_check(&conj, &sol, 8).unwrap();
        assert_eq!(r.survivors, vec![(0..=8).collect::<Vec<_>>()]);
    }

    #[test]
    fn indivisibility_rejects_non_p2_solutions() {
        let succ = SelfMap::succ();
        let p1 = solve_p1(&succ).unwrap();
        // segments construction on succ also has its removal point in I*
        assert!(indivisibility_check(&succ, &p1, 4).is_ok());
        let m = t(&[1, 2, 0, 3]);
        let p1 = solve_p1(&m).unwrap();
        let bogus = PSolution { mode: PMode::P2, construction: Construction::FullOrbit { start: 0 }, map: m.clone() };
        assert!(matches!(indivisibility_check(&m, &bogus, 3), Err(PError::StructureViolation(_))));
        let r = indivisibility_check(&m, &p1, 3).unwrap();
        assert!(r.survivors.is_empty());
    }
}
