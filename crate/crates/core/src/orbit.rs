//! Forward orbits: tail/cycle decomposition, certified infinite orbits,
//! hitting times, orbit intersection and the sum-minimal meeting point ξ.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::selfmap::{DescribedNatMap, MapError, Point, PointSet, SelfMap};

/// Residue cycle of `r ↦ (r + c_r) mod m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueCycle {
    /// Residues in traversal order, starting from the smallest.
    pub residues: Vec<u64>,
    /// Sum of the shifts along one traversal; always a multiple of `m`.
    pub drift: i64,
}

/// Dynamics of the tail on residues mod `m`.
#[derive(Debug, Clone)]
pub struct ResidueDynamics {
    next: Vec<usize>,
    cycle_of: Vec<Option<usize>>,
    cycles: Vec<ResidueCycle>,
}

impl ResidueDynamics {
    pub fn new(d: &DescribedNatMap) -> Self {
        let m = d.modulus() as i64;
        let next: Vec<usize> = d
            .shifts()
            .iter()
            .enumerate()
            .map(|(r, &c)| (r as i64 + c).rem_euclid(m) as usize)
            .collect();
        let mut cycle_of = vec![None; next.len()];
        let mut cycles = Vec::new();
        // 0 = unseen, 1 = on current walk, 2 = done
        let mut state = vec![0u8; next.len()];
        for start in 0..next.len() {
            let mut walk = Vec::new();
            let mut r = start;
            while state[r] == 0 {
                state[r] = 1;
                walk.push(r);
                r = next[r];
            }
            if state[r] == 1 {
                let pos = walk.iter().position(|&w| w == r).unwrap();
                let mut residues: Vec<usize> = walk[pos..].to_vec();
                let k = residues.iter().enumerate().min_by_key(|(_, &v)| v).unwrap().0;
                residues.rotate_left(k);
                let drift = residues.iter().map(|&r| d.shifts()[r]).sum();
                for &r in &residues {
                    cycle_of[r] = Some(cycles.len());
                }
                cycles.push(ResidueCycle {
                    residues: residues.into_iter().map(|r| r as u64).collect(),
                    drift,
                });
            }
            for w in walk {
                state[w] = 2;
            }
        }
        ResidueDynamics {
            next,
            cycle_of,
            cycles,
        }
    }

    pub fn next(&self, r: u64) -> u64 {
        self.next[r as usize] as u64
    }

    pub fn cycles(&self) -> &[ResidueCycle] {
        &self.cycles
    }

    pub fn cycle_of(&self, r: u64) -> Option<&ResidueCycle> {
        self.cycle_of[r as usize].map(|i| &self.cycles[i])
    }

    pub fn positive_cycles(&self) -> impl Iterator<Item = &ResidueCycle> {
        self.cycles.iter().filter(|c| c.drift > 0)
    }

    fn on_positive_cycle(&self, r: u64) -> bool {
        self.cycle_of(r).is_some_and(|c| c.drift > 0)
    }
}

/// Evidence that an orbit of a described map is infinite: from `entry_height` on,
/// the orbit never re-enters the prefix and gains `drift` per pass around `residue_cycle`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DriftCertificate {
    pub entry_height: Point,
    pub residue_cycle: Vec<u64>,
    /// Height of the i-th point of a period relative to `entry_height`.
    pub offsets: Vec<i64>,
    pub drift: u64,
}

impl DriftCertificate {
    fn from_entry(d: &DescribedNatMap, entry: Point) -> Self {
        let m = d.modulus();
        let mut residues = Vec::new();
        let mut offsets = Vec::new();
        let mut s = 0i64;
        let start = entry % m;
        let mut r = start;
        loop {
            residues.push(r);
            offsets.push(s);
            s += d.shifts()[r as usize];
            r = (r as i64 + d.shifts()[r as usize]).rem_euclid(m as i64) as u64;
            if r == start {
                break;
            }
        }
        DriftCertificate {
            entry_height: entry,
            residue_cycle: residues,
            offsets,
            drift: s as u64,
        }
    }

    pub fn period(&self) -> usize {
        self.residue_cycle.len()
    }

    /// Replays one period and checks every claim of the certificate.
    pub fn verify(&self, d: &DescribedNatMap) -> bool {
        let p = self.period();
        if p == 0 || self.offsets.len() != p || self.drift == 0 || self.offsets[0] != 0 {
            return false;
        }
        let n = d.prefix_len() as i128;
        let m = d.modulus() as i128;
        let mut h = self.entry_height as i128;
        for i in 0..p {
            if h < n
                || h.rem_euclid(m) != self.residue_cycle[i] as i128
                || h != self.entry_height as i128 + self.offsets[i] as i128
            {
                return false;
            }
            h += d.shift_at(h as u64) as i128;
        }
        h == self.entry_height as i128 + self.drift as i128
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OrbitResult {
    Finite {
        tail: Vec<Point>,
        cycle: Vec<Point>,
    },
    Infinite {
        /// Points visited before `certificate.entry_height`.
        transient: Vec<Point>,
        certificate: DriftCertificate,
    },
}

impl OrbitResult {
    pub fn is_finite(&self) -> bool {
        matches!(self, OrbitResult::Finite { .. })
    }

    pub fn start(&self) -> Point {
        match self {
            OrbitResult::Finite { tail, cycle } => tail.first().copied().unwrap_or(cycle[0]),
            OrbitResult::Infinite {
                transient,
                certificate,
            } => transient.first().copied().unwrap_or(certificate.entry_height),
        }
    }

    /// `φ^k(x)` read off the decomposition.
    pub fn point_at(&self, k: u64) -> Point {
        match self {
            OrbitResult::Finite { tail, cycle } => {
                let u = tail.len() as u64;
                if k < u {
                    tail[k as usize]
                } else {
                    cycle[((k - u) % cycle.len() as u64) as usize]
                }
            }
            OrbitResult::Infinite {
                transient,
                certificate: c,
            } => {
                let t = transient.len() as u64;
                if k < t {
                    return transient[k as usize];
                }
                let j = k - t;
                let p = c.period() as u64;
                let h = c.entry_height as i128
                    + (j / p) as i128 * c.drift as i128
                    + c.offsets[(j % p) as usize] as i128;
                h as Point
            }
        }
    }

    /// Least `k` with `φ^k(x) = y`.
    pub fn hitting_time(&self, y: Point) -> Option<u64> {
        match self {
            OrbitResult::Finite { tail, cycle } => tail
                .iter()
                .chain(cycle.iter())
                .position(|&z| z == y)
                .map(|i| i as u64),
            OrbitResult::Infinite {
                transient,
                certificate: c,
            } => {
                if let Some(i) = transient.iter().position(|&z| z == y) {
                    return Some(i as u64);
                }
                let t = transient.len() as u64;
                let p = c.period() as u64;
                c.offsets.iter().enumerate().find_map(|(i, &s)| {
                    let base = c.entry_height as i128 + s as i128;
                    let diff = y as i128 - base;
                    (diff >= 0 && diff % c.drift as i128 == 0)
                        .then(|| t + i as u64 + (diff / c.drift as i128) as u64 * p)
                })
            }
        }
    }

    pub fn contains(&self, y: Point) -> bool {
        self.hitting_time(y).is_some()
    }

    /// Tail and cycle, or transient and the first period: every point of the orbit
    /// with a unique predecessor inside the orbit lies beyond this segment.
    pub fn segment(&self) -> Vec<Point> {
        match self {
            OrbitResult::Finite { tail, cycle } => tail.iter().chain(cycle).copied().collect(),
            OrbitResult::Infinite {
                transient,
                certificate,
            } => {
                let len = transient.len() as u64 + certificate.period() as u64;
                (0..len).map(|k| self.point_at(k)).collect()
            }
        }
    }
}

fn finite_orbit(table: &[Point], x: Point) -> OrbitResult {
    let mut seen = vec![usize::MAX; table.len()];
    let mut path = Vec::new();
    let mut y = x as usize;
    while seen[y] == usize::MAX {
        seen[y] = path.len();
        path.push(y as Point);
        y = table[y] as usize;
    }
    let cycle = path.split_off(seen[y]);
    OrbitResult::Finite { tail: path, cycle }
}

fn nat_orbit(d: &DescribedNatMap, dynamics: &ResidueDynamics, x: Point) -> Result<OrbitResult, MapError> {
    let m = d.modulus();
    let lock = d.prefix_len() + m * d.step_bound();
    let mut seen: HashMap<Point, usize> = HashMap::new();
    let mut path = Vec::new();
    let mut y = x;
    loop {
        if let Some(&i) = seen.get(&y) {
            let cycle = path.split_off(i);
            return Ok(OrbitResult::Finite { tail: path, cycle });
        }
        if y >= lock && dynamics.on_positive_cycle(y % m) {
            return Ok(OrbitResult::Infinite {
                transient: path,
                certificate: DriftCertificate::from_entry(d, y),
            });
        }
        seen.insert(y, path.len());
        path.push(y);
        y = d.eval(y)?;
    }
}

/// Orbit of `x`. Always terminates.
pub fn orbit(map: &SelfMap, x: Point) -> Result<OrbitResult, MapError> {
    map.check_point(x)?;
    match map {
        SelfMap::Finite(t) => Ok(finite_orbit(t.table(), x)),
        SelfMap::Nat(d) => nat_orbit(d, &ResidueDynamics::new(d), x),
    }
}

/// Computes many orbits of one map, reusing the residue analysis.
pub struct OrbitOracle<'a> {
    map: &'a SelfMap,
    dynamics: Option<ResidueDynamics>,
}

impl<'a> OrbitOracle<'a> {
    pub fn new(map: &'a SelfMap) -> Self {
        OrbitOracle {
            map,
            dynamics: map.as_nat().map(ResidueDynamics::new),
        }
    }

    pub fn map(&self) -> &SelfMap {
        self.map
    }

    pub fn orbit(&self, x: Point) -> Result<OrbitResult, MapError> {
        self.map.check_point(x)?;
        match (self.map, &self.dynamics) {
            (SelfMap::Nat(d), Some(dy)) => nat_orbit(d, dy, x),
            (SelfMap::Finite(t), _) => Ok(finite_orbit(t.table(), x)),
            _ => unreachable!(),
        }
    }
}

pub fn hitting_time(map: &SelfMap, x: Point, y: Point) -> Result<Option<u64>, MapError> {
    map.check_point(y)?;
    Ok(orbit(map, x)?.hitting_time(y))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct XiResult {
    pub point: Point,
    pub hitting_times: BTreeMap<Point, u64>,
}

impl XiResult {
    pub fn total(&self) -> u64 {
        self.hitting_times.values().sum()
    }
}

/// A common point of all orbits with its hitting times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommonPoint {
    pub point: Point,
    pub times: Vec<u64>,
}

impl CommonPoint {
    pub fn total(&self) -> u64 {
        self.times.iter().sum()
    }
}

/// Common points of the orbits of `starts` found in their segments (see
/// [`OrbitResult::segment`]), sorted by value. The sum-minimal common point is
/// always among them.
pub fn segment_common_points(map: &SelfMap, starts: &[Point]) -> Result<Vec<CommonPoint>, MapError> {
    let oracle = OrbitOracle::new(map);
    let orbits = starts
        .iter()
        .map(|&a| oracle.orbit(a))
        .collect::<Result<Vec<_>, _>>()?;
    if orbits.is_empty() {
        return Ok(Vec::new());
    }
    let finite = orbits[0].is_finite();
    if orbits.iter().any(|o| o.is_finite() != finite) {
        return Ok(Vec::new());
    }
    let candidates = PointSet::new(orbits.iter().flat_map(|o| o.segment()).collect());
    Ok(candidates
        .iter()
        .filter_map(|z| {
            let times = orbits
                .iter()
                .map(|o| o.hitting_time(z))
                .collect::<Option<Vec<_>>>()?;
            Some(CommonPoint { point: z, times })
        })
        .collect())
}

fn best_common(common: Vec<CommonPoint>) -> Option<CommonPoint> {
    common
        .into_iter()
        .min_by_key(|c| (c.total(), c.point))
}

/// Sum-minimal common point of the orbits of `istar`; ties go to the smallest point.
/// Absent when the orbits have no common point (or `istar` is empty).
pub fn xi(map: &SelfMap, istar: &PointSet) -> Result<Option<XiResult>, MapError> {
    let best = best_common(segment_common_points(map, istar.as_slice())?);
    Ok(best.map(|c| XiResult {
        point: c.point,
        hitting_times: istar.iter().zip(c.times).collect(),
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Meeting {
    pub point: Point,
    pub steps_a: u64,
    pub steps_b: u64,
}

pub fn orbits_intersect(map: &SelfMap, a: Point, b: Point) -> Result<Option<Meeting>, MapError> {
    let best = best_common(segment_common_points(map, &[a, b])?);
    Ok(best.map(|c| Meeting {
        point: c.point,
        steps_a: c.times[0],
        steps_b: c.times[1],
    }))
}

/// Whether the orbits of `istar` share a point.
pub fn in_d_phi(map: &SelfMap, istar: &PointSet) -> Result<bool, MapError> {
    Ok(!istar.is_empty() && !segment_common_points(map, istar.as_slice())?.is_empty())
}

/// Eventual arithmetic progression of an infinite orbit: the orbit eventually
/// visits residue `cycle_min` exactly at the heights `≡ class (mod drift)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProgressionSignature {
    pub cycle_min: u64,
    pub drift: u64,
    pub class: u64,
}

pub fn signature(o: &OrbitResult) -> Option<ProgressionSignature> {
    match o {
        OrbitResult::Finite { .. } => None,
        OrbitResult::Infinite { certificate: c, .. } => {
            let (i, &r0) = c
                .residue_cycle
                .iter()
                .enumerate()
                .min_by_key(|(_, &r)| r)
                .unwrap();
            let h = c.entry_height as i128 + c.offsets[i] as i128;
            Some(ProgressionSignature {
                cycle_min: r0,
                drift: c.drift,
                class: (h % c.drift as i128) as u64,
            })
        }
    }
}

/// Whether every two infinite orbits intersect.
pub fn check_p_tilde(map: &SelfMap) -> bool {
    match map {
        SelfMap::Finite(_) => true,
        SelfMap::Nat(d) => {
            let dy = ResidueDynamics::new(d);
            let pos: Vec<_> = dy.positive_cycles().collect();
            match pos.as_slice() {
                [] => true,
                [c] => c.drift as u64 == d.modulus(),
                _ => false,
            }
        }
    }
}

/// Whether the orbit of `x` misses only finitely many points of the domain.
pub fn is_cofinite_orbit(map: &SelfMap, x: Point) -> Result<bool, MapError> {
    let o = orbit(map, x)?;
    Ok(match (map, &o) {
        (SelfMap::Finite(_), _) => true,
        (SelfMap::Nat(_), OrbitResult::Finite { .. }) => false,
        (SelfMap::Nat(d), OrbitResult::Infinite { certificate, .. }) => {
            certificate.period() as u64 == d.modulus() && certificate.drift == d.modulus()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selfmap::tests::arb_map;
    use proptest::prelude::*;

    fn t(v: &[u64]) -> SelfMap {
        SelfMap::finite(v.to_vec()).unwrap()
    }

    fn walk(map: &SelfMap, x: Point, steps: usize) -> Vec<Point> {
        let mut v = vec![x];
        for _ in 0..steps {
            let y = map.eval(*v.last().unwrap()).unwrap();
            v.push(y);
        }
        v
    }

    #[test]
    fn orbit_examples() {
        assert_eq!(
            orbit(&t(&[1, 2, 0]), 0).unwrap(),
            OrbitResult::Finite {
                tail: vec![],
                cycle: vec![0, 1, 2]
            }
        );
        assert!(!orbit(&SelfMap::succ(), 0).unwrap().is_finite());
        let bullet = SelfMap::bullet();
        let o = orbit(&bullet, 0).unwrap();
        assert!(!o.is_finite());
        let missed: Vec<_> = (0..200).filter(|&y| !o.contains(y)).collect();
        assert_eq!(missed, vec![1]);
    }

    #[test]
    fn orbit_with_descending_tail_is_finite() {
        // 0 ↦ 2, n ↦ n - 1: 5 → 4 → 3 → 2 → 1 → 0 → 2
        let m = SelfMap::nat(vec![2], vec![-1]).unwrap();
        assert_eq!(
            orbit(&m, 5).unwrap(),
            OrbitResult::Finite {
                tail: vec![5, 4, 3],
                cycle: vec![2, 1, 0]
            }
        );
    }

    #[test]
    fn hitting_time_examples() {
        assert_eq!(hitting_time(&SelfMap::succ(), 2, 5).unwrap(), Some(3));
        assert_eq!(hitting_time(&SelfMap::succ(), 5, 2).unwrap(), None);
        assert_eq!(hitting_time(&t(&[1, 2, 0]), 0, 2).unwrap(), Some(2));
        assert_eq!(hitting_time(&SelfMap::succ_conjugate(), 0, 3).unwrap(), Some(4));
    }

    #[test]
    fn intersection_examples() {
        assert_eq!(
            orbits_intersect(&SelfMap::succ(), 0, 3).unwrap(),
            Some(Meeting {
                point: 3,
                steps_a: 3,
                steps_b: 0
            })
        );
        assert_eq!(orbits_intersect(&SelfMap::shift_by_two(), 0, 1).unwrap(), None);
        assert_eq!(orbits_intersect(&t(&[1, 0, 3, 2]), 0, 2).unwrap(), None);
    }

    #[test]
    fn xi_examples() {
        let r = xi(&SelfMap::succ(), &PointSet::new(vec![2, 5])).unwrap().unwrap();
        assert_eq!(r.point, 5);
        assert_eq!(r.hitting_times, BTreeMap::from([(2, 3), (5, 0)]));
        let r = xi(&t(&[1, 2, 0]), &PointSet::new(vec![0, 1])).unwrap().unwrap();
        assert_eq!(r.point, 1);
        assert_eq!(r.total(), 1);
        let r = xi(&SelfMap::bullet(), &PointSet::singleton(7)).unwrap().unwrap();
        assert_eq!((r.point, r.total()), (7, 0));
    }

    #[test]
    fn d_phi_examples() {
        assert!(!in_d_phi(&SelfMap::shift_by_two(), &PointSet::new(vec![0, 1])).unwrap());
        assert!(in_d_phi(&SelfMap::succ(), &PointSet::new(vec![0, 4, 9])).unwrap());
        let fix0 = SelfMap::nat(vec![0], vec![1]).unwrap();
        assert!(!in_d_phi(&fix0, &PointSet::new(vec![0, 1])).unwrap());
    }

    #[test]
    fn p_tilde_examples() {
        assert!(check_p_tilde(&t(&[1, 0, 3, 2])));
        assert!(check_p_tilde(&SelfMap::succ()));
        assert!(!check_p_tilde(&SelfMap::shift_by_two()));
        assert!(check_p_tilde(&SelfMap::succ_conjugate()));
        // two separate upward residue cycles
        assert!(!check_p_tilde(&SelfMap::nat(vec![], vec![2, 2]).unwrap()));
    }

    #[test]
    fn cofinite_examples() {
        assert!(is_cofinite_orbit(&SelfMap::succ(), 3).unwrap());
        assert!(is_cofinite_orbit(&SelfMap::succ_conjugate(), 0).unwrap());
        assert!(is_cofinite_orbit(&SelfMap::bullet(), 0).unwrap());
        assert!(!is_cofinite_orbit(&SelfMap::shift_by_two(), 0).unwrap());
    }

    proptest! {
        #[test]
        fn decomposition_links(m in arb_map(), x in 0u64..20) {
            let x = match m.domain_size() { Some(n) => x % n, None => x };
            let o = orbit(&m, x).unwrap();
            match &o {
                OrbitResult::Finite { tail, cycle } => {
                    let all: Vec<_> = tail.iter().chain(cycle).copied().collect();
                    prop_assert_eq!(PointSet::new(all.clone()).len(), all.len());
                    prop_assert_eq!(all[0], x);
                    for w in all.windows(2) {
                        prop_assert_eq!(m.eval(w[0]).unwrap(), w[1]);
                    }
                    prop_assert_eq!(m.eval(*cycle.last().unwrap()).unwrap(), cycle[0]);
                    if let Some(n) = m.domain_size() {
                        prop_assert!(all.len() as u64 <= n);
                    }
                }
                OrbitResult::Infinite { certificate, .. } => {
                    prop_assert!(certificate.verify(m.as_nat().unwrap()));
                    let w = walk(&m, x, 200);
                    prop_assert_eq!(PointSet::new(w.clone()).len(), w.len());
                    for (k, &y) in w.iter().enumerate() {
                        prop_assert_eq!(o.point_at(k as u64), y);
                    }
                }
            }
        }

        #[test]
        fn hitting_time_matches_walk(m in arb_map(), x in 0u64..12, y in 0u64..40) {
            let (x, y) = match m.domain_size() { Some(n) => (x % n, y % n), None => (x, y) };
            let w = walk(&m, x, 400);
            let brute = w.iter().position(|&z| z == y).map(|i| i as u64);
            let got = hitting_time(&m, x, y).unwrap();
            match brute {
                Some(_) => prop_assert_eq!(got, brute),
                None => prop_assert!(got.is_none_or(|k| k > 400)),
            }
        }

        #[test]
        fn infinite_intersection_matches_signatures(m in arb_map(), a in 0u64..25, b in 0u64..25) {
            if m.is_nat() {
                let (oa, ob) = (orbit(&m, a).unwrap(), orbit(&m, b).unwrap());
                if let (Some(sa), Some(sb)) = (signature(&oa), signature(&ob)) {
                    let met = orbits_intersect(&m, a, b).unwrap();
                    prop_assert_eq!(met.is_some(), sa == sb);
                }
            }
        }
    }
}
