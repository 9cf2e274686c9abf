//! Brute-force ground truth, random and named map corpora, and the theorem suite
//! that cross-checks the library against direct search.

use std::collections::HashSet;
use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{
    classify_intervals_1qi, classify_strict_intervals_1qi, classify_subsets_1qi, strict_select,
    ClassifyError, SubsetCase, SubsetClassification, SubsetSelector,
};
use crate::orbit::{self, OrbitOracle, OrbitResult, XiResult};
use crate::psolver::{self, Construction, OrderScope, PMode, PSolution};
use crate::quasi_invariance::{self, QuasiInvarianceReport, Scope};
use crate::selfmap::{FiniteTable, Interval, MapError, Point, PointSet, SelfMap};
use crate::structure::NatStructure;
use crate::superset;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("n = {0} is outside [1, 7]")]
    BoundTooLarge(u64),
    #[error("invalid suite configuration: {0}")]
    Config(String),
    #[error("unknown theorem id `{0}`")]
    UnknownTheorem(String),
    #[error("theorem `{0}` is not checked map by map")]
    NotReplayable(String),
}

// ---------------------------------------------------------------------------
// enumeration and brute force

/// All `n^n` self-maps of `{0, …, n-1}` in lexicographic order of their tables.
pub fn enumerate_finite_maps(n: u64) -> Result<FiniteMaps, OracleError> {
    if !(1..=7).contains(&n) {
        return Err(OracleError::BoundTooLarge(n));
    }
    Ok(FiniteMaps {
        next: Some(vec![0; n as usize]),
    })
}

pub struct FiniteMaps {
    next: Option<Vec<Point>>,
}

impl Iterator for FiniteMaps {
    type Item = SelfMap;

    fn next(&mut self) -> Option<SelfMap> {
        let cur = self.next.take()?;
        let n = cur.len() as Point;
        let mut succ = cur.clone();
        let mut i = succ.len();
        while i > 0 {
            i -= 1;
            if succ[i] + 1 < n {
                succ[i] += 1;
                self.next = Some(succ);
                break;
            }
            succ[i] = 0;
        }
        Some(SelfMap::finite(cur).expect("entries below n"))
    }
}

fn mask_set(mask: u32) -> PointSet {
    (0..32u32).filter(|i| mask >> i & 1 == 1).map(Point::from).collect()
}

fn image_mask(table: &[Point], mask: u32) -> u32 {
    (0..table.len())
        .filter(|&i| mask >> i & 1 == 1)
        .fold(0, |acc, i| acc | 1 << table[i])
}

/// For every nonempty subset `S` the least `a ∈ S` with `β(S \ {a}) ⊆ S`, or
/// `None` as soon as some subset has no such point.
pub fn brute_force_w_table(t: &FiniteTable) -> Option<Vec<(PointSet, Point)>> {
    let tab = t.table();
    let n = tab.len();
    let mut out = Vec::with_capacity((1 << n) - 1);
    for mask in 1u32..1 << n {
        let a = (0..n).find(|&a| mask >> a & 1 == 1 && image_mask(tab, mask & !(1 << a)) & !mask == 0)?;
        out.push((mask_set(mask), a as Point));
    }
    Some(out)
}

/// For every interval in `[0, window]` the least removable point, or `None` when
/// some interval has none. With `strict`, the removed point must also leave.
pub fn brute_force_interval_w(
    map: &SelfMap,
    window: Point,
    strict: bool,
) -> Result<Option<Vec<(Interval, Point)>>, MapError> {
    let beta = (0..=window).map(|x| map.eval(x)).collect::<Result<Vec<_>, _>>()?;
    let inside = |y: Point, a: Point, b: Point| a <= y && y <= b;
    let mut out = Vec::new();
    for a in 0..=window {
        for b in a..=window {
            let found = (a..=b).find(|&w| {
                (a..=b).all(|y| y == w || inside(beta[y as usize], a, b))
                    && (!strict || !inside(beta[w as usize], a, b))
            });
            match found {
                Some(w) => out.push((Interval::new(a, b)?, w)),
                None => return Ok(None),
            }
        }
    }
    Ok(Some(out))
}

/// Smallest removal set size found by trying every subset of `mask`.
fn min_removal_by_enumeration(tab: &[Point], mask: u32) -> u32 {
    let mut best = u32::MAX;
    let mut p = mask;
    loop {
        if image_mask(tab, mask & !p) & !mask == 0 {
            best = best.min(p.count_ones());
        }
        if p == 0 {
            break;
        }
        p = (p - 1) & mask;
    }
    best
}

// ---------------------------------------------------------------------------
// corpora

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomMapParams {
    pub max_prefix_len: u64,
    pub max_modulus: u64,
    pub max_shift: i64,
}

impl Default for RandomMapParams {
    fn default() -> Self {
        RandomMapParams {
            max_prefix_len: 6,
            max_modulus: 3,
            max_shift: 3,
        }
    }
}

/// Deterministic in `seed`. Prefix entries lean towards fixed points and
/// successors so that the structured families show up.
pub fn random_described_map(seed: u64, params: &RandomMapParams) -> SelfMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(0..=params.max_prefix_len);
    let m = rng.gen_range(1..=params.max_modulus.max(1));
    let s = params.max_shift.max(0);
    let narrow = rng.gen_bool(0.5);
    let lim = if narrow { s.min(1) } else { s };
    let mut shifts: Vec<i64> = (0..m).map(|_| rng.gen_range(-lim..=lim)).collect();
    for (r, c) in shifts.iter_mut().enumerate() {
        // least tail point of residue r
        let x_r = n + (r as u64 + m - n % m) % m;
        *c = (*c).max(-(x_r as i64));
    }
    let top = n + m + s as u64;
    let prefix = (0..n)
        .map(|x| match rng.gen_range(0..3) {
            0 => x,
            1 => x + 1,
            _ => rng.gen_range(0..=top),
        })
        .collect();
    SelfMap::nat(prefix, shifts).expect("shifts clamped to stay in ℕ")
}

/// `α ∘ succ ∘ α⁻¹` for a permutation `α` of `[0, k)`, identity above.
pub fn succ_conjugate_by(perm: &[Point]) -> SelfMap {
    let k = perm.len();
    let mut inv = vec![0; k];
    for (x, &y) in perm.iter().enumerate() {
        inv[y as usize] = x as Point;
    }
    let alpha = |x: Point| perm.get(x as usize).copied().unwrap_or(x);
    let prefix = (0..k).map(|x| alpha(inv[x] + 1)).collect();
    SelfMap::nat(prefix, vec![1]).expect("successor tail")
}

/// Maps the tools know by name.
pub fn named_maps() -> Vec<(&'static str, SelfMap)> {
    let nat = |p: &[Point], c: &[i64]| SelfMap::nat(p.to_vec(), c.to_vec()).unwrap();
    vec![
        ("succ", SelfMap::succ()),
        ("id", SelfMap::identity_nat()),
        ("shift2", SelfMap::shift_by_two()),
        ("bullet", SelfMap::bullet()),
        ("conjugate", SelfMap::succ_conjugate()),
        ("fix0", nat(&[0], &[1])),
        ("pivot", nat(&[1, 2, 3, 0], &[-1])),
        ("pivot25", nat(&[1, 2, 5], &[-1])),
        ("jump", nat(&[2], &[-1])),
        ("evens", nat(&[6, 4], &[0, 1])),
    ]
}

pub fn named_map(name: &str) -> Option<SelfMap> {
    named_maps().into_iter().find(|(n, _)| *n == name).map(|(_, m)| m)
}

/// Maps with `α(α(n)) = α(n) ≥ n`.
pub fn maxcond_maps() -> Vec<SelfMap> {
    let nat = |p: &[Point], c: &[i64]| SelfMap::nat(p.to_vec(), c.to_vec()).unwrap();
    vec![
        nat(&[6, 4], &[0, 1]),
        nat(&[], &[0, 1]),
        SelfMap::identity_nat(),
        nat(&[], &[0, 2, 1]),
        nat(&[3, 3, 3], &[0]),
        nat(&[2, 2, 2, 4, 4], &[0, 1]),
    ]
}

fn conjugate_corpus(seed: u64, count: usize) -> Vec<SelfMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    (0..count)
        .map(|_| {
            let k = rng.gen_range(2..=5);
            let mut perm: Vec<Point> = (0..k).collect();
            perm.shuffle(&mut rng);
            succ_conjugate_by(&perm)
        })
        .collect()
}

/// Named maps, seeded random maps and conjugates of the successor.
pub fn described_corpus(cfg: &SuiteConfig) -> Vec<SelfMap> {
    let params = RandomMapParams::default();
    let mut out: Vec<SelfMap> = named_maps().into_iter().map(|(_, m)| m).collect();
    out.extend((0..cfg.samples as u64).map(|i| random_described_map(cfg.seed.wrapping_add(i), &params)));
    out.extend(conjugate_corpus(cfg.seed, 10));
    out
}

pub fn finite_corpus(max_n: u64) -> Vec<SelfMap> {
    (1..=max_n)
        .flat_map(|n| enumerate_finite_maps(n).expect("bound checked"))
        .collect()
}

// ---------------------------------------------------------------------------
// subject under test

/// Deliberate single-line faults used to confirm the suite notices them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutant {
    /// Reports a cycle classification for a 4-cycle.
    ClassifierAcceptsFourCycle,
    /// ξ picks the common point with the largest sum of hitting times.
    XiMaximalSum,
    /// Internal quasi-invariance tests against `k + 1`.
    InternalQiOffByOne,
    /// Hitting times are one too large.
    HittingTimeOffByOne,
    /// Every map is reported to have pairwise intersecting infinite orbits.
    PTildeAlwaysTrue,
}

impl Mutant {
    pub const ALL: [Mutant; 5] = [
        Mutant::ClassifierAcceptsFourCycle,
        Mutant::XiMaximalSum,
        Mutant::InternalQiOffByOne,
        Mutant::HittingTimeOffByOne,
        Mutant::PTildeAlwaysTrue,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mutant::ClassifierAcceptsFourCycle => "classifier-accepts-four-cycle",
            Mutant::XiMaximalSum => "xi-maximal-sum",
            Mutant::InternalQiOffByOne => "internal-qi-off-by-one",
            Mutant::HittingTimeOffByOne => "hitting-time-off-by-one",
            Mutant::PTildeAlwaysTrue => "p-tilde-always-true",
        }
    }
}

impl fmt::Display for Mutant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mutant {
    type Err = OracleError;

    fn from_str(s: &str) -> Result<Self, OracleError> {
        Mutant::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| OracleError::Config(format!("unknown mutant `{s}`")))
    }
}

/// The library calls the suite exercises, optionally with one fault injected.
#[derive(Debug, Clone, Copy, Default)]
pub struct Subject {
    mutant: Option<Mutant>,
}

impl Subject {
    pub fn new(mutant: Option<Mutant>) -> Self {
        Subject { mutant }
    }

    fn is(&self, m: Mutant) -> bool {
        self.mutant == Some(m)
    }

    pub fn classify_subsets(
        &self,
        map: &SelfMap,
    ) -> Result<Option<(SubsetClassification, SubsetSelector)>, ClassifyError> {
        if self.is(Mutant::ClassifierAcceptsFourCycle) {
            if let SelfMap::Finite(t) = map {
                let moved: Vec<Point> = (0..t.size()).filter(|&x| t.table()[x as usize] != x).collect();
                let f = |x: Point| t.table()[x as usize];
                if let &[a, ..] = moved.as_slice() {
                    let orbit4 = [a, f(a), f(f(a)), f(f(f(a)))];
                    let distinct = orbit4.iter().collect::<HashSet<_>>().len() == 4;
                    if moved.len() == 4 && distinct && f(orbit4[3]) == a {
                        let cl = SubsetClassification {
                            case: SubsetCase::Cycle,
                            a,
                            b: f(a),
                            c: f(f(a)),
                        };
                        return Ok(Some((cl, SubsetSelector::new(cl))));
                    }
                }
            }
        }
        classify_subsets_1qi(map)
    }

    pub fn xi(&self, map: &SelfMap, istar: &PointSet) -> Result<Option<XiResult>, MapError> {
        if self.is(Mutant::XiMaximalSum) {
            let best = orbit::segment_common_points(map, istar.as_slice())?
                .into_iter()
                .max_by_key(|c| (c.total(), c.point));
            return Ok(best.map(|c| XiResult {
                point: c.point,
                hitting_times: istar.iter().zip(c.times).collect(),
            }));
        }
        orbit::xi(map, istar)
    }

    pub fn internal_qi(
        &self,
        map: &SelfMap,
        lambda: &PointSet,
        k: u64,
    ) -> Result<QuasiInvarianceReport, MapError> {
        let k = if self.is(Mutant::InternalQiOffByOne) { k + 1 } else { k };
        quasi_invariance::internal_quasi_invariant(map, lambda, k)
    }

    pub fn hitting_time(&self, map: &SelfMap, x: Point, y: Point) -> Result<Option<u64>, MapError> {
        let t = orbit::hitting_time(map, x, y)?;
        Ok(if self.is(Mutant::HittingTimeOffByOne) { t.map(|t| t + 1) } else { t })
    }

    pub fn check_p_tilde(&self, map: &SelfMap) -> bool {
        self.is(Mutant::PTildeAlwaysTrue) || orbit::check_p_tilde(map)
    }

    pub fn solve_p1(&self, map: &SelfMap) -> Option<PSolution> {
        self.check_p_tilde(map)
            .then(|| PSolution::new(PMode::P1, Construction::OrbitSegments, map.clone()))
    }
}

// ---------------------------------------------------------------------------
// reports

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub map: SelfMap,
    pub input: String,
    pub expected: String,
    pub got: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub id: String,
    pub anchor: String,
    pub checked: u64,
    pub failure_count: u64,
    /// The first few counterexamples in corpus order.
    pub failures: Vec<Counterexample>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub mutant: Option<Mutant>,
    pub theorems: Vec<TheoremReport>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.theorems.iter().all(|t| t.failures.is_empty())
    }

    pub fn failure_count(&self) -> u64 {
        self.theorems.iter().map(|t| t.failure_count).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }

    /// One line per theorem: `ok|FAIL id checked=… failures=…`.
    pub fn summary_lines(&self) -> Vec<String> {
        self.theorems
            .iter()
            .map(|t| {
                format!(
                    "{} {} checked={} failures={}",
                    if t.failures.is_empty() { "ok  " } else { "FAIL" },
                    t.id,
                    t.checked,
                    t.failure_count
                )
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteConfig {
    /// Theorem ids to run; `None` runs everything.
    pub theorems: Option<Vec<String>>,
    /// Largest finite domain enumerated exhaustively.
    pub max_n: u64,
    /// Window for checks on maps of ℕ.
    pub window: u64,
    /// Intervals are drawn from `[0, interval_window]`.
    pub interval_window: u64,
    /// Number of random described maps.
    pub samples: usize,
    pub seed: u64,
    pub mutant: Option<Mutant>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            theorems: None,
            max_n: 5,
            window: 200,
            interval_window: 30,
            samples: 100,
            seed: 1,
            mutant: None,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<(), OracleError> {
        if !(1..=7).contains(&self.max_n) {
            return Err(OracleError::Config(format!("max_n = {} is outside [1, 7]", self.max_n)));
        }
        if self.window < 20 {
            return Err(OracleError::Config(format!("window = {} is below 20", self.window)));
        }
        if self.interval_window == 0 || self.interval_window > 200 {
            return Err(OracleError::Config(format!(
                "interval_window = {} is outside [1, 200]",
                self.interval_window
            )));
        }
        if let Some(ids) = &self.theorems {
            for id in ids {
                if !CHECKS.iter().any(|c| c.id == id) {
                    return Err(OracleError::UnknownTheorem(id.clone()));
                }
            }
        }
        Ok(())
    }
}

const MAX_STORED: usize = 5;

#[derive(Default)]
struct Tally {
    checked: u64,
    failure_count: u64,
    failures: Vec<Counterexample>,
}

impl Tally {
    fn check(&mut self, ok: bool, map: &SelfMap, ce: impl FnOnce() -> (String, String, String)) {
        self.checked += 1;
        if !ok {
            self.fail(map, ce());
        }
    }

    fn fail(&mut self, map: &SelfMap, (input, expected, got): (String, String, String)) {
        self.failure_count += 1;
        if self.failures.len() < MAX_STORED {
            self.failures.push(Counterexample {
                map: map.clone(),
                input,
                expected,
                got,
            });
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.checked += other.checked;
        self.failure_count += other.failure_count;
        let room = MAX_STORED - self.failures.len();
        self.failures.extend(other.failures.into_iter().take(room));
        self
    }
}

/// Any library error aborts the current map's check and is reported as a failure.
struct CheckErr(String);

impl<E: std::error::Error> From<E> for CheckErr {
    fn from(e: E) -> Self {
        CheckErr(e.to_string())
    }
}

type CheckResult = Result<(), CheckErr>;

struct Ctx<'a> {
    cfg: &'a SuiteConfig,
    subject: Subject,
}

#[derive(Clone, Copy)]
enum Corpus {
    Finite { min_n: u64, max_n: u64 },
    Described,
    Both,
    MaxCond,
}

#[derive(Clone, Copy)]
enum Run {
    PerMap(Corpus, fn(&Ctx, &SelfMap, &mut Tally) -> CheckResult),
    Global(fn(&Ctx, &mut Tally)),
}

struct Check {
    id: &'static str,
    anchor: &'static str,
    run: Run,
}

fn s3<T: fmt::Debug, U: fmt::Debug, V: fmt::Debug>(i: T, e: U, g: V) -> (String, String, String) {
    (format!("{i:?}"), format!("{e:?}"), format!("{g:?}"))
}

fn t3(i: impl fmt::Display, e: impl fmt::Display, g: impl fmt::Display) -> (String, String, String) {
    (i.to_string(), e.to_string(), g.to_string())
}

/// Points sampled from the domain.
fn sample_points(map: &SelfMap) -> Vec<Point> {
    match map.domain_size() {
        Some(n) => (0..n).collect(),
        None => (0..=12).collect(),
    }
}

/// Nonempty sets of at most three points (finite domain: all of them).
fn sample_sets(map: &SelfMap, bound: Point) -> Vec<PointSet> {
    let b = map.domain_size().map_or(bound, |n| n - 1);
    psolver::small_subsets(b, 3)
}

/// Points of the orbit lying in `[0, w]`.
fn orbit_points_below(map: &SelfMap, o: &OrbitResult, w: Point) -> PointSet {
    match o {
        OrbitResult::Finite { tail, cycle } => tail.iter().chain(cycle).copied().filter(|&x| x <= w).collect(),
        OrbitResult::Infinite {
            transient,
            certificate,
        } => {
            let c = map.as_nat().map_or(1, |d| d.step_bound());
            let p = certificate.period() as u64;
            // after the transient each period climbs by at least one, dipping by at most p·c
            let steps = transient.len() as u64 + p * (w + p * c + 2);
            (0..steps).map(|k| o.point_at(k)).filter(|&x| x <= w).collect()
        }
    }
}

fn walk(map: &SelfMap, x: Point, steps: usize) -> Result<Vec<Point>, MapError> {
    let mut v = vec![x];
    for _ in 0..steps {
        let y = map.eval(*v.last().unwrap())?;
        v.push(y);
    }
    Ok(v)
}

/// Points whose fate is needed to decide global questions about the map.
fn structural_window(map: &SelfMap) -> Point {
    match map.domain_size() {
        Some(n) => n - 1,
        None => NatStructure::new(map).unwrap().window(),
    }
}

/// Every two infinite orbits meet, decided by comparing each infinite point of the
/// structural window with the first one.
fn oracle_p_tilde(map: &SelfMap) -> Result<bool, MapError> {
    let oracle = OrbitOracle::new(map);
    let mut first = None;
    for x in 0..=structural_window(map) {
        if oracle.orbit(x)?.is_finite() {
            continue;
        }
        match first {
            None => first = Some(x),
            Some(f) => {
                if orbit::orbits_intersect(map, f, x)?.is_none() {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Comparability of every pair of points in `[0, bound]` under orbit reachability.
fn oracle_total(map: &SelfMap, bound: Point, infinite_only: bool) -> Result<bool, MapError> {
    let oracle = OrbitOracle::new(map);
    let orbits = (0..=bound).map(|x| oracle.orbit(x)).collect::<Result<Vec<_>, _>>()?;
    let pts: Vec<usize> = (0..orbits.len())
        .filter(|&i| !infinite_only || !orbits[i].is_finite())
        .collect();
    for (k, &a) in pts.iter().enumerate() {
        for &b in &pts[k + 1..] {
            if !orbits[a].contains(b as Point) && !orbits[b].contains(a as Point) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn some_cofinite_orbit(map: &SelfMap) -> Result<bool, MapError> {
    for x in sample_points(map) {
        if orbit::is_cofinite_orbit(map, x)? {
            return Ok(true);
        }
    }
    Ok(false)
}

// ---------------------------------------------------------------------------
// checks

fn round_trip(_: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    let json = map.to_json();
    let back = crate::selfmap::parse_map(json.as_bytes())?;
    t.check(&back == map, map, || t3(&json, map, &back));
    Ok(())
}

fn iterate_composition(_: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    for x in sample_points(map).into_iter().take(6) {
        for (a, b) in [(0, 0), (1, 2), (7, 11), (23, 27), (50, 50)] {
            let lhs = map.iterate(x, a + b)?;
            let rhs = map.iterate(map.iterate(x, a)?, b)?;
            t.check(lhs == rhs, map, || s3((x, a, b), lhs, rhs));
        }
    }
    Ok(())
}

fn shift_rule(_: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    let d = map.as_nat().unwrap();
    let n = d.prefix_len();
    for x in 0..n + 10 * d.modulus() {
        let want = if x < n {
            d.prefix()[x as usize]
        } else {
            (x as i64 + d.shifts()[(x % d.modulus()) as usize]) as Point
        };
        let got = map.eval(x)?;
        t.check(want == got, map, || s3(x, want, got));
    }
    Ok(())
}

fn dichotomy(ctx: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    for x in sample_points(map) {
        let o = orbit::orbit(map, x)?;
        match (map.domain_size(), &o) {
            (Some(n), OrbitResult::Finite { tail, cycle }) => {
                let len = (tail.len() + cycle.len()) as u64;
                t.check(len <= n, map, || s3(x, format!("u+v <= {n}"), len));
            }
            (Some(_), OrbitResult::Infinite { .. }) => t.fail(map, s3(x, "finite", "infinite")),
            (None, OrbitResult::Infinite { .. }) => {
                let w = walk(map, x, ctx.cfg.window as usize - 1)?;
                let distinct = w.iter().collect::<HashSet<_>>().len();
                t.check(distinct == w.len(), map, || s3(x, w.len(), distinct));
            }
            (None, OrbitResult::Finite { .. }) => t.checked += 1,
        }
    }
    Ok(())
}

fn decomposition_links(_: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    for x in sample_points(map) {
        let o = orbit::orbit(map, x)?;
        let seg_len = o.segment().len() as u64 + 3;
        for k in 0..seg_len {
            let here = o.point_at(k);
            let next = map.eval(here)?;
            let said = o.point_at(k + 1);
            t.check(next == said, map, || s3((x, k), next, said));
        }
        if let OrbitResult::Infinite { certificate, .. } = &o {
            let d = map.as_nat().unwrap();
            t.check(certificate.verify(d), map, || s3(x, "valid certificate", certificate));
        }
    }
    Ok(())
}

fn hitting_times(ctx: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    for x in sample_points(map) {
        let w = walk(map, x, 30)?;
        for (k, &y) in w.iter().enumerate() {
            let first = w.iter().position(|&z| z == y).unwrap() as u64;
            if first != k as u64 {
                continue;
            }
            let got = ctx.subject.hitting_time(map, x, y)?;
            t.check(got == Some(first), map, || s3((x, y), Some(first), got));
        }
    }
    Ok(())
}

fn infinite_finite_disjoint(_: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    let oracle = OrbitOracle::new(map);
    let pts = sample_points(map);
    for &a in &pts {
        for &b in &pts {
            if !oracle.orbit(a)?.is_finite() && oracle.orbit(b)?.is_finite() {
                let m = orbit::orbits_intersect(map, a, b)?;
                t.check(m.is_none(), map, || s3((a, b), "no meeting point", m));
            }
        }
    }
    Ok(())
}

fn cofinite_meets_infinite(_: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    let oracle = OrbitOracle::new(map);
    let pts = sample_points(map);
    for &a in &pts {
        if !orbit::is_cofinite_orbit(map, a)? {
            continue;
        }
        for &b in &pts {
            if !oracle.orbit(b)?.is_finite() {
                let m = orbit::orbits_intersect(map, a, b)?;
                t.check(m.is_some(), map, || s3((a, b), "a meeting point", m));
            }
        }
    }
    Ok(())
}

fn xi_generates_intersection(ctx: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    let w = ctx.cfg.window;
    let oracle = OrbitOracle::new(map);
    let below = |x: Point| -> Result<PointSet, MapError> { Ok(orbit_points_below(map, &oracle.orbit(x)?, w)) };
    let base: Vec<PointSet> = (0..=8.min(structural_window(map)))
        .map(below)
        .collect::<Result<_, _>>()?;
    for set in sample_sets(map, 8) {
        let Some(x) = ctx.subject.xi(map, &set)? else {
            let d = orbit::in_d_phi(map, &set)?;
            t.check(!d, map, || t3(&set, "xi present", "xi absent"));
            continue;
        };
        let mut common = base[set.min().unwrap() as usize].clone();
        for a in set.iter() {
            common = common.difference(&common.difference(&base[a as usize]));
        }
        let gen = below(x.point)?;
        t.check(gen == common, map, || t3(format!("{set} xi={}", x.point), &common, &gen));
    }
    Ok(())
}

fn d_phi_class_purity(_: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    let oracle = OrbitOracle::new(map);
    for set in sample_sets(map, 8) {
        if orbit::in_d_phi(map, &set)? {
            let kinds: HashSet<bool> = set
                .iter()
                .map(|a| oracle.orbit(a).map(|o| o.is_finite()))
                .collect::<Result<_, _>>()?;
            t.check(kinds.len() == 1, map, || t3(&set, "one orbit class", "mixed classes"));
        }
    }
    Ok(())
}

fn pairwise_implies_joint(ctx: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    let oracle = OrbitOracle::new(map);
    for set in sample_sets(map, 8) {
        let mut all_inf = true;
        for a in set.iter() {
            all_inf &= !oracle.orbit(a)?.is_finite();
        }
        if !all_inf {
            continue;
        }
        let pts: Vec<Point> = set.iter().collect();
        let mut pairwise = true;
        for (i, &a) in pts.iter().enumerate() {
            for &b in &pts[i + 1..] {
                pairwise &= orbit::orbits_intersect(map, a, b)?.is_some();
            }
        }
        if pairwise {
            let x = ctx.subject.xi(map, &set)?;
            let ok = match &x {
                Some(x) => !oracle.orbit(x.point)?.is_finite() && set.iter().all(|a| x.hitting_times.contains_key(&a)),
                None => false,
            };
            t.check(ok, map, || t3(&set, "infinite common point", format!("{:?}", x.map(|x| x.point))));
        }
    }
    Ok(())
}

fn cofinite_implies_p_tilde(ctx: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    if map.is_nat() && some_cofinite_orbit(map)? {
        let p = ctx.subject.check_p_tilde(map);
        t.check(p, map, || t3("cofinite orbit", true, p));
    }
    Ok(())
}

fn p_tilde_oracle(ctx: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    let want = oracle_p_tilde(map)?;
    let got = ctx.subject.check_p_tilde(map);
    t.check(want == got, map, || t3("pairwise meeting of infinite orbits", want, got));
    Ok(())
}

fn full_orbit_cofinite(_: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    if psolver::has_full_orbit(map)?.is_none() {
        return Ok(());
    }
    let oracle = OrbitOracle::new(map);
    for x in sample_points(map) {
        let o = oracle.orbit(x)?;
        let miss = |w: Point| w + 1 - orbit_points_below(map, &o, w).len() as u64;
        let (m1, m2) = (miss(100), miss(200));
        t.check(m1 == m2, map, || s3(x, m1, m2));
    }
    Ok(())
}

fn qi_sets(map: &SelfMap) -> Vec<PointSet> {
    match map.domain_size() {
        Some(n) => (1u32..1 << n).map(mask_set).collect(),
        None => psolver::small_subsets(6, 3),
    }
}

fn qi_monotone(ctx: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    for l in qi_sets(map) {
        for k in 0..3 {
            let a = ctx.subject.internal_qi(map, &l, k)?.holds;
            let b = ctx.subject.internal_qi(map, &l, k + 1)?.holds;
            t.check(!a || b, map, || t3(format!("{l} k={k}"), "holds at k+1", b));
            let a = quasi_invariance::external_quasi_invariant(map, &l, k)?.holds;
            let b = quasi_invariance::external_quasi_invariant(map, &l, k + 1)?.holds;
            t.check(!a || b, map, || t3(format!("{l} k={k} external"), "holds at k+1", b));
        }
    }
    Ok(())
}

fn qi_zero(ctx: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    for l in qi_sets(map) {
        let inv = quasi_invariance::is_invariant(map, &l)?;
        let i = ctx.subject.internal_qi(map, &l, 0)?.holds;
        let e = quasi_invariance::external_quasi_invariant(map, &l, 0)?.holds;
        t.check(inv == i && i == e, map, || t3(&l, inv, format!("internal={i} external={e}")));
    }
    Ok(())
}

fn qi_enumeration(ctx: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    let SelfMap::Finite(ft) = map else { return Ok(()) };
    let tab = ft.table();
    for mask in 1u32..1 << tab.len() {
        let l = mask_set(mask);
        let need = min_removal_by_enumeration(tab, mask);
        let excess = (image_mask(tab, mask) & !mask).count_ones();
        for k in 0..=l.len() as u64 {
            let i = ctx.subject.internal_qi(map, &l, k)?.holds;
            t.check(i == (need as u64 <= k), map, || t3(format!("{l} k={k} internal"), need as u64 <= k, i));
            let e = quasi_invariance::external_quasi_invariant(map, &l, k)?.holds;
            t.check(e == (excess as u64 <= k), map, || t3(format!("{l} k={k} external"), excess as u64 <= k, e));
        }
    }
    Ok(())
}

fn identity_decision(_: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    match map.domain_size() {
        Some(n) => {
            for k in 1..=n {
                let got = quasi_invariance::identity_decision(map, Scope::Subsets, k)?;
                // every set of size at least k invariant, by direct enumeration
                let SelfMap::Finite(ft) = map else { unreachable!() };
                let want = (1u32..1 << n)
                    .filter(|m| m.count_ones() as u64 >= k)
                    .all(|m| image_mask(ft.table(), m) & !m == 0);
                t.check(got == want, map, || t3(format!("subsets k={k}"), want, got));
            }
        }
        None => {
            for k in 1..=3 {
                let got = quasi_invariance::identity_decision(map, Scope::Intervals, k)?;
                let want = (0..=30u64).all(|a| (a + k - 1..=30).all(|b| (a..=b).all(|x| map.eval(x).is_ok_and(|y| a <= y && y <= b))));
                t.check(got == want, map, || t3(format!("intervals k={k}"), want, got));
            }
        }
    }
    Ok(())
}

fn subsets_sound(map: &SelfMap, sel: &SubsetSelector, sets: &[PointSet], t: &mut Tally) -> CheckResult {
    for s in sets {
        let w = sel.select(s);
        let ok = match w {
            Some(w) => s.contains(w) && map.image(&s.without(w))?.is_subset(s),
            None => false,
        };
        t.check(ok, map, || t3(s, "removal keeps the image inside", format!("w = {w:?}")));
    }
    Ok(())
}

fn subsets_vs_brute_force(ctx: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    let SelfMap::Finite(ft) = map else { return Ok(()) };
    let got = ctx.subject.classify_subsets(map)?;
    let brute = brute_force_w_table(ft);
    t.check(got.is_some() == brute.is_some(), map, || {
        t3("presence", brute.is_some(), got.is_some())
    });
    if let Some((_, sel)) = got {
        let sets: Vec<PointSet> = (1u32..1 << ft.size()).map(mask_set).collect();
        subsets_sound(map, &sel, &sets, t)?;
    }
    Ok(())
}

fn subsets_sound_on_n(ctx: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    if let Some((_, sel)) = ctx.subject.classify_subsets(map)? {
        let sets: Vec<PointSet> = (1u32..1 << 7).map(mask_set).collect();
        subsets_sound(map, &sel, &sets, t)?;
    } else {
        t.checked += 1;
    }
    Ok(())
}

fn intervals_vs_brute_force(ctx: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    let iw = ctx.cfg.interval_window;
    let got = classify_intervals_1qi(map)?;
    let brute = brute_force_interval_w(map, iw, false)?;
    t.check(got.is_some() == brute.is_some(), map, || {
        t3(format!("intervals of [0,{iw}]"), brute.is_some(), got.is_some())
    });
    let Some(cl) = got else { return Ok(()) };
    for a in 0..=iw {
        for b in a..=iw {
            let iv = Interval::new(a, b)?;
            let w = catch_unwind(AssertUnwindSafe(|| cl.select(iv)));
            let ok = match w {
                Ok(w) => iv.contains(w) && map.image(&iv.to_set().without(w))?.is_subset(&iv.to_set()),
                Err(_) => false,
            };
            t.check(ok, map, || t3(iv, "removal keeps the image inside", format!("{:?}", w.ok())));
        }
    }
    Ok(())
}

fn strict_vs_brute_force(ctx: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    let iw = ctx.cfg.interval_window;
    let got = classify_strict_intervals_1qi(map)?;
    let brute = brute_force_interval_w(map, iw, true)?;
    t.check(got.is_some() == brute.is_some(), map, || {
        t3(format!("intervals of [0,{iw}]"), brute.is_some(), format!("{got:?}"))
    });
    let Some(form) = got else { return Ok(()) };
    for a in 0..=iw {
        for b in a..=iw {
            let iv = Interval::new(a, b)?;
            let w = strict_select(form, iv);
            let s = iv.to_set();
            let ok = iv.contains(w) && map.image(&s.without(w))?.is_subset(&s) && !iv.contains(map.eval(w)?);
            t.check(ok, map, || t3(iv, "removed point leaves", w));
        }
    }
    Ok(())
}

fn orbit_union_closed(_: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    let SelfMap::Finite(ft) = map else { return Ok(()) };
    let n = ft.size();
    let none = PointSet::empty();
    for mask in 1u32..1 << n {
        let istar = mask_set(mask);
        let g = superset::build_g_orbit_union(map, &istar, &none)?;
        let ok = superset::check_superset_closure(map, &istar, &g)?;
        t.check(ok, map, || t3(&istar, "closed superset", &g));
        if image_mask(ft.table(), mask) & !mask == 0 {
            // closed sets are their own orbit unions
            let back = superset::build_g_orbit_union(map, &istar, &istar)?;
            t.check(back == istar, map, || t3(format!("closed {istar}"), &istar, &back));
        }
    }
    Ok(())
}

fn maxcond_sound(_: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    let Some(p) = superset::analyze_maxcond(map)? else {
        t.fail(map, t3("profile", "present", "absent"));
        return Ok(());
    };
    let mut hs = vec![PointSet::empty()];
    hs.extend(psolver::small_subsets(8, 2));
    for istar in psolver::small_subsets(8, 2) {
        let jmax = istar.iter().map(|a| p.j(a)).max().unwrap();
        let images: PointSet = istar.iter().map(|a| p.alpha(a)).collect();
        for h in &hs {
            if h.iter().any(|x| p.j(x) > jmax) {
                continue;
            }
            let g = superset::build_g_maxcond(&p, &istar, h)?;
            let closed = superset::check_superset_closure(map, &istar, &g)?;
            let top = g.max().unwrap();
            t.check(closed && images.contains(top), map, || {
                t3(format!("I*={istar} H={h}"), "closed with max in α(I*)", format!("{g} closed={closed}"))
            });
        }
    }
    Ok(())
}

fn interval_bounds(_: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    let Some(p) = superset::analyze_maxcond(map)? else { return Ok(()) };
    for istar in psolver::small_subsets(8, 2) {
        let b = match superset::interval_superset_bounds(&p, map, &istar) {
            Ok(b) => b,
            Err(superset::SupersetError::ProfileInvalid(_)) => return Ok(()),
            Err(e) => return Err(e.into()),
        };
        let images: PointSet = istar.iter().map(|a| p.alpha(a)).collect();
        for u in b.u_star..=b.u_max {
            let g = PointSet::range(u, b.v);
            let ok = superset::check_superset_closure(map, &istar, &g)? && images.contains(b.v);
            t.check(ok, map, || t3(format!("{istar} u={u}"), "closed interval", &g));
        }
        if b.u_star > 0 {
            let g = PointSet::range(b.u_star - 1, b.v);
            let ok = superset::check_superset_closure(map, &istar, &g)?;
            t.check(!ok, map, || t3(format!("{istar} u={}", b.u_star - 1), "not closed", &g));
        }
    }
    Ok(())
}

fn p1_vs_p_tilde(ctx: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    let want = oracle_p_tilde(map)?;
    let got = ctx.subject.solve_p1(map).is_some();
    t.check(want == got, map, || t3("solve P1", want, got));
    Ok(())
}

fn solutions(ctx: &Ctx, map: &SelfMap) -> Result<Vec<PSolution>, MapError> {
    let mut out = Vec::new();
    out.extend(ctx.subject.solve_p1(map));
    out.extend(psolver::solve_p2(map)?);
    Ok(out)
}

fn solutions_pass_check(ctx: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    for sol in solutions(ctx, map)? {
        for istar in sample_sets(map, 12) {
            match sol.pair(&istar) {
                Ok((g, u)) => {
                    let ok = psolver::check_p(sol.mode, map, &g, u, &istar)?;
                    t.check(ok, map, || t3(format!("{:?} {istar}", sol.mode), "check passes", format!("G={g} u={u}")));
                }
                Err(e) => t.fail(map, t3(format!("{:?} {istar}", sol.mode), "a solution", e)),
            }
        }
    }
    Ok(())
}

fn p2_vs_total(_: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    let want = oracle_total(map, structural_window(map), true)?;
    let got = psolver::solve_p2(map)?.is_some();
    t.check(want == got, map, || t3("solve P2", want, got));
    Ok(())
}

fn full_orbit_triple(ctx: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    let got = psolver::has_full_orbit(map)?;
    let want = some_cofinite_orbit(map)? && oracle_total(map, structural_window(map), false)?;
    t.check(want == got.is_some(), map, || t3("full orbit", want, format!("{got:?}")));
    if let Some(a) = got {
        let w = ctx.cfg.window.min(map.domain_size().map_or(u64::MAX, |n| n - 1));
        let covered = orbit_points_below(map, &orbit::orbit(map, a)?, w);
        t.check(covered.len() as u64 == w + 1, map, || t3(a, format!("covers [0,{w}]"), covered.len()));
    }
    Ok(())
}

fn p1_structure(ctx: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    let Some(sol) = ctx.subject.solve_p1(map) else { return Ok(()) };
    for istar in sample_sets(map, 8) {
        let (g, v) = match sol.pair(&istar) {
            Ok(p) => p,
            Err(e) => {
                t.fail(map, t3(&istar, "a solution", e));
                continue;
            }
        };
        let d = psolver::decompose_hhh(map, &g, v);
        let passes = psolver::check_p(PMode::P1, map, &g, v, &istar)?;
        t.check(d.is_ok() && passes, map, || t3(format!("{istar} G={g} v={v}"), "decomposable", format!("{d:?}")));
    }
    Ok(())
}

fn removal_point_escapes(ctx: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    let oracle = OrbitOracle::new(map);
    for sol in solutions(ctx, map)? {
        for istar in sample_sets(map, 8) {
            let Ok((g, u)) = sol.pair(&istar) else { continue };
            if oracle.orbit(u)?.is_finite() {
                continue;
            }
            let next = map.eval(u)?;
            t.check(!g.contains(next) && !istar.contains(next), map, || {
                t3(format!("{:?} {istar} u={u}", sol.mode), "φ(u) outside G", next)
            });
        }
    }
    Ok(())
}

fn all_orbits_infinite(map: &SelfMap) -> Result<bool, MapError> {
    match NatStructure::new(map) {
        Some(mut st) => Ok(st.has_infinite_orbits() && !st.has_finite_orbits()?),
        None => Ok(false),
    }
}

fn chain_endpoint(_: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    if !all_orbits_infinite(map)? {
        return Ok(());
    }
    let Some(sol) = psolver::solve_p2(map)? else { return Ok(()) };
    for b in 0..6 {
        let w = walk(map, b, 6)?;
        for m in 0..=6 {
            let chain: PointSet = w[..=m].iter().copied().collect();
            let u = sol.u(&chain);
            t.check(u.as_ref().ok() == Some(&w[m]), map, || t3(&chain, w[m], format!("{u:?}")));
        }
    }
    Ok(())
}

fn seven_way(_: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    if !all_orbits_infinite(map)? {
        return Ok(());
    }
    let p2 = psolver::solve_p2(map)?.is_some();
    let total = psolver::is_total_order(map, OrderScope::All)?;
    let pairs = oracle_total(map, 20, false)?;
    t.check(p2 == total && total == pairs, map, || {
        t3("P2 / total order / pairs in [0,20]", "all equal", format!("{p2} / {total} / {pairs}"))
    });
    Ok(())
}

fn d_phi_implies_p2(_: &Ctx, map: &SelfMap, t: &mut Tally) -> CheckResult {
    for set in sample_sets(map, 8) {
        match orbit::xi(map, &set)? {
            Some(x) if set.contains(x.point) => {}
            _ => return Ok(()),
        }
    }
    let p2 = psolver::solve_p2(map)?.is_some();
    t.check(p2, map, || t3("every sampled set contains its meeting point", true, p2));
    Ok(())
}

fn enumeration_complete(ctx: &Ctx, t: &mut Tally) {
    for n in 1..=ctx.cfg.max_n {
        let mut seen = HashSet::new();
        let mut count = 0u64;
        for m in enumerate_finite_maps(n).expect("bound checked") {
            count += 1;
            if let SelfMap::Finite(ft) = &m {
                seen.insert(ft.table().to_vec());
            }
        }
        let want = n.pow(n as u32);
        t.check(count == want && seen.len() as u64 == want, &SelfMap::finite(vec![0; n as usize]).unwrap(), || {
            t3(format!("n={n}"), want, format!("{count} maps, {} distinct", seen.len()))
        });
    }
}

fn random_maps_deterministic(ctx: &Ctx, t: &mut Tally) {
    let params = RandomMapParams::default();
    for i in 0..ctx.cfg.samples as u64 {
        let a = random_described_map(ctx.cfg.seed.wrapping_add(i), &params);
        let b = random_described_map(ctx.cfg.seed.wrapping_add(i), &params);
        let evals = (0..50).all(|x| a.eval(x).is_ok());
        t.check(a == b && evals, &a, || t3(format!("seed {}", ctx.cfg.seed.wrapping_add(i)), &a, &b));
    }
}

const F: Corpus = Corpus::Finite { min_n: 1, max_n: 7 };
const D: Corpus = Corpus::Described;
const B: Corpus = Corpus::Both;

static CHECKS: &[Check] = &[
    Check { id: "classifier.intervals-vs-brute-force", anchor: "interval classification exists iff every interval admits a removable point", run: Run::PerMap(D, intervals_vs_brute_force) },
    Check { id: "classifier.strict-vs-brute-force", anchor: "strict interval classification exists iff every interval admits a removable point that leaves", run: Run::PerMap(D, strict_vs_brute_force) },
    Check { id: "classifier.subsets-sound-on-naturals", anchor: "subset selector keeps images inside on subsets of [0,6]", run: Run::PerMap(D, subsets_sound_on_n) },
    Check { id: "classifier.subsets-vs-brute-force", anchor: "subset classification exists iff a w table exists; selector is sound", run: Run::PerMap(Corpus::Finite { min_n: 3, max_n: 5 }, subsets_vs_brute_force) },
    Check { id: "oracle.enumeration-complete", anchor: "n^n finite maps, no duplicates", run: Run::Global(enumeration_complete) },
    Check { id: "oracle.random-maps-deterministic", anchor: "random described maps are valid and reproducible", run: Run::Global(random_maps_deterministic) },
    Check { id: "orbit.cofinite-implies-p-tilde", anchor: "a cofinite orbit forces infinite orbits to meet pairwise", run: Run::PerMap(D, cofinite_implies_p_tilde) },
    Check { id: "orbit.cofinite-meets-infinite", anchor: "a cofinite orbit meets every infinite orbit", run: Run::PerMap(B, cofinite_meets_infinite) },
    Check { id: "orbit.d-phi-class-purity", anchor: "orbits sharing a point are all finite or all infinite", run: Run::PerMap(B, d_phi_class_purity) },
    Check { id: "orbit.decomposition-links", anchor: "orbit decomposition follows the map", run: Run::PerMap(B, decomposition_links) },
    Check { id: "orbit.dichotomy", anchor: "orbits are eventually periodic or injective", run: Run::PerMap(B, dichotomy) },
    Check { id: "orbit.full-orbit-cofinite", anchor: "with a full orbit every orbit is cofinite", run: Run::PerMap(D, full_orbit_cofinite) },
    Check { id: "orbit.hitting-time", anchor: "hitting time is the first visit", run: Run::PerMap(B, hitting_times) },
    Check { id: "orbit.infinite-finite-disjoint", anchor: "infinite and finite orbits never meet", run: Run::PerMap(B, infinite_finite_disjoint) },
    Check { id: "orbit.p-tilde-oracle", anchor: "residue test for pairwise meeting agrees with direct comparison", run: Run::PerMap(B, p_tilde_oracle) },
    Check { id: "orbit.pairwise-implies-joint", anchor: "pairwise meeting infinite orbits meet jointly in an infinite orbit", run: Run::PerMap(B, pairwise_implies_joint) },
    Check { id: "orbit.xi-generates-intersection", anchor: "the common part of the orbits is the orbit of xi", run: Run::PerMap(B, xi_generates_intersection) },
    Check { id: "psolver.chain-endpoint", anchor: "on a chain the removal point is its last element", run: Run::PerMap(D, chain_endpoint) },
    Check { id: "psolver.d-phi-implies-p2", anchor: "sets containing their meeting point give a P2 solution", run: Run::PerMap(D, d_phi_implies_p2) },
    Check { id: "psolver.full-orbit-triple", anchor: "full orbit iff a cofinite orbit and a total order", run: Run::PerMap(D, full_orbit_triple) },
    Check { id: "psolver.p1-structure", anchor: "P1 solutions decompose into orbit pieces", run: Run::PerMap(D, p1_structure) },
    Check { id: "psolver.p1-vs-p-tilde", anchor: "P1 solvable iff infinite orbits meet pairwise", run: Run::PerMap(D, p1_vs_p_tilde) },
    Check { id: "psolver.p2-vs-total-order", anchor: "P2 solvable iff the infinite points are totally ordered", run: Run::PerMap(D, p2_vs_total) },
    Check { id: "psolver.removal-point-escapes", anchor: "the removal point of an infinite orbit is mapped out of G", run: Run::PerMap(D, removal_point_escapes) },
    Check { id: "psolver.seven-way", anchor: "with only infinite orbits, P2, total order and pairwise comparability agree", run: Run::PerMap(D, seven_way) },
    Check { id: "psolver.solutions-pass-check", anchor: "every produced solution satisfies its predicate", run: Run::PerMap(D, solutions_pass_check) },
    Check { id: "qi.enumeration-agreement", anchor: "quasi-invariance verdicts agree with enumeration of removal sets", run: Run::PerMap(F, qi_enumeration) },
    Check { id: "qi.identity-decision", anchor: "all large sets invariant exactly for the identity", run: Run::PerMap(B, identity_decision) },
    Check { id: "qi.monotone", anchor: "quasi-invariance is monotone in k", run: Run::PerMap(B, qi_monotone) },
    Check { id: "qi.zero-is-invariance", anchor: "0-quasi-invariance is invariance", run: Run::PerMap(B, qi_zero) },
    Check { id: "selfmap.iterate-composition", anchor: "iterates compose", run: Run::PerMap(B, iterate_composition) },
    Check { id: "selfmap.round-trip", anchor: "maps survive serialization", run: Run::PerMap(B, round_trip) },
    Check { id: "selfmap.shift-rule", anchor: "evaluation follows prefix and residue shifts", run: Run::PerMap(D, shift_rule) },
    Check { id: "superset.interval-bounds", anchor: "interval supersets exist exactly from u* up to min I*", run: Run::PerMap(Corpus::MaxCond, interval_bounds) },
    Check { id: "superset.maxcond-sound", anchor: "pairs {a, α(a)} over I* ∪ H form a closed set with max in α(I*)", run: Run::PerMap(Corpus::MaxCond, maxcond_sound) },
    Check { id: "superset.orbit-union-closed", anchor: "orbit unions are closed and closed sets are orbit unions", run: Run::PerMap(F, orbit_union_closed) },
];

/// Ids of every registered check, sorted.
pub fn theorem_ids() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.id).collect()
}

fn corpus_for(kind: Corpus, cfg: &SuiteConfig, finite: &[SelfMap], described: &[SelfMap]) -> Vec<SelfMap> {
    match kind {
        Corpus::Finite { min_n, max_n } => finite
            .iter()
            .filter(|m| m.domain_size().is_some_and(|n| n >= min_n && n <= max_n.min(cfg.max_n)))
            .cloned()
            .collect(),
        Corpus::Described => described.to_vec(),
        Corpus::Both => finite.iter().chain(described).cloned().collect(),
        Corpus::MaxCond => maxcond_maps(),
    }
}

fn run_on(check: &Check, ctx: &Ctx, maps: &[SelfMap]) -> Tally {
    match check.run {
        Run::Global(f) => {
            let mut t = Tally::default();
            f(ctx, &mut t);
            t
        }
        Run::PerMap(_, f) => maps
            .par_iter()
            .map(|m| {
                let mut t = Tally::default();
                let r = catch_unwind(AssertUnwindSafe(|| f(ctx, m, &mut t)));
                match r {
                    Ok(Ok(())) => {}
                    Ok(Err(CheckErr(e))) => t.fail(m, t3("-", "no error", format!("error: {e}"))),
                    Err(_) => t.fail(m, t3("-", "no panic", "panic")),
                }
                t
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(Tally::default(), Tally::merge),
    }
}

fn report(check: &Check, t: Tally) -> TheoremReport {
    TheoremReport {
        id: check.id.into(),
        anchor: check.anchor.into(),
        checked: t.checked,
        failure_count: t.failure_count,
        failures: t.failures,
    }
}

fn selected(cfg: &SuiteConfig) -> Vec<&'static Check> {
    CHECKS
        .iter()
        .filter(|c| cfg.theorems.as_ref().is_none_or(|ids| ids.iter().any(|i| i == c.id)))
        .collect()
}

/// Runs the selected checks in parallel; the report is sorted by theorem id.
pub fn run_theorem_suite(cfg: &SuiteConfig) -> Result<SuiteReport, OracleError> {
    cfg.validate()?;
    let checks = selected(cfg);
    let ctx = Ctx {
        cfg,
        subject: Subject::new(cfg.mutant),
    };
    let needs = |pred: fn(Corpus) -> bool| checks.iter().any(|c| matches!(c.run, Run::PerMap(k, _) if pred(k)));
    let finite = if needs(|k| matches!(k, Corpus::Finite { .. } | Corpus::Both)) {
        finite_corpus(cfg.max_n)
    } else {
        Vec::new()
    };
    let described = if needs(|k| matches!(k, Corpus::Described | Corpus::Both)) {
        described_corpus(cfg)
    } else {
        Vec::new()
    };
    let mut theorems: Vec<TheoremReport> = checks
        .par_iter()
        .map(|c| {
            let maps = match c.run {
                Run::PerMap(k, _) => corpus_for(k, cfg, &finite, &described),
                Run::Global(_) => Vec::new(),
            };
            report(c, run_on(c, &ctx, &maps))
        })
        .collect();
    theorems.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(SuiteReport {
        seed: cfg.seed,
        mutant: cfg.mutant,
        theorems,
    })
}

/// Re-runs one check on one map, e.g. a stored counterexample.
pub fn replay(id: &str, map: &SelfMap, cfg: &SuiteConfig) -> Result<TheoremReport, OracleError> {
    let check = CHECKS
        .iter()
        .find(|c| c.id == id)
        .ok_or_else(|| OracleError::UnknownTheorem(id.into()))?;
    if matches!(check.run, Run::Global(_)) {
        return Err(OracleError::NotReplayable(id.into()));
    }
    let ctx = Ctx {
        cfg,
        subject: Subject::new(cfg.mutant),
    };
    Ok(report(check, run_on(check, &ctx, std::slice::from_ref(map))))
}
