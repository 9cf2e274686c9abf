//! Maps for which every finite subset (or every interval of ℕ) becomes invariant
//! after removing one chosen point, with the choice function `w`.

use serde::Serialize;
use thiserror::Error;

use crate::selfmap::{DescribedNatMap, Interval, MapError, Point, PointSet, SelfMap};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClassifyError {
    #[error("domain has {0} points, at least 3 are needed")]
    DomainTooSmall(u64),
    #[error("interval classification needs a map on the naturals")]
    NotNatDomain,
    #[error(transparent)]
    Map(#[from] MapError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SubsetCase {
    /// `a ↦ b ↦ c`, identity off `{a, b}`.
    Chain,
    /// 3-cycle `a ↦ b ↦ c ↦ a`, identity elsewhere.
    Cycle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SubsetClassification {
    pub case: SubsetCase,
    pub a: Point,
    pub b: Point,
    pub c: Point,
}

/// `w` for finite subsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubsetSelector {
    class: SubsetClassification,
}

impl SubsetSelector {
    pub fn new(class: SubsetClassification) -> Self {
        SubsetSelector { class }
    }

    /// `None` only for the empty set.
    pub fn select(&self, s: &PointSet) -> Option<Point> {
        let SubsetClassification { case, a, b, c } = self.class;
        let (ha, hb, hc) = (s.contains(a), s.contains(b), s.contains(c));
        let pick = match case {
            SubsetCase::Chain => match (ha, hb) {
                (true, true) => Some(b),
                (true, false) => Some(a),
                (false, true) => Some(b),
                (false, false) => None,
            },
            SubsetCase::Cycle => match (ha, hb, hc) {
                (true, false, false) => Some(a),
                (false, true, false) => Some(b),
                (false, false, true) => Some(c),
                (true, true, false) => Some(b),
                (true, false, true) => Some(a),
                (false, true, true) => Some(c),
                _ => None,
            },
        };
        pick.or_else(|| s.min())
    }
}

fn non_fixed_finite(map: &SelfMap, n: u64) -> Result<Vec<Point>, MapError> {
    let mut out = Vec::new();
    for x in 0..n {
        if map.eval(x)? != x {
            out.push(x);
        }
    }
    Ok(out)
}

/// Case data and selector when some `w` makes every finite nonempty subset
/// invariant after removing `w(S)`; `None` when no such `w` exists.
pub fn classify_subsets_1qi(
    map: &SelfMap,
) -> Result<Option<(SubsetClassification, SubsetSelector)>, ClassifyError> {
    let moved = match map {
        SelfMap::Finite(t) => {
            if t.size() < 3 {
                return Err(ClassifyError::DomainTooSmall(t.size()));
            }
            non_fixed_finite(map, t.size())?
        }
        SelfMap::Nat(d) => {
            if d.shifts().iter().any(|&c| c != 0) {
                return Ok(None);
            }
            non_fixed_finite(map, d.prefix_len())?
        }
    };
    let f = |x: Point| map.eval(x);
    let class = match moved.as_slice() {
        [] => Some((SubsetCase::Chain, 0, 0, 0)),
        &[p] => {
            let b = f(p)?;
            Some((SubsetCase::Chain, p, b, b))
        }
        &[p, q] => {
            if f(p)? == q {
                Some((SubsetCase::Chain, p, q, f(q)?))
            } else if f(q)? == p {
                Some((SubsetCase::Chain, q, p, f(p)?))
            } else {
                None
            }
        }
        &[p, _, _] => {
            let b = f(p)?;
            let c = f(b)?;
            (moved.contains(&b) && moved.contains(&c) && b != c && f(c)? == p)
                .then_some((SubsetCase::Cycle, p, b, c))
        }
        _ => None,
    };
    Ok(class.map(|(case, a, b, c)| {
        let cl = SubsetClassification { case, a, b, c };
        (cl, SubsetSelector::new(cl))
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalCase {
    /// Every non-fixed point moves up, at most to the next non-fixed point.
    Rising,
    /// Rising up to the pivot, then the next non-fixed point falls below itself.
    Falling,
    /// Rising up to the pivot, then the next non-fixed point jumps past its successor.
    Jumping,
}

/// Non-fixed points of a described map in increasing order.
#[derive(Debug, Clone)]
pub struct NonFixedPoints<'a> {
    d: &'a DescribedNatMap,
    next: Point,
}

impl Iterator for NonFixedPoints<'_> {
    type Item = Point;

    fn next(&mut self) -> Option<Point> {
        let n = self.d.prefix_len();
        while self.next < n {
            let x = self.next;
            self.next += 1;
            if self.d.prefix()[x as usize] != x {
                return Some(x);
            }
        }
        if self.d.shifts().iter().all(|&c| c == 0) {
            return None;
        }
        loop {
            let x = self.next;
            self.next += 1;
            if self.d.shift_at(x) != 0 {
                return Some(x);
            }
        }
    }
}

pub fn non_fixed_points(d: &DescribedNatMap) -> NonFixedPoints<'_> {
    NonFixedPoints { d, next: 0 }
}

/// Structure of a map all of whose intervals become invariant after removing one point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntervalClassification {
    pub case: IntervalCase,
    /// Index of the last rising non-fixed point before the break, `-1` if none;
    /// absent for [`IntervalCase::Rising`].
    pub pivot: Option<i64>,
    #[serde(skip)]
    map: DescribedNatMap,
    /// Last rising non-fixed point before the break.
    #[serde(skip)]
    last_rising: Option<Point>,
    /// First non-fixed point after the break.
    #[serde(skip)]
    first_falling: Option<Point>,
}

impl IntervalClassification {
    pub fn non_fixed_points(&self) -> NonFixedPoints<'_> {
        non_fixed_points(&self.map)
    }

    pub fn beta(&self, x: Point) -> Point {
        self.map.eval(x).expect("described map image")
    }

    fn rising(&self, x: Point) -> bool {
        match self.case {
            IntervalCase::Rising => true,
            _ => self.last_rising.is_some_and(|p| x <= p),
        }
    }

    /// `w([a, b])`: the unique non-fixed point of the interval whose image leaves it,
    /// or `a` when there is none.
    pub fn select(&self, iv: Interval) -> Point {
        let (a, b) = (iv.lo(), iv.hi());
        let mut chosen = None;
        for x in a..=b {
            let y = self.beta(x);
            if y == x {
                continue;
            }
            let escapes = if self.rising(x) {
                y > b
            } else {
                y < a
                    || (self.case == IntervalCase::Jumping
                        && Some(x) == self.first_falling
                        && y > b)
            };
            if escapes {
                assert!(
                    chosen.is_none(),
                    "two escaping points in {iv} for {}",
                    SelfMap::Nat(self.map.clone())
                );
                chosen = Some(x);
            }
        }
        chosen.unwrap_or(a)
    }
}

/// Classifies maps on ℕ for which some `w` makes every interval invariant
/// after removing `w([a, b])`.
///
/// Past `N + m` the pattern of non-fixed points and their images repeats with
/// period `m`, so checking the non-fixed points up to `N + 3m + C` decides it.
pub fn classify_intervals_1qi(
    map: &SelfMap,
) -> Result<Option<IntervalClassification>, ClassifyError> {
    let d = map.as_nat().ok_or(ClassifyError::NotNatDomain)?;
    let horizon = d.prefix_len() + 3 * d.modulus() + d.step_bound();
    let mut pts: Vec<Point> = Vec::new();
    let mut it = non_fixed_points(d);
    // keep one point past the horizon so every checked point has its successor
    for x in it.by_ref() {
        pts.push(x);
        if x > horizon {
            break;
        }
    }
    let checked = pts.iter().take_while(|&&x| x <= horizon).count();
    let beta = |x: Point| d.eval(x);
    let next = |i: usize| pts.get(i + 1).copied();
    let up = |i: usize| -> Result<bool, MapError> {
        let y = beta(pts[i])?;
        Ok(pts[i] < y && next(i).is_none_or(|nx| y <= nx))
    };
    let down = |i: usize| -> Result<bool, MapError> {
        let y = beta(pts[i])?;
        let prev_ok = i == 0 || pts[i - 1] <= y;
        Ok(prev_ok && y < pts[i])
    };

    let mut first_fail = None;
    for i in 0..checked {
        if !up(i)? {
            first_fail = Some(i);
            break;
        }
    }
    let Some(f) = first_fail else {
        return Ok(Some(IntervalClassification {
            case: IntervalCase::Rising,
            pivot: None,
            map: d.clone(),
            last_rising: None,
            first_falling: None,
        }));
    };
    let y = beta(pts[f])?;
    let case = if y < pts[f] {
        IntervalCase::Falling
    } else if next(f).is_some_and(|nx| y > nx) {
        IntervalCase::Jumping
    } else {
        return Ok(None);
    };
    for i in f + 1..checked {
        if !down(i)? {
            return Ok(None);
        }
    }
    Ok(Some(IntervalClassification {
        case,
        pivot: Some(f as i64 - 1),
        map: d.clone(),
        last_rising: f.checked_sub(1).map(|i| pts[i]),
        first_falling: Some(pts[f]),
    }))
}

/// Shapes of maps on ℕ where every point moves and the removed point must leave.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum StrictForm {
    /// `n ↦ n + 1`.
    Succ,
    /// `n ↦ n + 1` below `pivot`, `pivot ↦ target`, `n ↦ n - 1` above.
    Pivot { pivot: Point, target: Point },
}

/// Recognizes the two candidate shapes for the strict interval variant, without
/// deciding whether a strict `w` exists.
pub fn strict_interval_form(map: &SelfMap) -> Result<Option<StrictForm>, ClassifyError> {
    let d = map.as_nat().ok_or(ClassifyError::NotNatDomain)?;
    let pre = d.prefix();
    if d.shifts().iter().all(|&c| c == 1) {
        let ok = pre.iter().enumerate().all(|(i, &v)| v == i as Point + 1);
        return Ok(ok.then_some(StrictForm::Succ));
    }
    if !d.shifts().iter().all(|&c| c == -1) {
        return Ok(None);
    }
    let n = pre.len();
    let p = (0..n).find(|&i| pre[i] != i as Point + 1).unwrap_or(n);
    if !(p + 1..n).all(|i| pre[i] + 1 == i as Point) {
        return Ok(None);
    }
    let target = d.eval(p as Point)?;
    Ok((target != p as Point).then_some(StrictForm::Pivot {
        pivot: p as Point,
        target,
    }))
}

/// The strict variant: some `w` with `w([a, b])` removable and `β(w([a, b])) ∉ [a, b]`
/// for every interval.
///
/// Every point must move, so the interval structure applies with non-fixed points
/// `b_n = n`. Only the successor survives: for a pivot map the interval
/// `[0, max(pivot, target)]` is mapped into itself, so no removed point can leave it.
pub fn classify_strict_intervals_1qi(map: &SelfMap) -> Result<Option<StrictForm>, ClassifyError> {
    let form = strict_interval_form(map)?;
    Ok(match form {
        Some(StrictForm::Succ) => Some(StrictForm::Succ),
        _ => None,
    })
}

/// Selector for the strict variant of the successor map.
pub fn strict_select(form: StrictForm, iv: Interval) -> Point {
    match form {
        StrictForm::Succ => iv.hi(),
        StrictForm::Pivot { pivot, .. } => {
            if iv.lo() > pivot {
                iv.lo()
            } else {
                iv.hi()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: &[u64]) -> SelfMap {
        SelfMap::finite(v.to_vec()).unwrap()
    }

    fn all_subsets(n: u64) -> impl Iterator<Item = PointSet> {
        (1u32..(1 << n)).map(move |mask| (0..n).filter(|i| mask >> i & 1 == 1).collect())
    }

    fn subset_selector_sound(map: &SelfMap, sel: &SubsetSelector, n: u64) -> bool {
        all_subsets(n).all(|s| {
            let w = sel.select(&s).unwrap();
            s.contains(w) && map.image(&s.without(w)).unwrap().is_subset(&s)
        })
    }

    #[test]
    fn subset_examples() {
        let (c, _) = classify_subsets_1qi(&t(&[0, 1, 2, 3])).unwrap().unwrap();
        assert_eq!(c, SubsetClassification { case: SubsetCase::Chain, a: 0, b: 0, c: 0 });
        let m = t(&[1, 2, 0, 3, 4]);
        let (c, sel) = classify_subsets_1qi(&m).unwrap().unwrap();
        assert_eq!(c.case, SubsetCase::Cycle);
        assert!(subset_selector_sound(&m, &sel, 5));
        assert_eq!(classify_subsets_1qi(&t(&[1, 2, 3, 3, 4])).unwrap(), None);
        assert_eq!(classify_subsets_1qi(&t(&[1, 0])), Err(ClassifyError::DomainTooSmall(2)));
        assert_eq!(classify_subsets_1qi(&SelfMap::succ()).unwrap(), None);
        let (c, _) = classify_subsets_1qi(&SelfMap::identity_nat()).unwrap().unwrap();
        assert_eq!((c.a, c.b, c.c), (0, 0, 0));
    }

    #[test]
    fn subset_chain_variants() {
        // one moved point
        let m = t(&[0, 3, 2, 3]);
        let (c, sel) = classify_subsets_1qi(&m).unwrap().unwrap();
        assert_eq!((c.case, c.a, c.b, c.c), (SubsetCase::Chain, 1, 3, 3));
        assert!(subset_selector_sound(&m, &sel, 4));
        // swap
        let m = t(&[0, 3, 2, 1]);
        let (c, sel) = classify_subsets_1qi(&m).unwrap().unwrap();
        assert_eq!((c.a, c.b, c.c), (1, 3, 1));
        assert!(subset_selector_sound(&m, &sel, 4));
        // 3 ↦ 1 ↦ 0
        let m = t(&[0, 0, 2, 1]);
        let (c, sel) = classify_subsets_1qi(&m).unwrap().unwrap();
        assert_eq!((c.a, c.b, c.c), (3, 1, 0));
        assert!(subset_selector_sound(&m, &sel, 4));
    }

    fn pivot_map(prefix: &[u64]) -> SelfMap {
        SelfMap::nat(prefix.to_vec(), vec![-1]).unwrap()
    }

    #[test]
    fn interval_examples() {
        let c = classify_intervals_1qi(&SelfMap::succ()).unwrap().unwrap();
        assert_eq!(c.case, IntervalCase::Rising);
        assert_eq!(c.non_fixed_points().take(4).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        assert_eq!(c.beta(3), 4);
        let c = classify_intervals_1qi(&pivot_map(&[1, 2, 3, 0])).unwrap().unwrap();
        assert_eq!((c.case, c.pivot), (IntervalCase::Falling, Some(2)));
        let c = classify_intervals_1qi(&pivot_map(&[2])).unwrap().unwrap();
        assert_eq!((c.case, c.pivot), (IntervalCase::Jumping, Some(-1)));
        assert_eq!(classify_intervals_1qi(&t(&[0, 1, 2])), Err(ClassifyError::NotNatDomain));
        assert!(classify_intervals_1qi(&SelfMap::shift_by_two()).unwrap().is_none());
    }

    fn interval_selector_sound(map: &SelfMap, c: &IntervalClassification, top: u64) -> bool {
        (0..=top).all(|a| {
            (a..=top).all(|b| {
                let iv = Interval::new(a, b).unwrap();
                let w = c.select(iv);
                iv.contains(w) && map.image(&iv.to_set().without(w)).unwrap().is_subset(&iv.to_set())
            })
        })
    }

    #[test]
    fn jumping_case_needs_upward_escape_branch() {
        // 0 ↦ 1, 1 ↦ 4 (past 2), 2 ↦ 1, 3 ↦ 2, n ↦ n - 1
        let m = pivot_map(&[1, 4, 1, 2]);
        let c = classify_intervals_1qi(&m).unwrap().unwrap();
        assert_eq!((c.case, c.pivot), (IntervalCase::Jumping, Some(0)));
        assert_eq!(c.select(Interval::new(0, 2).unwrap()), 1);
        assert!(interval_selector_sound(&m, &c, 30));
    }

    #[test]
    fn interval_selectors_on_named_maps() {
        for m in [
            SelfMap::succ(),
            pivot_map(&[1, 2, 3, 0]),
            pivot_map(&[2]),
            SelfMap::identity_nat(),
            SelfMap::nat(vec![1, 3, 2, 5], vec![0, 0]).unwrap(),
        ] {
            let c = classify_intervals_1qi(&m).unwrap().unwrap();
            assert!(interval_selector_sound(&m, &c, 30), "{m}");
        }
    }

    #[test]
    fn strict_examples() {
        assert_eq!(classify_strict_intervals_1qi(&SelfMap::succ()).unwrap(), Some(StrictForm::Succ));
        let pivot = pivot_map(&[1, 2, 5]);
        assert_eq!(
            strict_interval_form(&pivot).unwrap(),
            Some(StrictForm::Pivot { pivot: 2, target: 5 })
        );
        assert_eq!(classify_strict_intervals_1qi(&pivot).unwrap(), None);
        assert_eq!(strict_interval_form(&SelfMap::identity_nat()).unwrap(), None);
        assert_eq!(classify_strict_intervals_1qi(&SelfMap::identity_nat()).unwrap(), None);
        assert_eq!(
            strict_interval_form(&pivot_map(&[1, 2, 3, 0])).unwrap(),
            Some(StrictForm::Pivot { pivot: 3, target: 0 })
        );
        assert_eq!(
            strict_interval_form(&pivot_map(&[4])).unwrap(),
            Some(StrictForm::Pivot { pivot: 0, target: 4 })
        );
    }

    #[test]
    fn pivot_maps_close_an_initial_interval() {
        let pivot = pivot_map(&[1, 2, 5]);
        let closed = PointSet::range(0, 5);
        assert!(pivot.image(&closed).unwrap().is_subset(&closed));
    }

    #[test]
    fn strict_succ_selector() {
        for a in 0..10 {
            for b in a..10 {
                let iv = Interval::new(a, b).unwrap();
                let w = strict_select(StrictForm::Succ, iv);
                assert_eq!(w, b);
                assert!(!iv.contains(w + 1));
            }
        }
    }
}
