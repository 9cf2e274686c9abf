//! Invariant and k-quasi-invariant finite sets.

use serde::Serialize;
use thiserror::Error;

use crate::selfmap::{MapError, PointSet, SelfMap};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QiError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("k = {k} is outside [1, {max}]")]
    InvalidK { k: u64, max: u64 },
    #[error("interval scope needs a map on the naturals")]
    NotNatDomain,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuasiInvarianceReport {
    pub holds: bool,
    /// Removal set for the internal notion, excess image for the external one.
    pub witness: Option<PointSet>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Subsets,
    Intervals,
}

/// Points of `lambda` whose image leaves `lambda`.
pub fn escapes(map: &SelfMap, lambda: &PointSet) -> Result<PointSet, MapError> {
    map.check_set(lambda)?;
    let mut out = Vec::new();
    for x in lambda.iter() {
        if !lambda.contains(map.eval(x)?) {
            out.push(x);
        }
    }
    Ok(PointSet::new(out))
}

pub fn is_invariant(map: &SelfMap, lambda: &PointSet) -> Result<bool, MapError> {
    Ok(escapes(map, lambda)?.is_empty())
}

/// Whether removing at most `k` points of `lambda` keeps the image inside `lambda`.
/// Every escaping point must be removed, so the escaping set is the unique
/// smallest removal set.
pub fn internal_quasi_invariant(
    map: &SelfMap,
    lambda: &PointSet,
    k: u64,
) -> Result<QuasiInvarianceReport, MapError> {
    let e = escapes(map, lambda)?;
    let holds = e.len() as u64 <= k;
    Ok(QuasiInvarianceReport {
        holds,
        witness: holds.then_some(e),
    })
}

/// Whether the image of `lambda` adds at most `k` new points.
pub fn external_quasi_invariant(
    map: &SelfMap,
    lambda: &PointSet,
    k: u64,
) -> Result<QuasiInvarianceReport, MapError> {
    map.check_set(lambda)?;
    let excess = map.image(lambda)?.difference(lambda);
    Ok(QuasiInvarianceReport {
        holds: excess.len() as u64 <= k,
        witness: Some(excess),
    })
}

/// Whether every set (or interval) with at least `k` elements is invariant.
///
/// On subsets of a domain with more than `k` points this happens exactly for the
/// identity; when `k` equals the size of a finite domain the only such set is the
/// domain itself. On intervals of ℕ no point may move down, and a point may move
/// up only inside `[0, k - 1]`, since every long interval reaching that far
/// contains the whole of it.
pub fn identity_decision(map: &SelfMap, scope: Scope, k: u64) -> Result<bool, QiError> {
    if k == 0 {
        return Err(QiError::InvalidK {
            k,
            max: map.domain_size().unwrap_or(u64::MAX),
        });
    }
    match (scope, map) {
        (Scope::Intervals, SelfMap::Finite(_)) => Err(QiError::NotNatDomain),
        (Scope::Subsets, SelfMap::Finite(t)) if k > t.size() => {
            Err(QiError::InvalidK { k, max: t.size() })
        }
        (Scope::Subsets, SelfMap::Finite(t)) if k == t.size() => Ok(true),
        (Scope::Subsets, _) => Ok(map.is_identity()),
        (Scope::Intervals, SelfMap::Nat(d)) => Ok(d.shifts().iter().all(|&c| c == 0)
            && d.prefix()
                .iter()
                .enumerate()
                .all(|(x, &y)| y == x as u64 || (x as u64) < y && y < k)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selfmap::tests::arb_map;
    use proptest::prelude::*;

    fn t(v: &[u64]) -> SelfMap {
        SelfMap::finite(v.to_vec()).unwrap()
    }

    fn s(v: &[u64]) -> PointSet {
        PointSet::new(v.to_vec())
    }

    #[test]
    fn invariance_examples() {
        assert!(is_invariant(&t(&[1, 2, 0]), &s(&[0, 1, 2])).unwrap());
        assert!(!is_invariant(&SelfMap::succ(), &s(&[0, 1])).unwrap());
        assert!(is_invariant(&SelfMap::identity_nat(), &s(&[3, 9, 40])).unwrap());
        assert!(is_invariant(&t(&[0, 1]), &s(&[1])).unwrap());
        assert!(is_invariant(&t(&[1, 2, 0]), &s(&[4])).is_err());
    }

    #[test]
    fn internal_examples() {
        let r = internal_quasi_invariant(&SelfMap::succ(), &PointSet::range(3, 7), 1).unwrap();
        assert_eq!(r, QuasiInvarianceReport { holds: true, witness: Some(s(&[7])) });
        let r = internal_quasi_invariant(&SelfMap::succ(), &s(&[0, 2]), 1).unwrap();
        assert!(!r.holds);
        assert_eq!(r.witness, None);
        let r = internal_quasi_invariant(&t(&[1, 2, 0]), &s(&[0, 1]), 1).unwrap();
        assert_eq!(r.witness, Some(s(&[1])));
    }

    #[test]
    fn external_examples() {
        let r = external_quasi_invariant(&SelfMap::identity_nat(), &s(&[2, 5]), 0).unwrap();
        assert_eq!(r, QuasiInvarianceReport { holds: true, witness: Some(PointSet::empty()) });
        let r = external_quasi_invariant(&SelfMap::succ(), &PointSet::range(0, 5), 1).unwrap();
        assert_eq!(r.witness, Some(s(&[6])));
        assert!(r.holds);
        let r = external_quasi_invariant(&t(&[0, 0, 0]), &s(&[1, 2]), 1).unwrap();
        assert_eq!(r, QuasiInvarianceReport { holds: true, witness: Some(s(&[0])) });
    }

    #[test]
    fn identity_decision_examples() {
        assert!(identity_decision(&SelfMap::identity_nat(), Scope::Intervals, 1).unwrap());
        assert!(!identity_decision(&SelfMap::succ(), Scope::Intervals, 3).unwrap());
        // 0 ↦ 1 stays inside every interval with two or more points
        let lift = SelfMap::nat(vec![1, 1], vec![0]).unwrap();
        assert!(!identity_decision(&lift, Scope::Intervals, 1).unwrap());
        assert!(identity_decision(&lift, Scope::Intervals, 2).unwrap());
        let down = SelfMap::nat(vec![0, 0], vec![0]).unwrap();
        assert!(!identity_decision(&down, Scope::Intervals, 5).unwrap());
        assert!(identity_decision(&t(&[1, 0]), Scope::Subsets, 2).unwrap());
        assert!(!identity_decision(&t(&[1, 0]), Scope::Subsets, 1).unwrap());
        assert_eq!(
            identity_decision(&t(&[1, 0]), Scope::Subsets, 3),
            Err(QiError::InvalidK { k: 3, max: 2 })
        );
        assert_eq!(
            identity_decision(&t(&[0, 1]), Scope::Intervals, 1),
            Err(QiError::NotNatDomain)
        );
        assert!(matches!(
            identity_decision(&SelfMap::succ(), Scope::Subsets, 0),
            Err(QiError::InvalidK { .. })
        ));
    }

    fn arb_instance() -> impl Strategy<Value = (SelfMap, PointSet, u64)> {
        (arb_map(), proptest::collection::vec(0u64..12, 1..6), 0u64..4).prop_map(|(m, v, k)| {
            let v = match m.domain_size() {
                Some(n) => v.into_iter().map(|x| x % n).collect(),
                None => v,
            };
            (m, PointSet::new(v), k)
        })
    }

    proptest! {
        #[test]
        fn monotone_in_k((m, l, k) in arb_instance()) {
            if internal_quasi_invariant(&m, &l, k).unwrap().holds {
                prop_assert!(internal_quasi_invariant(&m, &l, k + 1).unwrap().holds);
            }
            if external_quasi_invariant(&m, &l, k).unwrap().holds {
                prop_assert!(external_quasi_invariant(&m, &l, k + 1).unwrap().holds);
            }
        }

        #[test]
        fn zero_quasi_invariance_is_invariance((m, l, _k) in arb_instance()) {
            let inv = is_invariant(&m, &l).unwrap();
            prop_assert_eq!(internal_quasi_invariant(&m, &l, 0).unwrap().holds, inv);
            prop_assert_eq!(external_quasi_invariant(&m, &l, 0).unwrap().holds, inv);
        }

        #[test]
        fn witnesses_are_valid((m, l, k) in arb_instance()) {
            let r = internal_quasi_invariant(&m, &l, k).unwrap();
            if let Some(p) = r.witness {
                prop_assert!(p.len() as u64 <= k && p.is_subset(&l));
                let rest = l.difference(&p);
                prop_assert!(m.image(&rest).unwrap().is_subset(&l));
            }
            let r = external_quasi_invariant(&m, &l, k).unwrap();
            let excess = r.witness.unwrap();
            prop_assert_eq!(r.holds, excess.len() as u64 <= k);
            prop_assert!(excess.iter().all(|y| !l.contains(y)));
        }
    }
}
