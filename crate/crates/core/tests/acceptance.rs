//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use quasinv::classifier::{
    classify_intervals_1qi, classify_strict_intervals_1qi, classify_subsets_1qi, StrictForm,
};
use quasinv::oracle::{
    brute_force_interval_w, brute_force_w_table, described_corpus, enumerate_finite_maps,
    named_map, replay, run_theorem_suite, Mutant, SuiteConfig, SuiteReport,
};
use quasinv::orbit::{check_p_tilde, is_cofinite_orbit};
use quasinv::psolver::{
    check_p, has_full_orbit, indivisibility_check, is_total_order, small_subsets, solve_p1,
    solve_p2, OrderScope,
};
use quasinv::quasi_invariance::{identity_decision, Scope};
use quasinv::superset::{analyze_maxcond, interval_superset_bounds};
use quasinv::{Point, PointSet, SelfMap};

type Verdict = Result<(), String>;
type Criterion = (&'static str, fn() -> Verdict, u64);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn table(m: &SelfMap) -> Vec<Point> {
    match m {
        SelfMap::Finite(t) => t.table().to_vec(),
        SelfMap::Nat(_) => unreachable!(),
    }
}

fn nat(prefix: &[Point], shifts: &[i64]) -> SelfMap {
    SelfMap::nat(prefix.to_vec(), shifts.to_vec()).unwrap()
}

fn pivot_map(pivot: Point, target: Point) -> SelfMap {
    // n ↦ n + 1 below the pivot, pivot ↦ target, n ↦ n - 1 above
    let len = pivot.max(target) + 2;
    let prefix: Vec<Point> = (0..len)
        .map(|x| match x.cmp(&pivot) {
            std::cmp::Ordering::Less => x + 1,
            std::cmp::Ordering::Equal => target,
            std::cmp::Ordering::Greater => x - 1,
        })
        .collect();
    nat(&prefix, &[-1])
}

fn suite_clean(r: &SuiteReport) -> Verdict {
    for t in &r.theorems {
        ensure!(t.checked > 0, "{} checked nothing", t.id);
        ensure!(t.failures.is_empty(), "{}: {}", t.id, serde_json::to_string(&t.failures[0]).unwrap());
    }
    Ok(())
}

fn criterion_1() -> Verdict {
    for n in 2..=5u64 {
        let maps: Vec<SelfMap> = enumerate_finite_maps(n).unwrap().collect();
        ensure!(maps.len() as u64 == n.pow(n as u32), "n={n}: {} maps", maps.len());
        for k in 1..=n {
            let mut holders = Vec::new();
            for m in &maps {
                if identity_decision(m, Scope::Subsets, k).map_err(|e| e.to_string())? {
                    holders.push(table(m));
                }
            }
            if k < n {
                let id: Vec<Point> = (0..n).collect();
                ensure!(holders == vec![id], "n={n} k={k}: {} maps hold", holders.len());
            } else {
                ensure!(holders.len() == maps.len(), "n={n} k=n: {} of {} hold", holders.len(), maps.len());
            }
        }
    }
    Ok(())
}

fn criterion_2() -> Verdict {
    for n in 3..=5u64 {
        for m in enumerate_finite_maps(n).unwrap() {
            let SelfMap::Finite(ft) = &m else { unreachable!() };
            let got = classify_subsets_1qi(&m).map_err(|e| e.to_string())?;
            let brute = brute_force_w_table(ft);
            ensure!(got.is_some() == brute.is_some(), "{m}: classifier {} brute force {}", got.is_some(), brute.is_some());
            if let Some((_, sel)) = got {
                for mask in 1u32..1 << n {
                    let s: PointSet = (0..n).filter(|i| mask >> i & 1 == 1).collect();
                    let w = sel.select(&s).unwrap();
                    let rest = m.image(&s.without(w)).unwrap();
                    ensure!(s.contains(w) && rest.is_subset(&s), "{m}: w({s}) = {w} fails");
                }
            }
        }
    }
    Ok(())
}

fn criterion_3() -> Verdict {
    let cfg = SuiteConfig::default();
    let mut corpus = described_corpus(&cfg);
    corpus.extend([pivot_map(2, 5), pivot_map(0, 3), pivot_map(3, 0), pivot_map(4, 1)]);
    ensure!(corpus.len() >= 100, "corpus has {} maps", corpus.len());
    for m in &corpus {
        let got = classify_intervals_1qi(m).map_err(|e| e.to_string())?.is_some();
        let brute = brute_force_interval_w(m, 30, false).unwrap().is_some();
        ensure!(got == brute, "{m}: classifier {got}, brute force over [0,30] {brute}");
    }
    for name in ["succ", "pivot", "jump"] {
        let m = named_map(name).unwrap();
        ensure!(classify_intervals_1qi(&m).unwrap().is_some(), "{name} not classified");
    }
    let mut problems = Vec::new();
    let succ = classify_strict_intervals_1qi(&SelfMap::succ()).unwrap();
    if succ != Some(StrictForm::Succ) {
        problems.push(format!("succ: expected Succ, got {succ:?}"));
    }
    for (pivot, target) in [(2, 5), (0, 3), (3, 0), (4, 1)] {
        let m = pivot_map(pivot, target);
        let got = classify_strict_intervals_1qi(&m).unwrap();
        let want = Some(StrictForm::Pivot { pivot, target });
        if got != want {
            let brute = brute_force_interval_w(&m, 30, true).unwrap().is_some();
            problems.push(format!(
                "pivot {pivot}->{target}: expected {want:?}, got {got:?} (strict w over [0,30] by brute force: {})",
                if brute { "exists" } else { "none" }
            ));
        }
    }
    for m in &corpus {
        let got = classify_strict_intervals_1qi(m).unwrap();
        let brute = brute_force_interval_w(m, 30, true).unwrap().is_some();
        if got.is_some() != brute {
            problems.push(format!("{m}: strict classifier {got:?}, brute force {brute}"));
        }
    }
    ensure!(problems.is_empty(), "{}", problems.join("; "));
    Ok(())
}

fn ids(v: &[&str]) -> Option<Vec<String>> {
    Some(v.iter().map(|s| s.to_string()).collect())
}

fn criterion_4() -> Verdict {
    let cfg = SuiteConfig {
        theorems: ids(&[
            "orbit.infinite-finite-disjoint",
            "orbit.cofinite-meets-infinite",
            "orbit.xi-generates-intersection",
            "orbit.d-phi-class-purity",
            "orbit.pairwise-implies-joint",
            "orbit.cofinite-implies-p-tilde",
            "orbit.dichotomy",
            "orbit.decomposition-links",
        ]),
        max_n: 5,
        window: 200,
        ..SuiteConfig::default()
    };
    suite_clean(&run_theorem_suite(&cfg).map_err(|e| e.to_string())?)
}

fn closed(m: &SelfMap, g: &PointSet) -> bool {
    g.iter().all(|x| g.contains(m.eval(x).unwrap()))
}

fn criterion_5() -> Verdict {
    let cfg = SuiteConfig {
        theorems: ids(&["superset.orbit-union-closed"]),
        max_n: 5,
        ..SuiteConfig::default()
    };
    suite_clean(&run_theorem_suite(&cfg).map_err(|e| e.to_string())?)?;

    let evens = named_map("evens").unwrap();
    let p = analyze_maxcond(&evens).unwrap().ok_or("evens map has no profile")?;
    for (a, lo, hi) in [(0, 0, 6), (1, 1, 4)] {
        let istar = PointSet::singleton(a);
        let b = interval_superset_bounds(&p, &evens, &istar).map_err(|e| e.to_string())?;
        ensure!((b.u_star, b.v) == (lo, hi), "G({{{a}}}) = [{}, {}], expected [{lo}, {hi}]", b.u_star, b.v);
        for u in b.u_star..=istar.min().unwrap() {
            ensure!(closed(&evens, &PointSet::range(u, b.v)), "[{u}, {}] not closed", b.v);
        }
        if b.u_star > 0 {
            let below = PointSet::range(b.u_star - 1, b.v);
            ensure!(!closed(&evens, &below), "{below} closed below u*");
        }
    }
    Ok(())
}

fn criterion_6() -> Verdict {
    let corpus = described_corpus(&SuiteConfig::default());
    let sets = small_subsets(12, 3);
    for m in &corpus {
        let p1 = solve_p1(m);
        ensure!(p1.is_some() == check_p_tilde(m), "{m}: P1 vs pairwise meeting");
        let p2 = solve_p2(m).unwrap();
        let inf_total = is_total_order(m, OrderScope::InfiniteOnly).unwrap();
        ensure!(p2.is_some() == inf_total, "{m}: P2 vs total order on infinite points");
        let full = has_full_orbit(m).unwrap();
        let cof = (0..=12).any(|x| is_cofinite_orbit(m, x).unwrap());
        let total = is_total_order(m, OrderScope::All).unwrap();
        ensure!(full.is_some() == (cof && total), "{m}: full orbit {full:?}, cofinite {cof}, total {total}");
        for sol in p1.iter().chain(p2.iter()) {
            for istar in &sets {
                let (g, u) = sol.pair(istar).map_err(|e| format!("{m} {istar}: {e}"))?;
                ensure!(check_p(sol.mode, m, &g, u, istar).unwrap(), "{m} {:?} {istar}: G={g} u={u}", sol.mode);
            }
        }
    }
    let succ = SelfMap::succ();
    ensure!(solve_p1(&succ).is_some() && solve_p2(&succ).unwrap().is_some(), "succ solutions");
    ensure!(has_full_orbit(&succ).unwrap() == Some(0), "succ full orbit");
    ensure!(solve_p1(&SelfMap::shift_by_two()).is_none(), "shift-by-2 has P1");
    let bullet = SelfMap::bullet();
    ensure!(solve_p2(&bullet).unwrap().is_none(), "bullet has P2");
    ensure!(has_full_orbit(&bullet).unwrap().is_none(), "bullet has a full orbit");
    ensure!(has_full_orbit(&SelfMap::succ_conjugate()).unwrap() == Some(0), "conjugate full orbit");
    Ok(())
}

fn criterion_7() -> Verdict {
    let id: Vec<Point> = (0..=8).collect();
    for m in [SelfMap::succ(), SelfMap::succ_conjugate()] {
        let sol = solve_p2(&m).unwrap().ok_or("no P2 solution")?;
        let r = indivisibility_check(&m, &sol, 8).map_err(|e| e.to_string())?;
        ensure!(r.survivors == vec![id.clone()], "{m}: survivors {:?}", r.survivors);
    }
    Ok(())
}

fn criterion_8() -> Verdict {
    for mutant in Mutant::ALL {
        let cfg = SuiteConfig {
            mutant: Some(mutant),
            ..SuiteConfig::default()
        };
        let r = run_theorem_suite(&cfg).map_err(|e| e.to_string())?;
        let failing = r.theorems.iter().find(|t| !t.failures.is_empty());
        let Some(t) = failing else {
            return Err(format!("{mutant}: no failure"));
        };
        let ce = &t.failures[0];
        let text = serde_json::to_string(ce).unwrap();
        let back: quasinv::oracle::Counterexample = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        ensure!(&back == ce, "{mutant}: counterexample does not round-trip");
        let again = replay(&t.id, &back.map, &cfg).map_err(|e| e.to_string())?;
        ensure!(again.failure_count > 0, "{mutant}: replay of {text} passes");
        println!("    {mutant}: {} failures, e.g. {} {text}", r.failure_count(), t.id);
    }
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("identity is the only map with all large subsets invariant", criterion_1, 10),
        ("subset classifier agrees with brute-force w tables", criterion_2, 30),
        ("interval and strict classification at window scale", criterion_3, 30),
        ("orbit property suite", criterion_4, 60),
        ("orbit-union supersets and interval bounds", criterion_5, 10),
        ("P1/P2/full-orbit equivalences", criterion_6, 60),
        ("indivisibility search leaves only the identity", criterion_7, 60),
        ("every mutant is caught", criterion_8, 300),
    ];
    let mut failed = 0;
    for (i, (name, f, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let verdict = verdict.and_then(|()| {
            if took > Duration::from_secs(limit) {
                Err(format!("took {took:.1?}, limit {limit}s"))
            } else {
                Ok(())
            }
        });
        match verdict {
            Ok(()) => println!("criterion {} PASS {name} ({took:.1?})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL {name} ({took:.1?}): {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} of 8 criteria pass", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
