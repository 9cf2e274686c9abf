//! Global structure of described maps: orbit fates, in-degrees and the
//! reachability order, decided on a finite window.
//!
//! Above the threshold `T = N + 2·m·C` every point's orbit stays in the tail for
//! a full residue period, so its fate depends only on its residue and its height
//! modulo `L = lcm(m, |drift| of every non-level residue cycle)`. In-degrees above
//! `N + C` are `m`-periodic except for prefix images. Any pattern beyond
//! the window therefore repeats inside it.

use std::collections::{BTreeSet, HashMap};

use num_integer::Integer;

use crate::orbit::{OrbitOracle, OrbitResult, ResidueDynamics};
use crate::selfmap::{DescribedNatMap, MapError, Point, SelfMap};

pub struct NatStructure<'a> {
    map: &'a SelfMap,
    d: &'a DescribedNatMap,
    dynamics: ResidueDynamics,
    oracle: OrbitOracle<'a>,
    window: Point,
    fates: HashMap<Point, bool>,
}

impl<'a> NatStructure<'a> {
    /// `None` for finite tables.
    pub fn new(map: &'a SelfMap) -> Option<Self> {
        let d = map.as_nat()?;
        let dynamics = ResidueDynamics::new(d);
        let m = d.modulus();
        let c = d.step_bound();
        let period = dynamics
            .cycles()
            .iter()
            .filter(|cy| cy.drift != 0)
            .fold(m, |acc, cy| acc.lcm(&cy.drift.unsigned_abs()));
        let threshold = d.prefix_len() + 2 * m * c;
        let window = threshold.max(d.prefix_max()) + 2 * m * c + 2 * period + 2 * c;
        Some(NatStructure {
            map,
            d,
            dynamics,
            oracle: OrbitOracle::new(map),
            window,
            fates: HashMap::new(),
        })
    }

    /// Every structural pattern of the map shows up in `[0, window]`.
    pub fn window(&self) -> Point {
        self.window
    }

    pub fn dynamics(&self) -> &ResidueDynamics {
        &self.dynamics
    }

    /// Whether the orbit of `x` is infinite.
    pub fn is_infinite(&mut self, x: Point) -> Result<bool, MapError> {
        if let Some(&f) = self.fates.get(&x) {
            return Ok(f);
        }
        let o = self.oracle.orbit(x)?;
        let inf = !o.is_finite();
        let pts = match o {
            OrbitResult::Finite { mut tail, cycle } => {
                tail.extend(cycle);
                tail
            }
            OrbitResult::Infinite { transient, .. } => transient,
        };
        for p in pts {
            self.fates.insert(p, inf);
        }
        self.fates.insert(x, inf);
        Ok(inf)
    }

    pub fn has_infinite_orbits(&self) -> bool {
        self.dynamics.positive_cycles().next().is_some()
    }

    pub fn has_finite_orbits(&mut self) -> Result<bool, MapError> {
        for x in 0..=self.window {
            if !self.is_infinite(x)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    pub fn has_level_residue_cycle(&self) -> bool {
        self.dynamics.cycles().iter().any(|c| c.drift == 0)
    }

    /// All `x` with `φ(x) = z`.
    pub fn preimages(&self, z: Point) -> Vec<Point> {
        let n = self.d.prefix_len();
        let c = self.d.step_bound();
        let mut out: Vec<Point> = (0..n).filter(|&x| self.d.prefix()[x as usize] == z).collect();
        let lo = n.max(z.saturating_sub(c));
        out.extend((lo..=z + c).filter(|&x| self.d.eval(x) == Ok(z)));
        out
    }

    /// No point of an infinite orbit has two preimages.
    pub fn injective_on_infinite(&mut self) -> Result<bool, MapError> {
        for z in 0..=self.window {
            if self.preimages(z).len() >= 2 && self.is_infinite(z)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Whether the orbit reachability order is total on the points in scope.
    pub fn is_total(&mut self, infinite_only: bool) -> Result<bool, MapError> {
        let inf = self.has_infinite_orbits();
        if inf {
            if !infinite_only && self.has_finite_orbits()? {
                return Ok(false);
            }
            return Ok(crate::orbit::check_p_tilde(self.map) && self.injective_on_infinite()?);
        }
        if infinite_only {
            return Ok(true);
        }
        if self.has_level_residue_cycle() {
            // deep points on a level residue cycle sit on infinitely many cycles
            return Ok(false);
        }
        self.single_chain_into_one_cycle()
    }

    fn single_chain_into_one_cycle(&mut self) -> Result<bool, MapError> {
        let mut cycles = BTreeSet::new();
        let mut on_cycle = BTreeSet::new();
        for x in 0..=self.window {
            if let OrbitResult::Finite { cycle, .. } = self.oracle.orbit(x)? {
                cycles.insert(*cycle.iter().min().unwrap());
                on_cycle.extend(cycle);
            }
        }
        if cycles.len() != 1 {
            return Ok(false);
        }
        let mut entering = 0;
        for z in 0..=self.window {
            let off = self.preimages(z).into_iter().filter(|p| !on_cycle.contains(p)).count();
            if on_cycle.contains(&z) {
                entering += off;
            } else if off > 1 {
                return Ok(false);
            }
        }
        Ok(entering <= 1)
    }

    /// The point whose orbit is the whole of ℕ, if any.
    pub fn full_orbit_start(&mut self) -> Result<Option<Point>, MapError> {
        if !self.has_infinite_orbits() || !self.is_total(false)? {
            return Ok(None);
        }
        Ok((0..=self.window).find(|&z| self.preimages(z).is_empty()))
    }
}
