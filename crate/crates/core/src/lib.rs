//! Forward orbits of self-maps, quasi-invariant sets, and the problem of
//! preserving finite invariant supersets up to one removed point.
//!
//! Maps live on a finite domain `[0, n)` or on ℕ; maps on ℕ are described by a
//! finite prefix table followed by a residue-periodic shift rule.

pub mod classifier;
pub mod cli;
pub mod oracle;
pub mod orbit;
pub mod psolver;
pub mod quasi_invariance;
pub mod selfmap;
pub mod structure;
pub mod superset;

pub use selfmap::{DescribedNatMap, FiniteTable, Interval, MapError, Point, PointSet, SelfMap};
