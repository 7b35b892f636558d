//! Fixed-point SPT wavefunctions, measurement-assisted gauging, twisted
//! quantum double / SET parent Hamiltonians, and symmetry-fractionalization
//! probes for finite solvable groups on triangulated tori.

pub mod cohomology;
pub mod eigen;
pub mod gauging;
pub mod groups;
pub mod hamiltonians;
pub mod lattice;
pub mod modsolve;
pub mod phase;
pub mod qstate;
pub mod series;
pub mod setprobe;

pub use cohomology::{builtin_cocycle, Cocycle3, CocycleSpec};
pub use groups::{build_group, build_group_str, Elt, FiniteGroup, GroupSpec, Subgroup};
pub use lattice::TriLattice;
pub use phase::PhaseExponent;
pub use qstate::SparseState;
pub use series::{GroupRef, NormalSeries, SeriesStrategy};
