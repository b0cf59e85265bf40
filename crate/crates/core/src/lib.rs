//! Partial metrics, G-metrics and GP-metrics on finite universes.
//!
//! The crate provides table- or rule-backed carriers for the three
//! structures, exhaustive axiom validators, the transforms between the
//! structures (`G_p`, `p^s`, `d_G`, `p_GP`, `G_GP`), finite-prefix Cauchy and
//! convergence certificates, and fixed-point hypothesis checkers with
//! Picard and Caristi-descent solvers.

pub mod carrier;
pub mod convergence;
pub mod document;
pub mod error;
pub mod example_spaces;
pub mod fixed_point;
pub mod maps;
pub mod numeric;
pub mod transforms;
pub mod universe;
pub mod validate;

pub use carrier::{Carrier, GMetric, GPMetric, PartialMetric, StructureKind, TransformRecord};
pub use error::{Error, Result};
pub use maps::{ContractionGauge, PairPotential, PointPotential, SelfMap, SequenceTrace};
pub use numeric::{NumericMode, NumericPolicy, Rational, Scalar};
pub use universe::{Grid, Point, PointUniverse, UniverseKind};
