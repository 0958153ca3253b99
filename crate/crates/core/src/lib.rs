//! Geodesic flows of pseudo-Riemannian metrics that change signature along
//! a curve in the plane.
//!
//! A metric `ds² = a dx² + 2b dxdy + c dy²` degenerates on the discriminant
//! curve `Δ = ac − b² = 0`, separating a Riemannian side (`Δ > 0`) from a
//! Lorentzian side (`Δ < 0`). Geodesics reach the discriminant only along
//! admissible directions, the real roots of a cubic `M(q, p)`. This crate
//!
//! * parses coefficient expressions and differentiates them exactly ([`expr`]);
//! * evaluates pointwise invariants and traces the discriminant ([`metric`]);
//! * classifies discriminant points into the classes C1–C3, Ds, Dn, Df, Z
//!   ([`singular`]);
//! * integrates the lifted geodesic fields, the blow-up field and the
//!   Euler–Lagrange system ([`flow`]);
//! * launches the geodesic families leaving a classified point and fits
//!   their asymptotics ([`families`]);
//! * runs scenario files producing CSV reports and SVG portraits ([`scenario`]).

pub mod expr;
pub mod families;
pub mod flow;
pub mod metric;
pub mod scenario;
pub mod singular;
pub mod verify;

mod error;
mod linalg;

pub use error::{Error, Result};
pub use expr::{parse, Expr, Var};
pub use metric::{CausalType, Direction, Metric, Point, Tolerances};
pub use singular::{classify, ClassTag, PointClassification};
