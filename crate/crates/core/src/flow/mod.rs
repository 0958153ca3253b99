//! Integration of the lifted geodesic fields, the blow-up field and the
//! Euler–Lagrange system.

pub mod blowup;
pub mod lifted;
pub mod natural;
pub mod rk;

pub use blowup::{
    blowdown, blowup, field_blowup, integrate_blowup, BlowUpEnd, BlowUpField, BlowUpState, BlowUpTrace,
};
pub use lifted::{
    annotate_arrest, field_divided, field_isotropic, field_lifted, integrate, trace_csv, trace_geodesic, Arrest, Bounds, Chart,
    Event, EventKind, FamilyParam, FieldKind, GeodesicTrace, IntegratorConfig, LiftedState, MemberKind, Segment,
    Sense, Termination, Trace, TraceSample, TRACE_HEADER,
};
pub use natural::{el_field, el_integrate, line_restriction, LineRestriction, NaturalState, NaturalTrace};
pub use rk::{DenseStep, Dopri5, RkConfig};
