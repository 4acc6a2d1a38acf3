//! Time-decoupled flexibility bands for distribution systems with storage.
//!
//! The crate computes per-period intervals of substation power that a
//! distribution system can follow under several aggregation models, and
//! realizes setpoints inside those intervals period by period.

pub mod aggregation;
pub mod cases;
pub mod disaggregation;
pub mod error;
pub mod model;
pub mod oracle;
pub mod polyhedron;
pub mod scenario;
pub mod synth;

pub use aggregation::{
    aggregate, flexibility_index, AggregationResult, Certificate, Envelopes, FlexBand, Limits, Mode, ModelKind, SocBox,
};
pub use error::{Error, Result};
pub use model::{Case, Costs, EssParams, Gen, Line, Load};
pub use disaggregation::{run_rolling, DispatchLog, Objective, PeriodRecord, RollingState, Strategy};
