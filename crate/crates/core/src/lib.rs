//! Human-perception data model, transport, kinematics and person tracking.

pub mod bus;
pub mod conformance;
pub mod kinematics;
pub mod model;
pub mod person;
pub mod pipeline;
pub mod sim;
pub mod tf;
pub mod time;

pub use model::*;
pub use time::Stamp;
