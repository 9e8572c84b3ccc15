//! Contact-force estimation and PI force control for a pneumatic soft hand.
//!
//! The bend-induced "internal" force of a finger-embedded force sensor is
//! learned as a polynomial in the bend angle ([`calibration`]), subtracted
//! from live readings to estimate the contact force ([`estimation`]), and
//! regulated by a discrete PI controller behind an approach/contact
//! supervisor ([`control`]). A deterministic simulated finger ([`plant`])
//! stands in for hardware, and [`harness`] scripts the grasping and
//! force-control experiments on top of it.

pub mod calibration;
pub mod cli;
pub mod config;
pub mod control;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod plant;

pub use calibration::{CalibrationReport, PolynomialModel, Sample};
pub use config::Config;
pub use control::{DutyCycle, Mode, PiController, Supervisor};
pub use error::{Error, Result};
pub use estimation::{ContactDetector, ContactEstimate, ForceReading, InternalForceModel};
pub use plant::{FingerPlant, ObjectModel, PlantParams};
