//! Stochastic non-tâtonnement trade in pure-exchange economies.
//!
//! Households with Cobb-Douglas or CES preferences trade along straight lines
//! at randomly drawn common prices until no mutually beneficial trade at a
//! common price remains. The crate provides the closed-form demand systems
//! ([`prefs`]), the flat-domain geometry of demand ([`geometry`]), trade
//! compatibility and speed sets ([`trade`]), the Monte Carlo engine
//! ([`engine`]), a numeric falsification harness ([`verify`]) and the
//! command-line layer ([`cli`]).

pub mod cli;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod lp;
pub mod numdiff;
pub mod prefs;
pub mod rng;
pub mod trade;
pub mod verify;

pub use error::{Error, Result};
pub use prefs::{Bundle, ExpTransform, PriceVector, Utility, UtilitySpec};
pub use trade::{Allocation, Economy, Household, SpeedPrior, SpeedVector};
