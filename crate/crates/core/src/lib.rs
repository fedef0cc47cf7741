//! Toy models of crypto-market structure.
//!
//! * [`powerlaw`]: rank-size and tail exponent estimation, dimension back-out,
//!   partial sums of the implied total capitalisation.
//! * [`impact`]: square-root impact for order-book venues, constant-product
//!   pools, the impact-exponent probe and triangle round trips.
//! * [`kelly`]: single and multi-asset Kelly fractions, drift/volatility
//!   estimation and horizon arithmetic.
//! * [`sim`]: a seeded agent-based market built from the pieces above.
//! * [`data`]: CSV/JSON ingestion and result serialization.
//! * [`synth`]: seeded synthetic fixtures.

// `!(x > 0.0)` is how NaN gets rejected alongside non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod impact;
pub mod kelly;
pub mod powerlaw;
pub mod sim;
pub mod synth;

mod numeric;

pub use error::{Error, Result};
pub use impact::{CfmmPool, Quote, SqrtImpactModel, Venue, VenueModel};
pub use kelly::{CovStats, PriceSeries, ReturnStats};
pub use powerlaw::{BinnedSeriesFit, PowerLawFit, RankSizeSample};
pub use sim::{AgentSpec, SimConfig, SimResult, TokenSpec};
