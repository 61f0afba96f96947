//! Sampled genealogies of a supercritical birth-death process with
//! mutations at birth events.
//!
//! Three generators produce the genealogy of a uniform sample of size `n`
//! taken at time `T`:
//!
//! * [`forward`]: exact Gillespie simulation of the whole population,
//! * [`contour`]: the truncated tree's contour process, simulated as a
//!   Lévy process with drift `-1` and truncated exponential jumps,
//! * [`coalescent`]: backward construction of the sampled tree from the
//!   sampling probability and i.i.d. branch lengths, with mutational
//!   events placed by Poisson thinning.
//!
//! [`sfsstats`] turns a sampled genealogy into its site frequency spectrum,
//! [`approx`] holds the large-`n` approximation of the coalescent, and
//! [`harness`] runs the Monte Carlo and quadrature experiments behind the
//! `bdsfs` command line tool.

pub mod approx;
pub mod bdmath;
pub mod coalescent;
pub mod contour;
mod error;
pub mod forward;
pub mod harness;
pub mod sfsstats;
pub mod streams;

pub use bdmath::{RateParams, SamplingFrame};
pub use error::{Error, Result};
