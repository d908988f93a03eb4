//! Core algorithms for country-aware music listening analytics.
//!
//! The crate ingests user-artist listening events into a sparse playcount
//! matrix and derives from it:
//!
//! * APC/ALC popularity profiles at global, country, and user scope, with
//!   rescaling between scopes ([`popularity`]);
//! * six user-level mainstreaminess measures combining a distribution-based
//!   (normalized symmetrized KL divergence) and a rank-based (Kendall tau-b)
//!   view ([`mainstreaminess`]);
//! * descriptive statistics and the nonparametric tests used in the reports
//!   ([`stats`]);
//! * country-specific popularity outliers along the global rank order
//!   ([`outliers`]);
//! * affinity-propagation clustering of countries by popularity curves
//!   ([`clustering`]);
//! * cross-validated rating-prediction experiments with an implicit-feedback
//!   matrix-factorization recommender ([`recsys`]).
//!
//! Everything is `no_std`-compatible (alloc required); float math goes
//! through libm so results do not depend on the platform's libm. All
//! randomness is seeded and every operation is deterministic.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

#[cfg(feature = "std")]
extern crate std;

pub mod clustering;
pub mod error;
pub mod mainstreaminess;
pub mod math;
pub mod matrix;
pub mod outliers;
pub mod popularity;
pub mod recsys;
pub mod rng;
pub mod stats;
pub mod types;

pub use error::{Error, Result};
pub use types::{ArtistId, CountryCode, UserId};
