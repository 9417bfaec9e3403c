//! Distributions in the domain of geometric partial attraction of semistable
//! laws, at desk scale: exact log-periodic tails, characteristic functions,
//! semistable densities by Fourier inversion, local limit theorem error
//! metrics, and strong renewal theorem residuals.

pub mod charfn;
pub mod density;
pub mod dists;
pub mod renewal;
pub mod error;
pub mod model;

mod fftconv;
mod quad;
mod special;
mod spline;

pub use error::{Error, Result};
