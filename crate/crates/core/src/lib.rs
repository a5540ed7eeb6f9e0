//! Rényi functions and multifractal spectra of random measures on the sphere.
//!
//! The crate covers the whole pipeline: closed-form model curves
//! ([`models`]), cascade simulation on a HEALPix grid ([`cascade`]),
//! empirical estimation from pixel maps ([`estimator`]) and least-squares
//! fitting of the model families ([`fitting`]). [`io`] holds the map and
//! result file formats, and [`cli`] the command-line front end.

pub mod acceptance;
pub mod cascade;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod fitting;
pub mod io;
pub mod models;
pub mod specfun;
pub mod sphere;

mod float_serde;

pub use error::{Error, Result};
