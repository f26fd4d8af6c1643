//! Mark summary characteristics for point patterns on linear networks whose
//! points carry function-valued marks.
//!
//! The crate covers the whole pipeline: network construction and
//! shortest-path distances ([`netgeom`]), functional marks and their moment
//! fields ([`marks`]), the catalogue of pointwise test functions
//! ([`testfun`]), kernel ratio estimation of the pointwise and global
//! summaries ([`estim`]), simulation of Poisson patterns with structured
//! marks ([`sim`]), random-labelling global envelope tests ([`envel`]) and
//! file input/output ([`dataio`]).

// `!(x > 0.0)` style checks deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataio;
pub mod envel;
pub mod error;
pub mod estim;
pub mod marks;
pub mod netgeom;
pub mod rng;
pub mod sim;
pub mod testfun;

pub use error::{Error, Result};
