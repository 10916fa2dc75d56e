//! Ellipsoid geometry and the statistical methods built on it.

pub mod bbox;
pub mod dist;
pub mod error;
pub mod fixtures;
pub mod gellipsoid;
pub mod kissing;
pub mod linmod;
pub mod mlm;
pub mod numkernel;
pub mod render;
pub mod statellipse;
pub mod table;

pub use error::{EllipError, Result};
pub use gellipsoid::{Containment, GEllipsoid, Signature};
