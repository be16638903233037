//! Ball-localized pressure expansion for non-decaying incompressible flows,
//! drift extraction and removal, and decay-condition diagnostics.

pub mod error;
pub mod fields;
pub mod geom;
pub mod io;
pub mod kernels;
pub mod bump;
pub mod decay;
pub mod drift;
pub mod pressure;
pub mod quad;
pub mod special;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use geom::{Sym3, Vec3};
pub use kernels::{BallSpec, CutoffSpec};
