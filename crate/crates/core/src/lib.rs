//! Constrained size-and-shape analysis.
//!
//! Landmark configurations are multicentred ([`mucen`]), mapped to polypolar
//! or simplex polypolar coordinates ([`polypolar`], [`simplex`]), summarised
//! with directional statistics ([`dirstats`]) and modelled with the cone and
//! Fisher densities in [`distributions`]. [`modehunt`] implements parametric
//! mode hunting on the circle for very small clusters and [`batcoords`] the
//! Bookstein-type 3-D form coordinates.

pub mod specfun;
pub mod mucen;
pub mod polypolar;
pub mod simplex;
pub mod batcoords;
pub mod dirstats;
pub mod distributions;
pub mod modehunt;
