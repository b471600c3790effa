//! Ergospheres, event horizons and characteristic coordinates of stationary
//! analogue metrics.
//!
//! The crate works with a stationary inverse metric `g^{jk}(x)` in 2+1
//! dimensions (signature `+ − −`). From it:
//!
//! - [`ergosphere`] traces the curve `Δ(x) = det[g^{jk}]_{j,k≥1} = 0` and
//!   classifies it as characteristic (Schwarzschild type) or not;
//! - [`geodesics`] integrates null bicharacteristics with time as parameter;
//! - [`horizon`] finds the event horizon inside a non-characteristic
//!   ergosphere as a limit cycle of a Poincaré return map;
//! - [`charcoords`] builds collar coordinates on the strip between
//!   ergosphere and horizon, solves for the characteristic functions `S±`
//!   and maps the strip onto a half-plane;
//! - [`axisym`] reduces axisymmetric 3+1 metrics (Kerr) to the meridional
//!   plane.
//!
//! ```
//! use horizon_lab::metric::builtin::acoustic_vortex;
//! use horizon_lab::ergosphere::{trace_ergosphere, Classification};
//!
//! let m = acoustic_vortex(-1.0, 1.0).unwrap();
//! let curve = trace_ergosphere(&m, [0.1, 0.0], 64, 1e-12).unwrap();
//! assert_eq!(curve.classification, Classification::NonCharacteristic);
//! ```

pub mod axisym;
pub mod charcoords;
pub mod dual;
pub mod ergosphere;
pub mod export;
pub mod expr;
pub mod geodesics;
pub mod horizon;
pub mod metric;
pub mod ode;
pub mod roots;

pub use dual::{Dual, Scalar};
pub use metric::{MetricError, Point, SpacetimeMetric};
