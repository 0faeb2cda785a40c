//! Gelfand-Zeitlin coordinates, the Ginzburg-Weinstein map and its tropical
//! limit on small Hermitian matrices.

pub mod dual;
pub mod error;
pub mod gw;
pub mod gz;
pub mod lab;
pub mod logspace;
pub mod matrix;
pub mod poisson;
pub mod sampling;
pub mod tropical;

pub use dual::{AnMatrix, ChamberSign, ClusterPoint};
pub use error::{Error, Result};
pub use gw::GwResult;
pub use gz::{AnglePattern, ConeGap, GzPattern, LadderVector};
pub use lab::{ExperimentConfig, Report};
pub use matrix::{ComplexMatrix, HermitianMatrix, C64};
pub use poisson::ScalarField;
pub use sampling::PatternSampler;
pub use tropical::{PlanarNetwork, PositiveLaurentPoly, TropicalPoint, TropicalPoly, Word};
