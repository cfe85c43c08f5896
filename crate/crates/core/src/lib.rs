//! Effective one-dimensional diffusion in narrow channels swept along
//! space curves.
//!
//! A channel is a planar section carried along an arc-length curve by the
//! Frenet frame, optionally twisted and offset. The crate computes the
//! effective coefficient `𝒟(u)` and volume density `ω(u)` of the reduced
//! Fick-Jacobs equation, integrates that equation, and checks the reduction
//! against reflected Brownian motion in the full 3D region.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the scalar to `f64` or `f32`.

pub mod brownian;
pub mod channel;
pub mod curve;
pub mod deff;
pub mod error;
pub mod quadrature;
pub mod scalar;
pub mod section;
pub mod solver;
pub mod vec3;

pub use channel::{principal_axes, ChannelSpec, MomentSummary};
pub use curve::{focal_distance, CurveKind, CurveSpec, FrameSample};
pub use deff::{
    deff_ellipse_closed, deff_focal, deff_profile, deff_quadrature, deff_rectangle_closed, deff_second_order, deff_series,
    linspace, volume, volume_density, DeffMethod, DeffProfile,
};
pub use error::{Error, Result};
pub use quadrature::QuadOptions;
pub use scalar::Real;
pub use section::{matched_parameters, CustomSection, MatchedParameters, Polynomial, SectionMap, SectionShape, TwistOffset};
pub use vec3::Vec3;

pub type Channel = ChannelSpec<f64>;
pub type Channel32 = ChannelSpec<f32>;
pub type Curve = CurveSpec<f64>;
pub type Curve32 = CurveSpec<f32>;
pub type Section = SectionMap<f64>;
pub type Section32 = SectionMap<f32>;
pub type Twist = TwistOffset<f64>;
pub type Twist32 = TwistOffset<f32>;
pub type Method = DeffMethod<f64>;
pub type Method32 = DeffMethod<f32>;
