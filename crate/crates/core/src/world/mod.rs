//! Ground truth: cone layout, frame tree and the vehicle plant.

mod cone;
mod frames;
mod track;
mod vehicle;

pub use cone::{Cone, ConeColor, ConeDimensions};
pub use frames::{lookup_transform, FrameId, TransformTree};
pub use track::{
    generate_track, TrackLayout, TrackProjection, TrackProjector, TrackShape, TrackSpec,
};
pub use vehicle::{step_vehicle, ControlCommand, VehicleGeometry, VehicleState};
