#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Closed-loop simulation of a driverless cone-track racing stack.
//!
//! Synthetic sensors observe a procedurally generated cone circuit; the
//! perception, fusion, localization, mapping, planning and control layers
//! then drive a kinematic bicycle around it. Every run is a pure function
//! of its [`harness::ScenarioConfig`] and seed.
//!
//! Module map, in pipeline order:
//!
//! - [`world`]: ground truth (track layout, frame tree, vehicle plant)
//! - [`sensors`]: LiDAR, camera, GNSS and IMU synthesis
//! - [`perception`]: ground band filter, DBSCAN, cluster validation,
//!   multi-frame tracking, camera depth refinement
//! - [`fusion`]: LiDAR/camera association and confidence-weighted fusion
//! - [`localization`]: navsat projection and the GNSS+IMU EKF
//! - [`mapping`]: persistent cone map
//! - [`planning`]: boundary split, midpoint path, Pure Pursuit
//! - [`control`]: PID speed regulation and speed scheduling
//! - [`harness`]: scenario config, tick scheduler, telemetry and metrics

pub mod control;
pub mod error;
pub mod fusion;
pub mod geometry;
pub mod harness;
pub mod localization;
pub mod mapping;
pub mod perception;
pub mod planning;
pub mod rng;
pub mod sensors;
pub mod world;

pub use error::{Error, Result};
pub use geometry::{normalize_angle, Pose2, Vec2};
