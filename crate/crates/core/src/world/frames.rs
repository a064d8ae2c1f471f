use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::Pose2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameId {
    Map,
    Odom,
    BaseLink,
    ImuLink,
    LidarLink,
    GnssLink,
}

impl FrameId {
    pub const ALL: [FrameId; 6] = [
        FrameId::Map,
        FrameId::Odom,
        FrameId::BaseLink,
        FrameId::ImuLink,
        FrameId::LidarLink,
        FrameId::GnssLink,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FrameId::Map => "map",
            FrameId::Odom => "odom",
            FrameId::BaseLink => "base_link",
            FrameId::ImuLink => "imu_link",
            FrameId::LidarLink => "lidar_link",
            FrameId::GnssLink => "gnss_link",
        }
    }

    pub fn parent(self) -> Option<FrameId> {
        match self {
            FrameId::Map => None,
            FrameId::Odom => Some(FrameId::Map),
            FrameId::BaseLink => Some(FrameId::Odom),
            FrameId::ImuLink | FrameId::LidarLink | FrameId::GnssLink => Some(FrameId::BaseLink),
        }
    }
}

impl fmt::Display for FrameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FrameId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FrameId::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownFrame(s.to_string()))
    }
}

/// Planar frame tree rooted at `map`:
///
/// ```text
/// map -> odom -> base_link -> { imu_link, lidar_link, gnss_link }
/// ```
///
/// Each edge stores the child's pose in its parent. `map -> odom` stays the
/// identity unless a global correction is injected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformTree {
    pub map_to_odom: Pose2,
    pub odom_to_base: Pose2,
    pub base_to_imu: Pose2,
    pub base_to_lidar: Pose2,
    pub base_to_gnss: Pose2,
}

impl Default for TransformTree {
    fn default() -> Self {
        Self {
            map_to_odom: Pose2::IDENTITY,
            odom_to_base: Pose2::IDENTITY,
            base_to_imu: Pose2::IDENTITY,
            base_to_lidar: Pose2::new(1.2, 0.0, 0.0),
            base_to_gnss: Pose2::new(0.3, 0.0, 0.0),
        }
    }
}

impl TransformTree {
    /// Pose of `frame` in its parent; identity for the root.
    pub fn edge(&self, frame: FrameId) -> Pose2 {
        match frame {
            FrameId::Map => Pose2::IDENTITY,
            FrameId::Odom => self.map_to_odom,
            FrameId::BaseLink => self.odom_to_base,
            FrameId::ImuLink => self.base_to_imu,
            FrameId::LidarLink => self.base_to_lidar,
            FrameId::GnssLink => self.base_to_gnss,
        }
    }

    /// Pose of `frame` in `map`, composed along the path to the root.
    pub fn pose_in_map(&self, frame: FrameId) -> Pose2 {
        match frame.parent() {
            None => Pose2::IDENTITY,
            Some(parent) => self.pose_in_map(parent).compose(self.edge(frame)),
        }
    }

    pub fn with_base_pose(mut self, odom_to_base: Pose2) -> Self {
        self.odom_to_base = odom_to_base;
        self
    }
}

/// Transform mapping coordinates expressed in `from` into `to`.
pub fn lookup_transform(tree: &TransformTree, from: &str, to: &str) -> Result<Pose2> {
    let from: FrameId = from.parse()?;
    let to: FrameId = to.parse()?;
    Ok(lookup(tree, from, to))
}

pub(crate) fn lookup(tree: &TransformTree, from: FrameId, to: FrameId) -> Pose2 {
    if from == to {
        return Pose2::IDENTITY;
    }
    tree.pose_in_map(to)
        .inverse()
        .compose(tree.pose_in_map(from))
}

impl TransformTree {
    pub fn lookup(&self, from: FrameId, to: FrameId) -> Pose2 {
        lookup(self, from, to)
    }
}
