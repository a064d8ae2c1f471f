use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;

/// Cone class label. Integer codes are part of the file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
#[repr(u8)]
pub enum ConeColor {
    Orange = 0,
    Yellow = 1,
    Blue = 2,
    LargeOrange = 3,
    Unknown = 4,
}

impl ConeColor {
    pub const ALL: [ConeColor; 5] = [
        ConeColor::Orange,
        ConeColor::Yellow,
        ConeColor::Blue,
        ConeColor::LargeOrange,
        ConeColor::Unknown,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_known(self) -> bool {
        self != ConeColor::Unknown
    }
}

impl From<ConeColor> for u8 {
    fn from(c: ConeColor) -> u8 {
        c.code()
    }
}

impl TryFrom<u8> for ConeColor {
    type Error = String;
    fn try_from(code: u8) -> Result<Self, Self::Error> {
        ConeColor::from_code(code).ok_or_else(|| format!("invalid cone color code {code}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    #[serde(flatten)]
    pub position: Vec2,
    pub color: ConeColor,
}

impl Cone {
    pub fn new(position: Vec2, color: ConeColor) -> Self {
        Self { position, color }
    }
}

/// Cylinder approximation of a cone body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeDimensions {
    pub radius: f64,
    pub height: f64,
}

impl ConeDimensions {
    pub const SMALL: ConeDimensions = ConeDimensions {
        radius: 0.15,
        height: 0.325,
    };
    pub const LARGE: ConeDimensions = ConeDimensions {
        radius: 0.2,
        height: 0.5,
    };

    pub fn for_color(color: ConeColor) -> Self {
        match color {
            ConeColor::LargeOrange => Self::LARGE,
            _ => Self::SMALL,
        }
    }
}
