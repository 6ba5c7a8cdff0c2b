//! NIPS and N-PASS score arithmetic and the binary pain label.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PainLabel {
    NoPain,
    Pain,
}

impl PainLabel {
    pub fn from_probability(p: f64) -> Self {
        if p >= 0.5 {
            PainLabel::Pain
        } else {
            PainLabel::NoPain
        }
    }

    pub fn is_pain(self) -> bool {
        self == PainLabel::Pain
    }
}

/// Ordered from most sedated to most painful.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PainLevel {
    DeepSedation,
    LightSedation,
    NoPain,
    ModeratePain,
    SeverePain,
}

/// Neonatal Infant Pain Scale components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NipsScore {
    pub facial_expression: u8,
    pub cry: u8,
    pub breathing: u8,
    pub arms: u8,
    pub legs: u8,
    pub arousal: u8,
}

impl NipsScore {
    pub fn new(facial_expression: u8, cry: u8, breathing: u8, arms: u8, legs: u8, arousal: u8) -> Result<Self> {
        let binary = [facial_expression, breathing, arms, legs, arousal];
        if binary.iter().any(|&v| v > 1) || cry > 2 {
            return Err(Error::contract("NIPS components are 0-1 except cry (0-2)"));
        }
        Ok(NipsScore {
            facial_expression,
            cry,
            breathing,
            arms,
            legs,
            arousal,
        })
    }

    pub fn from_components(c: &[i32]) -> Result<Self> {
        let [f, c, b, a, l, r] = c else {
            return Err(Error::contract(format!("NIPS has 6 components, got {}", c.len())));
        };
        let u = |v: &i32| u8::try_from(*v).map_err(|_| Error::contract(format!("negative NIPS component {v}")));
        NipsScore::new(u(f)?, u(c)?, u(b)?, u(a)?, u(l)?, u(r)?)
    }

    pub fn components(&self) -> [i32; 6] {
        [
            self.facial_expression,
            self.cry,
            self.breathing,
            self.arms,
            self.legs,
            self.arousal,
        ]
        .map(i32::from)
    }

    pub fn total(&self) -> i32 {
        self.components().iter().sum()
    }
}

/// N-PASS: five indicators, each -2..=2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NpassScore {
    pub indicators: [i8; 5],
}

impl NpassScore {
    pub fn new(indicators: [i8; 5]) -> Result<Self> {
        if indicators.iter().any(|v| !(-2..=2).contains(v)) {
            return Err(Error::contract("N-PASS indicators range over -2..=2"));
        }
        Ok(NpassScore { indicators })
    }

    pub fn from_components(c: &[i32]) -> Result<Self> {
        let arr: [i32; 5] = c
            .try_into()
            .map_err(|_| Error::contract(format!("N-PASS has 5 components, got {}", c.len())))?;
        let mut out = [0i8; 5];
        for (o, v) in out.iter_mut().zip(arr) {
            *o = i8::try_from(v).map_err(|_| Error::contract(format!("N-PASS component {v} out of range")))?;
        }
        NpassScore::new(out)
    }

    pub fn components(&self) -> [i32; 5] {
        self.indicators.map(i32::from)
    }

    pub fn total(&self) -> i32 {
        self.components().iter().sum()
    }
}

/// 0-2 no pain, 3-4 moderate, 5-7 severe.
pub fn nips_level(total: i32) -> Result<PainLevel> {
    match total {
        0..=2 => Ok(PainLevel::NoPain),
        3..=4 => Ok(PainLevel::ModeratePain),
        5..=7 => Ok(PainLevel::SeverePain),
        _ => Err(Error::contract(format!("NIPS total {total} outside 0..=7"))),
    }
}

/// Deep sedation -10..=-5, light sedation -4..=-1, normal 0..=2,
/// moderate 3..=5, severe 6..=10.
pub fn npass_level(total: i32) -> Result<PainLevel> {
    match total {
        -10..=-5 => Ok(PainLevel::DeepSedation),
        -4..=-1 => Ok(PainLevel::LightSedation),
        0..=2 => Ok(PainLevel::NoPain),
        3..=5 => Ok(PainLevel::ModeratePain),
        6..=10 => Ok(PainLevel::SeverePain),
        _ => Err(Error::contract(format!("N-PASS total {total} outside -10..=10"))),
    }
}

/// Sedation levels have no binary label and are excluded (`None`).
pub fn binarize(level: PainLevel) -> Option<PainLabel> {
    match level {
        PainLevel::DeepSedation | PainLevel::LightSedation => None,
        PainLevel::NoPain => Some(PainLabel::NoPain),
        PainLevel::ModeratePain | PainLevel::SeverePain => Some(PainLabel::Pain),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scale {
    #[serde(rename = "NIPS")]
    Nips,
    #[serde(rename = "NPASS")]
    Npass,
}

impl Scale {
    pub fn level(self, total: i32) -> Result<PainLevel> {
        match self {
            Scale::Nips => nips_level(total),
            Scale::Npass => npass_level(total),
        }
    }

    /// Checks component ranges and count.
    pub fn check_components(self, components: &[i32]) -> Result<i32> {
        match self {
            Scale::Nips => NipsScore::from_components(components).map(|s| s.total()),
            Scale::Npass => NpassScore::from_components(components).map(|s| s.total()),
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Nips => "NIPS",
            Scale::Npass => "NPASS",
        })
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "").as_str() {
            "NIPS" => Ok(Scale::Nips),
            "NPASS" => Ok(Scale::Npass),
            _ => Err(Error::data(format!("unknown scale {s:?}"))),
        }
    }
}
