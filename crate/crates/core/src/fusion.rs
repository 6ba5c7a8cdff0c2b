//! Decision-level fusion by unweighted majority vote.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scales::PainLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Indicator {
    Face,
    Body,
    Sound,
    /// Output of [`fuse`].
    Fused,
}

impl Indicator {
    pub const MODALITIES: [Indicator; 3] = [Indicator::Face, Indicator::Body, Indicator::Sound];

    pub fn as_str(self) -> &'static str {
        match self {
            Indicator::Face => "face",
            Indicator::Body => "body",
            Indicator::Sound => "sound",
            Indicator::Fused => "fused",
        }
    }

    /// One-letter tag used in combination names (`F+B+S`).
    pub fn letter(self) -> char {
        match self {
            Indicator::Face => 'F',
            Indicator::Body => 'B',
            Indicator::Sound => 'S',
            Indicator::Fused => 'M',
        }
    }
}

impl fmt::Display for Indicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Indicator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "face" => Ok(Indicator::Face),
            "body" => Ok(Indicator::Body),
            "sound" => Ok(Indicator::Sound),
            "fused" => Ok(Indicator::Fused),
            _ => Err(Error::Config(format!("unknown indicator {s:?} (face, body, sound)"))),
        }
    }
}

/// One modality's verdict on one segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicatorDecision {
    pub indicator: Indicator,
    pub label: PainLabel,
    pub pain_probability: f64,
}

impl IndicatorDecision {
    /// Labels at the 0.5 threshold (inclusive for pain).
    pub fn new(indicator: Indicator, pain_probability: f64) -> Self {
        IndicatorDecision {
            indicator,
            label: PainLabel::from_probability(pain_probability),
            pain_probability,
        }
    }

    /// Probability of the side this decision voted for.
    pub fn confidence(&self) -> f64 {
        match self.label {
            PainLabel::Pain => self.pain_probability,
            PainLabel::NoPain => 1.0 - self.pain_probability,
        }
    }
}

/// Majority vote over the present decisions.
///
/// A tied vote goes to the side holding the single most confident
/// decision; if both sides are equally confident the mean pain probability
/// decides at 0.5. The fused probability is always the mean pain
/// probability of the present decisions, so a tie-broken label can sit on
/// the other side of 0.5 from it.
pub fn fuse(decisions: &[Option<IndicatorDecision>]) -> Result<IndicatorDecision> {
    let present: Vec<&IndicatorDecision> = decisions.iter().flatten().collect();
    if present.is_empty() {
        return Err(Error::NoDecision);
    }
    let mean = present.iter().map(|d| d.pain_probability).sum::<f64>() / present.len() as f64;
    let pain = present.iter().filter(|d| d.label.is_pain()).count();
    let no_pain = present.len() - pain;
    let label = match pain.cmp(&no_pain) {
        std::cmp::Ordering::Greater => PainLabel::Pain,
        std::cmp::Ordering::Less => PainLabel::NoPain,
        std::cmp::Ordering::Equal => {
            let top = |side: PainLabel| {
                present
                    .iter()
                    .filter(|d| d.label == side)
                    .map(|d| d.confidence())
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            let (p, n) = (top(PainLabel::Pain), top(PainLabel::NoPain));
            if p > n {
                PainLabel::Pain
            } else if n > p {
                PainLabel::NoPain
            } else {
                PainLabel::from_probability(mean)
            }
        }
    };
    Ok(IndicatorDecision {
        indicator: Indicator::Fused,
        label,
        pain_probability: mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(ind: Indicator, p: f64) -> Option<IndicatorDecision> {
        Some(IndicatorDecision::new(ind, p))
    }

    #[test]
    fn examples() {
        let f = fuse(&[
            d(Indicator::Face, 0.9),
            d(Indicator::Body, 0.7),
            d(Indicator::Sound, 0.1),
        ])
        .unwrap();
        assert_eq!(f.label, PainLabel::Pain);
        let f = fuse(&[d(Indicator::Face, 0.9), d(Indicator::Body, 0.4)]).unwrap();
        assert_eq!(f.label, PainLabel::Pain);
        let f = fuse(&[d(Indicator::Face, 0.8), None, None]).unwrap();
        assert_eq!((f.label, f.pain_probability), (PainLabel::Pain, 0.8));
        assert!(matches!(fuse(&[None, None]), Err(Error::NoDecision)));
    }

    #[test]
    fn tie_can_disagree_with_mean() {
        // pain side 0.55 vs no-pain side 0.6 confident: no-pain wins, mean 0.475
        let f = fuse(&[d(Indicator::Face, 0.55), d(Indicator::Sound, 0.4)]).unwrap();
        assert_eq!(f.label, PainLabel::NoPain);
        let f = fuse(&[d(Indicator::Face, 0.9), d(Indicator::Sound, 0.3)]).unwrap();
        assert_eq!(f.label, PainLabel::Pain);
        assert!((f.pain_probability - 0.6).abs() < 1e-12);
    }

    #[test]
    fn boundary_is_pain() {
        assert_eq!(IndicatorDecision::new(Indicator::Body, 0.5).label, PainLabel::Pain);
    }
}
