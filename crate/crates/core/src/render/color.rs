use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// 8-bit sRGB color, written as `#RRGGBB`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Color {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Color {
    pub const fn rgb(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b }
    }

    /// Channel-wise linear interpolation, `t` clamped to `[0, 1]`.
    pub fn lerp(self, other: Color, t: f64) -> Color {
        let t = t.clamp(0.0, 1.0);
        let mix = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * t).round() as u8;
        Color::rgb(
            mix(self.r, other.r),
            mix(self.g, other.g),
            mix(self.b, other.b),
        )
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02X}{:02X}{:02X}", self.r, self.g, self.b)
    }
}

// R color names that appear in the plotting defaults, plus a few common ones.
const NAMED: &[(&str, Color)] = &[
    ("black", Color::rgb(0, 0, 0)),
    ("white", Color::rgb(255, 255, 255)),
    ("seagreen3", Color::rgb(0x43, 0xCD, 0x80)),
    ("seagreen", Color::rgb(0x2E, 0x8B, 0x57)),
    ("chocolate", Color::rgb(0xD2, 0x69, 0x1E)),
    ("grey40", Color::rgb(0x66, 0x66, 0x66)),
    ("gray40", Color::rgb(0x66, 0x66, 0x66)),
    ("grey", Color::rgb(0xBE, 0xBE, 0xBE)),
    ("gray", Color::rgb(0xBE, 0xBE, 0xBE)),
    ("red", Color::rgb(255, 0, 0)),
    ("green", Color::rgb(0, 255, 0)),
    ("blue", Color::rgb(0, 0, 255)),
    ("yellow", Color::rgb(255, 255, 0)),
    ("orange", Color::rgb(255, 0xA5, 0)),
    ("purple", Color::rgb(0xA0, 0x20, 0xF0)),
    ("steelblue", Color::rgb(0x46, 0x82, 0xB4)),
    ("firebrick", Color::rgb(0xB2, 0x22, 0x22)),
];

impl FromStr for Color {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(hex) = s.strip_prefix('#') {
            let digits: Vec<u8> = hex
                .chars()
                .map(|c| c.to_digit(16).map(|d| d as u8))
                .collect::<Option<_>>()
                .ok_or_else(|| Error::Color(s.to_string()))?;
            return match digits.as_slice() {
                [r, g, b] => Ok(Color::rgb(r * 17, g * 17, b * 17)),
                [r1, r2, g1, g2, b1, b2] => {
                    Ok(Color::rgb(r1 * 16 + r2, g1 * 16 + g2, b1 * 16 + b2))
                }
                _ => Err(Error::Color(s.to_string())),
            };
        }
        let lower = s.to_ascii_lowercase();
        NAMED
            .iter()
            .find(|(name, _)| *name == lower)
            .map(|&(_, c)| c)
            .ok_or_else(|| Error::Color(s.to_string()))
    }
}

impl Serialize for Color {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Color {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Three-anchor color scale; positions run from 0 (low) through 0.5 (mid)
/// to 1 (high).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergingScale {
    pub low: Color,
    pub mid: Color,
    pub high: Color,
}

impl DivergingScale {
    pub fn color_at(&self, t: f64) -> Color {
        if t <= 0.5 {
            self.low.lerp(self.mid, t / 0.5)
        } else {
            self.mid.lerp(self.high, (t - 0.5) / 0.5)
        }
    }
}

/// Position of `value` on a diverging scale centred at `midpoint`, where the
/// largest deviation `span` maps to the scale's end.
pub fn diverging_position(value: f64, midpoint: f64, span: f64) -> f64 {
    if span <= 0.0 || !span.is_finite() {
        return 0.5;
    }
    (0.5 + (value - midpoint) / (2.0 * span)).clamp(0.0, 1.0)
}
