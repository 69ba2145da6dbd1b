use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_nonnegative, Error, Result};

/// Tabulated 85Rb 5S1/2(F=3) → 5D5/2(F'=1..5) components, with provenance.
pub const RB85_5D52_TABLE: &str = include_str!("../../config/manifold_85rb_5d52.json");

/// One hyperfine line: its position on the two-photon detuning axis (rad/s)
/// and its relative weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperfineComponent {
    pub offset: f64,
    pub strength: f64,
}

/// On-disk form of a manifold table; offsets are ordinary frequencies in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldTable {
    #[serde(default)]
    pub source: String,
    pub components: Vec<TableEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    #[serde(default)]
    pub label: String,
    pub offset_hz: f64,
    pub strength: f64,
}

impl ManifoldTable {
    pub fn rb85_5d52() -> Self {
        serde_json::from_str(RB85_5D52_TABLE).expect("bundled manifold table is valid JSON")
    }
}

/// Ordered set of hyperfine components with strengths normalised to sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperfineManifold {
    components: Vec<HyperfineComponent>,
}

impl HyperfineManifold {
    /// Sorts by offset and rescales the strengths to unit sum.
    pub fn new(mut components: Vec<HyperfineComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::domain("hyperfine manifold has no components"));
        }
        for c in &components {
            ensure_finite("component offset", c.offset)?;
            ensure_nonnegative("component strength", c.strength)?;
        }
        let total: f64 = components.iter().map(|c| c.strength).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::domain("hyperfine strengths must have a positive finite sum"));
        }
        for c in &mut components {
            c.strength /= total;
        }
        components.sort_by(|a, b| a.offset.total_cmp(&b.offset));
        Ok(Self { components })
    }

    /// A single unit-strength line at `offset`.
    pub fn single(offset: f64) -> Self {
        Self {
            components: vec![HyperfineComponent { offset, strength: 1.0 }],
        }
    }

    pub fn from_table(table: &ManifoldTable) -> Result<Self> {
        Self::new(
            table
                .components
                .iter()
                .map(|e| HyperfineComponent {
                    offset: TAU * e.offset_hz,
                    strength: e.strength,
                })
                .collect(),
        )
    }

    /// The bundled 85Rb 5D5/2 manifold.
    pub fn rb85_5d52() -> Self {
        Self::from_table(&ManifoldTable::rb85_5d52()).expect("bundled manifold table is valid")
    }

    pub fn components(&self) -> &[HyperfineComponent] {
        &self.components
    }

    pub fn min_offset(&self) -> f64 {
        self.components[0].offset
    }

    pub fn max_offset(&self) -> f64 {
        self.components[self.components.len() - 1].offset
    }

    /// Distance between the outermost components, rad/s.
    pub fn span(&self) -> f64 {
        self.max_offset() - self.min_offset()
    }

    /// Strength-weighted mean offset.
    pub fn centroid(&self) -> f64 {
        self.components.iter().map(|c| c.offset * c.strength).sum()
    }
}

impl Default for HyperfineManifold {
    fn default() -> Self {
        Self::rb85_5d52()
    }
}
