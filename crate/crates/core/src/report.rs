use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Result, ToaError};
use crate::numerics::{integrate_real, Grid};

/// Separate channel contributions to a two-channel density.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelSplit {
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
    pub plus_total: f64,
    pub minus_total: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct DistributionMeta {
    /// How the density was produced.
    pub provenance: String,
    /// Cutoffs and guard values used (grid edges, phase steps, thresholds).
    pub cutoffs: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channels: Option<ChannelSplit>,
}

/// A sampled probability density with its quadrature total.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distribution {
    pub grid: Grid,
    pub density: Vec<f64>,
    pub total: f64,
    pub meta: DistributionMeta,
}

impl Distribution {
    pub fn new(grid: Grid, density: Vec<f64>, meta: DistributionMeta) -> Result<Self> {
        if density.len() != grid.len() {
            return Err(ToaError::InvalidGrid("density length does not match grid".into()));
        }
        let total = integrate_real(&grid, &density);
        Ok(Self {
            grid,
            density,
            total,
            meta,
        })
    }

    pub fn max(&self) -> f64 {
        self.density.iter().copied().fold(0.0, f64::max)
    }

    /// Node with the largest density.
    pub fn argmax(&self) -> f64 {
        let (k, _) = self
            .density
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (k, &d)| if d > acc.1 { (k, d) } else { acc });
        self.grid.nodes()[k]
    }

    /// `∫ xⁿ Π(x) dx` without any tail check.
    pub fn raw_moment(&self, n: i32) -> f64 {
        let integrand: Vec<f64> = self
            .grid
            .nodes()
            .iter()
            .zip(&self.density)
            .map(|(x, d)| x.powi(n) * d)
            .collect();
        integrate_real(&self.grid, &integrand)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    /// Passes when `measured <= tolerance`.
    Upper,
    /// Passes when `measured >= tolerance`.
    Lower,
}

/// Outcome of an invariant check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub bound: Bound,
    pub passed: bool,
    pub details: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<CheckReport>,
}

impl CheckReport {
    pub fn upper(name: impl Into<String>, measured: f64, tolerance: f64, details: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            measured,
            tolerance,
            bound: Bound::Upper,
            passed: measured <= tolerance,
            details: details.into(),
            components: Vec::new(),
        }
    }

    pub fn lower(name: impl Into<String>, measured: f64, tolerance: f64, details: impl Into<String>) -> Self {
        Self {
            bound: Bound::Lower,
            passed: measured >= tolerance,
            ..Self::upper(name, measured, tolerance, details)
        }
    }

    /// Attaches sub-checks; the report passes only if all of them do.
    pub fn with_components(mut self, components: Vec<CheckReport>) -> Self {
        self.passed = self.passed && components.iter().all(|c| c.passed);
        self.components = components;
        self
    }

    pub fn summary(&self) -> String {
        let op = match self.bound {
            Bound::Upper => "<=",
            Bound::Lower => ">=",
        };
        format!(
            "[{}] {}: measured {:.3e} {} {:.3e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            op,
            self.tolerance
        )
    }
}
