//! Generators with convex piecewise-linear costs, shared by the dispatch
//! models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::HPolytope;
use crate::pve::PveResult;

/// One affine piece `slope·p + intercept` of a cost curve ($/h with `p` in MW).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSegment {
    pub slope: f64,
    pub intercept: f64,
}

/// A dispatchable unit. The cost is the upper envelope of its segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub node: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub cost_segments: Vec<CostSegment>,
}

impl Generator {
    pub fn cost(&self, p: f64) -> f64 {
        self.cost_segments.iter().map(|s| s.slope * p + s.intercept).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest cost over the output range.
    pub fn max_cost(&self) -> f64 {
        self.cost(self.p_min).max(self.cost(self.p_max))
    }

    pub(crate) fn validate(&self, nodes: usize, owner: &str) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(format!("{owner}: {msg}")));
        if self.node >= nodes {
            return bad(format!("generator node {} out of range (0..{nodes})", self.node));
        }
        if !(self.p_min.is_finite() && self.p_max.is_finite()) || self.p_min > self.p_max {
            return bad(format!("generator at node {} has bounds [{}, {}]", self.node, self.p_min, self.p_max));
        }
        if self.cost_segments.is_empty() {
            return bad(format!("generator at node {} has no cost segments", self.node));
        }
        if self.cost_segments.iter().any(|s| !s.slope.is_finite() || !s.intercept.is_finite()) {
            return bad(format!("generator at node {} has a non-finite cost segment", self.node));
        }
        if self.cost_segments.windows(2).any(|w| w[1].slope < w[0].slope) {
            return bad(format!("generator at node {} has decreasing segment slopes", self.node));
        }
        Ok(())
    }
}

/// Default cost cap: 1.5 times the largest total cost the units can incur.
pub fn default_cost_cap<'a>(generators: impl IntoIterator<Item = &'a Generator>) -> f64 {
    let total: f64 = generators.into_iter().map(Generator::max_cost).sum();
    1.5 * total.abs().max(1.0)
}

/// `1 − (N_x·F) / ((N_x + N_y)·M)` for a region with `M` rows whose
/// projection has `F` facets.
pub fn reduction_rate(region: &HPolytope, ep: &PveResult) -> f64 {
    let original = (region.num_vars() * region.num_rows()) as f64;
    if original == 0.0 {
        return 0.0;
    }
    1.0 - (region.num_x * ep.hull.facets.len()) as f64 / original
}
