use serde::{Deserialize, Serialize};

/// Pointwise residuals of an identity or equation over a grid.
///
/// `l2` is the root-mean-square of `pointwise`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub grid: Vec<f64>,
    pub pointwise: Vec<f64>,
    pub max_abs: f64,
    pub l2: f64,
    pub sign_ok: Option<bool>,
}

impl ResidualReport {
    pub fn new(grid: Vec<f64>, pointwise: Vec<f64>, sign_ok: Option<bool>) -> Self {
        let max_abs = pointwise.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
        let l2 = if pointwise.is_empty() {
            0.0
        } else {
            (pointwise.iter().map(|r| r * r).sum::<f64>() / pointwise.len() as f64).sqrt()
        };
        Self { grid, pointwise, max_abs, l2, sign_ok }
    }

    pub fn empty() -> Self {
        Self::new(Vec::new(), Vec::new(), None)
    }
}
