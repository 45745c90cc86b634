use serde::{Deserialize, Serialize};

use crate::error::{Result, SegalignError};
use crate::sequence::{Norm, Sequence};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DtwConfig {
    pub norm: Norm,
    /// Added to every horizontal or vertical step.
    pub gap_penalty: f64,
    /// Half-width in samples; `None` leaves the warp unconstrained.
    pub band: Option<usize>,
}

impl Default for DtwConfig {
    fn default() -> Self {
        Self {
            norm: Norm::L2,
            gap_penalty: 0.0,
            band: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DtwResult {
    pub distance: f64,
    /// Matched 0-based index pairs from `(0, 0)` to `(n-1, m-1)`.
    pub path: Vec<(usize, usize)>,
}

impl DtwResult {
    /// Mean matched `y` position of every `x` sample.
    pub fn correspondences(&self, n: usize) -> Vec<f64> {
        let mut sum = vec![0.0; n];
        let mut cnt = vec![0usize; n];
        for &(i, j) in &self.path {
            sum[i] += j as f64;
            cnt[i] += 1;
        }
        sum.iter().zip(&cnt).map(|(s, &c)| s / c.max(1) as f64).collect()
    }
}

/// The penalties tried by the gap sweep: ten evenly spaced values over `[0, 100]`.
pub fn gap_sweep() -> Vec<f64> {
    (0..10).map(|i| 100.0 * i as f64 / 9.0).collect()
}

/// Dynamic time warping with the symmetric step pattern: every cell on the
/// path adds its local cost, and horizontal or vertical steps add the gap
/// penalty on top.
pub fn dtw_align(x: &Sequence, y: &Sequence, cfg: &DtwConfig) -> Result<DtwResult> {
    x.check_same_dim(y)?;
    if !(cfg.gap_penalty >= 0.0 && cfg.gap_penalty.is_finite()) {
        return Err(SegalignError::InvalidArgument("gap penalty must be finite and >= 0".into()));
    }
    let (n, m) = (x.len(), y.len());
    let admissible = |i: usize, j: usize| match cfg.band {
        None => true,
        Some(b) => ((i * m) as f64 - (j * n) as f64).abs() <= (b * n) as f64,
    };
    let cols = m + 1;
    let inf = f64::INFINITY;
    let mut acc = vec![inf; (n + 1) * cols];
    // 0 diagonal, 1 from (i-1, j), 2 from (i, j-1)
    let mut from = vec![0u8; (n + 1) * cols];
    acc[0] = 0.0;
    let g = cfg.gap_penalty;
    for i in 1..=n {
        for j in 1..=m {
            if !admissible(i, j) {
                continue;
            }
            let d = acc[(i - 1) * cols + j - 1];
            let v = acc[(i - 1) * cols + j] + g;
            let h = acc[i * cols + j - 1] + g;
            let (best, dir) = if d <= v && d <= h {
                (d, 0)
            } else if v <= h {
                (v, 1)
            } else {
                (h, 2)
            };
            if best < inf {
                acc[i * cols + j] = best + cfg.norm.dist(x.row(i - 1), y.row(j - 1));
                from[i * cols + j] = dir;
            }
        }
    }
    let distance = acc[n * cols + m];
    if distance == inf {
        return Err(SegalignError::Infeasible(format!(
            "band {:?} admits no warping path between lengths {n} and {m}",
            cfg.band
        )));
    }
    let mut path = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 && j > 0 {
        path.push((i - 1, j - 1));
        match from[i * cols + j] {
            0 => {
                i -= 1;
                j -= 1;
            }
            1 => i -= 1,
            _ => j -= 1,
        }
    }
    path.reverse();
    Ok(DtwResult { distance, path })
}
