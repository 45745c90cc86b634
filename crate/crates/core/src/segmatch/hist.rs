use serde::{Deserialize, Serialize};

use crate::error::{Result, SegalignError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HistMetric {
    #[default]
    L1,
    /// Negated histogram intersection.
    Intersection,
    ChiSq,
}

impl std::str::FromStr for HistMetric {
    type Err = SegalignError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(HistMetric::L1),
            "intersection" | "int" => Ok(HistMetric::Intersection),
            "chisq" | "chi2" => Ok(HistMetric::ChiSq),
            other => Err(SegalignError::InvalidArgument(format!("unknown histogram metric `{other}`"))),
        }
    }
}

#[inline]
pub(crate) fn bin_distance(metric: HistMetric, x: f64, y: f64) -> f64 {
    match metric {
        HistMetric::L1 => (x - y).abs(),
        HistMetric::Intersection => -x.min(y),
        HistMetric::ChiSq => {
            let s = x + y;
            if s > 0.0 {
                (x - y) * (x - y) / s
            } else {
                0.0
            }
        }
    }
}

/// Distance between two histograms, optionally after normalizing each to unit mass.
pub fn histogram_distance(hx: &[f64], hy: &[f64], metric: HistMetric, normalized: bool) -> Result<f64> {
    if hx.len() != hy.len() {
        return Err(SegalignError::BinMismatch(hx.len(), hy.len()));
    }
    let (sx, sy) = if normalized {
        let (mx, my) = (hx.iter().sum::<f64>(), hy.iter().sum::<f64>());
        if !(mx > 0.0) || !(my > 0.0) {
            return Err(SegalignError::ZeroMass("cannot normalize a histogram with no counts".into()));
        }
        (mx, my)
    } else {
        (1.0, 1.0)
    };
    Ok(hx.iter().zip(hy).map(|(&x, &y)| bin_distance(metric, x / sx, y / sy)).sum())
}

/// Bin counts of the shortest and longest segments anchored at a pair of
/// positions.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramBoundInputs {
    pub under_x: Vec<f64>,
    pub over_x: Vec<f64>,
    pub under_y: Vec<f64>,
    pub over_y: Vec<f64>,
}

/// Per-bin bounds from value intervals `[xl, xh]` and `[yl, yh]`.
#[inline]
fn bin_bounds(metric: HistMetric, xl: f64, xh: f64, yl: f64, yh: f64) -> (f64, f64) {
    let l1_lo = (xl.max(yl) - xh.min(yh)).max(0.0);
    let l1_hi = xh.max(yh) - xl.min(yl);
    match metric {
        HistMetric::L1 => (l1_lo, l1_hi),
        HistMetric::Intersection => (-xh.min(yh), -xl.min(yl)),
        HistMetric::ChiSq => {
            let lo = if xh + yh > 0.0 { l1_lo * l1_lo / (xh + yh) } else { 0.0 };
            // (x - y)^2 / (x + y) never exceeds |x - y|
            let hi = if xl + yl > 0.0 { (l1_hi * l1_hi / (xl + yl)).min(l1_hi) } else { l1_hi };
            (lo, hi)
        }
    }
}

/// Lower and upper bounds on the distance of any segment pair whose
/// histograms lie between the given under and over counts.
///
/// Under normalization each bin of a unit-mass histogram lies in
/// `[under/|over|, min(1, over/|under|)]`; a zero-mass shortest segment only
/// loosens the upper end to 1.
pub fn bound_distance(inputs: &HistogramBoundInputs, metric: HistMetric, normalized: bool) -> Result<(f64, f64)> {
    let h = inputs.under_x.len();
    for v in [&inputs.over_x, &inputs.under_y, &inputs.over_y] {
        if v.len() != h {
            return Err(SegalignError::BinMismatch(h, v.len()));
        }
    }
    for (side, under, over) in [("x", &inputs.under_x, &inputs.over_x), ("y", &inputs.under_y, &inputs.over_y)] {
        if let Some(b) = (0..h).find(|&b| !(under[b] >= 0.0 && under[b] <= over[b])) {
            return Err(SegalignError::InvalidArgument(format!(
                "bin {b} of {side}: under count {} exceeds over count {}",
                under[b], over[b]
            )));
        }
    }
    bounds_unchecked(inputs_ref(inputs), metric, normalized)
}

pub(crate) struct BoundRef<'a> {
    pub under_x: &'a [f64],
    pub over_x: &'a [f64],
    pub under_y: &'a [f64],
    pub over_y: &'a [f64],
}

fn inputs_ref(i: &HistogramBoundInputs) -> BoundRef<'_> {
    BoundRef {
        under_x: &i.under_x,
        over_x: &i.over_x,
        under_y: &i.under_y,
        over_y: &i.over_y,
    }
}

pub(crate) fn bounds_unchecked(i: BoundRef<'_>, metric: HistMetric, normalized: bool) -> Result<(f64, f64)> {
    let mass = |v: &[f64]| v.iter().sum::<f64>();
    let (mut lo, mut hi) = (0.0, 0.0);
    if normalized {
        let (ux, ox, uy, oy) = (mass(i.under_x), mass(i.over_x), mass(i.under_y), mass(i.over_y));
        if !(ox > 0.0) || !(oy > 0.0) {
            let side = if ox > 0.0 { "y" } else { "x" };
            return Err(SegalignError::ZeroMass(format!(
                "longest segment of {side} has no counts in any bin"
            )));
        }
        let upper = |c: f64, u: f64| if u > 0.0 { (c / u).min(1.0) } else if c > 0.0 { 1.0 } else { 0.0 };
        for b in 0..i.under_x.len() {
            let (l, h) = bin_bounds(
                metric,
                i.under_x[b] / ox,
                upper(i.over_x[b], ux),
                i.under_y[b] / oy,
                upper(i.over_y[b], uy),
            );
            lo += l;
            hi += h;
        }
    } else {
        for b in 0..i.under_x.len() {
            let (l, h) = bin_bounds(metric, i.under_x[b], i.over_x[b], i.under_y[b], i.over_y[b]);
            lo += l;
            hi += h;
        }
    }
    Ok((lo, hi))
}
