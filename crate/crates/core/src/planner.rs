//! Deployment planning: range bounds, timing derivation, the two-region
//! coarse-error model and the samplers that check it.
//!
//! The coarse-error model approximates one grid cell by two kinds of disks:
//! the central disk of radius `r1 = L/2`, where the centroid estimate is the
//! cell centre, and the four corner quarter-disks of radius `r2 = R - L`,
//! where the estimate collapses to the corner node. Integrating the distance
//! to the disk centre over both gives the closed-form mean absolute error.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2D, DISTANCE_TOLERANCE};
use crate::seed::lane_rng;

const SQRT5_HALF: f64 = 1.118_033_988_749_895;

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

fn require_ratio(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must lie in (0, 1], got {v}")))
    }
}

/// Smallest NTL / REFN range that keeps three non-collinear grid nodes one hop
/// away from every point of a cell: `L·√5/2`.
pub fn min_ntl_range(cell_side: f64) -> Result<f64> {
    require_positive("cell side", cell_side)?;
    Ok(cell_side * SQRT5_HALF)
}

/// The minimum range both as computed and rounded up to a whole meter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeBound {
    pub raw_m: f64,
    pub rounded_m: f64,
}

pub fn min_ntl_range_bound(cell_side: f64) -> Result<RangeBound> {
    let raw_m = min_ntl_range(cell_side)?;
    Ok(RangeBound {
        raw_m,
        rounded_m: raw_m.ceil(),
    })
}

/// Beacon / centroid timing derived from cell size and node speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingPlan {
    /// `min(r1, r2) / S` before rounding.
    pub centroid_interval_raw_s: f64,
    pub centroid_interval_s: f64,
    pub beacon_interval_s: f64,
    pub granularity: f64,
    pub max_beacons: u32,
    pub threshold: f64,
    pub speed_mps: f64,
}

impl TimingPlan {
    /// Beacons from one node that must be heard in a window to make it a
    /// centroid candidate: `ceil(T · maxBeacons)`.
    pub fn required_count(&self) -> u32 {
        required_count(self.threshold, self.max_beacons)
    }

    pub fn validate(&self) -> Result<()> {
        require_ratio("threshold", self.threshold).map_err(|e| Error::Config(e.to_string()))?;
        if self.max_beacons == 0 {
            return Err(Error::Config("max_beacons must be at least 1".into()));
        }
        if !(self.beacon_interval_s > 0.0 && self.centroid_interval_s > 0.0) {
            return Err(Error::Config("beacon and centroid intervals must be positive".into()));
        }
        let product = f64::from(self.max_beacons) * self.beacon_interval_s;
        if (product - self.centroid_interval_s).abs() > 1e-9 * self.centroid_interval_s.max(1.0) {
            return Err(Error::Config(format!(
                "timing inconsistent: max_beacons * p = {product} but P = {}",
                self.centroid_interval_s
            )));
        }
        Ok(())
    }
}

pub fn required_count(threshold: f64, max_beacons: u32) -> u32 {
    // The slack absorbs products such as 0.9 * 10 landing a hair above 9.
    (threshold * f64::from(max_beacons) - 1e-9).ceil().max(0.0) as u32
}

/// Derives the centroid interval `P`, beacon interval `p` and `maxBeacons`.
///
/// `P_raw = (√5/2 - 1)·L/S`. The granularity `p/P` is fixed at `target_granularity`,
/// so `P / p = 1 / target_granularity` must be a whole number `n`; `p` is then
/// the smallest whole number of seconds with `n·p >= P_raw`.
pub fn derive_timing(
    cell_side: f64,
    max_speed: f64,
    target_granularity: f64,
    threshold: f64,
) -> Result<TimingPlan> {
    require_positive("cell side", cell_side)?;
    require_positive("speed", max_speed)?;
    require_ratio("granularity", target_granularity)?;
    require_ratio("threshold", threshold)?;

    let raw = (SQRT5_HALF - 1.0) * cell_side / max_speed;
    let inverse = 1.0 / target_granularity;
    let n = inverse.round();
    if (n - inverse).abs() > 1e-9 * inverse {
        return Err(Error::Planning(format!(
            "granularity {target_granularity} is not 1/n for a whole n; no integer (p, P) pair gives p/P = {target_granularity}"
        )));
    }
    let beacon_interval = (raw / n).ceil().max(1.0);
    Ok(TimingPlan {
        centroid_interval_raw_s: raw,
        centroid_interval_s: n * beacon_interval,
        beacon_interval_s: beacon_interval,
        granularity: target_granularity,
        max_beacons: n as u32,
        threshold,
        speed_mps: max_speed,
    })
}

/// Upper bound on `fineCntLimit`: `floor(2·r1 / (P·S))`, defined only when the
/// ratio is at least one.
pub fn fine_cnt_limit_bound(r1: f64, centroid_interval: f64, speed: f64) -> Result<u32> {
    require_positive("r1", r1)?;
    require_positive("centroid interval", centroid_interval)?;
    require_positive("speed", speed)?;
    let ratio = 2.0 * r1 / (centroid_interval * speed);
    if ratio < 1.0 {
        return Err(Error::Planning(format!(
            "2*r1/(P*S) = {ratio:.4} < 1: the centroid can change within one interval; \
             use a larger cell (r1) or a shorter centroid interval (P)"
        )));
    }
    Ok(ratio.floor() as u32)
}

/// Non-fatal caveat attached to a region model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelWarning {
    /// `R > L·√5/2`: the corner disks grow past the size the model assumes.
    CornerRadiusBeyondModel,
}

/// The two-region approximation of a grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionModel {
    pub r1: f64,
    pub r2: f64,
    pub cell_side: f64,
    pub range: f64,
}

impl RegionModel {
    /// Requires `L <= R` (routing through neighbours) and disjoint regions
    /// (`r1 + r2 < L·√2/2`).
    pub fn new(cell_side: f64, range: f64) -> Result<Self> {
        require_positive("cell side", cell_side)?;
        require_positive("range", range)?;
        if range < cell_side - DISTANCE_TOLERANCE {
            return Err(Error::Domain(format!(
                "range {range} < cell side {cell_side}: neighbouring nodes cannot reach each other"
            )));
        }
        let r1 = cell_side / 2.0;
        let r2 = (range - cell_side).max(0.0);
        if r1 + r2 >= cell_side * std::f64::consts::FRAC_1_SQRT_2 {
            return Err(Error::Domain(format!(
                "range {range} makes the centre and corner regions overlap (r1 + r2 = {} >= L/√2)",
                r1 + r2
            )));
        }
        Ok(Self {
            r1,
            r2,
            cell_side,
            range,
        })
    }

    pub fn warning(&self) -> Option<ModelWarning> {
        (self.range > self.cell_side * SQRT5_HALF + DISTANCE_TOLERANCE)
            .then_some(ModelWarning::CornerRadiusBeyondModel)
    }

    /// Mean absolute error of the centroid estimate over both regions:
    /// `(2/3)·(r1³ + r2³) / (r1² + r2²)`.
    pub fn mean_abs_error(&self) -> f64 {
        let (a, b) = (self.r1, self.r2);
        2.0 / 3.0 * (a.powi(3) + b.powi(3)) / (a * a + b * b)
    }

    /// Share of the cell covered by the centre disk plus the four corner
    /// quarter-disks.
    pub fn area_fraction(&self) -> f64 {
        PI * (self.r1 * self.r1 + self.r2 * self.r2) / (self.cell_side * self.cell_side)
    }
}

/// Analytical coarse-grained MAE with any validity caveat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticalMae {
    pub mae_m: f64,
    pub warning: Option<ModelWarning>,
}

pub fn theoretical_mae(cell_side: f64, range: f64) -> Result<AnalyticalMae> {
    let model = RegionModel::new(cell_side, range)?;
    Ok(AnalyticalMae {
        mae_m: model.mean_abs_error(),
        warning: model.warning(),
    })
}

pub fn region_area_fraction(cell_side: f64, range: f64) -> Result<f64> {
    Ok(RegionModel::new(cell_side, range)?.area_fraction())
}

/// Corners of cell ABCD, going clockwise from the anchor (top-left).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Corner {
    A,
    B,
    C,
    D,
}

impl Corner {
    pub const ALL: [Corner; 4] = [Corner::A, Corner::B, Corner::C, Corner::D];

    pub fn position(self, anchor: Point2D, side: f64) -> Point2D {
        match self {
            Corner::A => anchor,
            Corner::B => Point2D::new(anchor.x + side, anchor.y),
            Corner::C => Point2D::new(anchor.x + side, anchor.y + side),
            Corner::D => Point2D::new(anchor.x, anchor.y + side),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Region1,
    Region2(Corner),
    Other,
}

/// Classifies a point of the cell whose top-left corner is `anchor`.
pub fn region_classify(p: Point2D, model: &RegionModel, anchor: Point2D) -> Result<Region> {
    let l = model.cell_side;
    let inside = p.x >= anchor.x - DISTANCE_TOLERANCE
        && p.x <= anchor.x + l + DISTANCE_TOLERANCE
        && p.y >= anchor.y - DISTANCE_TOLERANCE
        && p.y <= anchor.y + l + DISTANCE_TOLERANCE;
    if !inside {
        return Err(Error::Domain(format!(
            "point ({}, {}) lies outside the cell anchored at ({}, {})",
            p.x, p.y, anchor.x, anchor.y
        )));
    }
    debug_assert!(model.r1 + model.r2 < l * std::f64::consts::FRAC_1_SQRT_2);

    let centre = Point2D::new(anchor.x + l / 2.0, anchor.y + l / 2.0);
    if p.distance(centre) <= model.r1 + DISTANCE_TOLERANCE {
        return Ok(Region::Region1);
    }
    Ok(Corner::ALL
        .into_iter()
        .find(|c| p.distance(c.position(anchor, l)) <= model.r2 + DISTANCE_TOLERANCE)
        .map_or(Region::Other, Region::Region2))
}

/// Outcome of the sampled three-anchor check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub ok: bool,
    /// The sampled point with the fewest usable anchors (first such point on ties,
    /// a failing point whenever one exists).
    pub worst_point: Point2D,
    pub anchors_found: usize,
    pub points_checked: usize,
    pub failures: usize,
}

/// True when some three of `anchors` are not collinear. Collinearity uses
/// `|cross| <= 1e-9·scale²`.
pub fn has_noncollinear_triple(anchors: &[Point2D], scale: f64) -> bool {
    let tol = 1e-9 * scale * scale;
    let Some(&a) = anchors.first() else {
        return false;
    };
    let Some(&b) = anchors
        .iter()
        .find(|q| q.distance(a) > 1e-9 * scale)
    else {
        return false;
    };
    anchors
        .iter()
        .any(|&c| (b - a).cross(c - a).abs() > tol)
}

/// Nodes of `nodes` within closed distance `range` of `p`.
pub fn anchors_in_range(p: Point2D, nodes: &[Point2D], range: f64) -> Vec<Point2D> {
    nodes
        .iter()
        .copied()
        .filter(|n| p.distance(*n) <= range + DISTANCE_TOLERANCE)
        .collect()
}

/// Checks that every point of a lattice cell reaches at least three
/// non-collinear lattice nodes within `range`.
///
/// The cell `[0, L]²` is checked against the surrounding 6×6 block of lattice
/// nodes. Its corners, edge midpoints and centre are always checked (the
/// bound is tight at the edge midpoints); `samples` further points are drawn
/// uniformly from the cell.
pub fn verify_three_anchor_coverage(
    cell_side: f64,
    range: f64,
    samples: usize,
    seed: u64,
) -> Result<CoverageReport> {
    require_positive("cell side", cell_side)?;
    require_positive("range", range)?;
    let l = cell_side;
    let nodes: Vec<Point2D> = (-2..=3)
        .flat_map(|i| (-2..=3).map(move |j| Point2D::new(f64::from(i) * l, f64::from(j) * l)))
        .collect();

    let half = l / 2.0;
    let structural = [
        (0.0, 0.0),
        (l, 0.0),
        (l, l),
        (0.0, l),
        (half, 0.0),
        (l, half),
        (half, l),
        (0.0, half),
        (half, half),
    ]
    .map(|(x, y)| Point2D::new(x, y));

    let mut rng = lane_rng(seed, "three-anchor-coverage");
    let sampled = (0..samples).map(|_| Point2D::new(rng.random::<f64>() * l, rng.random::<f64>() * l));

    let mut report = CoverageReport {
        ok: true,
        worst_point: structural[0],
        anchors_found: usize::MAX,
        points_checked: 0,
        failures: 0,
    };
    for p in structural.into_iter().chain(sampled) {
        let anchors = anchors_in_range(p, &nodes, range);
        let pass = anchors.len() >= 3 && has_noncollinear_triple(&anchors, l);
        report.points_checked += 1;
        let worse = if report.ok {
            !pass || anchors.len() < report.anchors_found
        } else {
            !pass && anchors.len() < report.anchors_found
        };
        if worse {
            report.worst_point = p;
            report.anchors_found = anchors.len();
        }
        if !pass {
            report.ok = false;
            report.failures += 1;
        }
    }
    Ok(report)
}

/// Monte Carlo estimate of the two-region MAE.
///
/// Points are drawn uniformly over the cell and kept only when they fall in a
/// region; the error of a kept point is its distance to the region's defining
/// centre (the cell centre for the central disk, the corner node for a corner
/// disk). Rejection sampling gives the correct area weighting.
pub fn monte_carlo_analytical_mae(cell_side: f64, range: f64, samples: usize, seed: u64) -> Result<f64> {
    let model = RegionModel::new(cell_side, range)?;
    if samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    let l = cell_side;
    let anchor = Point2D::ORIGIN;
    let centre = Point2D::new(l / 2.0, l / 2.0);
    let mut rng = lane_rng(seed, "analytical-mae");
    let mut kept = 0usize;
    let mut total = 0.0;
    while kept < samples {
        let p = Point2D::new(rng.random::<f64>() * l, rng.random::<f64>() * l);
        let err = match region_classify(p, &model, anchor)? {
            Region::Region1 => p.distance(centre),
            Region::Region2(c) => p.distance(c.position(anchor, l)),
            Region::Other => continue,
        };
        total += err;
        kept += 1;
    }
    Ok(total / kept as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    const L_SQRT5_HALF_75: f64 = 83.852_549_156_242_12;

    #[test]
    fn min_range_at_75m() {
        let r = min_ntl_range(75.0).unwrap();
        assert!((r - L_SQRT5_HALF_75).abs() < 1e-9);
        let b = min_ntl_range_bound(75.0).unwrap();
        assert_eq!(b.rounded_m, 84.0);
    }

    #[test]
    fn min_range_small_and_unit_values() {
        assert!((min_ntl_range(2.0).unwrap() - 2.236_067_977_499_79).abs() < 1e-12);
        assert!(min_ntl_range(1e-12).unwrap() < 1e-11);
        assert!(matches!(min_ntl_range(0.0), Err(Error::Domain(_))));
        assert!(matches!(min_ntl_range(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn timing_for_default_deployment() {
        let t = derive_timing(75.0, 1.0, 0.1, 0.9).unwrap();
        assert!((t.centroid_interval_raw_s - 8.8525).abs() < 1e-3);
        assert_eq!(t.centroid_interval_s, 10.0);
        assert_eq!(t.beacon_interval_s, 1.0);
        assert_eq!(t.max_beacons, 10);
        assert_eq!(t.required_count(), 9);
        t.validate().unwrap();
    }

    #[test]
    fn timing_scales_with_speed_and_cell() {
        let fast = derive_timing(75.0, 2.0, 0.1, 0.9).unwrap();
        assert!((fast.centroid_interval_raw_s - 4.426_274_578).abs() < 1e-6);
        let big = derive_timing(150.0, 1.0, 0.1, 0.9).unwrap();
        assert!((big.centroid_interval_raw_s - 17.705).abs() < 1e-3);
        assert_eq!(big.centroid_interval_s, 20.0);
        assert_eq!(big.beacon_interval_s, 2.0);
        assert_eq!(big.max_beacons, 10);
    }

    #[test]
    fn timing_rejects_unreachable_granularity() {
        assert!(matches!(derive_timing(75.0, 1.0, 0.3, 0.9), Err(Error::Planning(_))));
        assert!(matches!(derive_timing(75.0, 0.0, 0.1, 0.9), Err(Error::Domain(_))));
        assert!(matches!(derive_timing(75.0, 1.0, 0.1, 1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn fine_count_bound_examples() {
        assert_eq!(fine_cnt_limit_bound(37.5, 10.0, 1.0).unwrap(), 7);
        assert_eq!(fine_cnt_limit_bound(37.5, 10.0, 2.0).unwrap(), 3);
        assert_eq!(fine_cnt_limit_bound(5.0, 10.0, 1.0).unwrap(), 1);
        assert!(matches!(fine_cnt_limit_bound(4.0, 10.0, 1.0), Err(Error::Planning(_))));
    }

    #[test]
    fn analytical_mae_values() {
        let at_bound = theoretical_mae(75.0, L_SQRT5_HALF_75).unwrap();
        assert!((at_bound.mae_m / 75.0 - 0.3199).abs() < 1e-4);
        assert_eq!(at_bound.warning, None);

        let collapsed = theoretical_mae(60.0, 60.0).unwrap();
        assert!((collapsed.mae_m - 20.0).abs() < 1e-12);

        let unit = theoretical_mae(1.0, SQRT5_HALF).unwrap();
        assert!((unit.mae_m - 0.319_891_591_749_922_9).abs() < 1e-12);
    }

    #[test]
    fn analytical_mae_domain() {
        assert!(matches!(theoretical_mae(75.0, 74.0), Err(Error::Domain(_))));
        let over = theoretical_mae(75.0, 84.0).unwrap();
        assert_eq!(over.warning, Some(ModelWarning::CornerRadiusBeyondModel));
        assert!(matches!(theoretical_mae(75.0, 100.0), Err(Error::Domain(_))));
    }

    #[test]
    fn area_fraction_values() {
        assert!((region_area_fraction(75.0, L_SQRT5_HALF_75).unwrap() - 0.829_166_902_9).abs() < 1e-9);
        assert!((region_area_fraction(10.0, 10.0).unwrap() - PI / 4.0).abs() < 1e-12);
        assert!((region_area_fraction(1.0, SQRT5_HALF).unwrap() - 0.829_166_902_9).abs() < 1e-9);
    }

    #[test]
    fn region_examples() {
        let m = RegionModel::new(75.0, L_SQRT5_HALF_75).unwrap();
        let a = Point2D::ORIGIN;
        assert_eq!(region_classify(Point2D::new(37.5, 37.5), &m, a).unwrap(), Region::Region1);
        assert_eq!(region_classify(a, &m, a).unwrap(), Region::Region2(Corner::A));
        assert_eq!(
            region_classify(Point2D::new(75.0, 75.0), &m, a).unwrap(),
            Region::Region2(Corner::C)
        );
        assert_eq!(region_classify(Point2D::new(20.0, 20.0), &m, a).unwrap(), Region::Region1);
        assert_eq!(region_classify(Point2D::new(10.0, 10.0), &m, a).unwrap(), Region::Other);
        assert!(matches!(
            region_classify(Point2D::new(80.0, 10.0), &m, a),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn collinearity() {
        let line = [Point2D::new(0.0, 0.0), Point2D::new(1.0, 0.0), Point2D::new(2.0, 0.0)];
        assert!(!has_noncollinear_triple(&line, 1.0));
        let tri = [Point2D::new(0.0, 0.0), Point2D::new(1.0, 0.0), Point2D::new(0.0, 1.0)];
        assert!(has_noncollinear_triple(&tri, 1.0));
        assert!(!has_noncollinear_triple(&tri[..2], 1.0));
    }

    #[test]
    fn coverage_corner_witness_below_l() {
        let r = verify_three_anchor_coverage(75.0, 0.9 * 75.0, 1000, 1).unwrap();
        assert!(!r.ok);
        assert_eq!(r.anchors_found, 1);
    }

    #[test]
    fn coverage_trivially_ok_at_2l() {
        let r = verify_three_anchor_coverage(10.0, 20.0, 1000, 1).unwrap();
        assert!(r.ok);
        assert!(r.anchors_found >= 4);
    }
}
