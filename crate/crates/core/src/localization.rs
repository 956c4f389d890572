//! The node-to-be-localized (NTL) state machine.
//!
//! Every centroid interval the NTL picks the reference nodes it heard often
//! enough, takes their centroid, and, if it is a fine-grained variant, asks
//! the REFN1 nodes for a TDOA fix when the candidate set changed or has been
//! stuck for `fine_cnt_limit` intervals. Extra-fine-grained variants add
//! dead-reckoned step vectors on top of the last fix.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Displacement, NodeId, Point2D};
use crate::mobility::SensedStep;
use crate::planner::{anchors_in_range, has_noncollinear_triple, required_count, TimingPlan};
use crate::radio::BeaconTally;
use crate::time::SimTime;

/// Stand-in for "never fire out of turn".
pub const FINE_CNT_LIMIT_NEVER: u32 = 100;

/// Table-1 flags plus the timing knobs an NTL runs with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NtlProfile {
    pub coarse_grained: bool,
    pub fine_grained: bool,
    pub self_localize: bool,
    pub fine_cnt_limit: u32,
    pub threshold: f64,
    pub max_beacons: u32,
    pub centroid_interval: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NtlKind {
    None,
    Coarse,
    Fine,
    ExtraFine,
}

impl NtlProfile {
    fn with_flags(plan: &TimingPlan, coarse: bool, fine: bool, selfloc: bool, limit: u32) -> Self {
        Self {
            coarse_grained: coarse,
            fine_grained: fine,
            self_localize: selfloc,
            fine_cnt_limit: limit,
            threshold: plan.threshold,
            max_beacons: plan.max_beacons,
            centroid_interval: SimTime::from_secs_f64(plan.centroid_interval_s).unwrap_or(SimTime::ZERO),
        }
    }

    pub fn coarse(plan: &TimingPlan) -> Self {
        Self::with_flags(plan, true, false, false, FINE_CNT_LIMIT_NEVER)
    }

    pub fn fine(plan: &TimingPlan, fine_cnt_limit: u32) -> Self {
        Self::with_flags(plan, true, true, false, fine_cnt_limit)
    }

    pub fn extra_fine(plan: &TimingPlan, fine_cnt_limit: u32) -> Self {
        Self::with_flags(plan, true, true, true, fine_cnt_limit)
    }

    pub fn kind(&self) -> NtlKind {
        match (self.coarse_grained, self.fine_grained, self.self_localize) {
            (_, true, true) => NtlKind::ExtraFine,
            (_, true, false) => NtlKind::Fine,
            (true, false, false) => NtlKind::Coarse,
            _ => NtlKind::None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.self_localize && !self.fine_grained {
            return Err(Error::Config(
                "self_localize requires fine_grained: dead reckoning needs a fine fix to start from".into(),
            ));
        }
        if self.fine_cnt_limit == 0 {
            return Err(Error::Config("fine_cnt_limit must be at least 1".into()));
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::Config(format!("threshold must lie in (0, 1], got {}", self.threshold)));
        }
        if self.max_beacons == 0 || self.centroid_interval == SimTime::ZERO {
            return Err(Error::Config("max_beacons and centroid interval must be positive".into()));
        }
        Ok(())
    }

    pub fn required_count(&self) -> u32 {
        required_count(self.threshold, self.max_beacons)
    }
}

/// Reference nodes selected for one centroid computation, in id order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CandidateSet {
    pub ids: Vec<NodeId>,
}

impl CandidateSet {
    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn positions(&self, nodes: &[Point2D]) -> Vec<Point2D> {
        self.ids.iter().map(|id| nodes[id.0]).collect()
    }
}

/// Nodes whose beacon count reaches `ceil(T · maxBeacons)`.
pub fn candidate_set(tally: &BeaconTally, profile: &NtlProfile) -> CandidateSet {
    let need = profile.required_count();
    CandidateSet {
        ids: tally
            .counts
            .iter()
            .filter(|&(_, &c)| c >= need && c > 0)
            .map(|(&id, _)| id)
            .collect(),
    }
}

/// Arithmetic mean, or `None` for an empty slice.
pub fn centroid(points: &[Point2D]) -> Option<Point2D> {
    if points.is_empty() {
        return None;
    }
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    Some(Point2D::new(sx / n, sy / n))
}

/// Per-axis TDOA error magnitude bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TdoaErrorModel {
    pub qmin: f64,
    pub qmax: f64,
}

impl TdoaErrorModel {
    pub fn validate(&self) -> Result<()> {
        if self.qmin >= 0.0 && self.qmin <= self.qmax && self.qmax.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "TDOA error bounds need 0 <= qmin <= qmax, got ({}, {})",
                self.qmin, self.qmax
            )))
        }
    }
}

/// The REFN1 lattice as seen by a fine-grained request.
#[derive(Debug, Clone, Copy)]
pub struct AnchorField<'a> {
    pub nodes: &'a [Point2D],
    pub range: f64,
    pub cell_side: f64,
}

impl AnchorField<'_> {
    pub fn check(&self, at: Point2D) -> Result<()> {
        let found = anchors_in_range(at, self.nodes, self.range);
        if found.len() >= 3 && has_noncollinear_triple(&found, self.cell_side) {
            Ok(())
        } else {
            Err(Error::FineUnavailable {
                reachable: found.len(),
            })
        }
    }
}

/// Perturbs `actual` by independent per-axis errors `±U[qmin, qmax]`.
///
/// Draw order is fixed: x magnitude, x sign, y magnitude, y sign.
pub fn tdoa_fix<R: Rng + ?Sized>(actual: Point2D, model: &TdoaErrorModel, rng: &mut R) -> Point2D {
    let mut axis = || {
        let mag = model.qmin + rng.random::<f64>() * (model.qmax - model.qmin);
        if rng.random::<bool>() {
            mag
        } else {
            -mag
        }
    };
    let ex = axis();
    let ey = axis();
    Point2D::new(actual.x + ex, actual.y + ey)
}

/// [`tdoa_fix`] guarded by the three-anchor precondition.
pub fn tdoa_fix_checked<R: Rng + ?Sized>(
    actual: Point2D,
    anchors: &AnchorField<'_>,
    model: &TdoaErrorModel,
    rng: &mut R,
) -> Result<Point2D> {
    anchors.check(actual)?;
    Ok(tdoa_fix(actual, model, rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    Coarse,
    Fine,
    DeadReckoned,
    None,
}

impl EstimateMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimateMethod::Coarse => "coarse",
            EstimateMethod::Fine => "fine",
            EstimateMethod::DeadReckoned => "dead_reckoned",
            EstimateMethod::None => "none",
        }
    }
}

/// What the NTL advertises. `pos` is `None` exactly when `method` is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocationEstimate {
    pub pos: Option<Point2D>,
    pub method: EstimateMethod,
    pub time: SimTime,
}

impl LocationEstimate {
    pub fn none(time: SimTime) -> Self {
        Self {
            pos: None,
            method: EstimateMethod::None,
            time,
        }
    }

    fn at(pos: Point2D, method: EstimateMethod, time: SimTime) -> Self {
        Self {
            pos: Some(pos),
            method,
            time,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fix {
    pub pos: Point2D,
    pub time: SimTime,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NtlState {
    pub last_candidates: Option<CandidateSet>,
    pub last_centroid: Option<Point2D>,
    pub unchanged_count: u32,
    pub last_fix: Option<Fix>,
    pub dead_reckon_offset: Displacement,
    /// Detected steps integrated since the last fix.
    pub steps_since_fix: u32,
    /// Fine-grained requests broadcast (communication overhead).
    pub fgl_count: u64,
    /// Requests that could not be served for lack of anchors.
    pub fgl_unavailable: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateOutcome {
    pub estimate: LocationEstimate,
    pub fired_fgl: bool,
}

impl NtlState {
    pub fn new() -> Self {
        Self::default()
    }

    /// The location the NTL currently advertises.
    pub fn estimate(&self, profile: &NtlProfile, now: SimTime) -> LocationEstimate {
        let coarse = || {
            self.last_centroid
                .filter(|_| profile.coarse_grained || !profile.fine_grained)
                .map_or(LocationEstimate::none(now), |c| {
                    LocationEstimate::at(c, EstimateMethod::Coarse, now)
                })
        };
        match profile.kind() {
            NtlKind::None => LocationEstimate::none(now),
            NtlKind::Coarse => coarse(),
            NtlKind::Fine => self
                .last_fix
                .map_or_else(coarse, |f| LocationEstimate::at(f.pos, EstimateMethod::Fine, now)),
            NtlKind::ExtraFine => self.last_fix.map_or_else(coarse, |f| {
                let method = if self.steps_since_fix > 0 {
                    EstimateMethod::DeadReckoned
                } else {
                    EstimateMethod::Fine
                };
                LocationEstimate::at(f.pos + self.dead_reckon_offset, method, now)
            }),
        }
    }

    /// One centroid-interval update.
    ///
    /// A fine-grained request fires when the candidate set differs from the
    /// previous one (including the very first set) or when this is the
    /// `fine_cnt_limit`-th consecutive interval without a change. An empty
    /// candidate set leaves the state untouched and the previous estimate in
    /// place.
    #[allow(clippy::too_many_arguments)]
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        tally: &BeaconTally,
        actual: Point2D,
        profile: &NtlProfile,
        anchors: &AnchorField<'_>,
        tdoa: &TdoaErrorModel,
        rng: &mut R,
        now: SimTime,
    ) -> UpdateOutcome {
        let cands = candidate_set(tally, profile);
        let Some(c) = centroid(&cands.positions(anchors.nodes)) else {
            return UpdateOutcome {
                estimate: self.estimate(profile, now),
                fired_fgl: false,
            };
        };

        let mut fired = false;
        if profile.fine_grained {
            let changed = self.last_candidates.as_ref() != Some(&cands);
            if changed || self.unchanged_count + 1 >= profile.fine_cnt_limit {
                fired = true;
                self.fgl_count += 1;
                self.unchanged_count = 0;
                self.dead_reckon_offset = Displacement::ZERO;
                self.steps_since_fix = 0;
                match tdoa_fix_checked(actual, anchors, tdoa, rng) {
                    Ok(pos) => self.last_fix = Some(Fix { pos, time: now }),
                    Err(_) => {
                        self.fgl_unavailable += 1;
                        self.last_fix = None;
                    }
                }
            } else {
                self.unchanged_count += 1;
            }
        }
        self.last_candidates = Some(cands);
        self.last_centroid = Some(c);

        UpdateOutcome {
            estimate: self.estimate(profile, now),
            fired_fgl: fired,
        }
    }

    /// Integrates one sensed step into the dead-reckoning offset.
    pub fn dead_reckon_accumulate(&mut self, profile: &NtlProfile, sensed: &SensedStep) -> Result<()> {
        if !profile.self_localize {
            return Err(Error::Contract("dead reckoning on an NTL without self_localize".into()));
        }
        if sensed.detected {
            self.dead_reckon_offset += sensed.displacement();
            self.steps_since_fix += 1;
        }
        Ok(())
    }
}

/// Free-function form of [`NtlState::update`].
#[allow(clippy::too_many_arguments)]
pub fn ntl_update<R: Rng + ?Sized>(
    state: &NtlState,
    tally: &BeaconTally,
    actual: Point2D,
    profile: &NtlProfile,
    anchors: &AnchorField<'_>,
    tdoa: &TdoaErrorModel,
    rng: &mut R,
    now: SimTime,
) -> (NtlState, LocationEstimate, bool) {
    let mut next = state.clone();
    let out = next.update(tally, actual, profile, anchors, tdoa, rng, now);
    (next, out.estimate, out.fired_fgl)
}

/// Free-function form of [`NtlState::dead_reckon_accumulate`].
pub fn dead_reckon_accumulate(state: &NtlState, profile: &NtlProfile, sensed: &SensedStep) -> Result<NtlState> {
    let mut next = state.clone();
    next.dead_reckon_accumulate(profile, sensed)?;
    Ok(next)
}
