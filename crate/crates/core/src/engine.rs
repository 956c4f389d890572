//! Deterministic discrete-event loop.
//!
//! Three event sources share one virtual clock in integer milliseconds:
//! beacon emissions, the one-second mobility tick, and the centroid update
//! every `P` seconds. Events at the same instant run in the fixed order
//! beacons → tick (move, then sample) → centroid update.
//!
//! All NTL variants ride the same walker and hear the same beacon stream, so
//! their errors are paired sample by sample. Each random stream is a separate
//! lane seeded from the master seed by name (see [`crate::seed`]); per-NTL
//! lanes are keyed by label, so reordering NTLs does not change any one NTL's
//! samples.
//!
//! When the walker reaches the bottom-right corner the next tick starts a new
//! episode: the walker is put back at the top-left corner and every NTL
//! starts from a blank state, as a node newly entering the field would.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{grid_positions, GridConfig, Point2D};
use crate::localization::{AnchorField, LocationEstimate, NtlProfile, NtlState, TdoaErrorModel};
use crate::mobility::{sense_step, MobilityConfig, SensorErrorModel, WalkState};
use crate::planner::TimingPlan;
use crate::radio::{reception_decision, window_tally, BeaconSchedule, Reception, ReceptionModel};
use crate::seed::{lane_rng, replicate_seed, LaneRng};
use crate::time::SimTime;

const TICK: SimTime = SimTime::from_secs(1);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NtlSpec {
    pub label: String,
    pub profile: NtlProfile,
    /// Motion-sensor accuracy; falls back to the scenario default.
    pub sensors: Option<SensorErrorModel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhasePolicy {
    /// Per-node offsets drawn uniformly from `[0, p)` on the `beacon-phase` lane.
    Random,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub grid: GridConfig,
    pub reception: ReceptionModel,
    pub timing: TimingPlan,
    pub beacon_phases: PhasePolicy,
    pub ntls: Vec<NtlSpec>,
    pub mobility: MobilityConfig,
    pub sensors: SensorErrorModel,
    pub tdoa: TdoaErrorModel,
    /// Samples recorded per NTL (one per simulated second).
    pub target_samples: u64,
    pub master_seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.reception.validate()?;
        self.timing.validate()?;
        self.mobility.validate()?;
        self.sensors.validate()?;
        self.tdoa.validate()?;
        if self.ntls.is_empty() {
            return Err(Error::Config("scenario needs at least one NTL".into()));
        }
        let p = self.centroid_interval()?;
        self.beacon_interval()?;
        for (i, ntl) in self.ntls.iter().enumerate() {
            if self.ntls[..i].iter().any(|o| o.label == ntl.label) {
                return Err(Error::Config(format!("duplicate NTL label `{}`", ntl.label)));
            }
            ntl.profile
                .validate()
                .map_err(|e| Error::Config(format!("NTL `{}`: {e}", ntl.label)))?;
            if ntl.profile.centroid_interval != p || ntl.profile.max_beacons != self.timing.max_beacons {
                return Err(Error::Config(format!(
                    "NTL `{}` timing disagrees with the scenario timing plan",
                    ntl.label
                )));
            }
            if let Some(s) = &ntl.sensors {
                s.validate()?;
            }
        }
        let field = self.mobility.field;
        let grid = self.grid.bounds();
        if !(grid.contains(field.min) && grid.contains(field.max)) {
            return Err(Error::Config("mobility field must lie within the grid".into()));
        }
        if SimTime::from_secs(self.target_samples) <= p {
            return Err(Error::Config(format!(
                "duration {} s must exceed the centroid interval {} s",
                self.target_samples,
                p.as_secs_f64()
            )));
        }
        Ok(())
    }

    fn centroid_interval(&self) -> Result<SimTime> {
        SimTime::from_secs_f64(self.timing.centroid_interval_s)
            .filter(|t| *t > SimTime::ZERO)
            .ok_or_else(|| Error::Config("centroid interval must be positive".into()))
    }

    fn beacon_interval(&self) -> Result<SimTime> {
        SimTime::from_secs_f64(self.timing.beacon_interval_s)
            .filter(|t| *t > SimTime::ZERO)
            .ok_or_else(|| Error::Config("beacon interval must be positive".into()))
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.ntls.iter().position(|n| n.label == label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub time: SimTime,
    /// Index into [`Trace::labels`].
    pub ntl: usize,
    pub actual: Point2D,
    pub estimate: LocationEstimate,
}

impl TraceSample {
    /// Euclidean error, `None` while the NTL has no estimate.
    pub fn error(&self) -> Option<f64> {
        self.estimate.pos.map(|e| e.distance(self.actual))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FglEvent {
    pub time: SimTime,
    pub ntl: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NtlTotals {
    pub fgl_count: u64,
    pub fgl_unavailable: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub labels: Vec<String>,
    pub samples: Vec<TraceSample>,
    pub fgl_events: Vec<FglEvent>,
    pub totals: Vec<NtlTotals>,
    pub episodes: u32,
    pub master_seed: u64,
}

impl Trace {
    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn samples_for(&self, ntl: usize) -> impl Iterator<Item = &TraceSample> {
        self.samples.iter().filter(move |s| s.ntl == ntl)
    }
}

struct NtlRuntime<'a> {
    spec: &'a NtlSpec,
    sensors: SensorErrorModel,
    state: NtlState,
    tdoa_rng: LaneRng,
    sense_rng: LaneRng,
}

/// Runs one scenario to completion.
pub fn run_scenario(s: &Scenario) -> Result<Trace> {
    s.validate()?;
    let seed = s.master_seed;
    let nodes = grid_positions(&s.grid)?;
    let p = s.centroid_interval()?;
    let beacon_interval = s.beacon_interval()?;

    let phases: Vec<SimTime> = match s.beacon_phases {
        PhasePolicy::Zero => vec![SimTime::ZERO; nodes.len()],
        PhasePolicy::Random => {
            let mut rng = lane_rng(seed, "beacon-phase");
            (0..nodes.len())
                .map(|_| SimTime(rng.random_range(0..beacon_interval.as_millis())))
                .collect()
        }
    };
    let mut beacons = BeaconSchedule::new(s.grid, beacon_interval, &phases)?;
    let mut walk_rng = lane_rng(seed, "walk");
    let mut rx_rng = lane_rng(seed, "reception");
    let anchors = AnchorField {
        nodes: &nodes,
        range: s.reception.range(),
        cell_side: s.grid.cell_side,
    };

    let mut ntls: Vec<NtlRuntime> = s
        .ntls
        .iter()
        .map(|spec| NtlRuntime {
            spec,
            sensors: spec.sensors.unwrap_or(s.sensors),
            state: NtlState::new(),
            tdoa_rng: lane_rng(seed, &format!("tdoa/{}", spec.label)),
            sense_rng: lane_rng(seed, &format!("sense/{}", spec.label)),
        })
        .collect();
    let mut totals = vec![NtlTotals::default(); ntls.len()];

    let target = s.target_samples;
    let mut trace = Trace {
        labels: s.ntls.iter().map(|n| n.label.clone()).collect(),
        samples: Vec::with_capacity((target as usize).saturating_mul(ntls.len())),
        fgl_events: Vec::new(),
        totals: Vec::new(),
        episodes: 0,
        master_seed: seed,
    };

    let mut walker = WalkState::start(&s.mobility);
    let mut log: Vec<Reception> = Vec::new();
    let mut next_tick = SimTime::ZERO;
    let mut next_centroid: Option<SimTime> = None;
    let mut ticks = 0u64;

    while ticks < target {
        let tb = beacons.peek_time().expect("beacon schedule is unbounded");
        let before_centroid = |t: SimTime| next_centroid.is_none_or(|c| t <= c);

        if tb <= next_tick && before_centroid(tb) {
            let b = beacons.next().expect("peeked");
            let d = walker.actual_pos.distance(b.source_pos);
            if reception_decision(d, &s.reception, &mut rx_rng) {
                log.push(Reception {
                    time: b.emit_time,
                    source: b.source,
                });
            }
        } else if before_centroid(next_tick) {
            let now = next_tick;
            if ticks == 0 || walker.episode_done {
                walker = WalkState::start(&s.mobility);
                for n in &mut ntls {
                    n.state = NtlState::new();
                }
                next_centroid = Some(now + p);
                trace.episodes += 1;
            } else {
                let ev = walker.advance(&s.mobility, &mut walk_rng)?;
                for n in ntls.iter_mut().filter(|n| n.spec.profile.self_localize) {
                    let sensed = sense_step(&ev, &n.sensors, &mut n.sense_rng);
                    n.state.dead_reckon_accumulate(&n.spec.profile, &sensed)?;
                }
            }
            for (i, n) in ntls.iter().enumerate() {
                trace.samples.push(TraceSample {
                    time: now,
                    ntl: i,
                    actual: walker.actual_pos,
                    estimate: n.state.estimate(&n.spec.profile, now),
                });
            }
            ticks += 1;
            next_tick = now + TICK;
        } else {
            let now = next_centroid.expect("checked above");
            let tally = window_tally(&log, now - p, p)?;
            for (i, n) in ntls.iter_mut().enumerate() {
                let unavailable_before = n.state.fgl_unavailable;
                let out = n.state.update(
                    &tally,
                    walker.actual_pos,
                    &n.spec.profile,
                    &anchors,
                    &s.tdoa,
                    &mut n.tdoa_rng,
                    now,
                );
                if out.fired_fgl {
                    totals[i].fgl_count += 1;
                    trace.fgl_events.push(FglEvent { time: now, ntl: i });
                }
                totals[i].fgl_unavailable += n.state.fgl_unavailable - unavailable_before;
            }
            log.retain(|r| r.time >= now);
            next_centroid = Some(now + p);
        }
    }

    trace.totals = totals;
    Ok(trace)
}

/// Runs replicate `k` on its own. Replicate 0 is the plain scenario.
pub fn run_replicate(s: &Scenario, k: usize) -> Result<Trace> {
    let mut sub = s.clone();
    sub.master_seed = replicate_seed(s.master_seed, k);
    run_scenario(&sub)
}

/// Runs `n` independent replicates in parallel; results are in replicate order.
pub fn run_replicates(s: &Scenario, n: usize) -> Result<Vec<Trace>> {
    if n == 0 {
        return Err(Error::Config("need at least one replicate".into()));
    }
    s.validate()?;
    (0..n).into_par_iter().map(|k| run_replicate(s, k)).collect()
}
