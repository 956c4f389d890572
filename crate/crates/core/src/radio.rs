//! Periodic beaconing from the reference lattice and beacon reception at the
//! moving node.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GridConfig, NodeId, Point2D, DISTANCE_TOLERANCE};
use crate::time::SimTime;

/// How a beacon at a given distance is received.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ReceptionModel {
    /// Received iff within range.
    IdealDisk { range_m: f64 },
    /// Within range, each beacon is lost independently with `loss_prob`.
    BernoulliDisk { range_m: f64, loss_prob: f64 },
    /// Certain up to `reliable_radius_m`, then linearly fading to zero at `range_m`.
    DistanceDecay { reliable_radius_m: f64, range_m: f64 },
}

impl ReceptionModel {
    pub fn range(&self) -> f64 {
        match *self {
            ReceptionModel::IdealDisk { range_m }
            | ReceptionModel::BernoulliDisk { range_m, .. }
            | ReceptionModel::DistanceDecay { range_m, .. } => range_m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let range = self.range();
        if !(range.is_finite() && range > 0.0) {
            return Err(Error::Config(format!("reception range must be positive, got {range}")));
        }
        match *self {
            ReceptionModel::IdealDisk { .. } => Ok(()),
            ReceptionModel::BernoulliDisk { loss_prob, .. } => {
                if (0.0..1.0).contains(&loss_prob) {
                    Ok(())
                } else {
                    Err(Error::Config(format!("loss_prob must lie in [0, 1), got {loss_prob}")))
                }
            }
            ReceptionModel::DistanceDecay {
                reliable_radius_m, ..
            } => {
                if reliable_radius_m > 0.0 && reliable_radius_m <= range {
                    Ok(())
                } else {
                    Err(Error::Config(format!(
                        "reliable radius must lie in (0, {range}], got {reliable_radius_m}"
                    )))
                }
            }
        }
    }

    /// Probability that a single beacon sent from `distance` away is received.
    pub fn probability(&self, distance: f64) -> f64 {
        if distance > self.range() + DISTANCE_TOLERANCE {
            return 0.0;
        }
        match *self {
            ReceptionModel::IdealDisk { .. } => 1.0,
            ReceptionModel::BernoulliDisk { loss_prob, .. } => 1.0 - loss_prob,
            ReceptionModel::DistanceDecay {
                reliable_radius_m,
                range_m,
            } => {
                if distance <= reliable_radius_m {
                    1.0
                } else {
                    ((range_m - distance) / (range_m - reliable_radius_m)).clamp(0.0, 1.0)
                }
            }
        }
    }
}

/// Decides whether one beacon is received. Random models consume exactly one
/// uniform draw for in-range beacons; out-of-range and ideal-disk decisions
/// consume nothing.
pub fn reception_decision<R: Rng + ?Sized>(distance: f64, model: &ReceptionModel, rng: &mut R) -> bool {
    let p = model.probability(distance);
    match model {
        ReceptionModel::IdealDisk { .. } => p > 0.0,
        _ if p <= 0.0 => false,
        ReceptionModel::BernoulliDisk { loss_prob, .. } => rng.random::<f64>() >= *loss_prob,
        ReceptionModel::DistanceDecay { .. } => rng.random::<f64>() < p,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beacon {
    pub source: NodeId,
    pub source_pos: Point2D,
    pub emit_time: SimTime,
}

/// Merged, time-ordered beacon stream of every lattice node. Ties at the same
/// instant are broken by node id. The stream is unbounded.
#[derive(Debug, Clone)]
pub struct BeaconSchedule {
    grid: GridConfig,
    interval: SimTime,
    heap: BinaryHeap<Reverse<(SimTime, NodeId)>>,
}

impl BeaconSchedule {
    pub fn new(grid: GridConfig, interval: SimTime, phases: &[SimTime]) -> Result<Self> {
        grid.validate()?;
        if interval == SimTime::ZERO {
            return Err(Error::Config("beacon interval must be positive".into()));
        }
        if phases.len() != grid.node_count() {
            return Err(Error::Config(format!(
                "{} phases given for {} nodes",
                phases.len(),
                grid.node_count()
            )));
        }
        if let Some(bad) = phases.iter().find(|&&ph| ph >= interval) {
            return Err(Error::Config(format!(
                "beacon phase {bad} not within [0, {interval})"
            )));
        }
        let heap = phases
            .iter()
            .enumerate()
            .map(|(i, &ph)| Reverse((ph, NodeId(i))))
            .collect();
        Ok(Self {
            grid,
            interval,
            heap,
        })
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|Reverse((t, _))| *t)
    }
}

impl Iterator for BeaconSchedule {
    type Item = Beacon;

    fn next(&mut self) -> Option<Beacon> {
        let Reverse((t, id)) = self.heap.pop()?;
        self.heap.push(Reverse((t + self.interval, id)));
        Some(Beacon {
            source: id,
            source_pos: self.grid.position(id),
            emit_time: t,
        })
    }
}

/// Emission stream of every node of `grid` at `phase + k·interval`.
pub fn beacon_schedule(grid: &GridConfig, interval: SimTime, phases: &[SimTime]) -> Result<BeaconSchedule> {
    BeaconSchedule::new(*grid, interval, phases)
}

/// One received beacon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reception {
    pub time: SimTime,
    pub source: NodeId,
}

/// Beacons heard from each node within one centroid window.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BeaconTally {
    pub window_start: SimTime,
    pub window_len: SimTime,
    pub counts: BTreeMap<NodeId, u32>,
}

impl BeaconTally {
    pub fn total(&self) -> u32 {
        self.counts.values().sum()
    }

    pub fn count(&self, id: NodeId) -> u32 {
        self.counts.get(&id).copied().unwrap_or(0)
    }
}

/// Counts receptions with `window_start <= t < window_start + window_len`.
pub fn window_tally(receptions: &[Reception], window_start: SimTime, window_len: SimTime) -> Result<BeaconTally> {
    if let Some(w) = receptions.windows(2).find(|w| w[1].time < w[0].time) {
        return Err(Error::Contract(format!(
            "receptions not sorted by time: {} after {}",
            w[1].time, w[0].time
        )));
    }
    let end = window_start + window_len;
    let lo = receptions.partition_point(|r| r.time < window_start);
    let hi = receptions.partition_point(|r| r.time < end);
    let mut counts = BTreeMap::new();
    for r in &receptions[lo..hi] {
        *counts.entry(r.source).or_insert(0) += 1;
    }
    Ok(BeaconTally {
        window_start,
        window_len,
        counts,
    })
}
