//! Pedestrian walk across the grid and error-prone step sensing.
//!
//! The walker starts at the top-left corner of the field and heads for the
//! bottom-right corner, one step per second, moving only right or down. Every
//! `segment_len` steps it re-draws its direction; a direction that would leave
//! the field is replaced by the other one.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Displacement, Point2D, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobilityConfig {
    pub stride_min: f64,
    pub stride_max: f64,
    /// Steps taken before the direction is re-drawn.
    pub segment_len: u32,
    pub field: Rect,
}

impl MobilityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.stride_min > 0.0 && self.stride_min <= self.stride_max && self.stride_max.is_finite()) {
            return Err(Error::Config(format!(
                "stride range [{}, {}] invalid",
                self.stride_min, self.stride_max
            )));
        }
        if self.segment_len == 0 {
            return Err(Error::Config("segment length must be at least one step".into()));
        }
        if self.field.width() < self.stride_max || self.field.height() < self.stride_max {
            return Err(Error::Config("field smaller than one stride".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Right,
    Down,
}

impl Direction {
    pub fn other(self) -> Direction {
        match self {
            Direction::Right => Direction::Down,
            Direction::Down => Direction::Right,
        }
    }

    /// Heading in radians with `y` pointing down: right is 0, down is π/2.
    pub fn heading(self) -> f64 {
        match self {
            Direction::Right => 0.0,
            Direction::Down => std::f64::consts::FRAC_PI_2,
        }
    }

    pub fn unit(self) -> Displacement {
        match self {
            Direction::Right => Displacement::new(1.0, 0.0),
            Direction::Down => Displacement::new(0.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepEvent {
    pub stride: f64,
    pub dir: Direction,
}

impl StepEvent {
    pub fn displacement(&self) -> Displacement {
        let u = self.dir.unit();
        Displacement::new(u.dx * self.stride, u.dy * self.stride)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkState {
    pub actual_pos: Point2D,
    pub current_dir: Direction,
    pub steps_in_segment: u32,
    pub episode_done: bool,
}

impl WalkState {
    /// A fresh episode at the top-left corner of the field.
    pub fn start(cfg: &MobilityConfig) -> Self {
        Self {
            actual_pos: cfg.field.min,
            current_dir: Direction::Right,
            steps_in_segment: 0,
            episode_done: false,
        }
    }

    fn room(&self, cfg: &MobilityConfig, dir: Direction) -> f64 {
        match dir {
            Direction::Right => cfg.field.max.x - self.actual_pos.x,
            Direction::Down => cfg.field.max.y - self.actual_pos.y,
        }
    }

    /// Takes one step. Each call draws the stride, then (at a segment
    /// boundary) the direction.
    ///
    /// The episode ends once fewer than `stride_max` meters remain along both
    /// axes, so a full stride always fits in at least one direction while the
    /// episode is running.
    pub fn advance<R: Rng + ?Sized>(&mut self, cfg: &MobilityConfig, rng: &mut R) -> Result<StepEvent> {
        if self.episode_done {
            return Err(Error::Contract("advance called after the episode finished".into()));
        }
        let stride = if cfg.stride_max > cfg.stride_min {
            rng.random_range(cfg.stride_min..=cfg.stride_max)
        } else {
            cfg.stride_min
        };
        if self.steps_in_segment == 0 {
            self.current_dir = if rng.random::<bool>() {
                Direction::Right
            } else {
                Direction::Down
            };
        }
        if self.room(cfg, self.current_dir) < stride {
            self.current_dir = self.current_dir.other();
        }
        let event = StepEvent {
            stride,
            dir: self.current_dir,
        };
        self.actual_pos = self.actual_pos + event.displacement();
        self.steps_in_segment = (self.steps_in_segment + 1) % cfg.segment_len;
        self.episode_done = self.room(cfg, Direction::Right) < cfg.stride_max
            && self.room(cfg, Direction::Down) < cfg.stride_max;
        Ok(event)
    }
}

/// Free-function form of [`WalkState::advance`].
pub fn advance_walk<R: Rng + ?Sized>(
    state: &WalkState,
    cfg: &MobilityConfig,
    rng: &mut R,
) -> Result<(WalkState, StepEvent)> {
    let mut next = *state;
    let ev = next.advance(cfg, rng)?;
    Ok((next, ev))
}

/// Stride / step-detection / heading accuracy of the motion sensors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorErrorModel {
    /// Reported stride as a fraction of the true stride.
    pub stride_accuracy: f64,
    /// Probability that a step is detected at all.
    pub detect_accuracy: f64,
    pub heading_error_deg: f64,
}

impl SensorErrorModel {
    pub const PERFECT: SensorErrorModel = SensorErrorModel {
        stride_accuracy: 1.0,
        detect_accuracy: 1.0,
        heading_error_deg: 0.0,
    };

    pub const ACCURATE: SensorErrorModel = SensorErrorModel {
        stride_accuracy: 0.95,
        detect_accuracy: 0.99,
        heading_error_deg: 5.0,
    };

    pub const INACCURATE: SensorErrorModel = SensorErrorModel {
        stride_accuracy: 0.90,
        detect_accuracy: 0.90,
        heading_error_deg: 10.0,
    };

    pub fn validate(&self) -> Result<()> {
        let ratio_ok = |v: f64| v > 0.0 && v <= 1.0;
        if !ratio_ok(self.stride_accuracy) || !ratio_ok(self.detect_accuracy) {
            return Err(Error::Config(format!(
                "sensor accuracies must lie in (0, 1], got SA={} DA={}",
                self.stride_accuracy, self.detect_accuracy
            )));
        }
        if !(self.heading_error_deg >= 0.0 && self.heading_error_deg.is_finite()) {
            return Err(Error::Config(format!(
                "heading error must be non-negative, got {}",
                self.heading_error_deg
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensedStep {
    pub detected: bool,
    pub reported_stride: f64,
    pub reported_heading: f64,
}

impl SensedStep {
    pub fn displacement(&self) -> Displacement {
        if self.detected {
            Displacement::from_polar(self.reported_stride, self.reported_heading)
        } else {
            Displacement::ZERO
        }
    }
}

/// Senses one step. Exactly one uniform draw decides detection.
///
/// The heading bias always leans toward the other axis: a step to the right
/// is reported rotated downwards, a step down is reported rotated to the right.
pub fn sense_step<R: Rng + ?Sized>(event: &StepEvent, err: &SensorErrorModel, rng: &mut R) -> SensedStep {
    let detected = rng.random::<f64>() < err.detect_accuracy;
    let bias = err.heading_error_deg.to_radians();
    let reported_heading = match event.dir {
        Direction::Right => event.dir.heading() + bias,
        Direction::Down => event.dir.heading() - bias,
    };
    SensedStep {
        detected,
        reported_stride: err.stride_accuracy * event.stride,
        reported_heading,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::lane_rng;

    fn cfg(stride_min: f64, stride_max: f64, n: u32, side: f64) -> MobilityConfig {
        MobilityConfig {
            stride_min,
            stride_max,
            segment_len: n,
            field: Rect {
                min: Point2D::ORIGIN,
                max: Point2D::new(side, side),
            },
        }
    }

    #[test]
    fn ten_right_steps_sum_strides() {
        let c = cfg(0.7, 0.8, 20, 300.0);
        let mut rng = lane_rng(5, "walk");
        let mut w = WalkState::start(&c);
        let mut total = 0.0;
        // Force the direction by pinning the segment to Right after the first draw.
        for i in 0..10 {
            if i == 0 {
                w.current_dir = Direction::Right;
                w.steps_in_segment = 1;
            }
            let ev = w.advance(&c, &mut rng).unwrap();
            assert_eq!(ev.dir, Direction::Right);
            total += ev.stride;
        }
        assert!((w.actual_pos.x - total).abs() < 1e-12);
        assert_eq!(w.actual_pos.y, 0.0);
        assert!((7.0..=8.0).contains(&w.actual_pos.x));
    }

    #[test]
    fn unit_strides_walk_manhattan_lattice() {
        let c = cfg(1.0, 1.0, 1, 5.0);
        let mut rng = lane_rng(6, "walk");
        let mut w = WalkState::start(&c);
        let mut steps = 0;
        while !w.episode_done {
            w.advance(&c, &mut rng).unwrap();
            assert_eq!(w.actual_pos.x.fract(), 0.0);
            assert_eq!(w.actual_pos.y.fract(), 0.0);
            steps += 1;
        }
        // Episode ends once less than one stride remains on both axes: at (5,5).
        assert_eq!(steps, 10);
        assert_eq!(w.actual_pos, Point2D::new(5.0, 5.0));
        assert!(w.advance(&c, &mut rng).is_err());
    }

    #[test]
    fn right_edge_forces_down() {
        let c = cfg(0.7, 0.8, 10, 300.0);
        let mut rng = lane_rng(7, "walk");
        let mut w = WalkState {
            actual_pos: Point2D::new(300.0 - 0.8 + 0.05, 10.0),
            current_dir: Direction::Right,
            steps_in_segment: 3,
            episode_done: false,
        };
        let ev = w.advance(&c, &mut rng).unwrap();
        assert_eq!(ev.dir, Direction::Down);
        assert_eq!(w.current_dir, Direction::Down);
    }

    #[test]
    fn error_free_sensing_is_exact() {
        let mut rng = lane_rng(8, "sense");
        for dir in [Direction::Right, Direction::Down] {
            let ev = StepEvent { stride: 0.73, dir };
            let s = sense_step(&ev, &SensorErrorModel::PERFECT, &mut rng);
            assert!(s.detected);
            let d = s.displacement();
            let a = ev.displacement();
            assert!((d.dx - a.dx).abs() < 1e-15 && (d.dy - a.dy).abs() < 1e-15);
        }
    }

    #[test]
    fn accurate_sensor_reported_vector() {
        let mut rng = lane_rng(9, "sense");
        let err = SensorErrorModel {
            detect_accuracy: 1.0,
            ..SensorErrorModel::ACCURATE
        };
        let s = sense_step(
            &StepEvent {
                stride: 0.8,
                dir: Direction::Right,
            },
            &err,
            &mut rng,
        );
        let d = s.displacement();
        assert!((d.dx - 0.757_107_970_5).abs() < 1e-9);
        assert!((d.dy - 0.066_238_364_5).abs() < 1e-9);

        let down = sense_step(
            &StepEvent {
                stride: 0.8,
                dir: Direction::Down,
            },
            &err,
            &mut rng,
        )
        .displacement();
        assert!((down.dx - 0.066_238_364_5).abs() < 1e-9);
        assert!((down.dy - 0.757_107_970_5).abs() < 1e-9);
    }

    #[test]
    fn detection_frequency() {
        let mut rng = lane_rng(10, "sense");
        let err = SensorErrorModel {
            stride_accuracy: 1.0,
            detect_accuracy: 0.9,
            heading_error_deg: 0.0,
        };
        let ev = StepEvent {
            stride: 0.75,
            dir: Direction::Down,
        };
        let n = 100_000;
        let hits = (0..n).filter(|_| sense_step(&ev, &err, &mut rng).detected).count();
        assert!((hits as f64 / n as f64 - 0.9).abs() < 0.005);
    }

    #[test]
    fn config_validation() {
        assert!(cfg(0.8, 0.7, 10, 300.0).validate().is_err());
        assert!(cfg(0.7, 0.8, 0, 300.0).validate().is_err());
        assert!(cfg(0.7, 0.8, 10, 300.0).validate().is_ok());
        assert!(SensorErrorModel {
            stride_accuracy: 0.0,
            ..SensorErrorModel::PERFECT
        }
        .validate()
        .is_err());
    }
}
