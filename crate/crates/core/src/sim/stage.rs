//! Arena and obstacle layouts.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use super::SimError;

/// How an obstacle moves over time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Motion {
    Static,
    /// Sinusoidal oscillation `base + axis·amplitude·sin(2π·t/period + phase)`.
    Oscillating {
        axis: (f64, f64),
        amplitude: f64,
        period: f64,
        phase: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    pub center: (f64, f64),
    pub radius: f64,
    pub motion: Motion,
}

impl Obstacle {
    pub fn fixed(x: f64, y: f64, radius: f64) -> Self {
        Self {
            center: (x, y),
            radius,
            motion: Motion::Static,
        }
    }

    /// Oscillating obstacle; `axis` is normalized here.
    pub fn oscillating(
        x: f64,
        y: f64,
        radius: f64,
        axis: (f64, f64),
        amplitude: f64,
        period: f64,
        phase: f64,
    ) -> Self {
        let n = axis.0.hypot(axis.1);
        let axis = if n > 0.0 { (axis.0 / n, axis.1 / n) } else { axis };
        Self {
            center: (x, y),
            radius,
            motion: Motion::Oscillating {
                axis,
                amplitude,
                period,
                phase,
            },
        }
    }

    pub fn is_static(&self) -> bool {
        matches!(self.motion, Motion::Static)
    }

    /// Center position at simulation time `t`.
    pub fn center_at(&self, t: f64) -> (f64, f64) {
        match self.motion {
            Motion::Static => self.center,
            Motion::Oscillating {
                axis,
                amplitude,
                period,
                phase,
            } => {
                let s = amplitude * (TAU * t / period + phase).sin();
                (self.center.0 + axis.0 * s, self.center.1 + axis.1 * s)
            }
        }
    }

    /// Largest per-coordinate excursion of the center from its base.
    fn reach(&self) -> (f64, f64) {
        match self.motion {
            Motion::Static => (0.0, 0.0),
            Motion::Oscillating { axis, amplitude, .. } => {
                (axis.0.abs() * amplitude, axis.1.abs() * amplitude)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarSpec {
    pub beams: usize,
    pub max_range: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageSpec {
    pub name: String,
    /// Half side length of the square arena, measured to the wall centerlines.
    pub arena_half_extent: f64,
    pub wall_thickness: f64,
    pub obstacles: Vec<Obstacle>,
    pub robot_radius: f64,
    pub goal_radius: f64,
    /// Episode step budget.
    pub time_limit: u32,
    pub dt: f64,
    pub lidar: LidarSpec,
}

pub const STAGE_NAMES: [&str; 3] = ["stage0", "stageA", "stageB"];

impl StageSpec {
    fn base(name: &str) -> Self {
        Self {
            name: name.to_string(),
            arena_half_extent: 2.5,
            wall_thickness: 0.1,
            obstacles: Vec::new(),
            robot_radius: 0.105,
            goal_radius: 0.20,
            time_limit: 500,
            dt: 0.1,
            lidar: LidarSpec {
                beams: 24,
                max_range: 3.5,
            },
        }
    }

    /// Coordinate of the inner wall faces (the free area is `[-h, h]²`).
    pub fn inner_half_extent(&self) -> f64 {
        self.arena_half_extent - 0.5 * self.wall_thickness
    }

    /// Wall segments along the inner faces, counter-clockwise.
    pub fn wall_segments(&self) -> [((f64, f64), (f64, f64)); 4] {
        let h = self.inner_half_extent();
        [
            ((-h, -h), (h, -h)),
            ((h, -h), (h, h)),
            ((h, h), (-h, h)),
            ((-h, h), (-h, -h)),
        ]
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidSpec(msg));
        if self.time_limit < 1 {
            return bad("time_limit must be >= 1".into());
        }
        if !(self.dt > 0.0) {
            return bad(format!("dt must be > 0, got {}", self.dt));
        }
        if self.lidar.beams < 3 {
            return bad(format!("lidar beams must be >= 3, got {}", self.lidar.beams));
        }
        if !(self.lidar.max_range > 0.0) {
            return bad("lidar max_range must be > 0".into());
        }
        if !(self.goal_radius > 0.0) {
            return bad("goal_radius must be > 0".into());
        }
        if !(self.robot_radius > 0.0) {
            return bad("robot_radius must be > 0".into());
        }
        if !(self.wall_thickness >= 0.0) || !(self.inner_half_extent() > 0.0) {
            return bad("arena extent must exceed half the wall thickness".into());
        }
        let h = self.inner_half_extent();
        for (i, o) in self.obstacles.iter().enumerate() {
            if !(o.radius > 0.0) {
                return bad(format!("obstacle {i}: radius must be > 0"));
            }
            if let Motion::Oscillating { period, amplitude, axis, .. } = o.motion {
                if !(period > 0.0) {
                    return bad(format!("obstacle {i}: period must be > 0"));
                }
                if !(amplitude >= 0.0) || !axis.0.is_finite() || !axis.1.is_finite() {
                    return bad(format!("obstacle {i}: invalid oscillation"));
                }
            }
            let (rx, ry) = o.reach();
            if o.center.0.abs() + rx + o.radius > h || o.center.1.abs() + ry + o.radius > h {
                return bad(format!("obstacle {i} leaves the arena"));
            }
        }
        Ok(())
    }
}

/// Builds one of the named presets.
pub fn stage_build(name: &str) -> Result<StageSpec, SimError> {
    let osc = |x, y, axis, phase| Obstacle::oscillating(x, y, 0.15, axis, 0.8, 8.0, phase);
    let spec = match name {
        "stage0" => StageSpec::base("stage0"),
        "stageA" => {
            let mut s = StageSpec::base("stageA");
            s.obstacles = vec![
                Obstacle::fixed(0.0, 0.0, 0.3),
                Obstacle::fixed(-0.6, 1.5, 0.3),
                Obstacle::fixed(0.6, -1.5, 0.3),
                osc(-1.4, -1.6, (1.0, 0.0), 0.0),
                osc(1.4, 1.6, (1.0, 0.0), PI),
                osc(1.3, 0.0, (0.0, 1.0), FRAC_PI_2),
                osc(-1.3, 0.0, (0.0, 1.0), 3.0 * FRAC_PI_2),
            ];
            s
        }
        "stageB" => {
            let mut s = StageSpec::base("stageB");
            let mv = |x, y, axis, phase| Obstacle::oscillating(x, y, 0.2, axis, 0.8, 8.0, phase);
            s.obstacles = vec![
                mv(0.0, -1.6, (1.0, 0.0), 0.0),
                mv(0.0, 1.6, (1.0, 0.0), PI),
                mv(-1.6, 0.0, (0.0, 1.0), FRAC_PI_2),
                mv(1.6, 0.0, (0.0, 1.0), 3.0 * FRAC_PI_2),
                mv(-0.6, 0.0, (0.0, 1.0), 0.0),
                mv(0.6, 0.0, (0.0, 1.0), PI),
            ];
            s
        }
        other => return Err(SimError::NotFound(other.to_string())),
    };
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_obstacle_counts() {
        let a = stage_build("stageA").unwrap();
        assert_eq!(a.obstacles.iter().filter(|o| o.is_static()).count(), 3);
        assert_eq!(a.obstacles.iter().filter(|o| !o.is_static()).count(), 4);
        let b = stage_build("stageB").unwrap();
        assert_eq!(b.obstacles.iter().filter(|o| o.is_static()).count(), 0);
        assert_eq!(b.obstacles.len(), 6);
        assert!(stage_build("stage0").unwrap().obstacles.is_empty());
    }

    #[test]
    fn unknown_stage() {
        assert!(matches!(stage_build("stageZ"), Err(SimError::NotFound(n)) if n == "stageZ"));
    }

    #[test]
    fn obstacles_stay_inside() {
        for name in STAGE_NAMES {
            let s = stage_build(name).unwrap();
            let h = s.inner_half_extent();
            for o in &s.obstacles {
                for k in 0..400 {
                    let (x, y) = o.center_at(k as f64 * 0.05);
                    assert!(x.abs() + o.radius <= h + 1e-12);
                    assert!(y.abs() + o.radius <= h + 1e-12);
                }
            }
        }
    }

    #[test]
    fn validation_catches_bad_specs() {
        let mut s = stage_build("stage0").unwrap();
        s.lidar.beams = 2;
        assert!(s.validate().is_err());
        let mut s = stage_build("stage0").unwrap();
        s.obstacles.push(Obstacle::fixed(2.4, 0.0, 0.3));
        assert!(s.validate().is_err());
        let mut s = stage_build("stage0").unwrap();
        s.obstacles.push(Obstacle::oscillating(0.0, 0.0, 0.2, (1.0, 0.0), 0.5, 0.0, 0.0));
        assert!(s.validate().is_err());
    }
}
