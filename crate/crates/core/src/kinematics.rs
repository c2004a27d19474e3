//! Planar target kinematics: the constant-acceleration motion model used by
//! the filter, and a ground-truth generator that can also fly coordinated
//! turns.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{wrap_angle, Matrix6, Vector6};

/// Position (m), velocity (m/s) and acceleration (m/s^2) of a target in an
/// east-north frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TargetState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub ax: f64,
    pub ay: f64,
}

impl TargetState {
    pub const fn new(x: f64, y: f64, vx: f64, vy: f64, ax: f64, ay: f64) -> Self {
        TargetState {
            x,
            y,
            vx,
            vy,
            ax,
            ay,
        }
    }

    pub fn from_vector(v: &Vector6) -> Self {
        TargetState::new(v[0], v[1], v[2], v[3], v[4], v[5])
    }

    pub fn to_vector(&self) -> Vector6 {
        Vector6::new(self.x, self.y, self.vx, self.vy, self.ax, self.ay)
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|c| c.is_finite())
    }

    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }

    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }

    fn check_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!("non-finite target state {self:?}")))
        }
    }
}

/// Position and heading of the observing UAV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverPose {
    pub x0: f64,
    pub y0: f64,
    /// Radians in (-pi, pi].
    pub heading: f64,
}

impl ObserverPose {
    pub fn new(x0: f64, y0: f64, heading: f64) -> Result<Self> {
        if !(x0.is_finite() && y0.is_finite() && heading.is_finite()) {
            return Err(Error::Domain("non-finite observer pose".into()));
        }
        Ok(ObserverPose {
            x0,
            y0,
            heading: wrap_angle(heading),
        })
    }

    /// Pose of a platform whose kinematic state is `s`; the heading follows
    /// the velocity vector, or zero when at rest.
    pub fn from_state(s: &TargetState) -> Result<Self> {
        let heading = if s.vx == 0.0 && s.vy == 0.0 {
            0.0
        } else {
            s.vy.atan2(s.vx)
        };
        ObserverPose::new(s.x, s.y, heading)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Turn {
    Left,
    Straight,
    Right,
}

impl Turn {
    fn sign(self) -> f64 {
        match self {
            Turn::Left => 1.0,
            Turn::Straight => 0.0,
            Turn::Right => -1.0,
        }
    }
}

/// One entry of a maneuver schedule; applies to steps `start..end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Maneuver {
    pub start: usize,
    pub end: usize,
    pub turn: Turn,
}

/// Flight envelope of a platform. Angles are radians.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionProfile {
    /// Cruise speed and cap (m/s).
    pub speed: f64,
    /// Magnitude of the along-track acceleration used below cruise speed.
    pub acceleration: f64,
    /// Turn rate (rad/s).
    pub angular_speed: f64,
    pub initial_heading: f64,
    pub schedule: Vec<Maneuver>,
}

impl MotionProfile {
    pub fn straight(speed: f64, acceleration: f64, angular_speed: f64, heading: f64) -> Self {
        MotionProfile {
            speed,
            acceleration,
            angular_speed,
            initial_heading: heading,
            schedule: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite_non_negative = |v: f64| v.is_finite() && v >= 0.0;
        if !finite_non_negative(self.speed) {
            return Err(Error::Domain(format!(
                "speed must be >= 0, got {}",
                self.speed
            )));
        }
        if !finite_non_negative(self.acceleration) {
            return Err(Error::Domain(format!(
                "acceleration must be >= 0, got {}",
                self.acceleration
            )));
        }
        if !finite_non_negative(self.angular_speed) {
            return Err(Error::Domain(format!(
                "angular speed must be >= 0, got {}",
                self.angular_speed
            )));
        }
        if !self.initial_heading.is_finite() {
            return Err(Error::Domain("initial heading must be finite".into()));
        }
        let mut previous_end = 0;
        for (i, m) in self.schedule.iter().enumerate() {
            if m.start >= m.end {
                return Err(Error::InvalidSchedule(format!(
                    "entry {i} has empty interval {}..{}",
                    m.start, m.end
                )));
            }
            if i > 0 && m.start < previous_end {
                return Err(Error::InvalidSchedule(format!(
                    "entry {i} starting at step {} overlaps or precedes the previous entry ending at {previous_end}",
                    m.start
                )));
            }
            previous_end = m.end;
        }
        Ok(())
    }

    /// The turn in effect while advancing from step `step` to `step + 1`.
    pub fn turn_at(&self, step: usize) -> Turn {
        self.schedule
            .iter()
            .find(|m| (m.start..m.end).contains(&step))
            .map_or(Turn::Straight, |m| m.turn)
    }

    /// State at cruise speed along the initial heading.
    pub fn cruise_state(&self, x: f64, y: f64) -> TargetState {
        let (s, c) = self.initial_heading.sin_cos();
        TargetState::new(x, y, self.speed * c, self.speed * s, 0.0, 0.0)
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt.is_finite() && dt >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "time step must be finite and >= 0, got {dt}"
        )))
    }
}

/// Constant-acceleration transition over `dt` seconds.
pub fn propagate_state(s: &TargetState, dt: f64) -> Result<TargetState> {
    check_dt(dt)?;
    s.check_finite()?;
    let half_dt2 = 0.5 * dt * dt;
    Ok(TargetState {
        x: s.x + s.vx * dt + s.ax * half_dt2,
        y: s.y + s.vy * dt + s.ay * half_dt2,
        vx: s.vx + s.ax * dt,
        vy: s.vy + s.ay * dt,
        ax: s.ax,
        ay: s.ay,
    })
}

/// Jacobian of [`propagate_state`]; the model is linear so this is the exact
/// transition matrix.
pub fn motion_jacobian(dt: f64) -> Result<Matrix6> {
    check_dt(dt)?;
    let mut f = Matrix6::identity();
    let half_dt2 = 0.5 * dt * dt;
    for axis in 0..2 {
        f[(axis, 2 + axis)] = dt;
        f[(axis, 4 + axis)] = half_dt2;
        f[(2 + axis, 4 + axis)] = dt;
    }
    Ok(f)
}

fn turn_step(s: &TargetState, rate: f64, dt: f64) -> TargetState {
    // Exact arc: v(t) = R(rate t) v0, p(t) = p0 + integral of v.
    let angle = rate * dt;
    let (sin, cos) = angle.sin_cos();
    let vx = cos * s.vx - sin * s.vy;
    let vy = sin * s.vx + cos * s.vy;
    let (dx, dy) = if rate.abs() < 1e-12 {
        (s.vx * dt, s.vy * dt)
    } else {
        // (R(angle) - I) J^-1 v0 / rate with J the 90 degree rotation.
        let a = sin / rate;
        let b = (1.0 - cos) / rate;
        (a * s.vx - b * s.vy, b * s.vx + a * s.vy)
    };
    TargetState {
        x: s.x + dx,
        y: s.y + dy,
        vx,
        vy,
        ax: -rate * vy,
        ay: rate * vx,
    }
}

fn straight_step(profile: &MotionProfile, s: &TargetState, dt: f64) -> Result<TargetState> {
    let speed = s.speed();
    let cruise = TargetState {
        ax: 0.0,
        ay: 0.0,
        ..*s
    };
    if profile.acceleration == 0.0 || speed >= profile.speed {
        return propagate_state(&cruise, dt);
    }
    let (ux, uy) = if speed > 0.0 {
        (s.vx / speed, s.vy / speed)
    } else {
        let (sin, cos) = profile.initial_heading.sin_cos();
        (cos, sin)
    };
    let accelerating = TargetState {
        ax: profile.acceleration * ux,
        ay: profile.acceleration * uy,
        ..*s
    };
    let time_to_cap = (profile.speed - speed) / profile.acceleration;
    if time_to_cap >= dt {
        return propagate_state(&accelerating, dt);
    }
    let capped = propagate_state(&accelerating, time_to_cap)?;
    propagate_state(
        &TargetState {
            ax: 0.0,
            ay: 0.0,
            ..capped
        },
        dt - time_to_cap,
    )
}

/// Ground-truth trajectory of `n_steps` steps starting at `start`; the result
/// has `n_steps + 1` states.
///
/// Straight steps accelerate along the velocity direction until
/// `profile.speed` is reached and cruise afterwards. Turn steps rotate the
/// velocity at `profile.angular_speed` with speed held constant.
pub fn generate_trajectory(
    profile: &MotionProfile,
    start: TargetState,
    n_steps: usize,
    dt: f64,
) -> Result<Vec<TargetState>> {
    profile.validate()?;
    start.check_finite()?;
    if n_steps == 0 {
        return Err(Error::Domain("trajectory needs at least one step".into()));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Domain(format!("time step must be > 0, got {dt}")));
    }
    let speed_bound = 1.5 * profile.speed;
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(start);
    let mut current = start;
    for step in 0..n_steps {
        current = match profile.turn_at(step) {
            Turn::Straight => straight_step(profile, &current, dt)?,
            turn => turn_step(&current, turn.sign() * profile.angular_speed, dt),
        };
        if !current.is_finite() || current.speed() > speed_bound.max(start.speed()) + 1e-9 {
            return Err(Error::Domain(format!(
                "trajectory left its speed envelope at step {}",
                step + 1
            )));
        }
        states.push(current);
    }
    Ok(states)
}

/// Heading of the velocity vector, radians in (-pi, pi].
pub fn velocity_heading(s: &TargetState) -> f64 {
    wrap_angle(s.vy.atan2(s.vx))
}

pub fn degrees_to_radians(deg: f64) -> f64 {
    deg * PI / 180.0
}

pub fn radians_to_degrees(rad: f64) -> f64 {
    rad * 180.0 / PI
}
