//! Range/bearing radar observation model and Gaussian error sampling.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kinematics::{ObserverPose, TargetState};
use crate::linalg::{
    is_psd, min_eigenvalue, psd_sqrt, wrap_angle, Matrix2, Matrix2x6, Matrix6, Vector2,
};

/// Range (m) and bearing (rad, east = 0, counter-clockwise) to a target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarMeasurement {
    pub range: f64,
    pub bearing: f64,
}

impl RadarMeasurement {
    pub fn new(range: f64, bearing: f64) -> Result<Self> {
        if !(range.is_finite() && bearing.is_finite()) || range < 0.0 {
            return Err(Error::Domain(format!(
                "invalid measurement: range {range}, bearing {bearing}"
            )));
        }
        Ok(RadarMeasurement {
            range,
            bearing: wrap_angle(bearing),
        })
    }

    pub fn to_vector(&self) -> Vector2 {
        Vector2::new(self.range, self.bearing)
    }
}

/// Radar error covariance (m^2, rad^2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementNoise {
    covariance: Matrix2,
}

impl MeasurementNoise {
    pub fn new(covariance: Matrix2) -> Result<Self> {
        if !is_psd(&covariance) {
            return Err(Error::NotPsd {
                what: "measurement noise",
                min_eigenvalue: min_eigenvalue(&covariance),
            });
        }
        Ok(MeasurementNoise { covariance })
    }

    pub fn diagonal(range_variance: f64, bearing_variance: f64) -> Result<Self> {
        Self::new(Matrix2::new(range_variance, 0.0, 0.0, bearing_variance))
    }

    pub fn covariance(&self) -> &Matrix2 {
        &self.covariance
    }
}

/// Covariance added in the prediction step, laid out like [`TargetState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessNoise {
    covariance: Matrix6,
}

impl ProcessNoise {
    pub fn new(covariance: Matrix6) -> Result<Self> {
        if !is_psd(&covariance) {
            return Err(Error::NotPsd {
                what: "process noise",
                min_eigenvalue: min_eigenvalue(&covariance),
            });
        }
        Ok(ProcessNoise { covariance })
    }

    pub fn diagonal(diag: [f64; 6]) -> Result<Self> {
        Self::new(Matrix6::from_diagonal(&diag.into()))
    }

    pub fn zero() -> Self {
        ProcessNoise {
            covariance: Matrix6::zeros(),
        }
    }

    pub fn covariance(&self) -> &Matrix6 {
        &self.covariance
    }
}

fn offset(pose: &ObserverPose, s: &TargetState) -> (f64, f64) {
    (s.x - pose.x0, s.y - pose.y0)
}

/// Measurement function h: range and bearing from `pose` to `s`.
pub fn observe(pose: &ObserverPose, s: &TargetState) -> Result<RadarMeasurement> {
    let (dx, dy) = offset(pose, s);
    if !(dx.is_finite() && dy.is_finite()) {
        return Err(Error::Domain("non-finite geometry".into()));
    }
    if dx == 0.0 && dy == 0.0 {
        return Err(Error::SingularGeometry);
    }
    Ok(RadarMeasurement {
        range: dx.hypot(dy),
        bearing: dy.atan2(dx),
    })
}

/// Target position recovered from a range/bearing pair.
pub fn target_position_from_measurement(pose: &ObserverPose, m: &RadarMeasurement) -> (f64, f64) {
    let (sin, cos) = m.bearing.sin_cos();
    (pose.x0 + m.range * cos, pose.y0 + m.range * sin)
}

/// Jacobian of [`observe`] with respect to the six state components.
pub fn measurement_jacobian(pose: &ObserverPose, s: &TargetState) -> Result<Matrix2x6> {
    let (dx, dy) = offset(pose, s);
    let r2 = dx * dx + dy * dy;
    if r2 == 0.0 {
        return Err(Error::SingularGeometry);
    }
    let r = r2.sqrt();
    let mut h = Matrix2x6::zeros();
    h[(0, 0)] = dx / r;
    h[(0, 1)] = dy / r;
    h[(1, 0)] = -dy / r2;
    h[(1, 1)] = dx / r2;
    Ok(h)
}

/// Adds a zero-mean Gaussian error with the configured covariance.
///
/// Returns the noisy measurement and whether the range had to be clamped at
/// zero. Two standard normal draws are consumed on every call, even for a
/// zero covariance, so the stream position does not depend on the noise.
pub fn sample_noisy_measurement<R: Rng + ?Sized>(
    true_m: &RadarMeasurement,
    noise: &MeasurementNoise,
    rng: &mut R,
) -> (RadarMeasurement, bool) {
    let z = Vector2::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    let e = psd_sqrt(noise.covariance()) * z;
    let raw_range = true_m.range + e[0];
    let clamped = raw_range < 0.0;
    (
        RadarMeasurement {
            range: raw_range.max(0.0),
            bearing: wrap_angle(true_m.bearing + e[1]),
        },
        clamped,
    )
}
