//! Extended Kalman filter that fuses radar range/bearing measurements with
//! communication-derived location uncertainty.
//!
//! The communication channel enters the filter as the additive covariance of
//! the prediction step: each cycle propagates the estimate with the
//! constant-acceleration model, inflates the covariance by the communication
//! location covariance, then corrects with the radar measurement.

mod metrics;
mod trial;

pub use metrics::{
    estimate_error_variances, rho_confidence_interval, sample_variance, sensing_improvement_ratio,
    FusionMetrics,
};
pub use trial::{
    run_fusion_trial, run_trials, trial_rng, InitPolicy, StepRecord, TrackingScenario, TrialRecord,
};

use nalgebra::SMatrix;

use crate::error::{Error, Result};
use crate::kinematics::{motion_jacobian, propagate_state, ObserverPose, TargetState};
use crate::linalg::{condition_number, is_psd, symmetrize, wrap_angle, Matrix6, Vector2};
use crate::measurement::{
    measurement_jacobian, observe, MeasurementNoise, ProcessNoise, RadarMeasurement,
};

/// Innovation covariances with a condition number above this are treated as
/// singular.
pub const MAX_INNOVATION_CONDITION: f64 = 1e12;

/// How the posterior covariance is formed after a measurement update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovarianceForm {
    /// `P - G H P`, then symmetrized.
    #[default]
    Standard,
    /// `(I - G H) P (I - G H)^T + G R G^T`.
    Joseph,
}

/// How the predicted measurement is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PredictedMeasurement {
    /// `h(S(k|k-1))`, the usual EKF choice.
    #[default]
    Nonlinear,
    /// `H * S(k-1|k-1)` with `H` evaluated at the predicted state. This is a
    /// literal transcription of the linearized observation step; it ignores
    /// the observer offset and is only useful for comparison runs.
    LinearizedPrior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FilterOptions {
    pub covariance_form: CovarianceForm,
    pub predicted_measurement: PredictedMeasurement,
}

/// Filter mean, covariance and step index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterState {
    pub estimate: TargetState,
    pub covariance: Matrix6,
    pub step: usize,
    /// Mean before the most recent prediction, kept for
    /// [`PredictedMeasurement::LinearizedPrior`].
    pub previous_estimate: Option<TargetState>,
}

impl FilterState {
    pub fn new(estimate: TargetState, covariance: Matrix6) -> Result<Self> {
        if !estimate.is_finite() {
            return Err(Error::Domain("initial estimate must be finite".into()));
        }
        if !is_psd(&covariance) {
            return Err(Error::NotPsd {
                what: "initial covariance",
                min_eigenvalue: crate::linalg::min_eigenvalue(&covariance),
            });
        }
        Ok(FilterState {
            estimate,
            covariance: symmetrize(&covariance),
            step: 0,
            previous_estimate: None,
        })
    }
}

/// Prediction step: propagate the mean and inflate the covariance by the
/// communication location covariance `q`.
pub fn predict(f: &FilterState, dt: f64, q: &ProcessNoise) -> Result<FilterState> {
    let jac = motion_jacobian(dt)?;
    let estimate = propagate_state(&f.estimate, dt)?;
    let covariance = symmetrize(&(jac * f.covariance * jac.transpose() + q.covariance()));
    Ok(FilterState {
        estimate,
        covariance,
        step: f.step,
        previous_estimate: Some(f.estimate),
    })
}

/// Linearized Kalman correction shared by the range/bearing update and the
/// reduced models used in tests.
///
/// `innovation` is the (already wrapped) measurement residual and `h` the
/// observation Jacobian at the linearization point.
pub fn kalman_correct<const N: usize, const M: usize>(
    mean: &SMatrix<f64, N, 1>,
    covariance: &SMatrix<f64, N, N>,
    innovation: &SMatrix<f64, M, 1>,
    h: &SMatrix<f64, M, N>,
    r: &SMatrix<f64, M, M>,
    form: CovarianceForm,
    step: usize,
) -> Result<(SMatrix<f64, N, 1>, SMatrix<f64, N, N>)> {
    let pht = covariance * h.transpose();
    let s = symmetrize(&(h * pht + r));
    let cond = condition_number(&s);
    if cond > MAX_INNOVATION_CONDITION {
        return Err(Error::FilterDivergence {
            step,
            reason: format!("innovation covariance condition number {cond:e}"),
        });
    }
    let s_inv = s.try_inverse().ok_or_else(|| Error::FilterDivergence {
        step,
        reason: "innovation covariance not invertible".into(),
    })?;
    let gain = pht * s_inv;
    let new_mean = mean + gain * innovation;
    let new_cov = match form {
        CovarianceForm::Standard => covariance - gain * h * covariance,
        CovarianceForm::Joseph => {
            let i_kh = SMatrix::<f64, N, N>::identity() - gain * h;
            i_kh * covariance * i_kh.transpose() + gain * r * gain.transpose()
        }
    };
    if new_mean
        .iter()
        .chain(new_cov.iter())
        .any(|v| !v.is_finite())
    {
        return Err(Error::FilterDivergence {
            step,
            reason: "non-finite posterior".into(),
        });
    }
    Ok((new_mean, symmetrize(&new_cov)))
}

/// Measurement update with a radar range/bearing pair taken from `pose`.
pub fn update(
    f: &FilterState,
    m: &RadarMeasurement,
    r: &MeasurementNoise,
    pose: &ObserverPose,
) -> Result<FilterState> {
    update_with(f, m, r, pose, FilterOptions::default())
}

pub fn update_with(
    f: &FilterState,
    m: &RadarMeasurement,
    r: &MeasurementNoise,
    pose: &ObserverPose,
    options: FilterOptions,
) -> Result<FilterState> {
    let h = measurement_jacobian(pose, &f.estimate)?;
    let predicted = match options.predicted_measurement {
        PredictedMeasurement::Nonlinear => observe(pose, &f.estimate)?.to_vector(),
        PredictedMeasurement::LinearizedPrior => {
            let prior = f.previous_estimate.unwrap_or(f.estimate);
            h * prior.to_vector()
        }
    };
    let innovation = Vector2::new(m.range - predicted[0], wrap_angle(m.bearing - predicted[1]));
    let (mean, covariance) = kalman_correct(
        &f.estimate.to_vector(),
        &f.covariance,
        &innovation,
        &h,
        r.covariance(),
        options.covariance_form,
        f.step,
    )?;
    Ok(FilterState {
        estimate: TargetState::from_vector(&mean),
        covariance,
        step: f.step,
        previous_estimate: f.previous_estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_asymmetry, min_eigenvalue, Matrix2};
    use nalgebra::{Matrix1, Vector1};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn table_q() -> ProcessNoise {
        ProcessNoise::diagonal([10.0, 10.0, 1.0, 1.0, 0.1, 0.1]).unwrap()
    }

    fn sample_state() -> FilterState {
        let mut p = Matrix6::from_diagonal(&[4.0, 5.0, 2.0, 3.0, 1.0, 0.5].into());
        p[(0, 2)] = 0.7;
        p[(2, 0)] = 0.7;
        FilterState::new(TargetState::new(300.0, 200.0, 20.0, 5.0, 0.5, -0.2), p).unwrap()
    }

    #[test]
    fn predict_identity_transition() {
        let f = sample_state();
        let out = predict(&f, 0.0, &ProcessNoise::zero()).unwrap();
        assert_eq!(out.estimate, f.estimate);
        assert_eq!(out.covariance, f.covariance);
        assert_eq!(out.step, f.step);
    }

    #[test]
    fn predict_zero_prior_yields_q() {
        let f = FilterState::new(TargetState::default(), Matrix6::zeros()).unwrap();
        let out = predict(&f, 0.1, &table_q()).unwrap();
        assert_eq!(out.covariance, *table_q().covariance());
    }

    #[test]
    fn predict_trace_matches_brute_force() {
        let f = FilterState::new(TargetState::default(), Matrix6::identity()).unwrap();
        let out = predict(&f, 0.1, &ProcessNoise::zero()).unwrap();
        // Brute-force F F^T trace with plain loops over a hand-built F.
        let dt = 0.1f64;
        let mut fm = [[0.0f64; 6]; 6];
        for (i, row) in fm.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for axis in 0..2 {
            fm[axis][2 + axis] = dt;
            fm[axis][4 + axis] = 0.5 * dt * dt;
            fm[2 + axis][4 + axis] = dt;
        }
        let mut trace = 0.0;
        for row in &fm {
            for v in row {
                trace += v * v;
            }
        }
        assert!((out.covariance.trace() - trace).abs() < 1e-12);
    }

    #[test]
    fn zero_innovation_keeps_mean() {
        let pose = ObserverPose::new(0.0, 0.0, 0.0).unwrap();
        let f = sample_state();
        let m = observe(&pose, &f.estimate).unwrap();
        let r = MeasurementNoise::diagonal(10.0, 0.01).unwrap();
        let out = update(&f, &m, &r, &pose).unwrap();
        assert_eq!(out.estimate, f.estimate);
        assert!(out.covariance.trace() < f.covariance.trace());
    }

    #[test]
    fn uninformative_measurement_changes_nothing() {
        let pose = ObserverPose::new(0.0, 0.0, 0.0).unwrap();
        let f = sample_state();
        let m = RadarMeasurement::new(400.0, 0.4).unwrap();
        let r = MeasurementNoise::new(Matrix2::identity() * 1e12).unwrap();
        let out = update(&f, &m, &r, &pose).unwrap();
        let dm = (out.estimate.to_vector() - f.estimate.to_vector()).norm()
            / f.estimate.to_vector().norm();
        let dp = (out.covariance - f.covariance).norm() / f.covariance.norm();
        assert!(dm < 1e-6 && dp < 1e-6, "{dm} {dp}");
    }

    #[test]
    fn scalar_hand_example() {
        let (mean, var) = kalman_correct(
            &Vector1::new(0.0),
            &Matrix1::new(4.0),
            &Vector1::new(5.0),
            &Matrix1::new(1.0),
            &Matrix1::new(1.0),
            CovarianceForm::Standard,
            0,
        )
        .unwrap();
        assert!((mean[0] - 4.0).abs() < 1e-15);
        assert!((var[(0, 0)] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn scalar_oracle_equivalence() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let prior: f64 = rng.random_range(-100.0..100.0);
            let p: f64 = rng.random_range(1e-3..100.0);
            let r: f64 = rng.random_range(1e-3..100.0);
            let z: f64 = rng.random_range(-100.0..100.0);
            let g = p / (p + r);
            let oracle_mean = prior + g * (z - prior);
            let oracle_var = (1.0 - g) * p;
            for form in [CovarianceForm::Standard, CovarianceForm::Joseph] {
                let (mean, var) = kalman_correct(
                    &Vector1::new(prior),
                    &Matrix1::new(p),
                    &Vector1::new(z - prior),
                    &Matrix1::new(1.0),
                    &Matrix1::new(r),
                    form,
                    0,
                )
                .unwrap();
                assert!((mean[0] - oracle_mean).abs() <= 1e-12 * oracle_mean.abs().max(1.0));
                assert!((var[(0, 0)] - oracle_var).abs() <= 1e-12 * oracle_var.max(1.0));
            }
        }
    }

    #[test]
    fn singular_innovation_is_divergence() {
        let f = FilterState::new(
            TargetState::new(100.0, 0.0, 0.0, 0.0, 0.0, 0.0),
            Matrix6::zeros(),
        )
        .unwrap();
        let pose = ObserverPose::new(0.0, 0.0, 0.0).unwrap();
        let m = RadarMeasurement::new(100.0, 0.0).unwrap();
        let r = MeasurementNoise::new(Matrix2::zeros()).unwrap();
        let err = update(&f, &m, &r, &pose).unwrap_err();
        assert!(matches!(err, Error::FilterDivergence { step: 0, .. }));
    }

    #[test]
    fn coincident_prediction_is_singular() {
        let f = FilterState::new(TargetState::default(), Matrix6::identity()).unwrap();
        let pose = ObserverPose::new(0.0, 0.0, 0.0).unwrap();
        let m = RadarMeasurement::new(10.0, 0.0).unwrap();
        let r = MeasurementNoise::diagonal(10.0, 0.01).unwrap();
        assert!(matches!(
            update(&f, &m, &r, &pose),
            Err(Error::SingularGeometry)
        ));
    }

    #[test]
    fn bearing_residual_wraps() {
        // Target just across the -pi/pi seam: a raw residual of ~2 pi must
        // not throw the estimate around.
        let pose = ObserverPose::new(0.0, 0.0, 0.0).unwrap();
        let f = FilterState::new(
            TargetState::new(-500.0, 1.0, 0.0, 0.0, 0.0, 0.0),
            Matrix6::identity() * 10.0,
        )
        .unwrap();
        let m = RadarMeasurement::new(500.0, -std::f64::consts::PI + 0.001).unwrap();
        let r = MeasurementNoise::diagonal(10.0, 0.01).unwrap();
        let out = update(&f, &m, &r, &pose).unwrap();
        assert!((out.estimate.x + 500.0).abs() < 1.0);
        assert!(out.estimate.y.abs() < 2.0);
    }

    #[test]
    fn joseph_and_standard_agree_at_optimal_gain() {
        let pose = ObserverPose::new(0.0, 0.0, 0.0).unwrap();
        let f = sample_state();
        let m = RadarMeasurement::new(360.0, 0.6).unwrap();
        let r = MeasurementNoise::diagonal(10.0, 0.01).unwrap();
        let a = update(&f, &m, &r, &pose).unwrap();
        let b = update_with(
            &f,
            &m,
            &r,
            &pose,
            FilterOptions {
                covariance_form: CovarianceForm::Joseph,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(a.estimate, b.estimate);
        assert!((a.covariance - b.covariance).abs().max() < 1e-9);
    }

    #[test]
    fn literal_prediction_flag_uses_prior_mean() {
        let pose = ObserverPose::new(0.0, 0.0, 0.0).unwrap();
        let f = predict(&sample_state(), 0.1, &table_q()).unwrap();
        let m = observe(&pose, &f.estimate).unwrap();
        let r = MeasurementNoise::diagonal(10.0, 0.01).unwrap();
        let options = FilterOptions {
            predicted_measurement: PredictedMeasurement::LinearizedPrior,
            ..Default::default()
        };
        let literal = update_with(&f, &m, &r, &pose, options).unwrap();
        let standard = update(&f, &m, &r, &pose).unwrap();
        assert_eq!(standard.estimate, f.estimate);
        assert_ne!(literal.estimate, standard.estimate);
    }

    fn spd_strategy() -> impl Strategy<Value = Matrix6> {
        prop::collection::vec(-3.0..3.0f64, 36).prop_map(|v| {
            let a = Matrix6::from_vec(v);
            a * a.transpose() + Matrix6::identity() * 0.1
        })
    }

    proptest! {
        #[test]
        fn update_shrinks_trace_and_stays_psd(p in spd_strategy(),
                                              x in 50.0..1000.0f64, y in -1000.0..1000.0f64,
                                              dr in -20.0..20.0f64, db in -0.3..0.3f64) {
            let pose = ObserverPose::new(0.0, 0.0, 0.0).unwrap();
            let f = FilterState::new(TargetState::new(x, y, 1.0, 2.0, 0.0, 0.0), p).unwrap();
            let truth = observe(&pose, &f.estimate).unwrap();
            let m = RadarMeasurement::new((truth.range + dr).max(0.0), truth.bearing + db).unwrap();
            let r = MeasurementNoise::diagonal(10.0, 0.01).unwrap();
            let out = update(&f, &m, &r, &pose).unwrap();
            prop_assert!(out.covariance.trace() <= f.covariance.trace() + 1e-9);
            prop_assert!(max_asymmetry(&out.covariance) <= 1e-9);
            prop_assert!(min_eigenvalue(&out.covariance) > -1e-9);
        }
    }
}
