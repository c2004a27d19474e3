use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{predict, update_with, FilterOptions, FilterState};
use crate::error::{Error, Result};
use crate::kinematics::{generate_trajectory, MotionProfile, ObserverPose, TargetState};
use crate::linalg::{min_eigenvalue, Matrix6};
use crate::measurement::{
    observe, sample_noisy_measurement, target_position_from_measurement, MeasurementNoise,
    ProcessNoise, RadarMeasurement,
};

/// How `S(0|0)` and `P(0|0)` are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum InitPolicy {
    /// Position from the first noisy radar measurement, zero velocity and
    /// acceleration. The position covariance is the radar covariance mapped
    /// through the polar-to-Cartesian Jacobian at the measured point.
    FirstMeasurement {
        velocity_variance: f64,
        acceleration_variance: f64,
    },
    /// Start at the true target state with the given covariance.
    Truth { covariance: Matrix6 },
}

impl Default for InitPolicy {
    fn default() -> Self {
        InitPolicy::FirstMeasurement {
            velocity_variance: 25.0,
            acceleration_variance: 25.0,
        }
    }
}

/// Everything a single tracking trial needs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingScenario {
    pub observer: MotionProfile,
    pub observer_start: TargetState,
    pub target: MotionProfile,
    pub target_start: TargetState,
    pub dt: f64,
    pub measurement_noise: MeasurementNoise,
    pub process_noise: ProcessNoise,
    pub init: InitPolicy,
    pub options: FilterOptions,
}

impl TrackingScenario {
    /// Ground-truth observer and target states for steps `0..=k_max`.
    pub fn truth(&self, k_max: usize) -> Result<(Vec<TargetState>, Vec<TargetState>)> {
        let observer = generate_trajectory(&self.observer, self.observer_start, k_max, self.dt)?;
        let target = generate_trajectory(&self.target, self.target_start, k_max, self.dt)?;
        Ok((observer, target))
    }
}

/// Per-step outcome of a tracking trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub k: usize,
    pub truth: TargetState,
    pub observer: ObserverPose,
    /// Range implied by the raw radar position minus the true range.
    pub radar_range_error: f64,
    /// Range of the filter estimate minus the true range.
    pub fused_range_error: f64,
    pub radar_position_error: f64,
    pub fused_position_error: f64,
    pub covariance_trace: f64,
    pub covariance_min_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    /// Records for steps `1..=k_max`, in order.
    pub steps: Vec<StepRecord>,
    /// Number of noisy ranges that were clamped at zero.
    pub clamped_ranges: usize,
    pub final_filter: FilterState,
}

impl TrialRecord {
    pub fn step(&self, k: usize) -> Option<&StepRecord> {
        k.checked_sub(1).and_then(|i| self.steps.get(i))
    }
}

/// RNG stream for one trial; independent of worker scheduling.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

fn initial_filter(
    scenario: &TrackingScenario,
    pose: &ObserverPose,
    truth: &TargetState,
    first: &RadarMeasurement,
) -> Result<FilterState> {
    match scenario.init {
        InitPolicy::Truth { covariance } => FilterState::new(*truth, covariance),
        InitPolicy::FirstMeasurement {
            velocity_variance,
            acceleration_variance,
        } => {
            let (x, y) = target_position_from_measurement(pose, first);
            let r = scenario.measurement_noise.covariance();
            let (sin, cos) = first.bearing.sin_cos();
            // d(x, y)/d(range, bearing) at the measured point.
            let j = nalgebra::Matrix2::new(cos, -first.range * sin, sin, first.range * cos);
            let position_cov = j * r * j.transpose();
            let mut p = Matrix6::zeros();
            p.fixed_view_mut::<2, 2>(0, 0).copy_from(&position_cov);
            p[(2, 2)] = velocity_variance;
            p[(3, 3)] = velocity_variance;
            p[(4, 4)] = acceleration_variance;
            p[(5, 5)] = acceleration_variance;
            FilterState::new(TargetState::new(x, y, 0.0, 0.0, 0.0, 0.0), p)
        }
    }
}

fn range_error(pose: &ObserverPose, (x, y): (f64, f64), true_range: f64) -> f64 {
    (x - pose.x0).hypot(y - pose.y0) - true_range
}

/// One Monte Carlo tracking trial of `k_max` predict/update cycles.
///
/// Step 0 supplies the initializing measurement; steps `1..=k_max` each
/// advance the truth, draw a radar measurement and run the filter.
pub fn run_fusion_trial<R: Rng + ?Sized>(
    scenario: &TrackingScenario,
    k_max: usize,
    rng: &mut R,
) -> Result<TrialRecord> {
    if k_max == 0 {
        return Err(Error::Domain("k_max must be at least 1".into()));
    }
    let (observer, target) = scenario.truth(k_max)?;
    let noise = &scenario.measurement_noise;

    let pose0 = ObserverPose::from_state(&observer[0])?;
    let (first, clamped) = sample_noisy_measurement(&observe(&pose0, &target[0])?, noise, rng);
    let mut clamped_ranges = usize::from(clamped);
    let mut filter = initial_filter(scenario, &pose0, &target[0], &first)?;

    let mut steps = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let pose = ObserverPose::from_state(&observer[k])?;
        let truth = target[k];
        let true_m = observe(&pose, &truth)?;
        let (m, clamped) = sample_noisy_measurement(&true_m, noise, rng);
        clamped_ranges += usize::from(clamped);

        filter.step = k;
        let predicted = predict(&filter, scenario.dt, &scenario.process_noise)?;
        filter = update_with(&predicted, &m, noise, &pose, scenario.options)?;

        let radar_xy = target_position_from_measurement(&pose, &m);
        let fused_xy = filter.estimate.position();
        steps.push(StepRecord {
            k,
            truth,
            observer: pose,
            radar_range_error: range_error(&pose, radar_xy, true_m.range),
            fused_range_error: range_error(&pose, fused_xy, true_m.range),
            radar_position_error: (radar_xy.0 - truth.x).hypot(radar_xy.1 - truth.y),
            fused_position_error: (fused_xy.0 - truth.x).hypot(fused_xy.1 - truth.y),
            covariance_trace: filter.covariance.trace(),
            covariance_min_eigenvalue: min_eigenvalue(&filter.covariance),
        });
    }
    Ok(TrialRecord {
        steps,
        clamped_ranges,
        final_filter: filter,
    })
}

/// Runs `trials` independent trials on the current rayon pool. Results are
/// returned in trial order regardless of scheduling.
pub fn run_trials(
    scenario: &TrackingScenario,
    k_max: usize,
    trials: usize,
    master_seed: u64,
) -> Vec<Result<TrialRecord>> {
    (0..trials)
        .into_par_iter()
        .map(|i| run_fusion_trial(scenario, k_max, &mut trial_rng(master_seed, i as u64)))
        .collect()
}
