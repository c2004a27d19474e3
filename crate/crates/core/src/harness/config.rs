use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{
    CovarianceForm, FilterOptions, InitPolicy, PredictedMeasurement, TrackingScenario,
};
use crate::iff::{ms_to_us, Allegiance, TimingBudget};
use crate::kinematics::{degrees_to_radians, radians_to_degrees, Maneuver, MotionProfile, Turn};
use crate::measurement::{MeasurementNoise, ProcessNoise};

/// Fully resolved simulation parameters. Angles are radians.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub trials: usize,

    pub observer: MotionProfile,
    pub target: MotionProfile,
    /// Initial observer-to-target distance (m).
    pub separation: f64,
    /// Initial absolute bearing from observer to target (rad, east = 0,
    /// counter-clockwise).
    pub bearing: f64,
    pub dt: f64,
    pub k_max: usize,
    /// Step at which fusion ratios are reported.
    pub report_step: usize,

    /// Radar `(range m^2, bearing rad^2)` variances.
    pub measurement_variance: [f64; 2],
    /// Communication-location covariance diagonal; the first two entries are
    /// the position variance `dr_com`.
    pub process_variance: [f64; 6],
    pub dr_com_grid: Vec<f64>,
    pub init_velocity_variance: f64,
    pub init_acceleration_variance: f64,
    pub filter: FilterOptions,
    pub confidence_level: f64,
    pub bootstrap_resamples: usize,

    pub budget: TimingBudget,
    pub t5_grid_ms: Vec<f64>,
    pub t7_grid_ms: Vec<f64>,
    pub interactions: u32,
    pub allegiance: Allegiance,
    /// No-response wait; `None` selects the default of twice `t5 + t6`.
    pub timeout_us: Option<u64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ConfigFile::default()
            .resolve()
            .expect("built-in defaults are valid")
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ConfigFile =
            toml::from_str(text).map_err(|e| Error::ConfigSyntax(e.to_string()))?;
        file.resolve()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&ConfigFile::from_config(self)).expect("config serializes")
    }

    /// Range variance of the radar, `dr_rad`.
    pub fn dr_rad(&self) -> f64 {
        self.measurement_variance[0]
    }

    pub fn dr_com(&self) -> f64 {
        self.process_variance[0]
    }

    /// Same scenario with the communication position variance replaced.
    pub fn with_dr_com(&self, dr_com: f64) -> Self {
        let mut c = self.clone();
        c.process_variance[0] = dr_com;
        c.process_variance[1] = dr_com;
        c
    }

    pub fn tracking_scenario(&self) -> Result<TrackingScenario> {
        let (s, c) = self.bearing.sin_cos();
        Ok(TrackingScenario {
            observer_start: self.observer.cruise_state(0.0, 0.0),
            target_start: self
                .target
                .cruise_state(self.separation * c, self.separation * s),
            observer: self.observer.clone(),
            target: self.target.clone(),
            dt: self.dt,
            measurement_noise: MeasurementNoise::diagonal(
                self.measurement_variance[0],
                self.measurement_variance[1],
            )?,
            process_noise: ProcessNoise::diagonal(self.process_variance)?,
            init: InitPolicy::FirstMeasurement {
                velocity_variance: self.init_velocity_variance,
                acceleration_variance: self.init_acceleration_variance,
            },
            options: self.filter,
        })
    }
}

/// Reads and validates a config file.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ScenarioConfig::from_toml_str(&text)
}

// On-disk layout. Every field has a default so partial files are accepted;
// unknown keys are rejected.

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ConfigFile {
    seed: u64,
    trials: usize,
    scenario: ScenarioSection,
    observer: PlatformSection,
    target: PlatformSection,
    noise: NoiseSection,
    filter: FilterSection,
    iff: IffSection,
}

impl Default for ConfigFile {
    fn default() -> Self {
        ConfigFile {
            seed: 2024,
            trials: 500,
            scenario: ScenarioSection::default(),
            observer: PlatformSection::default(),
            target: PlatformSection::default(),
            noise: NoiseSection::default(),
            filter: FilterSection::default(),
            iff: IffSection::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ScenarioSection {
    dt_s: f64,
    k_max: usize,
    report_step: usize,
    separation_m: f64,
    bearing_deg: f64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        ScenarioSection {
            dt_s: 1.1,
            k_max: 30,
            report_step: 20,
            separation_m: 500.0,
            bearing_deg: 90.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum TurnName {
    Left,
    Straight,
    Right,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManeuverEntry {
    start: usize,
    end: usize,
    turn: TurnName,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct PlatformSection {
    speed_mps: f64,
    acceleration_mps2: f64,
    angular_speed_dps: f64,
    heading_deg: f64,
    maneuvers: Vec<ManeuverEntry>,
}

impl Default for PlatformSection {
    fn default() -> Self {
        PlatformSection {
            speed_mps: 25.0,
            acceleration_mps2: 5.0,
            angular_speed_dps: 150.0,
            heading_deg: 5.0,
            maneuvers: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct NoiseSection {
    measurement: [f64; 2],
    process: [f64; 6],
    dr_com_grid: Vec<f64>,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            measurement: [10.0, 0.01],
            process: [10.0, 10.0, 1.0, 1.0, 0.1, 0.1],
            dr_com_grid: vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum CovarianceFormName {
    Standard,
    Joseph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum PredictedMeasurementName {
    Nonlinear,
    LinearizedPrior,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FilterSection {
    init_velocity_variance: f64,
    init_acceleration_variance: f64,
    covariance_form: CovarianceFormName,
    predicted_measurement: PredictedMeasurementName,
    confidence_level: f64,
    bootstrap_resamples: usize,
}

impl Default for FilterSection {
    fn default() -> Self {
        FilterSection {
            init_velocity_variance: 25.0,
            init_acceleration_variance: 25.0,
            covariance_form: CovarianceFormName::Standard,
            predicted_measurement: PredictedMeasurementName::Nonlinear,
            confidence_level: 0.95,
            bootstrap_resamples: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum AllegianceName {
    Friend,
    Foe,
    Unresponsive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct IffSection {
    t1_ms: f64,
    t2_ms: f64,
    t3_ms: f64,
    t4_ms: f64,
    t5_ms: f64,
    t6_ms: f64,
    t7_ms: f64,
    t5_grid_ms: Vec<f64>,
    t7_grid_ms: Vec<f64>,
    interactions: u32,
    allegiance: AllegianceName,
    #[serde(skip_serializing_if = "Option::is_none")]
    timeout_ms: Option<f64>,
}

impl Default for IffSection {
    fn default() -> Self {
        IffSection {
            t1_ms: 0.0,
            t2_ms: 0.0,
            t3_ms: 10.0,
            t4_ms: 0.0,
            t5_ms: 10.0,
            t6_ms: 0.0,
            t7_ms: 0.0,
            t5_grid_ms: (0..=20).map(f64::from).collect(),
            t7_grid_ms: vec![0.0, 5.0, 10.0, 20.0],
            interactions: 20,
            allegiance: AllegianceName::Friend,
            timeout_ms: None,
        }
    }
}

fn check(ok: bool, field: &str, message: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(field, message))
    }
}

fn positive(v: f64, field: &str) -> Result<()> {
    check(
        v.is_finite() && v > 0.0,
        field,
        format!("must be finite and > 0, got {v}"),
    )
}

fn non_negative(v: f64, field: &str) -> Result<()> {
    check(
        v.is_finite() && v >= 0.0,
        field,
        format!("must be finite and >= 0, got {v}"),
    )
}

fn finite(v: f64, field: &str) -> Result<()> {
    check(v.is_finite(), field, format!("must be finite, got {v}"))
}

fn duration_us(ms: f64, field: &str) -> Result<u64> {
    ms_to_us(ms).map_err(|e| Error::config(field, e.to_string()))
}

impl PlatformSection {
    fn resolve(&self, name: &str) -> Result<MotionProfile> {
        let field = |f: &str| format!("{name}.{f}");
        non_negative(self.speed_mps, &field("speed_mps"))?;
        non_negative(self.acceleration_mps2, &field("acceleration_mps2"))?;
        non_negative(self.angular_speed_dps, &field("angular_speed_dps"))?;
        finite(self.heading_deg, &field("heading_deg"))?;
        let profile = MotionProfile {
            speed: self.speed_mps,
            acceleration: self.acceleration_mps2,
            angular_speed: degrees_to_radians(self.angular_speed_dps),
            initial_heading: degrees_to_radians(self.heading_deg),
            schedule: self
                .maneuvers
                .iter()
                .map(|m| Maneuver {
                    start: m.start,
                    end: m.end,
                    turn: match m.turn {
                        TurnName::Left => Turn::Left,
                        TurnName::Straight => Turn::Straight,
                        TurnName::Right => Turn::Right,
                    },
                })
                .collect(),
        };
        profile
            .validate()
            .map_err(|e| Error::config(field("maneuvers"), e.to_string()))?;
        Ok(profile)
    }

    fn from_profile(p: &MotionProfile) -> Self {
        PlatformSection {
            speed_mps: p.speed,
            acceleration_mps2: p.acceleration,
            angular_speed_dps: radians_to_degrees(p.angular_speed),
            heading_deg: radians_to_degrees(p.initial_heading),
            maneuvers: p
                .schedule
                .iter()
                .map(|m| ManeuverEntry {
                    start: m.start,
                    end: m.end,
                    turn: match m.turn {
                        Turn::Left => TurnName::Left,
                        Turn::Straight => TurnName::Straight,
                        Turn::Right => TurnName::Right,
                    },
                })
                .collect(),
        }
    }
}

impl ConfigFile {
    fn resolve(&self) -> Result<ScenarioConfig> {
        check(self.trials >= 1, "trials", "must be at least 1")?;

        let s = &self.scenario;
        positive(s.dt_s, "scenario.dt_s")?;
        check(s.k_max >= 1, "scenario.k_max", "must be at least 1")?;
        check(
            (1..=s.k_max).contains(&s.report_step),
            "scenario.report_step",
            format!("must lie in 1..={}, got {}", s.k_max, s.report_step),
        )?;
        positive(s.separation_m, "scenario.separation_m")?;
        finite(s.bearing_deg, "scenario.bearing_deg")?;

        let n = &self.noise;
        non_negative(n.measurement[0], "noise.measurement")?;
        non_negative(n.measurement[1], "noise.measurement")?;
        for v in n.process {
            non_negative(v, "noise.process")?;
        }
        for &v in &n.dr_com_grid {
            non_negative(v, "noise.dr_com_grid")?;
        }

        let f = &self.filter;
        non_negative(f.init_velocity_variance, "filter.init_velocity_variance")?;
        non_negative(
            f.init_acceleration_variance,
            "filter.init_acceleration_variance",
        )?;
        check(
            f.confidence_level > 0.0 && f.confidence_level < 1.0,
            "filter.confidence_level",
            format!("must lie in (0, 1), got {}", f.confidence_level),
        )?;
        check(
            f.bootstrap_resamples >= 1,
            "filter.bootstrap_resamples",
            "must be at least 1",
        )?;

        let i = &self.iff;
        let stages = [
            i.t1_ms, i.t2_ms, i.t3_ms, i.t4_ms, i.t5_ms, i.t6_ms, i.t7_ms,
        ];
        let mut stages_us = [0u64; 7];
        for (k, (slot, ms)) in stages_us.iter_mut().zip(stages).enumerate() {
            *slot = duration_us(ms, &format!("iff.t{}_ms", k + 1))?;
        }
        for &v in &i.t5_grid_ms {
            duration_us(v, "iff.t5_grid_ms")?;
        }
        for &v in &i.t7_grid_ms {
            duration_us(v, "iff.t7_grid_ms")?;
        }
        check(
            i.interactions >= 1,
            "iff.interactions",
            "must be at least 1",
        )?;
        let timeout_us = i
            .timeout_ms
            .map(|ms| duration_us(ms, "iff.timeout_ms"))
            .transpose()?;

        Ok(ScenarioConfig {
            seed: self.seed,
            trials: self.trials,
            observer: self.observer.resolve("observer")?,
            target: self.target.resolve("target")?,
            separation: s.separation_m,
            bearing: degrees_to_radians(s.bearing_deg),
            dt: s.dt_s,
            k_max: s.k_max,
            report_step: s.report_step,
            measurement_variance: n.measurement,
            process_variance: n.process,
            dr_com_grid: n.dr_com_grid.clone(),
            init_velocity_variance: f.init_velocity_variance,
            init_acceleration_variance: f.init_acceleration_variance,
            filter: FilterOptions {
                covariance_form: match f.covariance_form {
                    CovarianceFormName::Standard => CovarianceForm::Standard,
                    CovarianceFormName::Joseph => CovarianceForm::Joseph,
                },
                predicted_measurement: match f.predicted_measurement {
                    PredictedMeasurementName::Nonlinear => PredictedMeasurement::Nonlinear,
                    PredictedMeasurementName::LinearizedPrior => {
                        PredictedMeasurement::LinearizedPrior
                    }
                },
            },
            confidence_level: f.confidence_level,
            bootstrap_resamples: f.bootstrap_resamples,
            budget: TimingBudget::from_us(stages_us)
                .map_err(|e| Error::config("iff", e.to_string()))?,
            t5_grid_ms: i.t5_grid_ms.clone(),
            t7_grid_ms: i.t7_grid_ms.clone(),
            interactions: i.interactions,
            allegiance: match i.allegiance {
                AllegianceName::Friend => Allegiance::Friend,
                AllegianceName::Foe => Allegiance::Foe,
                AllegianceName::Unresponsive => Allegiance::Unresponsive,
            },
            timeout_us,
        })
    }

    fn from_config(c: &ScenarioConfig) -> Self {
        let t = c.budget.stages_ms();
        ConfigFile {
            seed: c.seed,
            trials: c.trials,
            scenario: ScenarioSection {
                dt_s: c.dt,
                k_max: c.k_max,
                report_step: c.report_step,
                separation_m: c.separation,
                bearing_deg: radians_to_degrees(c.bearing),
            },
            observer: PlatformSection::from_profile(&c.observer),
            target: PlatformSection::from_profile(&c.target),
            noise: NoiseSection {
                measurement: c.measurement_variance,
                process: c.process_variance,
                dr_com_grid: c.dr_com_grid.clone(),
            },
            filter: FilterSection {
                init_velocity_variance: c.init_velocity_variance,
                init_acceleration_variance: c.init_acceleration_variance,
                covariance_form: match c.filter.covariance_form {
                    CovarianceForm::Standard => CovarianceFormName::Standard,
                    CovarianceForm::Joseph => CovarianceFormName::Joseph,
                },
                predicted_measurement: match c.filter.predicted_measurement {
                    PredictedMeasurement::Nonlinear => PredictedMeasurementName::Nonlinear,
                    PredictedMeasurement::LinearizedPrior => {
                        PredictedMeasurementName::LinearizedPrior
                    }
                },
                confidence_level: c.confidence_level,
                bootstrap_resamples: c.bootstrap_resamples,
            },
            iff: IffSection {
                t1_ms: t[0],
                t2_ms: t[1],
                t3_ms: t[2],
                t4_ms: t[3],
                t5_ms: t[4],
                t6_ms: t[5],
                t7_ms: t[6],
                t5_grid_ms: c.t5_grid_ms.clone(),
                t7_grid_ms: c.t7_grid_ms.clone(),
                interactions: c.interactions,
                allegiance: match c.allegiance {
                    Allegiance::Friend => AllegianceName::Friend,
                    Allegiance::Foe => AllegianceName::Foe,
                    Allegiance::Unresponsive => AllegianceName::Unresponsive,
                },
                timeout_ms: c.timeout_us.map(crate::iff::us_to_ms),
            },
        }
    }
}
