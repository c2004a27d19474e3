//! Identification-Friend-or-Foe exchange timing.
//!
//! A separated sensing/communication system runs every stage in sequence. An
//! ISAC system sends one integrated signal, so the responder can decode the
//! interrogation while the interrogator is still receiving echoes and
//! detecting the node:
//!
//! ```text
//! separated:  t1 + t2 + t3 + t4 + t5 + t6 + t7
//! isac:       t1 + max(t2 + t3, t5) + t6 + t7
//! ```
//!
//! Durations are kept as integer microseconds so the closed forms and the
//! discrete-event engine in [`engine`] can be compared exactly.

mod engine;
mod exchange;
mod trace;

pub use engine::{EventEngine, TaskId};
pub use exchange::{
    default_timeout_us, simulate_exchange, simulate_exchange_with, Allegiance, IffNode, NodeId,
    PipelineVariant, TransponderTiming, Verdict,
};
pub use trace::{parse_trace_csv, Actor, ExchangeTrace, Stage, TraceEvent};

use crate::error::{Error, Result};

pub const MICROS_PER_MS: f64 = 1000.0;

/// Converts a duration in milliseconds to whole microseconds.
pub fn ms_to_us(ms: f64) -> Result<u64> {
    if !ms.is_finite() || ms < 0.0 {
        return Err(Error::Domain(format!(
            "durations must be finite and >= 0 ms, got {ms}"
        )));
    }
    let us = (ms * MICROS_PER_MS).round();
    if us > u64::MAX as f64 / 64.0 {
        return Err(Error::Domain(format!("duration {ms} ms is too large")));
    }
    Ok(us as u64)
}

pub fn us_to_ms(us: u64) -> f64 {
    us as f64 / MICROS_PER_MS
}

/// Durations of the seven exchange stages, in microseconds:
///
/// | stage | meaning |
/// |-------|---------|
/// | t1 | send the sensing (or integrated) signal |
/// | t2 | receive echoes |
/// | t3 | detect the unknown node |
/// | t4 | send the interrogation |
/// | t5 | responder decodes the interrogation |
/// | t6 | receive the decoded response |
/// | t7 | reach the IFF verdict |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TimingBudget {
    stages_us: [u64; 7],
}

impl TimingBudget {
    pub fn from_us(stages_us: [u64; 7]) -> Result<Self> {
        if stages_us.iter().any(|&t| t > u64::MAX / 64) {
            return Err(Error::Domain("stage duration too large".into()));
        }
        Ok(TimingBudget { stages_us })
    }

    pub fn from_ms(stages_ms: [f64; 7]) -> Result<Self> {
        let mut stages_us = [0; 7];
        for (slot, ms) in stages_us.iter_mut().zip(stages_ms) {
            *slot = ms_to_us(ms)?;
        }
        Ok(TimingBudget { stages_us })
    }

    /// Budget with zero transmission stages (t1, t2, t4, t6).
    pub fn processing_only(t3_ms: f64, t5_ms: f64, t7_ms: f64) -> Result<Self> {
        Self::from_ms([0.0, 0.0, t3_ms, 0.0, t5_ms, 0.0, t7_ms])
    }

    /// Stage `i` in 1..=7, microseconds.
    pub fn stage_us(&self, i: usize) -> u64 {
        self.stages_us[i - 1]
    }

    pub fn stage_ms(&self, i: usize) -> f64 {
        us_to_ms(self.stage_us(i))
    }

    pub fn stages_us(&self) -> [u64; 7] {
        self.stages_us
    }

    pub fn stages_ms(&self) -> [f64; 7] {
        self.stages_us.map(us_to_ms)
    }

    pub fn with_stage_us(mut self, i: usize, us: u64) -> Self {
        self.stages_us[i - 1] = us;
        self
    }
}

pub fn separated_iff_us(b: &TimingBudget) -> u64 {
    b.stages_us.iter().sum()
}

pub fn isac_iff_us(b: &TimingBudget) -> u64 {
    let [t1, t2, t3, _t4, t5, t6, t7] = b.stages_us;
    t1 + (t2 + t3).max(t5) + t6 + t7
}

/// Exchange time of the separated pipeline, ms.
pub fn separated_iff_time(b: &TimingBudget) -> f64 {
    us_to_ms(separated_iff_us(b))
}

/// Exchange time of the ISAC pipeline, ms.
pub fn isac_iff_time(b: &TimingBudget) -> f64 {
    us_to_ms(isac_iff_us(b))
}

/// Shared ratio computation so the closed form and the event engine use the
/// same arithmetic on their integer totals.
pub fn reduction_from_totals(separated_us: u64, isac_us: u64) -> Result<f64> {
    if separated_us == 0 {
        return Err(Error::Domain(
            "reduction ratio undefined for a zero-length exchange".into(),
        ));
    }
    Ok(separated_us.saturating_sub(isac_us) as f64 / separated_us as f64)
}

/// Fraction of the separated exchange time saved by the ISAC pipeline,
/// `(T_sep - T_isac) / T_sep`.
pub fn time_reduction_ratio(b: &TimingBudget) -> Result<f64> {
    reduction_from_totals(separated_iff_us(b), isac_iff_us(b))
}

/// Reduced form for negligible transmission times:
/// `(t3 + t5 - max(t3, t5)) / (t3 + t5 + t7)`.
pub fn processing_reduction_ratio(t3_us: u64, t5_us: u64, t7_us: u64) -> Result<f64> {
    let total = t3_us + t5_us + t7_us;
    if total == 0 {
        return Err(Error::Domain(
            "reduction ratio undefined for a zero-length exchange".into(),
        ));
    }
    Ok((t3_us + t5_us - t3_us.max(t5_us)) as f64 / total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub t5_ms: f64,
    pub t7_ms: f64,
    pub rho_t: f64,
}

/// Reduction ratio over the Cartesian grid of decode (`t5`) and verdict
/// (`t7`) times with transmissions neglected. Rows are sorted by `(t7, t5)`.
pub fn sweep_reduction(t3_ms: f64, t5_grid: &[f64], t7_grid: &[f64]) -> Result<Vec<SweepRow>> {
    if t5_grid.is_empty() || t7_grid.is_empty() {
        return Err(Error::Domain("sweep grids must be non-empty".into()));
    }
    let mut rows = Vec::with_capacity(t5_grid.len() * t7_grid.len());
    for &t7 in t7_grid {
        for &t5 in t5_grid {
            let b = TimingBudget::processing_only(t3_ms, t5, t7)?;
            rows.push(SweepRow {
                t5_ms: b.stage_ms(5),
                t7_ms: b.stage_ms(7),
                rho_t: time_reduction_ratio(&b)?,
            });
        }
    }
    rows.sort_by(|a, b| {
        a.t7_ms
            .total_cmp(&b.t7_ms)
            .then(a.t5_ms.total_cmp(&b.t5_ms))
    });
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TotalIdentificationTime {
    pub interactions: u32,
    pub isac_ms: f64,
    pub separated_ms: f64,
}

impl TotalIdentificationTime {
    pub fn reduction_ratio(&self) -> f64 {
        (self.separated_ms - self.isac_ms) / self.separated_ms
    }
}

/// Time for `interactions` back-to-back exchanges under both pipelines.
pub fn total_identification_time(
    b: &TimingBudget,
    interactions: u32,
) -> Result<TotalIdentificationTime> {
    if interactions == 0 {
        return Err(Error::Domain("at least one interaction is required".into()));
    }
    let n = u64::from(interactions);
    Ok(TotalIdentificationTime {
        interactions,
        isac_ms: us_to_ms(n * isac_iff_us(b)),
        separated_ms: us_to_ms(n * separated_iff_us(b)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn budget(ms: [f64; 7]) -> TimingBudget {
        TimingBudget::from_ms(ms).unwrap()
    }

    #[test]
    fn separated_examples() {
        assert_eq!(separated_iff_time(&TimingBudget::default()), 0.0);
        assert_eq!(
            separated_iff_time(&TimingBudget::processing_only(10.0, 10.0, 0.0).unwrap()),
            20.0
        );
        assert_eq!(
            separated_iff_time(&budget([1.0, 2.0, 10.0, 1.0, 20.0, 2.0, 20.0])),
            56.0
        );
    }

    #[test]
    fn isac_examples() {
        assert_eq!(isac_iff_time(&TimingBudget::default()), 0.0);
        assert_eq!(
            isac_iff_time(&TimingBudget::processing_only(10.0, 10.0, 0.0).unwrap()),
            10.0
        );
        assert_eq!(
            isac_iff_time(&budget([1.0, 2.0, 10.0, 1.0, 20.0, 2.0, 20.0])),
            43.0
        );
    }

    #[test]
    fn reduction_examples() {
        let peak = TimingBudget::processing_only(10.0, 10.0, 0.0).unwrap();
        assert_eq!(time_reduction_ratio(&peak).unwrap(), 0.5);
        for (t3, t7) in [(10.0, 0.0), (3.0, 20.0), (0.0, 5.0)] {
            let b = TimingBudget::processing_only(t3, 0.0, t7).unwrap();
            if t3 + t7 > 0.0 {
                assert_eq!(time_reduction_ratio(&b).unwrap(), 0.0);
            }
        }
        let b = TimingBudget::processing_only(10.0, 20.0, 20.0).unwrap();
        assert!((time_reduction_ratio(&b).unwrap() - 0.2).abs() < 1e-15);
        assert!(time_reduction_ratio(&TimingBudget::default()).is_err());
    }

    #[test]
    fn budget_validation() {
        assert!(TimingBudget::from_ms([-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
        assert!(TimingBudget::from_ms([f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
        let b = TimingBudget::from_ms([0.0015, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(b.stage_us(1), 2);
    }

    #[test]
    fn sweep_single_point_and_ordering() {
        let rows = sweep_reduction(10.0, &[10.0], &[0.0]).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].rho_t, 0.5);

        let t5: Vec<f64> = (0..=20).map(f64::from).collect();
        let rows = sweep_reduction(10.0, &t5, &[20.0, 0.0, 5.0]).unwrap();
        assert_eq!(rows.len(), 63);
        for w in rows.windows(2) {
            assert!((w[0].t7_ms, w[0].t5_ms) < (w[1].t7_ms, w[1].t5_ms));
        }
        assert!(sweep_reduction(10.0, &[], &[0.0]).is_err());
    }

    #[test]
    fn sweep_argmax_is_t3() {
        let t5: Vec<f64> = (0..=20).map(f64::from).collect();
        for t7 in [0.0, 5.0, 10.0, 20.0] {
            let rows = sweep_reduction(10.0, &t5, &[t7]).unwrap();
            let best = rows
                .iter()
                .max_by(|a, b| a.rho_t.total_cmp(&b.rho_t))
                .unwrap();
            assert_eq!(best.t5_ms, 10.0);
            let ties = rows.iter().filter(|r| r.rho_t == best.rho_t).count();
            assert_eq!(ties, 1);
        }
    }

    #[test]
    fn sweep_monotone_in_t7_brute_force() {
        let t5: Vec<f64> = (0..=20).map(f64::from).collect();
        let t7: Vec<f64> = (0..=20).map(f64::from).collect();
        let rows = sweep_reduction(10.0, &t5, &t7).unwrap();
        for a in &rows {
            for b in &rows {
                if a.t5_ms == b.t5_ms && a.t7_ms < b.t7_ms {
                    assert!(b.rho_t <= a.rho_t);
                }
            }
        }
    }

    #[test]
    fn totals_over_interactions() {
        let b = TimingBudget::processing_only(10.0, 10.0, 0.0).unwrap();
        let one = total_identification_time(&b, 1).unwrap();
        assert_eq!(one.isac_ms, isac_iff_time(&b));
        let twenty = total_identification_time(&b, 20).unwrap();
        assert_eq!(twenty.isac_ms, 200.0);
        assert_eq!(twenty.separated_ms, 400.0);
        assert_eq!(twenty.reduction_ratio(), time_reduction_ratio(&b).unwrap());
        assert!(total_identification_time(&b, 0).is_err());
    }

    fn budget_strategy() -> impl Strategy<Value = TimingBudget> {
        prop::array::uniform7(0u64..50_000).prop_map(|s| TimingBudget::from_us(s).unwrap())
    }

    proptest! {
        #[test]
        fn ratio_bounds(b in budget_strategy()) {
            prop_assume!(separated_iff_us(&b) > 0);
            let rho = time_reduction_ratio(&b).unwrap();
            prop_assert!((0.0..1.0).contains(&rho));
            prop_assert!(isac_iff_us(&b) <= separated_iff_us(&b));
            // The saving is exactly min(t2 + t3, t5) + t4.
            let saving = (b.stage_us(2) + b.stage_us(3)).min(b.stage_us(5)) + b.stage_us(4);
            prop_assert_eq!(separated_iff_us(&b) - isac_iff_us(&b), saving);
        }

        #[test]
        fn no_overlap_means_no_saving(b in budget_strategy(), zero_decode in any::<bool>()) {
            let b = b.with_stage_us(4, 0);
            let b = if zero_decode { b.with_stage_us(5, 0) } else { b.with_stage_us(2, 0).with_stage_us(3, 0) };
            prop_assume!(separated_iff_us(&b) > 0);
            prop_assert_eq!(time_reduction_ratio(&b).unwrap(), 0.0);
            prop_assert_eq!(isac_iff_us(&b), separated_iff_us(&b));
        }

        #[test]
        fn reduced_form_matches_full_form(t3 in 0u64..50_000, t5 in 0u64..50_000, t7 in 0u64..50_000) {
            prop_assume!(t3 + t5 + t7 > 0);
            let b = TimingBudget::from_us([0, 0, t3, 0, t5, 0, t7]).unwrap();
            prop_assert_eq!(time_reduction_ratio(&b).unwrap(), processing_reduction_ratio(t3, t5, t7).unwrap());
        }

        #[test]
        fn total_ratio_independent_of_count(b in budget_strategy(), n in 1u32..100) {
            prop_assume!(separated_iff_us(&b) > 0);
            let t = total_identification_time(&b, n).unwrap();
            prop_assert!((t.reduction_ratio() - time_reduction_ratio(&b).unwrap()).abs() < 1e-12);
        }
    }
}
