use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::ScenarioConfig;
use super::report::{write_csv, write_summary, ExperimentReport};
use crate::error::{Error, Result};
use crate::fusion::{
    estimate_error_variances, rho_confidence_interval, run_fusion_trial, run_trials, trial_rng,
    FusionMetrics, TrialRecord,
};
use crate::iff::{
    default_timeout_us, reduction_from_totals, simulate_exchange_with, time_reduction_ratio,
    Allegiance, ExchangeTrace, IffNode, PipelineVariant, TimingBudget, Verdict,
};

/// Largest tolerated fraction of diverged trials.
pub const MAX_DIVERGENCE_RATE: f64 = 0.01;

/// Relative band used for the convergence step.
pub const CONVERGENCE_BAND: f64 = 0.05;

/// Successful trials plus the number that diverged.
fn collect_trials(
    experiment: &str,
    results: Vec<Result<TrialRecord>>,
) -> Result<(Vec<TrialRecord>, usize)> {
    let total = results.len();
    let mut records = Vec::with_capacity(total);
    let mut diverged = 0;
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(Error::FilterDivergence { .. }) => diverged += 1,
            Err(e) => return Err(e),
        }
    }
    if diverged as f64 > MAX_DIVERGENCE_RATE * total as f64 {
        return Err(Error::ExperimentFailed {
            experiment: experiment.to_string(),
            reason: format!("{diverged} of {total} trials diverged"),
        });
    }
    Ok((records, diverged))
}

fn fusion_trials(
    config: &ScenarioConfig,
    experiment: &str,
    k_max: usize,
) -> Result<(Vec<TrialRecord>, usize)> {
    let scenario = config.tracking_scenario()?;
    collect_trials(
        experiment,
        run_trials(&scenario, k_max, config.trials, config.seed),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fig6Row {
    pub k: usize,
    pub dr_rad: f64,
    pub dr_ekf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig6Table {
    pub rows: Vec<Fig6Row>,
    pub diverged: usize,
    pub clamped_ranges: usize,
    /// First step whose `dr_ekf` lies within [`CONVERGENCE_BAND`] of the
    /// value at `k_max`.
    pub convergence_k: usize,
}

/// First step whose `dr_ekf` is within `band` (relative) of the last row.
pub fn convergence_step(rows: &[Fig6Row], band: f64) -> usize {
    let Some(last) = rows.last() else { return 0 };
    let tolerance = band * last.dr_ekf.abs();
    rows.iter()
        .find(|r| (r.dr_ekf - last.dr_ekf).abs() <= tolerance)
        .map_or(last.k, |r| r.k)
}

/// Error variances of raw radar and fused track per step, across trials.
pub fn fig6_table(config: &ScenarioConfig) -> Result<Fig6Table> {
    let (records, diverged) = fusion_trials(config, "fig6", config.k_max)?;
    let rows = (1..=config.k_max)
        .map(|k| {
            estimate_error_variances(&records, k, config.dr_com()).map(|m| Fig6Row {
                k,
                dr_rad: m.dr_rad,
                dr_ekf: m.dr_ekf,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Fig6Table {
        convergence_k: convergence_step(&rows, CONVERGENCE_BAND),
        clamped_ranges: records.iter().map(|r| r.clamped_ranges).sum(),
        rows,
        diverged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fig7Row {
    pub dr_com: f64,
    pub rho_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig7Table {
    pub rows: Vec<Fig7Row>,
    /// Metrics at `dr_com == dr_rad`.
    pub headline: FusionMetrics,
    pub headline_ci: (f64, f64),
    pub diverged: usize,
}

/// Improvement ratio at the report step for each communication variance.
///
/// Every grid point reuses the same seeds, so the truth and radar noise are
/// shared and only the filter's process covariance changes.
pub fn fig7_table(config: &ScenarioConfig) -> Result<Fig7Table> {
    if config.dr_com_grid.is_empty() {
        return Err(Error::config(
            "noise.dr_com_grid",
            "must be non-empty for fig7",
        ));
    }
    let k = config.report_step;
    let run = |dr_com: f64| -> Result<(FusionMetrics, Vec<TrialRecord>, usize)> {
        let (records, diverged) = fusion_trials(&config.with_dr_com(dr_com), "fig7", k)?;
        Ok((
            estimate_error_variances(&records, k, dr_com)?,
            records,
            diverged,
        ))
    };

    let mut rows = Vec::with_capacity(config.dr_com_grid.len());
    let mut diverged = 0;
    let mut headline = None;
    for &dr_com in &config.dr_com_grid {
        let (m, records, d) = run(dr_com)?;
        diverged += d;
        rows.push(Fig7Row {
            dr_com,
            rho_s: m.rho_s,
        });
        if dr_com == config.dr_rad() && headline.is_none() {
            headline = Some((m, records));
        }
    }
    let (headline, records) = match headline {
        Some(h) => h,
        None => {
            let (m, records, d) = run(config.dr_rad())?;
            diverged += d;
            (m, records)
        }
    };
    let headline_ci = rho_confidence_interval(
        &records,
        k,
        config.confidence_level,
        config.bootstrap_resamples,
        config.seed,
    )?;
    Ok(Fig7Table {
        rows,
        headline,
        headline_ci,
        diverged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fig8Row {
    pub t5_ms: f64,
    pub t7_ms: f64,
    pub rho_t_closed: f64,
    pub rho_t_des: f64,
}

fn friend_pair() -> (IffNode, IffNode) {
    (
        IffNode::new(1, Allegiance::Friend, "squadron-key"),
        IffNode::new(2, Allegiance::Friend, "squadron-key"),
    )
}

/// Reduction ratio over the `t5 x t7` grid, computed both in closed form and
/// by the event engine. Rows are ordered by `(t7, t5)`.
pub fn fig8_table(config: &ScenarioConfig) -> Result<Vec<Fig8Row>> {
    if config.t5_grid_ms.is_empty() {
        return Err(Error::config(
            "iff.t5_grid_ms",
            "must be non-empty for fig8",
        ));
    }
    if config.t7_grid_ms.is_empty() {
        return Err(Error::config(
            "iff.t7_grid_ms",
            "must be non-empty for fig8",
        ));
    }
    let mut points = Vec::new();
    for &t7 in &config.t7_grid_ms {
        for &t5 in &config.t5_grid_ms {
            points.push((t5, t7));
        }
    }
    points.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
    points.dedup();

    let (interrogator, responder) = friend_pair();
    let rows = points
        .into_par_iter()
        .map(|(t5, t7)| -> Result<Fig8Row> {
            let b = config
                .budget
                .with_stage_us(5, crate::iff::ms_to_us(t5)?)
                .with_stage_us(7, crate::iff::ms_to_us(t7)?);
            let closed = time_reduction_ratio(&b)?;
            let timeout = default_timeout_us(&b);
            let sep = simulate_exchange_with(
                PipelineVariant::Separated,
                &b,
                &interrogator,
                &responder,
                timeout,
            )?;
            let isac = simulate_exchange_with(
                PipelineVariant::Isac,
                &b,
                &interrogator,
                &responder,
                timeout,
            )?;
            Ok(Fig8Row {
                t5_ms: b.stage_ms(5),
                t7_ms: b.stage_ms(7),
                rho_t_closed: closed,
                rho_t_des: reduction_from_totals(sep.makespan_us, isac.makespan_us)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    if let Some(bad) = rows.iter().find(|r| r.rho_t_closed != r.rho_t_des) {
        return Err(Error::ExperimentFailed {
            experiment: "fig8".into(),
            reason: format!(
                "closed form {} and event engine {} disagree at t5 = {} ms, t7 = {} ms",
                bad.rho_t_closed, bad.rho_t_des, bad.t5_ms, bad.t7_ms
            ),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncounterOutcome {
    pub verdict: Verdict,
    pub separated: ExchangeTrace,
    pub isac: ExchangeTrace,
    pub separated_total_ms: f64,
    pub isac_total_ms: f64,
    pub rho_t: f64,
    pub final_radar_position_error: f64,
    pub final_fused_position_error: f64,
}

/// One interrogation under both pipelines, repeated `interactions` times,
/// followed by a tracking run with one radar update per interaction.
pub fn encounter(config: &ScenarioConfig) -> Result<EncounterOutcome> {
    let interrogator = IffNode::new(1, Allegiance::Friend, "squadron-key");
    let credential = match config.allegiance {
        Allegiance::Friend => "squadron-key",
        Allegiance::Foe => "unknown-key",
        Allegiance::Unresponsive => "",
    };
    let responder = IffNode::new(2, config.allegiance, credential);
    let b: &TimingBudget = &config.budget;
    let timeout = config.timeout_us.unwrap_or_else(|| default_timeout_us(b));
    let separated = simulate_exchange_with(
        PipelineVariant::Separated,
        b,
        &interrogator,
        &responder,
        timeout,
    )?;
    let isac =
        simulate_exchange_with(PipelineVariant::Isac, b, &interrogator, &responder, timeout)?;
    let n = f64::from(config.interactions);

    let scenario = config.tracking_scenario()?;
    let k_max = config.interactions as usize;
    let track = run_fusion_trial(&scenario, k_max, &mut trial_rng(config.seed, 0))?;
    let last = track.steps.last().ok_or_else(|| Error::ExperimentFailed {
        experiment: "encounter".into(),
        reason: "tracking produced no steps".into(),
    })?;

    Ok(EncounterOutcome {
        verdict: isac.verdict,
        separated_total_ms: n * separated.makespan_ms(),
        isac_total_ms: n * isac.makespan_ms(),
        rho_t: reduction_from_totals(separated.makespan_us, isac.makespan_us)?,
        final_radar_position_error: last.radar_position_error,
        final_fused_position_error: last.fused_position_error,
        separated,
        isac,
    })
}

fn echo_common(report: &mut ExperimentReport, config: &ScenarioConfig) {
    report
        .param("seed", config.seed)
        .param("trials", config.trials)
        .param("dt_s", config.dt)
        .param("k_max", config.k_max)
        .param("report_step", config.report_step);
}

pub fn run_fig6(config: &ScenarioConfig, out_dir: &Path) -> Result<ExperimentReport> {
    let started = Instant::now();
    let table = fig6_table(config)?;
    let mut report = ExperimentReport::new("fig6");
    echo_common(&mut report, config);
    report.param("dr_com", config.dr_com());
    report
        .csv_paths
        .push(write_csv(out_dir, "fig6.csv", &table.rows)?);
    let at = table.rows[config.report_step - 1];
    report
        .stat("dr_rad_at_report_step", at.dr_rad)
        .stat("dr_ekf_at_report_step", at.dr_ekf)
        .stat("convergence_k", table.convergence_k)
        .stat("diverged_trials", table.diverged)
        .stat("clamped_ranges", table.clamped_ranges);
    report.elapsed = started.elapsed();
    Ok(report)
}

pub fn run_fig7(config: &ScenarioConfig, out_dir: &Path) -> Result<ExperimentReport> {
    let started = Instant::now();
    let table = fig7_table(config)?;
    let mut report = ExperimentReport::new("fig7");
    echo_common(&mut report, config);
    report.param("dr_com_grid", format!("{:?}", config.dr_com_grid));
    report
        .csv_paths
        .push(write_csv(out_dir, "fig7.csv", &table.rows)?);
    let (lo, hi) = table.headline_ci;
    report
        .stat("dr_rad", table.headline.dr_rad)
        .stat("dr_ekf_at_dr_com_eq_dr_rad", table.headline.dr_ekf)
        .stat("rho_s_at_dr_com_eq_dr_rad", table.headline.rho_s)
        .stat("rho_s_ci_low", lo)
        .stat("rho_s_ci_high", hi)
        .stat("rho_s_ci_level", config.confidence_level)
        .stat("diverged_trials", table.diverged);
    report.elapsed = started.elapsed();
    Ok(report)
}

pub fn run_fig8(config: &ScenarioConfig, out_dir: &Path) -> Result<ExperimentReport> {
    let started = Instant::now();
    let rows = fig8_table(config)?;
    let mut report = ExperimentReport::new("fig8");
    report
        .param("t3_ms", config.budget.stage_ms(3))
        .param("t5_grid_ms", format!("{:?}", config.t5_grid_ms))
        .param("t7_grid_ms", format!("{:?}", config.t7_grid_ms));
    report
        .csv_paths
        .push(write_csv(out_dir, "fig8.csv", &rows)?);
    let peak = rows
        .iter()
        .copied()
        .reduce(|a, b| {
            if b.rho_t_closed > a.rho_t_closed {
                b
            } else {
                a
            }
        })
        .expect("grid is non-empty");
    report
        .stat("peak_rho_t", peak.rho_t_closed)
        .stat("peak_t5_ms", peak.t5_ms)
        .stat("peak_t7_ms", peak.t7_ms)
        .stat("rows", rows.len());
    report.elapsed = started.elapsed();
    Ok(report)
}

pub fn run_full_encounter(config: &ScenarioConfig, out_dir: &Path) -> Result<ExperimentReport> {
    let started = Instant::now();
    let outcome = encounter(config)?;
    let mut report = ExperimentReport::new("encounter");
    report
        .param("seed", config.seed)
        .param("interactions", config.interactions)
        .param(
            "allegiance",
            format!("{:?}", config.allegiance).to_lowercase(),
        );
    for (name, trace) in [
        ("encounter_separated_trace.csv", &outcome.separated),
        ("encounter_isac_trace.csv", &outcome.isac),
    ] {
        super::report::ensure_dir(out_dir)?;
        let path = out_dir.join(name);
        let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        trace.write_csv(file)?;
        report.csv_paths.push(path);
    }
    report
        .stat("verdict", outcome.verdict)
        .stat("separated_exchange_ms", outcome.separated.makespan_ms())
        .stat("isac_exchange_ms", outcome.isac.makespan_ms())
        .stat("separated_total_ms", outcome.separated_total_ms)
        .stat("isac_total_ms", outcome.isac_total_ms)
        .stat("rho_t", outcome.rho_t)
        .stat(
            "final_radar_position_error_m",
            outcome.final_radar_position_error,
        )
        .stat(
            "final_fused_position_error_m",
            outcome.final_fused_position_error,
        );
    report.elapsed = started.elapsed();
    Ok(report)
}

/// Runs every experiment and writes `summary.txt` after all tables.
pub fn run_all(config: &ScenarioConfig, out_dir: &Path) -> Result<Vec<ExperimentReport>> {
    let reports = vec![
        run_fig6(config, out_dir)?,
        run_fig7(config, out_dir)?,
        run_fig8(config, out_dir)?,
        run_full_encounter(config, out_dir)?,
    ];
    write_summary(out_dir, &reports)?;
    Ok(reports)
}
