use isac_uav::fusion::trial_rng;
use isac_uav::iff::{
    isac_iff_us, parse_trace_csv, separated_iff_us, simulate_exchange, Allegiance, IffNode,
    PipelineVariant, TimingBudget,
};
use rand::Rng;

#[test]
fn event_engine_matches_closed_forms_on_random_budgets() {
    let mut rng = trial_rng(31, 0);
    let a = IffNode::new(1, Allegiance::Friend, "k");
    let b = IffNode::new(2, Allegiance::Friend, "k");
    for _ in 0..10_000 {
        let mut stages = [0u64; 7];
        for s in &mut stages {
            // A quarter of stages are zero to exercise degenerate overlaps.
            *s = if rng.random_bool(0.25) {
                0
            } else {
                rng.random_range(1..50_000)
            };
        }
        let budget = TimingBudget::from_us(stages).unwrap();
        let sep = simulate_exchange(PipelineVariant::Separated, &budget, &a, &b).unwrap();
        let isac = simulate_exchange(PipelineVariant::Isac, &budget, &a, &b).unwrap();
        assert_eq!(sep.makespan_us, separated_iff_us(&budget), "{stages:?}");
        assert_eq!(isac.makespan_us, isac_iff_us(&budget), "{stages:?}");
    }
}

#[test]
fn exported_trace_parses_back() {
    let budget = TimingBudget::from_ms([1.0, 2.0, 10.0, 1.0, 20.0, 2.0, 20.0]).unwrap();
    let a = IffNode::new(1, Allegiance::Friend, "k");
    let b = IffNode::new(2, Allegiance::Foe, "other");
    for variant in [PipelineVariant::Separated, PipelineVariant::Isac] {
        let trace = simulate_exchange(variant, &budget, &a, &b).unwrap();
        let text = trace.to_csv_string().unwrap();
        assert_eq!(parse_trace_csv(text.as_bytes()).unwrap(), trace.events);
    }
}
