use std::fmt;

use super::engine::{EventEngine, TaskId};
use super::trace::{Actor, ExchangeTrace, Stage, TraceEvent};
use super::TimingBudget;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PipelineVariant {
    /// Sensing and communication run one after the other.
    Separated,
    /// One integrated signal; detection overlaps interrogation decoding.
    Isac,
}

impl PipelineVariant {
    pub fn label(self) -> &'static str {
        match self {
            PipelineVariant::Separated => "separated",
            PipelineVariant::Isac => "isac",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Allegiance {
    Friend,
    Foe,
    Unresponsive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Friend,
    Foe,
    NoResponse,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Friend => "friend",
            Verdict::Foe => "foe",
            Verdict::NoResponse => "no-response",
        })
    }
}

pub type NodeId = u32;

/// Responder-side durations. When present on the responder they replace
/// `t5` and `t6` of the exchange budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransponderTiming {
    pub decode_us: u64,
    pub respond_us: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IffNode {
    pub id: NodeId,
    pub allegiance: Allegiance,
    /// Opaque code. An interrogator uses its own code as the expected one.
    pub credential: String,
    pub transponder: Option<TransponderTiming>,
    /// Opaque location report returned with a response.
    pub location_payload: Vec<u8>,
}

impl IffNode {
    pub fn new(id: NodeId, allegiance: Allegiance, credential: impl Into<String>) -> Self {
        IffNode {
            id,
            allegiance,
            credential: credential.into(),
            transponder: None,
            location_payload: Vec::new(),
        }
    }

    pub fn responds(&self) -> bool {
        self.allegiance != Allegiance::Unresponsive
    }
}

/// Wait before an interrogator gives up on a silent node: twice the
/// expected decode plus response time.
pub fn default_timeout_us(b: &TimingBudget) -> u64 {
    2 * (b.stage_us(5) + b.stage_us(6))
}

fn effective_budget(b: &TimingBudget, responder: &IffNode) -> TimingBudget {
    match responder.transponder {
        Some(t) => b
            .with_stage_us(5, t.decode_us)
            .with_stage_us(6, t.respond_us),
        None => *b,
    }
}

/// Simulates one exchange with the default no-response timeout.
pub fn simulate_exchange(
    variant: PipelineVariant,
    b: &TimingBudget,
    interrogator: &IffNode,
    responder: &IffNode,
) -> Result<ExchangeTrace> {
    let timeout = default_timeout_us(&effective_budget(b, responder));
    simulate_exchange_with(variant, b, interrogator, responder, timeout)
}

/// Builds the exchange as a task graph and runs it on the event engine.
///
/// The makespan comes from the engine, not from the closed-form totals.
pub fn simulate_exchange_with(
    variant: PipelineVariant,
    b: &TimingBudget,
    interrogator: &IffNode,
    responder: &IffNode,
    timeout_us: u64,
) -> Result<ExchangeTrace> {
    if interrogator.id == responder.id {
        return Err(Error::Domain(format!(
            "node {} cannot interrogate itself",
            interrogator.id
        )));
    }
    let b = effective_budget(b, responder);
    let t = |i: usize| b.stage_us(i);
    let me = Some(Actor::Interrogator);
    let them = Some(Actor::Transponder);
    let mut engine: EventEngine<Option<Stage>, Actor> = EventEngine::new();
    let responds = responder.responds();

    let t1 = engine.add_task(Some(Stage::SendSignal), me, t(1), &[]);
    let verdict_deps: Vec<TaskId> = match variant {
        PipelineVariant::Separated => {
            let t2 = engine.add_task(Some(Stage::ReceiveEchoes), me, t(2), &[t1]);
            let t3 = engine.add_task(Some(Stage::DetectNode), me, t(3), &[t2]);
            let t4 = engine.add_task(Some(Stage::SendInterrogation), me, t(4), &[t3]);
            if responds {
                let t5 = engine.add_task(Some(Stage::DecodeInterrogation), them, t(5), &[t4]);
                vec![engine.add_task(Some(Stage::ReceiveResponse), me, t(6), &[t5])]
            } else {
                vec![engine.add_task(None, None, timeout_us, &[t4])]
            }
        }
        PipelineVariant::Isac => {
            // The integrated signal carries the interrogation, so t4 is
            // absorbed into t1.
            let t2 = engine.add_task(Some(Stage::ReceiveEchoes), me, t(2), &[t1]);
            let t3 = engine.add_task(Some(Stage::DetectNode), me, t(3), &[t2]);
            if responds {
                let t5 = engine.add_task(Some(Stage::DecodeInterrogation), them, t(5), &[t1]);
                vec![engine.add_task(Some(Stage::ReceiveResponse), me, t(6), &[t3, t5])]
            } else {
                let wait = engine.add_task(None, None, timeout_us, &[t1]);
                vec![t3, wait]
            }
        }
    };
    engine.add_task(Some(Stage::Verdict), me, t(7), &verdict_deps);

    let makespan_us = engine.run()?;
    let events = engine
        .schedule()
        .filter_map(|(stage, actor, start_us, end_us)| {
            Some(TraceEvent {
                stage: stage?,
                actor: actor?,
                start_us,
                end_us,
            })
        })
        .collect();

    let verdict = if !responds {
        Verdict::NoResponse
    } else if responder.credential == interrogator.credential {
        Verdict::Friend
    } else {
        Verdict::Foe
    };
    Ok(ExchangeTrace {
        events,
        verdict,
        makespan_us,
        response_payload: responds.then(|| responder.location_payload.clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iff::{isac_iff_us, separated_iff_us};
    use proptest::prelude::*;

    fn pair(allegiance: Allegiance, credential: &str) -> (IffNode, IffNode) {
        (
            IffNode::new(1, Allegiance::Friend, "blue-7"),
            IffNode::new(2, allegiance, credential),
        )
    }

    fn worked_budget() -> TimingBudget {
        TimingBudget::from_ms([1.0, 2.0, 10.0, 1.0, 20.0, 2.0, 20.0]).unwrap()
    }

    #[test]
    fn worked_example_makespans() {
        let (a, b) = pair(Allegiance::Friend, "blue-7");
        let sep = simulate_exchange(PipelineVariant::Separated, &worked_budget(), &a, &b).unwrap();
        let isac = simulate_exchange(PipelineVariant::Isac, &worked_budget(), &a, &b).unwrap();
        assert_eq!(sep.makespan_ms(), 56.0);
        assert_eq!(isac.makespan_ms(), 43.0);
        assert!(sep.concurrent_pairs().is_empty());
        assert_eq!(isac.concurrent_pairs().len(), 2);
        assert_eq!(isac.events.len(), 6);
        sep.check_well_formed().unwrap();
        isac.check_well_formed().unwrap();
    }

    #[test]
    fn verdict_truth_table() {
        let b = worked_budget();
        for variant in [PipelineVariant::Separated, PipelineVariant::Isac] {
            let (a, r) = pair(Allegiance::Friend, "blue-7");
            assert_eq!(
                simulate_exchange(variant, &b, &a, &r).unwrap().verdict,
                Verdict::Friend
            );
            let (a, r) = pair(Allegiance::Foe, "red-1");
            assert_eq!(
                simulate_exchange(variant, &b, &a, &r).unwrap().verdict,
                Verdict::Foe
            );
            let (a, r) = pair(Allegiance::Unresponsive, "blue-7");
            assert_eq!(
                simulate_exchange(variant, &b, &a, &r).unwrap().verdict,
                Verdict::NoResponse
            );
        }
    }

    #[test]
    fn timeout_path() {
        let b = worked_budget();
        let (a, r) = pair(Allegiance::Unresponsive, "");
        let timeout = default_timeout_us(&b);
        assert_eq!(timeout, 44_000);
        let sep = simulate_exchange(PipelineVariant::Separated, &b, &a, &r).unwrap();
        assert_eq!(sep.makespan_us, 14_000 + timeout + 20_000);
        assert!(sep.event(Stage::DecodeInterrogation).is_none());
        assert!(sep.response_payload.is_none());
        let isac = simulate_exchange_with(PipelineVariant::Isac, &b, &a, &r, 5_000).unwrap();
        // Detection (t2 + t3) outlasts the short timer.
        assert_eq!(isac.makespan_us, 1_000 + 12_000 + 20_000);
    }

    #[test]
    fn transponder_timing_overrides_budget() {
        let (a, mut r) = pair(Allegiance::Friend, "blue-7");
        r.transponder = Some(TransponderTiming {
            decode_us: 5_000,
            respond_us: 1_000,
        });
        r.location_payload = vec![1, 2, 3];
        let trace = simulate_exchange(PipelineVariant::Isac, &worked_budget(), &a, &r).unwrap();
        assert_eq!(trace.makespan_ms(), 1.0 + 12.0 + 1.0 + 20.0);
        assert_eq!(trace.response_payload.as_deref(), Some(&[1u8, 2, 3][..]));
    }

    #[test]
    fn self_interrogation_is_rejected() {
        let a = IffNode::new(1, Allegiance::Friend, "x");
        assert!(simulate_exchange(PipelineVariant::Isac, &worked_budget(), &a, &a).is_err());
    }

    proptest! {
        #[test]
        fn engine_matches_closed_forms(stages in prop::array::uniform7(0u64..100_000)) {
            let b = TimingBudget::from_us(stages).unwrap();
            let (a, r) = pair(Allegiance::Friend, "blue-7");
            let sep = simulate_exchange(PipelineVariant::Separated, &b, &a, &r).unwrap();
            let isac = simulate_exchange(PipelineVariant::Isac, &b, &a, &r).unwrap();
            prop_assert_eq!(sep.makespan_us, separated_iff_us(&b));
            prop_assert_eq!(isac.makespan_us, isac_iff_us(&b));
            prop_assert!(sep.check_well_formed().is_ok());
            prop_assert!(isac.check_well_formed().is_ok());
        }
    }
}
