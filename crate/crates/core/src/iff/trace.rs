use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::exchange::Verdict;
use super::us_to_ms;
use crate::error::{Error, Result};

/// The seven exchange stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    SendSignal,
    ReceiveEchoes,
    DetectNode,
    SendInterrogation,
    DecodeInterrogation,
    ReceiveResponse,
    Verdict,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::SendSignal,
        Stage::ReceiveEchoes,
        Stage::DetectNode,
        Stage::SendInterrogation,
        Stage::DecodeInterrogation,
        Stage::ReceiveResponse,
        Stage::Verdict,
    ];

    /// 1-based stage number.
    pub fn index(self) -> usize {
        Stage::ALL.iter().position(|s| *s == self).unwrap_or(0) + 1
    }

    pub fn label(self) -> &'static str {
        ["t1", "t2", "t3", "t4", "t5", "t6", "t7"][self.index() - 1]
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|stage| stage.label() == s)
            .ok_or_else(|| Error::TraceFormat(format!("unknown event label {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Actor {
    Interrogator,
    Transponder,
}

impl Actor {
    pub fn label(self) -> &'static str {
        match self {
            Actor::Interrogator => "interrogator",
            Actor::Transponder => "transponder",
        }
    }
}

impl FromStr for Actor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interrogator" => Ok(Actor::Interrogator),
            "transponder" => Ok(Actor::Transponder),
            _ => Err(Error::TraceFormat(format!("unknown actor {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEvent {
    pub stage: Stage,
    pub actor: Actor,
    pub start_us: u64,
    pub end_us: u64,
}

impl TraceEvent {
    fn overlaps(&self, other: &TraceEvent) -> bool {
        self.start_us < other.end_us && other.start_us < self.end_us
    }
}

/// Timeline of one exchange as produced by the event engine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExchangeTrace {
    pub events: Vec<TraceEvent>,
    pub verdict: Verdict,
    pub makespan_us: u64,
    /// Opaque location report carried on the response, if one was sent.
    pub response_payload: Option<Vec<u8>>,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    event: String,
    actor: String,
    start_us: u64,
    end_us: u64,
}

const CSV_HEADER: [&str; 4] = ["event", "actor", "start_us", "end_us"];

impl ExchangeTrace {
    pub fn makespan_ms(&self) -> f64 {
        us_to_ms(self.makespan_us)
    }

    pub fn event(&self, stage: Stage) -> Option<&TraceEvent> {
        self.events.iter().find(|e| e.stage == stage)
    }

    /// Pairs of events on different actors that run at the same time.
    pub fn concurrent_pairs(&self) -> Vec<(Stage, Stage)> {
        let mut pairs = Vec::new();
        for (i, a) in self.events.iter().enumerate() {
            for b in &self.events[i + 1..] {
                if a.actor != b.actor && a.overlaps(b) {
                    pairs.push((a.stage, b.stage));
                }
            }
        }
        pairs
    }

    /// Checks the structural invariants: per-actor events never overlap and
    /// the makespan is the latest end time.
    pub fn check_well_formed(&self) -> Result<()> {
        for (i, a) in self.events.iter().enumerate() {
            if a.end_us < a.start_us {
                return Err(Error::TraceFormat(format!(
                    "{} ends before it starts",
                    a.stage
                )));
            }
            for b in &self.events[i + 1..] {
                if a.actor == b.actor && a.overlaps(b) {
                    return Err(Error::TraceFormat(format!(
                        "{} and {} overlap on the {}",
                        a.stage,
                        b.stage,
                        a.actor.label()
                    )));
                }
            }
        }
        let latest = self.events.iter().map(|e| e.end_us).max().unwrap_or(0);
        if latest > self.makespan_us {
            return Err(Error::TraceFormat(format!(
                "makespan {} precedes the last event end {latest}",
                self.makespan_us
            )));
        }
        Ok(())
    }

    /// Writes `event,actor,start_us,end_us` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        // Explicit header so an empty trace still round-trips.
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(writer);
        w.write_record(CSV_HEADER)?;
        for e in &self.events {
            w.serialize(CsvRow {
                event: e.stage.label().to_string(),
                actor: e.actor.label().to_string(),
                start_us: e.start_us,
                end_us: e.end_us,
            })?;
        }
        w.flush().map_err(|e| Error::io("<trace csv>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::TraceFormat(e.to_string()))
    }
}

/// Parses a trace CSV written by [`ExchangeTrace::write_csv`].
pub fn parse_trace_csv(input: &[u8]) -> Result<Vec<TraceEvent>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| Error::TraceFormat(e.to_string()))?
        .clone();
    if headers.iter().ne(CSV_HEADER) {
        return Err(Error::TraceFormat(format!(
            "expected header {CSV_HEADER:?}, got {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let mut events = Vec::new();
    for row in reader.deserialize::<CsvRow>() {
        let row = row.map_err(|e| Error::TraceFormat(e.to_string()))?;
        if row.end_us < row.start_us {
            return Err(Error::TraceFormat(format!(
                "event {} ends at {} before starting at {}",
                row.event, row.end_us, row.start_us
            )));
        }
        events.push(TraceEvent {
            stage: row.event.parse()?,
            actor: row.actor.parse()?,
            start_us: row.start_us,
            end_us: row.end_us,
        });
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(stage: Stage, actor: Actor, start_us: u64, end_us: u64) -> TraceEvent {
        TraceEvent {
            stage,
            actor,
            start_us,
            end_us,
        }
    }

    #[test]
    fn labels_round_trip() {
        for s in Stage::ALL {
            assert_eq!(s.label().parse::<Stage>().unwrap(), s);
        }
        assert_eq!(Stage::Verdict.index(), 7);
        assert!("t8".parse::<Stage>().is_err());
        assert!("radar".parse::<Actor>().is_err());
    }

    #[test]
    fn csv_header_and_round_trip() {
        let trace = ExchangeTrace {
            events: vec![
                ev(Stage::SendSignal, Actor::Interrogator, 0, 1000),
                ev(Stage::DecodeInterrogation, Actor::Transponder, 1000, 11000),
            ],
            verdict: Verdict::Friend,
            makespan_us: 11000,
            response_payload: None,
        };
        let text = trace.to_csv_string().unwrap();
        assert_eq!(text.lines().next().unwrap(), "event,actor,start_us,end_us");
        assert_eq!(text.lines().nth(2).unwrap(), "t5,transponder,1000,11000");
        assert_eq!(parse_trace_csv(text.as_bytes()).unwrap(), trace.events);

        let empty = ExchangeTrace {
            events: vec![],
            ..trace
        };
        let text = empty.to_csv_string().unwrap();
        assert_eq!(text, "event,actor,start_us,end_us\n");
        assert!(parse_trace_csv(text.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_trace_csv(b"a,b,c,d\nt1,interrogator,0,1\n").is_err());
        assert!(parse_trace_csv(b"event,actor,start_us,end_us\nt1,interrogator,5,1\n").is_err());
        assert!(parse_trace_csv(b"event,actor,start_us,end_us\nt1,interrogator,-5,1\n").is_err());
        assert!(parse_trace_csv(b"event,actor,start_us,end_us\nt1,interrogator,0\n").is_err());
        assert!(parse_trace_csv(b"").is_err());
        assert_eq!(
            parse_trace_csv(b"event,actor,start_us,end_us\n").unwrap(),
            vec![]
        );
    }

    #[test]
    fn well_formedness() {
        let mut trace = ExchangeTrace {
            events: vec![
                ev(Stage::SendSignal, Actor::Interrogator, 0, 10),
                ev(Stage::ReceiveEchoes, Actor::Interrogator, 5, 12),
            ],
            verdict: Verdict::Foe,
            makespan_us: 12,
            response_payload: None,
        };
        assert!(trace.check_well_formed().is_err());
        trace.events[1].start_us = 10;
        trace.check_well_formed().unwrap();
        trace.makespan_us = 11;
        assert!(trace.check_well_formed().is_err());
    }
}
