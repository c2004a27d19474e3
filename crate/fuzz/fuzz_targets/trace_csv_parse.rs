#![no_main]

use isac_uav::iff::{parse_trace_csv, ExchangeTrace, Verdict};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(events) = parse_trace_csv(data) {
        assert!(events.iter().all(|e| e.start_us <= e.end_us));
        let trace = ExchangeTrace {
            makespan_us: events.iter().map(|e| e.end_us).max().unwrap_or(0),
            events,
            verdict: Verdict::NoResponse,
            response_payload: None,
        };
        let text = trace.to_csv_string().expect("writing parsed events");
        assert_eq!(
            parse_trace_csv(text.as_bytes()).expect("re-parse"),
            trace.events
        );
    }
});
