//! Serialize a trace to JSON lines, read it back, and run the invariant
//! checkers over it — the same flow as `gen | simulate | check` on the
//! command line, in process.
//!
//!     cargo run --example trace_pipeline

use timlab::analysis::check_trace;
use timlab::generators::random_profile;
use timlab::policy::{simulate, PolicyVariant};
use timlab::wire::{read_trace, write_trace};

fn main() {
    let profile = random_profile(5_000, 800, 11).unwrap();
    let trace = simulate(&profile, PolicyVariant::Patched, None);

    let mut buf = Vec::new();
    write_trace(&trace, &mut buf).unwrap();
    println!(
        "serialized {} events into {} bytes of JSON lines; first lines:",
        trace.events.len(),
        buf.len()
    );
    for line in String::from_utf8_lossy(&buf).lines().take(4) {
        println!("  {line}");
    }

    let parsed = read_trace(&mut buf.as_slice()).unwrap();
    assert_eq!(parsed, trace);
    println!("\nround trip preserved the trace exactly; checker results:");

    let suite = check_trace(&parsed);
    for (name, violations) in suite.rows() {
        let result = if violations == 0 { "pass" } else { "FAIL" };
        println!("  {name:<26} {result}");
    }
    assert!(suite.passed());
}
