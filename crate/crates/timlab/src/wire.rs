//! JSON-lines trace format.
//!
//! A serialized trace is one header line followed by one line per event:
//!
//! ```text
//! {"variant":"patched","profile":[24,18,50],"n":92,"rho":3}
//! {"k":"PUSH","c":0,"s":[24]}
//! {"k":"M2","c":42,"s":[50,42]}
//! {"k":"F","c":92,"s":[92]}
//! ```
//!
//! `k` is one of `PUSH`, `M2`..`M5`, `F` (forced collapse) or `OV`
//! (capacity overflow); `c` is the merge cost; `s` lists the stack after
//! the event, top to bottom. The header carries the policy variant, the
//! input profile, `n` and `rho`, plus the emulated capacity when one was
//! set.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::policy::{EventKind, PolicyVariant, SimSummary, Trace, TraceEvent};
use crate::runs::RunProfile;
use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
struct Header {
    variant: PolicyVariant,
    profile: Vec<u64>,
    n: u64,
    rho: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    capacity: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct Event {
    k: String,
    c: u64,
    s: Vec<u64>,
}

fn kind_code(kind: EventKind) -> &'static str {
    match kind {
        EventKind::Push => "PUSH",
        EventKind::Merge2 => "M2",
        EventKind::Merge3 => "M3",
        EventKind::Merge4 => "M4",
        EventKind::Merge5 => "M5",
        EventKind::Force => "F",
        EventKind::Overflow => "OV",
    }
}

fn kind_from_code(code: &str) -> Result<EventKind> {
    Ok(match code {
        "PUSH" => EventKind::Push,
        "M2" => EventKind::Merge2,
        "M3" => EventKind::Merge3,
        "M4" => EventKind::Merge4,
        "M5" => EventKind::Merge5,
        "F" => EventKind::Force,
        "OV" => EventKind::Overflow,
        other => return Err(Error::Parse(format!("unknown event kind {other:?}"))),
    })
}

/// Writes a trace as JSON lines.
pub fn write_trace<W: Write + ?Sized>(trace: &Trace, out: &mut W) -> Result<()> {
    let header = Header {
        variant: trace.variant,
        profile: trace.profile.lengths().to_vec(),
        n: trace.profile.total(),
        rho: trace.profile.run_count(),
        capacity: trace.capacity,
    };
    serde_json::to_writer(&mut *out, &header).map_err(|e| Error::Parse(e.to_string()))?;
    out.write_all(b"\n")?;
    for ev in &trace.events {
        let line = Event {
            k: kind_code(ev.kind).to_string(),
            c: ev.cost,
            s: ev.stack.clone(),
        };
        serde_json::to_writer(&mut *out, &line).map_err(|e| Error::Parse(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a trace previously produced by [`write_trace`]. Aggregates are
/// rebuilt from the event list.
pub fn read_trace(input: &mut impl BufRead) -> Result<Trace> {
    let mut lines = input.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::Parse("missing trace header".into()))??;
    let header: Header =
        serde_json::from_str(&header_line).map_err(|e| Error::Parse(format!("header: {e}")))?;
    let profile = RunProfile::new(header.profile)?;

    let mut events = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ev: Event =
            serde_json::from_str(&line).map_err(|e| Error::Parse(format!("event: {e}")))?;
        events.push(TraceEvent {
            kind: kind_from_code(&ev.k)?,
            cost: ev.c,
            stack: ev.s,
        });
    }
    if events.is_empty() {
        return Err(Error::Parse("trace has no events".into()));
    }

    let mut main_loop_cost = 0;
    let mut force_cost = 0;
    let mut max_height = 0;
    let mut overflows = 0;
    let mut final_main_stack = Vec::new();
    for ev in &events {
        max_height = max_height.max(ev.stack.len());
        match ev.kind {
            EventKind::Force => force_cost += ev.cost,
            EventKind::Overflow => {
                overflows += 1;
                final_main_stack = ev.stack.clone();
            }
            _ => {
                main_loop_cost += ev.cost;
                final_main_stack = ev.stack.clone();
            }
        }
    }
    let summary = SimSummary {
        n: profile.total(),
        rho: profile.run_count(),
        variant: header.variant,
        main_loop_cost,
        force_cost,
        max_height,
        overflows,
        final_main_stack,
    };
    Ok(Trace {
        variant: header.variant,
        profile,
        capacity: header.capacity,
        events,
        summary,
    })
}
