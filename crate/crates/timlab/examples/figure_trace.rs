//! Walk the classic nine-run demonstration profile through both merge
//! policies and print every stack state.
//!
//!     cargo run --example figure_trace

use timlab::generators::{paper_vector, PaperVectorId};
use timlab::policy::{simulate, EventKind, PolicyVariant};

fn label(kind: EventKind) -> &'static str {
    match kind {
        EventKind::Push => "#1",
        EventKind::Merge2 => "#2",
        EventKind::Merge3 => "#3",
        EventKind::Merge4 => "#4",
        EventKind::Merge5 => "#5",
        EventKind::Force => "force",
        EventKind::Overflow => "over",
    }
}

fn main() {
    let profile = paper_vector(PaperVectorId::Fig2);
    println!("profile: {profile}  (n = {})\n", profile.total());

    for variant in [PolicyVariant::Patched, PolicyVariant::Unpatched] {
        let trace = simulate(&profile, variant, None);
        println!("{variant} rules:");
        for ev in trace.main_events() {
            let cost = if ev.cost > 0 {
                format!("cost {:>3}", ev.cost)
            } else {
                "        ".to_string()
            };
            println!("  {:>5}  {cost}  stack (top..bottom): {:?}", label(ev.kind), ev.stack);
        }
        println!(
            "  main-loop cost {}, forced collapse {}, peak height {}\n",
            trace.main_loop_cost(),
            trace.force_cost(),
            trace.max_height()
        );
    }

    println!(
        "The unpatched run stops collapsing after a single #2 merge where the\n\
         patched run fires #2 #5 #4 #3, so it parks the stack (1,8,10,20,28,92)\n\
         with 28 <= 10 + 20 — the invariant the height bound assumes is broken."
    );
}
