//! The unpatched policy leaves broken invariants behind — even twice in
//! a row — which is why a fixed-size run stack can overflow. This example
//! shows the double violation and emulates an overflow with a small
//! capacity.
//!
//!     cargo run --example java_bug

use timlab::analysis::{check_python_invariant, obstruction_indices};
use timlab::generators::{fib_tower, paper_vector, PaperVectorId};
use timlab::policy::{simulate, EventKind, PolicyVariant};

fn main() {
    let profile = paper_vector(PaperVectorId::Fig5);
    let trace = simulate(&profile, PolicyVariant::Unpatched, None);
    let stack = trace.final_main_stack();

    println!("profile: {profile}");
    println!("unpatched main loop ends at (top..bottom): {stack:?}");
    println!("invariant violations at indices {:?}", check_python_invariant(stack));
    println!("obstruction indices: {:?}", obstruction_indices(stack));
    println!(
        "Both (28,56,83) and (56,83,109) are too flat: 83 <= 28+56 and 109 <= 56+83.\n"
    );

    // A fixed-capacity stack survives only as long as the height bound it
    // was sized for is honest. Emulate a tiny allocation and watch it
    // overflow: the tower pushes never merge, so the stack just grows.
    let tower = fib_tower(12);
    let capacity = 8;
    let trace = simulate(&tower, PolicyVariant::Patched, Some(capacity));
    let overflows: Vec<usize> = trace
        .events
        .iter()
        .filter(|e| e.kind == EventKind::Overflow)
        .map(|e| e.stack.len())
        .collect();
    println!(
        "tower of {} runs ({} elements) against capacity {capacity}:",
        tower.run_count(),
        tower.total()
    );
    println!(
        "  {} overflow events at heights {:?}; the run completes anyway and\n\
         still sorts (final stack {:?}).",
        overflows.len(),
        overflows,
        trace.events.last().unwrap().stack
    );
    println!(
        "\nThe real fixed allocation uses capacity 49; sizing it requires the\n\
         tight unpatched height bound, not the broken invariant's bound."
    );
}
