//! Sort a real array and account for every comparison and move; the
//! merge decisions match the length-only simulator event for event.
//!
//!     cargo run --example sort_metrics

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use timlab::policy::{simulate, PolicyVariant};
use timlab::runs::{decompose, profile_of};
use timlab::sorter::timsort_lite_traced;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut data: Vec<i64> = (0..10_000).map(|_| rng.gen_range(-500..500)).collect();
    // Plant some presortedness: sort a few stretches.
    for chunk in data.chunks_mut(700).step_by(2) {
        chunk.sort();
    }

    let profile = profile_of(&decompose(&data).unwrap()).unwrap();
    println!(
        "n = {}, runs = {}, run entropy = {:.3} bits",
        data.len(),
        profile.run_count(),
        timlab::analysis::entropy(&profile)
    );

    for variant in [PolicyVariant::Patched, PolicyVariant::Unpatched] {
        let mut copy = data.clone();
        let (m, events) = timsort_lite_traced(&mut copy, variant);
        assert!(copy.windows(2).all(|w| w[0] <= w[1]));

        let trace = simulate(&profile, variant, None);
        let sim_events: Vec<_> = trace.events.iter().map(|e| (e.kind, e.cost)).collect();
        assert_eq!(events, sim_events, "sorter must mirror the simulator");

        println!("\n{variant}:");
        println!("  comparisons        {:>8}  (run detect {}, merges {})",
            m.comparisons, m.run_detect_comparisons, m.merge_comparisons);
        println!("  merge cost         {:>8}  (main {}, forced {})",
            m.merge_cost, m.main_loop_cost, m.force_cost);
        println!("  element moves      {:>8}", m.moved);
        println!("  peak stack height  {:>8}", m.max_height);
        println!("  merge comps <= cost: {}", m.merge_comparisons <= m.merge_cost);
    }
}
