//! How tall can the run stack get per element? Exhaustive search over
//! every realizable profile up to 30 elements, compared against the
//! minimal towers and the analytic bounds.
//!
//!     cargo run --release --example height_search

use timlab::analysis::height_bound;
use timlab::generators::{fib_tower_sum, max_height_search};
use timlab::policy::PolicyVariant;

fn main() {
    println!(
        "{:>4} {:>28} {:>7} {:>10} {:>12}",
        "n", "best profile (patched)", "height", "fib bound", "unp. bound"
    );
    for n in [5u64, 10, 15, 20, 26, 30] {
        let found = max_height_search(n, n as usize, PolicyVariant::Patched);
        let unp = max_height_search(n, n as usize, PolicyVariant::Unpatched);
        let pb = height_bound(n, PolicyVariant::Patched).tight;
        let ub = height_bound(n, PolicyVariant::Unpatched).tight;
        assert!((found.height as f64) <= pb && (unp.height as f64) <= ub);
        println!(
            "{n:>4} {:>28} {:>7} {pb:>10.0} {ub:>12.2}",
            found.profile.to_string(),
            found.height,
        );
    }

    println!("\nMinimal towers (no merges, one run per level):");
    for h in 1..=10 {
        println!("  height {h:>2} needs at least {:>4} elements", fib_tower_sum(h));
    }

    let b = height_bound(1 << 31, PolicyVariant::Unpatched);
    println!(
        "\nFor 2^31 elements the unpatched height bound evaluates to {:.2},\n\
         so a run stack of 49 entries is not safe in general, while {} is.",
        b.tight,
        b.tight.floor()
    );
}
