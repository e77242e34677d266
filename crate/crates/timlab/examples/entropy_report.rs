//! Consolidated cost reports: entropy, merge costs, the cost/(n H) ratio
//! and every applicable bound, as JSON.
//!
//!     cargo run --example entropy_report

use timlab::analysis::report;
use timlab::generators::{fib_tower, paper_vector, random_profile, rtim, PaperVectorId};
use timlab::policy::PolicyVariant;

fn main() {
    let cases = vec![
        ("uniform 4 x 256", timlab::runs::RunProfile::new(vec![256; 4]).unwrap()),
        ("single run", timlab::runs::RunProfile::new(vec![1024]).unwrap()),
        ("demo nine runs", paper_vector(PaperVectorId::Fig2)),
        ("worst-case 4096", rtim(4096).unwrap()),
        ("tower height 10", fib_tower(10)),
        ("random n=2000", random_profile(2000, 300, 1).unwrap()),
    ];
    for (name, profile) in cases {
        let r = report(&profile, PolicyVariant::Patched);
        println!("--- {name}");
        println!("{}", serde_json::to_string_pretty(&r).unwrap());
        assert!(r.all_bounds_hold(), "{name} broke a bound");
    }
}
