//! The 97-run witness sequence: it drives the unpatched sum-over-top
//! ratio up to exactly 133/40, showing that consecutive broken
//! invariants compound — the quantity the tight height bound has to
//! tolerate.
//!
//!     cargo run --example alpha_witness

use timlab::analysis::{alpha_estimate, check_python_invariant, Constants};
use timlab::generators::{paper_vector, PaperVectorId};
use timlab::policy::{simulate, PolicyVariant};

fn main() {
    let witness = paper_vector(PaperVectorId::Prop81);
    println!(
        "witness: {} runs, {} elements, first runs {:?}...",
        witness.run_count(),
        witness.total(),
        &witness.lengths()[..7]
    );

    let trace = simulate(&witness, PolicyVariant::Unpatched, None);
    let stack = trace.final_main_stack();
    println!("unpatched main loop ends at (top..bottom): {stack:?}");
    println!("peak height {}, invariant violations at {:?}", trace.max_height(),
        check_python_invariant(stack));

    let alpha = alpha_estimate([&trace]);
    let (num, den) = alpha.reduced();
    let c = Constants::new();
    println!(
        "\nobserved ratio max (r_2+..+r_(i-1))/r_i = {num}/{den} = {:.6}",
        alpha.value()
    );
    println!("analytic ceiling 2 + sqrt 7            = {:.6}", c.alpha_inf);
    assert_eq!((num, den), (133, 40));
    assert!(alpha.within_alpha_inf());
    println!(
        "\nEverything that can pile on top of a run while it sits buried in the\n\
         stack stays below (2 + sqrt 7) times its length; this witness gets to\n\
         3.325 of it, far above what an intact invariant would ever allow."
    );
}
