//! Adversarial and structured run profiles.
//!
//! The centerpiece is the worst-case family `rtim(n)` together with its
//! cost recurrence [`rtim_cost`]: the recurrence is an oracle computed
//! independently of the simulator, and the two agreeing exactly is one of
//! the acceptance checks, not a definition. The module also provides
//! towers that maximize patched stack height per element, the published
//! witness sequences, seeded random profiles, concrete arrays realizing a
//! profile, and an exhaustive/beam search for height-maximizing inputs.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::policy::{self, PolicyVariant, StackState};
use crate::runs::RunProfile;
use crate::{Error, Result};

/// The worst-case run-length family: `<n>` for `n <= 6`, then
/// `rtim(k) · rtim(k-2) · <2>` for `n = 2k` and
/// `rtim(k) · rtim(k-1) · <2>` for `n = 2k+1`. Always sums to `n`.
pub fn rtim(n: u64) -> Result<RunProfile> {
    if n == 0 {
        return Err(Error::OutOfDomain("rtim needs n >= 1".into()));
    }
    let mut lengths = Vec::new();
    build_rtim(n, &mut lengths);
    RunProfile::new(lengths)
}

fn build_rtim(n: u64, out: &mut Vec<u64>) {
    if n <= 6 {
        out.push(n);
        return;
    }
    let k = n / 2;
    build_rtim(k, out);
    if n.is_multiple_of(2) {
        build_rtim(k - 2, out);
    } else {
        build_rtim(k - 1, out);
    }
    out.push(2);
}

/// Main-loop merge cost of `rtim(n)` by its own recurrence:
/// 0 for `n <= 6`, `c(k) + c(k-2) + 3k` for `n = 2k`,
/// `c(k) + c(k-1) + 3k + 2` for `n = 2k+1`.
pub fn rtim_cost(n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::OutOfDomain("rtim_cost needs n >= 1".into()));
    }
    Ok(rtim_cost_table(n)[n as usize])
}

/// The cost recurrence tabulated for every `n <= n_max` (index = n).
pub fn rtim_cost_table(n_max: u64) -> Vec<u64> {
    let n_max = n_max as usize;
    let mut c = vec![0u64; n_max + 1];
    for n in 7..=n_max {
        let k = n / 2;
        c[n] = if n % 2 == 0 {
            c[k] + c[k - 2] + 3 * k as u64
        } else {
            c[k] + c[k - 1] + 3 * k as u64 + 2
        };
    }
    c
}

/// A profile whose pushes trigger no merges under the patched rules and
/// that reaches stack height exactly `h`: the minimal strict solution of
/// the growth inequalities (`s_1 = 1`, `s_2 = 2`,
/// `s_i = s_{i-1} + s_{i-2} + 1`), pushed largest first.
pub fn fib_tower(h: usize) -> RunProfile {
    assert!(h >= 1, "tower height must be at least 1");
    let mut s = Vec::with_capacity(h);
    for i in 0..h {
        let v = match i {
            0 => 1,
            1 => 2,
            _ => s[i - 1] + s[i - 2] + 1,
        };
        s.push(v);
    }
    s.reverse();
    RunProfile::new(s).expect("tower lengths are positive")
}

/// Sum of the `fib_tower(h)` lengths; the smallest element count that can
/// hold a stable patched stack of height `h`.
pub fn fib_tower_sum(h: usize) -> u64 {
    fib_tower(h).total()
}

/// Fixed input sequences taken from published worked examples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PaperVectorId {
    /// Nine runs whose patched execution exercises all four merge cases.
    Fig2,
    /// Nine runs leaving the unpatched stack with two adjacent
    /// invariant violations.
    Fig5,
    /// The 97-run witness driving the unpatched sum/top ratio up to
    /// exactly 133/40.
    Prop81,
}

const FIG2: [u64; 9] = [24, 18, 50, 28, 20, 6, 4, 8, 1];
const FIG5: [u64; 9] = [109, 83, 25, 16, 8, 7, 26, 2, 27];
const PROP81: [u64; 97] = [
    360, 356, 3, 2, 4, 6, 10, 2, 1, 22, 4, 2, 1, 5, 1, 8, 4, 2, 1, 73, 4, 2, 5, 7, 2, 16, 3, 2, 4,
    6, 21, 4, 2, 22, 4, 2, 1, 5, 8, 3, 2, 79, 3, 2, 4, 6, 2, 10, 6, 3, 2, 33, 4, 2, 5, 7, 1, 13,
    4, 2, 1, 5, 1, 80, 4, 2, 5, 7, 1, 95, 3, 2, 4, 6, 10, 20, 4, 2, 5, 7, 3, 2, 26, 6, 3, 1, 31,
    3, 2, 4, 6, 2, 1, 12, 4, 2, 5,
];

/// Returns a published fixed sequence.
pub fn paper_vector(id: PaperVectorId) -> RunProfile {
    let lengths: &[u64] = match id {
        PaperVectorId::Fig2 => &FIG2,
        PaperVectorId::Fig5 => &FIG5,
        PaperVectorId::Prop81 => &PROP81,
    };
    RunProfile::new(lengths.to_vec()).expect("paper vectors are valid")
}

/// A seeded random realizable profile: `rho` lengths summing to `n`, each
/// interior length at least 2.
///
/// Generator: the slack `n - (2 rho - 1)` is split uniformly over the
/// runs by sampling a (rho-1)-subset of cut points (stars and bars), then
/// the minimum lengths (2, ..., 2, 1) are added back. Deterministic for a
/// given seed.
pub fn random_profile(n: u64, rho: usize, seed: u64) -> Result<RunProfile> {
    if rho == 0 || (rho as u64) > n {
        return Err(Error::Infeasible(format!("need 1 <= rho <= n, got rho={rho}, n={n}")));
    }
    let min_n = 2 * rho as u64 - 1;
    if n < min_n {
        return Err(Error::Infeasible(format!(
            "no realizable profile with rho={rho} runs and n={n} < {min_n} elements"
        )));
    }
    let slack = n - min_n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Uniform composition of `slack` into rho parts: choose rho-1 distinct
    // bars among slack + rho - 1 slots.
    let total_slots = slack + rho as u64 - 1;
    let mut bars = sample_distinct(&mut rng, total_slots, rho - 1);
    bars.sort_unstable();
    let mut parts = Vec::with_capacity(rho);
    let mut prev = 0;
    for &b in &bars {
        parts.push(b - prev); // stars between the previous bar and this one
        prev = b + 1;
    }
    parts.push(total_slots - prev);
    debug_assert_eq!(parts.len(), rho);
    debug_assert_eq!(parts.iter().sum::<u64>() + bars.len() as u64, total_slots);

    let mut lengths: Vec<u64> = parts.iter().map(|&p| 2 + p).collect();
    *lengths.last_mut().unwrap() -= 1; // the last run may be a single element
    debug_assert_eq!(lengths.iter().sum::<u64>(), n);
    RunProfile::new(lengths)
}

/// `k` distinct values from `0..upper` (k <= upper), unsorted.
fn sample_distinct(rng: &mut ChaCha8Rng, upper: u64, k: usize) -> Vec<u64> {
    // Floyd's algorithm; k is small compared to upper in typical use but
    // correctness does not depend on that.
    use std::collections::HashSet;
    let mut seen = HashSet::with_capacity(k);
    let mut out = Vec::with_capacity(k);
    for j in (upper - k as u64)..upper {
        let t = rng.gen_range(0..=j);
        let v = if seen.contains(&t) { j } else { t };
        seen.insert(v);
        out.push(v);
    }
    out
}

/// Builds an integer array whose run decomposition is exactly `profile`.
///
/// Each run becomes a block of consecutive increasing values; every block
/// starts one below the previous block's last value, which breaks the
/// previous run there and keeps the new run nondecreasing. The seed only
/// shifts the overall value range. Fails if the profile has an interior
/// run of length 1 (no array decomposes that way).
pub fn realize_array(profile: &RunProfile, seed: u64) -> Result<Vec<i64>> {
    if !profile.is_realizable() {
        return Err(Error::Unrealizable);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: i64 = if seed == 0 { 0 } else { rng.gen_range(-1_000_000..1_000_000) };
    let mut out = Vec::with_capacity(profile.total() as usize);
    let mut start: i64 = base + 1;
    for &len in profile.lengths() {
        for k in 0..len as i64 {
            out.push(start + k);
        }
        start = start + len as i64 - 2; // one below this run's last value
    }
    Ok(out)
}

/// Result of a height-maximization search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchResult {
    pub profile: RunProfile,
    pub height: usize,
    /// True when the whole space was enumerated, false for beam search.
    pub exhaustive: bool,
}

/// Largest `n` for which the search enumerates every realizable profile.
pub const EXHAUSTIVE_LIMIT: u64 = 30;

/// Default beam width above the exhaustive limit.
pub const DEFAULT_BEAM_WIDTH: usize = 64;

/// Finds a realizable profile with at most `n_max` elements and at most
/// `rho_max` runs that maximizes the peak stack height under `variant`.
///
/// Up to [`EXHAUSTIVE_LIMIT`] elements every profile is tried, so the
/// result is a true optimum and serves as a brute-force oracle for the
/// height bounds. Beyond that a beam search (width
/// [`DEFAULT_BEAM_WIDTH`]) is used; it is a heuristic and claims no
/// optimality. Ties prefer the lexicographically smallest profile.
/// `n_max` must be at least 1.
pub fn max_height_search(n_max: u64, rho_max: usize, variant: PolicyVariant) -> SearchResult {
    assert!(n_max >= 1, "search needs a positive element budget");
    if n_max <= EXHAUSTIVE_LIMIT {
        exhaustive_search(n_max, rho_max, variant)
    } else {
        beam_search(n_max, rho_max, variant, DEFAULT_BEAM_WIDTH)
    }
}

fn push_and_measure(
    stack: &StackState,
    len: u64,
    variant: PolicyVariant,
) -> (StackState, usize) {
    let mut next = stack.clone();
    policy::push_run(&mut next, len, variant);
    // Peak height within this push is right after the push itself.
    let peak = stack.height() + 1;
    (next, peak)
}

fn exhaustive_search(n_max: u64, rho_max: usize, variant: PolicyVariant) -> SearchResult {
    struct Dfs {
        variant: PolicyVariant,
        n_max: u64,
        rho_max: usize,
        best_height: usize,
        best_profile: Vec<u64>,
    }
    impl Dfs {
        fn consider(&mut self, profile: &[u64], height: usize) {
            if height > self.best_height {
                self.best_height = height;
                self.best_profile = profile.to_vec();
            }
        }
        // Prefix parts are all >= 2; at each node the prefix itself is a
        // valid profile, a trailing 1 may close it, or a further part
        // >= 2 extends it. Visiting in that order scans profiles in
        // lexicographic order, so the first strict improvement is the
        // lexicographically smallest optimum.
        fn recurse(&mut self, stack: &StackState, profile: &mut Vec<u64>, used: u64, peak: usize) {
            if !profile.is_empty() {
                self.consider(profile, peak);
            }
            if profile.len() >= self.rho_max {
                return;
            }
            if used < self.n_max {
                let (_, p) = push_and_measure(stack, 1, self.variant);
                profile.push(1);
                self.consider(profile, peak.max(p));
                profile.pop();
            }
            for part in 2..=(self.n_max - used) {
                let (next, p) = push_and_measure(stack, part, self.variant);
                profile.push(part);
                self.recurse(&next, profile, used + part, peak.max(p));
                profile.pop();
            }
        }
    }

    let mut dfs = Dfs {
        variant,
        n_max,
        rho_max,
        best_height: 0,
        best_profile: Vec::new(),
    };
    let root = StackState::new();
    let mut profile = Vec::new();
    dfs.recurse(&root, &mut profile, 0, 0);
    debug_assert!(!dfs.best_profile.is_empty());
    SearchResult {
        profile: RunProfile::new(dfs.best_profile).expect("search yields valid profiles"),
        height: dfs.best_height,
        exhaustive: true,
    }
}

fn beam_search(
    n_max: u64,
    rho_max: usize,
    variant: PolicyVariant,
    width: usize,
) -> SearchResult {
    #[derive(Clone)]
    struct Candidate {
        stack: StackState,
        profile: Vec<u64>,
        used: u64,
        peak: usize,
    }

    let mut best_height = 1;
    let mut best_profile = vec![1u64];
    let mut beam = vec![Candidate {
        stack: StackState::new(),
        profile: Vec::new(),
        used: 0,
        peak: 0,
    }];

    while !beam.is_empty() {
        let mut next_gen: Vec<Candidate> = Vec::new();
        for cand in &beam {
            // Closing pushes: a trailing 1 is always allowed.
            if cand.used < n_max && !cand.profile.is_empty() {
                let (_, p) = push_and_measure(&cand.stack, 1, variant);
                let peak = cand.peak.max(p);
                if peak > best_height {
                    best_height = peak;
                    best_profile = cand.profile.clone();
                    best_profile.push(1);
                }
            }
            if cand.profile.len() >= rho_max {
                continue;
            }
            for part in 2..=(n_max - cand.used) {
                let (stack, p) = push_and_measure(&cand.stack, part, variant);
                let peak = cand.peak.max(p);
                let mut profile = cand.profile.clone();
                profile.push(part);
                if peak > best_height
                    || (peak == best_height && profile[..] < best_profile[..])
                {
                    best_height = peak;
                    best_profile = profile.clone();
                }
                next_gen.push(Candidate {
                    stack,
                    profile,
                    used: cand.used + part,
                    peak,
                });
            }
        }
        // Deterministic pruning: prefer greater current height, then a
        // taller standing stack, then smaller mass, then lexicographic.
        next_gen.sort_by(|a, b| {
            b.peak
                .cmp(&a.peak)
                .then(b.stack.height().cmp(&a.stack.height()))
                .then(a.used.cmp(&b.used))
                .then(a.profile.cmp(&b.profile))
        });
        next_gen.truncate(width);
        beam = next_gen;
    }

    SearchResult {
        profile: RunProfile::new(best_profile).expect("search yields valid profiles"),
        height: best_height,
        exhaustive: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{simulate_summary, PolicyVariant};

    #[test]
    fn rtim_base_and_first_unfoldings() {
        assert_eq!(rtim(5).unwrap().lengths(), &[5]);
        assert_eq!(rtim(7).unwrap().lengths(), &[3, 2, 2]);
        assert_eq!(rtim(8).unwrap().lengths(), &[4, 2, 2]);
        assert!(rtim(0).is_err());
    }

    #[test]
    fn rtim_masses_add_up() {
        for n in 1..=600 {
            assert_eq!(rtim(n).unwrap().total(), n, "rtim({n})");
        }
    }

    #[test]
    fn rtim_cost_base_and_first_values() {
        assert_eq!(rtim_cost(6).unwrap(), 0);
        assert_eq!(rtim_cost(7).unwrap(), 11);
        assert_eq!(rtim_cost(8).unwrap(), 12);
        assert!(rtim_cost(0).is_err());
    }

    #[test]
    fn rtim_cost_matches_simulation_on_small_n() {
        // The full range up to 4096 runs in the acceptance suite.
        let table = rtim_cost_table(256);
        for n in 1..=256u64 {
            let s = simulate_summary(&rtim(n).unwrap(), PolicyVariant::Patched, None);
            assert_eq!(s.main_loop_cost, table[n as usize], "n={n}");
            assert_eq!(s.final_main_stack, vec![n], "rtim({n}) must end as one run");
        }
    }

    #[test]
    fn fib_tower_shapes() {
        assert_eq!(fib_tower(1).lengths(), &[1]);
        assert_eq!(fib_tower(2).lengths(), &[2, 1]);
        assert_eq!(fib_tower(5).lengths(), &[12, 7, 4, 2, 1]);
        assert_eq!(fib_tower_sum(5), 26);
    }

    #[test]
    fn fib_tower_triggers_no_merges_and_hits_height() {
        for h in 1..=16 {
            let s = simulate_summary(&fib_tower(h), PolicyVariant::Patched, None);
            assert_eq!(s.main_loop_cost, 0, "h={h}");
            assert_eq!(s.max_height, h);
        }
    }

    #[test]
    fn paper_vectors_are_checked_constants() {
        let fig2 = paper_vector(PaperVectorId::Fig2);
        assert_eq!(fig2.lengths(), &[24, 18, 50, 28, 20, 6, 4, 8, 1]);
        assert_eq!(fig2.total(), 159);

        let fig5 = paper_vector(PaperVectorId::Fig5);
        assert_eq!(fig5.lengths(), &[109, 83, 25, 16, 8, 7, 26, 2, 27]);
        // Mass agrees with the final stack 27+28+56+83+109.
        assert_eq!(fig5.total(), 303);

        let witness = paper_vector(PaperVectorId::Prop81);
        assert_eq!(witness.run_count(), 97);
        assert_eq!(witness.total(), 1557);
    }

    #[test]
    fn random_profile_is_deterministic_and_well_formed() {
        let a = random_profile(1000, 40, 7).unwrap();
        let b = random_profile(1000, 40, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total(), 1000);
        assert_eq!(a.run_count(), 40);
        assert!(a.is_realizable());
        let c = random_profile(1000, 40, 8).unwrap();
        assert_ne!(a, c, "different seeds should differ");
    }

    #[test]
    fn random_profile_edge_cases() {
        assert_eq!(random_profile(10, 1, 0).unwrap().lengths(), &[10]);
        let minimal = random_profile(9, 5, 3).unwrap();
        assert_eq!(minimal.lengths(), &[2, 2, 2, 2, 1]);
        assert!(random_profile(8, 5, 0).is_err());
        assert!(random_profile(3, 0, 0).is_err());
        assert!(random_profile(2, 3, 0).is_err());
    }

    #[test]
    fn realize_array_round_trips() {
        use crate::runs::{decompose, profile_of};
        let p = RunProfile::new(vec![3, 2]).unwrap();
        let xs = realize_array(&p, 0).unwrap();
        let rt = profile_of(&decompose(&xs).unwrap()).unwrap();
        assert_eq!(rt, p);

        let single = RunProfile::new(vec![7]).unwrap();
        assert_eq!(realize_array(&single, 0).unwrap(), vec![1, 2, 3, 4, 5, 6, 7]);

        let fig2 = paper_vector(PaperVectorId::Fig2);
        let xs = realize_array(&fig2, 11).unwrap();
        assert_eq!(xs.len(), 159);
        let rt = profile_of(&decompose(&xs).unwrap()).unwrap();
        assert_eq!(rt, fig2);
    }

    #[test]
    fn realize_array_rejects_interior_singletons() {
        let p = RunProfile::new(vec![1, 2, 2]).unwrap();
        assert!(matches!(realize_array(&p, 0), Err(Error::Unrealizable)));
    }

    #[test]
    fn exhaustive_search_on_trivial_budget() {
        let r = max_height_search(1, 10, PolicyVariant::Patched);
        assert_eq!(r.profile.lengths(), &[1]);
        assert_eq!(r.height, 1);
        assert!(r.exhaustive);
    }

    #[test]
    fn exhaustive_search_matches_the_tower_at_26() {
        // fib_tower(5) has 26 elements and reaches height 5, so the
        // optimum over n <= 26 must be at least that.
        let r = max_height_search(26, 26, PolicyVariant::Patched);
        assert!(r.exhaustive);
        assert!(r.height >= 5, "found only {}", r.height);
        let check = simulate_summary(&r.profile, PolicyVariant::Patched, None);
        assert_eq!(check.max_height, r.height);
        assert!(r.profile.total() <= 26);
        assert!(r.profile.is_realizable());
    }

    #[test]
    fn beam_search_reports_heuristic_results() {
        let r = max_height_search(60, 60, PolicyVariant::Patched);
        assert!(!r.exhaustive);
        // fib_tower(7) sums to 73 > 60, fib_tower(6) to 46 <= 60.
        assert!(r.height >= 6, "beam found only {}", r.height);
        let check = simulate_summary(&r.profile, PolicyVariant::Patched, None);
        assert_eq!(check.max_height, r.height);
        assert!(r.profile.total() <= 60);
    }
}
