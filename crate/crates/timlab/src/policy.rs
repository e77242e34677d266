//! The merge-collapse stack machine on run lengths.
//!
//! Runs are pushed onto a stack; after every push the policy inspects the
//! topmost lengths and keeps merging until no rule fires. Stacks are
//! indexed from the top: `r_1` is the topmost run, `r_h` the bottom one.
//! The four merge cases, checked in this order, are
//!
//! - `#2`: `h >= 3` and `r_1 > r_3` — merge the 2nd and 3rd runs,
//! - `#3`: `h >= 2` and `r_1 >= r_2` — merge the two topmost runs,
//! - `#4`: `h >= 3` and `r_1 + r_2 >= r_3` — merge the two topmost runs,
//! - `#5`: `h >= 4` and `r_2 + r_3 >= r_4` — merge the two topmost runs.
//!
//! Case `#5` is the condition added in Python 3.4.4 to repair the stack
//! invariant; the Java implementation still runs without it. The two rule
//! sets are selected by [`PolicyVariant`].
//!
//! After the last push, a forced collapse merges the two topmost runs
//! until a single run remains. Merging runs of lengths `r` and `r'` costs
//! `r + r'` units (the length of the resulting run); this is the only
//! cost measure used here.

use serde::{Deserialize, Serialize};

use crate::runs::RunProfile;
use crate::{Error, Result};

/// Which merge-collapse rule set drives the simulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyVariant {
    /// Python 3.4.4+ rules, with merge case `#5`.
    Patched,
    /// The original rules still used by Java, without case `#5`.
    Unpatched,
}

impl std::fmt::Display for PolicyVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PolicyVariant::Patched => write!(f, "patched"),
            PolicyVariant::Unpatched => write!(f, "unpatched"),
        }
    }
}

impl std::str::FromStr for PolicyVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "patched" => Ok(PolicyVariant::Patched),
            "unpatched" => Ok(PolicyVariant::Unpatched),
            other => Err(Error::Parse(format!("unknown variant {other:?}"))),
        }
    }
}

/// The merge case selected by the collapse rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MergeCase {
    M2,
    M3,
    M4,
    M5,
}

/// One step of a simulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    /// A run was pushed (cost 0).
    Push,
    Merge2,
    Merge3,
    Merge4,
    Merge5,
    /// A merge of the final collapse phase.
    Force,
    /// A push exceeded the emulated stack capacity (cost 0); the
    /// simulation keeps going on an unbounded stack.
    Overflow,
}

impl EventKind {
    pub fn is_merge(self) -> bool {
        matches!(
            self,
            EventKind::Merge2 | EventKind::Merge3 | EventKind::Merge4 | EventKind::Merge5
        )
    }

    pub fn merge_case(self) -> Option<MergeCase> {
        match self {
            EventKind::Merge2 => Some(MergeCase::M2),
            EventKind::Merge3 => Some(MergeCase::M3),
            EventKind::Merge4 => Some(MergeCase::M4),
            EventKind::Merge5 => Some(MergeCase::M5),
            _ => None,
        }
    }
}

impl From<MergeCase> for EventKind {
    fn from(c: MergeCase) -> Self {
        match c {
            MergeCase::M2 => EventKind::Merge2,
            MergeCase::M3 => EventKind::Merge3,
            MergeCase::M4 => EventKind::Merge4,
            MergeCase::M5 => EventKind::Merge5,
        }
    }
}

/// The stack of run lengths. `run_len(1)` is the top, `run_len(height())`
/// the bottom. An optional capacity emulates a fixed run-stack
/// allocation; exceeding it is recorded, never fatal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StackState {
    // Stored bottom to top, so pushes and pops stay O(1).
    lengths: Vec<u64>,
    capacity: Option<usize>,
    overflowed: bool,
}

impl StackState {
    pub fn new() -> Self {
        StackState::with_capacity(None)
    }

    pub fn with_capacity(capacity: Option<usize>) -> Self {
        StackState {
            lengths: Vec::new(),
            capacity,
            overflowed: false,
        }
    }

    /// Builds a stack from lengths listed top to bottom, mirroring how
    /// stacks are written everywhere in this crate.
    pub fn from_top_down(lengths: &[u64]) -> Self {
        StackState {
            lengths: lengths.iter().rev().copied().collect(),
            capacity: None,
            overflowed: false,
        }
    }

    pub fn height(&self) -> usize {
        self.lengths.len()
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    /// True once a push has ever exceeded the capacity.
    pub fn overflowed(&self) -> bool {
        self.overflowed
    }

    /// Length of the i-th run from the top, 1-based.
    pub fn run_len(&self, i: usize) -> u64 {
        assert!(i >= 1 && i <= self.height(), "run index {i} out of range");
        self.lengths[self.height() - i]
    }

    /// Lengths from the top of the stack to the bottom.
    pub fn snapshot(&self) -> Vec<u64> {
        self.lengths.iter().rev().copied().collect()
    }

    pub(crate) fn push(&mut self, len: u64) -> bool {
        self.lengths.push(len);
        let over = self.capacity.is_some_and(|cap| self.lengths.len() > cap);
        if over {
            self.overflowed = true;
        }
        over
    }

    pub(crate) fn merge_top_pair(&mut self) -> u64 {
        let r1 = self.lengths.pop().expect("merge on empty stack");
        let r2 = self.lengths.pop().expect("merge needs two runs");
        let merged = r1 + r2;
        self.lengths.push(merged);
        merged
    }

    fn merge_second_pair(&mut self) -> u64 {
        let r1 = self.lengths.pop().expect("merge on empty stack");
        let merged = self.merge_top_pair();
        self.lengths.push(r1);
        merged
    }
}

impl Default for StackState {
    fn default() -> Self {
        StackState::new()
    }
}

fn case_for(r: impl Fn(usize) -> u64, h: usize, variant: PolicyVariant) -> Option<MergeCase> {
    if h >= 3 && r(1) > r(3) {
        return Some(MergeCase::M2);
    }
    if h >= 2 && r(1) >= r(2) {
        return Some(MergeCase::M3);
    }
    if h >= 3 && r(1) + r(2) >= r(3) {
        return Some(MergeCase::M4);
    }
    if variant == PolicyVariant::Patched && h >= 4 && r(2) + r(3) >= r(4) {
        return Some(MergeCase::M5);
    }
    None
}

/// Picks the first merge case whose guard holds, or `None` if the stack
/// is stable (the next action would be a push).
pub fn select_case(stack: &StackState, variant: PolicyVariant) -> Option<MergeCase> {
    case_for(|i| stack.run_len(i), stack.height(), variant)
}

/// Same rule cascade, applied to a snapshot listed top to bottom.
pub fn select_case_snapshot(top_down: &[u64], variant: PolicyVariant) -> Option<MergeCase> {
    case_for(|i| top_down[i - 1], top_down.len(), variant)
}

/// Applies a merge case and returns its cost (the merged run's length).
/// `#2` merges the 2nd and 3rd runs, the other cases the two topmost;
/// the height drops by one. Fails if the case's guard does not hold.
pub fn apply_case(stack: &mut StackState, case: MergeCase) -> Result<u64> {
    let h = stack.height();
    let guard = match case {
        MergeCase::M2 => h >= 3 && stack.run_len(1) > stack.run_len(3),
        MergeCase::M3 => h >= 2 && stack.run_len(1) >= stack.run_len(2),
        MergeCase::M4 => h >= 3 && stack.run_len(1) + stack.run_len(2) >= stack.run_len(3),
        MergeCase::M5 => h >= 4 && stack.run_len(2) + stack.run_len(3) >= stack.run_len(4),
    };
    if !guard {
        return Err(Error::IllegalMerge);
    }
    Ok(match case {
        MergeCase::M2 => stack.merge_second_pair(),
        _ => stack.merge_top_pair(),
    })
}

/// Receives every simulation step as it happens, together with the stack
/// right after the step. Lets checkers stream over large corpora without
/// materializing traces.
pub trait Observer {
    fn on_event(&mut self, kind: EventKind, cost: u64, stack: &StackState);
}

/// An observer that ignores everything (aggregate-only simulation).
pub struct NoopObserver;

impl Observer for NoopObserver {
    fn on_event(&mut self, _: EventKind, _: u64, _: &StackState) {}
}

fn push_run_with(
    stack: &mut StackState,
    len: u64,
    variant: PolicyVariant,
    obs: &mut dyn Observer,
) -> u64 {
    let over = stack.push(len);
    obs.on_event(EventKind::Push, 0, stack);
    if over {
        obs.on_event(EventKind::Overflow, 0, stack);
    }
    let mut cost = 0;
    while let Some(case) = select_case(stack, variant) {
        let c = apply_case(stack, case).expect("selected case must apply");
        cost += c;
        obs.on_event(case.into(), c, stack);
    }
    cost
}

fn force_collapse_with(stack: &mut StackState, obs: &mut dyn Observer) -> u64 {
    let mut cost = 0;
    while stack.height() > 1 {
        let c = stack.merge_top_pair();
        cost += c;
        obs.on_event(EventKind::Force, c, stack);
    }
    cost
}

/// Pushes one run and collapses until the stack is stable, returning the
/// emitted events (a push, possibly an overflow marker, then merges).
pub fn push_run(stack: &mut StackState, len: u64, variant: PolicyVariant) -> Vec<TraceEvent> {
    let mut collector = EventCollector::default();
    push_run_with(stack, len, variant, &mut collector);
    collector.events
}

/// Merges the two topmost runs until at most one remains.
pub fn force_collapse(stack: &mut StackState) -> Vec<TraceEvent> {
    let mut collector = EventCollector::default();
    force_collapse_with(stack, &mut collector);
    collector.events
}

/// Aggregates of a simulation, kept small enough for large benchmarks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimSummary {
    pub n: u64,
    pub rho: usize,
    pub variant: PolicyVariant,
    pub main_loop_cost: u64,
    pub force_cost: u64,
    pub max_height: usize,
    /// Number of pushes that exceeded the capacity, if one was set.
    pub overflows: usize,
    /// Stack at the end of the main loop, top to bottom.
    pub final_main_stack: Vec<u64>,
}

impl SimSummary {
    pub fn total_cost(&self) -> u64 {
        self.main_loop_cost + self.force_cost
    }
}

/// Runs the full algorithm on a profile, feeding every event to `obs`.
pub fn simulate_with(
    profile: &RunProfile,
    variant: PolicyVariant,
    capacity: Option<usize>,
    obs: &mut dyn Observer,
) -> SimSummary {
    struct Stats<'a> {
        inner: &'a mut dyn Observer,
        max_height: usize,
        overflows: usize,
    }
    impl Observer for Stats<'_> {
        fn on_event(&mut self, kind: EventKind, cost: u64, stack: &StackState) {
            if stack.height() > self.max_height {
                self.max_height = stack.height();
            }
            if kind == EventKind::Overflow {
                self.overflows += 1;
            }
            self.inner.on_event(kind, cost, stack);
        }
    }

    let mut stack = StackState::with_capacity(capacity);
    let mut stats = Stats {
        inner: obs,
        max_height: 0,
        overflows: 0,
    };
    let mut main_loop_cost = 0;
    for &len in profile.lengths() {
        main_loop_cost += push_run_with(&mut stack, len, variant, &mut stats);
    }
    let final_main_stack = stack.snapshot();
    let force_cost = force_collapse_with(&mut stack, &mut stats);
    SimSummary {
        n: profile.total(),
        rho: profile.run_count(),
        variant,
        main_loop_cost,
        force_cost,
        max_height: stats.max_height,
        overflows: stats.overflows,
        final_main_stack,
    }
}

/// Full simulation without trace storage; only aggregates are kept.
pub fn simulate_summary(
    profile: &RunProfile,
    variant: PolicyVariant,
    capacity: Option<usize>,
) -> SimSummary {
    simulate_with(profile, variant, capacity, &mut NoopObserver)
}

/// One recorded step with the stack snapshot (top to bottom) after it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    pub kind: EventKind,
    /// Merge cost: the merged run's length for merges, 0 otherwise.
    pub cost: u64,
    pub stack: Vec<u64>,
}

#[derive(Default)]
struct EventCollector {
    events: Vec<TraceEvent>,
}

impl Observer for EventCollector {
    fn on_event(&mut self, kind: EventKind, cost: u64, stack: &StackState) {
        self.events.push(TraceEvent {
            kind,
            cost,
            stack: stack.snapshot(),
        });
    }
}

/// A complete recorded simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub variant: PolicyVariant,
    pub profile: RunProfile,
    pub capacity: Option<usize>,
    pub events: Vec<TraceEvent>,
    pub summary: SimSummary,
}

impl Trace {
    /// Events of the main loop (everything before the forced collapse).
    pub fn main_events(&self) -> &[TraceEvent] {
        let end = self
            .events
            .iter()
            .position(|e| e.kind == EventKind::Force)
            .unwrap_or(self.events.len());
        &self.events[..end]
    }

    /// Events of the forced final collapse.
    pub fn force_events(&self) -> &[TraceEvent] {
        &self.events[self.main_events().len()..]
    }

    pub fn main_loop_cost(&self) -> u64 {
        self.summary.main_loop_cost
    }

    pub fn force_cost(&self) -> u64 {
        self.summary.force_cost
    }

    pub fn total_cost(&self) -> u64 {
        self.summary.total_cost()
    }

    pub fn max_height(&self) -> usize {
        self.summary.max_height
    }

    /// Stack at the end of the main loop, top to bottom.
    pub fn final_main_stack(&self) -> &[u64] {
        &self.summary.final_main_stack
    }

    /// The main-loop merges as (which pair, cost), the projection under
    /// which the literal rule cascade must agree (see [`mod@reference`]).
    pub fn merge_actions(&self) -> Vec<(reference::MergeAction, u64)> {
        self.main_events()
            .iter()
            .filter_map(|e| {
                e.kind.merge_case().map(|c| {
                    let action = match c {
                        MergeCase::M2 => reference::MergeAction::SecondPair,
                        _ => reference::MergeAction::TopPair,
                    };
                    (action, e.cost)
                })
            })
            .collect()
    }
}

/// Runs the full algorithm on a profile and records every event.
pub fn simulate(profile: &RunProfile, variant: PolicyVariant, capacity: Option<usize>) -> Trace {
    let mut collector = EventCollector::default();
    let summary = simulate_with(profile, variant, capacity, &mut collector);
    Trace {
        variant,
        profile: profile.clone(),
        capacity,
        events: collector.events,
        summary,
    }
}

/// A literal transcription of the original `merge_collapse` procedure,
/// kept deliberately separate from [`select_case`]: the two formulations
/// must produce identical merge sequences on every profile, and this one
/// serves as the oracle for that equivalence.
pub mod reference {
    use super::{PolicyVariant, StackState};
    use crate::runs::RunProfile;

    /// Which adjacent pair a collapse step merges.
    #[derive(Clone, Copy, Debug, PartialEq, Eq)]
    pub enum MergeAction {
        /// Merge the two topmost runs (R1, R2).
        TopPair,
        /// Merge the 2nd and 3rd runs (R2, R3), leaving the top in place.
        SecondPair,
    }

    /// One iteration of the original collapse loop: the condition layout
    /// follows the reference pseudo-code line by line. Returns the pair
    /// to merge, or `None` when the loop would break.
    pub fn select_action(stack: &StackState, variant: PolicyVariant) -> Option<MergeAction> {
        let h = stack.height();
        if h <= 1 {
            return None;
        }
        let r = |i| stack.run_len(i);
        let n = h - 2; // runs below the top two
        let first = n > 0 && r(3) <= r(2) + r(1);
        let second = variant == PolicyVariant::Patched && n > 1 && r(4) <= r(3) + r(2);
        if first || second {
            if r(3) < r(1) {
                Some(MergeAction::SecondPair)
            } else {
                Some(MergeAction::TopPair)
            }
        } else if r(2) <= r(1) {
            Some(MergeAction::TopPair)
        } else {
            None
        }
    }

    /// Drives the main loop with the literal cascade and returns the
    /// merge sequence as (pair, cost). The stack mutations are spelled
    /// out here rather than shared with the translated implementation.
    pub fn merge_sequence(profile: &RunProfile, variant: PolicyVariant) -> Vec<(MergeAction, u64)> {
        let mut state = StackState::new();
        let mut out = Vec::new();
        for &len in profile.lengths() {
            state.lengths.push(len);
            loop {
                let h = state.lengths.len();
                match select_action(&state, variant) {
                    None => break,
                    Some(MergeAction::TopPair) => {
                        let r1 = state.lengths.pop().unwrap();
                        let r2 = state.lengths.pop().unwrap();
                        state.lengths.push(r1 + r2);
                        out.push((MergeAction::TopPair, r1 + r2));
                        debug_assert_eq!(state.lengths.len(), h - 1);
                    }
                    Some(MergeAction::SecondPair) => {
                        let r1 = state.lengths.pop().unwrap();
                        let r2 = state.lengths.pop().unwrap();
                        let r3 = state.lengths.pop().unwrap();
                        state.lengths.push(r2 + r3);
                        state.lengths.push(r1);
                        out.push((MergeAction::SecondPair, r2 + r3));
                        debug_assert_eq!(state.lengths.len(), h - 1);
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runs::RunProfile;

    fn profile(lengths: &[u64]) -> RunProfile {
        RunProfile::new(lengths.to_vec()).unwrap()
    }

    fn stack(top_down: &[u64]) -> StackState {
        StackState::from_top_down(top_down)
    }

    #[test]
    fn select_case_picks_case2_for_either_variant() {
        let s = stack(&[50, 18, 24]);
        assert_eq!(select_case(&s, PolicyVariant::Patched), Some(MergeCase::M2));
        assert_eq!(select_case(&s, PolicyVariant::Unpatched), Some(MergeCase::M2));
    }

    #[test]
    fn select_case_case5_only_when_patched() {
        let s = stack(&[8, 10, 20, 28, 92]);
        assert_eq!(select_case(&s, PolicyVariant::Patched), Some(MergeCase::M5));
        assert_eq!(select_case(&s, PolicyVariant::Unpatched), None);
    }

    #[test]
    fn select_case_none_when_stable() {
        let s = stack(&[4, 6, 20, 28, 92]);
        assert_eq!(select_case(&s, PolicyVariant::Patched), None);
    }

    #[test]
    fn apply_case_moves_lengths_and_reports_cost() {
        let mut s = stack(&[50, 18, 24]);
        assert_eq!(apply_case(&mut s, MergeCase::M2).unwrap(), 42);
        assert_eq!(s.snapshot(), vec![50, 42]);

        assert_eq!(apply_case(&mut s, MergeCase::M3).unwrap(), 92);
        assert_eq!(s.snapshot(), vec![92]);

        let mut s = stack(&[18, 20, 28, 92]);
        assert_eq!(apply_case(&mut s, MergeCase::M4).unwrap(), 38);
        assert_eq!(s.snapshot(), vec![38, 28, 92]);
    }

    #[test]
    fn apply_case_rejects_broken_guards() {
        let mut s = stack(&[4, 6, 20]);
        assert!(matches!(apply_case(&mut s, MergeCase::M2), Err(Error::IllegalMerge)));
        assert!(matches!(apply_case(&mut s, MergeCase::M3), Err(Error::IllegalMerge)));
        let mut tiny = stack(&[7]);
        assert!(matches!(apply_case(&mut tiny, MergeCase::M3), Err(Error::IllegalMerge)));
    }

    #[test]
    fn push_run_cascades_until_stable() {
        let mut s = stack(&[4, 6, 20, 28, 92]);
        let events = push_run(&mut s, 8, PolicyVariant::Patched);
        let kinds: Vec<EventKind> = events.iter().map(|e| e.kind).collect();
        assert_eq!(
            kinds,
            vec![
                EventKind::Push,
                EventKind::Merge2,
                EventKind::Merge5,
                EventKind::Merge4,
                EventKind::Merge3
            ]
        );
        assert_eq!(s.snapshot(), vec![66, 92]);
    }

    #[test]
    fn push_run_unpatched_stops_after_one_merge() {
        let mut s = stack(&[4, 6, 20, 28, 92]);
        let events = push_run(&mut s, 8, PolicyVariant::Unpatched);
        let kinds: Vec<EventKind> = events.iter().map(|e| e.kind).collect();
        assert_eq!(kinds, vec![EventKind::Push, EventKind::Merge2]);
        assert_eq!(s.snapshot(), vec![8, 10, 20, 28, 92]);
    }

    #[test]
    fn push_onto_empty_stack() {
        let mut s = StackState::new();
        let events = push_run(&mut s, 24, PolicyVariant::Patched);
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].kind, EventKind::Push);
        assert_eq!(s.snapshot(), vec![24]);
    }

    #[test]
    fn force_collapse_pops_pairs() {
        let mut s = stack(&[1, 66, 92]);
        let events = force_collapse(&mut s);
        let costs: Vec<u64> = events.iter().map(|e| e.cost).collect();
        assert_eq!(costs, vec![67, 159]);
        assert_eq!(s.snapshot(), vec![159]);

        let mut single = stack(&[42]);
        assert!(force_collapse(&mut single).is_empty());

        let mut s = stack(&[2, 3, 10]);
        let costs: Vec<u64> = force_collapse(&mut s).iter().map(|e| e.cost).collect();
        assert_eq!(costs, vec![5, 15]);
    }

    // The nine-run demonstration profile whose stack states are worked
    // through in full in the crate examples.
    const DEMO: [u64; 9] = [24, 18, 50, 28, 20, 6, 4, 8, 1];

    #[test]
    fn simulate_demo_profile_patched_golden() {
        let trace = simulate(&profile(&DEMO), PolicyVariant::Patched, None);
        let main: Vec<(EventKind, u64, Vec<u64>)> = trace
            .main_events()
            .iter()
            .map(|e| (e.kind, e.cost, e.stack.clone()))
            .collect();
        use EventKind::*;
        let expected: Vec<(EventKind, u64, Vec<u64>)> = vec![
            (Push, 0, vec![24]),
            (Push, 0, vec![18, 24]),
            (Push, 0, vec![50, 18, 24]),
            (Merge2, 42, vec![50, 42]),
            (Merge3, 92, vec![92]),
            (Push, 0, vec![28, 92]),
            (Push, 0, vec![20, 28, 92]),
            (Push, 0, vec![6, 20, 28, 92]),
            (Push, 0, vec![4, 6, 20, 28, 92]),
            (Push, 0, vec![8, 4, 6, 20, 28, 92]),
            (Merge2, 10, vec![8, 10, 20, 28, 92]),
            (Merge5, 18, vec![18, 20, 28, 92]),
            (Merge4, 38, vec![38, 28, 92]),
            (Merge3, 66, vec![66, 92]),
            (Push, 0, vec![1, 66, 92]),
        ];
        assert_eq!(main, expected);
        assert_eq!(trace.main_loop_cost(), 266);
        assert_eq!(trace.force_cost(), 226);
        assert_eq!(trace.max_height(), 6);
        assert_eq!(trace.final_main_stack(), &[1, 66, 92]);
    }

    #[test]
    fn simulate_demo_profile_unpatched_leaves_invariant_broken() {
        let trace = simulate(&profile(&DEMO), PolicyVariant::Unpatched, None);
        assert_eq!(trace.final_main_stack(), &[1, 8, 10, 20, 28, 92]);
        assert_eq!(trace.main_loop_cost(), 144);
    }

    #[test]
    fn simulate_double_violation_profile() {
        let p = profile(&[109, 83, 25, 16, 8, 7, 26, 2, 27]);
        let trace = simulate(&p, PolicyVariant::Unpatched, None);
        assert_eq!(trace.final_main_stack(), &[27, 28, 56, 83, 109]);
        assert_eq!(trace.main_loop_cost(), 130);
        assert_eq!(trace.max_height(), 7);
    }

    #[test]
    fn simulate_single_run_profile() {
        let trace = simulate(&profile(&[42]), PolicyVariant::Patched, None);
        assert_eq!(trace.events.len(), 1);
        assert_eq!(trace.events[0].kind, EventKind::Push);
        assert_eq!(trace.total_cost(), 0);
        assert_eq!(trace.final_main_stack(), &[42]);
    }

    #[test]
    fn traces_conserve_mass_and_collapse_to_one_run() {
        let p = profile(&DEMO);
        for variant in [PolicyVariant::Patched, PolicyVariant::Unpatched] {
            let trace = simulate(&p, variant, None);
            assert_eq!(trace.events[0].kind, EventKind::Push);
            let mut pushed = 0;
            for e in &trace.events {
                if e.kind == EventKind::Push {
                    pushed += e.stack[0];
                }
                assert_eq!(e.stack.iter().sum::<u64>(), pushed);
            }
            assert_eq!(trace.events.last().unwrap().stack.len(), 1);
        }
    }

    #[test]
    fn capacity_overflow_is_reported_and_survivable() {
        let p = profile(&[16, 8, 4, 2, 1]);
        let trace = simulate(&p, PolicyVariant::Patched, Some(3));
        let overflows: Vec<&TraceEvent> = trace
            .events
            .iter()
            .filter(|e| e.kind == EventKind::Overflow)
            .collect();
        assert_eq!(overflows.len(), 2); // pushes of 2 and 1
        assert_eq!(overflows[0].stack.len(), 4);
        assert_eq!(trace.summary.overflows, 2);
        // The run keeps going and still collapses to one run of n.
        assert_eq!(trace.events.last().unwrap().stack, vec![31]);
    }

    #[test]
    fn reference_cascade_agrees_on_the_demo_profiles() {
        for lengths in [&DEMO[..], &[109, 83, 25, 16, 8, 7, 26, 2, 27][..]] {
            let p = profile(lengths);
            for variant in [PolicyVariant::Patched, PolicyVariant::Unpatched] {
                let trace = simulate(&p, variant, None);
                assert_eq!(trace.merge_actions(), reference::merge_sequence(&p, variant));
            }
        }
    }

    #[test]
    fn reference_single_step_examples() {
        let s = stack(&[50, 18, 24]);
        // 24 <= 18 + 50 and 24 < 50: the second pair merges.
        assert_eq!(
            reference::select_action(&s, PolicyVariant::Unpatched),
            Some(reference::MergeAction::SecondPair)
        );
        let stable = stack(&[4, 6, 20, 28, 92]);
        assert_eq!(reference::select_action(&stable, PolicyVariant::Patched), None);
        assert_eq!(reference::select_action(&stack(&[7]), PolicyVariant::Patched), None);
    }

    #[test]
    fn merge5_never_fires_unpatched() {
        // Exercised over a spread of profiles in the acceptance suite;
        // here a profile built to tempt case #5.
        let p = profile(&[92, 28, 20, 10, 8]);
        let trace = simulate(&p, PolicyVariant::Unpatched, None);
        assert!(trace.events.iter().all(|e| e.kind != EventKind::Merge5));
    }
}
