//! The concrete stable sort: run detection over a real buffer, policy
//! driven merging of adjacent segments, and exact accounting of key
//! comparisons, merge cost and element moves.
//!
//! The run stack mirrors the length-only simulator event for event; the
//! sorter adds nothing to the merge decisions, it only carries the array
//! segments along.

use crate::policy::{self, EventKind, MergeCase, PolicyVariant, StackState};
use crate::runs::Direction;
use crate::{Error, Result};

/// Work counters of one sort call.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SortMetrics {
    /// All key comparisons: run detection plus merging.
    pub comparisons: u64,
    /// Comparisons spent detecting runs (n - 1 on presorted input).
    pub run_detect_comparisons: u64,
    /// Comparisons spent inside merges; at most `merge_cost` minus the
    /// number of merges.
    pub merge_comparisons: u64,
    /// Sum of merged-run lengths over all merges, forced ones included;
    /// equals the simulator's total cost on this input's profile.
    pub merge_cost: u64,
    pub main_loop_cost: u64,
    pub force_cost: u64,
    pub max_height: usize,
    /// Element writes: merge buffer copies, merge placements and the
    /// reversal of decreasing runs.
    pub moved: u64,
}

/// Stable merge of the adjacent sorted slices `v[lo..mid]` and
/// `v[mid..hi]`, buffering only the smaller side. Ties go left. Returns
/// the number of key comparisons, at most `hi - lo - 1`.
pub fn merge_adjacent<T: Ord + Clone>(
    v: &mut [T],
    lo: usize,
    mid: usize,
    hi: usize,
) -> Result<u64> {
    let mut comparisons = 0;
    let mut moved = 0;
    merge_counted(v, lo, mid, hi, &mut comparisons, &mut moved)?;
    Ok(comparisons)
}

fn merge_counted<T: Ord + Clone>(
    v: &mut [T],
    lo: usize,
    mid: usize,
    hi: usize,
    comparisons: &mut u64,
    moved: &mut u64,
) -> Result<()> {
    if lo > mid || mid > hi || hi > v.len() {
        return Err(Error::MalformedBounds);
    }
    if lo == mid || mid == hi {
        return Ok(()); // one side empty, nothing to do
    }
    let left_len = mid - lo;
    let right_len = hi - mid;
    if left_len <= right_len {
        // Copy the left run out, merge forward.
        let buf: Vec<T> = v[lo..mid].to_vec();
        *moved += left_len as u64;
        let (mut i, mut j, mut k) = (0, mid, lo);
        while i < buf.len() && j < hi {
            *comparisons += 1;
            if v[j] < buf[i] {
                v[k] = v[j].clone();
                j += 1;
            } else {
                v[k] = buf[i].clone();
                i += 1;
            }
            *moved += 1;
            k += 1;
        }
        while i < buf.len() {
            v[k] = buf[i].clone();
            *moved += 1;
            i += 1;
            k += 1;
        }
        // Any leftover right part is already in place.
    } else {
        // Copy the right run out, merge backward; ties place the right
        // element later, keeping stability.
        let buf: Vec<T> = v[mid..hi].to_vec();
        *moved += right_len as u64;
        let (mut i, mut j, mut k) = (mid, buf.len(), hi);
        while i > lo && j > 0 {
            *comparisons += 1;
            k -= 1;
            if buf[j - 1] < v[i - 1] {
                v[k] = v[i - 1].clone();
                i -= 1;
            } else {
                v[k] = buf[j - 1].clone();
                j -= 1;
            }
            *moved += 1;
        }
        while j > 0 {
            k -= 1;
            j -= 1;
            v[k] = buf[j].clone();
            *moved += 1;
        }
    }
    Ok(())
}

/// Stable adaptive mergesort under the given merge policy. Returns the
/// work counters; the main-loop events (and forced collapse) match the
/// simulator on this input's run profile exactly.
pub fn timsort_lite<T: Ord + Clone>(v: &mut [T], variant: PolicyVariant) -> SortMetrics {
    timsort_lite_traced(v, variant).0
}

/// Like [`timsort_lite`], additionally returning the event sequence
/// (kind, cost) for comparison against the simulator.
pub fn timsort_lite_traced<T: Ord + Clone>(
    v: &mut [T],
    variant: PolicyVariant,
) -> (SortMetrics, Vec<(EventKind, u64)>) {
    let mut m = SortMetrics::default();
    let mut events = Vec::new();
    if v.is_empty() {
        return (m, events);
    }

    let mut stack = StackState::new();
    let mut segs: Vec<(usize, usize)> = Vec::new(); // (offset, len), bottom to top
    let mut pos = 0;
    while pos < v.len() {
        let (len, direction) = next_run(v, pos, &mut m.run_detect_comparisons);
        if direction == Direction::Decreasing {
            v[pos..pos + len].reverse();
            m.moved += len as u64;
        }
        segs.push((pos, len));
        stack.push(len as u64);
        events.push((EventKind::Push, 0));
        m.max_height = m.max_height.max(stack.height());
        while let Some(case) = policy::select_case(&stack, variant) {
            let cost =
                merge_stack_top(v, &mut stack, &mut segs, Some(case), &mut m).expect("in-bounds");
            m.main_loop_cost += cost;
            events.push((case.into(), cost));
        }
        pos += len;
    }
    while stack.height() > 1 {
        let cost = merge_stack_top(v, &mut stack, &mut segs, None, &mut m).expect("in-bounds");
        m.force_cost += cost;
        events.push((EventKind::Force, cost));
    }
    m.merge_cost = m.main_loop_cost + m.force_cost;
    m.comparisons = m.run_detect_comparisons + m.merge_comparisons;
    (m, events)
}

/// Finds the maximal run starting at `pos`, counting comparisons.
fn next_run<T: Ord>(v: &[T], pos: usize, comparisons: &mut u64) -> (usize, Direction) {
    let n = v.len();
    if pos + 1 == n {
        return (1, Direction::NonDecreasing);
    }
    let mut end = pos + 1;
    *comparisons += 1;
    if v[end] < v[pos] {
        while end + 1 < n {
            *comparisons += 1;
            if v[end + 1] < v[end] {
                end += 1;
            } else {
                break;
            }
        }
        (end + 1 - pos, Direction::Decreasing)
    } else {
        while end + 1 < n {
            *comparisons += 1;
            if v[end + 1] >= v[end] {
                end += 1;
            } else {
                break;
            }
        }
        (end + 1 - pos, Direction::NonDecreasing)
    }
}

/// Applies one merge (a policy case, or a forced top-pair merge when
/// `case` is `None`) to both the length stack and the array segments,
/// returning the cost.
fn merge_stack_top<T: Ord + Clone>(
    v: &mut [T],
    stack: &mut StackState,
    segs: &mut Vec<(usize, usize)>,
    case: Option<MergeCase>,
    m: &mut SortMetrics,
) -> Result<u64> {
    let h = segs.len();
    let (left_idx, right_idx) = match case {
        Some(MergeCase::M2) => (h - 3, h - 2), // R3 and R2, top stays
        _ => (h - 2, h - 1),                   // R2 and R1
    };
    let (lo, left_len) = segs[left_idx];
    let (mid, right_len) = segs[right_idx];
    debug_assert_eq!(lo + left_len, mid, "stack runs must be adjacent");
    let hi = mid + right_len;
    merge_counted(v, lo, mid, hi, &mut m.merge_comparisons, &mut m.moved)?;
    segs[left_idx] = (lo, left_len + right_len);
    segs.remove(right_idx);
    let cost = match case {
        Some(c) => policy::apply_case(stack, c)?,
        None => stack.merge_top_pair(), // forced collapse has no guard
    };
    debug_assert_eq!(cost as usize, left_len + right_len);
    Ok(cost)
}
