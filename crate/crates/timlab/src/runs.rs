//! Run decomposition: the greedy split of an array into maximal monotonic
//! runs, exactly as the reference sort computes it.
//!
//! The first two elements of a run decide its direction; a nondecreasing
//! run then extends while `a[k] <= a[k+1]`, a decreasing run while
//! `a[k] > a[k+1]` (strict, so reversing it in place keeps the sort
//! stable). A single trailing element forms a nondecreasing run of
//! length 1.

use crate::{Error, Result};

/// Direction of a monotonic run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    NonDecreasing,
    /// Strictly decreasing; reversal in place is stable.
    Decreasing,
}

/// A maximal monotonic segment of a concrete array.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Run {
    /// 0-based start index.
    pub offset: usize,
    /// Number of elements, always >= 1.
    pub length: usize,
    pub direction: Direction,
}

impl Run {
    pub fn end(&self) -> usize {
        self.offset + self.length
    }
}

/// A sequence of run lengths in push order (left to right in the array).
///
/// This is the sole input of the policy simulator: the merge dynamics
/// depend only on lengths, never on element values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunProfile {
    lengths: Vec<u64>,
}

impl RunProfile {
    /// Builds a profile, rejecting empty sequences and zero lengths.
    pub fn new(lengths: Vec<u64>) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::InvalidProfile("no runs".into()));
        }
        if lengths.contains(&0) {
            return Err(Error::InvalidProfile("run length 0".into()));
        }
        Ok(RunProfile { lengths })
    }

    pub fn lengths(&self) -> &[u64] {
        &self.lengths
    }

    /// Total number of elements `n`.
    pub fn total(&self) -> u64 {
        self.lengths.iter().sum()
    }

    /// Number of runs, usually written rho.
    pub fn run_count(&self) -> usize {
        self.lengths.len()
    }

    /// True iff some array decomposes into exactly these lengths: every
    /// run except the last must have length >= 2. A length-1 run in the
    /// middle is impossible because the greedy rule would have absorbed
    /// its element into a longer (decreasing) run.
    pub fn is_realizable(&self) -> bool {
        self.lengths[..self.lengths.len() - 1].iter().all(|&r| r >= 2)
    }
}

impl std::fmt::Display for RunProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, r) in self.lengths.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for RunProfile {
    type Err = Error;

    /// Parses comma-separated lengths, e.g. `24,18,50`.
    fn from_str(s: &str) -> Result<Self> {
        let lengths = s
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<u64>()
                    .map_err(|e| Error::Parse(format!("run length {tok:?}: {e}")))
            })
            .collect::<Result<Vec<u64>>>()?;
        RunProfile::new(lengths)
    }
}

/// Splits `xs` into maximal monotonic runs.
pub fn decompose<T: Ord>(xs: &[T]) -> Result<Vec<Run>> {
    if xs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut runs = Vec::new();
    let mut start = 0;
    while start < xs.len() {
        let mut end = start + 1;
        let direction = if end < xs.len() && xs[end] < xs[start] {
            while end + 1 < xs.len() && xs[end + 1] < xs[end] {
                end += 1;
            }
            Direction::Decreasing
        } else {
            while end < xs.len() && xs[end] >= xs[end - 1] {
                end += 1;
            }
            end -= 1;
            Direction::NonDecreasing
        };
        runs.push(Run {
            offset: start,
            length: end + 1 - start,
            direction,
        });
        start = end + 1;
    }
    Ok(runs)
}

/// Reverses every decreasing run in place, so all runs are nondecreasing
/// afterwards. Marks the reversed runs accordingly.
pub fn normalize<T>(xs: &mut [T], runs: &mut [Run]) {
    for run in runs {
        if run.direction == Direction::Decreasing {
            xs[run.offset..run.end()].reverse();
            run.direction = Direction::NonDecreasing;
        }
    }
}

/// Extracts the length profile of a run decomposition.
pub fn profile_of(runs: &[Run]) -> Result<RunProfile> {
    RunProfile::new(runs.iter().map(|r| r.length as u64).collect())
}
