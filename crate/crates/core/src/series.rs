//! Uniformly sampled scalar traces.

use alloc::vec::Vec;

use crate::{Error, Result};

/// A uniformly sampled, timestamped trace of finite values.
///
/// Sample `i` sits at `start + i * step` (epoch seconds).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TimeSeries {
    start: i64,
    step: i64,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(start: i64, step: i64, values: Vec<f64>) -> Result<Self> {
        if step <= 0 {
            return Err(Error::OutOfRange { what: "series step", value: step as f64 });
        }
        if values.is_empty() {
            return Err(Error::Empty("time series"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("time series value"));
        }
        Ok(Self { start, step, values })
    }

    /// Constant trace of `len` samples.
    pub fn constant(start: i64, step: i64, len: usize, value: f64) -> Result<Self> {
        Self::new(start, step, alloc::vec![value; len])
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn step(&self) -> i64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Timestamp of sample `index`.
    pub fn time_at(&self, index: usize) -> i64 {
        self.start + index as i64 * self.step
    }

    /// Exclusive end of the covered interval.
    pub fn end(&self) -> i64 {
        self.time_at(self.len())
    }

    /// Index of the sample exactly at `t`, if `t` lies on the grid.
    pub fn index_of(&self, t: i64) -> Option<usize> {
        let offset = t - self.start;
        if offset < 0 || offset % self.step != 0 {
            return None;
        }
        let index = (offset / self.step) as usize;
        (index < self.len()).then_some(index)
    }

    /// Index of the sample nearest to `t`, ties toward the earlier sample.
    pub fn nearest_index(&self, t: i64) -> Option<usize> {
        let last = self.time_at(self.len() - 1);
        let half = self.step / 2;
        if t < self.start - half || t > last + half {
            return None;
        }
        let offset = (t - self.start).max(0);
        let mut index = offset / self.step;
        if offset % self.step > half {
            index += 1;
        }
        Some((index as usize).min(self.len() - 1))
    }

    pub fn get(&self, index: usize) -> Option<f64> {
        self.values.get(index).copied()
    }

    /// Value at `t` when it is exactly a sample time.
    pub fn at(&self, t: i64) -> Option<f64> {
        self.index_of(t).map(|i| self.values[i])
    }

    /// True when `other` has the same start, step and length.
    pub fn is_aligned_with(&self, other: &TimeSeries) -> bool {
        self.start == other.start && self.step == other.step && self.len() == other.len()
    }

    pub fn ensure_aligned(&self, other: &TimeSeries) -> Result<()> {
        if self.start != other.start || self.step != other.step {
            return Err(Error::ClockMismatch);
        }
        if self.len() != other.len() {
            return Err(Error::Misaligned { expected: self.len(), found: other.len() });
        }
        Ok(())
    }

    /// Same clock, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.start, self.step, values)
    }

    /// Sub-series of samples `[from, to)`.
    pub fn slice(&self, from: usize, to: usize) -> Result<Self> {
        if from >= to || to > self.len() {
            return Err(Error::Misaligned { expected: self.len(), found: to });
        }
        Self::new(self.time_at(from), self.step, self.values[from..to].to_vec())
    }

    /// Repeat each sample `factor` times on a grid `factor` times finer.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.step % factor as i64 != 0 {
            return Err(Error::Invalid("refinement factor"));
        }
        let values = self
            .values
            .iter()
            .flat_map(|&v| core::iter::repeat_n(v, factor))
            .collect();
        Self::new(self.start, self.step / factor as i64, values)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }
}
