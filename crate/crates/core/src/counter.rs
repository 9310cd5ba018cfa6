//! Live occupant counting from boundary-crossing events.

use alloc::vec::Vec;

use crate::{Error, Result, TimeSeries};

/// Default idle reset: 30 minutes without any crossing.
pub const DEFAULT_IDLE_TIMEOUT: i64 = 30 * 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Direction {
    Inward,
    Outward,
}

/// A detected crossing of the reference line by `count` people.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CrossingEvent {
    pub timestamp: i64,
    pub direction: Direction,
    pub count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CounterState {
    pub occupants: u32,
    /// Set after an outward crossing would have driven the count negative.
    pub frozen: bool,
    pub last_event_time: i64,
}

impl CounterState {
    pub fn new(start: i64) -> Self {
        Self { occupants: 0, frozen: false, last_event_time: start }
    }
}

/// Applies one crossing event.
///
/// A gap longer than `idle_timeout` since the previous event resets the count
/// to zero first. An outward crossing that would underflow clamps to zero and
/// freezes the counter; while frozen, outward events are discarded until the
/// next inward crossing.
pub fn apply_event(
    state: &CounterState,
    event: &CrossingEvent,
    idle_timeout: i64,
) -> Result<CounterState> {
    if event.timestamp < state.last_event_time {
        return Err(Error::OutOfOrder { previous: state.last_event_time, found: event.timestamp });
    }
    if event.count == 0 {
        return Err(Error::Invalid("crossing count (must be >= 1)"));
    }
    let mut next = *state;
    next.last_event_time = event.timestamp;
    if event.timestamp - state.last_event_time > idle_timeout {
        next.occupants = 0;
    }
    match event.direction {
        Direction::Inward => {
            next.occupants = next.occupants.saturating_add(event.count);
            next.frozen = false;
        }
        Direction::Outward if next.frozen => {}
        Direction::Outward => match next.occupants.checked_sub(event.count) {
            Some(n) => next.occupants = n,
            None => {
                next.occupants = 0;
                next.frozen = true;
            }
        },
    }
    Ok(next)
}

/// Folds a whole event stream.
pub fn replay<'a, I>(start: CounterState, events: I, idle_timeout: i64) -> Result<CounterState>
where
    I: IntoIterator<Item = &'a CrossingEvent>,
{
    events
        .into_iter()
        .try_fold(start, |s, e| apply_event(&s, e, idle_timeout))
}

/// Occupancy seen at `start, start + step, …` (`len` samples), counting events
/// stamped at or before each sample time. A sample taken more than
/// `idle_timeout` after the latest event reads zero.
pub fn occupancy_trace(
    events: &[CrossingEvent],
    start: i64,
    step: i64,
    len: usize,
    idle_timeout: i64,
) -> Result<TimeSeries> {
    if step <= 0 {
        return Err(Error::OutOfRange { what: "step", value: step as f64 });
    }
    let first = events.first().map_or(start, |e| e.timestamp.min(start));
    let mut state = CounterState::new(first);
    let mut pending = events.iter().peekable();
    let mut values = Vec::with_capacity(len);
    for k in 0..len {
        let t = start + k as i64 * step;
        while let Some(e) = pending.next_if(|e| e.timestamp <= t) {
            state = apply_event(&state, e, idle_timeout)?;
        }
        let idle = t - state.last_event_time > idle_timeout;
        values.push(if idle { 0.0 } else { f64::from(state.occupants) });
    }
    TimeSeries::new(start, step, values)
}

/// `1 - (missed in + missed out) / (total in + total out)`.
pub fn accuracy_rate(total_in: u64, missing_in: u64, total_out: u64, missing_out: u64) -> Result<f64> {
    if missing_in > total_in || missing_out > total_out {
        return Err(Error::Invalid("missing count exceeds total"));
    }
    let total = total_in + total_out;
    if total == 0 {
        return Err(Error::ZeroDenominator("accuracy rate"));
    }
    Ok(1.0 - (missing_in + missing_out) as f64 / total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassificationMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// F1 from precision and recall (harmonic mean).
pub fn f1_score(precision: f64, recall: f64) -> Result<f64> {
    if precision + recall == 0.0 {
        return Err(Error::ZeroDenominator("f1"));
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

pub fn classification_metrics(
    true_positives: u64,
    false_positives: u64,
    false_negatives: u64,
) -> Result<ClassificationMetrics> {
    if true_positives + false_positives == 0 {
        return Err(Error::ZeroDenominator("precision"));
    }
    if true_positives + false_negatives == 0 {
        return Err(Error::ZeroDenominator("recall"));
    }
    let precision = true_positives as f64 / (true_positives + false_positives) as f64;
    let recall = true_positives as f64 / (true_positives + false_negatives) as f64;
    let f1 = f1_score(precision, recall)?;
    Ok(ClassificationMetrics { precision, recall, f1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(timestamp: i64, direction: Direction, count: u32) -> CrossingEvent {
        CrossingEvent { timestamp, direction, count }
    }

    #[test]
    fn accumulates_inward() {
        let events: Vec<_> = (0..3).map(|i| ev(i * 10, Direction::Inward, 1)).collect();
        let s = replay(CounterState::new(0), &events, DEFAULT_IDLE_TIMEOUT).unwrap();
        assert_eq!(s.occupants, 3);
    }

    #[test]
    fn underflow_freezes_until_inward() {
        let s = CounterState { occupants: 2, frozen: false, last_event_time: 0 };
        let s = apply_event(&s, &ev(1, Direction::Outward, 5), DEFAULT_IDLE_TIMEOUT).unwrap();
        assert_eq!((s.occupants, s.frozen), (0, true));
        let s = apply_event(&s, &ev(2, Direction::Outward, 1), DEFAULT_IDLE_TIMEOUT).unwrap();
        assert_eq!((s.occupants, s.frozen), (0, true));
        let s = apply_event(&s, &ev(3, Direction::Inward, 1), DEFAULT_IDLE_TIMEOUT).unwrap();
        assert_eq!((s.occupants, s.frozen), (1, false));
    }

    #[test]
    fn idle_gap_resets() {
        let s = CounterState { occupants: 4, frozen: false, last_event_time: 0 };
        let s = apply_event(&s, &ev(40 * 60, Direction::Inward, 1), 30 * 60).unwrap();
        assert_eq!(s.occupants, 1);
    }

    #[test]
    fn sampled_trace() {
        let events = [
            ev(100, Direction::Inward, 3),
            ev(600, Direction::Inward, 2),
            ev(700, Direction::Outward, 4),
        ];
        let t = occupancy_trace(&events, 0, 600, 4, 1800).unwrap();
        assert_eq!(t.values(), &[0.0, 5.0, 1.0, 1.0]);
        let t = occupancy_trace(&events, 0, 600, 6, 1800).unwrap();
        assert_eq!(t.values()[5], 0.0);
    }

    #[test]
    fn rejects_out_of_order() {
        let s = CounterState { occupants: 0, frozen: false, last_event_time: 100 };
        assert_eq!(
            apply_event(&s, &ev(99, Direction::Inward, 1), 60),
            Err(Error::OutOfOrder { previous: 100, found: 99 })
        );
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy_rate(50, 0, 40, 0).unwrap(), 1.0);
        assert!((accuracy_rate(100, 10, 100, 14).unwrap() - 0.88).abs() < 1e-12);
        // 20-minute rush: 407 crossings with a 16% combined miss.
        let missed = 407 * 16 / 100;
        assert!((accuracy_rate(407, missed, 0, 0).unwrap() - 0.84).abs() < 0.005);
        assert_eq!(accuracy_rate(0, 0, 0, 0), Err(Error::ZeroDenominator("accuracy rate")));
        assert!(accuracy_rate(1, 2, 0, 0).is_err());
    }

    #[test]
    fn f1_examples() {
        assert!((f1_score(0.97, 0.27).unwrap() - 0.42).abs() < 0.005);
        assert!((f1_score(0.69, 0.78).unwrap() - 0.73).abs() < 0.005);
        assert_eq!(f1_score(1.0, 1.0).unwrap(), 1.0);
        let m = classification_metrics(8, 2, 8).unwrap();
        assert_eq!((m.precision, m.recall), (0.8, 0.5));
        assert_eq!(classification_metrics(0, 0, 3), Err(Error::ZeroDenominator("precision")));
        assert_eq!(classification_metrics(0, 3, 0), Err(Error::ZeroDenominator("recall")));
        assert_eq!(classification_metrics(0, 3, 3), Err(Error::ZeroDenominator("f1")));
    }

    fn stream() -> impl Strategy<Value = Vec<CrossingEvent>> {
        prop::collection::vec((0i64..3_000, any::<bool>(), 1u32..6), 0..200).prop_map(|raw| {
            let mut t = 0;
            raw.into_iter()
                .map(|(gap, inward, count)| {
                    t += gap;
                    let dir = if inward { Direction::Inward } else { Direction::Outward };
                    ev(t, dir, count)
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn deterministic_replay(events in stream()) {
            let a = replay(CounterState::new(0), &events, DEFAULT_IDLE_TIMEOUT).unwrap();
            let b = replay(CounterState::new(0), &events, DEFAULT_IDLE_TIMEOUT).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn frozen_implies_empty(events in stream()) {
            let mut s = CounterState::new(0);
            for e in &events {
                s = apply_event(&s, e, DEFAULT_IDLE_TIMEOUT).unwrap();
                prop_assert!(!s.frozen || s.occupants == 0);
            }
        }

        #[test]
        fn f1_bounded_by_max(p in 0.01f64..1.0, r in 0.01f64..1.0) {
            let f = f1_score(p, r).unwrap();
            prop_assert!(f <= p.max(r) + 1e-12);
        }

        #[test]
        fn accuracy_in_unit_interval(ti in 0u64..1000, to in 1u64..1000, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let mi = (ti as f64 * a) as u64;
            let mo = (to as f64 * b) as u64;
            let r = accuracy_rate(ti, mi, to, mo).unwrap();
            prop_assert!((0.0..=1.0).contains(&r));
        }
    }
}
