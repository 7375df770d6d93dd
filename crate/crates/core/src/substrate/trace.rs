use serde::{Deserialize, Serialize};

use super::compartment::DECAY_ONE;

pub const DEFAULT_TRACE_MAX: i32 = 127;

/// Integer decay numerator `round(4096 * exp(-1 / tau))`.
pub fn trace_decay_factor(tau: u32) -> i32 {
    assert!(tau > 0, "trace time constant must be positive");
    (f64::from(DECAY_ONE) * (-1.0 / f64::from(tau)).exp()).round() as i32
}

/// Static parameters of a spike trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceParams {
    pub impulse: i32,
    pub tau: u32,
    #[serde(default = "default_trace_max")]
    pub trace_max: i32,
}

fn default_trace_max() -> i32 {
    DEFAULT_TRACE_MAX
}

impl TraceParams {
    pub fn new(impulse: i32, tau: u32) -> Self {
        Self {
            impulse,
            tau,
            trace_max: DEFAULT_TRACE_MAX,
        }
    }
}

/// An exponentially decaying, saturating spike trace.
///
/// The decay numerator is cached so that stepping a trace is a multiply and
/// a shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trace {
    pub value: i32,
    pub impulse: i32,
    pub tau: u32,
    pub trace_max: i32,
    decay: i32,
}

impl Trace {
    pub fn new(params: TraceParams) -> Self {
        Self {
            value: 0,
            impulse: params.impulse,
            tau: params.tau,
            trace_max: params.trace_max,
            decay: trace_decay_factor(params.tau),
        }
    }

    pub fn decay(&mut self) {
        // value is never negative, so truncation equals floor here
        self.value = ((i64::from(self.value) * i64::from(self.decay)) / i64::from(DECAY_ONE)) as i32;
    }

    pub fn add_impulse(&mut self) {
        self.value = self.value.saturating_add(self.impulse).min(self.trace_max);
    }

    /// One full step: decay, then add the impulse if the owner spiked.
    pub fn step(&mut self, spiked_now: bool) {
        self.decay();
        if spiked_now {
            self.add_impulse();
        }
    }
}

/// Functional form of [`Trace::step`].
pub fn update_trace(mut tr: Trace, spiked_now: bool) -> Trace {
    tr.step(spiked_now);
    tr
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tau_two_factor() {
        assert_eq!(trace_decay_factor(2), 2484);
    }

    #[test]
    fn zero_stays_zero() {
        let tr = Trace::new(TraceParams::new(16, 2));
        assert_eq!(update_trace(tr, false).value, 0);
    }

    #[test]
    fn decays_sixteen_to_nine() {
        let mut tr = Trace::new(TraceParams::new(16, 2));
        tr.value = 16;
        assert_eq!(update_trace(tr, false).value, 9);
    }

    #[test]
    fn impulse_saturates() {
        let mut tr = Trace::new(TraceParams::new(16, 2));
        tr.value = 120;
        // 120 decays to 72 before the impulse; saturation needs a slow trace
        assert_eq!(update_trace(tr, true).value, 88);
        let mut slow = Trace::new(TraceParams::new(16, 100_000));
        slow.value = 120;
        assert_eq!(update_trace(slow, true).value, 127);
    }

    proptest! {
        #[test]
        fn non_increasing_between_spikes(tau in 1u32..1000, start in 0..=127i32, n in 1usize..200) {
            let mut tr = Trace::new(TraceParams::new(16, tau));
            tr.value = start;
            for _ in 0..n {
                let before = tr.value;
                tr.step(false);
                prop_assert!(tr.value <= before);
                prop_assert!(tr.value >= 0);
            }
        }
    }
}
