//! Trace-product learning rules.
//!
//! Every rule here is a sum of products of spike indicators and traces:
//! `dw = sum_i rate_i * prod_j factor_ij`. STDP and astrocyte-driven
//! heterosynaptic depression (HSD) are two instances; their sum is the
//! astrocyte-reinforced rule. The bidirectional homeostatic rule (BHP) used
//! on neuron-to-astrocyte weights keeps its own slow rate accumulator and is
//! gated to every `2^k` epochs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::substrate::{Trace, TraceParams, UnitId};

pub const DEFAULT_W_MIN: f64 = -64.0;
pub const DEFAULT_W_MAX: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StdpParams {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HsdParams {
    pub c: f64,
    pub d: f64,
}

impl StdpParams {
    pub fn validate(&self) -> Result<()> {
        if self.a > 0.0 && self.b > 0.0 {
            Ok(())
        } else {
            Err(Error::Config("STDP rates a, b must be positive".into()))
        }
    }
}

impl HsdParams {
    pub fn validate(&self) -> Result<()> {
        if self.c > 0.0 && self.d > 0.0 {
            Ok(())
        } else {
            Err(Error::Config("HSD rates c, d must be positive".into()))
        }
    }
}

pub fn stdp_dw(x0: bool, y0: bool, x1: i32, y1: i32, p: &StdpParams) -> f64 {
    p.a * f64::from(x1) * f64::from(u8::from(y0)) - p.b * f64::from(u8::from(x0)) * f64::from(y1)
}

pub fn hsd_dw(x0: bool, y0: bool, r1: i32, p: &HsdParams) -> f64 {
    -p.c * f64::from(u8::from(y0)) * f64::from(r1) + p.d * f64::from(u8::from(x0)) * f64::from(r1)
}

pub fn combined_dw(stdp_term: f64, hsd_term: f64) -> f64 {
    stdp_term + hsd_term
}

/// Quantities a trace-product term can multiply together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Factor {
    X0,
    Y0,
    X1,
    Y1,
    R1,
}

/// Values seen by a rule on one learning epoch. Traces are decayed to the
/// current step but do not yet include this step's impulses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TraceValues {
    pub x0: bool,
    pub y0: bool,
    pub x1: i32,
    pub y1: i32,
    pub r1: i32,
}

impl TraceValues {
    fn get(&self, f: Factor) -> f64 {
        match f {
            Factor::X0 => f64::from(u8::from(self.x0)),
            Factor::Y0 => f64::from(u8::from(self.y0)),
            Factor::X1 => f64::from(self.x1),
            Factor::Y1 => f64::from(self.y1),
            Factor::R1 => f64::from(self.r1),
        }
    }

    pub fn any_spike(&self) -> bool {
        self.x0 || self.y0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductTerm {
    pub rate: f64,
    pub factors: Vec<Factor>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TraceProductRule {
    pub terms: Vec<ProductTerm>,
}

impl TraceProductRule {
    pub fn stdp(p: &StdpParams) -> Self {
        Self {
            terms: vec![
                ProductTerm {
                    rate: p.a,
                    factors: vec![Factor::X1, Factor::Y0],
                },
                ProductTerm {
                    rate: -p.b,
                    factors: vec![Factor::X0, Factor::Y1],
                },
            ],
        }
    }

    pub fn hsd(p: &HsdParams) -> Self {
        Self {
            terms: vec![
                ProductTerm {
                    rate: -p.c,
                    factors: vec![Factor::Y0, Factor::R1],
                },
                ProductTerm {
                    rate: p.d,
                    factors: vec![Factor::X0, Factor::R1],
                },
            ],
        }
    }

    /// Concatenation: the sum of both rules' terms.
    pub fn plus(mut self, other: TraceProductRule) -> Self {
        self.terms.extend(other.terms);
        self
    }

    pub fn uses_reward(&self) -> bool {
        self.terms.iter().any(|t| t.factors.contains(&Factor::R1))
    }

    pub fn dw(&self, v: &TraceValues) -> f64 {
        self.terms.iter().fold(0.0, |acc, term| {
            acc + term
                .factors
                .iter()
                .fold(term.rate, |prod, &f| prod * v.get(f))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BhpParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub w_max: f64,
    pub k: u32,
    pub t_max: f64,
}

impl BhpParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.a > 0.0 && self.b > 0.0 && self.c > 0.0 && self.w_max > 0.0 && self.t_max > 0.0;
        if ok && self.k < 32 {
            Ok(())
        } else {
            Err(Error::Config("BHP parameters must be positive and k < 32".into()))
        }
    }

    pub fn period(&self) -> u64 {
        1u64 << self.k
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BhpState {
    pub t: f64,
    pub w: f64,
    pub epoch_counter: u64,
}

pub fn bhp_step(s: BhpState, x0: bool, p: &BhpParams) -> BhpState {
    let t = (s.t + p.a * f64::from(u8::from(x0))).min(p.t_max);
    let epoch_counter = s.epoch_counter + 1;
    let w = if epoch_counter % p.period() == 0 {
        (s.w + p.b * (p.w_max - s.w) - p.c * t).clamp(0.0, p.w_max)
    } else {
        s.w
    };
    BhpState {
        t,
        w,
        epoch_counter,
    }
}

/// A learning rule attached to one or more synapses.
#[derive(Debug, Clone, PartialEq)]
pub enum LearningRule {
    TraceProduct {
        rule: TraceProductRule,
        pre_trace: TraceParams,
        post_trace: TraceParams,
        w_min: f64,
        w_max: f64,
    },
    Bhp(BhpParams),
}

impl LearningRule {
    pub fn stdp(p: StdpParams, traces: TraceParams) -> Self {
        LearningRule::TraceProduct {
            rule: TraceProductRule::stdp(&p),
            pre_trace: traces,
            post_trace: traces,
            w_min: DEFAULT_W_MIN,
            w_max: DEFAULT_W_MAX,
        }
    }

    /// STDP plus astrocyte-induced heterosynaptic depression.
    pub fn stdp_hsd(p: StdpParams, h: HsdParams, traces: TraceParams) -> Self {
        LearningRule::TraceProduct {
            rule: TraceProductRule::stdp(&p).plus(TraceProductRule::hsd(&h)),
            pre_trace: traces,
            post_trace: traces,
            w_min: DEFAULT_W_MIN,
            w_max: DEFAULT_W_MAX,
        }
    }

    pub fn with_bounds(mut self, lo: f64, hi: f64) -> Self {
        if let LearningRule::TraceProduct { w_min, w_max, .. } = &mut self {
            *w_min = lo;
            *w_max = hi;
        }
        self
    }

    pub fn bounds(&self) -> (f64, f64) {
        match self {
            LearningRule::TraceProduct { w_min, w_max, .. } => (*w_min, *w_max),
            LearningRule::Bhp(p) => (0.0, p.w_max),
        }
    }
}

/// Per-synapse learning state.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    pub x1: Trace,
    pub y1: Trace,
    pub bhp: BhpState,
}

impl TraceSet {
    pub fn for_rule(rule: &LearningRule, initial_weight: f64) -> Self {
        let (pre, post) = match rule {
            LearningRule::TraceProduct {
                pre_trace,
                post_trace,
                ..
            } => (*pre_trace, *post_trace),
            LearningRule::Bhp(_) => (TraceParams::new(0, 1), TraceParams::new(0, 1)),
        };
        Self {
            x1: Trace::new(pre),
            y1: Trace::new(post),
            bhp: BhpState {
                w: initial_weight,
                ..Default::default()
            },
        }
    }
}

/// Weight update for one synapse on one epoch. `weight` is the real-valued
/// accumulator; the result is clamped to the rule's bounds.
pub fn apply_rule(weight: f64, rule: &LearningRule, traces: &mut TraceSet, v: &TraceValues) -> f64 {
    match rule {
        LearningRule::TraceProduct {
            rule, w_min, w_max, ..
        } => (weight + rule.dw(v)).clamp(*w_min, *w_max),
        LearningRule::Bhp(p) => {
            traces.bhp = bhp_step(traces.bhp, v.x0, p);
            traces.bhp.w
        }
    }
}

/// Reward channel fed by an astrocyte's spike generator. All tagged synapses
/// see identical impulses, so they share one `r1` trace.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardChannel {
    pub source: UnitId,
    pub r1: Trace,
    pub tagged_synapses: Vec<usize>,
}

impl RewardChannel {
    pub fn new(source: UnitId, params: TraceParams) -> Self {
        Self {
            source,
            r1: Trace::new(params),
            tagged_synapses: Vec::new(),
        }
    }
}

pub fn feed_reward(mut chan: RewardChannel, sg_spiked: bool) -> RewardChannel {
    chan.r1.step(sg_spiked);
    chan
}
