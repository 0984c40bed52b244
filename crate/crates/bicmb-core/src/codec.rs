//! Binary convolutional coding: encoder, exact distance spectrum, and a
//! terminated Viterbi decoder operating on per-bit ML metrics.
//!
//! Generators are given in octal with the most significant bit tapping the
//! current input, so the industry-standard 64-state rate-1/2 code is
//! `CodeSpec::standard()` with generators (133, 171).

use crate::error::{Error, Result};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// A rate-1/n feedforward convolutional code with tail-bit termination.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CodeSpec {
    /// Generator taps; bit (constraint_length - 1) weights the current input.
    generators: Vec<u32>,
    constraint_length: usize,
}

impl CodeSpec {
    pub fn new(generators_octal: &[u32], constraint_length: usize) -> Result<Self> {
        if generators_octal.len() < 2 {
            return Err(Error::InvalidArgument(String::from(
                "need at least two generators for a rate-1/n code",
            )));
        }
        if !(2..=16).contains(&constraint_length) {
            return Err(Error::InvalidArgument(String::from(
                "constraint length must be in 2..=16",
            )));
        }
        let limit = 1u32 << constraint_length;
        for &g in generators_octal {
            if g == 0 || g >= limit {
                return Err(Error::InvalidArgument(format!(
                    "generator {g:o} does not fit constraint length {constraint_length}"
                )));
            }
        }
        Ok(CodeSpec {
            generators: generators_octal.to_vec(),
            constraint_length,
        })
    }

    /// The 64-state rate-1/2 (133, 171) code.
    pub fn standard() -> Self {
        CodeSpec::new(&[0o133, 0o171], 7).expect("standard code is valid")
    }

    /// Output bits per input bit.
    pub fn n_out(&self) -> usize {
        self.generators.len()
    }

    /// Input bits per trellis step (always 1 for this family).
    pub fn k_c(&self) -> usize {
        1
    }

    /// Memory length (number of tail bits).
    pub fn memory(&self) -> usize {
        self.constraint_length - 1
    }

    pub fn num_states(&self) -> usize {
        1 << self.memory()
    }

    /// Coded bits produced for `info_len` information bits, tail included.
    pub fn coded_len(&self, info_len: usize) -> usize {
        (info_len + self.memory()) * self.n_out()
    }

    #[inline]
    fn step(&self, state: u32, input: u32, out: &mut [u8]) -> u32 {
        let reg = (input << self.memory()) | state;
        for (o, &g) in out.iter_mut().zip(&self.generators) {
            *o = ((reg & g).count_ones() & 1) as u8;
        }
        (input << (self.memory() - 1)) | (state >> 1)
    }

    /// Free distance, found by expanding the event search until it succeeds.
    ///
    /// Errors on catastrophic generator sets (zero-weight loops make the
    /// event search diverge) and on codes whose free distance would exceed
    /// the search cap.
    pub fn d_free(&self) -> Result<usize> {
        let mut d_max = 8;
        while d_max <= 4096 {
            match distance_spectrum(self, d_max) {
                Ok(table) => return Ok(table[0].d),
                Err(Error::SpectrumNotFound { .. }) => d_max *= 2,
                Err(e) => return Err(e),
            }
        }
        Err(Error::InvalidArgument(String::from(
            "no error event found with weight <= 4096; generators look degenerate",
        )))
    }
}

impl Default for CodeSpec {
    fn default() -> Self {
        CodeSpec::standard()
    }
}

/// Rate-1/n encoding with `memory()` flush bits appended.
pub fn conv_encode(info_bits: &[u8], code: &CodeSpec) -> Vec<u8> {
    let n = code.n_out();
    let mut out = vec![0u8; code.coded_len(info_bits.len())];
    let mut state = 0u32;
    let mut chunks = out.chunks_exact_mut(n);
    for &b in info_bits {
        state = code.step(state, u32::from(b & 1), chunks.next().expect("sized above"));
    }
    for _ in 0..code.memory() {
        state = code.step(state, 0, chunks.next().expect("sized above"));
    }
    debug_assert_eq!(state, 0);
    out
}

/// One row of the distance spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SpectrumLine {
    /// Output Hamming weight of the error events.
    pub d: usize,
    /// Number of error events at this weight.
    pub count: u64,
    /// Total input weight of these events (the union-bound W_I(d)).
    pub input_weight: u64,
}

/// Exact enumeration of error events with output weight at most `d_max`.
///
/// An error event leaves the zero state and returns to it exactly once.
/// Events are counted by dynamic programming over (state, accumulated
/// weight); since the codes here are non-catastrophic every cycle adds
/// weight, so the frontier drains in bounded steps.
pub fn distance_spectrum(code: &CodeSpec, d_max: usize) -> Result<Vec<SpectrumLine>> {
    let states = code.num_states();
    let width = d_max + 1;
    // (path count, summed input weight) per (state, weight); state 0 excluded.
    let mut frontier = vec![(0u64, 0u64); states * width];
    let mut next = frontier.clone();
    let mut events = vec![(0u64, 0u64); width];
    let mut out = vec![0u8; code.n_out()];

    // Leave the zero state with input 1.
    {
        let s1 = code.step(0, 1, &mut out);
        let w = out.iter().map(|&b| b as usize).sum::<usize>();
        if w <= d_max {
            frontier[s1 as usize * width + w] = (1, 1);
        }
    }

    let step_budget = states * (d_max + 2);
    for _ in 0..step_budget {
        if frontier.iter().all(|&(c, _)| c == 0) {
            break;
        }
        for cell in next.iter_mut() {
            *cell = (0, 0);
        }
        for state in 1..states {
            for w in 0..width {
                let (cnt, wi) = frontier[state * width + w];
                if cnt == 0 {
                    continue;
                }
                for input in 0..2u32 {
                    let ns = code.step(state as u32, input, &mut out) as usize;
                    let nw = w + out.iter().map(|&b| b as usize).sum::<usize>();
                    if nw > d_max {
                        continue;
                    }
                    let add = (cnt, wi + cnt * u64::from(input));
                    if ns == 0 {
                        events[nw].0 += add.0;
                        events[nw].1 += add.1;
                    } else {
                        let cell = &mut next[ns * width + nw];
                        cell.0 += add.0;
                        cell.1 += add.1;
                    }
                }
            }
        }
        core::mem::swap(&mut frontier, &mut next);
    }
    if frontier.iter().any(|&(c, _)| c != 0) {
        return Err(Error::InvalidArgument(String::from(
            "event search did not drain; code appears catastrophic",
        )));
    }

    let table: Vec<SpectrumLine> = events
        .iter()
        .enumerate()
        .filter(|(_, &(c, _))| c != 0)
        .map(|(d, &(count, input_weight))| SpectrumLine {
            d,
            count,
            input_weight,
        })
        .collect();
    if table.is_empty() {
        return Err(Error::SpectrumNotFound { d_max });
    }
    Ok(table)
}

/// Minimum-metric path through the terminated trellis.
///
/// `metrics[k][b]` is the ML bit metric for coded bit `k` taking value `b`,
/// already addressed in encoder output order (deinterleaved). Ties break
/// toward the lower-indexed predecessor so decoding is deterministic.
pub fn viterbi_decode(metrics: &[[f64; 2]], code: &CodeSpec) -> Result<Vec<u8>> {
    let n = code.n_out();
    if !metrics.len().is_multiple_of(n) {
        return Err(Error::InvalidArgument(format!(
            "metric count {} is not a multiple of {n} coded bits per step",
            metrics.len()
        )));
    }
    let steps = metrics.len() / n;
    let mem = code.memory();
    if steps <= mem {
        return Err(Error::InvalidArgument(String::from(
            "frame too short to carry any information bits",
        )));
    }
    let info_len = steps - mem;
    let states = code.num_states();

    // Tabulate the trellis once: (next state, output bits) per transition.
    let mut out = vec![0u8; n];
    let trellis: Vec<(u16, Vec<u8>)> = (0..states * 2)
        .map(|idx| {
            let ns = code.step((idx / 2) as u32, (idx % 2) as u32, &mut out);
            (ns as u16, out.clone())
        })
        .collect();

    let mut metric = vec![f64::INFINITY; states];
    let mut next_metric = vec![f64::INFINITY; states];
    metric[0] = 0.0;
    // Predecessor state per (step, state); input is recoverable from the
    // destination's top bit.
    let mut prev = vec![0u16; steps * states];

    for t in 0..steps {
        let tail = t >= info_len;
        let m = &metrics[t * n..(t + 1) * n];
        for x in next_metric.iter_mut() {
            *x = f64::INFINITY;
        }
        for state in 0..states {
            let pm = metric[state];
            if pm == f64::INFINITY {
                continue;
            }
            let max_input = if tail { 1 } else { 2 };
            for input in 0..max_input {
                let (ns, bits) = &trellis[state * 2 + input];
                let ns = *ns as usize;
                let bm: f64 = bits
                    .iter()
                    .zip(m)
                    .map(|(&bit, pair)| pair[bit as usize])
                    .sum();
                let cand = pm + bm;
                if cand < next_metric[ns] {
                    next_metric[ns] = cand;
                    prev[t * states + ns] = state as u16;
                }
            }
        }
        core::mem::swap(&mut metric, &mut next_metric);
    }

    // Terminated: trace back from the zero state.
    let mut decoded = vec![0u8; info_len];
    let mut state = 0usize;
    for t in (0..steps).rev() {
        if t < info_len {
            decoded[t] = (state >> (mem - 1)) as u8 & 1;
        }
        state = prev[t * states + state] as usize;
    }
    Ok(decoded)
}

/// Hard-decision metrics from known coded bits (testing aid): 0 for the
/// matching value, 1 for the other.
pub fn hard_metrics(coded: &[u8]) -> Vec<[f64; 2]> {
    coded
        .iter()
        .map(|&b| if b == 0 { [0.0, 1.0] } else { [1.0, 0.0] })
        .collect()
}
