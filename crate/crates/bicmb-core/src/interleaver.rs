//! Spatial interleaving across SVD subchannels.
//!
//! The plan sends coded bit k' to (time k, subchannel s, label position i)
//! subject to the two BICMB design criteria: consecutive coded bits land on
//! different symbols, and every subchannel is touched inside each window of
//! N_s * m consecutive coded bits. Both are guaranteed constructively:
//! bits round-robin over subchannels, and time slots are permuted per
//! (subchannel, bit-position) plane with a seeded shuffle.

use crate::error::{Error, Result};
use crate::modulation::ModulationSpec;
use crate::rng::{Domain, SeedStream, Stream};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Position of one coded bit in the transmitted frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct BitPosition {
    /// Time index of the symbol on its subchannel.
    pub k: u32,
    /// Subchannel index.
    pub s: u32,
    /// Bit position within the symbol label.
    pub i: u32,
}

/// A bijection from coded-bit order to (time, subchannel, position).
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct InterleaverPlan {
    n_s: usize,
    m: usize,
    /// Symbols per subchannel.
    t: usize,
    map: Vec<BitPosition>,
    seed_key: u64,
}

/// Outcome of checking a plan against the design criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ValidationReport {
    /// The mapping hits every (k, s, i) cell exactly once.
    pub bijection: bool,
    /// Consecutive coded bits are mapped to different symbols.
    pub criterion1: bool,
    /// Every window of N_s * m consecutive coded bits uses all subchannels.
    pub window_coverage: bool,
}

impl ValidationReport {
    pub fn all_ok(&self) -> bool {
        self.bijection && self.criterion1 && self.window_coverage
    }
}

impl InterleaverPlan {
    /// Wraps an explicit mapping (used for adversarial plans in tests and
    /// validation tooling). The mapping is not checked here; run
    /// [`validate_interleaver`].
    pub fn from_mapping(n_s: usize, m: usize, t: usize, map: Vec<BitPosition>) -> Self {
        InterleaverPlan {
            n_s,
            m,
            t,
            map,
            seed_key: 0,
        }
    }

    pub fn n_bits(&self) -> usize {
        self.map.len()
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.m
    }

    /// Symbols carried by each subchannel.
    pub fn symbols_per_subchannel(&self) -> usize {
        self.t
    }

    pub fn seed_key(&self) -> u64 {
        self.seed_key
    }

    /// Where coded bit `k_prime` is transmitted.
    pub fn position(&self, k_prime: usize) -> BitPosition {
        self.map[k_prime]
    }

    /// Linear index of a position in the interleaved (subchannel-major)
    /// bit layout consumed by `modulation::map_symbols`.
    pub fn linear_index(&self, p: BitPosition) -> usize {
        ((p.s as usize * self.t) + p.k as usize) * self.m + p.i as usize
    }

    /// Reorders coded bits into the interleaved layout.
    pub fn interleave(&self, coded: &[u8]) -> Vec<u8> {
        debug_assert_eq!(coded.len(), self.n_bits());
        let mut out = vec![0u8; coded.len()];
        for (k_prime, &b) in coded.iter().enumerate() {
            out[self.linear_index(self.map[k_prime])] = b;
        }
        out
    }

    /// Inverse of [`InterleaverPlan::interleave`].
    pub fn deinterleave(&self, interleaved: &[u8]) -> Vec<u8> {
        debug_assert_eq!(interleaved.len(), self.n_bits());
        let mut out = vec![0u8; interleaved.len()];
        for (k_prime, slot) in out.iter_mut().enumerate() {
            *slot = interleaved[self.linear_index(self.map[k_prime])];
        }
        out
    }
}

fn shuffled(t: usize, rng: &mut Stream) -> Vec<u32> {
    let mut v: Vec<u32> = (0..t as u32).collect();
    for i in (1..t).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        v.swap(i, j);
    }
    v
}

/// Builds a criteria-compliant plan for `coded_bits` bits over `n_s`
/// subchannels.
///
/// `d_free` is the free distance of the convolutional code in use; plans
/// with `n_s > d_free` cannot achieve full diversity and are rejected.
pub fn build_interleaver(
    coded_bits: usize,
    n_s: usize,
    modulation: &ModulationSpec,
    d_free: usize,
    seed: SeedStream,
) -> Result<InterleaverPlan> {
    if n_s == 0 {
        return Err(Error::InvalidArgument(alloc::string::String::from(
            "need at least one subchannel",
        )));
    }
    if n_s > d_free {
        return Err(Error::InterleaverConstraint { n_s, d_free });
    }
    let m = modulation.bits_per_symbol();
    if coded_bits == 0 || !coded_bits.is_multiple_of(n_s * m) {
        return Err(Error::InvalidArgument(format!(
            "coded-bit count {coded_bits} is not divisible by n_s * m = {}",
            n_s * m
        )));
    }
    let t = coded_bits / (n_s * m);
    if n_s == 1 && m > 1 && t == 1 {
        return Err(Error::InvalidArgument(alloc::string::String::from(
            "single symbol on one subchannel cannot keep consecutive bits apart",
        )));
    }

    // One seeded time permutation per (subchannel, bit-position) plane.
    let mut perms: Vec<Vec<u32>> = Vec::with_capacity(n_s * m);
    for s in 0..n_s {
        for i in 0..m {
            let mut rng = seed
                .domain(Domain::Interleaver)
                .with(s as u64)
                .with(i as u64)
                .rng();
            perms.push(shuffled(t, &mut rng));
        }
    }
    if n_s == 1 {
        // With one subchannel, consecutive bits stay on different symbols
        // within a plane automatically; fix up plane boundaries.
        for i in 1..m {
            let prev_last = perms[i - 1][t - 1];
            if perms[i][0] == prev_last && t >= 2 {
                perms[i].swap(0, 1);
            }
        }
    }

    let mut map = Vec::with_capacity(coded_bits);
    for k_prime in 0..coded_bits {
        let s = k_prime % n_s;
        let j = k_prime / n_s;
        let i = j / t;
        let slot = j % t;
        map.push(BitPosition {
            k: perms[s * m + i][slot],
            s: s as u32,
            i: i as u32,
        });
    }
    Ok(InterleaverPlan {
        n_s,
        m,
        t,
        map,
        seed_key: seed.key(),
    })
}

/// Checks a plan against both design criteria and bijectivity.
pub fn validate_interleaver(plan: &InterleaverPlan) -> ValidationReport {
    let n = plan.n_bits();
    let cells = plan.n_s * plan.m * plan.t;

    let mut bijection = n == cells;
    let mut seen = vec![false; cells];
    if bijection {
        for k_prime in 0..n {
            let p = plan.position(k_prime);
            if (p.k as usize) < plan.t && (p.s as usize) < plan.n_s && (p.i as usize) < plan.m {
                let idx = plan.linear_index(p);
                if seen[idx] {
                    bijection = false;
                    break;
                }
                seen[idx] = true;
            } else {
                bijection = false;
                break;
            }
        }
    }

    let criterion1 = (0..n.saturating_sub(1)).all(|k_prime| {
        let a = plan.position(k_prime);
        let b = plan.position(k_prime + 1);
        (a.k, a.s) != (b.k, b.s)
    });

    let window = plan.n_s * plan.m;
    let mut window_coverage = n >= window;
    if window_coverage {
        let mut counts = vec![0usize; plan.n_s];
        let mut covered = 0usize;
        for k_prime in 0..n {
            let s = plan.position(k_prime).s as usize;
            if s >= plan.n_s {
                window_coverage = false;
                break;
            }
            counts[s] += 1;
            if counts[s] == 1 {
                covered += 1;
            }
            if k_prime >= window {
                let out = plan.position(k_prime - window).s as usize;
                counts[out] -= 1;
                if counts[out] == 0 {
                    covered -= 1;
                }
            }
            if k_prime + 1 >= window && covered != plan.n_s {
                window_coverage = false;
                break;
            }
        }
    }

    ValidationReport {
        bijection,
        criterion1,
        window_coverage,
    }
}
