//! Gray-mapped constellations and per-subchannel ML bit metrics.

use crate::error::{Error, Result};
use crate::math;
use crate::C64;
use alloc::format;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Supported unit-average-energy constellations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ModulationSpec {
    /// 0 -> +1, 1 -> -1.
    Bpsk,
    /// Per-axis Gray labeling over levels {-3, -1, +1, +3} / sqrt(10);
    /// label bits (0, 1) select the in-phase level, (2, 3) the quadrature.
    Qam16,
}

/// Gray order of the 4-PAM levels: 00, 01, 11, 10 walk -3, -1, +1, +3.
const PAM4_GRAY: [(u8, f64); 4] = [(0b00, -3.0), (0b01, -1.0), (0b11, 1.0), (0b10, 3.0)];

impl ModulationSpec {
    /// Bits per symbol.
    pub fn bits_per_symbol(&self) -> usize {
        match self {
            ModulationSpec::Bpsk => 1,
            ModulationSpec::Qam16 => 4,
        }
    }

    /// Minimum Euclidean distance at unit average symbol energy.
    pub fn d_min(&self) -> f64 {
        match self {
            ModulationSpec::Bpsk => 2.0,
            ModulationSpec::Qam16 => 2.0 / math::sqrt(10.0),
        }
    }

    /// All constellation points with their labels (bit i of the label is
    /// the bit at position i).
    pub fn points(&self) -> Vec<(u8, C64)> {
        match self {
            ModulationSpec::Bpsk => {
                alloc::vec![(0, C64::new(1.0, 0.0)), (1, C64::new(-1.0, 0.0))]
            }
            ModulationSpec::Qam16 => {
                let s = 1.0 / math::sqrt(10.0);
                let mut pts = Vec::with_capacity(16);
                for &(bi, li) in &PAM4_GRAY {
                    for &(bq, lq) in &PAM4_GRAY {
                        pts.push((bi | (bq << 2), C64::new(li * s, lq * s)));
                    }
                }
                pts
            }
        }
    }

    /// Maps `bits_per_symbol` bits (position 0 first) to a symbol.
    pub fn map(&self, bits: &[u8]) -> C64 {
        debug_assert_eq!(bits.len(), self.bits_per_symbol());
        match self {
            ModulationSpec::Bpsk => {
                if bits[0] == 0 {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(-1.0, 0.0)
                }
            }
            ModulationSpec::Qam16 => {
                let s = 1.0 / math::sqrt(10.0);
                let axis = |b0: u8, b1: u8| -> f64 {
                    let code = b0 | (b1 << 1);
                    PAM4_GRAY.iter().find(|&&(g, _)| g == code).unwrap().1
                };
                C64::new(axis(bits[0], bits[1]) * s, axis(bits[2], bits[3]) * s)
            }
        }
    }
}

/// Splits an interleaved bit sequence into per-subchannel symbol streams.
///
/// The input layout is subchannel-major: stream s occupies one contiguous
/// block, and each symbol's bits are adjacent (position 0 first).
pub fn map_symbols(bits: &[u8], spec: &ModulationSpec, n_s: usize) -> Result<Vec<Vec<C64>>> {
    let m = spec.bits_per_symbol();
    if n_s == 0 || !bits.len().is_multiple_of(n_s * m) {
        return Err(Error::InvalidArgument(format!(
            "{} bits cannot be split into {n_s} streams of {m}-bit symbols",
            bits.len()
        )));
    }
    let per_stream = bits.len() / n_s;
    Ok(bits
        .chunks_exact(per_stream)
        .map(|stream| stream.chunks_exact(m).map(|sym| spec.map(sym)).collect())
        .collect())
}

/// ML bit metric: the minimum of |y - gain*x|^2 over constellation points
/// whose label has value `b` at position `i`.
pub fn ml_bit_metric(y: C64, gain: f64, i: usize, b: u8, spec: &ModulationSpec) -> f64 {
    debug_assert!(i < spec.bits_per_symbol());
    let mut best = f64::INFINITY;
    for (label, x) in spec.points() {
        if (label >> i) & 1 == b {
            let d = (y - x * gain).norm_sqr();
            if d < best {
                best = d;
            }
        }
    }
    best
}
