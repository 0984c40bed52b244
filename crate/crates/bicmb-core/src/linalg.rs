//! Small complex linear-algebra helpers shared by channel synthesis and
//! beamforming: thin SVD with a deterministic phase convention, numerical
//! rank, and orthonormal null-space bases.

use crate::{CMat, C64};
use alloc::vec::Vec;
use nalgebra::DVector;

/// Relative threshold under which a singular value counts as zero.
pub const RANK_REL_TOL: f64 = 1e-8;

/// Thin SVD `A = U diag(s) V^H` with singular values in descending order.
///
/// The phase ambiguity is fixed by rotating each (u, v) pair so that the
/// first entry of v with magnitude above 1e-12 is real and positive. This
/// makes every decomposition in the crate reproducible bit-for-bit.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMat,
    pub s: DVector<f64>,
    pub v: CMat,
}

/// Computes the thin, phase-fixed SVD of `a`.
///
/// Panics if the backend fails to converge (does not happen for finite
/// inputs of the sizes used here).
pub fn svd(a: &CMat) -> Svd {
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("SVD requested U");
    let v_t = svd.v_t.expect("SVD requested V^H");
    let mut v = v_t.adjoint();
    let mut u = u;
    fix_phases(&mut u, &mut v);
    Svd {
        u,
        s: svd.singular_values,
        v,
    }
}

/// Rotates each column pair (u_j, v_j) by a unit scalar so the first
/// non-negligible entry of v_j is real positive. `U diag(s) V^H` is
/// unchanged because u_j and v_j absorb the same phase.
fn fix_phases(u: &mut CMat, v: &mut CMat) {
    let cols = u.ncols().min(v.ncols());
    for j in 0..cols {
        let pivot = (0..v.nrows()).find(|&i| v[(i, j)].norm_sqr() > 1e-24);
        if let Some(i) = pivot {
            let z = v[(i, j)];
            let c = z.conj() / z.norm();
            for r in 0..v.nrows() {
                v[(r, j)] *= c;
            }
            for r in 0..u.nrows() {
                u[(r, j)] *= c;
            }
        }
    }
}

/// Number of singular values above `RANK_REL_TOL` times the largest.
pub fn numerical_rank(singular_values: &[f64]) -> usize {
    let max = singular_values.first().copied().unwrap_or(0.0);
    if max <= 0.0 {
        return 0;
    }
    singular_values.iter().filter(|&&s| s > RANK_REL_TOL * max).count()
}

/// Orthonormal basis of the null space of `a` (columns of the result).
///
/// Computed from the right singular vectors whose singular value is below
/// `rel_tol` times the largest. A matrix with no rows (or all zeros) has the
/// full identity as its null-space basis.
pub fn null_space(a: &CMat, rel_tol: f64) -> CMat {
    let n = a.ncols();
    if a.nrows() == 0 {
        return CMat::identity(n, n);
    }
    // Pad with zero rows so the thin SVD carries all n right singular
    // vectors, including the null directions.
    let work = if a.nrows() < n {
        let mut padded = CMat::zeros(n, n);
        padded.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
        padded
    } else {
        a.clone()
    };
    let dec = svd(&work);
    let smax = dec.s.max();
    if smax <= 0.0 {
        return CMat::identity(n, n);
    }
    let keep: Vec<usize> = (0..dec.s.len()).filter(|&i| dec.s[i] <= rel_tol * smax).collect();
    let mut basis = CMat::zeros(n, keep.len());
    for (out, &j) in keep.iter().enumerate() {
        basis.set_column(out, &dec.v.column(j));
    }
    basis
}

/// Frobenius norm squared.
pub fn fro_norm_sqr(a: &CMat) -> f64 {
    a.iter().map(C64::norm_sqr).sum()
}

/// Max magnitude of off-diagonal entries.
pub fn max_off_diagonal(a: &CMat) -> f64 {
    let mut m = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if i != j {
                m = m.max(a[(i, j)].norm());
            }
        }
    }
    m
}
