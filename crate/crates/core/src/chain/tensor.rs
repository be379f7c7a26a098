//! Index shuffling for values laid out as `system ⊗ point₁ ⊗ … ⊗ point_k`.
//!
//! All points carry the same fiber dimension `f`; the system index is the most
//! significant digit.

use crate::linalg::{CMatrix, CVector, ZERO};

#[inline]
pub fn pow(f: usize, k: usize) -> usize {
    f.pow(k as u32)
}

/// Moves the fiber at `pos` directly after the system index.
pub fn move_to_front(v: &CVector, d: usize, f: usize, k: usize, pos: usize) -> CVector {
    if pos == 0 {
        return v.clone();
    }
    let tail = pow(f, k - 1 - pos);
    let pre = pow(f, pos);
    let fk = pow(f, k);
    let fk1 = pow(f, k - 1);
    let mut out = CVector::zeros(v.len());
    for s in 0..d {
        for p in 0..pre {
            for x in 0..f {
                for t in 0..tail {
                    let src = s * fk + p * f * tail + x * tail + t;
                    let dst = s * fk + x * fk1 + p * tail + t;
                    out[dst] = v[src];
                }
            }
        }
    }
    out
}

/// Inverse of [`move_to_front`].
pub fn move_from_front(u: &CVector, d: usize, f: usize, k: usize, pos: usize) -> CVector {
    if pos == 0 {
        return u.clone();
    }
    let tail = pow(f, k - 1 - pos);
    let pre = pow(f, pos);
    let fk = pow(f, k);
    let fk1 = pow(f, k - 1);
    let mut out = CVector::zeros(u.len());
    for s in 0..d {
        for p in 0..pre {
            for x in 0..f {
                for t in 0..tail {
                    let dst = s * fk + p * f * tail + x * tail + t;
                    let src = s * fk + x * fk1 + p * tail + t;
                    out[dst] = u[src];
                }
            }
        }
    }
    out
}

/// Views a vector as a row-major matrix with `rows` rows.
fn as_rows(v: &CVector, rows: usize) -> CMatrix {
    let cols = v.len() / rows;
    CMatrix::from_row_slice(rows, cols, v.as_slice())
}

fn flatten_rows(m: &CMatrix) -> CVector {
    let mut out = CVector::zeros(m.nrows() * m.ncols());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out[r * m.ncols() + c] = m[(r, c)];
        }
    }
    out
}

/// Applies `op` (a `df × df` matrix on `system ⊗ fiber`) to the point at `pos`.
pub fn apply_local(v: &CVector, op: &CMatrix, d: usize, f: usize, k: usize, pos: usize) -> CVector {
    let u = move_to_front(v, d, f, k, pos);
    let out = op * as_rows(&u, d * f);
    move_from_front(&flatten_rows(&out), d, f, k, pos)
}

/// Applies a system-only operator `d × d`.
pub fn apply_system(v: &CVector, op: &CMatrix, d: usize) -> CVector {
    flatten_rows(&(op * as_rows(v, d)))
}

/// Adds a new point at `pos` of a `(k+1)`-point value, using `col: df × d`.
pub fn create_at(v: &CVector, col: &CMatrix, d: usize, f: usize, k: usize, pos: usize) -> CVector {
    let out = col * as_rows(v, d);
    move_from_front(&flatten_rows(&out), d, f, k + 1, pos)
}

/// Removes the point at `pos` of a `k`-point value, using `row: d × df`.
pub fn annihilate_at(v: &CVector, row: &CMatrix, d: usize, f: usize, k: usize, pos: usize) -> CVector {
    let u = move_to_front(v, d, f, k, pos);
    flatten_rows(&(row * as_rows(&u, d * f)))
}

/// `ψ ⊗ k₁ ⊗ … ⊗ k_m`.
pub fn product_value(psi: &CVector, factors: &[&CVector]) -> CVector {
    let mut acc = psi.clone();
    for f in factors {
        acc = acc.kronecker(*f);
    }
    acc
}

/// Full matrix of a local operator at `pos` on a `k`-point value.
pub fn lift_local(op: &CMatrix, d: usize, f: usize, k: usize, pos: usize) -> CMatrix {
    let n = d * pow(f, k);
    let mut out = CMatrix::zeros(n, n);
    let mut e = CVector::from_element(n, ZERO);
    for c in 0..n {
        e[c] = crate::linalg::ONE;
        out.set_column(c, &apply_local(&e, op, d, f, k, pos));
        e[c] = ZERO;
    }
    out
}

/// Decomposes a flat index into `(s, [p₁, …, p_k])`.
pub fn digits(idx: usize, d: usize, f: usize, k: usize) -> (usize, Vec<usize>) {
    let fk = pow(f, k);
    let s = idx / fk;
    debug_assert!(s < d);
    let mut rest = idx % fk;
    let mut ps = vec![0; k];
    for i in (0..k).rev() {
        ps[i] = rest % f;
        rest /= f;
    }
    (s, ps)
}

pub fn compose_index(s: usize, ps: &[usize], f: usize) -> usize {
    let mut idx = s;
    for &p in ps {
        idx = idx * f + p;
    }
    idx
}
