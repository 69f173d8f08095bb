//! Linear algebra over Z/p^W with explicit precision tracking.
//!
//! Every matrix carries `valid`, the number of p-adic digits of each entry
//! still certified exact.  Smith normal form treats entries of valuation
//! >= `valid` as indistinguishable from zero and reports those elementary
//! divisors as `None`.  Solving a linear system divides by the elementary
//! divisors of the coefficient matrix, so the solution loses as many digits
//! as the largest divisor valuation; the ledger records that.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::padic::{WittRing, WittScalar};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PadicMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<BigUint>,
    pub valid: u32,
}

impl PadicMatrix {
    pub fn zeros(rows: usize, cols: usize, valid: u32) -> PadicMatrix {
        PadicMatrix {
            rows,
            cols,
            data: vec![BigUint::zero(); rows * cols],
            valid,
        }
    }

    pub fn identity(n: usize, valid: u32) -> PadicMatrix {
        let mut m = PadicMatrix::zeros(n, n, valid);
        for i in 0..n {
            m.data[i * n + i] = BigUint::one();
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> &BigUint {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigUint) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> PadicMatrix {
        let mut t = PadicMatrix::zeros(self.cols, self.rows, self.valid);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j).clone();
            }
        }
        t
    }

    /// Stack vertically: [self; other].
    pub fn vstack(&self, other: &PadicMatrix) -> PadicMatrix {
        assert_eq!(self.cols, other.cols);
        let mut m = PadicMatrix::zeros(
            self.rows + other.rows,
            self.cols,
            self.valid.min(other.valid),
        );
        m.data[..self.data.len()].clone_from_slice(&self.data);
        m.data[self.data.len()..].clone_from_slice(&other.data);
        m
    }

    /// Concatenate horizontally: [self | other].
    pub fn hstack(&self, other: &PadicMatrix) -> PadicMatrix {
        assert_eq!(self.rows, other.rows);
        let mut m = PadicMatrix::zeros(
            self.rows,
            self.cols + other.cols,
            self.valid.min(other.valid),
        );
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.data[i * m.cols + j] = self.get(i, j).clone();
            }
            for j in 0..other.cols {
                m.data[i * m.cols + self.cols + j] = other.get(i, j).clone();
            }
        }
        m
    }
}

pub fn mat_mul(ring: &WittRing, a: &PadicMatrix, b: &PadicMatrix) -> PadicMatrix {
    assert_eq!(a.cols, b.rows);
    let mut m = PadicMatrix::zeros(a.rows, b.cols, a.valid.min(b.valid));
    for i in 0..a.rows {
        for t in 0..a.cols {
            let x = a.get(i, t);
            if x.is_zero() {
                continue;
            }
            for j in 0..b.cols {
                let y = b.get(t, j);
                if y.is_zero() {
                    continue;
                }
                let idx = i * m.cols + j;
                m.data[idx] = (&m.data[idx] + x * y) % &ring.modulus;
            }
        }
    }
    m
}

pub fn mat_sub(ring: &WittRing, a: &PadicMatrix, b: &PadicMatrix) -> PadicMatrix {
    assert_eq!((a.rows, a.cols), (b.rows, b.cols));
    let mut m = PadicMatrix::zeros(a.rows, a.cols, a.valid.min(b.valid));
    for (idx, v) in m.data.iter_mut().enumerate() {
        *v = (&a.data[idx] + &ring.modulus - &b.data[idx] % &ring.modulus) % &ring.modulus;
    }
    m
}

pub fn mat_neg(ring: &WittRing, a: &PadicMatrix) -> PadicMatrix {
    let z = PadicMatrix::zeros(a.rows, a.cols, a.valid);
    mat_sub(ring, &z, a)
}

/// Valuation of a single residue, capped at the ring precision.
pub fn entry_valuation(ring: &WittRing, v: &BigUint) -> u32 {
    if v.is_zero() {
        return ring.precision;
    }
    let mut rem = v.clone();
    let mut val = 0u32;
    while val < ring.precision {
        let (q, r) = rem.div_rem(&ring.p);
        if !r.is_zero() {
            break;
        }
        rem = q;
        val += 1;
    }
    val
}

#[derive(Debug, Clone)]
pub struct SnfResult {
    /// Valuations of the elementary divisors, sorted non-decreasing;
    /// `None` marks divisors indistinguishable from zero at `valid` digits.
    pub divisors: Vec<Option<u32>>,
    pub d: PadicMatrix,
    pub u: PadicMatrix,
    pub v: PadicMatrix,
    pub valid: u32,
}

impl SnfResult {
    pub fn max_finite_divisor(&self) -> u32 {
        self.divisors.iter().flatten().copied().max().unwrap_or(0)
    }

    pub fn all_finite(&self) -> bool {
        self.divisors.iter().all(|d| d.is_some())
    }
}

/// Smith normal form over Z/p^W: returns U, V invertible with U M V = D
/// diagonal with entries p^{a_1} | p^{a_2} | ...  Pivots are chosen with
/// minimal valuation, ties broken in row-major order, which makes the
/// result deterministic.
pub fn smith(ring: &WittRing, mat: &PadicMatrix) -> Result<SnfResult> {
    let mut m = mat.clone();
    let r = m.rows;
    let c = m.cols;
    let mut u = PadicMatrix::identity(r, mat.valid);
    let mut v = PadicMatrix::identity(c, mat.valid);
    let k = r.min(c);
    let mut divisors: Vec<Option<u32>> = vec![None; k];

    for t in 0..k {
        // Find the minimal-valuation pivot in the trailing submatrix.
        let mut best: Option<(u32, usize, usize)> = None;
        for i in t..r {
            for j in t..c {
                let val = entry_valuation(ring, m.get(i, j));
                if val >= mat.valid {
                    continue;
                }
                if best.map(|(bv, _, _)| val < bv).unwrap_or(true) {
                    best = Some((val, i, j));
                }
            }
        }
        let Some((pv, pi, pj)) = best else {
            break;
        };
        swap_rows(&mut m, t, pi);
        swap_rows(&mut u, t, pi);
        swap_cols(&mut m, t, pj);
        swap_cols(&mut v, t, pj);

        // Normalize the pivot to exactly p^pv.
        let p_pow = ring.p.pow(pv);
        let unit = m.get(t, t) / &p_pow;
        let unit_inv = invert_residue(ring, &unit)?;
        scale_row(ring, &mut m, t, &unit_inv);
        scale_row(ring, &mut u, t, &unit_inv);

        for i in t + 1..r {
            let x = m.get(i, t).clone();
            if x.is_zero() {
                continue;
            }
            debug_assert!(entry_valuation(ring, &x) >= pv);
            let factor = &x / &p_pow;
            row_sub(ring, &mut m, i, t, &factor);
            row_sub(ring, &mut u, i, t, &factor);
        }
        for j in t + 1..c {
            let x = m.get(t, j).clone();
            if x.is_zero() {
                continue;
            }
            let factor = &x / &p_pow;
            col_sub(ring, &mut m, j, t, &factor);
            col_sub(ring, &mut v, j, t, &factor);
        }
        divisors[t] = Some(pv);
    }
    Ok(SnfResult {
        divisors,
        d: m,
        u,
        v,
        valid: mat.valid,
    })
}

fn swap_rows(m: &mut PadicMatrix, a: usize, b: usize) {
    if a == b {
        return;
    }
    for j in 0..m.cols {
        m.data.swap(a * m.cols + j, b * m.cols + j);
    }
}

fn swap_cols(m: &mut PadicMatrix, a: usize, b: usize) {
    if a == b {
        return;
    }
    for i in 0..m.rows {
        m.data.swap(i * m.cols + a, i * m.cols + b);
    }
}

fn scale_row(ring: &WittRing, m: &mut PadicMatrix, i: usize, c: &BigUint) {
    for j in 0..m.cols {
        let idx = i * m.cols + j;
        m.data[idx] = (&m.data[idx] * c) % &ring.modulus;
    }
}

/// row_i -= factor * row_t
fn row_sub(ring: &WittRing, m: &mut PadicMatrix, i: usize, t: usize, factor: &BigUint) {
    for j in 0..m.cols {
        let sub = (factor * &m.data[t * m.cols + j]) % &ring.modulus;
        let idx = i * m.cols + j;
        m.data[idx] = (&m.data[idx] + &ring.modulus - sub) % &ring.modulus;
    }
}

/// col_j -= factor * col_t
fn col_sub(ring: &WittRing, m: &mut PadicMatrix, j: usize, t: usize, factor: &BigUint) {
    for i in 0..m.rows {
        let sub = (factor * &m.data[i * m.cols + t]) % &ring.modulus;
        let idx = i * m.cols + j;
        m.data[idx] = (&m.data[idx] + &ring.modulus - sub) % &ring.modulus;
    }
}

fn invert_residue(ring: &WittRing, v: &BigUint) -> Result<BigUint> {
    // Reuse the scalar machinery: a unit in Z/p^W.
    let mut s = ring.zero();
    s.coeffs[0] = v % &ring.modulus;
    let inv = ring.invert_unit(&s)?;
    Ok(inv.coeffs[0].clone())
}

/// Solve A X = B.  Requires all elementary divisors of A to be finite at
/// the current precision; the solution is certified to
/// min(valid_A, valid_B) - max divisor valuation digits.
pub fn solve_left(ring: &WittRing, a: &PadicMatrix, b: &PadicMatrix) -> Result<PadicMatrix> {
    assert_eq!(a.rows, b.rows);
    let snf = smith(ring, a)?;
    if !snf.all_finite() {
        // The structural maps solved against here are nonsingular over Z_p,
        // so a pivot indistinguishable from zero means the working precision
        // has been consumed, not that the system is genuinely singular.
        return Err(Error::PrecisionExhausted {
            exponent: a.valid,
            valid: a.valid,
        });
    }
    let loss = snf.max_finite_divisor();
    let new_valid = a.valid.min(b.valid).saturating_sub(loss);
    if new_valid == 0 {
        return Err(Error::PrecisionExhausted {
            exponent: loss,
            valid: a.valid.min(b.valid),
        });
    }
    let c = mat_mul(ring, &snf.u, b);
    let mut y = PadicMatrix::zeros(a.cols, b.cols, new_valid);
    for (j, dv) in snf.divisors.iter().enumerate() {
        let aj = dv.expect("checked finite");
        let p_pow = ring.p.pow(aj);
        for l in 0..b.cols {
            let num = c.get(j, l);
            let (q, r) = num.div_rem(&p_pow);
            if !r.is_zero() {
                return Err(Error::NotIntegral);
            }
            y.set(j, l, q);
        }
    }
    // Overdetermined rows must vanish to working precision.
    for j in snf.divisors.len()..a.rows {
        for l in 0..b.cols {
            if entry_valuation(ring, c.get(j, l)) < new_valid {
                return Err(Error::NotIntegral);
            }
        }
    }
    Ok(mat_mul(ring, &snf.v, &y))
}

/// Solve X A = B via transposition.
pub fn solve_right(ring: &WittRing, a: &PadicMatrix, b: &PadicMatrix) -> Result<PadicMatrix> {
    Ok(solve_left(ring, &a.transpose(), &b.transpose())?.transpose())
}

/// Sum of the elementary divisor valuations (valuation of the determinant
/// up to units, for a square matrix of full rank).
pub fn cokernel_valuation_sum(ring: &WittRing, m: &PadicMatrix) -> Result<u64> {
    let snf = smith(ring, m)?;
    let mut sum = 0u64;
    for d in &snf.divisors {
        match d {
            Some(v) => sum += *v as u64,
            None => {
                return Err(Error::CheckFailed(
                    "elementary divisor indistinguishable from zero".into(),
                ))
            }
        }
    }
    Ok(sum)
}

/// Expand a matrix over W(F_q) to a matrix over Z_p in the basis
/// 1, x, ..., x^{f-1}.  For a W(F_q)-linear map the (t,s) entry c becomes
/// the f x f matrix of multiplication by c; for a sigma-semilinear map the
/// source basis column x^d is sent through sigma first, so the block column
/// is multiplication by sigma(x)^d c.
pub fn linearize(
    ring: &WittRing,
    wmat: &[Vec<WittScalar>],
    semilinear: bool,
    valid: u32,
) -> PadicMatrix {
    let t_rows = wmat.len();
    let s_cols = if t_rows > 0 { wmat[0].len() } else { 0 };
    let f = ring.f;
    let mut out = PadicMatrix::zeros(t_rows * f, s_cols * f, valid);
    // Images of the source basis powers x^d.
    let x = ring.gen();
    let base = if semilinear { ring.sigma(&x) } else { x };
    let mut pows = Vec::with_capacity(f);
    let mut acc = ring.one();
    for _ in 0..f {
        pows.push(acc.clone());
        acc = ring.mul(&acc, &base);
    }
    for (t, row) in wmat.iter().enumerate() {
        for (s, c) in row.iter().enumerate() {
            for (d, pw) in pows.iter().enumerate() {
                let col_scalar = ring.mul(pw, c);
                for dd in 0..f {
                    out.set(t * f + dd, s * f + d, col_scalar.coeffs[dd].clone());
                }
            }
        }
    }
    out
}
