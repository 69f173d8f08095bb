//! The top-level pipeline: precision planning, assembly of the two-term
//! syntomic complex syn^0/syn^1, elementary-divisor extraction, and the
//! K-group report with certified precision.

use serde::{Deserialize, Serialize};

use crate::descent::{
    basis_index, expand_in_basis, nabla_ok, nabla_r, nygaard_nabla, reduction_matrices, unit_wu,
    unit_wv, DescentContext,
};
use crate::envelope::{basis_nygaard, basis_plain, reduce, Element, Monomial};
use crate::linalg::{
    cokernel_valuation_sum, entry_valuation, linearize, mat_mul, mat_neg, mat_sub, smith,
    solve_right, PadicMatrix,
};
use crate::padic::{RingParams, WittRing, WittScalar};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecisionPlan {
    /// Digits sufficient to resolve the cohomology (its exponent bound).
    pub target: u32,
    /// Digits to compute with, covering all tracked losses.
    pub working: u32,
}

/// epsilon(i, j) = 1 iff z_0^j times the Nygaard generator contributes an
/// extra digit, which inside [1, in-1] happens exactly when n does not
/// divide j.
pub fn epsilon(n: u32, j: u64) -> u32 {
    if j % n as u64 == 0 {
        0
    } else {
        1
    }
}

/// v_p of {j, n} = n if n | j, else j.
pub fn vp_brace(p: u64, n: u32, j: u64) -> u32 {
    let t = if j % n as u64 == 0 { n as u64 } else { j };
    vp_u64(p, t)
}

pub fn vp_u64(p: u64, mut t: u64) -> u32 {
    let mut v = 0;
    while t > 0 && t % p == 0 {
        t /= p;
        v += 1;
    }
    v
}

/// Legendre: v_p(s!).
pub fn vp_factorial(p: u64, s: u64) -> u64 {
    let mut sum = 0;
    let mut q = p;
    while q <= s {
        sum += s / q;
        match q.checked_mul(p) {
            Some(next) => q = next,
            None => break,
        }
    }
    sum
}

pub fn precision_plan(p: u64, n: u32, i: u64) -> PrecisionPlan {
    let b = i * n as u64 - 1;
    let mut target = 0u64;
    for j in 1..=b {
        target += epsilon(n, j) as u64 + vp_brace(p, n, j) as u64;
    }
    let mut log_term = 0u64;
    let mut q = p;
    while q <= b {
        log_term += 1;
        q = q.saturating_mul(p);
    }
    let mut factorial_term = 0u64;
    for s in p..i {
        factorial_term += n as u64 * vp_factorial(p, s);
    }
    let quadratic_term = n as u64 * (i * (i - 1) / 2);
    // Floor: the ledger loses digits to the envelope generator count, the
    // largest canonical-map divisor (<= i), and the Nygaard divisors
    // (<= target), so small twists need more than the asymptotic estimate.
    let floor = 2 * target + i + log_term + 4;
    let working = (2 * target + log_term + factorial_term + quadratic_term)
        .max(floor)
        .max(2);
    PrecisionPlan {
        target: target as u32,
        working: working as u32,
    }
}

/// The assembled syntomic square with every intermediate matrix retained
/// for cross-checking.
pub struct SyntomicSquare {
    pub syn0: PadicMatrix,
    pub syn1: PadicMatrix,
    pub can_src: PadicMatrix,
    pub can_tgt: PadicMatrix,
    pub phi: PadicMatrix,
    pub red: PadicMatrix,
    pub red_nabla: PadicMatrix,
    pub nabla_ok: PadicMatrix,
    pub nabla_r: PadicMatrix,
    pub nyg_nabla: PadicMatrix,
}

/// Matrix of can on a Nygaard basis window: d-tilde becomes E(z_0).
fn can_matrix(ctx: &DescentContext, twist: u64, a: u64, b: u64) -> Result<Vec<Vec<WittScalar>>> {
    let spec = &ctx.spec_q;
    let source = basis_nygaard(spec, twist, a, b)?;
    let target = basis_plain(spec, a, b)?;
    let idx = basis_index(&target);
    let m = target.len();
    let mut rows = vec![vec![ctx.ring.zero(); source.len()]; m];
    for (s, nym) in source.iter().enumerate() {
        let mut mono = Element::zero();
        spec.add_term(&mut mono, nym.mono.clone(), ctx.ring.one());
        let img = reduce(
            spec,
            &ctx.tab_q,
            &spec.mul(&spec.pow(&ctx.tab_q.d, nym.j), &mono),
        )?;
        let mut col = vec![ctx.ring.zero(); m];
        expand_in_basis(spec, &img, &idx, b, &mut col)?;
        for (r, c) in col.into_iter().enumerate() {
            rows[r][s] = c;
        }
    }
    Ok(rows)
}

/// Matrix of the divided Frobenius phi_i on the Nygaard basis of N^{>= i}:
/// phi_i(dtilde^{i - sum} z_0^k prod f_u^{e_u}) = z_0^{pk} prod
/// phi_{p^u}(f_u)^{e_u}.  The map is sigma-semilinear.
fn phi_matrix(ctx: &DescentContext) -> Result<Vec<Vec<WittScalar>>> {
    let spec = &ctx.spec_q;
    let p = ctx.ring.p_u64 as u32;
    let source = basis_nygaard(spec, ctx.i, 1, ctx.bound)?;
    let target = basis_plain(spec, 1, ctx.bound)?;
    let idx = basis_index(&target);
    let m = target.len();
    let mut rows = vec![vec![ctx.ring.zero(); source.len()]; m];
    for (s, nym) in source.iter().enumerate() {
        let mut img = spec.z_pow(nym.mono.k * p);
        for (u, &e) in nym.mono.exps.iter().enumerate() {
            if e > 0 {
                img = spec.mul(&img, &spec.pow(&ctx.tab_q.phi_div[u], e as u64));
            }
        }
        let img = reduce(spec, &ctx.tab_q, &img)?;
        let mut col = vec![ctx.ring.zero(); m];
        expand_in_basis(spec, &img, &idx, ctx.bound, &mut col)?;
        for (r, c) in col.into_iter().enumerate() {
            rows[r][s] = c;
        }
    }
    Ok(rows)
}

/// The residual of a matrix identity must vanish to the stated precision.
fn assert_residual(ring: &WittRing, lhs: &PadicMatrix, rhs: &PadicMatrix, digits: u32, what: &str) -> Result<()> {
    let diff = mat_sub(ring, lhs, rhs);
    for v in &diff.data {
        if entry_valuation(ring, v) < digits {
            return Err(Error::CheckFailed(format!(
                "{what} fails at {digits} digits"
            )));
        }
    }
    Ok(())
}

/// Build syn^0 and syn^1 at the ring's working precision, running the
/// structural cross-checks (commuting squares, triangularity, and the
/// closed-form elementary divisor sums).
pub fn assemble(ctx: &DescentContext) -> Result<SyntomicSquare> {
    let ring = &ctx.ring;
    let v0 = ctx.tables_valid();
    let f = ring.f;
    let n = ctx.n as u64;
    let b = ctx.bound;

    let wu = unit_wu(ctx)?;
    let wv = unit_wv(ctx, &wu)?;
    let nab_ok_w = nabla_ok(ctx, &wv)?;
    let (red_w, red_nabla_w) = reduction_matrices(ctx)?;

    // nabla shifts weight by -1 and red preserves weight, and the quotient
    // basis has exactly one monomial per weight, so both matrices are
    // block-triangular against the weight grading.
    for (r, row) in nab_ok_w.iter().enumerate() {
        for (km1, c) in row.iter().enumerate() {
            if r + 1 < km1 + 1 && !ring.is_zero(c) {
                return Err(Error::CheckFailed(
                    "nabla_OK raises weight; triangularity broken".into(),
                ));
            }
        }
    }
    for (r, row) in red_w.iter().enumerate() {
        for (km1, c) in row.iter().enumerate() {
            if r < km1 && !ring.is_zero(c) {
                return Err(Error::CheckFailed(
                    "red lowers weight; triangularity broken".into(),
                ));
            }
        }
    }

    let nab_ok_lin = linearize(ring, &nab_ok_w, false, v0);
    let red_lin = linearize(ring, &red_w, false, v0);
    let red_nabla_lin = linearize(ring, &red_nabla_w, false, v0);

    let can_src_lin = linearize(ring, &can_matrix(ctx, ctx.i, 1, b)?, false, v0);
    let can_tgt_lin = linearize(ring, &can_matrix(ctx, ctx.i - 1, 0, b - 1)?, false, v0);
    let phi_lin = linearize(ring, &phi_matrix(ctx)?, true, v0);

    let nabla_r_lin = nabla_r(ring, &nab_ok_lin, &red_lin, &red_nabla_lin)?;
    assert_residual(
        ring,
        &mat_mul(ring, &nabla_r_lin, &red_lin),
        &mat_mul(ring, &red_nabla_lin, &nab_ok_lin),
        nabla_r_lin.valid,
        "commuting square red_nabla . nabla_OK = nabla_R . red",
    )?;

    let nyg_lin = nygaard_nabla(ring, &nabla_r_lin, &can_src_lin, &can_tgt_lin)?;
    assert_residual(
        ring,
        &mat_mul(ring, &can_tgt_lin, &nyg_lin),
        &mat_mul(ring, &nabla_r_lin, &can_src_lin),
        nyg_lin.valid,
        "commuting square can . N-nabla = nabla_R . can",
    )?;

    let can_phi = mat_sub(ring, &can_src_lin, &phi_lin);
    let can_phi_nabla = solve_right(ring, &nyg_lin, &mat_mul(ring, &nabla_r_lin, &can_phi))?;

    let syn0 = can_phi.vstack(&nyg_lin);
    let syn1 = nabla_r_lin.hstack(&mat_neg(ring, &can_phi_nabla));
    // d^1 . d^0 = 0.
    let comp = mat_mul(ring, &syn1, &syn0);
    let digits = syn0.valid.min(syn1.valid);
    for v in &comp.data {
        if entry_valuation(ring, v) < digits {
            return Err(Error::CheckFailed("syn1 . syn0 != 0".into()));
        }
    }

    // Closed-form elementary divisor sums for the four structural maps.
    let i = ctx.i;
    let sums: [(&PadicMatrix, u64, &str); 5] = [
        (
            &can_src_lin,
            (1..=b).map(|j| i - j / n).sum::<u64>(),
            "can",
        ),
        (
            &red_lin,
            (1..=b).map(|j| vp_factorial(ring.p_u64, j / n)).sum(),
            "red",
        ),
        (
            &nabla_r_lin,
            (1..=b).map(|j| vp_brace(ring.p_u64, ctx.n, j) as u64).sum(),
            "nabla_R",
        ),
        (
            &nab_ok_lin,
            (1..=b).map(|j| vp_u64(ring.p_u64, j) as u64).sum(),
            "nabla_OK",
        ),
        (
            &nyg_lin,
            (1..=b)
                .map(|j| (epsilon(ctx.n, j) + vp_brace(ring.p_u64, ctx.n, j)) as u64)
                .sum(),
            "N-nabla",
        ),
    ];
    for (mat, expect, name) in sums {
        let got = cokernel_valuation_sum(ring, mat)?;
        if got != f as u64 * expect {
            return Err(Error::CheckFailed(format!(
                "divisor sum of {name}: got {got}, closed form {}",
                f as u64 * expect
            )));
        }
    }

    Ok(SyntomicSquare {
        syn0,
        syn1,
        can_src: can_src_lin,
        can_tgt: can_tgt_lin,
        phi: phi_lin,
        red: red_lin,
        red_nabla: red_nabla_lin,
        nabla_ok: nab_ok_lin,
        nabla_r: nabla_r_lin,
        nyg_nabla: nyg_lin,
    })
}

/// Extract (h1, h2): the nonzero elementary divisor exponents of syn^0 and
/// syn^1.  H^0 = 0 is asserted (syn^0 injective); every reported exponent
/// must be strictly below the matrix's certified digits.
pub fn cohomology(
    ring: &WittRing,
    square: &SyntomicSquare,
    target: u32,
) -> Result<(Vec<u32>, Vec<u32>)> {
    let m = square.syn0.cols;
    let snf0 = smith(ring, &square.syn0)?;
    if !snf0.all_finite() {
        // syn^0 has a kernel at this precision.  The cohomology is
        // annihilated by p^target, so once valid > target a divisor that is
        // still indistinguishable from zero really is zero: H^0 != 0.
        if square.syn0.valid > target {
            return Err(Error::H0Nonzero);
        }
        return Err(Error::PrecisionExhausted {
            exponent: square.syn0.valid,
            valid: square.syn0.valid,
        });
    }
    let mut h1 = Vec::new();
    for d in snf0.divisors.iter().flatten() {
        if *d >= square.syn0.valid {
            return Err(Error::PrecisionExhausted {
                exponent: *d,
                valid: square.syn0.valid,
            });
        }
        if *d > 0 {
            h1.push(*d);
        }
    }
    let snf1 = smith(ring, &square.syn1)?;
    if !snf1.all_finite() {
        return Err(Error::PrecisionExhausted {
            exponent: square.syn1.valid,
            valid: square.syn1.valid,
        });
    }
    let mut h2 = Vec::new();
    for d in snf1.divisors.iter().flatten() {
        if *d >= square.syn1.valid {
            return Err(Error::PrecisionExhausted {
                exponent: *d,
                valid: square.syn1.valid,
            });
        }
        if *d > 0 {
            h2.push(*d);
        }
    }
    debug_assert_eq!(snf1.divisors.len(), m);
    Ok((h1, h2))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct PrecisionInfo {
    pub target: u32,
    pub working: u32,
    pub valid: u32,
}

/// One computed K-group pair: K_{2i-1} and K_{2i-2} of O_K/pi^n, p-primary
/// parts as sorted exponent lists.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct KGroupResult {
    pub p: u64,
    pub f: usize,
    pub n: u32,
    pub i: u64,
    pub eisenstein: Vec<i64>,
    pub h1: Vec<u32>,
    pub h2: Vec<u32>,
    pub precision: PrecisionInfo,
    pub millis: u64,
}

#[derive(Debug, Clone)]
pub struct KGroupInput {
    pub p: u64,
    pub f: usize,
    pub n: u32,
    /// Upper coefficients c_1, ..., c_e of the Eisenstein polynomial;
    /// the constant term is always p.  Default [1] gives E = z + p.
    pub eisenstein: Vec<i64>,
    pub i: u64,
    pub precision_override: Option<u32>,
    pub adaptive: bool,
    pub h_lift: Option<Vec<u64>>,
}

impl KGroupInput {
    pub fn unramified(p: u64, n: u32, i: u64) -> KGroupInput {
        KGroupInput {
            p,
            f: 1,
            n,
            eisenstein: vec![1],
            i,
            precision_override: None,
            adaptive: false,
            h_lift: None,
        }
    }
}

/// The Euler characteristic identity: sum(h1) - sum(h2) = f * i * (n-1).
pub fn angeltveit_check(res: &KGroupResult) -> bool {
    let s1: i64 = res.h1.iter().map(|&v| v as i64).sum();
    let s2: i64 = res.h2.iter().map(|&v| v as i64).sum();
    s1 - s2 == (res.f as i64) * (res.i as i64) * (res.n as i64 - 1)
}

/// Smallest i with K_{2i-2}(O_K/pi^n; Z_p) = 0 guaranteed, i.e. the least i
/// with i - 1 >= (p/(p-1)) (p [j]_p - p^j j + p^j n / e) for j = ceil(n/e).
pub fn even_vanishing_threshold(p: u64, e: u32, n: u32) -> u64 {
    let e = e as u64;
    let n = n as u64;
    let j = (n + e - 1) / e;
    let pj = p.pow(j as u32);
    let bracket = (pj - 1) / (p - 1);
    // bound = p ((p bracket - pj j) e + pj n) / ((p-1) e), as a rational.
    let num = (p as i128) * (((p * bracket) as i128 - (pj * j) as i128) * e as i128 + (pj * n) as i128);
    let den = ((p - 1) * e) as i128;
    // i - 1 >= num/den  <=>  i >= ceil(num/den) + 1.
    let ceil = if num <= 0 {
        0
    } else {
        ((num + den - 1) / den) as u64
    };
    ceil + 1
}

pub fn kgroups(input: &KGroupInput) -> Result<KGroupResult> {
    if input.n == 0 || input.i == 0 {
        return Err(Error::InvalidArgument("need n >= 1 and i >= 1".into()));
    }
    if input.eisenstein.is_empty() {
        return Err(Error::BadEisenstein("degree must be positive".into()));
    }
    let plan = precision_plan(input.p, input.n, input.i);
    let mut working = input.precision_override.unwrap_or(plan.working).max(2);
    let max_attempts = if input.adaptive { 4 } else { 1 };

    let mut last_err = None;
    for _ in 0..max_attempts {
        match kgroups_at(input, plan, working) {
            Ok(res) => return Ok(res),
            Err(e @ Error::PrecisionExhausted { .. }) => {
                last_err = Some(e);
                working *= 2;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or(Error::PrecisionTooSmall(working)))
}

fn kgroups_at(input: &KGroupInput, plan: PrecisionPlan, working: u32) -> Result<KGroupResult> {
    let start = std::time::Instant::now();
    let ring = WittRing::new(&RingParams {
        p: input.p,
        f: input.f,
        precision: working,
        h_lift: input.h_lift.clone(),
    })?;
    let m = input.i * input.n as u64 - 1;
    let (h1, h2, valid) = if m == 0 {
        (Vec::new(), Vec::new(), working)
    } else {
        let ctx = DescentContext::new(ring.clone(), input.n, &input.eisenstein, input.i)?;
        let square = assemble(&ctx)?;
        let (h1, h2) = cohomology(&ring, &square, plan.target)?;
        (h1, h2, square.syn0.valid.min(square.syn1.valid))
    };
    let res = KGroupResult {
        p: input.p,
        f: input.f,
        n: input.n,
        i: input.i,
        eisenstein: input.eisenstein.clone(),
        h1,
        h2,
        precision: PrecisionInfo {
            target: plan.target,
            working,
            valid,
        },
        millis: start.elapsed().as_millis() as u64,
    };
    if !angeltveit_check(&res) {
        return Err(Error::CheckFailed(format!(
            "Euler characteristic: sum h1 - sum h2 != f*i*(n-1) for i={}",
            res.i
        )));
    }
    Ok(res)
}

/// Normal-form basis of the quotient envelope, exposed for diagnostics.
pub fn quotient_basis(ctx: &DescentContext) -> Result<Vec<Monomial>> {
    basis_plain(&ctx.spec_q, 1, ctx.bound)
}

/// A cache key for one computed result.
pub fn job_key(input: &KGroupInput, working: u32) -> String {
    let eis: Vec<String> = input.eisenstein.iter().map(|c| c.to_string()).collect();
    format!(
        "p{}f{}n{}i{}e[{}]w{}",
        input.p,
        input.f,
        input.n,
        input.i,
        eis.join(","),
        working
    )
}



#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;

    #[test]
    fn epsilon_counts_non_multiples_of_n() {
        assert_eq!(epsilon(2, 1), 1);
        assert_eq!(epsilon(2, 2), 0);
        assert_eq!(epsilon(2, 3), 1);
        assert_eq!(epsilon(3, 6), 0);
        assert_eq!(epsilon(3, 7), 1);
    }

    #[test]
    fn brace_valuation_cases() {
        // v_p{j, n} = v_p(n) when n | j, else v_p(j).
        assert_eq!(vp_brace(2, 2, 2), 1);
        assert_eq!(vp_brace(2, 2, 4), 1);
        assert_eq!(vp_brace(2, 2, 3), 0);
        assert_eq!(vp_brace(2, 2, 6), 1);
        assert_eq!(vp_brace(3, 2, 9), 2);
        assert_eq!(vp_brace(3, 3, 6), 1);
    }

    #[test]
    fn legendre_factorial_valuation() {
        assert_eq!(vp_factorial(2, 10), 8);
        assert_eq!(vp_factorial(3, 10), 4);
        assert_eq!(vp_factorial(5, 4), 0);
        assert_eq!(vp_factorial(2, 1), 0);
        // Against a direct product for small s.
        for s in 1..=40u64 {
            let direct: u32 = (1..=s).map(|t| vp_u64(3, t)).sum();
            assert_eq!(vp_factorial(3, s), direct as u64);
        }
    }

    #[test]
    fn precision_plan_small_twist() {
        let plan = precision_plan(2, 2, 2);
        assert_eq!(plan.target, 3);
        assert!(plan.working >= 2 * plan.target + 3);
        // The target is the sum of epsilon + brace valuations over the
        // weight window, recomputed independently here.
        let b = 2 * 2 - 1;
        let expect: u32 = (1..=b).map(|j| epsilon(2, j) + vp_brace(2, 2, j)).sum();
        assert_eq!(plan.target, expect);
    }

    #[test]
    fn precision_plan_is_monotone_in_twist() {
        let mut prev = 0;
        for i in 1..=12 {
            let plan = precision_plan(2, 2, i);
            assert!(plan.target >= prev);
            assert!(plan.working >= plan.target);
            prev = plan.target;
        }
    }

    #[test]
    fn even_vanishing_thresholds() {
        assert_eq!(even_vanishing_threshold(2, 1, 2), 13);
        assert_eq!(even_vanishing_threshold(3, 1, 2), 19);
        assert_eq!(even_vanishing_threshold(5, 1, 2), 39);
    }

    #[test]
    fn canonical_map_matrix_small_case() {
        // p = 2, n = 2, twist i = 2: the Nygaard window has three basis
        // monomials and can is lower triangular with these columns.
        let ring = WittRing::new(&RingParams {
            p: 2,
            f: 1,
            precision: 13,
            h_lift: None,
        })
        .unwrap();
        let ctx = DescentContext::new(ring.clone(), 2, &[1], 2).unwrap();
        let v = ctx.tables_valid();
        let m = can_matrix(&ctx, 2, 1, 3).unwrap();
        let expect: [[u64; 3]; 3] = [[4, 0, 0], [4, 2, 0], [1, 1, 2]];
        let md = BigUint::from(2u64).pow(v);
        for (r, row) in m.iter().enumerate() {
            for (s, c) in row.iter().enumerate() {
                assert_eq!(
                    &c.coeffs[0] % &md,
                    BigUint::from(expect[r][s]),
                    "entry ({r},{s})"
                );
            }
        }
    }

    #[test]
    fn assembled_square_satisfies_divisor_sums_and_composition() {
        // assemble() internally enforces d1 . d0 = 0, both commuting
        // squares, and all five closed-form divisor sums; reaching Ok is
        // the assertion.  Spot-check its output shape too.
        let ring = WittRing::new(&RingParams {
            p: 3,
            f: 1,
            precision: precision_plan(3, 2, 3).working,
            h_lift: None,
        })
        .unwrap();
        let ctx = DescentContext::new(ring, 2, &[1], 3).unwrap();
        let square = assemble(&ctx).unwrap();
        let m = square.syn0.cols;
        assert_eq!(square.syn0.rows, 2 * m);
        assert_eq!(square.syn1.rows, m);
        assert_eq!(square.syn1.cols, 2 * m);
    }

    #[test]
    fn kgroups_smallest_nontrivial_case() {
        // K_3(Z/4; Z_2) = Z/8, K_2(Z/4; Z_2) = Z/2.
        let res = kgroups(&KGroupInput::unramified(2, 2, 2)).unwrap();
        assert_eq!(res.h1, vec![3]);
        assert_eq!(res.h2, vec![1]);
        assert!(angeltveit_check(&res));
        assert!(res.precision.valid >= 1);
    }

    #[test]
    fn kgroups_rejects_degenerate_input() {
        assert!(kgroups(&KGroupInput::unramified(2, 0, 2)).is_err());
        assert!(kgroups(&KGroupInput::unramified(2, 2, 0)).is_err());
        let mut bad = KGroupInput::unramified(2, 2, 2);
        bad.eisenstein = vec![];
        assert!(kgroups(&bad).is_err());
    }

    #[test]
    fn euler_characteristic_identity() {
        let mk = |h1: Vec<u32>, h2: Vec<u32>, f: usize, n: u32, i: u64| KGroupResult {
            p: 2,
            f,
            n,
            i,
            eisenstein: vec![1],
            h1,
            h2,
            precision: PrecisionInfo {
                target: 0,
                working: 0,
                valid: 0,
            },
            millis: 0,
        };
        assert!(angeltveit_check(&mk(vec![3], vec![1], 1, 2, 2)));
        assert!(!angeltveit_check(&mk(vec![3], vec![], 1, 2, 2)));
        assert!(angeltveit_check(&mk(vec![1, 1], vec![], 2, 2, 1)));
        // n = 1: both sides zero.
        assert!(angeltveit_check(&mk(vec![], vec![], 1, 1, 5)));
    }

    #[test]
    fn job_key_is_stable_and_injective_on_fields() {
        let a = KGroupInput::unramified(2, 2, 3);
        assert_eq!(job_key(&a, 9), "p2f1n2i3e[1]w9");
        let mut b = a.clone();
        b.eisenstein = vec![0, 1];
        assert_ne!(job_key(&a, 9), job_key(&b, 9));
        assert_ne!(job_key(&a, 9), job_key(&a, 10));
    }
}
