//! Descent data: the change-of-orientation unit w(v), the connection map
//! nabla, and the reduction maps from the O_K envelope to the quotient
//! envelope.
//!
//! nabla is computed first for O_K, where it has an explicit description
//! through the two-variable envelope: the column of z_0^k is the
//! g_0-coefficient of w(v^i) (z_0+g_0)^k - z_0^k.  It then descends to the
//! quotient along the reduction maps, which are rational isomorphisms, via
//! the commuting square  nabla_R . red = red_nabla . nabla_OK.

use std::collections::BTreeMap;
use std::rc::Rc;

use crate::envelope::{
    basis_plain, build_tables, phi_apply, reduce, Element, EnvKind, EnvelopeSpec, Monomial,
    RelationTables,
};
use crate::linalg::{mat_mul, solve_left, solve_right, PadicMatrix};
use crate::padic::{WittRing, WittScalar};
use crate::{Error, Result};

/// Everything that depends only on (ring, n, E, i): the two truncated
/// envelopes with their relation tables.
pub struct DescentContext {
    pub ring: Rc<WittRing>,
    pub n: u32,
    pub i: u64,
    /// Weight bound B = i*n - 1.
    pub bound: u64,
    pub spec_q: EnvelopeSpec,
    pub tab_q: RelationTables,
    pub spec_g: EnvelopeSpec,
    pub tab_g: RelationTables,
}

impl DescentContext {
    pub fn new(ring: Rc<WittRing>, n: u32, eisenstein_upper: &[i64], i: u64) -> Result<DescentContext> {
        if i == 0 {
            return Err(Error::InvalidArgument("twist i must be positive".into()));
        }
        let bound = i * n as u64 - 1;
        let spec_q = EnvelopeSpec::new(
            ring.clone(),
            EnvKind::QuotientOneVar,
            n,
            eisenstein_upper,
            bound,
        )?;
        let tab_q = build_tables(&spec_q)?;
        let spec_g = EnvelopeSpec::new(ring.clone(), EnvKind::OkTwoVar, n, eisenstein_upper, bound)?;
        let tab_g = build_tables(&spec_g)?;
        Ok(DescentContext {
            ring,
            n,
            i,
            bound,
            spec_q,
            tab_q,
            spec_g,
            tab_g,
        })
    }

    /// Number of basis elements of the weight window [1, in-1] over W(F_q).
    pub fn width(&self) -> usize {
        self.bound as usize
    }

    /// Digits of the relation tables still certified.
    pub fn tables_valid(&self) -> u32 {
        self.tab_q.valid.min(self.tab_g.valid)
    }
}

/// w(u) = 1 + phi((E(z_1)-E(z_0))/(z_1-z_0)) phi_1(g_0), with z_1 = z_0+g_0.
pub fn unit_wu(ctx: &DescentContext) -> Result<Element> {
    let spec = &ctx.spec_g;
    // Difference quotient sum_m c_m sum_{t<m} z_0^t (z_0+g_0)^{m-1-t}; each
    // summand has weight m-1, so no truncation boundary is crossed.
    let z_plus_g = {
        let mut x = spec.z_pow(1);
        spec.add_term(&mut x, Monomial::gen(0), spec.ring.one());
        x
    };
    let mut diffquot = Element::zero();
    for (m, c) in spec.eisenstein.iter().enumerate().skip(1) {
        for t in 0..m {
            let part = spec.mul(
                &spec.z_pow(t as u32),
                &spec.pow(&z_plus_g, (m - 1 - t) as u64),
            );
            diffquot = spec.add(&diffquot, &spec.scale(&part, c));
        }
    }
    let phi_dq = phi_apply(spec, &ctx.tab_g, &diffquot)?;
    let phi1_g0 = ctx
        .tab_g
        .phi_div
        .first()
        .cloned()
        .unwrap_or_else(Element::zero);
    let prod = spec.mul(&phi_dq, &phi1_g0);
    reduce(spec, &ctx.tab_g, &spec.add(&spec.one(), &prod))
}

/// w(v) = prod_{r>=0} phi^r(w(u)), the fixed point of x = w(u) phi(x).
pub fn unit_wv(ctx: &DescentContext, wu: &Element) -> Result<Element> {
    let spec = &ctx.spec_g;
    let mut cap = 2usize;
    let p = ctx.ring.p_u64;
    let mut w = 1u64;
    while w <= ctx.bound {
        w *= p;
        cap += 1;
    }
    let mut x = wu.clone();
    for _ in 0..cap {
        let next = reduce(spec, &ctx.tab_g, &spec.mul(wu, &phi_apply(spec, &ctx.tab_g, &x)?))?;
        if next == x {
            return Ok(x);
        }
        x = next;
    }
    Err(Error::UnitNonConvergent)
}

/// The matrix of nabla for O_K over W(F_q): source basis z_0^k
/// (1 <= k <= in-1), target basis z_0^m (0 <= m <= in-2).  Entry (m, k-1) is
/// the g_0 z_0^m coefficient of w(v^i)(z_0+g_0)^k - z_0^k.
/// Binary exponentiation with a normal-form pass after every product, to
/// keep intermediate term counts at the size of the reduced basis.
fn reduced_pow(
    spec: &EnvelopeSpec,
    tab: &RelationTables,
    a: &Element,
    e: u64,
) -> Result<Element> {
    let mut acc = spec.one();
    let mut base = a.clone();
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc = reduce(spec, tab, &spec.mul(&acc, &base))?;
        }
        e >>= 1;
        if e > 0 {
            base = reduce(spec, tab, &spec.mul(&base, &base))?;
        }
    }
    Ok(acc)
}

pub fn nabla_ok(ctx: &DescentContext, wv: &Element) -> Result<Vec<Vec<WittScalar>>> {
    let spec = &ctx.spec_g;
    let m = ctx.width();
    let wvi = reduced_pow(spec, &ctx.tab_g, wv, ctx.i)?;
    let z_plus_g = {
        let mut x = spec.z_pow(1);
        spec.add_term(&mut x, Monomial::gen(0), spec.ring.one());
        x
    };
    let mut cols: Vec<Vec<WittScalar>> = vec![vec![ctx.ring.zero(); m]; m];
    // Accumulate w(v)^i (z_0 + g_0)^k one factor at a time; each step
    // multiplies by a two-term element, so the whole sweep stays linear in
    // the term count.
    let mut acc = wvi.clone();
    for k in 1..=m {
        acc = reduce(spec, &ctx.tab_g, &spec.mul(&acc, &z_plus_g))?;
        let img = spec.sub(&acc, &spec.z_pow(k as u32));
        for (mono, c) in &img.terms {
            if mono.exps.is_empty() {
                return Err(Error::CheckFailed(format!(
                    "nabla column {k} has a g-independent term z_0^{}",
                    mono.k
                )));
            }
            if mono.exps == [1] {
                let row = mono.k as usize;
                if row < m {
                    cols[k - 1][row] = c.clone();
                }
            }
        }
    }
    // Transpose into row-major target x source.
    let mut rows = vec![vec![ctx.ring.zero(); m]; m];
    for (j, col) in cols.iter().enumerate() {
        for (r, c) in col.iter().enumerate() {
            rows[r][j] = c.clone();
        }
    }
    Ok(rows)
}

/// Expand a reduced element in the given normal-form basis.  Monomials of
/// weight above `window_max` are projected away; any other monomial not in
/// the basis indicates a bug.
pub fn expand_in_basis(
    spec: &EnvelopeSpec,
    elem: &Element,
    index: &BTreeMap<Monomial, usize>,
    window_max: u64,
    out: &mut [WittScalar],
) -> Result<()> {
    for (mono, c) in &elem.terms {
        match index.get(mono) {
            Some(&r) => out[r] = c.clone(),
            None => {
                if spec.weight(mono) <= window_max {
                    return Err(Error::CheckFailed(format!(
                        "monomial of weight {} outside basis window",
                        spec.weight(mono)
                    )));
                }
            }
        }
    }
    Ok(())
}

pub fn basis_index(basis: &[Monomial]) -> BTreeMap<Monomial, usize> {
    basis
        .iter()
        .enumerate()
        .map(|(r, m)| (m.clone(), r))
        .collect()
}

/// The reduction maps red (window [1, in-1]) and red_nabla (window
/// [0, in-2], projecting away weight in-1): images of z_0^k in the quotient
/// envelope basis.
pub fn reduction_matrices(
    ctx: &DescentContext,
) -> Result<(Vec<Vec<WittScalar>>, Vec<Vec<WittScalar>>)> {
    let spec = &ctx.spec_q;
    let m = ctx.width();
    let hi = basis_plain(spec, 1, ctx.bound)?;
    let lo = basis_plain(spec, 0, ctx.bound - 1)?;
    let hi_idx = basis_index(&hi);
    let lo_idx = basis_index(&lo);

    let mut red = vec![vec![ctx.ring.zero(); m]; m];
    for k in 1..=m {
        let img = reduce(spec, &ctx.tab_q, &spec.z_pow(k as u32))?;
        let mut col = vec![ctx.ring.zero(); m];
        expand_in_basis(spec, &img, &hi_idx, ctx.bound, &mut col)?;
        for (r, c) in col.into_iter().enumerate() {
            red[r][k - 1] = c;
        }
    }
    let mut red_nabla = vec![vec![ctx.ring.zero(); m]; m];
    for k in 0..m {
        let img = reduce(spec, &ctx.tab_q, &spec.z_pow(k as u32))?;
        let mut col = vec![ctx.ring.zero(); m];
        expand_in_basis(spec, &img, &lo_idx, ctx.bound - 1, &mut col)?;
        for (r, c) in col.into_iter().enumerate() {
            red_nabla[r][k] = c;
        }
    }
    Ok((red, red_nabla))
}

/// nabla for the quotient: the unique X with X . red = red_nabla . nabla_OK.
pub fn nabla_r(
    ring: &WittRing,
    nabla_ok_lin: &PadicMatrix,
    red_lin: &PadicMatrix,
    red_nabla_lin: &PadicMatrix,
) -> Result<PadicMatrix> {
    let rhs = mat_mul(ring, red_nabla_lin, nabla_ok_lin);
    solve_right(ring, red_lin, &rhs)
}

/// nabla on the Nygaard filtration: the unique X with
/// can_target . X = nabla_R . can_source.
pub fn nygaard_nabla(
    ring: &WittRing,
    nabla_r_lin: &PadicMatrix,
    can_source: &PadicMatrix,
    can_target: &PadicMatrix,
) -> Result<PadicMatrix> {
    let rhs = mat_mul(ring, nabla_r_lin, can_source);
    solve_left(ring, can_target, &rhs)
}
