//! Simultaneous eigensystems of commuting operators.
//!
//! A random integer combination A of the operators is factored over the
//! coefficient field Q(ζ_m). For each irreducible factor g the kernel of g(A)
//! holds the systems whose A-eigenvalue is a root α of g; a Krylov basis
//! v, vA, … of one eigenvector turns every operator into a polynomial h in α.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arith::factor::factor;
use crate::arith::numtheory::{euler_phi, lcm};
use crate::arith::{squarefree_part, CycloElem, Field, Matrix, Poly, Rational};
use crate::dirichlet::DirichletChar;
use crate::error::{Error, Result};
use crate::qseries::QSeries;
use crate::spaces::ModularFormSpace;

use super::{check_commuting, HeckeMatrix, OpLabel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    HalfIntegral,
    Integral,
}

impl Serialize for Side {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(match self {
            Side::HalfIntegral => "half-integral",
            Side::Integral => "integral",
        })
    }
}

/// f(x + c)
fn shift(f: &Poly<CycloElem>, c: &CycloElem) -> Poly<CycloElem> {
    let lin = Poly::new(vec![c.clone(), CycloElem::from_int(1)]);
    let mut out = Poly::zero();
    for a in f.coeffs().iter().rev() {
        out = out.mul(&lin).add(&Poly::constant(a.clone()));
    }
    out
}

fn promote_poly(f: &Poly<CycloElem>, m: u64) -> Poly<CycloElem> {
    Poly::new(f.coeffs().iter().map(|c| c.promote(lcm(c.order(), m))).collect())
}

/// Monic irreducible factors over Q(ζ_m) with multiplicities (Trager's method:
/// shift until the norm is squarefree, factor over Q, take gcds).
pub fn factor_over_cyclotomic(f: &Poly<CycloElem>, m: u64) -> Vec<(Poly<CycloElem>, u32)> {
    let m = f.coeffs().iter().fold(m.max(1), |a, c| lcm(a, c.minimal_order()));
    let f = promote_poly(&f.monic(), m);
    if f.degree().unwrap_or(0) == 0 {
        return Vec::new();
    }
    let irreducibles: Vec<Poly<CycloElem>> = if euler_phi(m) == 1 {
        let r = f.to_rational().expect("coefficients lie in Q");
        factor(&r).into_iter().map(|(g, _)| g.monic().to_cyclo()).collect()
    } else {
        let sf = squarefree_part(&f).monic();
        let zeta = CycloElem::root_of_unity(m, 1);
        let mut found = None;
        for s in 0..64i64 {
            let c = zeta.scale(&Rational::from_int(-s));
            let h = shift(&sf, &c);
            let n = h.norm_to_q(m);
            if n.gcd(&n.derivative()).degree() == Some(0) {
                found = Some((c, h, n));
                break;
            }
        }
        let (c, h, n) = found.expect("a squarefree norm exists after finitely many shifts");
        let mut out = Vec::new();
        for (q, _) in factor(&n) {
            let g = h.gcd(&q.to_cyclo());
            if g.degree().unwrap_or(0) > 0 {
                out.push(promote_poly(&shift(&g, &c.neg()).monic(), m));
            }
        }
        out
    };
    let mut res = Vec::new();
    for g in irreducibles {
        let mut e = 0;
        let mut rest = f.clone();
        while let Some(q) = rest.div_exact(&g) {
            rest = q;
            e += 1;
        }
        if e > 0 {
            res.push((g, e));
        }
    }
    res.sort_by(|a, b| {
        (a.0.degree(), format!("{:?}", a.0)).cmp(&(b.0.degree(), format!("{:?}", b.0)))
    });
    res
}

/// Companion matrix of monic g in the basis 1, α, …, α^{d−1}, row convention.
fn companion(g: &Poly<CycloElem>) -> Matrix<CycloElem> {
    let d = g.degree().unwrap();
    let mut rows = Vec::with_capacity(d);
    for i in 0..d {
        let mut r = vec![CycloElem::from_int(0); d];
        if i + 1 < d {
            r[i + 1] = CycloElem::from_int(1);
        } else {
            for (j, x) in r.iter_mut().enumerate() {
                *x = g.coeff(j).neg();
            }
        }
        rows.push(r);
    }
    Matrix::from_rows(rows)
}

/// One system of eigenvalues, up to conjugation over Q(ζ_m): each operator
/// acts by h(α) for α a root of `factor`.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub side: Side,
    pub level: u64,
    pub lambda: u64,
    pub j: u64,
    pub p: u64,
    pub tame_char: DirichletChar,
    pub field_order: u64,
    pub factor: Poly<CycloElem>,
    pub eigenvalues: Vec<(OpLabel, Poly<CycloElem>)>,
    pub distinguished: OpLabel,
    pub slope: Rational,
    pub multiplicity: usize,
}

/// Where a system lives; copied into every system extracted.
#[derive(Clone, Debug)]
pub struct SystemContext {
    pub side: Side,
    pub level: u64,
    pub lambda: u64,
    pub j: u64,
    pub p: u64,
    pub tame_char: DirichletChar,
}

#[derive(Clone, Debug)]
pub struct EigenOptions {
    pub distinguished: OpLabel,
    pub seed: u64,
    /// Factor over Q(ζ_m) for m a multiple of this.
    pub field_order: u64,
    pub attempts: usize,
}

impl EigenOptions {
    pub fn new(distinguished: OpLabel, seed: u64) -> EigenOptions {
        EigenOptions {
            distinguished,
            seed,
            field_order: 1,
            attempts: 8,
        }
    }
}

impl EigenSystem {
    pub fn degree(&self) -> usize {
        self.factor.degree().unwrap_or(0)
    }

    pub fn labels(&self) -> Vec<OpLabel> {
        self.eigenvalues.iter().map(|(l, _)| l.clone()).collect()
    }

    fn poly_of(&self, label: &OpLabel) -> Option<&Poly<CycloElem>> {
        self.eigenvalues.iter().find(|(l, _)| l == label).map(|(_, h)| h)
    }

    /// The eigenvalue when it lies in Q(ζ_m).
    pub fn value(&self, label: &OpLabel) -> Option<CycloElem> {
        let h = self.poly_of(label)?;
        if self.degree() == 1 {
            return Some(h.eval(&self.factor.coeff(0).neg()));
        }
        let cp = self.op_charpoly(label)?;
        // h(α) is rational over the base field iff its charpoly is a pure power
        let d = self.degree();
        let root = cp.coeff(d - 1).neg().scale_int_div(d as i64);
        let lin = Poly::new(vec![root.neg(), CycloElem::from_int(1)]);
        (lin.pow(d as u32) == cp).then_some(root)
    }

    /// Matrix of the operator on the d-dimensional conjugacy block.
    fn op_block(&self, label: &OpLabel) -> Option<Matrix<CycloElem>> {
        let h = self.poly_of(label)?;
        Some(companion(&self.factor).eval_poly(h))
    }

    /// Characteristic polynomial over Q(ζ_m) of the operator on the block.
    pub fn op_charpoly(&self, label: &OpLabel) -> Option<Poly<CycloElem>> {
        Some(promote_poly(&self.op_block(label)?.charpoly(), self.field_order))
    }

    /// Invariant used to compare systems from different spaces: the block
    /// charpoly of each operator and of a fixed combination of all of them.
    pub fn signature(&self, labels: &[OpLabel]) -> Option<Vec<Poly<CycloElem>>> {
        let mut out = Vec::with_capacity(labels.len() + 1);
        let d = self.degree();
        let mut joint = Matrix::<CycloElem>::zeros(d, d);
        for (i, l) in labels.iter().enumerate() {
            let b = self.op_block(l)?;
            out.push(promote_poly(&b.charpoly(), self.field_order));
            joint = joint.add(&b.scale(&CycloElem::from_int(2 * i as i64 + 3)));
        }
        out.push(promote_poly(&joint.charpoly(), self.field_order));
        Some(out)
    }

    /// Same eigenvalues on the given labels (after relabelling `other`).
    pub fn same_eigenvalues(&self, other: &EigenSystem, labels: &[OpLabel], other_labels: &[OpLabel]) -> bool {
        if self.degree() != other.degree() {
            return false;
        }
        let m = lcm(self.field_order, other.field_order);
        match (self.signature(labels), other.signature(other_labels)) {
            (Some(a), Some(b)) => a.iter().zip(&b).all(|(x, y)| promote_poly(x, m) == promote_poly(y, m)),
            _ => false,
        }
    }

    /// Rename labels and move to another side/weight point; values untouched.
    #[allow(clippy::too_many_arguments)]
    pub fn relabeled(
        &self,
        side: Side,
        level: u64,
        lambda: u64,
        j: u64,
        tame_char: DirichletChar,
        f: impl Fn(&OpLabel) -> OpLabel,
    ) -> EigenSystem {
        EigenSystem {
            side,
            level,
            lambda,
            j,
            p: self.p,
            tame_char,
            field_order: self.field_order,
            factor: self.factor.clone(),
            eigenvalues: self.eigenvalues.iter().map(|(l, h)| (f(l), h.clone())).collect(),
            distinguished: f(&self.distinguished),
            slope: self.slope.clone(),
            multiplicity: self.multiplicity,
        }
    }

    /// Full nebentypus: tame character times τ^j, at the system's level.
    pub fn nebentypus(&self) -> Result<DirichletChar> {
        let tau = DirichletChar::teichmuller(self.p)?.pow(self.j as i64);
        Ok(self.tame_char.extend(self.level)?.mul(&tau.extend(self.level)?))
    }

    /// Same side, weight point, character, slope and eigenvalues on every label.
    pub fn equivalent(&self, other: &EigenSystem) -> bool {
        let mut labels = self.labels();
        labels.sort();
        let mut theirs = other.labels();
        theirs.sort();
        self.side == other.side
            && self.level == other.level
            && self.lambda == other.lambda
            && self.j == other.j
            && self.p == other.p
            && self.tame_char == other.tame_char
            && self.slope == other.slope
            && labels == theirs
            && self.same_eigenvalues(other, &labels, &labels)
    }

    /// Eigensystem of a single eigenform given its operator images.
    pub fn from_eigenform(
        f: &QSeries,
        images: &[(OpLabel, QSeries)],
        distinguished: OpLabel,
        ctx: &SystemContext,
    ) -> Result<EigenSystem> {
        let n0 = f
            .valuation()
            .ok_or_else(|| Error::Invalid("the zero series has no eigenvalues".into()))?;
        let mut eigenvalues = Vec::new();
        let mut order = 1;
        for (label, img) in images {
            if img.prec() <= n0 {
                return Err(Error::Precision {
                    need: n0 + 1,
                    have: img.prec(),
                });
            }
            let c = img.coeff(n0).div(&f.coeff(n0));
            if img != &f.truncate(img.prec()).scale(&c) {
                return Err(Error::Invariant(format!("series is not an eigenform of {label}")));
            }
            order = lcm(order, c.minimal_order());
            eigenvalues.push((label.clone(), Poly::constant(c)));
        }
        let u = eigenvalues
            .iter()
            .find(|(l, _)| *l == distinguished)
            .map(|(_, h)| h.coeff(0))
            .ok_or_else(|| Error::Invalid(format!("no image for {distinguished}")))?;
        let slope = slope_of_norm(&u, order, 1, ctx.p)?
            .ok_or_else(|| Error::Invalid(format!("{distinguished} eigenvalue is zero")))?;
        Ok(EigenSystem {
            side: ctx.side,
            level: ctx.level,
            lambda: ctx.lambda,
            j: ctx.j,
            p: ctx.p,
            tame_char: ctx.tame_char.clone(),
            field_order: order,
            factor: Poly::x(),
            eigenvalues,
            distinguished,
            slope,
            multiplicity: 1,
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let exact = self.degree() == 1;
        let eig: Vec<serde_json::Value> = self
            .eigenvalues
            .iter()
            .map(|(l, h)| match self.value(l) {
                Some(v) if exact || v.minimal_order() <= self.field_order => serde_json::json!({
                    "op": l.to_string(),
                    "value": v.to_string(),
                }),
                _ => serde_json::json!({
                    "op": l.to_string(),
                    "factor": self.factor.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                    "poly": h.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                }),
            })
            .collect();
        serde_json::json!({
            "side": self.side,
            "level": self.level,
            "lambda": self.lambda,
            "j": self.j,
            "p": self.p,
            "tame_char": self.tame_char.label(),
            "slope": self.slope.to_string(),
            "degree": self.degree(),
            "multiplicity": self.multiplicity,
            "field_order": self.field_order,
            "eigenvalues": eig,
        })
    }
}

/// v_p(N(u))/[L:Q] for u in a degree-`deg` extension of Q(ζ_m); None for u = 0.
fn slope_of_norm(u: &CycloElem, m: u64, deg: usize, p: u64) -> Result<Option<Rational>> {
    let n = u.promote(lcm(m, u.order())).norm();
    let phi = euler_phi(lcm(m, u.order())) as i64;
    if n.is_zero() {
        return Ok(None);
    }
    let v = n.valuation(p).unwrap_or(0);
    Ok(Some(Rational::from_int(v).div(&Rational::from_int(phi * deg as i64))))
}

trait ScaleDiv {
    fn scale_int_div(&self, d: i64) -> Self;
}

impl ScaleDiv for CycloElem {
    fn scale_int_div(&self, d: i64) -> CycloElem {
        self.scale(&Rational::from_int(1).div(&Rational::from_int(d)))
    }
}

/// All systems of eigenvalues of `ops` on `space` whose distinguished
/// eigenvalue is nonzero.
pub fn eigensystems(
    space: &ModularFormSpace,
    ops: &[HeckeMatrix],
    opts: &EigenOptions,
    ctx: &SystemContext,
) -> Result<Vec<EigenSystem>> {
    let n = space.dim();
    if n == 0 {
        return Ok(Vec::new());
    }
    let ops: Vec<&HeckeMatrix> = ops.iter().filter(|o| o.is_endomorphism()).collect();
    if !ops.iter().any(|o| o.label == opts.distinguished) {
        return Err(Error::Invalid(format!("{} is not among the operators", opts.distinguished)));
    }
    for o in &ops {
        if o.dim() != n {
            return Err(Error::Invalid(format!("{} has size {} on a space of dimension {n}", o.label, o.dim())));
        }
    }
    check_commuting(&ops.iter().map(|o| (*o).clone()).collect::<Vec<_>>())?;
    let m = ops
        .iter()
        .fold(lcm(opts.field_order.max(1), space.order()), |a, o| lcm(a, o.matrix.field_order()));
    let mats: Vec<Matrix<CycloElem>> = ops.iter().map(|o| o.matrix.map(|x| x.promote(m))).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.attempts.max(1) {
        let mut a = Matrix::<CycloElem>::zeros(n, n);
        for mm in &mats {
            let r: i64 = rng.gen_range(1..=16);
            a = a.add(&mm.scale(&CycloElem::from_int(r).promote(m)));
        }
        if let Some(systems) = split(&a, &mats, &ops, m, opts, ctx)? {
            return Ok(systems);
        }
    }
    Err(Error::SplittingFailed(opts.attempts))
}

/// Split along the factors of A's charpoly; None if some block is not
/// preserved by every operator (A not generic enough).
fn split(
    a: &Matrix<CycloElem>,
    mats: &[Matrix<CycloElem>],
    ops: &[&HeckeMatrix],
    m: u64,
    opts: &EigenOptions,
    ctx: &SystemContext,
) -> Result<Option<Vec<EigenSystem>>> {
    let cp = promote_poly(&a.charpoly(), m);
    let mut out = Vec::new();
    for (g, e) in factor_over_cyclotomic(&cp, m) {
        let d = g.degree().unwrap();
        let ga = a.eval_poly(&g);
        let eig = ga.left_kernel();
        let gen = if e > 1 { ga.pow(e).left_kernel().nrows() } else { eig.nrows() };
        if eig.nrows() == 0 || gen % d != 0 {
            return Ok(None);
        }
        let mut kry = vec![eig.row(0).to_vec()];
        for i in 1..d {
            let next = vec_mat(&kry[i - 1], a);
            kry.push(next);
        }
        let kmat = Matrix::from_rows(kry.clone());
        let mut eigenvalues = Vec::new();
        let mut u_block = None;
        for (mm, op) in mats.iter().zip(ops) {
            let mut block = Vec::with_capacity(d);
            for w in &kry {
                match kmat.solve_left(&vec_mat(w, mm)) {
                    Some(c) => block.push(c),
                    None => return Ok(None),
                }
            }
            let h = Poly::new(block[0].clone());
            if op.label == opts.distinguished {
                u_block = Some(Matrix::from_rows(block));
            }
            eigenvalues.push((op.label.clone(), h));
        }
        let det = u_block.expect("distinguished operator present").det();
        let Some(slope) = slope_of_norm(&det, m, d, ctx.p)? else {
            continue;
        };
        out.push(EigenSystem {
            side: ctx.side,
            level: ctx.level,
            lambda: ctx.lambda,
            j: ctx.j,
            p: ctx.p,
            tame_char: ctx.tame_char.clone(),
            field_order: m,
            factor: g,
            eigenvalues,
            distinguished: opts.distinguished.clone(),
            slope,
            multiplicity: gen / d,
        });
    }
    Ok(Some(out))
}

fn vec_mat(v: &[CycloElem], m: &Matrix<CycloElem>) -> Vec<CycloElem> {
    let mut out = vec![CycloElem::zero(); m.ncols()];
    for (x, row) in v.iter().zip(m.rows()) {
        if x.is_zero() {
            continue;
        }
        for (o, y) in out.iter_mut().zip(row) {
            o.add_mul_assign(x, y);
        }
    }
    out
}
