//! The θ_ψ example: θ_ψ in level 4r²p, its eigenvalues, its lift and the
//! criticality of the resulting point.

use halfcurve::arith::numtheory::primes_below;
use halfcurve::dirichlet::{quadratic, DirichletChar};
use halfcurve::eigencurve::{control_flag, Control};
use halfcurve::hecke::eigen::SystemContext;
use halfcurve::hecke::ops::{t_ellsq_half, u_op};
use halfcurve::hecke::{EigenSystem, OpLabel, Side};
use halfcurve::qseries::{theta_psi, QSeries};
use halfcurve::shimura::{half_system_from_series, lift_coefficients, lift_series_from_eigenvalues, LiftRecord};
use halfcurve::spaces::{build_integral_space, space_precision};
use halfcurve::{CycloElem, Error, Rational, Result};

/// One row of the eigenvalue table.
#[derive(Clone, Debug)]
pub struct EigenRow {
    pub ell: u64,
    pub op: OpLabel,
    pub eigenvalue: CycloElem,
    /// Coefficient A_ℓ of the lift.
    pub lift_coefficient: CycloElem,
}

#[derive(Clone, Debug)]
pub enum ThetaOutcome {
    /// p divides the conductor: U(p²)θ_ψ = 0.
    Kernel { level: u64 },
    Point(Box<ThetaPoint>),
}

#[derive(Clone, Debug)]
pub struct ThetaPoint {
    pub level: u64,
    pub table: Vec<EigenRow>,
    pub system: EigenSystem,
    pub lift: QSeries,
    /// lift = E_ψ − ψ(p)V_pE_ψ below the precision.
    pub stabilization_ok: bool,
    /// The divisor-sum formula at level 4r² gives E_ψ.
    pub formula_ok: bool,
    pub control: Control,
    /// Membership and operator checks in weight 2, when requested.
    pub record: Option<LiftRecord>,
}

#[derive(Clone, Debug)]
pub struct ThetaReport {
    pub p: u64,
    pub psi: DirichletChar,
    pub theta: QSeries,
    pub outcome: ThetaOutcome,
}

/// Σ ψ(n)σ(n)qⁿ.
pub fn e_psi(psi: &DirichletChar, prec: usize) -> QSeries {
    QSeries::from_fn(prec, |n| {
        if n == 0 {
            return CycloElem::from_int(0);
        }
        let s: i64 = (1..=n).filter(|d| n % d == 0).map(|d| d as i64).sum();
        psi.eval(n as i64).scale(&Rational::from_int(s))
    })
}

/// Parse ψ as a discriminant ("-3") or a character label.
pub fn parse_psi(s: &str) -> Result<DirichletChar> {
    if let Ok(d) = s.trim().parse::<i64>() {
        if d % 4 == 2 || d % 4 == 3 || d == 0 || d == 1 {
            return Err(Error::BadCharacter(s.into(), "not a fundamental discriminant".into()));
        }
        return Ok(quadratic(d));
    }
    s.parse::<DirichletChar>()
}

/// Run the example to `prec` coefficients of the lift; `membership` also
/// checks the lift in M_2(2r²p).
pub fn theta_example(p: u64, psi: &DirichletChar, prec: usize, membership: bool) -> Result<ThetaReport> {
    if p == 2 || !halfcurve::arith::numtheory::is_prime(p) {
        return Err(Error::Invalid(format!("p = {p} is not an odd prime")));
    }
    let psi = psi.primitive();
    if psi.is_even() {
        return Err(Error::Parity(format!("ψ = {} is even; θ_ψ needs an odd character", psi.label())));
    }
    let r = psi.conductor();
    let level = if r % p == 0 { 4 * r * r } else { 4 * r * r * p };
    let big = prec * prec + 1;
    let theta = theta_psi(&psi, big)?;
    if r % p == 0 {
        let image = u_op(&theta, p * p);
        if !image.is_zero() {
            return Err(Error::Invariant(format!("U({p}^2)θ_ψ is not zero")));
        }
        return Ok(ThetaReport {
            p,
            psi,
            theta,
            outcome: ThetaOutcome::Kernel { level },
        });
    }
    // nebentypus of θ_ψ: ψ·χ_{−4}
    let tame = psi.extend(4 * r)?.mul(&quadratic(-4).extend(4 * r)?);
    let ctx = SystemContext {
        side: Side::HalfIntegral,
        level,
        lambda: 1,
        j: 0,
        p,
        tame_char: tame.clone(),
    };
    let system = half_system_from_series(&theta, &ctx, prec)?;
    let lift = lift_series_from_eigenvalues(&system, prec)?;

    let e = e_psi(&psi, prec);
    let psi_p = psi.eval(p as i64);
    let star = e.sub(&e.v_ell_to(p as usize, prec).scale(&psi_p));
    let stabilization_ok = lift == star;

    let base = 4 * r * r;
    let eps0 = tame.extend(base)?;
    let formula_ok = lift_coefficients(&theta, 1, &eps0, base, prec)? == e;

    let mut table = Vec::new();
    for ell in primes_below(14) {
        let op = if level % ell == 0 { OpLabel::Usq(ell) } else { OpLabel::Tsq(ell) };
        let eigenvalue = system
            .value(&op)
            .ok_or_else(|| Error::Invariant(format!("θ_ψ has no eigenvalue for {op}")))?;
        table.push(EigenRow {
            ell,
            op,
            eigenvalue,
            lift_coefficient: lift.coeff(ell as usize),
        });
    }
    let record = if membership {
        let build = |lvl: u64| {
            let chi = DirichletChar::trivial(lvl);
            build_integral_space(2, lvl, &chi, false, space_precision(4, lvl, 7).max(prec))
        };
        Some(halfcurve::shimura::lift_with_fallback(&system, build, prec.min(60))?)
    } else {
        None
    };
    let control = control_flag(&system);
    Ok(ThetaReport {
        p,
        psi,
        theta,
        outcome: ThetaOutcome::Point(Box::new(ThetaPoint {
            level,
            table,
            system,
            lift,
            stabilization_ok,
            formula_ok,
            control,
            record,
        })),
    })
}

/// Check that θ_ψ is an eigenform of T(ℓ²) at level 4r² with eigenvalue (1+ℓ)ψ(ℓ).
pub fn theta_tsq_eigenvalue(psi: &DirichletChar, ell: u64, prec: usize) -> Result<Option<CycloElem>> {
    let psi = psi.primitive();
    let r = psi.conductor();
    let level = 4 * r * r;
    let eps = psi.extend(level)?.mul(&quadratic(-4).extend(level)?);
    let f = theta_psi(&psi, prec)?;
    let img = t_ellsq_half(&f, ell, 3, &eps);
    let n0 = match f.valuation() {
        Some(n) => n,
        None => return Ok(None),
    };
    let c = img.coeff(n0).div(&f.coeff(n0));
    Ok((img == f.truncate(img.prec()).scale(&c)).then_some(c))
}

impl ThetaReport {
    pub fn render(&self, terms: usize) -> String {
        let mut out = String::new();
        let psi = self.psi.label();
        out.push_str(&format!("theta_psi, psi = {psi}, p = {}\n", self.p));
        out.push_str(&format!("theta_psi = {}\n", self.theta.truncate(terms)));
        match &self.outcome {
            ThetaOutcome::Kernel { level } => {
                out.push_str(&format!("level {level}: U({}^2) theta_psi = 0\n", self.p));
                out.push_str(&format!(
                    "p = {} divides the conductor of psi, so theta_psi is in the kernel of U_{{p^2}} and gives no point of the eigencurve\n",
                    self.p
                ));
            }
            ThetaOutcome::Point(pt) => {
                out.push_str(&format!("level {}\n", pt.level));
                out.push_str("ell  operator    eigenvalue  lift A_ell\n");
                for row in &pt.table {
                    out.push_str(&format!(
                        "{:<4} {:<11} {:<11} {}\n",
                        row.ell,
                        row.op.to_string(),
                        row.eigenvalue.to_string(),
                        row.lift_coefficient
                    ));
                }
                if let Some(u) = pt.system.value(&OpLabel::Usq(self.p)) {
                    let pp = self.p as i64;
                    let chi = self.psi.eval(pp);
                    let naive = chi.scale(&Rational::from_int(1 + pp));
                    out.push_str(&format!(
                        "U({p}^2) eigenvalue {u} = psi(p) p = {}; (1+p) psi(p) = {naive}: {}\n",
                        chi.scale(&Rational::from_int(pp)),
                        if u == naive { "agrees" } else { "does not agree" },
                        p = self.p
                    ));
                }
                out.push_str(&format!("lift = {}\n", pt.lift.truncate(terms)));
                out.push_str(&format!(
                    "lift = E_psi - psi(p) V_p E_psi: {}\n",
                    if pt.stabilization_ok { "verified" } else { "FAILED" }
                ));
                out.push_str(&format!(
                    "coefficient formula gives E_psi: {}\n",
                    if pt.formula_ok { "verified" } else { "FAILED" }
                ));
                if let Some(rec) = &pt.record {
                    out.push_str(&format!(
                        "lift in {}: membership {}, eigen_match {}, recursion {}\n",
                        rec.target_space, rec.flags.membership, rec.flags.eigen_match, rec.flags.recursion
                    ));
                }
                let bound = 2 * pt.system.lambda - 1;
                let word = match pt.control {
                    Control::Critical => "critical",
                    Control::SmallSlope => "small slope",
                    Control::LargeSlope => "large slope",
                };
                out.push_str(&format!("slope {} (2*lambda - 1 = {bound}): {word}\n", pt.system.slope));
            }
        }
        out
    }

    /// Everything the example claims holds.
    pub fn ok(&self) -> bool {
        match &self.outcome {
            ThetaOutcome::Kernel { .. } => true,
            ThetaOutcome::Point(pt) => {
                pt.stabilization_ok && pt.formula_ok && pt.record.as_ref().is_none_or(|r| r.flags.all())
            }
        }
    }
}
