//! Classical points of the half-integral and integral eigencurves.
//!
//! At each weight point λτ^j the half-integral slice is S_{(2λ+1)/2}(4Np, χτ^j)
//! with U(p²) and the integral slice is S_{2λ}(2Np, χ²τ^{2j}) with U(p)
//! (the full M_2 when λ = 1). A scan builds both, compares their Fredholm
//! polynomials, extracts eigensystems and pairs them under the lift.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::numtheory::{crt_pair, is_prime, lcm, primes_below};
use crate::arith::{newton_polygon, squarefree_part, CycloElem, NewtonPolygon, Poly, Rational};
use crate::arith::padic::{slope_factorization, SlopeFactor};
use crate::dirichlet::{component_index, generators, quadratic, DirichletChar};
use crate::error::{Error, Result};
use crate::hecke::eigen::SystemContext;
use crate::hecke::{
    charpoly, diamond, eigensystems, factor_over_cyclotomic, t_ell_integral, t_ellsq_half, u_ell_integral,
    u_ellsq_half, DiamondPart, EigenOptions, EigenSystem, HeckeMatrix, OpLabel, Side,
};
use crate::shimura::sh_on_points;
use crate::spaces::{build_space, space_precision, ModularFormSpace, SpaceCache};

/// The weight x ↦ x^λ τ(x)^j.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WeightPoint {
    pub lambda: u64,
    pub j: u64,
    pub p: u64,
}

impl WeightPoint {
    pub fn new(lambda: u64, j: i64, p: u64) -> Result<WeightPoint> {
        if p == 2 || !is_prime(p) {
            return Err(Error::Invalid(format!("p = {p} is not an odd prime")));
        }
        Ok(WeightPoint {
            lambda,
            j: j.rem_euclid(p as i64 - 1) as u64,
            p,
        })
    }

    pub fn component(&self) -> u64 {
        component_index(self.lambda, self.j as i64, self.p)
    }

    /// k with weight k/2 on the half-integral side.
    pub fn half_weight_num(&self) -> u64 {
        2 * self.lambda + 1
    }

    pub fn integral_weight(&self) -> u64 {
        2 * self.lambda
    }

    /// The point j + (p−1)/2 in the other component of the pair.
    pub fn partner(&self) -> WeightPoint {
        WeightPoint {
            lambda: self.lambda,
            j: (self.j + (self.p - 1) / 2) % (self.p - 1),
            p: self.p,
        }
    }
}

/// Fredholm data of U on one classical space.
#[derive(Clone, Debug)]
pub struct SpectralSlice {
    pub weight: WeightPoint,
    pub side: Side,
    pub space: String,
    pub dim: usize,
    pub field_order: u64,
    /// det(1 − U T) over Q(ζ_m).
    pub fredholm: Poly<CycloElem>,
    /// Its norm down to Q (itself when already rational).
    pub fredholm_q: Poly<Rational>,
    pub polygon: NewtonPolygon,
    pub slope_factors: Vec<(Rational, SlopeFactor)>,
}

impl SpectralSlice {
    /// Product of the slope factors reproduces `fredholm_q` (exactly, or to
    /// the stated p-adic precision for approximate factors).
    pub fn factors_consistent(&self) -> bool {
        let prod = self
            .slope_factors
            .iter()
            .fold(Poly::one(), |acc: Poly<Rational>, (_, g)| acc.mul(&g.poly));
        let diff = prod.sub(&self.fredholm_q);
        match self.slope_factors.iter().filter_map(|(_, g)| g.precision).min() {
            None => diff.is_zero(),
            Some(prec) => diff
                .coeffs()
                .iter()
                .all(|c| c.is_zero() || c.valuation(self.weight.p).is_some_and(|v| v >= prec)),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "side": self.side,
            "space": self.space,
            "dim": self.dim,
            "fredholm": self.fredholm.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "fredholm_q": self.fredholm_q.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "slopes": self.polygon.slopes.iter().map(|(s, m)| serde_json::json!([s.to_string(), m])).collect::<Vec<_>>(),
            "slope_factors": self.slope_factors.iter().map(|(s, g)| serde_json::json!({
                "slope": s.to_string(),
                "poly": g.poly.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                "precision": g.precision,
            })).collect::<Vec<_>>(),
        })
    }
}

fn promote_poly(f: &Poly<CycloElem>, m: u64) -> Poly<CycloElem> {
    Poly::new(f.coeffs().iter().map(|c| c.promote(lcm(m, c.order()))).collect())
}

/// Slice data from a space and its U operator.
pub fn spectral_slice(w: WeightPoint, side: Side, space: &ModularFormSpace, u: &HeckeMatrix) -> Result<SpectralSlice> {
    let fredholm = charpoly(u, true)?;
    let m = fredholm
        .coeffs()
        .iter()
        .fold(space.order(), |a, c| lcm(a, c.order()));
    let fredholm = promote_poly(&fredholm, m);
    let fredholm_q = match fredholm.to_rational() {
        Some(f) => f,
        None => fredholm.norm_to_q(m),
    };
    let polygon = newton_polygon(&fredholm_q, w.p)?;
    let slope_factors = slope_factorization(&fredholm_q, w.p)?;
    Ok(SpectralSlice {
        weight: w,
        side,
        space: space.name(),
        dim: space.dim(),
        field_order: m,
        fredholm,
        fredholm_q,
        polygon,
        slope_factors,
    })
}

/// Outcome of the divisibility test.
#[derive(Clone, Debug, PartialEq)]
pub enum Certificate {
    /// squarefree(integral) / squarefree(half).
    Quotient(Poly<CycloElem>),
    /// An irreducible factor of the half side missing on the integral side.
    Offending(Poly<CycloElem>),
}

#[derive(Clone, Debug)]
pub struct Divisibility {
    pub ok: bool,
    pub certificate: Certificate,
}

/// squarefree(half fredholm) | squarefree(integral fredholm) over the common field.
pub fn check_divisibility(half: &SpectralSlice, int: &SpectralSlice) -> Divisibility {
    let m = lcm(half.field_order, int.field_order);
    let a = squarefree_part(&promote_poly(&half.fredholm, m));
    let b = squarefree_part(&promote_poly(&int.fredholm, m));
    if let Some(q) = b.div_exact(&a) {
        return Divisibility {
            ok: true,
            certificate: Certificate::Quotient(q),
        };
    }
    let bad = factor_over_cyclotomic(&a.monic(), m)
        .into_iter()
        .map(|(g, _)| g)
        .find(|g| !g.divides(&b))
        .unwrap_or_else(|| a.clone());
    Divisibility {
        ok: false,
        certificate: Certificate::Offending(bad),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Control {
    SmallSlope,
    Critical,
    LargeSlope,
}

/// Position of the slope relative to 2λ − 1 (half side) or k − 1 (integral).
pub fn control_flag(sys: &EigenSystem) -> Control {
    let bound = match sys.side {
        Side::HalfIntegral => 2 * sys.lambda as i64 - 1,
        Side::Integral => sys.lambda as i64 - 1,
    };
    let b = Rational::from_int(bound);
    match sys.slope.sub(&b).signum() {
        -1 => Control::SmallSlope,
        0 => Control::Critical,
        _ => Control::LargeSlope,
    }
}

/// (χ, j) ↦ (χ·χ_{−4}^{(p−1)/2}, j + (p−1)/2); tame diamonds pick up (−1/d)^{(p−1)/2}.
pub fn involution_on_systems(sys: &EigenSystem) -> Result<EigenSystem> {
    if sys.side != Side::HalfIntegral {
        return Err(Error::Invalid("the involution acts on half-integral systems".into()));
    }
    let h = (sys.p - 1) / 2;
    let chi4 = quadratic(-4).pow(h as i64);
    let m = lcm(sys.tame_char.modulus(), 4);
    let tame = sys.tame_char.extend(m)?.mul(&chi4.extend(m)?);
    let mut out = sys.clone();
    out.tame_char = tame;
    out.j = (sys.j + h) % (sys.p - 1);
    for (l, poly) in out.eigenvalues.iter_mut() {
        if let OpLabel::DiamondTame(d) = l {
            let s = chi4.eval(*d);
            *poly = Poly::new(poly.coeffs().iter().map(|c| c.mul(&s)).collect());
        }
    }
    Ok(out)
}

/// Parameters of a scan.
#[derive(Clone, Debug)]
pub struct ScanConfig {
    pub p: u64,
    /// Tame level N.
    pub n: u64,
    /// Tame character modulo 4N.
    pub chi: DirichletChar,
    pub grid: Vec<WeightPoint>,
    pub seed: u64,
    /// Number of primes ℓ ∤ 2Np whose T operators enter the matching.
    pub good_primes: usize,
    /// Also build the slices at the involution partners of the grid.
    pub partners: bool,
    pub cache: Option<SpaceCache>,
}

impl ScanConfig {
    pub fn new(p: u64, n: u64, chi: DirichletChar, grid: Vec<WeightPoint>) -> Result<ScanConfig> {
        let cfg = ScanConfig {
            p,
            n,
            chi,
            grid,
            seed: 0,
            good_primes: 2,
            partners: true,
            cache: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 2 || !is_prime(self.p) {
            return Err(Error::Invalid(format!("p = {} is not an odd prime", self.p)));
        }
        if self.n == 0 || self.n % self.p == 0 {
            return Err(Error::Invalid(format!("p = {} divides N = {}", self.p, self.n)));
        }
        if self.chi.modulus() != 4 * self.n {
            return Err(Error::BadCharacter(
                self.chi.label(),
                format!("tame character must have modulus 4N = {}", 4 * self.n),
            ));
        }
        if let Some(w) = self.grid.iter().find(|w| w.p != self.p || w.lambda == 0) {
            return Err(Error::Invalid(format!("grid point λ = {}, p = {} is outside the scan", w.lambda, w.p)));
        }
        Ok(())
    }

    /// The grid λ ∈ lambdas, all j.
    pub fn full_grid(p: u64, lambdas: &[u64]) -> Vec<WeightPoint> {
        lambdas
            .iter()
            .flat_map(|&l| (0..p - 1).map(move |j| WeightPoint { lambda: l, j, p }))
            .collect()
    }

    fn half_level(&self) -> u64 {
        4 * self.n * self.p
    }

    fn int_level(&self) -> u64 {
        2 * self.n * self.p
    }

    fn good(&self) -> Vec<u64> {
        primes_below(1000)
            .into_iter()
            .filter(|l| (2 * self.n * self.p) % l != 0)
            .take(self.good_primes)
            .collect()
    }

    fn bad_odd(&self) -> Vec<u64> {
        primes_below(self.n + 1)
            .into_iter()
            .filter(|l| *l != 2 && self.n % l == 0)
            .collect()
    }

    /// Diamond labels: generators of (Z/4N)^× lifted to 1 mod p.
    fn diamond_labels(&self) -> Vec<i64> {
        let m = 4 * self.n as i64;
        generators(4 * self.n)
            .iter()
            .map(|g| crt_pair(g.value as i64, m, 1, self.p as i64))
            .collect()
    }

    fn field_order(&self) -> u64 {
        lcm(lcm(self.p - 1, self.chi.order()), 2)
    }

    /// Precision of the half-integral slice at w.
    pub fn half_precision(&self, w: &WeightPoint) -> usize {
        let scale = self
            .good()
            .iter()
            .chain(&self.bad_odd())
            .chain(std::iter::once(&w.p))
            .map(|l| l * l)
            .max()
            .unwrap_or(1);
        space_precision(w.half_weight_num(), self.half_level(), scale)
    }

    /// Precision of the integral slice at w.
    pub fn int_precision(&self, w: &WeightPoint) -> usize {
        let scale = self.good().iter().chain(&self.bad_odd()).chain(std::iter::once(&w.p)).copied().max().unwrap_or(1);
        space_precision(2 * w.integral_weight(), self.int_level(), scale)
    }

    /// Largest precision any slice of the scan needs.
    pub fn required_precision(&self) -> usize {
        self.grid
            .iter()
            .map(|w| self.half_precision(w).max(self.int_precision(w)))
            .max()
            .unwrap_or(0)
    }

    fn space(&self, k2: u64, level: u64, chi: &DirichletChar, cuspidal: bool, prec: usize) -> Result<ModularFormSpace> {
        match &self.cache {
            Some(c) => c.get_or_build(k2, level, chi, cuspidal, prec),
            None => {
                let chi = if chi.modulus() == level { chi.clone() } else { chi.extend(level)? };
                build_space(k2, level, &chi, cuspidal, prec)
            }
        }
    }
}

/// A slice with its operators and extracted systems.
struct SliceRun {
    slice: SpectralSlice,
    systems: Vec<EigenSystem>,
}

fn half_nebentypus(chi: &DirichletChar, w: &WeightPoint, level: u64) -> Result<DirichletChar> {
    let tau = DirichletChar::teichmuller(w.p)?.pow(w.j as i64);
    Ok(chi.extend(level)?.mul(&tau.extend(level)?))
}

fn int_nebentypus(chi: &DirichletChar, w: &WeightPoint, level: u64) -> Result<DirichletChar> {
    let tau = DirichletChar::teichmuller(w.p)?.pow(2 * w.j as i64);
    Ok(chi.mul(chi).primitive().extend(level)?.mul(&tau.extend(level)?))
}

fn run_half(cfg: &ScanConfig, chi: &DirichletChar, w: WeightPoint) -> Result<SliceRun> {
    let level = cfg.half_level();
    let eps = half_nebentypus(chi, &w, level)?;
    let good = cfg.good();
    let bad = cfg.bad_odd();
    let space = cfg.space(w.half_weight_num(), level, &eps, true, cfg.half_precision(&w))?;
    let u = u_ellsq_half(&space, w.p)?;
    let slice = spectral_slice(w, Side::HalfIntegral, &space, &u)?;
    let mut ops = vec![u];
    for &l in &bad {
        ops.push(u_ellsq_half(&space, l)?);
    }
    for &l in &good {
        ops.push(t_ellsq_half(&space, l)?);
    }
    for d in cfg.diamond_labels() {
        ops.push(diamond(&space, d, DiamondPart::Tame(w.p))?);
    }
    let mut opts = EigenOptions::new(OpLabel::Usq(w.p), cfg.seed);
    opts.field_order = cfg.field_order();
    let ctx = SystemContext {
        side: Side::HalfIntegral,
        level,
        lambda: w.lambda,
        j: w.j,
        p: w.p,
        tame_char: chi.clone(),
    };
    let systems = eigensystems(&space, &ops, &opts, &ctx)?;
    Ok(SliceRun { slice, systems })
}

fn run_int(cfg: &ScanConfig, w: WeightPoint) -> Result<SliceRun> {
    let level = cfg.int_level();
    let eps = int_nebentypus(&cfg.chi, &w, level)?;
    let good = cfg.good();
    let bad = cfg.bad_odd();
    let k = w.integral_weight();
    // weight 2 is compared against the full space: lifts of theta series are Eisenstein
    let cuspidal = w.lambda > 1;
    let space = cfg.space(2 * k, level, &eps, cuspidal, cfg.int_precision(&w))?;
    let u = u_ell_integral(&space, w.p)?;
    let image = WeightPoint {
        lambda: k,
        j: (2 * w.j) % (w.p - 1),
        p: w.p,
    };
    let slice = spectral_slice(image, Side::Integral, &space, &u)?;
    let mut ops = vec![u];
    for &l in &bad {
        ops.push(u_ell_integral(&space, l)?);
    }
    for &l in &good {
        ops.push(t_ell_integral(&space, l)?);
    }
    let mut opts = EigenOptions::new(OpLabel::U(w.p), cfg.seed);
    opts.field_order = cfg.field_order();
    let ctx = SystemContext {
        side: Side::Integral,
        level,
        lambda: k,
        j: image.j,
        p: w.p,
        tame_char: cfg.chi.mul(&cfg.chi).primitive(),
    };
    let systems = eigensystems(&space, &ops, &opts, &ctx)?;
    Ok(SliceRun { slice, systems })
}

/// One half-integral system and what became of it.
#[derive(Clone, Debug)]
pub struct HalfEntry {
    pub system: EigenSystem,
    pub control: Control,
    /// Index into the point's integral systems.
    pub matched: Option<usize>,
    pub diagnostic: Option<String>,
}

/// Results at one grid point.
#[derive(Clone, Debug)]
pub struct PointReport {
    pub point: WeightPoint,
    pub half: Option<SpectralSlice>,
    pub integral: Option<SpectralSlice>,
    pub divisibility: Option<Divisibility>,
    pub half_systems: Vec<HalfEntry>,
    pub integral_systems: Vec<(EigenSystem, Control)>,
    pub notes: Vec<String>,
    pub error: Option<String>,
}

impl PointReport {
    pub fn divisibility_ok(&self) -> bool {
        self.divisibility.as_ref().is_some_and(|d| d.ok)
    }

    /// Every small-slope half system is matched.
    pub fn matching_ok(&self) -> bool {
        self.half_systems
            .iter()
            .all(|e| e.matched.is_some() || e.control != Control::SmallSlope)
    }
}

/// A half-integral system, its image under the involution and the system
/// found at the partner point.
#[derive(Clone, Debug, Serialize)]
pub struct InvolutionPair {
    pub point: WeightPoint,
    pub partner: WeightPoint,
    pub index: usize,
    pub partner_index: Option<usize>,
    /// involution² = id on this system.
    pub involutive: bool,
    /// sh of both systems agree.
    pub same_image: bool,
}

#[derive(Clone, Debug)]
pub struct ScanReport {
    pub p: u64,
    pub n: u64,
    pub chi: DirichletChar,
    pub seed: u64,
    pub points: Vec<PointReport>,
    pub involution: Vec<InvolutionPair>,
}

fn poly_strings(f: &Poly<CycloElem>) -> Vec<String> {
    f.coeffs().iter().map(|c| c.to_string()).collect()
}

impl ScanReport {
    pub fn divisibility_ok(&self) -> bool {
        self.points.iter().all(|p| p.error.is_none() && p.divisibility_ok())
    }

    pub fn matching_ok(&self) -> bool {
        self.points.iter().all(PointReport::matching_ok)
    }

    pub fn involution_ok(&self) -> bool {
        self.involution
            .iter()
            .all(|i| i.involutive && i.partner_index.is_some() && i.same_image)
    }

    pub fn all_ok(&self) -> bool {
        self.divisibility_ok() && self.matching_ok() && self.involution_ok()
    }

    /// Matched (half, integral) pairs over all points.
    pub fn matches(&self) -> Vec<(&EigenSystem, &EigenSystem)> {
        self.points
            .iter()
            .flat_map(|pt| {
                pt.half_systems
                    .iter()
                    .filter_map(|e| e.matched.map(|i| (&e.system, &pt.integral_systems[i].0)))
            })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let points: Vec<serde_json::Value> = self
            .points
            .iter()
            .map(|pt| {
                let div = pt.divisibility.as_ref().map(|d| match &d.certificate {
                    Certificate::Quotient(q) => serde_json::json!({"ok": d.ok, "quotient": poly_strings(q)}),
                    Certificate::Offending(g) => serde_json::json!({"ok": d.ok, "offending": poly_strings(g)}),
                });
                serde_json::json!({
                    "lambda": pt.point.lambda,
                    "j": pt.point.j,
                    "component": pt.point.component(),
                    "half": pt.half.as_ref().map(SpectralSlice::to_json),
                    "integral": pt.integral.as_ref().map(SpectralSlice::to_json),
                    "divisibility": div,
                    "half_systems": pt.half_systems.iter().map(|e| serde_json::json!({
                        "system": e.system.to_json(),
                        "control": e.control,
                        "matched": e.matched,
                        "diagnostic": e.diagnostic,
                    })).collect::<Vec<_>>(),
                    "integral_systems": pt.integral_systems.iter().map(|(s, c)| serde_json::json!({
                        "system": s.to_json(),
                        "control": c,
                    })).collect::<Vec<_>>(),
                    "notes": pt.notes,
                    "error": pt.error,
                })
            })
            .collect();
        serde_json::json!({
            "p": self.p,
            "N": self.n,
            "chi": self.chi.label(),
            "seed": self.seed,
            "grid": self.points.iter().map(|pt| pt.point).collect::<Vec<_>>(),
            "points": points,
            "involution": self.involution,
            "divisibility_ok": self.divisibility_ok(),
            "matching_ok": self.matching_ok(),
            "involution_ok": self.involution_ok(),
        })
    }

    /// One row per system: side, weight, j, component, slope, matched, control.
    pub fn csv_rows(&self) -> Vec<[String; 8]> {
        let mut rows = Vec::new();
        for pt in &self.points {
            let w = pt.point;
            for e in &pt.half_systems {
                rows.push([
                    "half-integral".to_string(),
                    format!("{}/2", w.half_weight_num()),
                    w.j.to_string(),
                    w.component().to_string(),
                    e.system.slope.to_string(),
                    e.system.degree().to_string(),
                    e.matched.is_some().to_string(),
                    serde_json::to_value(e.control).unwrap().as_str().unwrap().to_string(),
                ]);
            }
            for (s, c) in &pt.integral_systems {
                rows.push([
                    "integral".to_string(),
                    w.integral_weight().to_string(),
                    s.j.to_string(),
                    component_index(s.lambda, s.j as i64, w.p).to_string(),
                    s.slope.to_string(),
                    s.degree().to_string(),
                    String::new(),
                    serde_json::to_value(c).unwrap().as_str().unwrap().to_string(),
                ]);
            }
        }
        rows
    }

    pub const CSV_HEADER: [&'static str; 8] = ["side", "weight", "j", "component", "slope", "degree", "matched", "control"];
}

fn run_point(cfg: &ScanConfig, w: WeightPoint) -> PointReport {
    let mut rep = PointReport {
        point: w,
        half: None,
        integral: None,
        divisibility: None,
        half_systems: Vec::new(),
        integral_systems: Vec::new(),
        notes: Vec::new(),
        error: None,
    };
    if w.lambda == 1 {
        rep.notes.push("weight 3/2: integral side is the full space M_2".into());
    }
    let both = run_half(cfg, &cfg.chi, w).and_then(|h| Ok((h, run_int(cfg, w)?)));
    let (half, int) = match both {
        Ok(x) => x,
        Err(e) => {
            rep.error = Some(e.to_string());
            return rep;
        }
    };
    rep.divisibility = Some(check_divisibility(&half.slice, &int.slice));
    rep.integral_systems = int.systems.iter().map(|s| (s.clone(), control_flag(s))).collect();
    for sys in &half.systems {
        let control = control_flag(sys);
        let (matched, diagnostic) = match sh_on_points(sys) {
            Ok(img) => match int.systems.iter().position(|t| img.equivalent(t)) {
                Some(i) => (Some(i), None),
                None => (None, Some("no integral system with the same eigenvalues".to_string())),
            },
            Err(e) => (None, Some(e.to_string())),
        };
        rep.half_systems.push(HalfEntry {
            system: sys.clone(),
            control,
            matched,
            diagnostic,
        });
    }
    rep.half = Some(half.slice);
    rep.integral = Some(int.slice);
    rep
}

/// Pair each half system with one at the partner point (other tame slice
/// when (p−1)/2 is odd).
fn pair_partners(cfg: &ScanConfig, points: &[PointReport]) -> Vec<InvolutionPair> {
    let h = (cfg.p - 1) / 2;
    let partner_chi = {
        let chi4 = quadratic(-4).pow(h as i64).extend(4 * cfg.n).unwrap();
        cfg.chi.mul(&chi4)
    };
    let same_slice = partner_chi == cfg.chi;
    let todo: Vec<&PointReport> = points.iter().filter(|pt| !pt.half_systems.is_empty()).collect();
    let partner_systems: Vec<Option<Vec<EigenSystem>>> = todo
        .par_iter()
        .map(|pt| {
            let w2 = pt.point.partner();
            if same_slice {
                points
                    .iter()
                    .find(|q| q.point == w2)
                    .map(|q| q.half_systems.iter().map(|e| e.system.clone()).collect())
                    .or_else(|| {
                        cfg.partners
                            .then(|| run_half(cfg, &partner_chi, w2).ok().map(|r| r.systems))
                            .flatten()
                    })
            } else if cfg.partners {
                run_half(cfg, &partner_chi, w2).ok().map(|r| r.systems)
            } else {
                None
            }
        })
        .collect();
    let mut out = Vec::new();
    for (pt, theirs) in todo.iter().zip(partner_systems) {
        let Some(theirs) = theirs else { continue };
        for (i, e) in pt.half_systems.iter().enumerate() {
            let Ok(img) = involution_on_systems(&e.system) else { continue };
            let involutive = involution_on_systems(&img).is_ok_and(|b| b.equivalent(&e.system));
            let partner_index = theirs.iter().position(|s| img.equivalent(s));
            let same_image = match (partner_index, sh_on_points(&e.system)) {
                (Some(k), Ok(a)) => sh_on_points(&theirs[k]).is_ok_and(|b| a.equivalent(&b)),
                _ => false,
            };
            out.push(InvolutionPair {
                point: pt.point,
                partner: pt.point.partner(),
                index: i,
                partner_index,
                involutive,
                same_image,
            });
        }
    }
    out
}

/// Build both slices at every grid point, test divisibility, match systems
/// and pair them across the involution. Point failures are recorded.
pub fn scan(cfg: &ScanConfig) -> Result<ScanReport> {
    cfg.validate()?;
    let points: Vec<PointReport> = cfg.grid.par_iter().map(|&w| run_point(cfg, w)).collect();
    let involution = pair_partners(cfg, &points);
    Ok(ScanReport {
        p: cfg.p,
        n: cfg.n,
        chi: cfg.chi.clone(),
        seed: cfg.seed,
        points,
        involution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::q;

    fn sys(side: Side, lambda: u64, slope: Rational) -> EigenSystem {
        EigenSystem {
            side,
            level: 20,
            lambda,
            j: 0,
            p: 5,
            tame_char: DirichletChar::trivial(4),
            field_order: 1,
            factor: Poly::x(),
            eigenvalues: vec![(OpLabel::DiamondTame(11), Poly::constant(CycloElem::from_int(1)))],
            distinguished: OpLabel::Usq(5),
            slope,
            multiplicity: 1,
        }
    }

    #[test]
    fn control_boundaries() {
        assert_eq!(control_flag(&sys(Side::HalfIntegral, 1, Rational::one())), Control::Critical);
        assert_eq!(control_flag(&sys(Side::HalfIntegral, 2, Rational::zero())), Control::SmallSlope);
        assert_eq!(control_flag(&sys(Side::HalfIntegral, 1, q(3, 2))), Control::LargeSlope);
        assert_eq!(control_flag(&sys(Side::Integral, 2, Rational::one())), Control::Critical);
    }

    #[test]
    fn involution_is_involutive() {
        for p in [3u64, 5, 7] {
            let mut s = sys(Side::HalfIntegral, 1, Rational::one());
            s.p = p;
            s.eigenvalues[0].0 = OpLabel::DiamondTame(3);
            let once = involution_on_systems(&s).unwrap();
            assert_eq!(once.j, (p - 1) / 2);
            let twice = involution_on_systems(&once).unwrap();
            assert!(twice.equivalent(&s));
            let d = once.value(&OpLabel::DiamondTame(3)).unwrap();
            let want = if p % 4 == 1 { 1 } else { -1 };
            assert_eq!(d, CycloElem::from_int(want));
        }
    }

    #[test]
    fn weight_points() {
        let w = WeightPoint::new(1, -1, 5).unwrap();
        assert_eq!(w.j, 3);
        assert_eq!(w.component(), 0);
        assert_eq!(w.partner().j, 1);
        assert!(WeightPoint::new(1, 0, 9).is_err());
        assert_eq!(ScanConfig::full_grid(3, &[1, 2]).len(), 4);
    }

    #[test]
    fn empty_grid() {
        let cfg = ScanConfig::new(5, 1, DirichletChar::trivial(4), vec![]).unwrap();
        let r = scan(&cfg).unwrap();
        assert!(r.points.is_empty() && r.all_ok());
    }

    #[test]
    fn p_dividing_n_rejected() {
        assert!(ScanConfig::new(3, 3, DirichletChar::trivial(12), vec![]).is_err());
    }
}
