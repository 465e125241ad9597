//! Command-line front end: argument parsing, run configuration and the
//! commands behind the `halfcurve` binary.

pub mod theta;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use halfcurve::arith::numtheory::{gcd, is_prime};
use halfcurve::arith::{newton_polygon, Poly};
use halfcurve::dirichlet::{quadratic, DirichletChar};
use halfcurve::eigencurve::{scan, ScanConfig, ScanReport, WeightPoint};
use halfcurve::hecke::eigen::SystemContext;
use halfcurve::hecke::{
    charpoly, diamond, eigensystems, matrix_json, t_ell_integral, t_ellsq_half, u_ell_integral, u_ellsq_half,
    DiamondPart, EigenOptions, HeckeMatrix, OpLabel, Side,
};
use halfcurve::qseries::theta_psi;
use halfcurve::shimura::{common_eigenvector, lift_eigenform};
use halfcurve::spaces::{build_space, dimension_oracle, space_precision, ModularFormSpace, SpaceCache};
use halfcurve::{CycloElem, Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ORACLE: i32 = 2;
pub const EXIT_SPAN: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

/// Environment variable overriding the cache directory.
pub const CACHE_ENV: &str = "HALFCURVE_CACHE_DIR";

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::OracleMismatch { .. } => EXIT_ORACLE,
        Error::SpanDeficiency { .. } => EXIT_SPAN,
        Error::Invariant(_) | Error::NonCommuting(_) | Error::SplittingFailed(_) | Error::NotMember { .. } => {
            EXIT_INVARIANT
        }
        _ => EXIT_USAGE,
    }
}

#[derive(Parser, Debug)]
#[command(name = "halfcurve", version, about = "Half-integral weight forms, Hecke operators and the Shimura lift at classical weights")]
pub struct Cli {
    /// Directory of the space cache (also read from HALFCURVE_CACHE_DIR).
    #[arg(long, global = true, env = CACHE_ENV)]
    pub cache_dir: Option<PathBuf>,
    /// Seed for eigen-splitting.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build (or load) a space and print its dimension.
    Space(SpaceArgs),
    /// Print the matrix of a Hecke operator as JSON.
    Hecke(OpArgs),
    /// Characteristic (or Fredholm) polynomial of a Hecke operator.
    Charpoly(CharpolyArgs),
    /// Lift the eigensystems of a half-integral slice.
    Lift(LiftArgs),
    /// Scan a grid of weights; writes a JSON report and a CSV summary.
    Scan(ScanArgs),
    /// θ_ψ in level 4r²p and its lift.
    ThetaExample(ThetaArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SpaceArgs {
    #[arg(long)]
    pub level: u64,
    /// "k/2" for half-integral weight or an integer.
    #[arg(long)]
    pub weight: String,
    /// "M:e1,e2,..", "M.n" (Conrey), a discriminant like "-3", or "trivial".
    #[arg(long = "char", default_value = "trivial")]
    pub chi: String,
    /// Full space M instead of the cusp forms S.
    #[arg(long)]
    pub full: bool,
    #[arg(long)]
    pub prec: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct OpArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    /// T(5), U(3), T(7^2), U(5^2), <d>_tame, <d>_p (p taken from --p).
    #[arg(long)]
    pub op: String,
    #[arg(long)]
    pub p: Option<u64>,
}

#[derive(Args, Debug, Clone)]
pub struct CharpolyArgs {
    #[command(flatten)]
    pub op: OpArgs,
    /// det(1 − M T) instead of det(T − M).
    #[arg(long)]
    pub fredholm: bool,
}

#[derive(Args, Debug, Clone)]
pub struct LiftArgs {
    #[arg(long)]
    pub p: u64,
    #[arg(long = "N")]
    pub n: u64,
    /// Tame character modulo 4N.
    #[arg(long = "char", default_value = "trivial")]
    pub chi: String,
    #[arg(long, default_value_t = 1)]
    pub lambda: u64,
    #[arg(long, default_value_t = 0)]
    pub j: i64,
    /// Number of lift coefficients.
    #[arg(long, default_value_t = 30)]
    pub prec: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Both,
}

#[derive(Args, Debug, Clone)]
pub struct ScanArgs {
    #[arg(long)]
    pub p: u64,
    #[arg(long = "N", default_value_t = 1)]
    pub n: u64,
    #[arg(long = "char", default_value = "trivial")]
    pub chi: String,
    /// "1,2" (all j for each λ) or explicit points "1:0,2:3".
    #[arg(long, default_value = "1,2,3")]
    pub grid: String,
    /// Precision ceiling; the run is refused if a slice needs more.
    #[arg(long)]
    pub prec: Option<usize>,
    /// Output path prefix; writes PREFIX.json and PREFIX.csv.
    #[arg(long, default_value = "scan")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    pub format: Format,
    /// Primes ℓ ∤ 2Np used for matching.
    #[arg(long, default_value_t = 2)]
    pub good_primes: usize,
}

#[derive(Args, Debug, Clone)]
pub struct ThetaArgs {
    #[arg(long, default_value_t = 5)]
    pub p: u64,
    #[arg(long, default_value = "-3")]
    pub psi: String,
    #[arg(long, default_value_t = 50)]
    pub prec: usize,
    /// Also check the lift in M_2(2r²p).
    #[arg(long)]
    pub membership: bool,
}

/// Validated parameters of a batch run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub p: u64,
    pub n: u64,
    pub prec: Option<usize>,
    pub grid: Vec<WeightPoint>,
    pub chi: DirichletChar,
    pub cache_dir: Option<PathBuf>,
    pub format: Format,
    pub seed: u64,
    pub good_primes: usize,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn from_scan_args(a: &ScanArgs, cache_dir: Option<PathBuf>, seed: u64) -> Result<RunConfig> {
        check_p_n(a.p, a.n)?;
        let chi = parse_char(&a.chi, 4 * a.n)?;
        let grid = parse_grid(&a.grid, a.p)?;
        let cfg = RunConfig {
            p: a.p,
            n: a.n,
            prec: a.prec,
            grid,
            chi,
            cache_dir,
            format: a.format,
            seed,
            good_primes: a.good_primes,
            out: a.out.clone(),
        };
        if let Some(ceiling) = cfg.prec {
            let need = cfg.scan_config()?.required_precision();
            if need > ceiling {
                return Err(Error::Precision { need, have: ceiling });
            }
        }
        Ok(cfg)
    }

    pub fn scan_config(&self) -> Result<ScanConfig> {
        let mut c = ScanConfig::new(self.p, self.n, self.chi.clone(), self.grid.clone())?;
        c.seed = self.seed;
        c.good_primes = self.good_primes;
        c.cache = self.cache_dir.as_ref().map(SpaceCache::new);
        Ok(c)
    }
}

fn check_p_n(p: u64, n: u64) -> Result<()> {
    if p == 2 || !is_prime(p) {
        return Err(Error::Invalid(format!("p = {p} is not an odd prime")));
    }
    if n == 0 || gcd(p as i64, n as i64) != 1 {
        return Err(Error::Invalid(format!("p = {p} must not divide N = {n}")));
    }
    Ok(())
}

/// Parse a weight as "k/2" (k odd, at least 3) or an integer at least 1;
/// returns the numerator over 2.
pub fn parse_weight(s: &str) -> Result<u64> {
    let bad = || Error::Invalid(format!("weight {s:?} is not of the form k/2 or an integer"));
    let s = s.trim();
    let k2 = match s.split_once('/') {
        Some((a, "2")) => {
            let k: u64 = a.trim().parse().map_err(|_| bad())?;
            if k % 2 == 0 {
                k
            } else {
                if k < 3 {
                    return Err(Error::Invalid(format!("weight {s} is below 3/2")));
                }
                k
            }
        }
        Some(_) => return Err(bad()),
        None => 2 * s.parse::<u64>().map_err(|_| bad())?,
    };
    if k2 == 0 {
        return Err(Error::Invalid("weight 0 is not supported".into()));
    }
    Ok(k2)
}

/// Parse a character label and extend it to `modulus`.
pub fn parse_char(s: &str, modulus: u64) -> Result<DirichletChar> {
    let t = s.trim();
    if t == "trivial" || t == "1" {
        return Ok(DirichletChar::trivial(modulus));
    }
    let chi = match t.parse::<i64>() {
        Ok(d) if d != 0 => {
            if d.rem_euclid(4) > 1 {
                return Err(Error::BadCharacter(s.into(), "not a discriminant".into()));
            }
            quadratic(d)
        }
        _ => t.parse::<DirichletChar>()?,
    };
    if modulus % chi.conductor() != 0 {
        return Err(Error::BadCharacter(
            s.into(),
            format!("conductor {} does not divide {modulus}", chi.conductor()),
        ));
    }
    if chi.modulus() == modulus {
        Ok(chi)
    } else {
        chi.primitive().extend(modulus)
    }
}

/// "1,2" → all j for λ = 1, 2; "1:0,2:3" → explicit points.
pub fn parse_grid(s: &str, p: u64) -> Result<Vec<WeightPoint>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let bad = || Error::Invalid(format!("grid entry {part:?} is not λ or λ:j"));
        match part.split_once(':') {
            Some((l, j)) => {
                let l: u64 = l.trim().parse().map_err(|_| bad())?;
                let j: i64 = j.trim().parse().map_err(|_| bad())?;
                out.push(WeightPoint::new(l, j, p)?);
            }
            None => {
                let l: u64 = part.parse().map_err(|_| bad())?;
                out.extend(ScanConfig::full_grid(p, &[l]));
            }
        }
    }
    if out.iter().any(|w| w.lambda == 0) {
        return Err(Error::Invalid("λ must be at least 1".into()));
    }
    Ok(out)
}

/// Write through a temporary file and rename.
pub fn write_atomic(path: &Path, data: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    let mut f = fs::File::create(&tmp)?;
    f.write_all(data)?;
    f.sync_all()?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn cache_of(dir: &Option<PathBuf>) -> Option<SpaceCache> {
    dir.as_ref().map(SpaceCache::new)
}

fn load_space(a: &SpaceArgs, cache: &Option<SpaceCache>, scale: u64) -> Result<ModularFormSpace> {
    let k2 = parse_weight(&a.weight)?;
    let chi = parse_char(&a.chi, a.level)?;
    let prec = a.prec.unwrap_or_else(|| space_precision(k2, a.level, scale));
    match cache {
        Some(c) => {
            let key = halfcurve::spaces::space_key(k2, a.level, &chi, !a.full, prec);
            eprintln!("cache {}: {}", if c.load(&key).is_some() { "hit" } else { "miss" }, c.dir().display());
            c.get_or_build(k2, a.level, &chi, !a.full, prec)
        }
        None => build_space(k2, a.level, &chi, !a.full, prec),
    }
}

/// Theta series θ_ψ lying in a weight 3/2 space.
fn theta_notes(space: &ModularFormSpace) -> Vec<String> {
    let mut notes = Vec::new();
    if space.weight_num() != 3 || space.dim() == 0 {
        return notes;
    }
    let level = space.level();
    let mut r = 1;
    while 4 * r * r <= level {
        if level % (4 * r * r) == 0 {
            for psi in DirichletChar::all(r) {
                if psi.is_primitive() && !psi.is_even() {
                    if let Ok(f) = theta_psi(&psi, space.prec()) {
                        if space.coordinates(&f).is_ok() {
                            notes.push(format!("contains theta_psi for psi = {}", psi.label()));
                        }
                    }
                }
            }
        }
        r += 1;
    }
    notes
}

pub fn cmd_space(a: &SpaceArgs, cache_dir: &Option<PathBuf>) -> Result<String> {
    let space = load_space(a, &cache_of(cache_dir), 1)?;
    let oracle = dimension_oracle(space.weight_num(), space.level(), space.character(), space.cuspidal())?;
    let mut out = format!("{}: dimension {} (formula {})\n", space.name(), space.dim(), oracle);
    out.push_str(&format!("precision {}\n", space.prec()));
    out.push_str(&format!("key {}\n", space.key()));
    for n in theta_notes(&space) {
        out.push_str(&n);
        out.push('\n');
    }
    Ok(out)
}

fn op_scale(label: &OpLabel) -> u64 {
    match label {
        OpLabel::T(l) | OpLabel::U(l) | OpLabel::UpHalf(l) => *l,
        OpLabel::Tsq(l) | OpLabel::Usq(l) => l * l,
        _ => 1,
    }
}

fn build_op(space: &ModularFormSpace, label: &OpLabel, p: Option<u64>) -> Result<HeckeMatrix> {
    match label {
        OpLabel::T(l) => t_ell_integral(space, *l),
        OpLabel::U(l) => u_ell_integral(space, *l),
        OpLabel::Tsq(l) => t_ellsq_half(space, *l),
        OpLabel::Usq(l) => u_ellsq_half(space, *l),
        OpLabel::DiamondTame(d) => match p {
            Some(p) => diamond(space, *d, DiamondPart::Tame(p)),
            None => diamond(space, *d, DiamondPart::Full),
        },
        OpLabel::DiamondP(d) => {
            let p = p.ok_or_else(|| Error::Invalid("<d>_p needs --p".into()))?;
            diamond(space, *d, DiamondPart::P(p))
        }
        OpLabel::UpHalf(_) => Err(Error::Invalid("Up_half maps between two spaces; not available here".into())),
    }
}

pub fn cmd_hecke(a: &OpArgs, cache_dir: &Option<PathBuf>) -> Result<String> {
    let label: OpLabel = a.op.parse()?;
    let space = load_space(&a.space, &cache_of(cache_dir), op_scale(&label))?;
    let m = build_op(&space, &label, a.p)?;
    Ok(serde_json::to_string_pretty(&matrix_json(&m))? + "\n")
}

fn poly_line(f: &Poly<CycloElem>) -> String {
    f.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ")
}

pub fn cmd_charpoly(a: &CharpolyArgs, cache_dir: &Option<PathBuf>) -> Result<String> {
    let label: OpLabel = a.op.op.parse()?;
    let space = load_space(&a.op.space, &cache_of(cache_dir), op_scale(&label))?;
    let m = build_op(&space, &label, a.op.p)?;
    let f = charpoly(&m, a.fredholm)?;
    let mut out = format!(
        "{} of {label} on {} (coefficients from degree 0)\n[{}]\n",
        if a.fredholm { "det(1 - M T)" } else { "det(T - M)" },
        space.name(),
        poly_line(&f)
    );
    if let (Some(p), true) = (a.op.p, a.fredholm) {
        let m = f.coeffs().iter().fold(1, |acc, c| halfcurve::arith::numtheory::lcm(acc, c.order()));
        let fq = f.to_rational().unwrap_or_else(|| f.norm_to_q(m));
        let np = newton_polygon(&fq, p)?;
        let slopes: Vec<String> = np.slopes.iter().map(|(s, k)| format!("{s} x{k}")).collect();
        out.push_str(&format!("slopes at {p}: [{}]\n", slopes.join(", ")));
    }
    Ok(out)
}

pub fn cmd_lift(a: &LiftArgs, cache_dir: &Option<PathBuf>, seed: u64) -> Result<String> {
    check_p_n(a.p, a.n)?;
    let chi = parse_char(&a.chi, 4 * a.n)?;
    let w = WeightPoint::new(a.lambda, a.j, a.p)?;
    let level = 4 * a.n * a.p;
    let tau = DirichletChar::teichmuller(a.p)?.pow(w.j as i64);
    let eps = chi.extend(level)?.mul(&tau.extend(level)?);
    let k2 = w.half_weight_num();
    let prec = space_precision(k2, level, a.p * a.p).max(a.prec * a.prec + 1);
    let cache = cache_of(cache_dir);
    let space = match &cache {
        Some(c) => c.get_or_build(k2, level, &eps, true, prec)?,
        None => build_space(k2, level, &eps, true, prec)?,
    };
    let mut ops = vec![u_ellsq_half(&space, a.p)?];
    for l in halfcurve::arith::numtheory::prime_divisors(a.n) {
        if l != 2 {
            ops.push(u_ellsq_half(&space, l)?);
        }
    }
    if let Some(l) = halfcurve::arith::numtheory::primes_below(100)
        .into_iter()
        .find(|l| (2 * a.n * a.p) % l != 0)
    {
        ops.push(t_ellsq_half(&space, l)?);
    }
    let ctx = SystemContext {
        side: Side::HalfIntegral,
        level,
        lambda: w.lambda,
        j: w.j,
        p: w.p,
        tame_char: chi.clone(),
    };
    let systems = eigensystems(&space, &ops, &EigenOptions::new(OpLabel::Usq(a.p), seed), &ctx)?;
    let mut records = Vec::new();
    for sys in &systems {
        let entry = match common_eigenvector(&ops, sys) {
            Ok((v, dim)) => {
                let f = space.combination(&v);
                let int_eps = |lvl: u64| -> Result<DirichletChar> {
                    let e = eps.mul(&eps).primitive();
                    e.extend(lvl)
                };
                let build = |lvl: u64| {
                    let k = 2 * w.lambda;
                    let e = int_eps(lvl)?;
                    let cusp = w.lambda > 1;
                    let pr = space_precision(2 * k, lvl, 7).max(a.prec);
                    match &cache {
                        Some(c) => c.get_or_build(2 * k, lvl, &e, cusp, pr),
                        None => build_space(2 * k, lvl, &e, cusp, pr),
                    }
                };
                match lift_eigenform(&f, &ctx, build, a.prec) {
                    Ok(r) => {
                        let mut j = r.to_json(a.prec);
                        j["eigenspace_dim"] = serde_json::json!(dim);
                        j
                    }
                    Err(e) => serde_json::json!({"source": sys.to_json(), "error": e.to_string(), "eigenspace_dim": dim}),
                }
            }
            Err(e) => serde_json::json!({"source": sys.to_json(), "error": e.to_string()}),
        };
        records.push(entry);
    }
    let text = serde_json::to_string_pretty(&serde_json::json!({
        "space": space.name(),
        "systems": records,
    }))? + "\n";
    if let Some(path) = &a.out {
        write_atomic(path, text.as_bytes())?;
    }
    Ok(text)
}

/// JSON text of a scan report.
pub fn report_json(r: &ScanReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(&r.to_json())? + "\n")
}

pub fn report_csv(r: &ScanReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(ScanReport::CSV_HEADER).map_err(|e| Error::Io(e.to_string()))?;
    for row in r.csv_rows() {
        w.write_record(&row).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Failure table for a scan that did not satisfy every invariant.
pub fn failure_table(r: &ScanReport) -> String {
    let mut out = String::new();
    for pt in &r.points {
        let w = pt.point;
        if let Some(e) = &pt.error {
            out.push_str(&format!("lambda={} j={}: error {e}\n", w.lambda, w.j));
        }
        if pt.error.is_none() && !pt.divisibility_ok() {
            out.push_str(&format!("lambda={} j={}: divisibility fails\n", w.lambda, w.j));
        }
        if !pt.matching_ok() {
            out.push_str(&format!("lambda={} j={}: unmatched small-slope system\n", w.lambda, w.j));
        }
    }
    for i in &r.involution {
        if !(i.involutive && i.partner_index.is_some() && i.same_image) {
            out.push_str(&format!(
                "lambda={} j={} system {}: involution pairing fails\n",
                i.point.lambda, i.point.j, i.index
            ));
        }
    }
    out
}

/// Run the scan and write its outputs; returns the report and the written paths.
pub fn cmd_scan(cfg: &RunConfig) -> Result<(ScanReport, Vec<PathBuf>)> {
    let report = scan(&cfg.scan_config()?)?;
    let mut written = Vec::new();
    if matches!(cfg.format, Format::Json | Format::Both) {
        let path = cfg.out.with_extension("json");
        write_atomic(&path, report_json(&report)?.as_bytes())?;
        written.push(path);
    }
    if matches!(cfg.format, Format::Csv | Format::Both) {
        let path = cfg.out.with_extension("csv");
        write_atomic(&path, report_csv(&report)?.as_bytes())?;
        written.push(path);
    }
    Ok((report, written))
}

/// Run a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result: Result<(String, i32)> = match &cli.command {
        Command::Space(a) => cmd_space(a, &cli.cache_dir).map(|s| (s, EXIT_OK)),
        Command::Hecke(a) => cmd_hecke(a, &cli.cache_dir).map(|s| (s, EXIT_OK)),
        Command::Charpoly(a) => cmd_charpoly(a, &cli.cache_dir).map(|s| (s, EXIT_OK)),
        Command::Lift(a) => cmd_lift(a, &cli.cache_dir, cli.seed).map(|s| (s, EXIT_OK)),
        Command::ThetaExample(a) => theta::parse_psi(&a.psi)
            .and_then(|psi| theta::theta_example(a.p, &psi, a.prec, a.membership))
            .map(|r| {
                let code = if r.ok() { EXIT_OK } else { EXIT_INVARIANT };
                (r.render(a.prec.min(40)), code)
            }),
        Command::Scan(a) => RunConfig::from_scan_args(a, cli.cache_dir.clone(), cli.seed)
            .and_then(|cfg| cmd_scan(&cfg))
            .map(|(r, paths)| {
                let mut s = String::new();
                for p in paths {
                    s.push_str(&format!("wrote {}\n", p.display()));
                }
                s.push_str(&format!(
                    "points {}, matches {}, divisibility {}, matching {}, involution {}\n",
                    r.points.len(),
                    r.matches().len(),
                    r.divisibility_ok(),
                    r.matching_ok(),
                    r.involution_ok()
                ));
                if r.all_ok() {
                    (s, EXIT_OK)
                } else {
                    s.push_str(&failure_table(&r));
                    (s, EXIT_INVARIANT)
                }
            }),
    };
    match result {
        Ok((text, code)) => {
            print!("{text}");
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
