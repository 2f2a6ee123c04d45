//! Command-line driver.
//!
//! Exit codes: 0 success, 1 a checked property failed (theorem falsification,
//! oracle mismatch, non-conserved quench), 2 invalid input.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::lattice::{LatticeShape, SiteOffset};
use crate::model::{catalog, load_model_file, random_model, CatalogModel, CouplingSet, ModelError, ModelParams};
use crate::observables::{
    self, entropy_scan, spectral_gap, summed_imaginary_invariant, verify_main_result, ContinuumGap, SurveyConfig, Tolerances,
};
use crate::oracle::{self, OracleError};
use crate::solver::{self, diagonalize, ground_covariance};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INVALID_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "quasifree", version, about = "Quadratic fermion lattices: spectra, invariants, entropy and exact checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// All 2s BdG eigenvalues per momentum and the spectral gap.
    Spectrum {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Inversion-breaking invariants, sign asymmetry and the gapped/gapless verdict.
    Invariants {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: CommonArgs,
        /// Offsets to report, e.g. `1,2,3` on a chain or `1,0;0,1` in 2D (default: all).
        #[arg(long)]
        offsets: Option<String>,
        /// Also require the gap to survive doubling every lattice axis.
        #[arg(long)]
        doubling: bool,
    },
    /// Randomized test that gapped models have vanishing invariants.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 2)]
        range: usize,
        /// Spin of every draw (default: alternate 1 and 2).
        #[arg(long)]
        spin: Option<usize>,
        #[arg(long, default_value_t = 32)]
        sites: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.1)]
        gap_min: f64,
        #[arg(long, default_value_t = 0.05)]
        doubled_gap_min: f64,
    },
    /// Block entanglement entropy versus block length on a chain.
    Entropy {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: CommonArgs,
        /// Block lengths: `4,8,16` or inclusive ranges `4..64` (default: 1..N/4).
        #[arg(long)]
        lengths: Option<String>,
    },
    /// Exact diagonalization in Fock space compared with the quasifree ground state.
    Oracle {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = oracle::DEFAULT_DEGENERACY_TOL)]
        degeneracy_tol: f64,
        /// Largest accepted correlator deviation and relative energy error.
        #[arg(long, default_value_t = 1e-9)]
        threshold: f64,
    },
    /// Invariants of the ground state of `--model` evolved under `--quench-model`.
    Quench {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value = "random")]
        quench_model: String,
        #[arg(long = "quench-param", value_name = "KEY=VALUE")]
        quench_params: Vec<String>,
        #[arg(long, default_value_t = 1)]
        quench_seed: u64,
        /// Comma-separated times (default 0,1,…,10).
        #[arg(long)]
        times: Option<String>,
        #[arg(long)]
        offsets: Option<String>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Catalog name (paper-p-model, twisted-chain, spinless-general, random) or a TOML model file.
    #[arg(long)]
    pub model: String,
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    /// Lattice size, `64` or `4,6`; overrides a model file's shape.
    #[arg(long)]
    pub dims: Option<String>,
    #[arg(long)]
    pub spin: Option<usize>,
    /// Seed for `--model random`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Reject model files that violate the closure constraints instead of projecting them.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Directory for CSV output and report.txt.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-6)]
    pub gap_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub inv_tol: f64,
    #[arg(long, default_value_t = solver::DEFAULT_ZERO_MODE_TOL)]
    pub zero_tol: f64,
}

impl CommonArgs {
    fn tolerances(&self) -> Result<Tolerances, CliError> {
        for (name, v) in [("gap-tol", self.gap_tol), ("inv-tol", self.inv_tol), ("zero-tol", self.zero_tol)] {
            if !(v > 0.0) {
                return Err(CliError::Input(format!("--{name} must be positive, got {v}")));
            }
        }
        Ok(Tolerances {
            gap_tol: self.gap_tol,
            inv_tol: self.inv_tol,
            zero_mode_tol: self.zero_tol,
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Compute(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INVALID_INPUT,
            CliError::Compute(_) | CliError::Io(_) => EXIT_CHECK_FAILED,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Invalid(v) => {
                let mut msg = format!("model violates {} closure constraint(s):", v.len());
                for x in &v {
                    let _ = write!(msg, "\n  {x}");
                }
                CliError::Input(msg)
            }
            other => CliError::Input(other.to_string()),
        }
    }
}

fn compute<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Compute(e.to_string())
}

/// Collected command output: the report text and any CSV files.
#[derive(Debug, Default)]
struct Output {
    report: String,
    files: Vec<(&'static str, String)>,
    status: i32,
}

impl Output {
    fn line(&mut self, s: impl AsRef<str>) {
        self.report.push_str(s.as_ref());
        self.report.push('\n');
    }
}

/// Full-precision float for CSV and reports.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, CliError> {
    text.split([',', 'x'])
        .map(|p| p.trim().parse().map_err(|_| CliError::Input(format!("cannot parse {what} `{text}`"))))
        .collect()
}

fn parse_params(raw: &[String]) -> Result<BTreeMap<String, f64>, CliError> {
    raw.iter()
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Input(format!("parameter `{kv}` is not KEY=VALUE")))?;
            let value = v.trim().parse().map_err(|_| CliError::Input(format!("parameter `{k}` has non-numeric value `{v}`")))?;
            Ok((k.trim().to_string(), value))
        })
        .collect()
}

fn parse_offsets(text: &str, shape: &LatticeShape) -> Result<Vec<SiteOffset>, CliError> {
    let groups: Vec<&str> = if shape.dim() == 1 {
        text.split([',', ';', ' ']).filter(|s| !s.is_empty()).collect()
    } else {
        text.split([';', ' ']).filter(|s| !s.is_empty()).collect()
    };
    groups
        .into_iter()
        .map(|g| {
            let comps: Vec<i64> = g
                .split(',')
                .map(|c| c.trim().parse().map_err(|_| CliError::Input(format!("cannot parse offset `{g}`"))))
                .collect::<Result<_, _>>()?;
            SiteOffset::from_signed(&comps, shape).map_err(|e| CliError::Input(e.to_string()))
        })
        .collect()
}

fn parse_lengths(text: &str) -> Result<Vec<usize>, CliError> {
    let mut out = Vec::new();
    for part in text.split(',').filter(|s| !s.trim().is_empty()) {
        let bad = || CliError::Input(format!("cannot parse block lengths `{text}`"));
        match part.split_once("..") {
            Some((a, b)) => {
                let a: usize = a.trim().parse().map_err(|_| bad())?;
                let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
                out.extend(a..=b);
            }
            None => out.push(part.trim().parse().map_err(|_| bad())?),
        }
    }
    Ok(out)
}

fn all_offsets_sorted(shape: &LatticeShape) -> Vec<SiteOffset> {
    let mut v: Vec<_> = shape.offsets().collect();
    v.sort_by_key(|n| n.signed(shape));
    v
}

struct ResolvedModel {
    couplings: CouplingSet,
    notes: Vec<String>,
}

fn resolve_model(name: &str, raw_params: &[String], args: &ModelArgs, seed: u64) -> Result<ResolvedModel, CliError> {
    let params = parse_params(raw_params)?;
    let dims = args.dims.as_deref().map(|d| parse_list::<usize>(d, "dims")).transpose()?;
    let catalog_entry = CatalogModel::ALL.iter().find(|m| m.name() == name);
    let shape_for = |default_spin: usize| -> Result<LatticeShape, CliError> {
        LatticeShape::new(dims.clone().unwrap_or_else(|| vec![64]), args.spin.unwrap_or(default_spin))
            .map_err(|e| CliError::Input(e.to_string()))
    };
    if let Some(model) = catalog_entry {
        let mut p = ModelParams::new(name, shape_for(model.spin())?);
        p.params = params;
        return Ok(ResolvedModel {
            couplings: catalog(&p)?,
            notes: vec![format!("model: {name}")],
        });
    }
    if name == "random" {
        let mut range = 1;
        let mut pairing = true;
        for (k, v) in &params {
            match k.as_str() {
                "range" if *v >= 0.0 && v.fract() == 0.0 => range = *v as usize,
                "pairing" => pairing = *v != 0.0,
                _ => return Err(CliError::Input(format!("unrecognized or invalid parameter `{k}` = {v} for `random`"))),
            }
        }
        let shape = shape_for(1)?;
        return Ok(ResolvedModel {
            couplings: random_model(&shape, range, pairing, seed)?,
            notes: vec![format!("model: random (range {range}, pairing {pairing}, seed {seed})")],
        });
    }
    let path = Path::new(name);
    if !path.exists() {
        return Err(CliError::Input(format!(
            "`{name}` is neither a catalog model ({}, random) nor an existing file",
            join(CatalogModel::ALL.iter().map(|m| m.name()))
        )));
    }
    if !params.is_empty() {
        return Err(CliError::Input("--param is not accepted for model files".into()));
    }
    let loaded = load_model_file(path)?;
    if args.strict && !loaded.violations.is_empty() {
        return Err(ModelError::Invalid(loaded.violations).into());
    }
    let mut notes = vec![format!("model: file {}", path.display())];
    if !loaded.violations.is_empty() {
        notes.push(format!(
            "warning: {} closure violation(s) projected away, projection distance {}",
            loaded.violations.len(),
            num(loaded.projection_distance)
        ));
        notes.extend(loaded.violations.iter().map(|v| format!("  {v}")));
    }
    let mut couplings = loaded.couplings;
    if let Some(spin) = args.spin.filter(|&s| s != couplings.shape().spin()) {
        return Err(CliError::Input(format!("--spin {spin} disagrees with the model file's spin {}", couplings.shape().spin())));
    }
    if let Some(d) = dims {
        let shape = LatticeShape::new(d, couplings.shape().spin()).map_err(|e| CliError::Input(e.to_string()))?;
        couplings = couplings.resized(shape)?;
    }
    Ok(ResolvedModel { couplings, notes })
}

fn shape_line(shape: &LatticeShape) -> String {
    format!("lattice: dims {:?}, spin {}", shape.dims(), shape.spin())
}

fn spectrum(model: &ModelArgs, out: &mut Output) -> Result<(), CliError> {
    let m = resolve_model(&model.model, &model.params, model, model.seed)?;
    let shape = m.couplings.shape().clone();
    let sol = diagonalize(&m.couplings).map_err(compute)?;
    let d = shape.dim();
    let n = 2 * shape.spin();
    let mut csv = join((1..=d).map(|i| format!("k{i}")).chain((0..n).map(|j| format!("lambda{j}"))));
    csv.push('\n');
    let mut worst = (f64::INFINITY, 0usize);
    for (flat, ms) in sol.momenta().iter().enumerate() {
        csv.push_str(&join(ms.k().components().iter().map(|c| c.to_string()).chain(ms.energies.iter().map(|&e| num(e)))));
        csv.push('\n');
        let local = ms.energies.iter().fold(f64::INFINITY, |a, e| a.min(e.abs()));
        if local < worst.0 {
            worst = (local, flat);
        }
    }
    m.notes.iter().for_each(|l| out.line(l));
    out.line(shape_line(&shape));
    out.line(format!("momenta: {}", shape.sites()));
    out.line(format!("gap: {}", num(spectral_gap(&sol))));
    out.line(format!("gap attained at k = {:?}", shape.momentum(worst.1).components()));
    out.files.push(("spectrum.csv", csv));
    Ok(())
}

fn invariants(model: &ModelArgs, common: &CommonArgs, offsets: Option<&str>, doubling: bool, out: &mut Output) -> Result<(), CliError> {
    let tols = common.tolerances()?;
    let m = resolve_model(&model.model, &model.params, model, model.seed)?;
    let shape = m.couplings.shape().clone();
    let report = verify_main_result(&m.couplings, &tols, doubling).map_err(compute)?;
    let chosen = match offsets {
        Some(t) => parse_offsets(t, &shape)?,
        None => all_offsets_sorted(&shape),
    };
    let d = shape.dim();
    let mut csv = join((1..=d).map(|i| format!("n{i}")).chain(["invariant".to_string()]));
    csv.push('\n');
    for n in &chosen {
        csv.push_str(&join(n.signed(&shape).iter().map(|c| c.to_string()).chain([num(report.invariant[n])])));
        csv.push('\n');
    }
    let mut asym = join((1..=d).map(|i| format!("k{i}")).chain(["band", "M", "P"].map(String::from)));
    asym.push('\n');
    for e in &report.asymmetry.entries {
        asym.push_str(&join(e.k.components().iter().map(|c| c.to_string()).chain([e.band.to_string(), num(e.m), num(e.p)])));
        asym.push('\n');
    }

    m.notes.iter().for_each(|l| out.line(l));
    out.line(shape_line(&shape));
    out.line(format!("gap: {}", num(report.gap)));
    if let Some(g) = report.doubled_gap {
        out.line(format!("gap on doubled lattice: {}", num(g)));
    }
    out.line(format!("zero modes: {}", report.zero_modes.len()));
    out.line(format!("asymmetric (k, band) entries: {}", report.asymmetry.entries.len()));
    out.line(format!("indeterminate (k, band) entries: {}", report.asymmetry.indeterminate.len()));
    for n in &chosen {
        out.line(format!("invariant {:?}: {}", n.signed(&shape), num(report.invariant[n])));
    }
    out.line(format!("max |invariant|: {}", num(report.max_abs_invariant())));
    match &report.continuum {
        Some(ContinuumGap::Closed { dims }) => {
            out.line(format!("infinite-lattice gap: closed (a band crosses zero between grid points, seen on dims {dims:?})"))
        }
        Some(ContinuumGap::Certified { lower_bound, dims }) => {
            out.line(format!("infinite-lattice gap: open, at least {} (certified on dims {dims:?})", num(*lower_bound)))
        }
        Some(ContinuumGap::Unresolved { grid_gap, slack, dims }) => out.line(format!(
            "infinite-lattice gap: unresolved on dims {dims:?} (grid gap {}, slack {})",
            num(*grid_gap),
            num(*slack)
        )),
        None => {}
    }
    if report.falsification {
        let (n, v) = report.worst_offset().expect("non-empty invariant map");
        out.line(format!(
            "FALSIFICATION: gap {} > {} but invariant at {:?} is {}",
            num(report.gap),
            num(tols.gap_tol),
            n.signed(&shape),
            num(v)
        ));
        out.status = EXIT_CHECK_FAILED;
    }
    out.line(format!("verdict: {}", report.verdict));
    out.files.push(("invariants.csv", csv));
    out.files.push(("asymmetry.csv", asym));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn verify(
    common: &CommonArgs,
    count: usize,
    range: usize,
    spin: Option<usize>,
    sites: usize,
    seed: u64,
    gap_min: f64,
    doubled_gap_min: f64,
    out: &mut Output,
) -> Result<(), CliError> {
    let tols = common.tolerances()?;
    let cfg = SurveyConfig {
        sites,
        spins: spin.map_or(vec![1, 2], |s| vec![s]),
        range,
        seed,
        gap_min,
        doubled_gap_min,
        inv_tol: tols.inv_tol,
        zero_mode_tol: tols.zero_mode_tol,
    };
    if 2 * range >= sites {
        return Err(CliError::Input(format!("--range {range} too large for --sites {sites}")));
    }
    if count == 0 {
        out.line("warning: --count 0, nothing to test");
    }
    let s = cfg.run(count).map_err(compute)?;
    out.line(format!("drawn: {}", s.drawn));
    out.line(format!("gapped (gap > {gap_min} at N={sites}, > {doubled_gap_min} at N={}): {}", 2 * sites, s.gapped));
    out.line(format!("  infinite-lattice gap certified open: {}", s.certified));
    out.line(format!(
        "  gap closes between grid points (band sign change): {}, their max |invariant| {}",
        s.closed_between_grid_points,
        num(s.closed_max_invariant)
    ));
    out.line(format!("  unresolved: {}", s.unresolved));
    out.line(format!("worst |invariant| over models not shown gapless: {}", num(s.worst_invariant)));
    if let Some(d) = s.worst_draw {
        out.line(format!("worst draw: index {}, spin {}, pairing {}, seed {}", d.index, d.spin, d.pairing, d.seed));
    }
    for f in &s.falsifications {
        out.line(format!(
            "FALSIFICATION: draw {} (spin {}, pairing {}, seed {}), gap {}, invariant {}",
            f.draw.index,
            f.draw.spin,
            f.draw.pairing,
            f.draw.seed,
            num(f.gap),
            num(f.max_invariant.unwrap_or(f64::NAN))
        ));
    }
    out.line(format!("falsifications: {}", s.falsifications.len()));
    out.line(if s.passed() { "result: pass" } else { "result: fail" });
    if !s.passed() {
        out.status = EXIT_CHECK_FAILED;
    }
    Ok(())
}

fn entropy(model: &ModelArgs, common: &CommonArgs, lengths: Option<&str>, out: &mut Output) -> Result<(), CliError> {
    let tols = common.tolerances()?;
    let m = resolve_model(&model.model, &model.params, model, model.seed)?;
    let shape = m.couplings.shape().clone();
    if shape.dim() != 1 {
        return Err(CliError::Input(format!("entropy scans need a chain, model has d = {}", shape.dim())));
    }
    let lengths = match lengths {
        Some(t) => parse_lengths(t)?,
        None => (1..=(shape.sites() / 4).max(1)).collect(),
    };
    let cov = ground_covariance(&diagonalize(&m.couplings).map_err(compute)?, tols.zero_mode_tol);
    let scan = entropy_scan(&cov, &lengths).map_err(|e| match e {
        observables::EntropyError::TooFewPoints(_) | observables::EntropyError::BlockLength { .. } | observables::EntropyError::Unsupported(_) => {
            CliError::Input(e.to_string())
        }
        other => compute(other),
    })?;
    let mut csv = String::from("L,S\n");
    for (l, s) in &scan.points {
        let _ = writeln!(csv, "{l},{}", num(*s));
    }
    m.notes.iter().for_each(|l| out.line(l));
    out.line(shape_line(&shape));
    for (l, s) in &scan.points {
        out.line(format!("S({l}) = {}", num(*s)));
    }
    out.line(format!(
        "fit: S = {} ln L + {} (rms residual {}, {} points)",
        num(scan.fit.a),
        num(scan.fit.b),
        num(scan.fit.residual),
        scan.fit.points
    ));
    out.line(format!("saturation estimate: {}", num(scan.saturation)));
    out.line(format!("classification: {}", scan.class.label()));
    out.files.push(("entropy.csv", csv));
    Ok(())
}

fn oracle_cmd(model: &ModelArgs, degeneracy_tol: f64, threshold: f64, out: &mut Output) -> Result<(), CliError> {
    let m = resolve_model(&model.model, &model.params, model, model.seed)?;
    let shape = m.couplings.shape().clone();
    m.notes.iter().for_each(|l| out.line(l));
    out.line(shape_line(&shape));
    out.line(format!("modes: {}", shape.modes()));
    let r = oracle::oracle_check(&m.couplings, degeneracy_tol).map_err(|e| match e {
        OracleError::Eigen { .. } => compute(e),
        other => CliError::Input(other.to_string()),
    })?;
    out.line(format!("exact ground energy: {}", num(r.exact_energy)));
    out.line(format!("quasifree ground energy: {}", num(r.quasifree_energy)));
    out.line(format!("relative energy error: {}", num(r.energy_error)));
    out.line(format!("many-body gap: {}", num(r.many_body_gap)));
    out.line(format!("max correlator deviation: {}", num(r.correlator_deviation)));
    let ok = r.correlator_deviation <= threshold && r.energy_error <= threshold;
    out.line(if ok { "result: pass" } else { "result: fail" });
    if !ok {
        out.status = EXIT_CHECK_FAILED;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn quench(
    model: &ModelArgs,
    common: &CommonArgs,
    quench_model: &str,
    quench_params: &[String],
    quench_seed: u64,
    times: Option<&str>,
    offsets: Option<&str>,
    out: &mut Output,
) -> Result<(), CliError> {
    let tols = common.tolerances()?;
    let m = resolve_model(&model.model, &model.params, model, model.seed)?;
    let shape = m.couplings.shape().clone();
    let q_args = ModelArgs {
        model: quench_model.to_string(),
        params: quench_params.to_vec(),
        dims: Some(join(shape.dims())),
        spin: Some(shape.spin()),
        seed: quench_seed,
        strict: model.strict,
    };
    let q = resolve_model(quench_model, quench_params, &q_args, quench_seed)?;
    if q.couplings.shape() != &shape {
        return Err(CliError::Input(format!(
            "quench Hamiltonian lives on dims {:?} spin {}, state on dims {:?} spin {}",
            q.couplings.shape().dims(),
            q.couplings.shape().spin(),
            shape.dims(),
            shape.spin()
        )));
    }
    let times: Vec<f64> = match times {
        Some(t) => parse_list(t, "times")?,
        None => (0..=10).map(f64::from).collect(),
    };
    let chosen = match offsets {
        Some(t) => parse_offsets(t, &shape)?,
        None => all_offsets_sorted(&shape),
    };
    let cov = ground_covariance(&diagonalize(&m.couplings).map_err(compute)?, tols.zero_mode_tol);
    let d = shape.dim();
    let mut csv = join(["t".to_string()].into_iter().chain((1..=d).map(|i| format!("n{i}"))).chain(["invariant".to_string()]));
    csv.push('\n');
    let mut extremes: BTreeMap<SiteOffset, (f64, f64)> = BTreeMap::new();
    for &t in &times {
        let evolved = solver::evolve_quench(&cov, &q.couplings, t).map_err(compute)?;
        let inv = summed_imaginary_invariant(&solver::real_space(&evolved, &chosen).map_err(compute)?);
        for n in &chosen {
            let v = inv[n];
            csv.push_str(&join([num(t)].into_iter().chain(n.signed(&shape).iter().map(|c| c.to_string())).chain([num(v)])));
            csv.push('\n');
            let e = extremes.entry(n.clone()).or_insert((v, v));
            e.0 = e.0.min(v);
            e.1 = e.1.max(v);
        }
    }
    let spread = extremes.values().map(|(lo, hi)| hi - lo).fold(0.0, f64::max);
    m.notes.iter().for_each(|l| out.line(l));
    q.notes.iter().for_each(|l| out.line(format!("quench {l}")));
    out.line(shape_line(&shape));
    out.line(format!("times: {}", join(times.iter().map(|&t| num(t)))));
    out.line(format!("max spread of any invariant over time: {}", num(spread)));
    let ok = spread < 1e-9;
    out.line(if ok { "result: conserved" } else { "result: NOT conserved" });
    if !ok {
        out.status = EXIT_CHECK_FAILED;
    }
    out.files.push(("quench.csv", csv));
    Ok(())
}

fn dispatch(cli: &Cli, out: &mut Output) -> Result<(), CliError> {
    match &cli.command {
        Command::Spectrum { model, .. } => spectrum(model, out),
        Command::Invariants {
            model,
            common,
            offsets,
            doubling,
        } => invariants(model, common, offsets.as_deref(), *doubling, out),
        Command::Verify {
            common,
            count,
            range,
            spin,
            sites,
            seed,
            gap_min,
            doubled_gap_min,
        } => verify(common, *count, *range, *spin, *sites, *seed, *gap_min, *doubled_gap_min, out),
        Command::Entropy { model, common, lengths } => entropy(model, common, lengths.as_deref(), out),
        Command::Oracle {
            model,
            degeneracy_tol,
            threshold,
            ..
        } => oracle_cmd(model, *degeneracy_tol, *threshold, out),
        Command::Quench {
            model,
            common,
            quench_model,
            quench_params,
            quench_seed,
            times,
            offsets,
        } => quench(model, common, quench_model, quench_params, *quench_seed, times.as_deref(), offsets.as_deref(), out),
    }
}

fn out_dir(cli: &Cli) -> Option<&Path> {
    let common = match &cli.command {
        Command::Spectrum { common, .. }
        | Command::Invariants { common, .. }
        | Command::Verify { common, .. }
        | Command::Entropy { common, .. }
        | Command::Oracle { common, .. }
        | Command::Quench { common, .. } => common,
    };
    common.out.as_deref()
}

fn write_outputs(dir: &Path, output: &Output) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, body) in &output.files {
        std::fs::write(dir.join(name), body)?;
    }
    std::fs::write(dir.join("report.txt"), &output.report)
}

/// Parses `args` (including the program name), runs the command, prints the
/// report to `stdout` and diagnostics to `stderr`, and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    let mut output = Output::default();
    let result = dispatch(&cli, &mut output).and_then(|()| {
        if let Some(dir) = out_dir(&cli) {
            write_outputs(dir, &output)?;
        }
        Ok(())
    });
    let _ = stdout.write_all(output.report.as_bytes());
    match result {
        Ok(()) => output.status,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
