//! Batch front-end: loads a JSON campaign document, runs one verification
//! command, and writes `report.json` plus CSV data files.
//!
//! Exit status is 0 when every assertion passes, 1 when an assertion fails
//! or a computation errors out, and 2 when the command line or the config
//! document is invalid. Nothing is written unless all computations finish.

use std::f64::consts::{PI, TAU};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::asymptotics::{
    hm_problem, hm_slice_residual, random_band_limited, theorem3_report, write_sweep_csv,
    AsymptoticProblem, MeanCurvatureSample, ProblemDocument,
};
use crate::comparison::{build_profile, eval_f, ComparisonProfile};
use crate::error::{Error, Result};
use crate::levelset::{default_grid, inradius, monotonicity_report, theorem1_disk_report, trace, MonotonicityOptions};
use crate::stability::{theorem1_nondisk_analysis, GeodesicOptions};
use crate::surfaces::{
    annulus, euclidean_disk, flat_annulus, flat_cylinder, hm_annulus, hm_cross_section,
    hyperbolic_annulus, hyperbolic_disk, perturbed_poincare_disk, poincare_disk, AngularMode,
    ConformalSurface, SmoothPerturbation, Surface,
};
use crate::systole::{brute_force_systole, constrained_systole, hm_sigma, FlatTorus};

/// Version tag expected in every campaign document.
pub const CONFIG_VERSION: u32 = 1;
/// Version tag written to `report.json`.
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Monotonicity,
    Theorem1Disk,
    Theorem1Annulus,
    Systole,
    HmVerify,
    MeanCurvature,
    Theorem3,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Monotonicity => "monotonicity",
            Command::Theorem1Disk => "theorem1-disk",
            Command::Theorem1Annulus => "theorem1-annulus",
            Command::Systole => "systole",
            Command::HmVerify => "hm-verify",
            Command::MeanCurvature => "mean-curvature",
            Command::Theorem3 => "theorem3",
        }
    }
}

#[derive(Debug, Clone, Parser)]
#[command(name = "syslab", version, about = "Run a systolab verification campaign")]
pub struct Campaign {
    #[arg(value_enum)]
    pub command: Command,
    /// Campaign document; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for report.json and CSV files.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Seed for randomized inputs.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Multiplier applied to every tolerance.
    #[arg(long, default_value_t = 1.0)]
    pub tol_scale: f64,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    /// Signed distance to the threshold, nonnegative when passing.
    pub margin: f64,
}

impl Assertion {
    /// `value ≤ bound`.
    fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        let margin = bound - value;
        Assertion { name: name.into(), pass: margin >= 0.0, margin }
    }

    /// `value ≥ bound`.
    fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        let margin = value - bound;
        Assertion { name: name.into(), pass: margin >= 0.0, margin }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: u32,
    pub command: String,
    pub seed: u64,
    pub tol_scale: f64,
    pub pass: bool,
    pub assertions: Vec<Assertion>,
    pub data: Value,
}

/// Why a campaign stopped before producing a report.
#[derive(Debug)]
pub enum Failure {
    /// Invalid command line, config document, or input parameters.
    Input(Error),
    /// A computation did not complete.
    Compute(Error),
}

impl Failure {
    pub fn status(&self) -> i32 {
        match self {
            Failure::Input(_) => 2,
            Failure::Compute(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Input(e) => write!(f, "invalid input: {e}"),
            Failure::Compute(e) => write!(f, "computation failed: {e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e)
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn input<T>(r: Result<T>) -> Outcome<T> {
    r.map_err(Failure::Input)
}

struct Output {
    assertions: Vec<Assertion>,
    data: Value,
    files: Vec<(String, Vec<u8>)>,
}

struct Ctx {
    seed: u64,
    tol_scale: f64,
}

impl Ctx {
    fn tol(&self, t: f64) -> f64 {
        t * self.tol_scale
    }

    /// Independent stream `index` of the campaign seed.
    fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

/// Parses `args` (program name first), runs the campaign, prints
/// diagnostics, and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let campaign = match Campaign::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&campaign) {
        Ok(report) => {
            for a in report.assertions.iter().filter(|a| !a.pass) {
                eprintln!("FAIL {}: margin {:.6e}", a.name, a.margin);
            }
            println!(
                "{}: {}/{} assertions passed",
                report.command,
                report.assertions.iter().filter(|a| a.pass).count(),
                report.assertions.len()
            );
            if report.pass {
                0
            } else {
                1
            }
        }
        Err(f) => {
            eprintln!("{f}");
            f.status()
        }
    }
}

/// Runs a campaign and writes its artifacts into `campaign.out`.
pub fn run(campaign: &Campaign) -> Outcome<Report> {
    if !(campaign.tol_scale > 0.0) || !campaign.tol_scale.is_finite() {
        return Err(Failure::Input(Error::Schema(format!(
            "--tol-scale must be positive, got {}",
            campaign.tol_scale
        ))));
    }
    let text = match &campaign.config {
        Some(p) => input(fs::read_to_string(p).map_err(Error::from))?,
        None => format!("{{\"version\": {CONFIG_VERSION}}}"),
    };
    let ctx = Ctx {
        seed: campaign.seed,
        tol_scale: campaign.tol_scale,
    };
    let out = match campaign.jobs {
        Some(0) => return Err(Failure::Input(Error::Schema("--jobs must be positive".into()))),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Failure::Input(Error::Schema(e.to_string())))?;
            pool.install(|| dispatch(campaign.command, &text, &ctx))?
        }
        None => dispatch(campaign.command, &text, &ctx)?,
    };
    let report = Report {
        version: REPORT_VERSION,
        command: campaign.command.name().into(),
        seed: campaign.seed,
        tol_scale: campaign.tol_scale,
        pass: out.assertions.iter().all(|a| a.pass),
        assertions: out.assertions,
        data: out.data,
    };
    write_artifacts(&campaign.out, &out.files, &report)?;
    Ok(report)
}

fn write_artifacts(dir: &Path, files: &[(String, Vec<u8>)], report: &Report) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, bytes) in files {
        fs::write(dir.join(name), bytes)?;
    }
    let mut f = fs::File::create(dir.join("report.json"))?;
    serde_json::to_writer_pretty(&mut f, report)?;
    writeln!(f)?;
    Ok(())
}

fn dispatch(command: Command, text: &str, ctx: &Ctx) -> Outcome<Output> {
    match command {
        Command::Monotonicity => monotonicity(parse(text)?, ctx),
        Command::Theorem1Disk => theorem1_disk(parse(text)?, ctx),
        Command::Theorem1Annulus => theorem1_annulus(parse(text)?, ctx),
        Command::Systole => systole(parse(text)?, ctx),
        Command::HmVerify => hm_verify(parse(text)?, ctx),
        Command::MeanCurvature => mean_curvature(parse(text)?, ctx),
        Command::Theorem3 => theorem3(parse(text)?, ctx),
    }
}

trait Versioned {
    fn version(&self) -> u32;
}

fn parse<C: for<'de> Deserialize<'de> + Versioned>(text: &str) -> Outcome<C> {
    let cfg: C = input(serde_json::from_str(text).map_err(Error::from))?;
    if cfg.version() != CONFIG_VERSION {
        return Err(Failure::Input(Error::Schema(format!(
            "unsupported config version {} (expected {CONFIG_VERSION})",
            cfg.version()
        ))));
    }
    Ok(cfg)
}

macro_rules! versioned {
    ($($t:ty),*) => {
        $(impl Versioned for $t {
            fn version(&self) -> u32 {
                self.version
            }
        })*
    };
}

versioned!(
    MonotonicityConfig,
    DiskConfig,
    AnnulusConfig,
    SystoleConfig,
    HmVerifyConfig,
    MeanCurvatureConfig,
    Theorem3Config
);

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}

/// Recipe for one input surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builder", rename_all = "snake_case", deny_unknown_fields)]
pub enum SurfaceSpec {
    /// Horowitz–Myers cross-section truncated at `l = F(z)`.
    HmCrossSection { n: u32, r0: f64, z: f64 },
    /// Horowitz–Myers annulus `F(z_in) ≤ s ≤ F(z)`.
    HmAnnulus { n: u32, r0: f64, z_in: f64, z: f64 },
    HyperbolicDisk { n: u32, radius: f64 },
    HyperbolicAnnulus { n: u32, half_width: f64 },
    EuclideanDisk { n: u32, radius: f64 },
    FlatCylinder {
        n: u32,
        length: f64,
        circumference: f64,
        #[serde(default)]
        angular_psi: Vec<AngularMode>,
    },
    FlatAnnulus { n: u32, r_in: f64, r_out: f64 },
    PoincareDisk { n: u32, rings: usize, inradius: f64 },
    /// Poincaré disk with random smooth perturbations drawn from the
    /// campaign seed and the position of the entry.
    RandomConformalDisk {
        n: u32,
        rings: usize,
        inradius: f64,
        waves: usize,
        max_frequency: f64,
        amplitude: f64,
    },
    /// Meshed planar annulus with conformal factor `e^{2λ}` and weight `ψ`.
    MeshAnnulus {
        n: u32,
        r_in: f64,
        r_out: f64,
        radial: usize,
        angular: usize,
        lambda: SmoothPerturbation,
        psi: SmoothPerturbation,
    },
    /// A serialized surface document.
    Document { surface: Surface },
}

impl SurfaceSpec {
    fn build(&self, ctx: &Ctx, index: usize) -> Result<Surface> {
        Ok(match self {
            SurfaceSpec::HmCrossSection { n, r0, z } => {
                let l = eval_f(*z, *n)?;
                hm_cross_section(&profile_for(*n, l)?, *r0, l)?.into()
            }
            SurfaceSpec::HmAnnulus { n, r0, z_in, z } => {
                if !(z_in < z) {
                    return Err(Error::Domain(format!("z_in = {z_in} must be below z = {z}")));
                }
                let (s_in, l) = (eval_f(*z_in, *n)?, eval_f(*z, *n)?);
                hm_annulus(&profile_for(*n, l)?, *r0, s_in, l)?.into()
            }
            SurfaceSpec::HyperbolicDisk { n, radius } => hyperbolic_disk(*n, *radius)?.into(),
            SurfaceSpec::HyperbolicAnnulus { n, half_width } => hyperbolic_annulus(*n, *half_width)?.into(),
            SurfaceSpec::EuclideanDisk { n, radius } => euclidean_disk(*n, *radius)?.into(),
            SurfaceSpec::FlatCylinder {
                n,
                length,
                circumference,
                angular_psi,
            } => flat_cylinder(*n, *length, *circumference)?
                .with_angular_psi(angular_psi.clone())
                .into(),
            SurfaceSpec::FlatAnnulus { n, r_in, r_out } => flat_annulus(*n, *r_in, *r_out)?.into(),
            SurfaceSpec::PoincareDisk { n, rings, inradius } => poincare_disk(*n, *rings, *inradius)?.into(),
            SurfaceSpec::RandomConformalDisk {
                n,
                rings,
                inradius,
                waves,
                max_frequency,
                amplitude,
            } => {
                let mut rng = ctx.rng(index as u64);
                let dl = SmoothPerturbation::random(&mut rng, *waves, *max_frequency, *amplitude);
                let dp = SmoothPerturbation::random(&mut rng, *waves, *max_frequency, *amplitude);
                perturbed_poincare_disk(*n, *rings, *inradius, &dl, &dp)?.into()
            }
            SurfaceSpec::MeshAnnulus {
                n,
                r_in,
                r_out,
                radial,
                angular,
                lambda,
                psi,
            } => {
                if !(0.0 < *r_in && r_in < r_out) || *radial == 0 || *angular < 3 {
                    return Err(Error::Domain("mesh annulus needs 0 < r_in < r_out, radial ≥ 1, angular ≥ 3".into()));
                }
                ConformalSurface::from_fields(
                    *n,
                    annulus(*r_in, *r_out, *radial, *angular),
                    |z| lambda.value(z),
                    |z| psi.value(z),
                )?
                .into()
            }
            SurfaceSpec::Document { surface } => surface.clone(),
        })
    }

    fn is_hm_disk(&self) -> bool {
        matches!(self, SurfaceSpec::HmCrossSection { .. })
    }
}

/// A comparison profile reaching slightly past `l`.
fn profile_for(n: u32, l: f64) -> Result<ComparisonProfile> {
    let step = (l / 1000.0).min(1e-3);
    build_profile(n, l, step)
}

fn build_all(specs: &[SurfaceSpec], ctx: &Ctx) -> Outcome<Vec<Surface>> {
    if specs.is_empty() {
        return Err(Failure::Input(Error::Schema("no surfaces given".into())));
    }
    let built: Vec<Result<Surface>> = specs.par_iter().enumerate().map(|(i, s)| s.build(ctx, i)).collect();
    built
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| Failure::Input(Error::Schema(format!("surface {i}: {e}")))))
        .collect()
}

fn default_levels() -> usize {
    512
}

fn default_band() -> f64 {
    0.01
}

fn default_monotone_tol() -> f64 {
    1e-5
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct MonotonicityConfig {
    version: u32,
    #[serde(default = "hm_default_surfaces")]
    surfaces: Vec<SurfaceSpec>,
    #[serde(default = "default_levels")]
    levels: usize,
    #[serde(default = "default_band")]
    band: f64,
    #[serde(default = "default_monotone_tol")]
    tolerance: f64,
    /// Allowed `max |J − 2π|` on Horowitz–Myers cross-sections.
    #[serde(default = "default_monotone_tol")]
    hm_tolerance: f64,
}

fn hm_default_surfaces() -> Vec<SurfaceSpec> {
    vec![SurfaceSpec::HmCrossSection { n: 3, r0: 1.0, z: 10.0 }]
}

fn monotonicity(cfg: MonotonicityConfig, ctx: &Ctx) -> Outcome<Output> {
    if cfg.levels < 2 || !(0.0..0.5).contains(&cfg.band) {
        return Err(Failure::Input(Error::Schema("levels ≥ 2 and 0 ≤ band < 0.5 required".into())));
    }
    let surfaces = build_all(&cfg.surfaces, ctx)?;
    let opts = MonotonicityOptions {
        tolerance: ctx.tol(cfg.tolerance),
        ..Default::default()
    };
    let results: Vec<Result<_>> = surfaces
        .par_iter()
        .map(|s| {
            let l = inradius(s)?;
            let profile = profile_for(s.n(), l)?;
            let tr = trace(s, &profile, &default_grid(l, cfg.levels, cfg.band))?;
            let rep = monotonicity_report(s, &tr, opts)?;
            Ok((tr, rep))
        })
        .collect();
    let mut out = Output {
        assertions: Vec::new(),
        data: Value::Null,
        files: Vec::new(),
    };
    let mut data = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        let (tr, rep) = r?;
        out.assertions
            .push(Assertion::at_least(format!("surface_{i}.min_increment"), rep.min_increment, -opts.tolerance));
        let dev = tr.max_deviation_from(TAU);
        if cfg.surfaces[i].is_hm_disk() {
            out.assertions
                .push(Assertion::at_most(format!("surface_{i}.j_equals_2pi"), dev, ctx.tol(cfg.hm_tolerance)));
        }
        let mut buf = Vec::new();
        tr.write_csv(&mut buf)?;
        out.files.push((format!("trace_{i}.csv"), buf));
        data.push(json!({
            "n": tr.n,
            "inradius": tr.l,
            "total_area": tr.total_area,
            "max_deviation_from_2pi": dev,
            "report": rep,
        }));
    }
    out.data = Value::Array(data);
    Ok(out)
}

fn default_disk_tol() -> f64 {
    1e-4
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct DiskConfig {
    version: u32,
    #[serde(default = "hm_default_surfaces")]
    surfaces: Vec<SurfaceSpec>,
    #[serde(default = "default_disk_tol")]
    tolerance: f64,
    /// Optional lower bound on the ratio, for sharpness checks.
    #[serde(default)]
    min_ratio: Option<f64>,
}

fn theorem1_disk(cfg: DiskConfig, ctx: &Ctx) -> Outcome<Output> {
    let surfaces = build_all(&cfg.surfaces, ctx)?;
    if let Some(i) = surfaces.iter().position(|s| !s.is_disk()) {
        return Err(Failure::Input(Error::Schema(format!("surface {i} is not a disk"))));
    }
    let tol = ctx.tol(cfg.tolerance);
    let reports: Vec<Result<_>> = surfaces.par_iter().map(|s| theorem1_disk_report(s, tol)).collect();
    let mut assertions = Vec::new();
    let mut rows = Vec::new();
    let mut data = Vec::new();
    for (i, r) in reports.into_iter().enumerate() {
        let rep = r?;
        assertions.push(Assertion::at_most(format!("surface_{i}.ratio_inf"), rep.ratio_inf, 1.0 + tol));
        assertions.push(Assertion::at_most(
            format!("surface_{i}.ratio_integral"),
            rep.ratio_integral,
            1.0 + tol,
        ));
        if let Some(m) = cfg.min_ratio {
            assertions.push(Assertion::at_least(format!("surface_{i}.ratio_above_min"), rep.ratio_inf, m));
        }
        rows.push(vec![
            i.to_string(),
            rep.n.to_string(),
            fmt(rep.boundary_length),
            fmt(rep.inf_margin),
            fmt(rep.integral_margin),
            fmt(rep.ratio_inf),
            fmt(rep.ratio_integral),
        ]);
        data.push(serde_json::to_value(&rep).map_err(Error::from)?);
    }
    let csv = csv_bytes(
        &["index", "n", "boundary_length", "inf_margin", "integral_margin", "ratio_inf", "ratio_integral"],
        rows,
    )?;
    Ok(Output {
        assertions,
        data: Value::Array(data),
        files: vec![("disk.csv".into(), csv)],
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnnulusCase {
    surface: SurfaceSpec,
    /// Initial polyline in chart coordinates; a radial segment by default.
    #[serde(default)]
    seed: Option<Vec<[f64; 2]>>,
}

fn default_annulus_cases() -> Vec<AnnulusCase> {
    vec![AnnulusCase {
        surface: SurfaceSpec::HmAnnulus {
            n: 3,
            r0: 1.0,
            z_in: 1.1,
            z: 5.0,
        },
        seed: None,
    }]
}

fn default_annulus_tol() -> f64 {
    1e-6
}

fn default_eigen_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnnulusConfig {
    version: u32,
    #[serde(default = "default_annulus_cases")]
    cases: Vec<AnnulusCase>,
    #[serde(default = "default_annulus_tol")]
    tolerance: f64,
    /// Allowed negativity of the first stability eigenvalue.
    #[serde(default = "default_eigen_tol")]
    eigenvalue_tolerance: f64,
    #[serde(default)]
    geodesic: Option<GeodesicOptions>,
}

fn theorem1_annulus(cfg: AnnulusConfig, ctx: &Ctx) -> Outcome<Output> {
    let specs: Vec<SurfaceSpec> = cfg.cases.iter().map(|c| c.surface.clone()).collect();
    let surfaces = build_all(&specs, ctx)?;
    if let Some(i) = surfaces.iter().position(|s| s.is_disk()) {
        return Err(Failure::Input(Error::Schema(format!("surface {i} is a disk, expected an annulus"))));
    }
    let tol = ctx.tol(cfg.tolerance);
    let eig_tol = ctx.tol(cfg.eigenvalue_tolerance);
    let opts = cfg.geodesic.unwrap_or_default();
    let results: Vec<Result<_>> = surfaces
        .par_iter()
        .zip(&cfg.cases)
        .map(|(s, c)| theorem1_nondisk_analysis(s, c.seed.as_deref(), opts, tol))
        .collect();
    let mut assertions = Vec::new();
    let mut files = Vec::new();
    let mut data = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        let (rep, geo, stab) = r?;
        assertions.push(Assertion::at_most(format!("case_{i}.endpoint_min"), rep.endpoint_min, rep.bound + tol));
        assertions.push(Assertion::at_most(format!("case_{i}.boundary_inf"), rep.boundary_inf, rep.bound + tol));
        assertions.push(Assertion::at_least(format!("case_{i}.eigenvalue"), rep.eigenvalue, -eig_tol));
        assertions.push(Assertion::at_least(format!("case_{i}.min_riccati"), rep.min_riccati, -tol));
        files.push((
            format!("geodesic_{i}.csv"),
            csv_bytes(
                &["s", "x", "y", "curvature", "psi"],
                (0..geo.s.len()).map(|k| {
                    vec![
                        fmt(geo.s[k]),
                        fmt(geo.points[k][0]),
                        fmt(geo.points[k][1]),
                        fmt(geo.curvature[k]),
                        fmt(geo.psi[k]),
                    ]
                }),
            )?,
        ));
        files.push((
            format!("stability_{i}.csv"),
            csv_bytes(
                &["s", "v", "dv", "w", "dw", "riccati"],
                (0..stab.s.len()).map(|k| {
                    vec![
                        fmt(stab.s[k]),
                        fmt(stab.v[k]),
                        fmt(stab.dv[k]),
                        fmt(stab.w[k]),
                        fmt(stab.dw[k]),
                        fmt(stab.riccati[k]),
                    ]
                }),
            )?,
        ));
        data.push(json!({
            "report": rep,
            "geodesic_length": geo.length,
            "weighted_length": geo.weighted_length,
        }));
    }
    Ok(Output {
        assertions,
        data: Value::Array(data),
        files,
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RandomTori {
    count: usize,
    #[serde(default = "two")]
    min_dim: usize,
    #[serde(default = "six")]
    max_dim: usize,
    /// Largest accepted condition number of the Gram matrix.
    #[serde(default = "hundred")]
    max_condition: f64,
}

fn two() -> usize {
    2
}

fn six() -> usize {
    6
}

fn hundred() -> f64 {
    100.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystoleConfig {
    version: u32,
    #[serde(default)]
    tori: Vec<FlatTorus>,
    #[serde(default)]
    random: Option<RandomTori>,
    /// Cross-check against exhaustive search over `|kᵢ| ≤ radius`.
    #[serde(default)]
    brute_force_radius: Option<i64>,
}

fn gram_condition(t: &FlatTorus) -> f64 {
    let m = t.dimension();
    let g = t.gram();
    let e = DMatrix::from_fn(m, m, |i, j| g[i][j]).symmetric_eigenvalues();
    e.max() / e.min()
}

fn random_torus(rng: &mut ChaCha8Rng, m: usize, max_condition: f64) -> FlatTorus {
    loop {
        let basis = (0..m).map(|_| (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        if let Ok(t) = FlatTorus::new(basis) {
            if gram_condition(&t) <= max_condition {
                return t;
            }
        }
    }
}

fn systole(cfg: SystoleConfig, ctx: &Ctx) -> Outcome<Output> {
    let mut tori = cfg.tori.clone();
    for (i, t) in tori.iter().enumerate() {
        t.validate().map_err(|e| Failure::Input(Error::Schema(format!("torus {i}: {e}"))))?;
    }
    if let Some(r) = &cfg.random {
        if r.min_dim < 1 || r.max_dim < r.min_dim || !(r.max_condition >= 1.0) {
            return Err(Failure::Input(Error::Schema(
                "random tori need 1 ≤ min_dim ≤ max_dim and max_condition ≥ 1".into(),
            )));
        }
        let mut rng = ctx.rng(0);
        let span = r.max_dim - r.min_dim + 1;
        for i in 0..r.count {
            tori.push(random_torus(&mut rng, r.min_dim + i % span, r.max_condition));
        }
    }
    if tori.is_empty() {
        return Err(Failure::Input(Error::Schema("no tori given".into())));
    }
    if let Some(r) = cfg.brute_force_radius {
        if !(1..=20).contains(&r) {
            return Err(Failure::Input(Error::Schema("brute_force_radius must lie in 1..=20".into())));
        }
    }
    let results: Vec<_> = tori
        .par_iter()
        .map(|t| (constrained_systole(t), cfg.brute_force_radius.map(|r| brute_force_systole(t, r))))
        .collect();
    let mut assertions = Vec::new();
    let mut rows = Vec::new();
    let mut data = Vec::new();
    for (i, (t, (s, bf))) in tori.iter().zip(&results).enumerate() {
        let mut e = vec![0; t.dimension()];
        e[t.xi_index()] = 1;
        assertions.push(Assertion::at_most(format!("torus_{i}.sigma_le_xi"), s.sigma, t.length(&e)));
        if let Some(bf) = bf {
            let margin = bf.sigma - s.sigma;
            assertions.push(Assertion {
                name: format!("torus_{i}.brute_force"),
                pass: margin.abs() <= 1e-12 * s.sigma && bf.witness == s.witness,
                margin,
            });
        }
        let witness = s.witness.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" ");
        rows.push(vec![
            i.to_string(),
            t.dimension().to_string(),
            fmt(s.sigma),
            witness,
            s.visited.to_string(),
            fmt(t.volume()),
        ]);
        data.push(json!({
            "torus": t,
            "sigma": s.sigma,
            "witness": s.witness,
            "brute_force_sigma": bf.as_ref().map(|b| b.sigma),
        }));
    }
    let csv = csv_bytes(&["index", "dim", "sigma", "witness", "visited", "volume"], rows)?;
    Ok(Output {
        assertions,
        data: Value::Array(data),
        files: vec![("systole.csv".into(), csv)],
    })
}

fn default_ns() -> Vec<u32> {
    (3..=7).collect()
}

fn default_r0s() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}

fn default_fiber_factor() -> f64 {
    2.0
}

fn default_mass_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct HmVerifyConfig {
    version: u32,
    #[serde(default = "default_ns")]
    n: Vec<u32>,
    #[serde(default = "default_r0s")]
    r0: Vec<f64>,
    /// Fiber lengths as a multiple of the circle length `4π/(n r0)`.
    #[serde(default = "default_fiber_factor")]
    fiber_factor: f64,
    #[serde(default = "default_mass_tol")]
    tolerance: f64,
}

fn hm_verify(cfg: HmVerifyConfig, ctx: &Ctx) -> Outcome<Output> {
    if cfg.n.is_empty() || cfg.r0.is_empty() {
        return Err(Failure::Input(Error::Schema("n and r0 lists must be nonempty".into())));
    }
    if !(cfg.fiber_factor > 0.0) {
        return Err(Failure::Input(Error::Schema("fiber_factor must be positive".into())));
    }
    let cases: Vec<(u32, f64)> = cfg.n.iter().flat_map(|&n| cfg.r0.iter().map(move |&r| (n, r))).collect();
    let problems = cases
        .iter()
        .map(|&(n, r0)| {
            let fibers = vec![cfg.fiber_factor * 4.0 * PI / (n as f64 * r0); n.saturating_sub(2) as usize];
            let p = hm_problem(n, r0, &fibers)?;
            let s = hm_sigma(n, r0, &fibers)?;
            Ok((p, s))
        })
        .collect::<Result<Vec<_>>>();
    let problems = input(problems)?;
    let tol = ctx.tol(cfg.tolerance);
    let results: Vec<Result<_>> = problems
        .par_iter()
        .map(|(p, s)| {
            let grid = p.default_grid();
            Ok((p.mass_integral(s.sigma)?, p.pde_residual(grid)))
        })
        .collect();
    let mut assertions = Vec::new();
    let mut rows = Vec::new();
    let mut data = Vec::new();
    for (((n, r0), (p, s)), r) in cases.iter().zip(&problems).zip(results) {
        let (mass, residual) = r?;
        let tag = format!("n{n}_r0_{r0}");
        assertions.push(Assertion::at_most(format!("{tag}.mass"), mass.abs(), tol));
        assertions.push(Assertion::at_most(format!("{tag}.pde_residual"), residual, tol));
        rows.push(vec![n.to_string(), fmt(*r0), fmt(s.sigma), fmt(p.mu), fmt(mass), fmt(residual)]);
        data.push(json!({
            "n": n,
            "r0": r0,
            "sigma": s.sigma,
            "sigma_flagged": s.flagged,
            "mu": p.mu,
            "mass": mass,
            "pde_residual": residual,
        }));
    }
    let csv = csv_bytes(&["n", "r0", "sigma", "mu", "mass", "pde_residual"], rows)?;
    Ok(Output {
        assertions,
        data: Value::Array(data),
        files: vec![("hm.csv".into(), csv)],
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum CurvatureTarget {
    /// The exact Horowitz–Myers slices.
    Hm { n: u32, r0: f64 },
    /// A charge problem; the graph is sampled on `per_dim` points per
    /// lattice direction.
    Problem {
        problem: ProblemDocument,
        #[serde(default)]
        per_dim: Option<usize>,
    },
}

fn default_curvature_target() -> CurvatureTarget {
    CurvatureTarget::Hm { n: 3, r0: 1.0 }
}

fn default_radii() -> Vec<f64> {
    vec![5.0, 10.0, 20.0, 40.0]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeanCurvatureConfig {
    version: u32,
    #[serde(default = "default_curvature_target")]
    target: CurvatureTarget,
    #[serde(default = "default_radii")]
    radii: Vec<f64>,
    /// Bound on the scaled residual at the largest radius.
    #[serde(default = "default_max_scaled")]
    max_scaled_residual: Option<f64>,
    /// Require the scaled residual to decrease along the radii.
    #[serde(default)]
    decreasing: bool,
    /// Require the scaled residual to halve, within 20%, per doubling of
    /// the radius.
    #[serde(default)]
    halving: bool,
}

fn default_max_scaled() -> Option<f64> {
    Some(1e-3)
}

fn mean_curvature(cfg: MeanCurvatureConfig, ctx: &Ctx) -> Outcome<Output> {
    if cfg.radii.is_empty() || cfg.radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(Failure::Input(Error::Schema("radii must be positive and finite".into())));
    }
    if cfg.radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Failure::Input(Error::Schema("radii must increase".into())));
    }
    let samples: Vec<Result<MeanCurvatureSample>> = match &cfg.target {
        CurvatureTarget::Hm { n, r0 } => {
            if *n < 3 || !(*r0 > 0.0) {
                return Err(Failure::Input(Error::Schema("hm target needs n ≥ 3 and r0 > 0".into())));
            }
            cfg.radii.par_iter().map(|&r| hm_slice_residual(*n, *r0, r)).collect()
        }
        CurvatureTarget::Problem { problem, per_dim } => {
            let p = input(AsymptoticProblem::from_document(problem))?;
            let grid = per_dim.unwrap_or_else(|| p.default_grid());
            if grid == 0 {
                return Err(Failure::Input(Error::Schema("per_dim must be positive".into())));
            }
            cfg.radii.par_iter().map(|&r| p.mean_curvature_residual(r, grid)).collect()
        }
    };
    let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
    let mut assertions = Vec::new();
    if let Some(bound) = cfg.max_scaled_residual {
        let last = samples.last().expect("nonempty radii");
        assertions.push(Assertion::at_most("scaled_residual_at_max_radius", last.scaled_residual, ctx.tol(bound)));
    }
    for (k, w) in samples.windows(2).enumerate() {
        if cfg.decreasing {
            assertions.push(Assertion::at_most(
                format!("decreasing_{k}"),
                w[1].scaled_residual,
                w[0].scaled_residual,
            ));
        }
        if cfg.halving {
            let per_doubling = (w[1].scaled_residual / w[0].scaled_residual).powf(std::f64::consts::LN_2 / (w[1].r_hat / w[0].r_hat).ln());
            assertions.push(Assertion::at_most(format!("halving_{k}"), (per_doubling - 0.5).abs(), 0.1));
        }
    }
    let mut buf = Vec::new();
    write_sweep_csv(&samples, &mut buf)?;
    Ok(Output {
        assertions,
        data: json!({ "samples": samples }),
        files: vec![("sweep.csv".into(), buf)],
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RandomProblem {
    n: u32,
    /// Side lengths of the rectangular torus.
    periods: Vec<f64>,
    #[serde(default = "two_i64")]
    bandwidth: i64,
    #[serde(default = "three")]
    modes: usize,
    #[serde(default = "tenth")]
    amplitude: f64,
}

fn two_i64() -> i64 {
    2
}

fn three() -> usize {
    3
}

fn tenth() -> f64 {
    0.1
}

fn default_t3_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Expectation {
    Holds,
    Contradiction,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Theorem3Config {
    version: u32,
    #[serde(default)]
    problem: Option<ProblemDocument>,
    #[serde(default)]
    random: Option<RandomProblem>,
    #[serde(default = "default_t3_tol")]
    tolerance: f64,
    #[serde(default)]
    expect: Option<Expectation>,
}

fn theorem3(cfg: Theorem3Config, ctx: &Ctx) -> Outcome<Output> {
    let problem = match (&cfg.problem, &cfg.random) {
        (Some(doc), None) => input(AsymptoticProblem::from_document(doc))?,
        (None, Some(r)) => {
            let torus = input(FlatTorus::rectangular(&r.periods))?;
            if r.bandwidth < 0 || !(r.amplitude >= 0.0) {
                return Err(Failure::Input(Error::Schema("bandwidth and amplitude must be nonnegative".into())));
            }
            let q = random_band_limited(&mut ctx.rng(0), &torus, r.bandwidth, r.modes, r.amplitude);
            input(AsymptoticProblem::new(r.n, torus, q))?
        }
        (None, None) => input(crate::asymptotics::hm_problem(3, 1.0, &[8.0 * PI / 3.0]))?,
        (Some(_), Some(_)) => {
            return Err(Failure::Input(Error::Schema("give either problem or random, not both".into())));
        }
    };
    let tol = ctx.tol(cfg.tolerance);
    let rep = theorem3_report(&problem, tol)?;
    let mut assertions = vec![
        Assertion::at_most("pde_residual", rep.pde_residual, tol),
        Assertion::at_most("divergence_defect", rep.divergence_defect.abs(), tol * rep.volume.max(1.0)),
    ];
    if let Some(a) = &rep.contradiction {
        assertions.push(Assertion::at_least("audit.mu_bound", a.mu_bound_lhs, a.mu_bound_rhs));
        assertions.push(Assertion::at_least("audit.systole_ratio", a.systole_ratio_bound, 1.0 - a.epsilon));
        assertions.push(Assertion::at_least("audit.mean_curvature", a.mean_curvature_margin, 0.0));
    }
    if let Some(e) = cfg.expect {
        let holds = Assertion::at_least("expect.holds", rep.mass, -tol);
        assertions.push(match e {
            Expectation::Holds => holds,
            Expectation::Contradiction => Assertion {
                name: "expect.contradiction".into(),
                pass: !holds.pass,
                margin: -holds.margin,
            },
        });
    }
    let csv = csv_bytes(
        &["n", "sigma", "volume", "mean_trace", "mu", "mass", "holds"],
        [vec![
            rep.n.to_string(),
            fmt(rep.sigma),
            fmt(rep.volume),
            fmt(rep.mean_trace),
            fmt(rep.mu),
            fmt(rep.mass),
            (rep.holds as u8).to_string(),
        ]],
    )?;
    Ok(Output {
        assertions,
        data: serde_json::to_value(&rep).map_err(Error::from)?,
        files: vec![("theorem3.csv".into(), csv)],
    })
}
