//! Command-line front end: flag/config resolution, the run directory
//! stages (simulate, kernel, decompose, invert) and process exit codes.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{add_noise, forward_mode, ModeSeries};
use crate::grid::{RadialGrid, TimeGrid};
use crate::io::{
    columns, load_matrix, load_vector, now_timestamp, read_json, save_matrix, save_vector, write_json, GridParams,
    RunLayout, RunManifest, ARTIFACT_VERSION,
};
use crate::kernel::{adapted_time_grid, admissible_window, assemble_gram_matrix, GramMatrix, KernelSpec, DEFAULT_TIME_TOL};
use crate::model::{DampingKind, DampingModel};
use crate::phantom::{phantom_coeff, PhantomSpec};
use crate::reconstruct::{fourier_coefficient, reconstruct_mode, Part, ReconstructionReport};
use crate::spectral::{eig_sym, GramDecomposition, Regularization};
use crate::specfun::ModeIndex;
use crate::validate::{identity_suite, IdentityCheck};

#[derive(Debug, Parser)]
#[command(
    name = "dampwave",
    version,
    about = "Simulate and invert sphere data of weakly and strongly damped wave equations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the closed-form identities against quadrature oracles.
    Validate,
    /// Phantom, forward map and optional noise; writes per-mode data.
    Simulate(RunArgs),
    /// Assemble Gram matrices for every degree.
    Kernel(RunArgs),
    /// Eigendecompose the Gram matrices.
    Decompose(RunArgs),
    /// Reconstruct every mode from the simulated data.
    Invert(RunArgs),
    /// All stages in order.
    Pipeline(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelArg {
    Weak,
    Strong,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegArg {
    Tsvd,
    Tikhonov,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhantomArg {
    Gauss,
    Bump,
}

/// Flags shared by the run subcommands. A `--config` TOML file with the
/// same keys takes precedence over flags given on the command line.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Space dimension.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub lmax: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Radial truncation R.
    #[arg(long)]
    pub rmax: Option<f64>,
    /// Cap on the adapted time horizon.
    #[arg(long)]
    pub tmax: Option<f64>,
    #[arg(long)]
    pub panels: Option<usize>,
    #[arg(long)]
    pub order: Option<usize>,
    /// Tail tolerance of the adapted time grid.
    #[arg(long)]
    pub time_tol: Option<f64>,
    #[arg(long, value_enum)]
    pub reg: Option<RegArg>,
    #[arg(long)]
    pub reg_param: Option<f64>,
    #[arg(long, value_enum)]
    pub phantom: Option<PhantomArg>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub center: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Absolute standard deviation of additive Gaussian noise.
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:expr, $top:expr; $($f:ident),*) => {
        RunArgs { $($f: $top.$f.or($base.$f),)* config: None }
    };
}

impl RunArgs {
    /// Fields set in `top` win.
    fn overlay(self, top: RunArgs) -> RunArgs {
        overlay!(self, top; model, gamma, delta, n, lmax, alpha, rmax, tmax, panels, order, time_tol,
            reg, reg_param, phantom, amplitude, width, center, seed, noise_sigma, out)
    }

    /// Merges the config file (if any) and fills defaults.
    pub fn resolve(self) -> Result<RunConfig> {
        let args = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let file: RunArgs = toml::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                self.clone().overlay(file)
            }
            None => self,
        };
        args.into_config()
    }

    fn into_config(self) -> Result<RunConfig> {
        let cfg_err = |m: String| Error::Config(m);
        let kind = match (self.model, self.gamma, self.delta) {
            (_, Some(_), Some(_)) => return Err(cfg_err("set only one of --gamma and --delta".into())),
            (Some(ModelArg::Strong), Some(_), None) => {
                return Err(cfg_err("--gamma belongs to the weak model".into()))
            }
            (Some(ModelArg::Weak), None, Some(_)) => {
                return Err(cfg_err("--delta belongs to the strong model".into()))
            }
            (Some(ModelArg::Weak), ..) | (None, Some(_), None) => DampingKind::Weak,
            _ => DampingKind::Strong,
        };
        let parameter = self.gamma.or(self.delta).unwrap_or(1.0);
        let model = DampingModel::new(kind, parameter).map_err(|e| cfg_err(e.to_string()))?;
        let n = self.n.unwrap_or(3);
        if n < 2 {
            return Err(cfg_err(format!("--n must be at least 2, got {n}")));
        }
        let alpha = self.alpha.unwrap_or_else(|| default_alpha(kind, n));
        if !alpha.is_finite() {
            return Err(cfg_err(format!("--alpha must be finite, got {alpha}")));
        }
        let radius = self.rmax.unwrap_or(12.0);
        let panels = self.panels.unwrap_or(16);
        let order = self.order.unwrap_or(16);
        if !(radius > 0.0) || panels == 0 || order == 0 {
            return Err(cfg_err("--rmax, --panels and --order must be positive".into()));
        }
        if let Some(t) = self.tmax {
            if !(t > 0.0) {
                return Err(cfg_err(format!("--tmax must be positive, got {t}")));
            }
        }
        let time_tol = self.time_tol.unwrap_or(DEFAULT_TIME_TOL);
        if !(time_tol > 0.0) {
            return Err(cfg_err(format!("--time-tol must be positive, got {time_tol}")));
        }
        let reg_param = self.reg_param.unwrap_or(1e-8);
        let regularization = match self.reg.unwrap_or(RegArg::Tsvd) {
            RegArg::Tsvd => Regularization::truncated(reg_param),
            RegArg::Tikhonov => Regularization::tikhonov(reg_param),
        }
        .map_err(|e| cfg_err(e.to_string()))?;
        let amplitude = self.amplitude.unwrap_or(1.0);
        let phantom = match self.phantom.unwrap_or(PhantomArg::Gauss) {
            PhantomArg::Gauss => PhantomSpec::GaussMonomial {
                amplitude,
                width: self.width.unwrap_or(1.0),
                center: self.center.unwrap_or(0.0),
            },
            PhantomArg::Bump => PhantomSpec::BumpCompact {
                amplitude,
                center: self.center.unwrap_or(3.0),
                width: self.width.unwrap_or(1.5),
            },
        };
        phantom.validate().map_err(|e| cfg_err(e.to_string()))?;
        let noise_sigma = self.noise_sigma.unwrap_or(0.0);
        if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
            return Err(cfg_err(format!("--noise-sigma must be nonnegative, got {noise_sigma}")));
        }
        Ok(RunConfig {
            model,
            n,
            l_max: self.lmax.unwrap_or(0),
            alpha,
            radius,
            panels,
            order,
            time_cap: self.tmax,
            time_tol,
            regularization,
            phantom,
            seed: self.seed.unwrap_or(0),
            noise_sigma,
            out: self.out.unwrap_or_else(|| PathBuf::from("dampwave-run")),
        })
    }
}

/// `alpha` used when none is given: `1.5` (strong) and `0.75` (weak) at
/// `n = 3`, the window midpoint otherwise.
pub fn default_alpha(kind: DampingKind, n: usize) -> f64 {
    if n == 3 {
        return match kind {
            DampingKind::Strong => 1.5,
            DampingKind::Weak => 0.75,
        };
    }
    let (lo, hi) = admissible_window(kind, n);
    0.5 * (lo + hi)
}

/// Fully resolved run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: DampingModel,
    pub n: usize,
    pub l_max: usize,
    pub alpha: f64,
    pub radius: f64,
    pub panels: usize,
    pub order: usize,
    pub time_cap: Option<f64>,
    pub time_tol: f64,
    pub regularization: Regularization,
    pub phantom: PhantomSpec,
    pub seed: u64,
    pub noise_sigma: f64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunArgs::default().into_config().expect("defaults are valid")
    }
}

impl RunConfig {
    pub fn modes(&self) -> Result<Vec<ModeIndex>> {
        ModeIndex::all_up_to(self.n, self.l_max)
    }

    pub fn kernel_spec(&self, mode: ModeIndex) -> KernelSpec {
        KernelSpec {
            model: self.model,
            mode,
            alpha: self.alpha,
        }
    }

    pub fn radial_grid(&self) -> Result<RadialGrid> {
        RadialGrid::composite(self.radius, self.panels, self.order)
    }

    pub fn manifest(&self) -> RunManifest {
        let (lo, hi) = admissible_window(self.model.kind(), self.n);
        RunManifest {
            artifact_version: ARTIFACT_VERSION.to_string(),
            model: self.model,
            n: self.n,
            l_max: self.l_max,
            alpha: self.alpha,
            alpha_in_window: self.alpha > lo && self.alpha < hi,
            grid: GridParams {
                radius: self.radius,
                panels: self.panels,
                order: self.order,
                time_cap: self.time_cap,
                time_tol: self.time_tol,
            },
            regularization: self.regularization,
            phantom: self.phantom.clone(),
            seed: self.seed,
            noise_sigma: self.noise_sigma,
            timestamp: now_timestamp(),
            digests: BTreeMap::new(),
        }
    }
}

/// Noise seed of one mode, so modes get independent streams.
pub fn mode_seed(seed: u64, mode: ModeIndex) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((mode.l as u64) << 32 | mode.k as u64)
}

/// Per-mode summary written to `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    pub mode: ModeIndex,
    pub rel_l2_error: Option<f64>,
    pub spectrum_used: usize,
    pub grid_size: usize,
    pub time_horizon: f64,
    pub time_nodes: usize,
    pub recovered_l2_norm: f64,
    pub fourier_part: Part,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub model: DampingModel,
    pub n: usize,
    pub alpha: f64,
    pub alpha_in_window: bool,
    pub regularization: Regularization,
    pub noise_sigma: f64,
    /// Largest per-mode error.
    pub rel_l2_error: Option<f64>,
    pub modes: Vec<ModeReport>,
}

/// A run directory with its manifest; stages reuse Gram and eigen files
/// whose digests match a previous manifest for the same kernel inputs.
pub struct Session {
    pub config: RunConfig,
    pub layout: RunLayout,
    pub manifest: RunManifest,
    previous: Option<RunManifest>,
    time_grids: BTreeMap<usize, TimeGrid>,
}

impl Session {
    pub fn open(config: RunConfig) -> Result<Self> {
        let layout = RunLayout::new(&config.out);
        layout.create()?;
        let mut manifest = config.manifest();
        let previous = read_json::<RunManifest>(layout.path(RunLayout::manifest())).ok();
        if let Some(prev) = &previous {
            if prev.same_inputs(&manifest) {
                manifest.digests = prev.digests.clone();
            } else if prev.same_kernel_inputs(&manifest) {
                manifest.digests = prev
                    .digests
                    .iter()
                    .filter(|(k, _)| k.starts_with("gram_") || k.starts_with("eig_"))
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect();
            }
        }
        if !manifest.alpha_in_window {
            let (lo, hi) = admissible_window(config.model.kind(), config.n);
            log::warn!(
                "alpha = {} lies outside the admissible window ({lo}, {hi}); continuing",
                config.alpha
            );
        }
        Ok(Self {
            config,
            layout,
            manifest,
            previous,
            time_grids: BTreeMap::new(),
        })
    }

    fn reusable(&self, name: &str) -> bool {
        self.previous.is_some() && self.manifest.matches(&self.layout.root, name)
    }

    fn record(&mut self, name: &str) -> Result<()> {
        self.manifest.record(&self.layout.root, name)
    }

    pub fn write_manifest(&mut self) -> Result<()> {
        self.manifest.timestamp = now_timestamp();
        write_json(self.layout.path(RunLayout::manifest()), &self.manifest)
    }

    /// Adapted time grid for degree `l` (kernels differ only through `l`).
    pub fn time_grid(&mut self, l: usize) -> Result<TimeGrid> {
        if let Some(g) = self.time_grids.get(&l) {
            return Ok(g.clone());
        }
        let spec = self.config.kernel_spec(ModeIndex::new(self.config.n, l, 0)?);
        let grid = adapted_time_grid(
            &spec,
            &self.config.radial_grid()?,
            self.config.order,
            self.config.time_tol,
            self.config.time_cap,
        )?;
        self.time_grids.insert(l, grid.clone());
        Ok(grid)
    }

    /// Phantom, forward map and noise for every mode.
    pub fn simulate(&mut self) -> Result<Vec<ModeSeries>> {
        let cfg = self.config.clone();
        let rgrid = cfg.radial_grid()?;
        let modes = cfg.modes()?;
        for l in 0..=cfg.l_max {
            self.time_grid(l)?;
        }
        let grids = self.time_grids.clone();
        let series: Vec<ModeSeries> = modes
            .par_iter()
            .map(|&mode| {
                let c = phantom_coeff(&cfg.phantom, mode, cfg.alpha, &rgrid)?;
                let u = forward_mode(cfg.model, &c, &grids[&mode.l])?;
                add_noise(&u, cfg.noise_sigma, mode_seed(cfg.seed, mode))
            })
            .collect::<Result<_>>()?;
        for s in &series {
            let name = RunLayout::mode_series(s.mode.l, s.mode.k);
            let m = columns(&[s.grid.nodes(), s.grid.weights(), &s.values])?;
            save_matrix(self.layout.path(&name), &m)?;
            self.record(&name)?;
        }
        self.write_manifest()?;
        Ok(series)
    }

    /// Gram matrix of degree `l`, loaded when a matching file exists.
    pub fn gram(&mut self, l: usize) -> Result<GramMatrix> {
        let spec = self.config.kernel_spec(ModeIndex::new(self.config.n, l, 0)?);
        let grid = self.config.radial_grid()?;
        let name = RunLayout::gram(l);
        if self.reusable(&name) {
            let values = load_matrix(self.layout.path(&name))?;
            if values.nrows() == grid.len() && values.ncols() == grid.len() {
                log::info!("reusing {name}");
                return Ok(GramMatrix { values, grid, spec });
            }
        }
        let gram = assemble_gram_matrix(&spec, &grid)?;
        save_matrix(self.layout.path(&name), &gram.values)?;
        self.record(&name)?;
        Ok(gram)
    }

    /// Eigendecomposition of degree `l`, loaded when matching files exist.
    pub fn decomposition(&mut self, l: usize) -> Result<GramDecomposition> {
        let values_name = RunLayout::eig_values(l);
        let vectors_name = RunLayout::eig_vectors(l);
        let grid = self.config.radial_grid()?;
        let spec = self.config.kernel_spec(ModeIndex::new(self.config.n, l, 0)?);
        if self.reusable(&values_name) && self.reusable(&vectors_name) {
            let eigenvalues = load_vector(self.layout.path(&values_name))?;
            let eigenvectors = load_matrix(self.layout.path(&vectors_name))?;
            if eigenvalues.len() == grid.len() && eigenvectors.shape() == (grid.len(), grid.len()) {
                log::info!("reusing {values_name} and {vectors_name}");
                return Ok(GramDecomposition {
                    eigenvalues,
                    eigenvectors,
                    grid,
                    spec,
                });
            }
        }
        let gram = self.gram(l)?;
        let dec = eig_sym(&gram)?;
        save_vector(self.layout.path(&values_name), &dec.eigenvalues)?;
        save_matrix(self.layout.path(&vectors_name), &dec.eigenvectors)?;
        self.record(&values_name)?;
        self.record(&vectors_name)?;
        Ok(dec)
    }

    /// Gram matrices for every degree.
    pub fn kernels(&mut self) -> Result<()> {
        for l in 0..=self.config.l_max {
            self.gram(l)?;
        }
        self.write_manifest()
    }

    /// Eigendecompositions for every degree.
    pub fn decompositions(&mut self) -> Result<Vec<GramDecomposition>> {
        let decs = (0..=self.config.l_max)
            .map(|l| self.decomposition(l))
            .collect::<Result<Vec<_>>>()?;
        self.write_manifest()?;
        Ok(decs)
    }

    /// Reads the per-mode data written by [`Session::simulate`].
    pub fn load_series(&self) -> Result<Vec<ModeSeries>> {
        self.config
            .modes()?
            .into_iter()
            .map(|mode| {
                let name = RunLayout::mode_series(mode.l, mode.k);
                let path = self.layout.path(&name);
                if !self.manifest.matches(&self.layout.root, &name) {
                    return Err(Error::Io {
                        path: path.clone(),
                        source: std::io::Error::new(
                            std::io::ErrorKind::NotFound,
                            "missing or stale mode data; run `simulate` with the same settings first",
                        ),
                    });
                }
                let m = load_matrix(&path)?;
                if m.ncols() != 3 {
                    return Err(Error::Parse {
                        path,
                        line: 1,
                        message: format!("expected 3 columns (t, weight, u), found {}", m.ncols()),
                    });
                }
                let col = |j: usize| m.column(j).iter().copied().collect::<Vec<f64>>();
                let grid = TimeGrid::from_nodes(col(0), col(1))?;
                ModeSeries::new(mode, grid, col(2))
            })
            .collect()
    }

    /// Reconstructs every mode and writes `mode_*_recon.csv` and `report.json`.
    pub fn invert(&mut self, series: &[ModeSeries]) -> Result<RunReport> {
        let cfg = self.config.clone();
        let decs = self.decompositions()?;
        let reports: Vec<(ReconstructionReport, &ModeSeries)> = series
            .par_iter()
            .map(|s| {
                let spec = cfg.kernel_spec(s.mode);
                let dec = &decs[s.mode.l];
                let reference = phantom_coeff(&cfg.phantom, s.mode, cfg.alpha, &dec.grid)?;
                let rep = reconstruct_mode(&spec, s, dec, &cfg.regularization)?;
                let rep = if reference.l2_norm() > 0.0 { rep.with_reference(reference)? } else { rep };
                Ok((rep, s))
            })
            .collect::<Result<_>>()?;
        let mut modes = Vec::with_capacity(reports.len());
        for (rep, s) in &reports {
            let name = RunLayout::mode_recon(rep.mode.l, rep.mode.k);
            let grid = &rep.recovered.grid;
            let reference = rep.reference.as_ref().map_or_else(|| vec![0.0; grid.len()], |r| r.values.clone());
            let fourier = fourier_coefficient(&rep.recovered);
            let m = columns(&[grid.nodes(), grid.weights(), &rep.recovered.values, &reference, &fourier.values])?;
            save_matrix(self.layout.path(&name), &m)?;
            self.record(&name)?;
            modes.push(ModeReport {
                mode: rep.mode,
                rel_l2_error: rep.rel_l2_error,
                spectrum_used: rep.spectrum_used,
                grid_size: grid.len(),
                time_horizon: s.grid.horizon(),
                time_nodes: s.grid.len(),
                recovered_l2_norm: rep.recovered.l2_norm(),
                fourier_part: fourier.part,
            });
        }
        let worst = modes.iter().filter_map(|m| m.rel_l2_error).fold(None, |acc: Option<f64>, e| {
            Some(acc.map_or(e, |a| a.max(e)))
        });
        let report = RunReport {
            model: cfg.model,
            n: cfg.n,
            alpha: cfg.alpha,
            alpha_in_window: self.manifest.alpha_in_window,
            regularization: cfg.regularization,
            noise_sigma: cfg.noise_sigma,
            rel_l2_error: worst,
            modes,
        };
        write_json(self.layout.path(RunLayout::report()), &report)?;
        self.record(RunLayout::report())?;
        self.write_manifest()?;
        Ok(report)
    }
}

/// Result of a full pipeline run.
pub struct PipelineOutput {
    pub report: RunReport,
    pub manifest: RunManifest,
}

/// phantom -> forward -> noise -> kernel -> eigendecomposition -> reconstruction.
pub fn run_pipeline(config: RunConfig) -> Result<PipelineOutput> {
    let mut session = Session::open(config)?;
    let series = session.simulate()?;
    session.kernels()?;
    let report = session.invert(&series)?;
    Ok(PipelineOutput {
        report,
        manifest: session.manifest,
    })
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidArgument(_) | Error::UnsupportedDimension(_) => 2,
        Error::Tolerance(_) => 3,
        Error::Io { .. } | Error::Parse { .. } | Error::Json(_) => 4,
        _ => 1,
    }
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::Config(_) | Error::InvalidArgument(_) | Error::UnsupportedDimension(_) => "config",
        Error::Tolerance(_) => "tolerance",
        Error::Io { .. } | Error::Parse { .. } | Error::Json(_) => "io",
        _ => "numerical",
    }
}

/// One-line JSON error record.
pub fn error_record(kind: &str, message: &str, code: i32) -> String {
    serde_json::json!({ "error": kind, "message": message, "exit_code": code }).to_string()
}

fn print_checks(checks: &[IdentityCheck]) -> Result<()> {
    for c in checks {
        println!("{c}");
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Tolerance(failed.join("; ")))
    }
}

fn print_report(report: &RunReport, out: &Path) {
    for m in &report.modes {
        let err = m.rel_l2_error.map_or_else(|| "n/a".to_string(), |e| format!("{e:.3e}"));
        println!(
            "mode l={} k={}: rel_l2_error {err}, {} of {} eigenpairs",
            m.mode.l, m.mode.k, m.spectrum_used, m.grid_size
        );
    }
    println!("wrote {}", out.display());
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Validate => print_checks(&identity_suite()?),
        Command::Simulate(args) => {
            let mut s = Session::open(args.resolve()?)?;
            let series = s.simulate()?;
            println!("simulated {} modes into {}", series.len(), s.layout.root.display());
            Ok(())
        }
        Command::Kernel(args) => {
            let mut s = Session::open(args.resolve()?)?;
            s.kernels()?;
            println!("Gram matrices for l <= {} in {}", s.config.l_max, s.layout.root.display());
            Ok(())
        }
        Command::Decompose(args) => {
            let mut s = Session::open(args.resolve()?)?;
            for (l, d) in s.decompositions()?.iter().enumerate() {
                println!("l={l}: lambda_1 = {:.6e}, {} eigenvalues >= 1e-12 lambda_1", d.largest(), d.count_above(1e-12));
            }
            Ok(())
        }
        Command::Invert(args) => {
            let mut s = Session::open(args.resolve()?)?;
            let series = s.load_series()?;
            let report = s.invert(&series)?;
            print_report(&report, &s.layout.root);
            Ok(())
        }
        Command::Pipeline(args) => {
            let cfg = args.resolve()?;
            let out = cfg.out.clone();
            let result = run_pipeline(cfg)?;
            print_report(&result.report, &out);
            Ok(())
        }
    }
}

/// Parses `args`, runs the command, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprint!("{e}");
            eprintln!("{}", error_record("config", e.kind().to_string().as_str(), 2));
            return 2;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            let code = exit_code(&err);
            eprintln!("{}", error_record(error_kind(&err), &err.to_string(), code));
            code
        }
    }
}
