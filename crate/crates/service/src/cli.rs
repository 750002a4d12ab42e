//! Command-line driver.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use csplens::fiber::MeshFormat;
use csplens::lens::{LensKind, LensSpec};
use csplens::quant::Weight;
use csplens::segmentation::WHOLE_DOMAIN;

use crate::service::{self, AppState};
use crate::workflow::{self, AppError, AppResult, Config, CspRequest, Dataset, SynthKind};

#[derive(Debug, Parser)]
#[command(name = "csplens", version, about = "Continuous scatterplots, lenses and fiber surfaces for bivariate fields")]
pub struct Cli {
    /// JSON file with default `resolution`, `r0` and `data_dir`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Directory with hole.cube, particle.cube and optionally subgroups.json.
    #[arg(long, conflicts_with_all = ["hole", "particle"])]
    pub data: Option<PathBuf>,
    #[arg(long, requires = "particle")]
    pub hole: Option<PathBuf>,
    #[arg(long, requires = "hole")]
    pub particle: Option<PathBuf>,
    /// Subgroup JSON: `[{"name": ..., "atoms": [...]}, ...]`.
    #[arg(long)]
    pub subgroup_file: Option<PathBuf>,
}

impl DataArgs {
    pub fn load(&self) -> AppResult<Dataset> {
        match (&self.data, &self.hole, &self.particle) {
            (Some(dir), _, _) => match &self.subgroup_file {
                Some(g) => Dataset::load(
                    dataset_id(dir),
                    &dir.join(workflow::HOLE_FILE),
                    &dir.join(workflow::PARTICLE_FILE),
                    Some(g),
                ),
                None => Dataset::load_dir(dataset_id(dir), dir),
            },
            (None, Some(h), Some(p)) => Dataset::load(dataset_id(h), h, p, self.subgroup_file.as_deref()),
            _ => Err(AppError::Usage("give --data DIR or --hole and --particle".into())),
        }
    }
}

fn dataset_id(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

#[derive(Debug, Args)]
pub struct ViewArgs {
    /// Bins per axis.
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Range window `s1min,s1max,s2min,s2max`; defaults to the padded
    /// extent of the whole field.
    #[arg(long)]
    pub window: Option<String>,
    /// Linear instead of logarithmic color scale.
    #[arg(long)]
    pub linear: bool,
}

#[derive(Debug, Args)]
pub struct LensArgs {
    #[arg(long)]
    pub lens: LensKind,
    /// Origin exclusion radius.
    #[arg(long)]
    pub r0: Option<f64>,
    /// Mask expression in `s1`, `s2` for `--lens custom`.
    #[arg(long)]
    pub expr: Option<String>,
}

impl LensArgs {
    fn spec(&self) -> LensSpec {
        LensSpec {
            kind: self.lens,
            r0: self.r0,
            expr: self.expr.clone(),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Whole-domain CSP: PREFIX.png, PREFIX.csv, PREFIX.json.
    Csp {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        view: ViewArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// CSP restricted to one subgroup.
    Peel {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        view: ViewArgs,
        #[arg(long)]
        segment: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// CSP weighted by a lens mask.
    Lens {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        view: ViewArgs,
        #[command(flatten)]
        lens: LensArgs,
        #[arg(long, default_value = WHOLE_DOMAIN)]
        segment: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Control polygons from mask isocontours: PREFIX.json, PREFIX.csv.
    Contour {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        lens: LensArgs,
        /// Isovalue.
        #[arg(long, allow_negative_numbers = true)]
        k: f64,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        window: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fiber surface of a range polyline.
    Fibersurface {
        #[command(flatten)]
        data: DataArgs,
        /// `s1,s2;s1,s2;...`
        #[arg(long, allow_hyphen_values = true)]
        polyline: String,
        #[arg(long)]
        closed: bool,
        #[arg(long, default_value = WHOLE_DOMAIN)]
        segment: String,
        /// obj, gltf or json.
        #[arg(long, default_value = "obj")]
        format: MeshFormat,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fiber of a range point.
    Fiber {
        #[command(flatten)]
        data: DataArgs,
        /// `s1,s2`
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long, default_value = WHOLE_DOMAIN)]
        segment: String,
        /// json or obj.
        #[arg(long, default_value = "json", value_parser = ["json", "obj"])]
        format: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-subgroup quantification report.
    Quant {
        #[command(flatten)]
        data: DataArgs,
        /// identity, hole, particle, donor_strength or poly:c0,c1,c2,c11,c12,c22.
        #[arg(long, default_value = "donor_strength")]
        weight: Weight,
        #[arg(long)]
        resolution: Option<usize>,
        /// Also print a text table.
        #[arg(long)]
        table: bool,
        /// JSON report path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Segment × lens grid of CSP images with an index.json.
    Matrix {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_delimiter = ',', default_value = "identity,donor,acceptor")]
        lenses: Vec<LensKind>,
        /// Subgroup names, `all`, and `whole`.
        #[arg(long, value_delimiter = ',', default_value = workflow::ALL_SUBGROUPS)]
        subgroups: Vec<String>,
        #[arg(long)]
        r0: Option<f64>,
        #[arg(long)]
        expr: Option<String>,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        linear: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the HTTP API on 127.0.0.1.
    Serve {
        /// Datasets are loaded from here; POST /datasets paths are relative to it.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long, env = "CSPLENS_PORT", default_value_t = service::DEFAULT_PORT)]
        port: u16,
    },
    /// Write synthetic cube files: hole.cube, particle.cube, subgroups.json.
    Synth {
        /// xy, gaussians or nto.
        #[arg(long)]
        kind: SynthKind,
        /// Vertices per axis.
        #[arg(long, default_value_t = 33)]
        dims: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                AppError::Usage(_) => 2,
                _ => 1,
            }
        }
    }
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut p = prefix.as_os_str().to_owned();
    p.push(".");
    p.push(ext);
    PathBuf::from(p)
}

/// Drops a trailing extension from `--out` for multi-file outputs.
fn prefix_of(out: &Path, known: &[&str]) -> PathBuf {
    match out.extension().and_then(|e| e.to_str()) {
        Some(e) if known.contains(&e) => out.with_extension(""),
        _ => out.to_path_buf(),
    }
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> AppResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, bytes)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_view(ds: &Dataset, req: &CspRequest, r0: Option<f64>, out: &Path) -> AppResult<()> {
    let view = workflow::csp_view(ds, req, r0)?;
    let prefix = prefix_of(out, &["png", "csv", "json"]);
    write(&with_ext(&prefix, "png"), view.png()?)?;
    write(&with_ext(&prefix, "csv"), view.csv())?;
    write(&with_ext(&prefix, "json"), format!("{}\n", view.meta_json()))
}

fn request(view: &ViewArgs, cfg: &Config, segment: &str, lens: Option<LensSpec>) -> AppResult<CspRequest> {
    Ok(CspRequest {
        segment: segment.to_string(),
        lens,
        resolution: view.resolution.unwrap_or(cfg.resolution),
        window: view.window.as_deref().map(workflow::parse_window).transpose()?,
        log_scale: !view.linear,
    })
}

fn execute(cli: Cli) -> AppResult<()> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Csp { data, view, out } => {
            let ds = data.load()?;
            write_view(&ds, &request(&view, &cfg, WHOLE_DOMAIN, None)?, cfg.r0, &out)
        }
        Command::Peel { data, view, segment, out } => {
            let ds = data.load()?;
            write_view(&ds, &request(&view, &cfg, &segment, None)?, cfg.r0, &out)
        }
        Command::Lens { data, view, lens, segment, out } => {
            let ds = data.load()?;
            write_view(&ds, &request(&view, &cfg, &segment, Some(lens.spec()))?, cfg.r0, &out)
        }
        Command::Contour { data, lens, k, resolution, window, out } => {
            let ds = data.load()?;
            let window = window.as_deref().map(workflow::parse_window).transpose()?;
            let res = resolution.unwrap_or(cfg.resolution);
            let cps = workflow::contours(&ds, &lens.spec(), k, res, window, cfg.r0)?;
            let prefix = prefix_of(&out, &["json", "csv"]);
            write(&with_ext(&prefix, "json"), workflow::contours_json(&cps))?;
            write(&with_ext(&prefix, "csv"), workflow::contours_csv(&cps))
        }
        Command::Fibersurface { data, polyline, closed, segment, format, out } => {
            let pl = workflow::parse_polyline(&polyline, closed).map_err(|e| match e {
                AppError::Core(err) => AppError::Usage(err.to_string()),
                other => other,
            })?;
            let ds = data.load()?;
            let mesh = workflow::fiber_surface(&ds, &pl, &segment)?;
            write(&out, workflow::mesh_bytes(&mesh, format))
        }
        Command::Fiber { data, point, segment, format, out } => {
            let p = workflow::parse_point(&point)?;
            let ds = data.load()?;
            let f = workflow::fiber_curve(&ds, p, &segment)?;
            match format.as_str() {
                "obj" => write(&out, f.to_obj()),
                _ => write(&out, f.to_json()),
            }
        }
        Command::Quant { data, weight, resolution, table, out } => {
            let ds = data.load()?;
            let report = workflow::quant(&ds, &weight, resolution.unwrap_or(cfg.resolution))?;
            match out {
                Some(p) => write(&p, report.to_json())?,
                None => print!("{}", report.to_json()),
            }
            if table {
                print!("{}", report.to_table());
            }
            Ok(())
        }
        Command::Matrix { data, lenses, subgroups, r0, expr, resolution, linear, out } => {
            if expr.is_some() && !lenses.contains(&LensKind::Custom) {
                return Err(AppError::Usage("--expr needs `custom` in --lenses".into()));
            }
            let specs: Vec<LensSpec> = lenses
                .iter()
                .map(|&kind| LensSpec {
                    kind,
                    r0,
                    expr: if kind == LensKind::Custom { expr.clone() } else { None },
                })
                .collect();
            let ds = data.load()?;
            let res = resolution.unwrap_or(cfg.resolution);
            let (index, files) = workflow::matrix(&ds, &specs, &subgroups, res, !linear, cfg.r0)?;
            for (name, png) in &files {
                write(&out.join(name), png)?;
            }
            write(&out.join("index.json"), workflow::to_pretty_json(&index))
        }
        Command::Serve { data_dir, port } => {
            let dir = data_dir
                .or_else(|| cfg.data_dir.clone())
                .unwrap_or_else(|| PathBuf::from("."));
            let state = AppState::new(cfg, dir);
            let ids = state.load_data_dir()?;
            for id in &ids {
                eprintln!("loaded dataset `{id}`");
            }
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(service::serve(Arc::new(state), port))?;
            Ok(())
        }
        Command::Synth { kind, dims, out } => {
            for p in workflow::write_synthetic(kind, dims, &out)? {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
    }
}
