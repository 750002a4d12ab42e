//! Operations shared by the command line and the HTTP service. Every output
//! that leaves the process is produced here, so both front ends emit the
//! same bytes for the same parameters.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use csplens::csp::{self, compute_csp, peel_csp, CspHistogram, RangeWindow};
use csplens::cube;
use csplens::elements;
use csplens::fiber::{self, FiberSurfaceMesh, MeshFormat};
use csplens::lens::{apply_lens, contour_mask, quantify_lens, ControlPolygon, LensKind, LensMask, LensSpec};
use csplens::quant::{delta_exact, quantify, Deltas, QuantReport, Weight};
use csplens::segmentation::{segment, Segmentation, WHOLE_DOMAIN};
use csplens::synthetic::{self, Aabb, GaussianBump, NtoPairConfig};
use csplens::tet::Tetrahedralization;
use csplens::{BivariateField, Molecule, RangePoint, RangePolyline};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const HOLE_FILE: &str = "hole.cube";
pub const PARTICLE_FILE: &str = "particle.cube";
pub const SUBGROUP_FILE: &str = "subgroups.json";

/// Keyword selecting every subgroup of a molecule.
pub const ALL_SUBGROUPS: &str = "all";

/// Bond when the distance is at most this multiple of the summed radii.
pub const BOND_FACTOR: f64 = 1.2;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),
    #[error(transparent)]
    Core(#[from] csplens::Error),
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Core(e.into())
    }
}

pub type AppResult<T> = Result<T, AppError>;

/// Defaults read from the optional JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub resolution: usize,
    /// Origin exclusion radius for lenses that do not set one.
    pub r0: Option<f64>,
    pub data_dir: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            resolution: csp::DEFAULT_RESOLUTION,
            r0: None,
            data_dir: None,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Config = serde_json::from_str(&text).map_err(csplens::Error::from)?;
        if cfg.resolution == 0 {
            return Err(AppError::Usage("config resolution must be positive".into()));
        }
        Ok(cfg)
    }
}

/// A loaded field pair with its derived structures.
#[derive(Debug)]
pub struct Dataset {
    pub id: String,
    pub field: BivariateField,
    pub molecule: Molecule,
    pub tets: Tetrahedralization,
    pub seg: Segmentation,
    donor: OnceLock<Deltas>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DatasetInfo {
    pub id: String,
    pub dims: [usize; 3],
    pub atoms: usize,
    pub subgroups: Vec<String>,
}

impl Dataset {
    pub fn new(id: impl Into<String>, field: BivariateField, molecule: Molecule) -> AppResult<Self> {
        let tets = Tetrahedralization::new(field.grid());
        let seg = segment(field.grid(), &molecule, &tets)?;
        Ok(Self {
            id: id.into(),
            field,
            molecule,
            tets,
            seg,
            donor: OnceLock::new(),
        })
    }

    pub fn load(
        id: impl Into<String>,
        hole: &Path,
        particle: &Path,
        subgroups: Option<&Path>,
    ) -> AppResult<Self> {
        let (field, molecule) = cube::load_bivariate_files(hole, particle, subgroups)?;
        Self::new(id, field, molecule)
    }

    /// Loads `hole.cube`, `particle.cube` and, if present, `subgroups.json`.
    pub fn load_dir(id: impl Into<String>, dir: &Path) -> AppResult<Self> {
        let groups = dir.join(SUBGROUP_FILE);
        let groups = groups.is_file().then_some(groups);
        Self::load(id, &dir.join(HOLE_FILE), &dir.join(PARTICLE_FILE), groups.as_deref())
    }

    pub fn info(&self) -> DatasetInfo {
        DatasetInfo {
            id: self.id.clone(),
            dims: self.field.grid().dims(),
            atoms: self.molecule.atoms().len(),
            subgroups: self.seg.subgroup_names().to_vec(),
        }
    }

    /// The padded window of the whole field, shared by every segment so
    /// peeled views stay comparable.
    pub fn default_window(&self, resolution: usize) -> AppResult<RangeWindow> {
        Ok(RangeWindow::auto(&self.field, &self.tets, None, [resolution, resolution])?)
    }

    pub fn window(&self, resolution: usize, bounds: Option<[f64; 4]>) -> AppResult<RangeWindow> {
        check_resolution(resolution)?;
        match bounds {
            Some([a, b, c, d]) => Ok(RangeWindow::new([a, b], [c, d], [resolution, resolution])?),
            None => self.default_window(resolution),
        }
    }

    pub fn cells(&self, segment: &str) -> AppResult<Option<Vec<usize>>> {
        Ok(self.seg.cells_named(segment)?)
    }

    pub fn histogram(&self, segment: &str, window: &RangeWindow) -> AppResult<CspHistogram> {
        if segment == WHOLE_DOMAIN {
            Ok(compute_csp(&self.field, &self.tets, window, None))
        } else {
            Ok(peel_csp(&self.field, &self.tets, &self.seg, segment, window)?)
        }
    }

    /// Exact `∫ s1² - s2²` over a segment, computed once per dataset.
    pub fn donor_strength(&self, segment: &str) -> AppResult<f64> {
        let d = match self.donor.get() {
            Some(d) => d,
            None => {
                let d = delta_exact(&self.field, &self.tets, &self.seg, &Weight::DonorStrength)?;
                self.donor.get_or_init(|| d)
            }
        };
        if segment == WHOLE_DOMAIN {
            return Ok(d.whole);
        }
        Ok(d.subgroups[self.seg.subgroup_index(segment)?])
    }

    /// Expands `all` to the subgroup list; other names are checked.
    pub fn segments(&self, names: &[String]) -> AppResult<Vec<String>> {
        let mut out = Vec::new();
        for n in names {
            if n == ALL_SUBGROUPS {
                out.extend(self.seg.subgroup_names().iter().cloned());
            } else {
                self.cells(n)?;
                out.push(n.clone());
            }
        }
        if out.is_empty() {
            return Err(AppError::Usage("no segments selected".into()));
        }
        Ok(out)
    }
}

fn check_resolution(r: usize) -> AppResult<()> {
    if r == 0 || r > 8192 {
        return Err(AppError::Usage(format!("resolution {r} outside 1..=8192")));
    }
    Ok(())
}

/// Resolves a lens; the identity lens excludes nothing unless asked to.
pub fn resolve_lens(spec: &LensSpec, window: &RangeWindow, default_r0: Option<f64>) -> AppResult<LensMask> {
    let mut spec = spec.clone();
    if spec.r0.is_none() {
        spec.r0 = if spec.kind == LensKind::Identity { Some(0.0) } else { default_r0 };
    }
    Ok(spec.resolve(window)?)
}

/// `"a,b,c,..."` → floats.
pub fn parse_floats(s: &str, n: usize) -> AppResult<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| AppError::Usage(format!("bad number in `{s}`: {e}")))?;
    if v.len() != n || v.iter().any(|x| !x.is_finite()) {
        return Err(AppError::Usage(format!("expected {n} finite numbers, got `{s}`")));
    }
    Ok(v)
}

pub fn parse_window(s: &str) -> AppResult<[f64; 4]> {
    let v = parse_floats(s, 4)?;
    Ok([v[0], v[1], v[2], v[3]])
}

pub fn parse_point(s: &str) -> AppResult<RangePoint> {
    let v = parse_floats(s, 2)?;
    Ok(RangePoint::new(v[0], v[1]))
}

/// `"s1,s2;s1,s2;..."`.
pub fn parse_polyline(s: &str, closed: bool) -> AppResult<RangePolyline> {
    let pts = s
        .split(';')
        .filter(|t| !t.trim().is_empty())
        .map(parse_point)
        .collect::<AppResult<Vec<_>>>()?;
    Ok(RangePolyline::new(pts, closed)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CspRequest {
    pub segment: String,
    pub lens: Option<LensSpec>,
    pub resolution: usize,
    pub window: Option<[f64; 4]>,
    pub log_scale: bool,
}

impl CspRequest {
    pub fn whole(resolution: usize) -> Self {
        Self {
            segment: WHOLE_DOMAIN.to_string(),
            lens: None,
            resolution,
            window: None,
            log_scale: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CspMeta {
    pub dataset: String,
    pub segment: String,
    pub lens: Option<String>,
    pub r0: Option<f64>,
    pub window: RangeWindow,
    pub log_scale: bool,
    /// Volume mapped into the window before the lens.
    pub total_mass: f64,
    /// Lens quantity of the view; the volume when no lens is set.
    pub delta: f64,
    /// Exact donor strength of the segment, for annotation.
    pub donor_strength: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone)]
pub struct CspView {
    pub hist: CspHistogram,
    pub meta: CspMeta,
}

impl CspView {
    pub fn png(&self) -> AppResult<Vec<u8>> {
        Ok(csp::csp_png(&self.hist, self.meta.log_scale)?)
    }

    pub fn csv(&self) -> String {
        csp::export::to_csv(&self.hist)
    }

    /// Single-line JSON, also used as the HTTP metadata header.
    pub fn meta_json(&self) -> String {
        serde_json::to_string(&self.meta).expect("meta serializes")
    }
}

pub fn csp_view(ds: &Dataset, req: &CspRequest, default_r0: Option<f64>) -> AppResult<CspView> {
    let window = ds.window(req.resolution, req.window)?;
    let raw = ds.histogram(&req.segment, &window)?;
    let total_mass = raw.total_mass();
    let (hist, lens, r0, delta) = match &req.lens {
        Some(spec) => {
            let m = resolve_lens(spec, &window, default_r0)?;
            let delta = quantify_lens(&raw, &m);
            (apply_lens(&raw, &m), Some(m.name()), Some(m.r0()), delta)
        }
        None => (raw, None, None, total_mass),
    };
    let meta = CspMeta {
        dataset: ds.id.clone(),
        segment: req.segment.clone(),
        lens,
        r0,
        window,
        log_scale: req.log_scale,
        total_mass,
        delta,
        donor_strength: ds.donor_strength(&req.segment)?,
        clamped: hist.clamped,
    };
    Ok(CspView { hist, meta })
}

pub fn contours(
    ds: &Dataset,
    lens: &LensSpec,
    k: f64,
    resolution: usize,
    window: Option<[f64; 4]>,
    default_r0: Option<f64>,
) -> AppResult<Vec<ControlPolygon>> {
    if !k.is_finite() {
        return Err(AppError::Usage("contour level must be finite".into()));
    }
    let w = ds.window(resolution, window)?;
    let m = resolve_lens(lens, &w, default_r0)?;
    Ok(contour_mask(&m, &w, k))
}

pub fn contours_json(cps: &[ControlPolygon]) -> String {
    let mut s = serde_json::to_string_pretty(cps).expect("contours serialize");
    s.push('\n');
    s
}

pub fn contours_csv(cps: &[ControlPolygon]) -> String {
    let mut s = String::from("polygon,vertex,s1,s2\n");
    for (i, cp) in cps.iter().enumerate() {
        for (j, p) in cp.polyline.points().iter().enumerate() {
            s.push_str(&format!("{i},{j},{},{}\n", p.s1, p.s2));
        }
    }
    s
}

pub fn fiber_surface(ds: &Dataset, polyline: &RangePolyline, segment: &str) -> AppResult<FiberSurfaceMesh> {
    let cells = ds.cells(segment)?;
    Ok(fiber::extract_fiber_surface(&ds.field, &ds.tets, polyline, cells.as_deref()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberOutput {
    pub point: RangePoint,
    pub segment: String,
    pub length: f64,
    pub polylines: Vec<Vec<[f64; 3]>>,
}

impl FiberOutput {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("fiber serializes");
        s.push('\n');
        s
    }

    /// Vertices and `l` records, one per polyline.
    pub fn to_obj(&self) -> String {
        let mut s = String::new();
        let mut next = 1usize;
        for line in &self.polylines {
            for p in line {
                s.push_str(&format!("v {} {} {}\n", p[0], p[1], p[2]));
            }
            let ids: Vec<String> = (next..next + line.len()).map(|i| i.to_string()).collect();
            s.push_str(&format!("l {}\n", ids.join(" ")));
            next += line.len();
        }
        s
    }
}

pub fn fiber_curve(ds: &Dataset, point: RangePoint, segment: &str) -> AppResult<FiberOutput> {
    let cells = ds.cells(segment)?;
    let curve = fiber::extract_fiber(&ds.field, &ds.tets, point, cells.as_deref());
    Ok(FiberOutput {
        point,
        segment: segment.to_string(),
        length: curve.length(),
        polylines: curve.polylines(),
    })
}

pub fn quant(ds: &Dataset, weight: &Weight, resolution: usize) -> AppResult<QuantReport> {
    check_resolution(resolution)?;
    Ok(quantify(&ds.field, &ds.tets, &ds.seg, weight, [resolution, resolution])?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixEntry {
    pub segment: String,
    pub lens: String,
    pub file: String,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixIndex {
    pub dataset: String,
    pub window: RangeWindow,
    pub segments: Vec<String>,
    pub lenses: Vec<String>,
    /// Row-major: one row per segment, one column per lens.
    pub entries: Vec<MatrixEntry>,
    /// Exact donor strength per segment.
    pub donor_strength: Vec<f64>,
}

/// File name and contents.
pub type NamedFile = (String, Vec<u8>);

/// Segment × lens grid of rendered views plus an index.
pub fn matrix(
    ds: &Dataset,
    lenses: &[LensSpec],
    segments: &[String],
    resolution: usize,
    log_scale: bool,
    default_r0: Option<f64>,
) -> AppResult<(MatrixIndex, Vec<NamedFile>)> {
    if lenses.is_empty() {
        return Err(AppError::Usage("no lenses selected".into()));
    }
    let segments = ds.segments(segments)?;
    let window = ds.default_window(resolution)?;
    check_resolution(resolution)?;
    let masks = lenses
        .iter()
        .map(|l| resolve_lens(l, &window, default_r0))
        .collect::<AppResult<Vec<_>>>()?;
    let mut entries = Vec::new();
    let mut files = Vec::new();
    for s in &segments {
        let raw = ds.histogram(s, &window)?;
        for m in &masks {
            let file = format!("{}_{}.png", file_stem(s), file_stem(&m.kind().to_string()));
            let png = csp::csp_png(&apply_lens(&raw, m), log_scale)?;
            entries.push(MatrixEntry {
                segment: s.clone(),
                lens: m.name(),
                file: file.clone(),
                delta: quantify_lens(&raw, m),
            });
            files.push((file, png));
        }
    }
    let donor_strength = segments.iter().map(|s| ds.donor_strength(s)).collect::<AppResult<_>>()?;
    let index = MatrixIndex {
        dataset: ds.id.clone(),
        window,
        segments,
        lenses: masks.iter().map(LensMask::name).collect(),
        entries,
        donor_strength,
    };
    Ok((index, files))
}

fn file_stem(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub fn to_pretty_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serializes");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomView {
    pub index: usize,
    pub atomic_number: u32,
    pub symbol: &'static str,
    pub position: [f64; 3],
    pub radius: f64,
    pub subgroup: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoleculeView {
    pub atoms: Vec<AtomView>,
    pub bonds: Vec<[usize; 2]>,
    pub subgroups: Vec<String>,
}

/// Atoms plus distance-heuristic bonds from covalent radii.
pub fn molecule_view(mol: &Molecule) -> MoleculeView {
    let atoms: Vec<AtomView> = mol
        .atoms()
        .iter()
        .enumerate()
        .map(|(i, a)| AtomView {
            index: i,
            atomic_number: a.atomic_number,
            symbol: elements::symbol(a.atomic_number),
            position: a.position,
            radius: a.radius,
            subgroup: mol.subgroups()[mol.subgroup_of(i)].name.clone(),
        })
        .collect();
    let mut bonds = Vec::new();
    for i in 0..atoms.len() {
        for j in i + 1..atoms.len() {
            let (a, b) = (&atoms[i], &atoms[j]);
            let d2: f64 = (0..3).map(|k| (a.position[k] - b.position[k]).powi(2)).sum();
            let reach = BOND_FACTOR
                * (elements::covalent_radius_bohr(a.atomic_number)
                    + elements::covalent_radius_bohr(b.atomic_number));
            if d2.sqrt() <= reach {
                bonds.push([i, j]);
            }
        }
    }
    MoleculeView {
        atoms,
        bonds,
        subgroups: mol.subgroup_names(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    /// `(x, y)` on the unit cube.
    Xy,
    /// Two offset Gaussian lobes, one per field, unnormalized.
    Gaussians,
    /// Unit-normalized donor/acceptor pair with subgroups `A` and `B`.
    Nto,
}

impl std::str::FromStr for SynthKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "xy" => Ok(SynthKind::Xy),
            "gaussians" => Ok(SynthKind::Gaussians),
            "nto" | "nto_pair" => Ok(SynthKind::Nto),
            _ => Err(format!("unknown synthetic kind `{s}` (xy, gaussians, nto)")),
        }
    }
}

pub fn synthesize(kind: SynthKind, dims: usize) -> AppResult<(BivariateField, Molecule)> {
    if dims < 2 {
        return Err(AppError::Usage("synthetic grids need at least 2 vertices per axis".into()));
    }
    let d = [dims; 3];
    Ok(match kind {
        SynthKind::Xy => {
            let f = synthetic::make_synthetic_xy(d, Aabb::unit())?;
            (f, synthetic::placeholder_molecule(Aabb::unit())?)
        }
        SynthKind::Gaussians => {
            let b = Aabb::cube(-2.0, 2.0);
            let f = synthetic::make_synthetic_gaussians(
                d,
                b,
                &[GaussianBump::new([-0.6, 0.2, 0.0], 1.0, 0.7)],
                &[GaussianBump::new([0.5, -0.4, 0.1], 1.0, 0.6)],
            )?;
            (f, synthetic::placeholder_molecule(b)?)
        }
        SynthKind::Nto => {
            let ds = synthetic::nto_pair(&NtoPairConfig {
                dims: d,
                ..NtoPairConfig::default()
            })?;
            (ds.field, ds.molecule)
        }
    })
}

/// Writes a synthetic pair as `hole.cube`, `particle.cube`, `subgroups.json`.
pub fn write_synthetic(kind: SynthKind, dims: usize, dir: &Path) -> AppResult<Vec<PathBuf>> {
    let (field, mol) = synthesize(kind, dims)?;
    std::fs::create_dir_all(dir)?;
    let hole = cube::dataset_for(field.first(), &mol, ["hole", "synthetic"]);
    let part = cube::dataset_for(field.second(), &mol, ["particle", "synthetic"]);
    let paths = [dir.join(HOLE_FILE), dir.join(PARTICLE_FILE), dir.join(SUBGROUP_FILE)];
    std::fs::write(&paths[0], cube::write_cube(&hole))?;
    std::fs::write(&paths[1], cube::write_cube(&part))?;
    std::fs::write(&paths[2], to_pretty_json(&mol.subgroups()))?;
    Ok(paths.to_vec())
}

pub fn mesh_bytes(mesh: &FiberSurfaceMesh, format: MeshFormat) -> Vec<u8> {
    fiber::export_mesh(mesh, format)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nto(n: usize) -> Dataset {
        let (f, m) = synthesize(SynthKind::Nto, n).unwrap();
        Dataset::new("nto", f, m).unwrap()
    }

    #[test]
    fn parsing_helpers() {
        assert_eq!(parse_window("0,1,-1,2").unwrap(), [0.0, 1.0, -1.0, 2.0]);
        assert!(parse_window("0,1,2").is_err());
        assert!(parse_point("1,nan").is_err());
        let pl = parse_polyline("0,0;1,0;1,1", true).unwrap();
        assert_eq!(pl.points().len(), 3);
        assert!(parse_polyline("0,0", false).is_err());
    }

    #[test]
    fn identity_lens_is_a_no_op_by_default() {
        let ds = nto(9);
        let plain = csp_view(&ds, &CspRequest::whole(40), Some(0.5)).unwrap();
        let mut req = CspRequest::whole(40);
        req.lens = Some(LensSpec::named(LensKind::Identity));
        let lensed = csp_view(&ds, &req, Some(0.5)).unwrap();
        assert_eq!(plain.png().unwrap(), lensed.png().unwrap());
        assert_eq!(plain.hist.mass, lensed.hist.mass);
    }

    #[test]
    fn matrix_covers_the_grid() {
        let ds = nto(9);
        let lenses: Vec<_> = [LensKind::Identity, LensKind::Donor, LensKind::Acceptor]
            .map(LensSpec::named)
            .to_vec();
        let (idx, files) = matrix(&ds, &lenses, &["all".into(), "whole".into()], 30, true, None).unwrap();
        assert_eq!(idx.segments, vec!["A", "B", "whole"]);
        assert_eq!(files.len(), 9);
        assert_eq!(files[0].0, "A_identity.png");
        assert!(matrix(&ds, &lenses, &["nope".into()], 30, true, None).is_err());
    }

    #[test]
    fn bonds_follow_the_distance_rule() {
        use csplens::{Atom, SubgroupSpec};
        // C-C at 2.9 bohr bonds, a third atom 10 bohr away does not
        let mol = Molecule::new(
            vec![
                Atom::with_default_radius(6, [0.0, 0.0, 0.0]).unwrap(),
                Atom::with_default_radius(6, [2.9, 0.0, 0.0]).unwrap(),
                Atom::with_default_radius(8, [12.9, 0.0, 0.0]).unwrap(),
            ],
            vec![SubgroupSpec::new("L", vec![0, 1])],
        )
        .unwrap();
        let v = molecule_view(&mol);
        assert_eq!(v.bonds, vec![[0, 1]]);
        assert_eq!(v.atoms[2].subgroup, "REST");
        assert_eq!(v.atoms[0].symbol, "C");
    }

    #[test]
    fn fiber_output_formats() {
        let (f, m) = synthesize(SynthKind::Xy, 5).unwrap();
        let ds = Dataset::new("xy", f, m).unwrap();
        let out = fiber_curve(&ds, RangePoint::new(0.3, 0.6), "whole").unwrap();
        assert!((out.length - 1.0).abs() < 1e-9);
        assert_eq!(out.polylines.len(), 1);
        let obj = out.to_obj();
        let verts = obj.lines().filter(|l| l.starts_with("v ")).count();
        assert_eq!(verts, out.polylines[0].len());
        assert_eq!(obj.lines().filter(|l| l.starts_with("l ")).count(), 1);
    }

    #[test]
    fn config_parses_partial_files() {
        let dir = std::env::temp_dir().join(format!("csplens-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("c.json");
        std::fs::write(&p, r#"{"r0": 0.1}"#).unwrap();
        let c = Config::load(&p).unwrap();
        assert_eq!(c.resolution, csp::DEFAULT_RESOLUTION);
        assert_eq!(c.r0, Some(0.1));
        std::fs::write(&p, r#"{"resolution": 0}"#).unwrap();
        assert!(Config::load(&p).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
