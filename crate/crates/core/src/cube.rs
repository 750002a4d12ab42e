//! Gaussian cube files.
//!
//! Layout: two comment lines; `natoms ox oy oz`; three axis lines
//! `n vx vy vz`; `natoms` atom lines `Z charge x y z`; then `nx·ny·nz` values
//! with z running fastest, whitespace separated. A negative axis count means
//! the geometry is given in Angstrom. In memory everything is in Bohr and
//! values are stored x-fastest.

use std::fmt::Write as _;
use std::path::Path;

use crate::elements::ANGSTROM_IN_BOHR;
use crate::geom::{self, Vec3};
use crate::model::{Atom, BivariateField, Molecule, ScalarGrid, StructuredGrid, SubgroupSpec};
use crate::{Error, Result};

/// Absolute tolerance for comparing grid headers of paired files.
pub const GRID_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CubeDataset {
    pub molecule: Molecule,
    pub field: ScalarGrid,
    pub comments: [String; 2],
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::CubeParse {
        line,
        msg: msg.into(),
    }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    // Fortran writers sometimes emit D exponents
    let v: f64 = tok
        .replace(['D', 'd'], "E")
        .parse()
        .map_err(|_| perr(line, format!("expected a number, found `{tok}`")))?;
    if !v.is_finite() {
        return Err(perr(line, format!("non-finite value `{tok}`")));
    }
    Ok(v)
}

fn parse_int(tok: &str, line: usize) -> Result<i64> {
    tok.parse()
        .map_err(|_| perr(line, format!("expected an integer, found `{tok}`")))
}

fn numbers(line: &str, lineno: usize, want: usize) -> Result<Vec<&str>> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() < want {
        return Err(perr(
            lineno,
            format!("expected {want} fields, found {}", toks.len()),
        ));
    }
    Ok(toks)
}

pub fn parse_cube(bytes: &[u8]) -> Result<CubeDataset> {
    let text = std::str::from_utf8(bytes).map_err(|e| perr(0, format!("not UTF-8 text: {e}")))?;
    let mut lines = text.lines();
    let mut lineno = 0usize;
    let mut next_line = |what: &str| -> Result<(usize, &str)> {
        lineno += 1;
        lines
            .next()
            .map(|l| (lineno, l))
            .ok_or_else(|| perr(lineno, format!("unexpected end of file, expected {what}")))
    };

    let c1 = next_line("comment")?.1.trim_end().to_string();
    let c2 = next_line("comment")?.1.trim_end().to_string();

    let (ln, l) = next_line("atom count and origin")?;
    let toks = numbers(l, ln, 4)?;
    let natoms = parse_int(toks[0], ln)?;
    if natoms <= 0 {
        return Err(perr(
            ln,
            format!(
                "atom count {natoms}: cube files with orbital-index headers (natoms ≤ 0) are not supported"
            ),
        ));
    }
    if let Some(nval) = toks.get(4) {
        if parse_int(nval, ln)? != 1 {
            return Err(perr(ln, "multi-value cube files are not supported"));
        }
    }
    let mut origin: Vec3 = [
        parse_f64(toks[1], ln)?,
        parse_f64(toks[2], ln)?,
        parse_f64(toks[3], ln)?,
    ];

    let mut dims = [0usize; 3];
    let mut axes = [[0.0; 3]; 3];
    let mut angstrom = false;
    for a in 0..3 {
        let (ln, l) = next_line("axis line")?;
        let toks = numbers(l, ln, 4)?;
        let n = parse_int(toks[0], ln)?;
        if n < 0 {
            angstrom = true;
        }
        if n.unsigned_abs() < 2 {
            return Err(perr(ln, format!("axis count {n} must be at least 2 in magnitude")));
        }
        dims[a] = n.unsigned_abs() as usize;
        for c in 0..3 {
            axes[a][c] = parse_f64(toks[c + 1], ln)?;
        }
    }
    let unit = if angstrom { ANGSTROM_IN_BOHR } else { 1.0 };
    origin = geom::scale(origin, unit);
    for axis in &mut axes {
        *axis = geom::scale(*axis, unit);
    }

    let mut atoms = Vec::with_capacity(natoms as usize);
    for _ in 0..natoms {
        let (ln, l) = next_line("atom line")?;
        let toks = numbers(l, ln, 5)?;
        let z = parse_f64(toks[0], ln)?;
        if z < 1.0 || z.fract() != 0.0 {
            return Err(perr(ln, format!("invalid atomic number `{}`", toks[0])));
        }
        let pos = [
            parse_f64(toks[2], ln)? * unit,
            parse_f64(toks[3], ln)? * unit,
            parse_f64(toks[4], ln)? * unit,
        ];
        atoms.push(Atom::with_default_radius(z as u32, pos)?);
    }

    let grid = StructuredGrid::new(dims, origin, axes)
        .map_err(|e| perr(3, e.to_string()))?;
    let [nx, ny, nz] = dims;
    let total = nx * ny * nz;
    let mut values = vec![0.0; total];
    let mut count = 0usize;
    for (ln, l) in lines.enumerate().map(|(i, l)| (i + lineno + 1, l)) {
        for tok in l.split_whitespace() {
            if count == total {
                return Err(perr(ln, format!("more than {total} values")));
            }
            let v = parse_f64(tok, ln)?;
            // file order: ((i·ny) + j)·nz + k
            let k = count % nz;
            let j = (count / nz) % ny;
            let i = count / (ny * nz);
            values[grid.index(i, j, k)] = v;
            count += 1;
        }
    }
    if count != total {
        return Err(perr(
            lineno + 1,
            format!("truncated value block: {count} of {total} values"),
        ));
    }

    let molecule = Molecule::new(atoms, Vec::new())?;
    Ok(CubeDataset {
        molecule,
        field: ScalarGrid::new(grid, values)?,
        comments: [c1, c2],
    })
}

/// C-style `%13.5E`.
pub fn format_e13(v: f64) -> String {
    let s = format!("{v:.5e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent formatting");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{:>13}", format!("{mantissa}E{sign}{:02}", exp.abs()))
}

/// Canonical cube: Bohr units, positive counts, `%13.5E` values, 6 per line.
pub fn write_cube(d: &CubeDataset) -> Vec<u8> {
    let grid = d.field.grid();
    let mut out = String::new();
    for c in &d.comments {
        out.push_str(&c.replace(['\n', '\r'], " "));
        out.push('\n');
    }
    let o = grid.origin();
    let atoms = d.molecule.atoms();
    let _ = writeln!(out, "{:5}{:12.6}{:12.6}{:12.6}", atoms.len(), o[0], o[1], o[2]);
    for (n, a) in grid.dims().iter().zip(grid.axes()) {
        let _ = writeln!(out, "{:5}{:12.6}{:12.6}{:12.6}", n, a[0], a[1], a[2]);
    }
    for atom in atoms {
        let p = atom.position;
        let _ = writeln!(
            out,
            "{:5}{:12.6}{:12.6}{:12.6}{:12.6}",
            atom.atomic_number, atom.atomic_number as f64, p[0], p[1], p[2]
        );
    }
    let [nx, ny, nz] = grid.dims();
    let values = d.field.values();
    let mut on_line = 0;
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                out.push_str(&format_e13(values[grid.index(i, j, k)]));
                on_line += 1;
                if on_line == 6 {
                    out.push('\n');
                    on_line = 0;
                }
            }
        }
    }
    if on_line != 0 {
        out.push('\n');
    }
    out.into_bytes()
}

pub fn read_cube_file(path: impl AsRef<Path>) -> Result<CubeDataset> {
    let bytes = std::fs::read(path.as_ref())?;
    parse_cube(&bytes)
}

/// Subgroup file: a JSON list of `{"name": ..., "atoms": [indices]}`.
pub fn parse_subgroups(json: &str) -> Result<Vec<SubgroupSpec>> {
    Ok(serde_json::from_str(json)?)
}

/// Pairs a hole and a particle cube into one field; subgroups refer to the
/// (shared) atom list.
pub fn load_bivariate(
    hole: &CubeDataset,
    particle: &CubeDataset,
    subgroups: &[SubgroupSpec],
) -> Result<(BivariateField, Molecule)> {
    let (gh, gp) = (hole.field.grid(), particle.field.grid());
    if !gh.approx_eq(gp, GRID_TOLERANCE) {
        return Err(Error::GridMismatch(format!(
            "hole grid (dims {:?}, origin {:?}) differs from particle grid (dims {:?}, origin {:?})",
            gh.dims(),
            gh.origin(),
            gp.dims(),
            gp.origin()
        )));
    }
    let (ah, ap) = (hole.molecule.atoms(), particle.molecule.atoms());
    if ah.len() != ap.len() {
        return Err(Error::AtomMismatch(format!(
            "{} atoms in hole cube, {} in particle cube",
            ah.len(),
            ap.len()
        )));
    }
    for (i, (a, b)) in ah.iter().zip(ap).enumerate() {
        let moved = a
            .position
            .iter()
            .zip(&b.position)
            .any(|(x, y)| (x - y).abs() > GRID_TOLERANCE);
        if a.atomic_number != b.atomic_number || moved {
            return Err(Error::AtomMismatch(format!("atom {i} differs between the cubes")));
        }
    }
    let second = ScalarGrid::new(gh.clone(), particle.field.values().to_vec())?;
    let field = BivariateField::new(hole.field.clone(), second)?;
    let molecule = Molecule::new(ah.to_vec(), subgroups.to_vec())?;
    Ok((field, molecule))
}

/// File-based [`load_bivariate`].
pub fn load_bivariate_files(
    hole: impl AsRef<Path>,
    particle: impl AsRef<Path>,
    subgroups: Option<&Path>,
) -> Result<(BivariateField, Molecule)> {
    let h = read_cube_file(hole)?;
    let p = read_cube_file(particle)?;
    let specs = match subgroups {
        Some(path) => parse_subgroups(&std::fs::read_to_string(path)?)?,
        None => Vec::new(),
    };
    load_bivariate(&h, &p, &specs)
}

/// Writes one component of a field as a cube dataset.
pub fn dataset_for(field: &ScalarGrid, molecule: &Molecule, comments: [&str; 2]) -> CubeDataset {
    CubeDataset {
        molecule: molecule.clone(),
        field: field.clone(),
        comments: comments.map(str::to_string),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = "\
tiny cube
values 0..7
    1    0.000000    0.000000    0.000000
    2    1.000000    0.000000    0.000000
    2    0.000000    1.000000    0.000000
    2    0.000000    0.000000    1.000000
    6    0.000000    0.500000    0.500000    0.500000
  0.0 1.0 2.0 3.0 4.0 5.0
  6.0 7.0
";

    #[test]
    fn reorders_to_x_fastest() {
        let d = parse_cube(TINY.as_bytes()).unwrap();
        let g = d.field.grid();
        assert_eq!(g.dims(), [2, 2, 2]);
        // file index of (i, j, k) is 4i + 2j + k
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert_eq!(d.field.value(i, j, k), (4 * i + 2 * j + k) as f64);
                }
            }
        }
        assert_eq!(d.field.value(1, 0, 0), 4.0);
        assert_eq!(d.molecule.atoms().len(), 1);
        assert_eq!(d.comments[0], "tiny cube");
    }

    #[test]
    fn every_value_appears_once() {
        let d = parse_cube(TINY.as_bytes()).unwrap();
        let mut v = d.field.values().to_vec();
        v.sort_by(f64::total_cmp);
        assert_eq!(v, (0..8).map(f64::from).collect::<Vec<_>>());
    }

    #[test]
    fn write_then_parse_is_stable() {
        let d = parse_cube(TINY.as_bytes()).unwrap();
        let bytes = write_cube(&d);
        let text = String::from_utf8(bytes.clone()).unwrap();
        let value_lines: Vec<&str> = text.lines().skip(7).collect();
        assert_eq!(value_lines.len(), 2);
        assert!(text.contains("  1.00000E+00"));
        let again = parse_cube(&bytes).unwrap();
        assert_eq!(again, d);
        assert_eq!(write_cube(&again), bytes);
    }

    #[test]
    fn angstrom_header_converts_to_bohr() {
        let bohr = TINY;
        let s = ANGSTROM_IN_BOHR;
        let ang = format!(
            "a\nb\n    1    0.000000    0.000000    0.000000\n   -2 {:.9} 0 0\n   -2 0 {:.9} 0\n   -2 0 0 {:.9}\n    6 0 {:.9} {:.9} {:.9}\n0 1 2 3 4 5 6 7\n",
            1.0 / s,
            1.0 / s,
            1.0 / s,
            0.5 / s,
            0.5 / s,
            0.5 / s
        );
        let a = parse_cube(ang.as_bytes()).unwrap();
        let b = parse_cube(bohr.as_bytes()).unwrap();
        assert_eq!(a.field.grid().dims(), [2, 2, 2]);
        assert!(a.field.grid().approx_eq(b.field.grid(), 1e-8));
        for (x, y) in a.molecule.atoms()[0]
            .position
            .iter()
            .zip(b.molecule.atoms()[0].position)
        {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn format_e13_matches_printf() {
        assert_eq!(format_e13(1.0), "  1.00000E+00");
        assert_eq!(format_e13(0.0), "  0.00000E+00");
        assert_eq!(format_e13(-1.234567e-12), " -1.23457E-12");
        assert_eq!(format_e13(9.999996), "  1.00000E+01");
        assert_eq!(format_e13(6.02e123), " 6.02000E+123");
    }

    #[test]
    fn empty_comments_emit_blank_lines() {
        let mut d = parse_cube(TINY.as_bytes()).unwrap();
        d.comments = [String::new(), String::new()];
        let text = String::from_utf8(write_cube(&d)).unwrap();
        assert!(text.starts_with("\n\n"));
        let again = parse_cube(text.as_bytes()).unwrap();
        assert_eq!(again.comments, [String::new(), String::new()]);
    }

    #[test]
    fn errors() {
        let truncated = TINY.replace("  6.0 7.0\n", "  6.0\n");
        assert!(matches!(
            parse_cube(truncated.as_bytes()),
            Err(Error::CubeParse { .. })
        ));
        let junk = TINY.replace("6.0 7.0", "6.0 x7");
        let e = parse_cube(junk.as_bytes()).unwrap_err();
        assert!(e.to_string().contains("x7"), "{e}");
        let orbital = TINY.replace("    1    0.000000", "   -1    0.000000");
        let e = parse_cube(orbital.as_bytes()).unwrap_err();
        assert!(e.to_string().contains("not supported"), "{e}");
        let extra = TINY.replace("6.0 7.0", "6.0 7.0 8.0");
        assert!(parse_cube(extra.as_bytes()).is_err());
    }

    #[test]
    fn load_checks_grids_and_atoms() {
        let d = parse_cube(TINY.as_bytes()).unwrap();
        let (f, m) = load_bivariate(&d, &d, &[]).unwrap();
        assert_eq!(f.first().values(), f.second().values());
        assert_eq!(m.subgroup_names(), vec!["REST"]);

        let shifted = parse_cube(
            TINY.replace("    1    0.000000    0.000000", "    1    0.100000    0.000000")
                .as_bytes(),
        )
        .unwrap();
        let e = load_bivariate(&d, &shifted, &[]).unwrap_err();
        assert!(e.to_string().starts_with("grid mismatch"), "{e}");

        let other_atom = parse_cube(TINY.replace("    6    0.000000", "    7    0.000000").as_bytes())
            .unwrap();
        assert!(matches!(
            load_bivariate(&d, &other_atom, &[]),
            Err(Error::AtomMismatch(_))
        ));
        assert!(load_bivariate(&d, &d, &[SubgroupSpec::new("A", vec![3])]).is_err());
    }

    #[test]
    fn subgroup_json() {
        let s = parse_subgroups(r#"[{"name":"Th","atoms":[0,1]},{"name":"Qu","atoms":[2]}]"#)
            .unwrap();
        assert_eq!(s[1], SubgroupSpec::new("Qu", vec![2]));
        assert!(parse_subgroups(r#"[{"name":"Th"}]"#).is_err());
    }
}
