use csplens::csp::{compute_csp, peel_csp, RangeWindow};
use csplens::cube::{self, CubeDataset};
use csplens::fiber::{extract_fiber, extract_fiber_surface, export_mesh, import_json, MeshFormat};
use csplens::lens::{apply_lens, contour_mask, quantify_lens, LensKind, LensMask};
use csplens::quant::{delta_exact, quantify, Weight};
use csplens::segmentation::{segment, Segmentation};
use csplens::synthetic::{
    make_synthetic_gaussians, make_synthetic_xy, nto_pair, Aabb, GaussianBump, NtoPairConfig,
};
use csplens::tet::Tetrahedralization;
use csplens::{Atom, BivariateField, Molecule, RangePoint, RangePolyline, SubgroupSpec};

fn three_atoms() -> Molecule {
    Molecule::new(
        vec![
            Atom::new(6, [-1.0, 0.0, 0.0], 0.7).unwrap(),
            Atom::new(7, [0.6, 0.8, 0.0], 0.7).unwrap(),
            Atom::new(8, [0.6, -0.8, 0.3], 0.6).unwrap(),
        ],
        vec![
            SubgroupSpec::new("A", vec![0]),
            SubgroupSpec::new("B", vec![1]),
            SubgroupSpec::new("C", vec![2]),
        ],
    )
    .unwrap()
}

fn gaussians(n: usize) -> BivariateField {
    make_synthetic_gaussians(
        [n, n, n],
        Aabb::cube(-2.0, 2.0),
        &[GaussianBump::new([-0.6, 0.2, 0.0], 1.0, 0.7)],
        &[GaussianBump::new([0.5, -0.4, 0.1], 1.0, 0.6)],
    )
    .unwrap()
}

fn setup(n: usize) -> (BivariateField, Tetrahedralization, Segmentation) {
    let f = gaussians(n);
    let t = Tetrahedralization::new(f.grid());
    let s = segment(f.grid(), &three_atoms(), &t).unwrap();
    (f, t, s)
}

#[test]
fn peeled_histograms_sum_to_whole() {
    let (f, t, s) = setup(13);
    let w = RangeWindow::auto(&f, &t, None, [64, 64]).unwrap();
    let whole = compute_csp(&f, &t, &w, None);
    let mut sum = vec![0.0; w.bin_count()];
    for name in ["A", "B", "C"] {
        let p = peel_csp(&f, &t, &s, name, &w).unwrap();
        sum.iter_mut().zip(&p.mass).for_each(|(a, b)| *a += b);
    }
    for (a, b) in sum.iter().zip(&whole.mass) {
        assert!((a - b).abs() <= 1e-9);
    }
    let d = delta_exact(&f, &t, &s, &Weight::DonorStrength).unwrap();
    assert!((d.subgroups.iter().sum::<f64>() - d.whole).abs() <= 1e-9);
}

#[test]
fn lens_commutes_with_peel() {
    let (f, t, s) = setup(9);
    let w = RangeWindow::auto(&f, &t, None, [40, 40]).unwrap();
    let m = LensMask::new(LensKind::Donor, 0.02).unwrap();
    let a = apply_lens(&peel_csp(&f, &t, &s, "B", &w).unwrap(), &m);
    let cells = s.cells_named("B").unwrap().unwrap();
    let b = apply_lens(&compute_csp(&f, &t, &w, Some(&cells)), &m);
    for (x, y) in a.mass.iter().zip(&b.mass) {
        assert!((x - y).abs() <= 1e-12);
    }
}

#[test]
fn lens_identities() {
    let (f, t, _) = setup(11);
    let w = RangeWindow::auto(&f, &t, None, [50, 50]).unwrap();
    let h = compute_csp(&f, &t, &w, None);
    let r0 = 0.02 * w.diagonal();
    let ct = apply_lens(&h, &LensMask::new(LensKind::ChargeTransfer, r0).unwrap());
    let d = apply_lens(&h, &LensMask::new(LensKind::Donor, r0).unwrap());
    let a = apply_lens(&h, &LensMask::new(LensKind::Acceptor, r0).unwrap());
    for i in 0..ct.mass.len() {
        assert!((d.mass[i] + a.mass[i] - ct.mass[i]).abs() <= 1e-12);
    }
    assert_eq!(apply_lens(&h, &LensMask::identity()).mass, h.mass);
    assert!((quantify_lens(&h, &LensMask::identity()) - 64.0).abs() < 1e-6);
}

#[test]
fn origin_mass_vanishes_under_exclusion() {
    let w = RangeWindow::new([-1.0, 1.0], [-1.0, 1.0], [10, 10]).unwrap();
    let mut h = csplens::csp::CspHistogram::zeros(w);
    // the four bins touching the origin
    for (ix, iy) in [(4, 4), (5, 4), (4, 5), (5, 5)] {
        h.mass[w.flat(ix, iy)] = 1.0;
    }
    for k in LensKind::NAMED {
        let m = LensMask::new(k, 0.2).unwrap();
        assert_eq!(quantify_lens(&h, &m), 0.0, "{k}");
    }
}

#[test]
fn quantify_is_additive_and_deterministic() {
    let (f, t, s) = setup(11);
    let a = quantify(&f, &t, &s, &Weight::DonorStrength, [200, 200]).unwrap();
    let b = quantify(&f, &t, &s, &Weight::DonorStrength, [200, 200]).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    let sum: f64 = a.rows[..3].iter().map(|r| r.delta_exact.unwrap()).sum();
    assert!((sum - a.whole().delta_exact.unwrap()).abs() < 1e-9);
    for r in &a.rows {
        assert!(r.rounding_error.abs() <= r.rounding_bound.unwrap());
    }
}

#[test]
fn coarser_histograms_err_more() {
    let ds = nto_pair(&NtoPairConfig {
        dims: [17, 17, 17],
        ..NtoPairConfig::default()
    })
    .unwrap();
    let t = Tetrahedralization::new(ds.field.grid());
    let s = segment(ds.field.grid(), &ds.molecule, &t).unwrap();
    let fine = quantify(&ds.field, &t, &s, &Weight::DonorStrength, [1000, 1000]).unwrap();
    let mut prev = f64::INFINITY;
    for res in [10, 40, 160] {
        let r = quantify(&ds.field, &t, &s, &Weight::DonorStrength, [res, res]).unwrap();
        let gap = (r.rows[0].delta_hist - fine.rows[0].delta_hist).abs();
        assert!(gap < prev, "{res}: {gap} vs {prev}");
        prev = gap;
    }
}

#[test]
fn identity_histogram_delta_tracks_subgroup_volume() {
    let (f, t, s) = setup(17);
    let r = quantify(&f, &t, &s, &Weight::Identity, [100, 100]).unwrap();
    let counts = s.cell_counts();
    let h = 4.0 / 16.0;
    for (i, row) in r.rows[..3].iter().enumerate() {
        let vol = counts[i] as f64 * t.tet_volume();
        assert!((row.delta_exact.unwrap() - vol).abs() < 1e-12);
        // within a one-cell boundary layer of a region with surface area ≲ 4²·3
        assert!((row.delta_hist - vol).abs() < 48.0 * h, "{} vs {vol}", row.delta_hist);
    }
}

#[test]
fn fiber_lies_inside_closed_fiber_surface() {
    let f = make_synthetic_xy([17, 17, 17], Aabb::cube(-1.0, 1.0)).unwrap();
    let t = Tetrahedralization::new(f.grid());
    let s = RangePoint::new(0.1, -0.3);
    let tri = RangePolyline::new(
        vec![[-0.3, -0.7].into(), [0.6, -0.5].into(), [0.0, 0.3].into()],
        true,
    )
    .unwrap();
    let fiber = extract_fiber(&f, &t, s, None);
    assert!(!fiber.is_empty());
    for seg in &fiber.segments {
        for p in seg {
            let v = f.sample(*p).unwrap();
            assert!((v.s1 - s.s1).abs() <= 1e-9 && (v.s2 - s.s2).abs() <= 1e-9);
            assert!(tri.contains(v));
        }
    }
    let mesh = extract_fiber_surface(&f, &t, &tri, None);
    assert!(!mesh.is_empty());
    let mut hit = [false; 3];
    for (&sid, rp) in mesh.segment_ids.iter().zip(&mesh.range_points) {
        assert!(tri.distance_to(*rp) <= 1e-9);
        hit[sid as usize] = true;
    }
    assert_eq!(hit, [true; 3]);
    let back = import_json(&export_mesh(&mesh, MeshFormat::Json)).unwrap();
    assert_eq!(back, mesh);
}

#[test]
fn fiber_of_identical_fields_off_diagonal_is_empty() {
    let g = make_synthetic_xy([5, 5, 5], Aabb::unit()).unwrap();
    let same = BivariateField::new(g.first().clone(), g.first().clone()).unwrap();
    let t = Tetrahedralization::new(same.grid());
    assert!(extract_fiber(&same, &t, RangePoint::new(0.3, 0.6), None).is_empty());
}

#[test]
fn fiber_surface_area_converges() {
    let pl = RangePolyline::new(vec![[0.2, 0.2].into(), [0.2, 0.8].into()], false).unwrap();
    for n in [9, 17, 33] {
        let f = make_synthetic_xy([n, n, n], Aabb::unit()).unwrap();
        let t = Tetrahedralization::new(f.grid());
        let m = extract_fiber_surface(&f, &t, &pl, None);
        assert!((m.area() - 0.6).abs() < 1e-6, "{n}: {}", m.area());
    }
}

#[test]
fn contour_feeds_fiber_surface() {
    let (f, t, s) = setup(9);
    let w = RangeWindow::auto(&f, &t, None, [200, 200]).unwrap();
    let m = LensMask::new(LensKind::Donor, 0.0).unwrap();
    let cps = contour_mask(&m, &w, 0.05);
    assert!(!cps.is_empty());
    let cells = s.cells_named("A").unwrap().unwrap();
    for cp in &cps {
        for p in cp.polyline.points() {
            assert!((m.eval(*p) - 0.05).abs() < 1e-3);
        }
        let full = extract_fiber_surface(&f, &t, &cp.polyline, None);
        let part = extract_fiber_surface(&f, &t, &cp.polyline, Some(&cells));
        let expected = full
            .triangle_cells
            .iter()
            .filter(|&&c| s.cell_labels()[c as usize] == 0)
            .count();
        assert_eq!(part.triangles.len(), expected);
    }
}

#[test]
fn cube_files_load_into_a_bivariate_field() {
    let ds = nto_pair(&NtoPairConfig {
        dims: [9, 9, 9],
        ..NtoPairConfig::default()
    })
    .unwrap();
    let dir = std::env::temp_dir().join(format!("csplens-pipeline-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let write = |name: &str, d: &CubeDataset| {
        let p = dir.join(name);
        std::fs::write(&p, cube::write_cube(d)).unwrap();
        p
    };
    let hole = write("hole.cube", &cube::dataset_for(ds.field.first(), &ds.molecule, ["hole", "synthetic"]));
    let part = write("particle.cube", &cube::dataset_for(ds.field.second(), &ds.molecule, ["particle", "synthetic"]));
    let groups = dir.join("groups.json");
    std::fs::write(&groups, r#"[{"name":"A","atoms":[0]},{"name":"B","atoms":[1]}]"#).unwrap();
    let (field, mol) = cube::load_bivariate_files(&hole, &part, Some(groups.as_path())).unwrap();
    assert_eq!(mol.subgroup_names(), vec!["A", "B"]);
    for v in 0..field.grid().vertex_count() {
        let (a, b) = (field.at(v), ds.field.at(v));
        assert!((a.s1 - b.s1).abs() <= 1e-5 * b.s1.abs().max(1e-30));
        assert!((a.s2 - b.s2).abs() <= 1e-5 * b.s2.abs().max(1e-30));
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn cell_assignment_matters_less_on_finer_grids() {
    // barycenter-labeled cell volumes against vertex-labeled volume shares
    let mut prev = f64::INFINITY;
    for n in [9, 17, 33] {
        let (f, t, s) = setup(n);
        let r = quantify(&f, &t, &s, &Weight::Identity, [50, 50]).unwrap();
        let gap = r.rows[..3]
            .iter()
            .map(|row| (row.delta_exact.unwrap() - row.delta_vertex).abs())
            .fold(0.0, f64::max);
        assert!(gap < prev, "{n}: {gap} vs {prev}");
        prev = gap;
    }
    assert!(prev < 0.1 * 64.0 / 3.0);
}
