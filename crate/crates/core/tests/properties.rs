use csplens::csp::{compute_csp, RangeWindow};
use csplens::lens::{apply_lens, LensKind, LensMask};
use csplens::synthetic::{box_grid, Aabb};
use csplens::tet::Tetrahedralization;
use csplens::{BivariateField, RangePoint, ScalarGrid};
use proptest::prelude::*;

fn field(dims: [usize; 3], a: &[f64], b: &[f64]) -> BivariateField {
    let g = box_grid(dims, Aabb::cube(0.0, 2.0)).unwrap();
    BivariateField::new(
        ScalarGrid::new(g.clone(), a.to_vec()).unwrap(),
        ScalarGrid::new(g, b.to_vec()).unwrap(),
    )
    .unwrap()
}

fn values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mass_is_conserved(a in values(27), b in values(27), bins in 2usize..60) {
        let f = field([3, 3, 3], &a, &b);
        let tets = Tetrahedralization::new(f.grid());
        let w = RangeWindow::auto(&f, &tets, None, [bins, bins + 3]).unwrap();
        let h = compute_csp(&f, &tets, &w, None);
        prop_assert!(!h.clamped);
        prop_assert!((h.total_mass() - 8.0).abs() < 1e-9 * 8.0);
        prop_assert!(h.mass.iter().all(|&m| m >= 0.0));
    }

    #[test]
    fn clamping_keeps_mass(a in values(8), b in values(8)) {
        let f = field([2, 2, 2], &a, &b);
        let tets = Tetrahedralization::new(f.grid());
        let w = RangeWindow::new([-0.3, 0.3], [-0.2, 0.4], [7, 5]).unwrap();
        let h = compute_csp(&f, &tets, &w, None);
        prop_assert!((h.total_mass() - 8.0).abs() < 1e-9 * 8.0);
    }

    #[test]
    fn refinement_is_consistent(a in values(27), b in values(27)) {
        // a coarse histogram equals the fine one merged in 3x3 blocks
        let f = field([3, 3, 3], &a, &b);
        let tets = Tetrahedralization::new(f.grid());
        let fine = RangeWindow::auto(&f, &tets, None, [24, 24]).unwrap();
        let coarse = fine.with_bins([8, 8]).unwrap();
        let merged = compute_csp(&f, &tets, &fine, None).rebin(3).unwrap();
        let direct = compute_csp(&f, &tets, &coarse, None);
        for (x, y) in merged.mass.iter().zip(&direct.mass) {
            prop_assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn lens_is_linear(a in values(8), b in values(8), alpha in -3.0f64..3.0) {
        let f1 = field([2, 2, 2], &a, &b);
        let f2 = field([2, 2, 2], &b, &a);
        let tets = Tetrahedralization::new(f1.grid());
        let w = RangeWindow::new([-1.0, 1.0], [-1.0, 1.0], [16, 16]).unwrap();
        let h1 = compute_csp(&f1, &tets, &w, None);
        let h2 = compute_csp(&f2, &tets, &w, None);
        let m = LensMask::new(LensKind::ChargeTransfer, 0.05).unwrap();
        let lhs = apply_lens(&h1.scaled(alpha).add(&h2).unwrap(), &m);
        let rhs = apply_lens(&h1, &m).scaled(alpha).add(&apply_lens(&h2, &m)).unwrap();
        for (x, y) in lhs.mass.iter().zip(&rhs.mass) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn donor_minus_acceptor_pointwise(s1 in -5.0f64..5.0, s2 in -5.0f64..5.0) {
        let d = LensMask::new(LensKind::Donor, 0.0).unwrap();
        let a = LensMask::new(LensKind::Acceptor, 0.0).unwrap();
        let p = RangePoint::new(s1, s2);
        prop_assert_eq!(d.eval(p) - a.eval(p), s1 * s1 - s2 * s2);
        for k in LensKind::NAMED {
            let m = LensMask::new(k, 0.3).unwrap();
            let v = m.eval(p);
            prop_assert!(v.is_finite() && v >= 0.0);
        }
    }
}
