//! Tetrahedral quadrature.

/// Symmetric 4-point rule, exact for polynomials of total degree ≤ 2.
/// Barycentric coordinates `(a, b, b, b)` and permutations, equal weights.
pub const TET4_A: f64 = 0.585_410_196_624_968_5; // (5 + 3√5) / 20
pub const TET4_B: f64 = 0.138_196_601_125_010_5; // (5 − √5) / 20

pub const TET4_POINTS: [[f64; 4]; 4] = [
    [TET4_A, TET4_B, TET4_B, TET4_B],
    [TET4_B, TET4_A, TET4_B, TET4_B],
    [TET4_B, TET4_B, TET4_A, TET4_B],
    [TET4_B, TET4_B, TET4_B, TET4_A],
];

/// Integrates `g(f(x))` over a tetrahedron of the given volume, where `f` is
/// the affine interpolant of the range-space vertex values.
#[inline]
pub fn integrate_tet(vertex_values: &[[f64; 2]; 4], volume: f64, g: impl Fn([f64; 2]) -> f64) -> f64 {
    let mut acc = 0.0;
    for bary in &TET4_POINTS {
        let mut p = [0.0; 2];
        for (w, v) in bary.iter().zip(vertex_values) {
            p[0] += w * v[0];
            p[1] += w * v[1];
        }
        acc += g(p);
    }
    acc * 0.25 * volume
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
