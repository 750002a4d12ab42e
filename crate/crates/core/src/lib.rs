//! Visual analysis of bivariate scalar fields on volumetric grids.
//!
//! The crate computes continuous scatterplots (CSPs) of a field pair by pushing
//! tetrahedral volume into a range-space histogram, restricts them to domain
//! segments obtained from a power diagram over atoms (peeling), weights them
//! with range-space masks (lenses), turns mask isocontours into control
//! polygons, extracts fibers and fiber surfaces, and quantifies donor strength.
//!
//! ```
//! use csplens::{synthetic, tet::Tetrahedralization, csp};
//!
//! let field = synthetic::make_synthetic_xy([9, 9, 9], synthetic::Aabb::unit()).unwrap();
//! let tets = Tetrahedralization::new(field.grid());
//! let window = csp::RangeWindow::new([0.0, 1.0], [0.0, 1.0], [50, 50]).unwrap();
//! let hist = csp::compute_csp(&field, &tets, &window, None);
//! assert!((hist.total_mass() - 1.0).abs() < 1e-9);
//! ```

pub mod csp;
pub mod cube;
pub mod elements;
mod error;
pub mod fiber;
pub mod geom;
pub mod lens;
pub mod model;
pub mod quadrature;
pub mod quant;
pub mod segmentation;
pub mod synthetic;
pub mod tet;

pub use error::{Error, Result};
pub use model::{
    Atom, BivariateField, Molecule, RangePoint, RangePolyline, ScalarGrid, StructuredGrid,
    Subgroup, SubgroupSpec,
};
