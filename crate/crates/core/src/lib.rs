//! Numerical laboratory for bilinear spherical averages and maximal
//! functions, dyadic Calderón–Zygmund machinery and sparse bounds.

pub mod error;
pub mod fields;
pub mod averaging;
pub mod fit;
pub mod maximal;
pub mod dyadic;
pub mod sparse;
pub mod spectral;
pub mod region;
pub mod experiments;

pub use error::{LabError, Result};
pub use fields::{
    lp_norm, make_indicator, pairing, shift, Field, FnField, GridFunction, GridSpec, Periodic,
    Point, RegionSpec,
};
pub use fit::{fit_power_law, ScalingFit};
pub use region::{
    holder_conjugate, in_region, m_bound, necessity_check, Exponent, ExponentTriple, Recip,
};
pub use dyadic::{cube_average, three_lattice_cover, CubeSet, DyadicCube, Lattice};
pub use sparse::{
    build_sparse_family, cz_decompose, domination_ratio, sparse_form, verify_sparsity,
    CZDecomposition, SparseFamily, SparsityReport,
};
pub use spectral::{bump_psi, lp_project, PeriodicField};
pub use experiments::{
    make_extremizer, sharpness_run, ExtremizerConstants, ExtremizerKind, SharpnessConfig,
    SharpnessResult,
};
