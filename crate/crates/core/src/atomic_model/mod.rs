//! Atomic constants and the hyperfine-resolved complex two-photon lineshape.

mod constants;
mod faddeeva;
mod hilbert;
mod lineshape;
mod manifold;
mod spectrum;

pub use constants::{AtomicConstants, BOLTZMANN, HBAR, RB_5P32_LINEWIDTH_HZ, SPEED_OF_LIGHT};
pub use faddeeva::faddeeva;
pub use hilbert::hilbert_transform;
pub use lineshape::{complex_voigt, LineshapeParams, DEFAULT_GAMMA_L, DEFAULT_SIGMA_G};
pub use manifold::{HyperfineComponent, HyperfineManifold, ManifoldTable, TableEntry, RB85_5D52_TABLE};
pub use spectrum::{
    check_grid, linear_grid, manifold_susceptibility, spectrum_grid, ComplexSpectrum, Extremum, ManifoldShape,
};
