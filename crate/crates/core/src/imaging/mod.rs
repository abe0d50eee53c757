//! Forward model of polarization-contrast imaging and the image analysis
//! chain: phase imprint, CCD intensity law with drifting fringes and photon
//! shot noise, PCA background reconstruction and four-quadrant readout.

mod cloud;
mod frame;
mod fringe;
mod pca;
pub mod pipeline;
mod roi;

pub use cloud::{gaussian_blur, phase_scale, CloudModel};
pub use frame::{read_raster, write_raster, ImageFrame};
pub use fringe::{expected_counts, render_frame, FringeMode, FringeModel};
pub use pca::{disk_mask, pca_fit, pca_reconstruct, MaskedBasis, PcaBasis};
pub use roi::{quadrant_signal, QuadrantSignal, RoiSpec, Side};
