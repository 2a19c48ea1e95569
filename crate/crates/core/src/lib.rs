pub mod cli;
pub mod correlation;
pub mod detection;
pub mod error;
pub mod focusing;
pub mod image;
pub mod io;
pub mod segmentation;
pub mod spectral;
pub mod whitening;
pub mod synth;
