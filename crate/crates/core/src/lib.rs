//! Signal-class feature extraction: synthetic waveform generators, a
//! second-order scattering transform, sparse multinomial logistic
//! regression, and zeroth-order extraction of class-revealing signals.

pub mod error;
pub mod mlr;
pub mod scattering;
pub mod synthgen;
pub mod zoopt;

pub use error::{CoreError, Result};
pub use mlr::{
    fit, fit_with_path, kkt_residual, FitConfig, KktResidual, MlrModel, ModelFile, PathPoint,
};
pub use scattering::{
    build_filter_bank, circ_conv_subsample, load_features_csv, save_features_csv, scatter2,
    scatter_batch, FilterBank, ScatteringConfig, ScatteringVector, Wavelet,
};
pub use synthgen::{
    gen_cbf, gen_triangle, load_csv, save_csv, CbfClass, GeneratorId, LabeledDataset, Provenance,
    Signal,
};
pub use zoopt::{
    dct_forward, dct_inverse, de_minimize, extract_all_classes, grad_norm, objective_eval,
    pink_noise, template_classify, DeConfig, InitKind, ObjectiveSpec, ZoRun,
};
