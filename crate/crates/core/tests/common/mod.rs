#![allow(dead_code)]

use std::path::PathBuf;

use noarb::modelfile::{load_model_file, LoadedModel};
use noarb::scale::DiffusionModel;
use noarb::{parse, Interval};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn load(name: &str) -> LoadedModel {
    load_model_file(&fixture(name)).unwrap()
}

/// Every fixture that passes the existence gate.
pub const VALID: [&str; 6] = [
    "gbm.model",
    "linear_vol.model",
    "quadratic_vol.model",
    "squared_bessel.model",
    "bessel3.model",
    "mixed_vol.model",
];

pub fn half_line(mu: &str, sigma: &str, x0: f64) -> DiffusionModel {
    DiffusionModel::new(
        parse(mu).unwrap(),
        parse(sigma).unwrap(),
        x0,
        Interval::positive_half_line(),
    )
    .unwrap()
}
