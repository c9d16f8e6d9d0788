//! Power-law relation between model size and vocabulary size,
//! `log₂ Nv = a + b·log₂ Nnv`, fitted by least squares in log-log space.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ScalingError {
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("point ({params}, {vocab_size}) is not strictly positive")]
    NonPositive { params: f64, vocab_size: f64 },
    #[error("all points share the same parameter count")]
    Degenerate,
    #[error("parameter count must be positive, got {0}")]
    InvalidParams(f64),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed model file: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub params: f64,
    pub vocab_size: f64,
    /// `(predicted - observed) / observed` under the fitted model.
    #[serde(default)]
    pub relative_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabScalingModel {
    pub a: f64,
    pub b: f64,
    pub anchors: Vec<Anchor>,
}

/// Published optimal vocabulary sizes for 3B, 7B and 15B parameter models.
pub const REFERENCE_ANCHORS: [(f64, f64); 3] = [(3e9, 39367.0), (7e9, 62280.0), (15e9, 93987.0)];

pub fn fit_power_law(points: &[(f64, f64)]) -> Result<VocabScalingModel, ScalingError> {
    if points.len() < 2 {
        return Err(ScalingError::TooFewPoints(points.len()));
    }
    for &(params, vocab_size) in points {
        if !(params > 0.0 && vocab_size > 0.0 && params.is_finite() && vocab_size.is_finite()) {
            return Err(ScalingError::NonPositive { params, vocab_size });
        }
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.log2()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.log2()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= f64::EPSILON * mx.abs().max(1.0) {
        return Err(ScalingError::Degenerate);
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let anchors = points
        .iter()
        .map(|&(params, vocab_size)| Anchor {
            params,
            vocab_size,
            relative_residual: (2f64.powf(a + b * params.log2()) - vocab_size) / vocab_size,
        })
        .collect();
    Ok(VocabScalingModel { a, b, anchors })
}

impl VocabScalingModel {
    /// Model fitted to [`REFERENCE_ANCHORS`].
    pub fn bundled() -> Self {
        fit_power_law(&REFERENCE_ANCHORS).expect("reference anchors are valid")
    }

    pub fn predict(&self, n_params: f64) -> f64 {
        2f64.powf(self.a + self.b * n_params.log2())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("models serialize");
        s.push('\n');
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScalingError> {
        let path = path.as_ref();
        let json = fs::read_to_string(path).map_err(|source| ScalingError::Io { path: path.to_owned(), source })?;
        Ok(serde_json::from_str(&json)?)
    }
}

/// Rounded vocabulary size predicted for a model with `n_params` parameters.
pub fn suggest_vocab_size(model: &VocabScalingModel, n_params: f64) -> Result<u64, ScalingError> {
    if !(n_params > 0.0 && n_params.is_finite()) {
        return Err(ScalingError::InvalidParams(n_params));
    }
    Ok(model.predict(n_params).round() as u64)
}
