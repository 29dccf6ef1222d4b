//! Gradient-boosted regression trees with squared and pinball losses, the
//! stage-conditioned predictor, grid search and evaluation metrics.

mod ensemble;
mod metrics;
mod staged;
mod tree;

pub use ensemble::{
    fit, grid_search, BoostedEnsemble, GridSearchResult, HyperparamSpace, Hyperparams,
};
pub use metrics::{mae, rmse, rmsle, MetricsError};
pub use staged::{fit_staged, fit_staged_merging, MuMode, StagedPredictor};
pub use tree::{Node, SplitTest, Tree};

use serde::{Deserialize, Serialize};

use crate::domain::{FeatureSchema, FeatureVector};

/// Training loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Loss {
    Squared,
    /// Pinball loss for the given quantile level in (0, 1).
    Quantile(f64),
}

impl Loss {
    /// Loss evaluated at one sample.
    pub fn eval(self, y: f64, f: f64) -> f64 {
        match self {
            Loss::Squared => {
                let d = y - f;
                0.5 * d * d
            }
            Loss::Quantile(beta) => {
                if y >= f {
                    beta * (y - f)
                } else {
                    (1.0 - beta) * (f - y)
                }
            }
        }
    }

    /// Negative gradient of the loss with respect to the prediction.
    /// For pinball loss this is `beta` above the prediction and `beta - 1`
    /// below it.
    pub fn pseudo_residual(self, y: f64, f: f64) -> f64 {
        match self {
            Loss::Squared => y - f,
            Loss::Quantile(beta) => {
                if y > f {
                    beta
                } else if y < f {
                    beta - 1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoostError {
    #[error("training data must have at least 2 rows, got {0}")]
    EmptyData(usize),
    #[error("non-finite label at row {0}")]
    NonFiniteLabel(usize),
    #[error("quantile level must lie in (0, 1), got {0}")]
    InvalidQuantile(f64),
    #[error("row has {got} features, model expects {want}")]
    SchemaMismatch { got: usize, want: usize },
    #[error("stage {0:?} has fewer than 2 training rows")]
    StageUnderpopulated(crate::ingest::Stage),
    #[error("model file schema does not match: {0}")]
    SchemaHashMismatch(String),
    #[error("model io: {0}")]
    Io(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Column-major training set.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub schema: FeatureSchema,
    /// `columns[feature][row]`.
    pub columns: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
}

impl Dataset {
    pub fn from_rows(
        schema: FeatureSchema,
        rows: &[FeatureVector],
        labels: Vec<f64>,
    ) -> Result<Self, BoostError> {
        assert_eq!(rows.len(), labels.len());
        let n_features = schema.n_columns();
        let mut columns = vec![Vec::with_capacity(rows.len()); n_features];
        for row in rows {
            if row.len() != n_features {
                return Err(BoostError::SchemaMismatch { got: row.len(), want: n_features });
            }
            for (f, col) in columns.iter_mut().enumerate() {
                col.push(row.get(f));
            }
        }
        for (i, &y) in labels.iter().enumerate() {
            if !y.is_finite() {
                return Err(BoostError::NonFiniteLabel(i));
            }
        }
        Ok(Dataset { schema, columns, labels })
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// Subset of rows, preserving order.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&r| c[r]).collect())
                .collect(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
        }
    }
}

/// Empirical quantile with linear interpolation; `sorted` must be ascending.
pub(crate) fn quantile(sorted: &[f64], beta: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    if sorted.len() == 1 {
        return sorted[0];
    }
    let pos = beta * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = pos - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}
