//! Additive tree ensemble: fitting, prediction, grid search, model files.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{ColumnKind, FeatureSchema, FeatureVector, FEATURE_COLUMNS};

use super::metrics::rmsle;
use super::tree::{grow, Tree, TreeData, TreeParams};
use super::{quantile, BoostError, Dataset, Loss};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub learn_rate: f64,
    pub max_depth: usize,
    /// Row subsample rate per round, without replacement.
    pub sample_rate: f64,
    /// Feature subsample rate per round, without replacement.
    pub col_sample_rate: f64,
    pub n_rounds: usize,
    pub min_leaf: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            learn_rate: 0.1,
            max_depth: 7,
            sample_rate: 1.0,
            col_sample_rate: 1.0,
            n_rounds: 200,
            min_leaf: 5,
        }
    }
}

/// Grid-search space: the cross product of the listed values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperparamSpace {
    pub learn_rates: Vec<f64>,
    pub max_depths: Vec<usize>,
    pub sample_rates: Vec<f64>,
    pub col_sample_rates: Vec<f64>,
    pub n_rounds: usize,
    pub min_leaf: usize,
}

impl HyperparamSpace {
    /// The full published search space: 2 x 6 x 2 x 4 = 96 candidates.
    pub fn full(n_rounds: usize, min_leaf: usize) -> Self {
        HyperparamSpace {
            learn_rates: vec![0.05, 0.1],
            max_depths: vec![7, 8, 9, 10, 11, 12],
            sample_rates: vec![0.8, 1.0],
            col_sample_rates: vec![0.5, 0.6, 0.7, 0.8],
            n_rounds,
            min_leaf,
        }
    }

    /// Desk-scale 8-point subset of the full space.
    pub fn reduced(n_rounds: usize, min_leaf: usize) -> Self {
        HyperparamSpace {
            learn_rates: vec![0.05, 0.1],
            max_depths: vec![7, 9],
            sample_rates: vec![1.0],
            col_sample_rates: vec![0.7, 0.8],
            n_rounds,
            min_leaf,
        }
    }

    pub fn single(hp: &Hyperparams) -> Self {
        HyperparamSpace {
            learn_rates: vec![hp.learn_rate],
            max_depths: vec![hp.max_depth],
            sample_rates: vec![hp.sample_rate],
            col_sample_rates: vec![hp.col_sample_rate],
            n_rounds: hp.n_rounds,
            min_leaf: hp.min_leaf,
        }
    }

    pub fn candidates(&self) -> Vec<Hyperparams> {
        let mut out = Vec::new();
        for &learn_rate in &self.learn_rates {
            for &max_depth in &self.max_depths {
                for &sample_rate in &self.sample_rates {
                    for &col_sample_rate in &self.col_sample_rates {
                        out.push(Hyperparams {
                            learn_rate,
                            max_depth,
                            sample_rate,
                            col_sample_rate,
                            n_rounds: self.n_rounds,
                            min_leaf: self.min_leaf,
                        });
                    }
                }
            }
        }
        out
    }
}

const MODEL_FORMAT_VERSION: u32 = 1;

/// Trained additive ensemble for one loss.
///
/// Prediction is `base + learn_rate * sum(tree outputs)`; per-tree
/// coefficients are folded into the leaf values at fit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedEnsemble {
    pub schema: FeatureSchema,
    pub loss: Loss,
    pub hyperparams: Hyperparams,
    pub base: f64,
    pub trees: Vec<Tree>,
    pub seed: u64,
    /// Accumulated split gain per feature, for importance reporting.
    pub split_gains: Vec<f64>,
    /// Mean training loss on the full set after each round.
    pub train_loss: Vec<f64>,
}

impl BoostedEnsemble {
    pub fn predict_values(&self, row: &[f64]) -> Result<f64, BoostError> {
        if row.len() != self.schema.n_columns() {
            return Err(BoostError::SchemaMismatch {
                got: row.len(),
                want: self.schema.n_columns(),
            });
        }
        let mut f = self.base;
        for tree in &self.trees {
            f += self.hyperparams.learn_rate * tree.predict(row);
        }
        Ok(f)
    }

    pub fn predict(&self, fv: &FeatureVector) -> Result<f64, BoostError> {
        self.predict_values(fv.values())
    }

    /// Normalized split-gain importance; all zeros for an empty ensemble.
    pub fn feature_importance(&self) -> Vec<(String, f64)> {
        let total: f64 = self.split_gains.iter().sum();
        self.schema
            .columns
            .iter()
            .zip(&self.split_gains)
            .map(|(name, &g)| {
                (name.clone(), if total > 0.0 { g / total } else { 0.0 })
            })
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<(), BoostError> {
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            schema_hash: schema_hash(&self.schema),
            ensemble: self.clone(),
        };
        let json = serde_json::to_string_pretty(&file).map_err(|e| BoostError::Io(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| BoostError::Io(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, BoostError> {
        let json = std::fs::read_to_string(path).map_err(|e| BoostError::Io(e.to_string()))?;
        let file: ModelFile =
            serde_json::from_str(&json).map_err(|e| BoostError::Io(e.to_string()))?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(BoostError::Io(format!(
                "unsupported model format version {}",
                file.format_version
            )));
        }
        let expected = schema_hash(&file.ensemble.schema);
        if file.schema_hash != expected {
            return Err(BoostError::SchemaHashMismatch(format!(
                "stored {:#x}, recomputed {:#x}",
                file.schema_hash, expected
            )));
        }
        Ok(file.ensemble)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    schema_hash: u64,
    ensemble: BoostedEnsemble,
}

/// FNV-1a over the column names and category dictionary.
pub fn schema_hash(schema: &FeatureSchema) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    let mut eat = |s: &str| {
        for b in s.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x100000001b3);
        }
        h ^= 0xff;
        h = h.wrapping_mul(0x100000001b3);
    };
    for c in &schema.columns {
        eat(c);
    }
    for t in &schema.ac_types {
        eat(t);
    }
    h
}

/// Fit one ensemble. Each round draws a seeded row/feature subsample, fits a
/// tree to the pseudo-residuals and refits leaf values to the loss minimizer,
/// then advances every prediction by `learn_rate` times the tree output.
pub fn fit(
    data: &Dataset,
    hp: &Hyperparams,
    loss: Loss,
    seed: u64,
) -> Result<BoostedEnsemble, BoostError> {
    let n = data.n_rows();
    if n < 2 {
        return Err(BoostError::EmptyData(n));
    }
    for (i, &y) in data.labels.iter().enumerate() {
        if !y.is_finite() {
            return Err(BoostError::NonFiniteLabel(i));
        }
    }
    if let Loss::Quantile(beta) = loss {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(BoostError::InvalidQuantile(beta));
        }
    }
    let n_features = data.schema.n_columns();
    let kinds: Vec<ColumnKind> = (0..n_features).map(|f| FEATURE_COLUMNS[f].1).collect();

    let base = match loss {
        Loss::Squared => data.labels.iter().sum::<f64>() / n as f64,
        Loss::Quantile(beta) => {
            let mut sorted = data.labels.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            quantile(&sorted, beta)
        }
    };
    let mut preds = vec![base; n];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trees = Vec::with_capacity(hp.n_rounds);
    let mut split_gains = vec![0.0; n_features];
    let mut train_loss = Vec::with_capacity(hp.n_rounds);

    let n_sample = ((hp.sample_rate * n as f64).ceil() as usize).clamp(1, n);
    let n_cols = ((hp.col_sample_rate * n_features as f64).ceil() as usize).clamp(1, n_features);

    let mut all_rows: Vec<u32> = (0..n as u32).collect();
    let mut all_features: Vec<usize> = (0..n_features).collect();

    for _ in 0..hp.n_rounds {
        let rows: Vec<u32> = if n_sample == n {
            all_rows.clone()
        } else {
            all_rows.shuffle(&mut rng);
            let mut take = all_rows[..n_sample].to_vec();
            take.sort_unstable();
            take
        };
        let features: Vec<usize> = if n_cols == n_features {
            all_features.clone()
        } else {
            all_features.shuffle(&mut rng);
            let mut take = all_features[..n_cols].to_vec();
            take.sort_unstable();
            take
        };

        let grad: Vec<f64> = (0..n)
            .map(|i| loss.pseudo_residual(data.labels[i], preds[i]))
            .collect();
        let refit: Vec<f64> = (0..n).map(|i| data.labels[i] - preds[i]).collect();
        let tree_data = TreeData {
            columns: &data.columns,
            kinds: &kinds,
            grad: &grad,
            refit: &refit,
        };
        let tree = grow(
            &tree_data,
            &rows,
            &features,
            &TreeParams { max_depth: hp.max_depth, min_leaf: hp.min_leaf, loss },
            &mut split_gains,
        );
        for (i, p) in preds.iter_mut().enumerate() {
            *p += hp.learn_rate * tree.predict(&data.row(i));
        }
        trees.push(tree);
        train_loss.push(
            (0..n).map(|i| loss.eval(data.labels[i], preds[i])).sum::<f64>() / n as f64,
        );
    }

    Ok(BoostedEnsemble {
        schema: data.schema.clone(),
        loss,
        hyperparams: hp.clone(),
        base,
        trees,
        seed,
        split_gains,
        train_loss,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: Hyperparams,
    pub cv_rmsle: f64,
    pub evaluated: usize,
}

/// Exhaustive k-fold cross validation over the space, selecting minimum mean
/// validation RMSLE. Ties go to the smaller depth, then the smaller learning
/// rate.
pub fn grid_search(
    data: &Dataset,
    space: &HyperparamSpace,
    k_folds: usize,
    loss: Loss,
    seed: u64,
) -> Result<GridSearchResult, BoostError> {
    let n = data.n_rows();
    if n < 2 {
        return Err(BoostError::EmptyData(n));
    }
    assert!(k_folds >= 2, "need at least 2 folds");

    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let folds: Vec<Vec<usize>> = (0..k_folds)
        .map(|f| indices.iter().copied().skip(f).step_by(k_folds).collect())
        .collect();

    let candidates = space.candidates();
    let mut best: Option<(Hyperparams, f64)> = None;
    for hp in &candidates {
        let mut scores = Vec::with_capacity(k_folds);
        let mut valid = true;
        for fold in &folds {
            let train_rows: Vec<usize> =
                (0..n).filter(|i| !fold.contains(i)).collect();
            let train = data.subset(&train_rows);
            let model = fit(&train, hp, loss, seed)?;
            let mut y = Vec::with_capacity(fold.len());
            let mut y_hat = Vec::with_capacity(fold.len());
            for &i in fold {
                y.push(data.labels[i]);
                y_hat.push(model.predict_values(&data.row(i))?);
            }
            match rmsle(&y, &y_hat) {
                Ok(s) => scores.push(s),
                Err(_) => {
                    valid = false;
                    break;
                }
            }
        }
        let score = if valid {
            scores.iter().sum::<f64>() / scores.len() as f64
        } else {
            f64::INFINITY
        };
        let replace = match &best {
            None => true,
            Some((b_hp, b_score)) => {
                if (score - b_score).abs() <= 1e-12 {
                    hp.max_depth < b_hp.max_depth
                        || (hp.max_depth == b_hp.max_depth && hp.learn_rate < b_hp.learn_rate)
                } else {
                    score < *b_score
                }
            }
        };
        if replace {
            best = Some((hp.clone(), score));
        }
    }
    let (best, cv_rmsle) = best.expect("non-empty space");
    Ok(GridSearchResult { best, cv_rmsle, evaluated: candidates.len() })
}
