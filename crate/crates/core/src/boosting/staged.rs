//! Stage-conditioned quantile predictor.
//!
//! Training rows are partitioned by the looping-event stage and each stage
//! gets its own (lower quantile, center, upper quantile) ensemble triple.
//! Prediction routes a feature vector by the same stage rule and summarizes
//! the three quantiles as a Gaussian `(mu, sigma)` via the quantile-matching
//! rule.

use serde::{Deserialize, Serialize};

use crate::domain::{EtaDistribution, FeatureSchema, FeatureVector};
use crate::ingest::{assign_stage, Stage};
use crate::normal;

use super::ensemble::{fit, BoostedEnsemble, Hyperparams};
use super::{BoostError, Dataset, Loss};

/// How the distribution center is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MuMode {
    /// `mu` is the median-quantile ensemble prediction.
    #[default]
    Median,
    /// `mu` comes from a separately trained squared-loss ensemble, clamped
    /// into the predicted quantile range.
    SquaredMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTriple {
    pub lower: BoostedEnsemble,
    pub center: BoostedEnsemble,
    pub upper: BoostedEnsemble,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagedPredictor {
    pub schema: FeatureSchema,
    pub beta_lo: f64,
    pub beta_hi: f64,
    pub mu_mode: MuMode,
    pub triples: Vec<StageTriple>,
    /// Triple index per stage (I, II, III). Merged stages share a triple.
    pub route: [usize; 3],
    /// `(underpopulated stage, absorbed into)` decisions made at fit time.
    pub merged: Vec<(Stage, Stage)>,
}

/// Strict variant: every stage must have at least 2 rows.
pub fn fit_staged(
    data: &Dataset,
    hp: &[Hyperparams; 3],
    beta_lo: f64,
    beta_hi: f64,
    mu_mode: MuMode,
    seed: u64,
) -> Result<StagedPredictor, BoostError> {
    let groups = stage_rows(data)?;
    for (s, rows) in Stage::ALL.iter().zip(&groups) {
        if rows.len() < 2 {
            return Err(BoostError::StageUnderpopulated(*s));
        }
    }
    fit_groups(data, groups, [0, 1, 2], Vec::new(), hp, beta_lo, beta_hi, mu_mode, seed)
}

/// Merging variant: an underpopulated stage is absorbed into a neighbor and
/// the decision is recorded in the output.
pub fn fit_staged_merging(
    data: &Dataset,
    hp: &[Hyperparams; 3],
    beta_lo: f64,
    beta_hi: f64,
    mu_mode: MuMode,
    seed: u64,
) -> Result<StagedPredictor, BoostError> {
    let mut groups = stage_rows(data)?;
    let mut target = [0usize, 1, 2];
    let mut merged = Vec::new();
    // Fold outer stages into the middle first, then the middle into whichever
    // neighbor still stands.
    for s in [0usize, 2, 1] {
        if groups[target[s]].len() >= 2 {
            continue;
        }
        let neighbor = match s {
            0 => [1, 2],
            2 => [1, 0],
            _ => [0, 2],
        }
        .into_iter()
        .map(|x| target[x])
        .find(|&t| t != target[s] && groups[t].len() >= 2);
        if let Some(to) = neighbor {
            let from = target[s];
            let moved = std::mem::take(&mut groups[from]);
            groups[to].extend(moved);
            groups[to].sort_unstable();
            merged.push((Stage::ALL[s], Stage::ALL[to]));
            for t in target.iter_mut() {
                if *t == from {
                    *t = to;
                }
            }
        }
    }
    if groups.iter().all(|g| g.len() < 2) {
        return Err(BoostError::EmptyData(data.n_rows()));
    }
    fit_groups(data, groups, target, merged, hp, beta_lo, beta_hi, mu_mode, seed)
}

fn stage_rows(data: &Dataset) -> Result<[Vec<usize>; 3], BoostError> {
    let mut groups: [Vec<usize>; 3] = Default::default();
    for i in 0..data.n_rows() {
        let fv = FeatureVector::from_values(&data.schema, data.row(i))
            .map_err(|_| BoostError::SchemaMismatch { got: 0, want: data.schema.n_columns() })?;
        groups[assign_stage(&fv).index()].push(i);
    }
    Ok(groups)
}

#[allow(clippy::too_many_arguments)]
fn fit_groups(
    data: &Dataset,
    groups: [Vec<usize>; 3],
    target: [usize; 3],
    merged: Vec<(Stage, Stage)>,
    hp: &[Hyperparams; 3],
    beta_lo: f64,
    beta_hi: f64,
    mu_mode: MuMode,
    seed: u64,
) -> Result<StagedPredictor, BoostError> {
    assert!(beta_lo < beta_hi, "quantile pair must be ordered");
    // Train one triple per distinct group, in stage order.
    let mut distinct: Vec<usize> = Vec::new();
    for &t in &target {
        if !distinct.contains(&t) {
            distinct.push(t);
        }
    }
    let mut triples = Vec::with_capacity(distinct.len());
    let mut route = [0usize; 3];
    for (triple_idx, &g) in distinct.iter().enumerate() {
        let subset = data.subset(&groups[g]);
        let stage_seed = seed.wrapping_add(g as u64 * 101);
        let center_loss = match mu_mode {
            MuMode::Median => Loss::Quantile(0.5),
            MuMode::SquaredMean => Loss::Squared,
        };
        triples.push(StageTriple {
            lower: fit(&subset, &hp[g], Loss::Quantile(beta_lo), stage_seed)?,
            center: fit(&subset, &hp[g], center_loss, stage_seed.wrapping_add(1))?,
            upper: fit(&subset, &hp[g], Loss::Quantile(beta_hi), stage_seed.wrapping_add(2))?,
        });
        for s in 0..3 {
            if target[s] == g {
                route[s] = triple_idx;
            }
        }
    }
    Ok(StagedPredictor {
        schema: data.schema.clone(),
        beta_lo,
        beta_hi,
        mu_mode,
        triples,
        route,
        merged,
    })
}

impl StagedPredictor {
    pub fn stage_of(&self, fv: &FeatureVector) -> Stage {
        assign_stage(fv)
    }

    pub fn triple_for(&self, fv: &FeatureVector) -> &StageTriple {
        &self.triples[self.route[assign_stage(fv).index()]]
    }

    /// Predict the landing-duration distribution for one feature row.
    ///
    /// The three quantile predictions are sorted (quantile-crossing fix)
    /// before `sigma = (q_hi - q_lo) / (z(beta_hi) - z(beta_lo))`.
    pub fn predict_eta(&self, fv: &FeatureVector) -> Result<EtaDistribution, BoostError> {
        let triple = self.triple_for(fv);
        let q_lo = triple.lower.predict(fv)?;
        let center = triple.center.predict(fv)?;
        let q_hi = triple.upper.predict(fv)?;
        let mut sorted = [q_lo, center, q_hi];
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let z_span = normal::inv_cdf(self.beta_hi) - normal::inv_cdf(self.beta_lo);
        let sigma = (sorted[2] - sorted[0]) / z_span;
        let mu = match self.mu_mode {
            MuMode::Median => sorted[1],
            MuMode::SquaredMean => center.clamp(sorted[0], sorted[2]),
        };
        Ok(EtaDistribution::new(
            mu,
            sigma,
            vec![(self.beta_lo, sorted[0]), (0.5, sorted[1]), (self.beta_hi, sorted[2])],
        ))
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), BoostError> {
        let json = serde_json::to_string_pretty(self).map_err(|e| BoostError::Io(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| BoostError::Io(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, BoostError> {
        let json = std::fs::read_to_string(path).map_err(|e| BoostError::Io(e.to_string()))?;
        serde_json::from_str(&json).map_err(|e| BoostError::Io(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{FeatureSchema, EV_LOOP_600_INDEX};

    /// Rows spread across stages via EV_LOOP_600, label driven by it.
    fn staged_dataset(loops: &[f64]) -> Dataset {
        let schema = FeatureSchema::standard(vec!["B738".into()]);
        let n = loops.len();
        let mut columns = vec![vec![0.0; n]; schema.n_columns()];
        let mut labels = Vec::with_capacity(n);
        for (i, &l) in loops.iter().enumerate() {
            columns[EV_LOOP_600_INDEX][i] = l;
            labels.push(1000.0 + 10.0 * l);
        }
        Dataset { schema, columns, labels }
    }

    fn small_hp() -> [Hyperparams; 3] {
        let hp = Hyperparams { n_rounds: 3, max_depth: 2, min_leaf: 1, ..Hyperparams::default() };
        [hp.clone(), hp.clone(), hp]
    }

    #[test]
    fn underpopulated_stage_rejected() {
        let data = staged_dataset(&[1.0, 2.0, 3.0, 4.0]); // all Stage I
        let err = fit_staged(&data, &small_hp(), 0.05, 0.95, MuMode::Median, 0).unwrap_err();
        assert_eq!(err, BoostError::StageUnderpopulated(Stage::II));
    }

    #[test]
    fn merging_absorbs_empty_stages() {
        let data = staged_dataset(&[1.0, 2.0, 3.0, 4.0]);
        let sp = fit_staged_merging(&data, &small_hp(), 0.05, 0.95, MuMode::Median, 0).unwrap();
        assert_eq!(sp.triples.len(), 1);
        assert_eq!(sp.route, [0, 0, 0]);
        assert_eq!(sp.merged.len(), 2);
    }

    #[test]
    fn routing_by_stage() {
        let loops: Vec<f64> = (0..30)
            .map(|i| match i % 3 {
                0 => (i % 10) as f64,        // stage I
                1 => 20.0 + (i % 10) as f64, // stage II
                _ => 50.0 + (i % 10) as f64, // stage III
            })
            .collect();
        let data = staged_dataset(&loops);
        let sp = fit_staged(&data, &small_hp(), 0.05, 0.95, MuMode::Median, 0).unwrap();
        assert_eq!(sp.triples.len(), 3);
        let mut row = vec![0.0; data.schema.n_columns()];
        row[EV_LOOP_600_INDEX] = 50.0;
        let fv = FeatureVector::from_values(&data.schema, row).unwrap();
        assert_eq!(sp.stage_of(&fv), Stage::III);
        assert_eq!(sp.route[Stage::III.index()], 2);
        // The routed triple is stage III's: its center model was trained on
        // labels >= 1500, so the prediction sits in that range.
        let eta = sp.predict_eta(&fv).unwrap();
        assert!(eta.mu > 1400.0, "mu = {}", eta.mu);
    }

    #[test]
    fn sigma_from_quantile_span() {
        // Degenerate: equal quantiles give sigma 0.
        let data = staged_dataset(&[1.0; 8]);
        let mut sp = fit_staged_merging(&data, &small_hp(), 0.05, 0.95, MuMode::Median, 0).unwrap();
        let fv = FeatureVector::from_values(&data.schema, data.row(0)).unwrap();
        let eta = sp.predict_eta(&fv).unwrap();
        assert_eq!(eta.sigma, 0.0);

        // Forced quantile spread: base predictions 90 / 100 / 110.
        sp.triples[0].lower.base = 90.0;
        sp.triples[0].lower.trees.clear();
        sp.triples[0].center.base = 100.0;
        sp.triples[0].center.trees.clear();
        sp.triples[0].upper.base = 110.0;
        sp.triples[0].upper.trees.clear();
        let eta = sp.predict_eta(&fv).unwrap();
        let want = 20.0 / (2.0 * 1.6448536269514722);
        assert!((eta.sigma - want).abs() < 1e-9);
        assert!((eta.sigma - 6.08).abs() < 0.01);

        // Crossed raw quantiles get sorted, sigma stays non-negative.
        sp.triples[0].lower.base = 110.0;
        sp.triples[0].upper.base = 90.0;
        let eta = sp.predict_eta(&fv).unwrap();
        assert!(eta.sigma >= 0.0);
        assert_eq!(eta.quantiles[0].1, 90.0);
        assert_eq!(eta.quantiles[2].1, 110.0);
    }
}
