//! Rating-prediction experiments: implicit-feedback matrix factorization
//! trained by SGD with negative sampling, tertile user sets by
//! mainstreaminess, and cross-validated RMSE/MAE evaluation.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mainstreaminess::{MainstreaminessTable, MeasureKey, MeasureScope};
use crate::math;
use crate::matrix::{NormalizedMatrix, UserArtistMatrix};
use crate::rng::Rng;
use crate::stats;
use crate::types::{CountryCode, UserId};

/// One training or test example. Positive interactions carry the user's
/// rating in (0, 1] (or a raw playcount in raw mode); sampled negatives
/// carry 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interaction {
    pub user: u32,
    pub item: u32,
    pub rating: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UserSet {
    Low,
    Mid,
    High,
    All,
}

impl UserSet {
    pub fn as_str(&self) -> &'static str {
        match self {
            UserSet::Low => "low",
            UserSet::Mid => "mid",
            UserSet::High => "high",
            UserSet::All => "all",
        }
    }

    fn tag(&self) -> u64 {
        match self {
            UserSet::Low => 0,
            UserSet::Mid => 1,
            UserSet::High => 2,
            UserSet::All => 3,
        }
    }
}

/// Three near-equal user sets by ascending score; remainder users go to the
/// lower sets first, ties resolved by user id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TertileSplit {
    pub low: Vec<UserId>,
    pub mid: Vec<UserId>,
    pub high: Vec<UserId>,
}

impl TertileSplit {
    pub fn set(&self, which: UserSet) -> Option<&[UserId]> {
        match which {
            UserSet::Low => Some(&self.low),
            UserSet::Mid => Some(&self.mid),
            UserSet::High => Some(&self.high),
            UserSet::All => None,
        }
    }
}

pub fn tertile_split(scores: &[(UserId, f64)]) -> Result<TertileSplit> {
    let n = scores.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    let mut ordered: Vec<(UserId, f64)> = scores.to_vec();
    ordered.sort_unstable_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

    let base = n / 3;
    let remainder = n % 3;
    let low_size = base + usize::from(remainder >= 1);
    let mid_size = base + usize::from(remainder >= 2);

    let ids: Vec<UserId> = ordered.into_iter().map(|(u, _)| u).collect();
    Ok(TertileSplit {
        low: ids[..low_size].to_vec(),
        mid: ids[low_size..low_size + mid_size].to_vec(),
        high: ids[low_size + mid_size..].to_vec(),
    })
}

/// Seeded uniform 80/20 (by default) partition of interactions. The train
/// side never swallows the whole input.
pub fn holdout_split(
    interactions: &[Interaction],
    train_frac: f64,
    rng: &mut Rng,
) -> (Vec<Interaction>, Vec<Interaction>) {
    let n = interactions.len();
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let n_train = (math::round(train_frac * n as f64) as usize).min(n.saturating_sub(1));
    let train = order[..n_train].iter().map(|&i| interactions[i]).collect();
    let test = order[n_train..].iter().map(|&i| interactions[i]).collect();
    (train, test)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NegativeSampling {
    /// Positives followed by the sampled rating-0 negatives.
    pub augmented: Vec<Interaction>,
    /// Users whose positives already cover the whole item index.
    pub saturated_users: usize,
}

/// Adds one unobserved rating-0 (user, item) pair per positive, drawn
/// uniformly per user without duplicates. Users with more positives than
/// free items get as many negatives as remain; fully saturated users are
/// skipped and counted.
pub fn negative_sample(train: &[Interaction], n_items: u32, rng: &mut Rng) -> NegativeSampling {
    let mut by_user: alloc::collections::BTreeMap<u32, Vec<u32>> =
        alloc::collections::BTreeMap::new();
    for t in train {
        by_user.entry(t.user).or_default().push(t.item);
    }

    let mut augmented = train.to_vec();
    let mut saturated = 0usize;
    for (&user, items) in by_user.iter_mut() {
        let n_pos = items.len();
        items.sort_unstable();
        items.dedup();
        let free = n_items as usize - items.len().min(n_items as usize);
        if free == 0 {
            saturated += 1;
            continue;
        }
        let wanted = n_pos.min(free);
        let mut drawn: Vec<u32> = Vec::with_capacity(wanted);
        if free <= wanted.saturating_mul(2) {
            // Few free items: enumerate the complement and subsample it.
            let complement: Vec<u32> = (0..n_items)
                .filter(|i| items.binary_search(i).is_err())
                .collect();
            let picks = rng.sample_indices(complement.len(), wanted);
            drawn = picks.into_iter().map(|p| complement[p]).collect();
            drawn.sort_unstable();
        } else {
            let mut taken: alloc::collections::BTreeSet<u32> = alloc::collections::BTreeSet::new();
            while drawn.len() < wanted {
                let candidate = rng.next_below(n_items as usize) as u32;
                if items.binary_search(&candidate).is_ok() || taken.contains(&candidate) {
                    continue;
                }
                taken.insert(candidate);
                drawn.push(candidate);
            }
        }
        for item in drawn {
            augmented.push(Interaction {
                user,
                item,
                rating: 0.0,
            });
        }
    }
    NegativeSampling {
        augmented,
        saturated_users: saturated,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfConfig {
    pub factors: usize,
    pub learning_rate: f64,
    pub regularization: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for MfConfig {
    fn default() -> Self {
        MfConfig {
            factors: 32,
            learning_rate: 0.01,
            regularization: 0.05,
            epochs: 20,
            seed: 42,
        }
    }
}

/// Latent-factor model; predictions are plain dot products. Users or items
/// never seen in training predict 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    factors: usize,
    n_users: usize,
    n_items: usize,
    user_factors: Vec<f64>,
    item_factors: Vec<f64>,
    seen_users: Vec<bool>,
    seen_items: Vec<bool>,
    /// Mean squared training error plus the regularization term, per epoch.
    pub epoch_losses: Vec<f64>,
}

impl FactorModel {
    pub fn factors(&self) -> usize {
        self.factors
    }

    /// True when the user or item was not seen in training, so the model
    /// can only emit the constant 0.
    pub fn is_cold(&self, user: u32, item: u32) -> bool {
        let (u, i) = (user as usize, item as usize);
        u >= self.n_users || i >= self.n_items || !self.seen_users[u] || !self.seen_items[i]
    }

    pub fn predict(&self, user: u32, item: u32) -> f64 {
        if self.is_cold(user, item) {
            return 0.0;
        }
        let (u, i) = (user as usize, item as usize);
        let k = self.factors;
        let pu = &self.user_factors[u * k..(u + 1) * k];
        let qi = &self.item_factors[i * k..(i + 1) * k];
        pu.iter().zip(qi).map(|(&a, &b)| a * b).sum()
    }

    pub fn user_factors(&self) -> &[f64] {
        &self.user_factors
    }
}

/// SGD on squared error with L2 regularization. Factors start at seeded
/// uniform(-0.01, 0.01); examples are reshuffled each epoch from the same
/// seed, so identical inputs give bit-identical models.
pub fn train_mf(train: &[Interaction], config: &MfConfig) -> Result<FactorModel> {
    if train.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let k = config.factors.max(1);
    let n_users = train.iter().map(|t| t.user).max().unwrap() as usize + 1;
    let n_items = train.iter().map(|t| t.item).max().unwrap() as usize + 1;

    let mut init_rng = Rng::substream(config.seed, "mf-init", &[]);
    let mut user_factors = vec![0.0f64; n_users * k];
    let mut item_factors = vec![0.0f64; n_items * k];
    for f in user_factors.iter_mut() {
        *f = init_rng.uniform(-0.01, 0.01);
    }
    for f in item_factors.iter_mut() {
        *f = init_rng.uniform(-0.01, 0.01);
    }

    let mut seen_users = vec![false; n_users];
    let mut seen_items = vec![false; n_items];
    for t in train {
        seen_users[t.user as usize] = true;
        seen_items[t.item as usize] = true;
    }

    let lr = config.learning_rate;
    let reg = config.regularization;
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let mut shuffle_rng = Rng::substream(config.seed, "mf-epoch", &[epoch as u64]);
        shuffle_rng.shuffle(&mut order);

        for &ix in &order {
            let t = train[ix];
            let (u, i) = (t.user as usize, t.item as usize);
            let err = {
                let pu = &user_factors[u * k..(u + 1) * k];
                let qi = &item_factors[i * k..(i + 1) * k];
                t.rating - pu.iter().zip(qi).map(|(&a, &b)| a * b).sum::<f64>()
            };
            for f in 0..k {
                let pu = user_factors[u * k + f];
                let qi = item_factors[i * k + f];
                user_factors[u * k + f] = pu + lr * (err * qi - reg * pu);
                item_factors[i * k + f] = qi + lr * (err * pu - reg * qi);
            }
        }

        let mut sq_err = 0.0;
        for t in train {
            let (u, i) = (t.user as usize, t.item as usize);
            let pu = &user_factors[u * k..(u + 1) * k];
            let qi = &item_factors[i * k..(i + 1) * k];
            let e = t.rating - pu.iter().zip(qi).map(|(&a, &b)| a * b).sum::<f64>();
            sq_err += e * e;
        }
        let reg_term: f64 = reg
            * (user_factors.iter().map(|f| f * f).sum::<f64>()
                + item_factors.iter().map(|f| f * f).sum::<f64>());
        let loss = sq_err / train.len() as f64 + reg_term;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        epoch_losses.push(loss);
    }

    Ok(FactorModel {
        factors: k,
        n_users,
        n_items,
        user_factors,
        item_factors,
        seen_users,
        seen_items,
        epoch_losses,
    })
}

pub fn mae(test: &[Interaction], model: &FactorModel) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let sum: f64 = test
        .iter()
        .map(|t| math::abs(t.rating - model.predict(t.user, t.item)))
        .sum();
    Ok(sum / test.len() as f64)
}

pub fn rmse(test: &[Interaction], model: &FactorModel) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let sum: f64 = test
        .iter()
        .map(|t| {
            let e = t.rating - model.predict(t.user, t.item);
            e * e
        })
        .sum();
    Ok(math::sqrt(sum / test.len() as f64))
}

/// How test interactions with users or items unseen in training are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColdRule {
    /// Score them with the constant prediction 0.
    PredictZero,
    /// Remove them from the test set (still counted in the report).
    Drop,
}

/// Which values act as ratings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatingMode {
    /// Per-user max-normalized playcounts in (0, 1].
    Normalized,
    /// Raw playcounts; magnitudes then depend on user activity.
    RawPlaycounts,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub mf: MfConfig,
    pub train_frac: f64,
    pub cold_rule: ColdRule,
    pub rating_mode: RatingMode,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            mf: MfConfig::default(),
            train_frac: 0.8,
            cold_rule: ColdRule::PredictZero,
            rating_mode: RatingMode::Normalized,
        }
    }
}

/// One experiment: a measure, a user set, an optional country restriction,
/// the fold count, and the seed every substream derives from. The measure is
/// ignored for the `All` (baseline) user set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentSpec {
    pub measure: MeasureKey,
    pub user_set: UserSet,
    pub country: Option<CountryCode>,
    pub folds: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldEval {
    pub rmse: f64,
    pub mae: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub folds: Vec<FoldEval>,
    pub rmse_mean: f64,
    pub mae_mean: f64,
    pub n_users: usize,
    pub n_test: usize,
    /// Test interactions whose user or item was unseen in training, summed
    /// over folds.
    pub n_cold_test: usize,
}

fn country_tag(country: Option<CountryCode>) -> u64 {
    match country {
        Some(c) => {
            let b = c.as_str().as_bytes();
            1 + ((b[0] as u64) << 8 | b[1] as u64)
        }
        None => 0,
    }
}

/// Resolves the cohort for a spec: country restriction first, then the
/// tertile set. Country-scope tertiles are computed within the country
/// cohort; global-scope tertiles over all scored users.
pub fn resolve_cohort(
    matrix: &UserArtistMatrix,
    table: &MainstreaminessTable,
    spec: &ExperimentSpec,
) -> Result<Vec<u32>> {
    let country_users: Vec<u32> = match spec.country {
        Some(c) => {
            if !matrix.has_country(c) {
                return Err(Error::UnknownCountry(c));
            }
            matrix
                .users()
                .iter()
                .enumerate()
                .filter(|(_, r)| r.country == Some(c))
                .map(|(i, _)| i as u32)
                .collect()
        }
        None => (0..matrix.n_users() as u32).collect(),
    };

    if spec.user_set == UserSet::All {
        return Ok(country_users);
    }

    let scores = table.scores_for(spec.measure);
    let split_input: Vec<(UserId, f64)> = match spec.measure.scope() {
        MeasureScope::Country => {
            let in_cohort: alloc::collections::BTreeSet<UserId> = country_users
                .iter()
                .map(|&i| matrix.users()[i as usize].user_id)
                .collect();
            scores
                .into_iter()
                .filter(|(u, _)| in_cohort.contains(u))
                .collect()
        }
        MeasureScope::Global => scores,
    };
    let split = tertile_split(&split_input)?;
    let selected: alloc::collections::BTreeSet<UserId> = split
        .set(spec.user_set)
        .expect("non-all user set")
        .iter()
        .copied()
        .collect();

    Ok(country_users
        .into_iter()
        .filter(|&i| selected.contains(&matrix.users()[i as usize].user_id))
        .collect())
}

fn cohort_interactions(
    raw: &UserArtistMatrix,
    normalized: &NormalizedMatrix,
    cohort: &[u32],
    mode: RatingMode,
) -> Vec<Interaction> {
    let mut interactions = Vec::new();
    for (local, &user_idx) in cohort.iter().enumerate() {
        match mode {
            RatingMode::Normalized => {
                for &(item, value) in normalized.row(user_idx) {
                    interactions.push(Interaction {
                        user: local as u32,
                        item,
                        rating: value,
                    });
                }
            }
            RatingMode::RawPlaycounts => {
                for &(item, count) in raw.row(user_idx) {
                    interactions.push(Interaction {
                        user: local as u32,
                        item,
                        rating: count as f64,
                    });
                }
            }
        }
    }
    interactions
}

/// Runs one cross-validated experiment: per fold, a fresh seeded train/test
/// split of the cohort's interactions, negative sampling on the train side,
/// SGD training, and RMSE/MAE on the held-out positives.
pub fn run_experiment(
    raw: &UserArtistMatrix,
    normalized: &NormalizedMatrix,
    table: &MainstreaminessTable,
    spec: &ExperimentSpec,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    let cohort = resolve_cohort(raw, table, spec)?;
    run_on_cohort(raw, normalized, &cohort, spec, cfg)
}

fn run_on_cohort(
    raw: &UserArtistMatrix,
    normalized: &NormalizedMatrix,
    cohort: &[u32],
    spec: &ExperimentSpec,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    if spec.folds < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: spec.folds,
        });
    }
    if cohort.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: cohort.len(),
        });
    }
    let interactions = cohort_interactions(raw, normalized, cohort, cfg.rating_mode);
    let n_items = raw.n_artists() as u32;

    let stream_ids = [
        spec.measure.index() as u64,
        spec.user_set.tag(),
        country_tag(spec.country),
    ];

    let mut folds = Vec::with_capacity(spec.folds);
    let mut n_test_total = 0usize;
    let mut n_cold_total = 0usize;
    for fold in 0..spec.folds {
        let mut ids = stream_ids.to_vec();
        ids.push(fold as u64);
        let mut split_rng = Rng::substream(spec.seed, "holdout", &ids);
        let (train, test) = holdout_split(&interactions, cfg.train_frac, &mut split_rng);

        let mut neg_rng = Rng::substream(spec.seed, "negative", &ids);
        let sampled = negative_sample(&train, n_items, &mut neg_rng);

        let mf = MfConfig {
            seed: Rng::substream(spec.seed, "train", &ids).next_u64(),
            ..cfg.mf
        };
        let model = train_mf(&sampled.augmented, &mf)?;

        let n_cold = test
            .iter()
            .filter(|t| model.is_cold(t.user, t.item))
            .count();
        n_cold_total += n_cold;
        let eval_set: Vec<Interaction> = match cfg.cold_rule {
            ColdRule::PredictZero => test,
            ColdRule::Drop => test
                .into_iter()
                .filter(|t| !model.is_cold(t.user, t.item))
                .collect(),
        };
        n_test_total += eval_set.len();
        folds.push(FoldEval {
            rmse: rmse(&eval_set, &model)?,
            mae: mae(&eval_set, &model)?,
        });
    }

    let nf = folds.len() as f64;
    Ok(EvalReport {
        rmse_mean: folds.iter().map(|f| f.rmse).sum::<f64>() / nf,
        mae_mean: folds.iter().map(|f| f.mae).sum::<f64>() / nf,
        folds,
        n_users: cohort.len(),
        n_test: n_test_total,
        n_cold_test: n_cold_total,
    })
}

/// Consistency of per-fold RMSE across experiments, and per-country effect
/// sizes between full-cohort results and seeded fixed-size subsamples.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub icc: f64,
    /// Cohen's d per country between full-sample and subsample RMSE sets.
    pub country_effects: Vec<(CountryCode, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationParams {
    /// Users drawn per country subsample (capped at the cohort size).
    pub subsample_size: usize,
    /// Subsamples per country.
    pub n_subsamples: usize,
    /// Seed for the subsampling streams.
    pub seed: u64,
}

impl Default for ValidationParams {
    fn default() -> Self {
        ValidationParams {
            subsample_size: 500,
            n_subsamples: 5,
            seed: 42,
        }
    }
}

pub fn validation_suite(
    raw: &UserArtistMatrix,
    normalized: &NormalizedMatrix,
    table: &MainstreaminessTable,
    specs: &[ExperimentSpec],
    cfg: &EvalConfig,
    params: &ValidationParams,
) -> Result<ValidationReport> {
    if specs.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut reports = Vec::with_capacity(specs.len());
    for spec in specs {
        reports.push(run_experiment(raw, normalized, table, spec, cfg)?);
    }

    let n_folds = reports.iter().map(|r| r.folds.len()).min().unwrap_or(0);
    if n_folds < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: n_folds,
        });
    }
    let runs: Vec<Vec<f64>> = (0..n_folds)
        .map(|f| reports.iter().map(|r| r.folds[f].rmse).collect())
        .collect();
    let icc = stats::icc(&runs)?;

    let mut countries: Vec<CountryCode> = specs.iter().filter_map(|s| s.country).collect();
    countries.sort_unstable();
    countries.dedup();

    let mut country_effects = Vec::new();
    for country in countries {
        let spec_ids: Vec<usize> = specs
            .iter()
            .enumerate()
            .filter(|(_, s)| s.country == Some(country))
            .map(|(i, _)| i)
            .collect();
        if spec_ids.len() < 2 {
            continue;
        }
        let full: Vec<f64> = spec_ids.iter().map(|&i| reports[i].rmse_mean).collect();

        let mut sub: Vec<f64> = Vec::new();
        for sample_ix in 0..params.n_subsamples {
            for &i in &spec_ids {
                let spec = &specs[i];
                let cohort = resolve_cohort(raw, table, spec)?;
                let mut rng = Rng::substream(
                    params.seed,
                    "subsample",
                    &[country_tag(Some(country)), sample_ix as u64],
                );
                let mut picks = rng.sample_indices(cohort.len(), params.subsample_size);
                picks.sort_unstable();
                let sampled: Vec<u32> = picks.into_iter().map(|p| cohort[p]).collect();
                // Same seed as the full run: a subsample covering the whole
                // cohort reproduces the full result exactly.
                let report = run_on_cohort(raw, normalized, &sampled, spec, cfg)?;
                sub.push(report.rmse_mean);
            }
        }
        if let Ok(d) = stats::cohens_d(&full, &sub) {
            country_effects.push((country, d));
        }
    }

    Ok(ValidationReport {
        icc,
        country_effects,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn uid(i: u64) -> UserId {
        UserId(i)
    }

    #[test]
    fn tertile_nine_users_split_evenly() {
        let scores: Vec<(UserId, f64)> = (1..=9).map(|i| (uid(i), i as f64)).collect();
        let split = tertile_split(&scores).unwrap();
        assert_eq!(split.low, vec![uid(1), uid(2), uid(3)]);
        assert_eq!(split.mid, vec![uid(4), uid(5), uid(6)]);
        assert_eq!(split.high, vec![uid(7), uid(8), uid(9)]);
    }

    #[test]
    fn tertile_remainder_goes_low_first() {
        let scores: Vec<(UserId, f64)> = (1..=10).map(|i| (uid(i), i as f64)).collect();
        let split = tertile_split(&scores).unwrap();
        assert_eq!(
            (split.low.len(), split.mid.len(), split.high.len()),
            (4, 3, 3)
        );
        let scores11: Vec<(UserId, f64)> = (1..=11).map(|i| (uid(i), i as f64)).collect();
        let split11 = tertile_split(&scores11).unwrap();
        assert_eq!(
            (split11.low.len(), split11.mid.len(), split11.high.len()),
            (4, 4, 3)
        );
    }

    #[test]
    fn tertile_all_tied_splits_by_user_id() {
        let scores: Vec<(UserId, f64)> = (1..=10).map(|i| (uid(i), 0.5)).collect();
        let split = tertile_split(&scores).unwrap();
        assert_eq!(split.low, vec![uid(1), uid(2), uid(3), uid(4)]);
        assert_eq!(split.high, vec![uid(8), uid(9), uid(10)]);
    }

    #[test]
    fn tertile_too_few_users_errors() {
        let scores = vec![(uid(1), 0.1), (uid(2), 0.2)];
        assert!(tertile_split(&scores).is_err());
    }

    fn toy_interactions(n: usize) -> Vec<Interaction> {
        (0..n)
            .map(|i| Interaction {
                user: (i % 7) as u32,
                item: (i % 11) as u32,
                rating: (i % 5) as f64 / 5.0 + 0.2,
            })
            .collect()
    }

    #[test]
    fn holdout_eighty_twenty() {
        let data = toy_interactions(10);
        let mut rng = Rng::new(1);
        let (train, test) = holdout_split(&data, 0.8, &mut rng);
        assert_eq!(train.len(), 8);
        assert_eq!(test.len(), 2);
    }

    #[test]
    fn holdout_is_seeded_and_partitions() {
        let data = toy_interactions(40);
        let (t1, s1) = holdout_split(&data, 0.8, &mut Rng::new(9));
        let (t2, s2) = holdout_split(&data, 0.8, &mut Rng::new(9));
        assert_eq!(t1, t2);
        assert_eq!(s1, s2);
        assert_eq!(t1.len() + s1.len(), data.len());
        // Multiset equality with the input.
        let mut all: Vec<_> = t1
            .iter()
            .chain(&s1)
            .map(|t| (t.user, t.item, t.rating.to_bits()))
            .collect();
        all.sort_unstable();
        let mut orig: Vec<_> = data
            .iter()
            .map(|t| (t.user, t.item, t.rating.to_bits()))
            .collect();
        orig.sort_unstable();
        assert_eq!(all, orig);
    }

    #[test]
    fn negatives_double_the_training_set() {
        let train: Vec<Interaction> = (0..100)
            .map(|i| Interaction {
                user: (i / 10) as u32,
                item: (i % 10) as u32,
                rating: 1.0,
            })
            .collect();
        let mut rng = Rng::new(5);
        let out = negative_sample(&train, 1000, &mut rng);
        assert_eq!(out.augmented.len(), 200);
        assert_eq!(out.saturated_users, 0);
    }

    #[test]
    fn negatives_never_collide_with_positives() {
        let train: Vec<Interaction> = (0..60)
            .map(|i| Interaction {
                user: (i % 6) as u32,
                item: (i % 10) as u32,
                rating: 0.5,
            })
            .collect();
        let mut rng = Rng::new(8);
        let out = negative_sample(&train, 15, &mut rng);
        for neg in out.augmented.iter().filter(|t| t.rating == 0.0) {
            assert!(!train
                .iter()
                .any(|p| p.user == neg.user && p.item == neg.item));
        }
        // Same seed, same negatives.
        let again = negative_sample(&train, 15, &mut Rng::new(8));
        assert_eq!(out, again);
    }

    #[test]
    fn saturated_users_are_skipped() {
        let train: Vec<Interaction> = (0..4)
            .map(|i| Interaction {
                user: 0,
                item: i as u32,
                rating: 1.0,
            })
            .collect();
        let mut rng = Rng::new(2);
        let out = negative_sample(&train, 4, &mut rng);
        assert_eq!(out.saturated_users, 1);
        assert_eq!(out.augmented.len(), 4);
    }

    #[allow(clippy::needless_range_loop)]
    fn rank_one_data(
        n_users: usize,
        n_items: usize,
        density: f64,
        seed: u64,
    ) -> (Vec<Interaction>, Vec<Interaction>) {
        let mut rng = Rng::new(seed);
        let p: Vec<f64> = (0..n_users).map(|_| rng.uniform(0.5, 1.5)).collect();
        let q: Vec<f64> = (0..n_items).map(|_| rng.uniform(0.5, 1.5)).collect();
        let mut train = Vec::new();
        let mut test = Vec::new();
        for u in 0..n_users {
            for i in 0..n_items {
                let r = Interaction {
                    user: u as u32,
                    item: i as u32,
                    rating: p[u] * q[i],
                };
                if rng.next_f64() < density {
                    train.push(r);
                } else {
                    test.push(r);
                }
            }
        }
        (train, test)
    }

    #[test]
    fn rank_one_synthetic_recovery() {
        let (train, test) = rank_one_data(50, 50, 0.4, 11);
        let config = MfConfig {
            factors: 8,
            learning_rate: 0.05,
            regularization: 0.0005,
            epochs: 300,
            seed: 3,
        };
        let model = train_mf(&train, &config).unwrap();
        let err = rmse(&test, &model).unwrap();
        assert!(err < 0.05, "held-out rmse {err}");
    }

    #[test]
    fn zero_epochs_predicts_near_zero() {
        let train = toy_interactions(30);
        let config = MfConfig {
            epochs: 0,
            ..MfConfig::default()
        };
        let model = train_mf(&train, &config).unwrap();
        for t in &train {
            assert!(math::abs(model.predict(t.user, t.item)) < 0.01);
        }
    }

    #[test]
    fn training_is_bit_deterministic() {
        let train = toy_interactions(50);
        let config = MfConfig::default();
        let a = train_mf(&train, &config).unwrap();
        let b = train_mf(&train, &config).unwrap();
        assert_eq!(a.user_factors(), b.user_factors());
    }

    #[test]
    fn training_loss_decreases_with_tolerance() {
        let (train, _) = rank_one_data(20, 20, 0.7, 4);
        let config = MfConfig {
            factors: 4,
            learning_rate: 0.02,
            regularization: 0.001,
            epochs: 40,
            seed: 6,
        };
        let model = train_mf(&train, &config).unwrap();
        for w in model.epoch_losses.windows(2) {
            assert!(w[1] <= w[0] * 1.05, "loss jumped: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn predict_is_dot_product_and_cold_is_zero() {
        let train = vec![
            Interaction {
                user: 0,
                item: 0,
                rating: 1.0,
            },
            Interaction {
                user: 1,
                item: 1,
                rating: 0.5,
            },
        ];
        let model = train_mf(&train, &MfConfig::default()).unwrap();
        assert_eq!(model.predict(99, 0), 0.0);
        assert_eq!(model.predict(0, 99), 0.0);
    }

    #[test]
    fn error_metric_examples() {
        // Residuals 0.3 and 0.4 against a zero-predicting model.
        let model = FactorModel {
            factors: 1,
            n_users: 0,
            n_items: 0,
            user_factors: Vec::new(),
            item_factors: Vec::new(),
            seen_users: Vec::new(),
            seen_items: Vec::new(),
            epoch_losses: Vec::new(),
        };
        let test = vec![
            Interaction {
                user: 0,
                item: 0,
                rating: 0.3,
            },
            Interaction {
                user: 0,
                item: 1,
                rating: 0.4,
            },
        ];
        assert_abs_diff_eq!(mae(&test, &model).unwrap(), 0.35, epsilon = 1e-15);
        assert_abs_diff_eq!(
            rmse(&test, &model).unwrap(),
            libm::sqrt(0.125),
            epsilon = 1e-15
        );
        // Constant residual: rmse == mae.
        let constant = vec![Interaction {
            user: 0,
            item: 0,
            rating: 0.25,
        }];
        assert_abs_diff_eq!(
            rmse(&constant, &model).unwrap(),
            mae(&constant, &model).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn rmse_at_least_mae_on_random_residuals() {
        let model = FactorModel {
            factors: 1,
            n_users: 0,
            n_items: 0,
            user_factors: Vec::new(),
            item_factors: Vec::new(),
            seen_users: Vec::new(),
            seen_items: Vec::new(),
            epoch_losses: Vec::new(),
        };
        let mut rng = Rng::new(31);
        for _ in 0..50 {
            let n = 1 + rng.next_below(30);
            let test: Vec<Interaction> = (0..n)
                .map(|i| Interaction {
                    user: i as u32,
                    item: 0,
                    rating: rng.uniform(-2.0, 2.0),
                })
                .collect();
            let r = rmse(&test, &model).unwrap();
            let m = mae(&test, &model).unwrap();
            assert!(r >= m - 1e-12);
        }
    }
}
