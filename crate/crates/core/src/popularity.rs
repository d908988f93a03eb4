//! Artist popularity profiles and rescaling.
//!
//! Two popularity bases are supported: APC (artist playcount, the sum of all
//! listening events to an artist within a scope) and ALC (artist listener
//! count, the number of distinct users within a scope who listened to the
//! artist at least once). Profiles exist at global, country, and user scope.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::UserArtistMatrix;
use crate::types::{ArtistId, CountryCode, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    Apc,
    Alc,
}

impl Basis {
    pub fn as_str(&self) -> &'static str {
        match self {
            Basis::Apc => "APC",
            Basis::Alc => "ALC",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Global,
    Country(CountryCode),
    User(UserId),
}

#[derive(Debug, Clone, PartialEq)]
enum Values {
    Dense(Vec<f64>),
    /// `(artist_index, value)` pairs sorted by index, plus the index size.
    Sparse {
        len: usize,
        entries: Vec<(u32, f64)>,
    },
}

/// A non-negative popularity vector over the artist index.
#[derive(Debug, Clone, PartialEq)]
pub struct PopularityProfile {
    pub basis: Basis,
    pub scope: Scope,
    values: Values,
}

impl PopularityProfile {
    pub fn from_dense(basis: Basis, scope: Scope, values: Vec<f64>) -> Self {
        PopularityProfile {
            basis,
            scope,
            values: Values::Dense(values),
        }
    }

    /// `entries` must be sorted by artist index and hold no zeros.
    pub fn from_sparse(basis: Basis, scope: Scope, len: usize, entries: Vec<(u32, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        PopularityProfile {
            basis,
            scope,
            values: Values::Sparse { len, entries },
        }
    }

    /// Size of the artist index this profile is defined over.
    pub fn len(&self) -> usize {
        match &self.values {
            Values::Dense(v) => v.len(),
            Values::Sparse { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, artist_index: u32) -> f64 {
        match &self.values {
            Values::Dense(v) => v[artist_index as usize],
            Values::Sparse { entries, .. } => entries
                .binary_search_by_key(&artist_index, |e| e.0)
                .map(|i| entries[i].1)
                .unwrap_or(0.0),
        }
    }

    pub fn total(&self) -> f64 {
        match &self.values {
            Values::Dense(v) => v.iter().sum(),
            Values::Sparse { entries, .. } => entries.iter().map(|e| e.1).sum(),
        }
    }

    /// Nonzero `(artist_index, value)` pairs in ascending index order.
    pub fn nonzero(&self) -> Vec<(u32, f64)> {
        match &self.values {
            Values::Dense(v) => v
                .iter()
                .enumerate()
                .filter(|(_, &x)| x != 0.0)
                .map(|(i, &x)| (i as u32, x))
                .collect(),
            Values::Sparse { entries, .. } => entries.clone(),
        }
    }

    /// Applies `f` to every stored value; used for rescaling.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        let values = match &self.values {
            Values::Dense(v) => Values::Dense(v.iter().map(|&x| f(x)).collect()),
            Values::Sparse { len, entries } => Values::Sparse {
                len: *len,
                entries: entries.iter().map(|&(i, x)| (i, f(x))).collect(),
            },
        };
        PopularityProfile {
            basis: self.basis,
            scope: self.scope,
            values,
        }
    }
}

/// Computes an APC or ALC profile for the requested scope.
pub fn profile(matrix: &UserArtistMatrix, basis: Basis, scope: Scope) -> Result<PopularityProfile> {
    let n = matrix.n_artists();
    match scope {
        Scope::User(u) => {
            let idx = matrix.user_index(u).ok_or(Error::UnknownUser(u))?;
            let entries: Vec<(u32, f64)> = matrix
                .row(idx)
                .iter()
                .map(|&(a, c)| match basis {
                    Basis::Apc => (a, c as f64),
                    Basis::Alc => (a, 1.0),
                })
                .collect();
            Ok(PopularityProfile::from_sparse(basis, scope, n, entries))
        }
        Scope::Global | Scope::Country(_) => {
            if let Scope::Country(c) = scope {
                if !matrix.has_country(c) {
                    return Err(Error::UnknownCountry(c));
                }
            }
            let mut values = vec![0.0f64; n];
            for (i, rec) in matrix.users().iter().enumerate() {
                if let Scope::Country(c) = scope {
                    if rec.country != Some(c) {
                        continue;
                    }
                }
                for &(a, count) in matrix.row(i as u32) {
                    values[a as usize] += match basis {
                        Basis::Apc => count as f64,
                        Basis::Alc => 1.0,
                    };
                }
            }
            Ok(PopularityProfile::from_dense(basis, scope, values))
        }
    }
}

/// Rescales a global profile into a country's numerical range:
/// every artist's global value is multiplied by the ratio of the country
/// total to the global total, so the scaled profile sums to the country
/// total.
pub fn scale_global_to_country(
    global: &PopularityProfile,
    country: &PopularityProfile,
) -> Result<PopularityProfile> {
    if global.basis != country.basis || global.len() != country.len() {
        return Err(Error::ProfileMismatch);
    }
    let global_total = global.total();
    if global_total <= 0.0 {
        return Err(Error::ZeroTotal);
    }
    let country_total = country.total();
    if country_total <= 0.0 {
        return Err(Error::ZeroTotal);
    }
    let factor = country_total / global_total;
    let mut scaled = global.map_values(|x| x * factor);
    scaled.scope = country.scope;
    Ok(scaled)
}

/// Top `k` artists by value, descending; ties broken by ascending artist id.
pub fn top_k(profile: &PopularityProfile, artists: &[ArtistId], k: usize) -> Vec<(ArtistId, f64)> {
    rank_indices(profile, k)
        .into_iter()
        .map(|i| (artists[i as usize], profile.value(i)))
        .collect()
}

/// Artist indices of the top `n` artists in descending popularity order.
/// Requests beyond the index size are truncated.
pub fn global_rank_order(profile: &PopularityProfile, n: usize) -> Vec<u32> {
    rank_indices(profile, n)
}

fn rank_indices(profile: &PopularityProfile, k: usize) -> Vec<u32> {
    let mut order: Vec<u32> = (0..profile.len() as u32).collect();
    // The artist index is sorted by id, so index order is the tie rule.
    order.sort_by(|&a, &b| {
        profile
            .value(b)
            .total_cmp(&profile.value(a))
            .then(a.cmp(&b))
    });
    order.truncate(k);
    order
}

/// One row of popularity-plot data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotRow {
    pub global_rank: usize,
    pub artist_id: ArtistId,
    pub country_value: f64,
    pub scaled_global_value: f64,
}

/// Tabulates country and rescaled-global popularity along a global rank
/// order, ready for external plotting.
pub fn plot_data(
    country: &PopularityProfile,
    scaled_global: &PopularityProfile,
    rank_order: &[u32],
    artists: &[ArtistId],
) -> Vec<PlotRow> {
    rank_order
        .iter()
        .enumerate()
        .map(|(pos, &idx)| PlotRow {
            global_rank: pos + 1,
            artist_id: artists[idx as usize],
            country_value: country.value(idx),
            scaled_global_value: scaled_global.value(idx),
        })
        .collect()
}

/// A strictly positive probability vector over an explicit artist support.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    support: Vec<u32>,
    probs: Vec<f64>,
}

impl ProbabilityVector {
    pub fn support(&self) -> &[u32] {
        &self.support
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }
}

/// Restricts the profile to `support`, normalizes to unit mass, then applies
/// additive epsilon smoothing and renormalizes, so every entry is strictly
/// positive. Normalizing before smoothing keeps the result invariant under
/// positive rescaling of the input profile.
///
/// An all-zero restriction yields the uniform distribution.
pub fn to_distribution(
    profile: &PopularityProfile,
    support: &[u32],
    epsilon: f64,
) -> Result<ProbabilityVector> {
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    debug_assert!(epsilon > 0.0);
    let raw: Vec<f64> = support.iter().map(|&i| profile.value(i)).collect();
    let total: f64 = raw.iter().sum();
    let m = support.len() as f64;
    let probs: Vec<f64> = if total > 0.0 {
        let denom = 1.0 + m * epsilon;
        raw.iter().map(|&v| (v / total + epsilon) / denom).collect()
    } else {
        raw.iter().map(|_| 1.0 / m).collect()
    };
    Ok(ProbabilityVector {
        support: support.to_vec(),
        probs,
    })
}

/// Smooths a pre-extracted value vector exactly like [`to_distribution`].
pub(crate) fn smooth_values(values: &[f64], epsilon: f64) -> Vec<f64> {
    let total: f64 = values.iter().sum();
    let m = values.len() as f64;
    if total > 0.0 {
        let denom = 1.0 + m * epsilon;
        values
            .iter()
            .map(|&v| (v / total + epsilon) / denom)
            .collect()
    } else {
        values.iter().map(|_| 1.0 / m).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{build_matrix, PlaycountTriple, UserRecord};
    use approx::assert_abs_diff_eq;

    fn small_matrix() -> UserArtistMatrix {
        // u1 plays a twice; u2 plays a three times and b once.
        let users = vec![
            UserRecord {
                user_id: UserId(1),
                country: CountryCode::parse("FI"),
            },
            UserRecord {
                user_id: UserId(2),
                country: CountryCode::parse("SE"),
            },
        ];
        let triples = vec![
            PlaycountTriple {
                user_id: UserId(1),
                artist_id: ArtistId(10),
                playcount: 2,
            },
            PlaycountTriple {
                user_id: UserId(2),
                artist_id: ArtistId(10),
                playcount: 3,
            },
            PlaycountTriple {
                user_id: UserId(2),
                artist_id: ArtistId(20),
                playcount: 1,
            },
        ];
        build_matrix(&triples, &users).matrix
    }

    #[test]
    fn apc_global_sums_playcounts() {
        let m = small_matrix();
        let p = profile(&m, Basis::Apc, Scope::Global).unwrap();
        assert_eq!(p.value(0), 5.0);
        assert_eq!(p.value(1), 1.0);
    }

    #[test]
    fn alc_global_counts_distinct_listeners() {
        let m = small_matrix();
        let p = profile(&m, Basis::Alc, Scope::Global).unwrap();
        assert_eq!(p.value(0), 2.0);
        assert_eq!(p.value(1), 1.0);
    }

    #[test]
    fn user_scope_alc_is_binary() {
        let m = small_matrix();
        let p = profile(&m, Basis::Alc, Scope::User(UserId(2))).unwrap();
        assert_eq!(p.value(0), 1.0);
        assert_eq!(p.value(1), 1.0);
    }

    #[test]
    fn unknown_scopes_error() {
        let m = small_matrix();
        assert!(matches!(
            profile(&m, Basis::Apc, Scope::User(UserId(99))),
            Err(Error::UnknownUser(_))
        ));
        let nowhere = CountryCode::parse("ZZ").unwrap();
        assert!(matches!(
            profile(&m, Basis::Apc, Scope::Country(nowhere)),
            Err(Error::UnknownCountry(_))
        ));
    }

    #[test]
    fn scaling_follows_the_total_ratio() {
        let global = PopularityProfile::from_dense(Basis::Apc, Scope::Global, vec![100.0, 900.0]);
        let country = PopularityProfile::from_dense(
            Basis::Apc,
            Scope::Country(CountryCode::parse("FI").unwrap()),
            vec![30.0, 20.0],
        );
        let scaled = scale_global_to_country(&global, &country).unwrap();
        assert_abs_diff_eq!(scaled.value(0), 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(scaled.total(), country.total(), epsilon = 1e-9);
    }

    #[test]
    fn scaling_identity_when_totals_match() {
        let global = PopularityProfile::from_dense(Basis::Apc, Scope::Global, vec![3.0, 7.0]);
        let country = PopularityProfile::from_dense(
            Basis::Apc,
            Scope::Country(CountryCode::parse("FI").unwrap()),
            vec![6.0, 4.0],
        );
        let scaled = scale_global_to_country(&global, &country).unwrap();
        assert_abs_diff_eq!(scaled.value(0), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(scaled.value(1), 7.0, epsilon = 1e-12);
    }

    #[test]
    fn scaling_zero_total_errors() {
        let global = PopularityProfile::from_dense(Basis::Apc, Scope::Global, vec![0.0]);
        let country = PopularityProfile::from_dense(Basis::Apc, Scope::Global, vec![1.0]);
        assert_eq!(
            scale_global_to_country(&global, &country),
            Err(Error::ZeroTotal)
        );
    }

    #[test]
    fn top_k_orders_and_breaks_ties_by_id() {
        let artists = [ArtistId(1), ArtistId(3), ArtistId(5)];
        let p = PopularityProfile::from_dense(Basis::Apc, Scope::Global, vec![5.0, 1.0, 5.0]);
        let top = top_k(&p, &artists, 2);
        assert_eq!(top, vec![(ArtistId(1), 5.0), (ArtistId(5), 5.0)]);
    }

    #[test]
    fn rank_order_truncates_past_index_size() {
        let p = PopularityProfile::from_dense(Basis::Apc, Scope::Global, vec![2.0, 9.0]);
        let order = global_rank_order(&p, 10);
        assert_eq!(order, vec![1, 0]);
    }

    #[test]
    fn plot_rows_follow_rank_order() {
        let artists = [ArtistId(1), ArtistId(2), ArtistId(3)];
        let country = PopularityProfile::from_dense(Basis::Apc, Scope::Global, vec![1.0, 2.0, 3.0]);
        let scaled = PopularityProfile::from_dense(Basis::Apc, Scope::Global, vec![2.0, 2.0, 2.0]);
        let order = vec![2u32, 1, 0];
        let rows = plot_data(&country, &scaled, &order, &artists);
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].global_rank, 1);
        assert_eq!(rows[0].artist_id, ArtistId(3));
        assert_eq!(rows[0].country_value, 3.0);
    }

    #[test]
    fn distribution_near_zero_epsilon_matches_proportions() {
        let p = PopularityProfile::from_dense(Basis::Apc, Scope::Global, vec![3.0, 1.0]);
        let d = to_distribution(&p, &[0, 1], 1e-15).unwrap();
        assert_abs_diff_eq!(d.probabilities()[0], 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(d.probabilities()[1], 0.25, epsilon = 1e-12);
    }

    #[test]
    fn distribution_all_zero_support_is_uniform() {
        let p = PopularityProfile::from_dense(Basis::Apc, Scope::Global, vec![0.0, 0.0]);
        let d = to_distribution(&p, &[0, 1], 0.5).unwrap();
        assert_eq!(d.probabilities(), &[0.5, 0.5]);
    }

    #[test]
    fn distribution_smoothing_arithmetic() {
        let p = PopularityProfile::from_dense(Basis::Apc, Scope::Global, vec![1.0, 0.0]);
        let d = to_distribution(&p, &[0, 1], 1.0).unwrap();
        assert_abs_diff_eq!(d.probabilities()[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.probabilities()[1], 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn distribution_empty_support_errors() {
        let p = PopularityProfile::from_dense(Basis::Apc, Scope::Global, vec![1.0]);
        assert_eq!(to_distribution(&p, &[], 1e-8), Err(Error::EmptySupport));
    }
}
