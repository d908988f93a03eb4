//! Mainstreaminess measures.
//!
//! A user's mainstreaminess quantifies how closely their listening profile
//! matches a reference popularity profile (global, or the user's country).
//! Six measures are defined: a distribution-based family built on the
//! normalized symmetrized Kullback-Leibler divergence, and a rank-based
//! family built on Kendall's tau-b, each over APC or ALC and at global or
//! country scope. The rank/ALC combination is undefined (a user's ALC vector
//! is all ties) and is rejected at key-construction time.
//!
//! Comparisons run over the union of the two profiles' supports: artists
//! unplayed on both sides are uninformative all-zero ties, so dropping them
//! leaves the smoothed distributions and the tie-corrected tau unchanged in
//! structure while keeping the cost proportional to the populated index.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::UserArtistMatrix;
use crate::popularity::{
    profile, smooth_values, Basis, PopularityProfile, ProbabilityVector, Scope,
};
use crate::types::{CountryCode, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Distribution,
    Rank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasureScope {
    Global,
    Country,
}

/// One of the six valid (method, basis, scope) combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MeasureKey {
    method: Method,
    basis: Basis,
    scope: MeasureScope,
}

impl MeasureKey {
    /// Rejects the rank/ALC combination, for which the correlation is
    /// undefined.
    pub fn new(method: Method, basis: Basis, scope: MeasureScope) -> Result<Self> {
        if method == Method::Rank && basis == Basis::Alc {
            return Err(Error::ConstantInput);
        }
        Ok(MeasureKey {
            method,
            basis,
            scope,
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn scope(&self) -> MeasureScope {
        self.scope
    }

    /// All six valid keys, in the column order used by table outputs.
    pub fn all() -> [MeasureKey; 6] {
        [
            MeasureKey {
                method: Method::Distribution,
                basis: Basis::Apc,
                scope: MeasureScope::Global,
            },
            MeasureKey {
                method: Method::Distribution,
                basis: Basis::Apc,
                scope: MeasureScope::Country,
            },
            MeasureKey {
                method: Method::Distribution,
                basis: Basis::Alc,
                scope: MeasureScope::Global,
            },
            MeasureKey {
                method: Method::Distribution,
                basis: Basis::Alc,
                scope: MeasureScope::Country,
            },
            MeasureKey {
                method: Method::Rank,
                basis: Basis::Apc,
                scope: MeasureScope::Global,
            },
            MeasureKey {
                method: Method::Rank,
                basis: Basis::Apc,
                scope: MeasureScope::Country,
            },
        ]
    }

    /// Position of this key in [`MeasureKey::all`].
    pub fn index(&self) -> usize {
        let m = match self.method {
            Method::Distribution => 0,
            Method::Rank => 4,
        };
        let b = match self.basis {
            Basis::Apc => 0,
            Basis::Alc => 2,
        };
        let s = match self.scope {
            MeasureScope::Global => 0,
            MeasureScope::Country => 1,
        };
        m + b + s
    }

    pub fn label(&self) -> &'static str {
        match self.index() {
            0 => "M_D_APC_global",
            1 => "M_D_APC_country",
            2 => "M_D_ALC_global",
            3 => "M_D_ALC_country",
            4 => "M_R_APC_global",
            _ => "M_R_APC_country",
        }
    }
}

/// Kullback-Leibler divergence `sum_x P(x) ln(P(x)/Q(x))` over identical
/// supports, natural log. Non-negative; zero iff the distributions agree.
pub fn kl_divergence(p: &ProbabilityVector, q: &ProbabilityVector) -> Result<f64> {
    if p.support() != q.support() {
        return Err(Error::MismatchedSupports);
    }
    let mut sum = 0.0;
    for (&pi, &qi) in p.probabilities().iter().zip(q.probabilities()) {
        if pi > 0.0 {
            sum += pi * math::ln(pi / qi);
        }
    }
    Ok(if sum > 0.0 { sum } else { 0.0 })
}

/// `avg(1 - exp(-KL(P||Q)), 1 - exp(-KL(Q||P)))`: each direction is mapped
/// into [0, 1) before averaging, so the result is a symmetric divergence in
/// [0, 1).
pub fn normalized_symmetrized_divergence(
    p: &ProbabilityVector,
    q: &ProbabilityVector,
) -> Result<f64> {
    let forward = kl_divergence(p, q)?;
    let backward = kl_divergence(q, p)?;
    Ok(nsd_from_kl(forward, backward))
}

fn nsd_from_kl(forward: f64, backward: f64) -> f64 {
    0.5 * ((1.0 - math::exp(-forward)) + (1.0 - math::exp(-backward)))
}

fn kl_both_smoothed(x: &[f64], y: &[f64], epsilon: f64) -> (f64, f64) {
    let p = smooth_values(x, epsilon);
    let q = smooth_values(y, epsilon);
    let mut forward = 0.0;
    let mut backward = 0.0;
    for (&pi, &qi) in p.iter().zip(&q) {
        let log_ratio = math::ln(pi / qi);
        forward += pi * log_ratio;
        backward -= qi * log_ratio;
    }
    (forward.max(0.0), backward.max(0.0))
}

/// Union of the nonzero supports of two profiles, ascending.
pub fn union_support(a: &PopularityProfile, b: &PopularityProfile) -> Vec<u32> {
    let left = a.nonzero();
    let right = b.nonzero();
    let mut support = Vec::with_capacity(left.len().max(right.len()));
    let (mut i, mut j) = (0, 0);
    while i < left.len() || j < right.len() {
        let next = match (left.get(i), right.get(j)) {
            (Some(&(li, _)), Some(&(ri, _))) => {
                if li <= ri {
                    if li == ri {
                        j += 1;
                    }
                    i += 1;
                    li
                } else {
                    j += 1;
                    ri
                }
            }
            (Some(&(li, _)), None) => {
                i += 1;
                li
            }
            (None, Some(&(ri, _))) => {
                j += 1;
                ri
            }
            (None, None) => break,
        };
        support.push(next);
    }
    support
}

fn aligned_values(
    user: &PopularityProfile,
    reference: &PopularityProfile,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if user.basis != reference.basis || user.len() != reference.len() {
        return Err(Error::ProfileMismatch);
    }
    let support = union_support(user, reference);
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    let x = support.iter().map(|&i| user.value(i)).collect();
    let y = support.iter().map(|&i| reference.value(i)).collect();
    Ok((x, y))
}

/// Distribution-based mainstreaminess: one minus the normalized symmetrized
/// divergence of the epsilon-smoothed profiles over their union support.
/// Lies in (0, 1]; 1 means identical distributions.
pub fn distribution_measure(
    user: &PopularityProfile,
    reference: &PopularityProfile,
    epsilon: f64,
) -> Result<f64> {
    let (x, y) = aligned_values(user, reference)?;
    Ok(distribution_from_values(&x, &y, epsilon))
}

fn distribution_from_values(x: &[f64], y: &[f64], epsilon: f64) -> f64 {
    let (forward, backward) = kl_both_smoothed(x, y, epsilon);
    1.0 - nsd_from_kl(forward, backward)
}

/// Rank-based mainstreaminess: Kendall's tau-b between the two profiles'
/// values over their union support. Ranking the values is order-equivalent
/// to ranking the profiles, and tau-b handles the zero ties.
pub fn rank_measure(user: &PopularityProfile, reference: &PopularityProfile) -> Result<f64> {
    let (x, y) = aligned_values(user, reference)?;
    kendall_tau_b(&x, &y)
}

/// Kendall's tau-b with tie correction, computed in O(n log n) via merge-sort
/// discordance counting:
///
/// `tau_b = (nc - nd) / sqrt((n0 - n1) * (n0 - n2))`
///
/// where `n0` is the number of pairs, `n1`/`n2` the pairs tied in x/y, and
/// `nc`/`nd` the concordant/discordant pairs. A constant input leaves the
/// correlation undefined.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::MismatchedSupports);
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    if is_constant(x) || is_constant(y) {
        return Err(Error::ConstantInput);
    }

    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    // Tie bookkeeping over the x-sorted order.
    let mut tied_x: u64 = 0;
    let mut tied_xy: u64 = 0;
    let mut run_x: u64 = 1;
    let mut run_xy: u64 = 1;
    for w in pairs.windows(2) {
        let (prev, curr) = (w[0], w[1]);
        if curr.0.total_cmp(&prev.0).is_eq() {
            run_x += 1;
            if curr.1.total_cmp(&prev.1).is_eq() {
                run_xy += 1;
            } else {
                tied_xy += run_xy * (run_xy - 1) / 2;
                run_xy = 1;
            }
        } else {
            tied_x += run_x * (run_x - 1) / 2;
            run_x = 1;
            tied_xy += run_xy * (run_xy - 1) / 2;
            run_xy = 1;
        }
    }
    tied_x += run_x * (run_x - 1) / 2;
    tied_xy += run_xy * (run_xy - 1) / 2;

    let swaps = merge_sort_by_y(&mut pairs);

    let mut tied_y: u64 = 0;
    let mut run_y: u64 = 1;
    for w in pairs.windows(2) {
        if w[1].1.total_cmp(&w[0].1).is_eq() {
            run_y += 1;
        } else {
            tied_y += run_y * (run_y - 1) / 2;
            run_y = 1;
        }
    }
    tied_y += run_y * (run_y - 1) / 2;

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    Ok(tau_b_from_counts(n0, tied_x, tied_y, tied_xy, swaps))
}

/// Final tau-b arithmetic shared by the fast path and by test oracles:
/// `nc - nd = n0 - n1 - n2 + n3 - 2 * swaps`.
pub fn tau_b_from_counts(n0: u64, tied_x: u64, tied_y: u64, tied_xy: u64, swaps: u64) -> f64 {
    let numerator =
        n0 as i128 - tied_x as i128 - tied_y as i128 + tied_xy as i128 - 2 * swaps as i128;
    let denominator = ((n0 - tied_x) as f64) * ((n0 - tied_y) as f64);
    let tau = numerator as f64 / math::sqrt(denominator);
    tau.clamp(-1.0, 1.0)
}

fn is_constant(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0].total_cmp(&w[1]).is_eq())
}

/// Bottom-up merge sort on the y component, counting discordant swaps.
/// Equal y values are taken from the left run so ties are never counted.
fn merge_sort_by_y(pairs: &mut [(f64, f64)]) -> u64 {
    let n = pairs.len();
    let mut swaps: u64 = 0;
    let mut buffer: Vec<(f64, f64)> = alloc::vec![(0.0, 0.0); n];
    let mut width = 1;
    while width < n {
        let mut start = 0;
        while start < n {
            let mid = (start + width).min(n);
            let end = (start + 2 * width).min(n);
            let (mut i, mut j, mut k) = (start, mid, start);
            while i < mid || j < end {
                if i < mid && (j >= end || pairs[i].1.total_cmp(&pairs[j].1).is_le()) {
                    buffer[k] = pairs[i];
                    i += 1;
                } else {
                    buffer[k] = pairs[j];
                    j += 1;
                    swaps += (mid - i) as u64;
                }
                k += 1;
            }
            start = end;
        }
        pairs[..n].copy_from_slice(&buffer[..n]);
        width *= 2;
    }
    swaps
}

/// Per-user scores for all six measures. Absent entries mean the measure was
/// undefined for that user (constant rank vector, or no country).
#[derive(Debug, Clone, PartialEq)]
pub struct UserScores {
    pub user_id: UserId,
    pub country: Option<CountryCode>,
    pub scores: [Option<f64>; 6],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MainstreaminessTable {
    rows: Vec<UserScores>,
}

impl MainstreaminessTable {
    pub fn from_rows(rows: Vec<UserScores>) -> Self {
        MainstreaminessTable { rows }
    }

    pub fn rows(&self) -> &[UserScores] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// All defined `(user, score)` pairs for one measure, in row order.
    pub fn scores_for(&self, key: MeasureKey) -> Vec<(UserId, f64)> {
        let idx = key.index();
        self.rows
            .iter()
            .filter_map(|r| r.scores[idx].map(|s| (r.user_id, s)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComputeOptions {
    pub epsilon: f64,
    /// Remove the user's own contribution from the reference profile before
    /// comparing. Off by default.
    pub leave_one_out: bool,
}

impl Default for ComputeOptions {
    fn default() -> Self {
        ComputeOptions {
            epsilon: 1e-8,
            leave_one_out: false,
        }
    }
}

struct Reference {
    entries: Vec<(u32, f64)>,
}

impl Reference {
    fn from_profile(p: &PopularityProfile) -> Self {
        Reference {
            entries: p.nonzero(),
        }
    }
}

/// Merges a user's sparse row with a reference's sparse entries over the
/// union of their supports, returning aligned value vectors. With
/// `leave_one_out` the user's own contribution (identical in value for both
/// bases) is subtracted from the reference.
fn merge_with_reference(
    user_row: &[(u32, f64)],
    reference: &Reference,
    leave_one_out: bool,
) -> (Vec<f64>, Vec<f64>) {
    let cap = user_row.len() + reference.entries.len();
    let mut x = Vec::with_capacity(cap);
    let mut y = Vec::with_capacity(cap);
    let (mut i, mut j) = (0, 0);
    while i < user_row.len() || j < reference.entries.len() {
        let u = user_row.get(i);
        let r = reference.entries.get(j);
        match (u, r) {
            (Some(&(ui, uv)), Some(&(ri, rv))) => {
                if ui == ri {
                    let adj = if leave_one_out { rv - uv } else { rv };
                    x.push(uv);
                    y.push(adj.max(0.0));
                    i += 1;
                    j += 1;
                } else if ui < ri {
                    x.push(uv);
                    y.push(0.0);
                    i += 1;
                } else {
                    x.push(0.0);
                    y.push(rv);
                    j += 1;
                }
            }
            (Some(&(_, uv)), None) => {
                x.push(uv);
                y.push(0.0);
                i += 1;
            }
            (None, Some(&(_, rv))) => {
                x.push(0.0);
                y.push(rv);
                j += 1;
            }
            (None, None) => break,
        }
    }
    (x, y)
}

fn score_against(
    user_row: &[(u32, f64)],
    reference: &Reference,
    method: Method,
    opts: &ComputeOptions,
) -> Option<f64> {
    let (x, y) = merge_with_reference(user_row, reference, opts.leave_one_out);
    if x.is_empty() {
        return None;
    }
    match method {
        Method::Distribution => Some(distribution_from_values(&x, &y, opts.epsilon)),
        Method::Rank => match kendall_tau_b(&x, &y) {
            Ok(tau) => Some(tau),
            // Undefined correlations are recorded as absent, not fatal.
            Err(Error::ConstantInput) | Err(Error::InsufficientData { .. }) => None,
            Err(_) => None,
        },
    }
}

/// Computes all six measures for every user in the matrix. Country scope
/// always compares against the user's own country; users without a country
/// get no country-scope scores.
pub fn compute_table(
    matrix: &UserArtistMatrix,
    opts: &ComputeOptions,
) -> Result<MainstreaminessTable> {
    let global_apc = Reference::from_profile(&profile(matrix, Basis::Apc, Scope::Global)?);
    let global_alc = Reference::from_profile(&profile(matrix, Basis::Alc, Scope::Global)?);

    let cohorts = matrix.country_cohorts();
    let mut country_refs: alloc::collections::BTreeMap<CountryCode, (Reference, Reference)> =
        alloc::collections::BTreeMap::new();
    for &country in cohorts.keys() {
        let apc = profile(matrix, Basis::Apc, Scope::Country(country))?;
        let alc = profile(matrix, Basis::Alc, Scope::Country(country))?;
        country_refs.insert(
            country,
            (Reference::from_profile(&apc), Reference::from_profile(&alc)),
        );
    }

    let mut rows = Vec::with_capacity(matrix.n_users());
    for (i, rec) in matrix.users().iter().enumerate() {
        let apc_row: Vec<(u32, f64)> = matrix
            .row(i as u32)
            .iter()
            .map(|&(a, c)| (a, c as f64))
            .collect();
        let alc_row: Vec<(u32, f64)> = matrix
            .row(i as u32)
            .iter()
            .map(|&(a, _)| (a, 1.0))
            .collect();

        let country_ref = rec.country.and_then(|c| country_refs.get(&c));

        let mut scores: [Option<f64>; 6] = [None; 6];
        for key in MeasureKey::all() {
            let row = match key.basis() {
                Basis::Apc => &apc_row,
                Basis::Alc => &alc_row,
            };
            let reference = match key.scope() {
                MeasureScope::Global => Some(match key.basis() {
                    Basis::Apc => &global_apc,
                    Basis::Alc => &global_alc,
                }),
                MeasureScope::Country => country_ref.map(|(apc, alc)| match key.basis() {
                    Basis::Apc => apc,
                    Basis::Alc => alc,
                }),
            };
            scores[key.index()] = reference.and_then(|r| score_against(row, r, key.method(), opts));
        }
        rows.push(UserScores {
            user_id: rec.user_id,
            country: rec.country,
            scores,
        });
    }
    Ok(MainstreaminessTable { rows })
}
