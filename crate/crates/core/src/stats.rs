//! Descriptive statistics and the hypothesis tests used by the reports:
//! quartiles, skewness and excess kurtosis, Kruskal-Wallis, Kolmogorov-
//! Smirnov, intraclass correlation, and Cohen's d.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mainstreaminess::{MainstreaminessTable, MeasureKey};
use crate::math;
use crate::types::CountryCode;

/// Summary row: mean, sample sd, five-number summary, sample skewness (g1)
/// and excess kurtosis (g2). Quantiles interpolate linearly between the
/// closest order statistics. A constant sample reports skewness and kurtosis
/// of zero by convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescriptiveSummary {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub df: Option<f64>,
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n as f64 - 1.0) * p;
    let lo = math::floor(h) as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn describe(values: &[f64]) -> Result<DescriptiveSummary> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let nf = n as f64;
    // Moments are accumulated over the sorted sample so the summary is
    // bit-exactly permutation invariant.
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.total_cmp(b));

    let mean = sorted.iter().sum::<f64>() / nf;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for &v in &sorted {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let var_sample = m2 / (nf - 1.0);
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;

    let (skewness, kurtosis) = if m2 > 0.0 {
        (m3 / math::powf(m2, 1.5), m4 / (m2 * m2) - 3.0)
    } else {
        (0.0, 0.0)
    };

    Ok(DescriptiveSummary {
        mean,
        sd: math::sqrt(var_sample.max(0.0)),
        min: sorted[0],
        q1: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q3: quantile(&sorted, 0.75),
        max: sorted[n - 1],
        skewness,
        kurtosis,
    })
}

/// Average ranks of the pooled sample, plus the tie-run sizes.
fn average_ranks(values: &[f64]) -> (Vec<f64>, Vec<u64>) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = alloc::vec![0.0f64; n];
    let mut tie_sizes = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]].total_cmp(&values[order[i]]).is_eq() {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        let run = (j - i + 1) as u64;
        if run > 1 {
            tie_sizes.push(run);
        }
        i = j + 1;
    }
    (ranks, tie_sizes)
}

/// Kruskal-Wallis H with tie correction; p from the chi-square distribution
/// with k-1 degrees of freedom. A fully tied pooled sample yields H = 0,
/// p = 1.
pub fn kruskal_wallis(groups: &[&[f64]]) -> Result<TestResult> {
    let k = groups.len();
    if k < 2 {
        return Err(Error::InsufficientData { needed: 2, got: k });
    }
    if groups.iter().any(|g| g.is_empty()) {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let n: usize = groups.iter().map(|g| g.len()).sum();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }

    let pooled: Vec<f64> = groups.iter().flat_map(|g| g.iter().copied()).collect();
    let (ranks, tie_sizes) = average_ranks(&pooled);

    let nf = n as f64;
    let mut h = 0.0;
    let mut offset = 0;
    for g in groups {
        let rank_sum: f64 = ranks[offset..offset + g.len()].iter().sum();
        h += rank_sum * rank_sum / g.len() as f64;
        offset += g.len();
    }
    h = 12.0 / (nf * (nf + 1.0)) * h - 3.0 * (nf + 1.0);

    let tie_term: f64 = tie_sizes
        .iter()
        .map(|&t| (t * t * t - t) as f64)
        .sum::<f64>();
    let correction = 1.0 - tie_term / (nf * nf * nf - nf);
    let df = (k - 1) as f64;
    if correction <= 0.0 {
        // Every observation identical.
        return Ok(TestResult {
            statistic: 0.0,
            p_value: 1.0,
            df: Some(df),
        });
    }
    h /= correction;
    let h = h.max(0.0);
    Ok(TestResult {
        statistic: h,
        p_value: chi_square_sf(h, df),
        df: Some(df),
    })
}

/// One-sample Kolmogorov-Smirnov test against a normal distribution fitted
/// to the sample. The parameters being estimated biases the p-value upward
/// (Lilliefors effect); callers comparing against strict thresholds should
/// keep that in mind.
pub fn ks_test_normal(sample: &[f64]) -> Result<TestResult> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let nf = n as f64;
    let mean = sample.iter().sum::<f64>() / nf;
    let var = sample.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0);
    if var <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let sd = math::sqrt(var);

    let mut sorted = sample.to_vec();
    sorted.sort_unstable_by(|a, b| a.total_cmp(b));

    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let cdf = normal_cdf((x - mean) / sd);
        let above = (i as f64 + 1.0) / nf - cdf;
        let below = cdf - i as f64 / nf;
        d = d.max(above.max(below));
    }
    let sqrt_n = math::sqrt(nf);
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    Ok(TestResult {
        statistic: d,
        p_value: kolmogorov_sf(lambda),
        df: None,
    })
}

/// Two-sample Kolmogorov-Smirnov test: D is the supremum difference of the
/// two empirical CDFs.
pub fn ks_test_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_unstable_by(|p, q| p.total_cmp(q));
    ys.sort_unstable_by(|p, q| p.total_cmp(q));
    let (n1, n2) = (xs.len() as f64, ys.len() as f64);

    let mut d: f64 = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    while i < xs.len() || j < ys.len() {
        let next = match (xs.get(i), ys.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => break,
        };
        while i < xs.len() && xs[i].total_cmp(&next).is_le() {
            i += 1;
        }
        while j < ys.len() && ys[j].total_cmp(&next).is_le() {
            j += 1;
        }
        let diff = math::abs(i as f64 / n1 - j as f64 / n2);
        d = d.max(diff);
    }
    let ne = n1 * n2 / (n1 + n2);
    let sqrt_ne = math::sqrt(ne);
    let lambda = (sqrt_ne + 0.12 + 0.11 / sqrt_ne) * d;
    Ok(TestResult {
        statistic: d,
        p_value: kolmogorov_sf(lambda),
        df: None,
    })
}

/// Two-way mixed, consistency, average-measures intraclass correlation over
/// a runs × subjects matrix: (MS_subjects - MS_error) / MS_subjects.
/// Consistency ignores additive per-run offsets.
pub fn icc(runs: &[Vec<f64>]) -> Result<f64> {
    let k = runs.len();
    if k < 2 {
        return Err(Error::InsufficientData { needed: 2, got: k });
    }
    let n = runs[0].len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    if runs.iter().any(|r| r.len() != n) {
        return Err(Error::MismatchedSupports);
    }
    let kf = k as f64;
    let nf = n as f64;
    let grand = runs.iter().flat_map(|r| r.iter()).sum::<f64>() / (kf * nf);

    let mut ss_subjects = 0.0;
    for s in 0..n {
        let subj_mean = runs.iter().map(|r| r[s]).sum::<f64>() / kf;
        ss_subjects += (subj_mean - grand) * (subj_mean - grand);
    }
    ss_subjects *= kf;

    let mut ss_runs = 0.0;
    for r in runs {
        let run_mean = r.iter().sum::<f64>() / nf;
        ss_runs += (run_mean - grand) * (run_mean - grand);
    }
    ss_runs *= nf;

    let ss_total: f64 = runs
        .iter()
        .flat_map(|r| r.iter())
        .map(|&v| (v - grand) * (v - grand))
        .sum();
    let ss_error = (ss_total - ss_subjects - ss_runs).max(0.0);

    let ms_subjects = ss_subjects / (nf - 1.0);
    let ms_error = ss_error / ((nf - 1.0) * (kf - 1.0));
    if ms_subjects <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((ms_subjects - ms_error) / ms_subjects)
}

/// Standardized mean difference with an n-1-weighted pooled standard
/// deviation. Zero pooled spread is only acceptable when the means agree.
pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: a.len().min(b.len()),
        });
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let ss = |v: &[f64], m: f64| v.iter().map(|&x| (x - m) * (x - m)).sum::<f64>();
    let (ma, mb) = (mean(a), mean(b));
    let pooled_var = (ss(a, ma) + ss(b, mb)) / (a.len() + b.len() - 2) as f64;
    if pooled_var <= 0.0 {
        return if ma == mb {
            Ok(0.0)
        } else {
            Err(Error::ZeroVariance)
        };
    }
    Ok((ma - mb) / math::sqrt(pooled_var))
}

/// Per-country, per-measure descriptive statistics over a mainstreaminess
/// table, one Kruskal-Wallis test per measure across countries, and a pooled
/// total row. Absent scores are excluded measure by measure.
#[derive(Debug, Clone, PartialEq)]
pub struct CountryRow {
    pub country: CountryCode,
    pub n_users: usize,
    pub summaries: [Option<DescriptiveSummary>; 6],
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountryReport {
    pub rows: Vec<CountryRow>,
    pub total_users: usize,
    pub total_summaries: [Option<DescriptiveSummary>; 6],
    pub kruskal_wallis: [Option<TestResult>; 6],
}

pub fn country_report(table: &MainstreaminessTable) -> CountryReport {
    let mut by_country: BTreeMap<CountryCode, Vec<&crate::mainstreaminess::UserScores>> =
        BTreeMap::new();
    for row in table.rows() {
        if let Some(c) = row.country {
            by_country.entry(c).or_default().push(row);
        }
    }

    let mut rows = Vec::with_capacity(by_country.len());
    let mut groups: [Vec<Vec<f64>>; 6] = Default::default();
    for (&country, users) in &by_country {
        let mut summaries: [Option<DescriptiveSummary>; 6] = [None; 6];
        for key in MeasureKey::all() {
            let idx = key.index();
            let scores: Vec<f64> = users.iter().filter_map(|u| u.scores[idx]).collect();
            if !scores.is_empty() {
                summaries[idx] = describe(&scores).ok();
                groups[idx].push(scores);
            }
        }
        rows.push(CountryRow {
            country,
            n_users: users.len(),
            summaries,
        });
    }

    let mut total_summaries: [Option<DescriptiveSummary>; 6] = [None; 6];
    for key in MeasureKey::all() {
        let idx = key.index();
        let all: Vec<f64> = table.rows().iter().filter_map(|u| u.scores[idx]).collect();
        if !all.is_empty() {
            total_summaries[idx] = describe(&all).ok();
        }
    }

    let mut kw: [Option<TestResult>; 6] = [None; 6];
    for idx in 0..6 {
        if groups[idx].len() >= 2 {
            let refs: Vec<&[f64]> = groups[idx].iter().map(|g| g.as_slice()).collect();
            kw[idx] = kruskal_wallis(&refs).ok();
        }
    }

    CountryReport {
        rows,
        total_users: table.len(),
        total_summaries,
        kruskal_wallis: kw,
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * math::erfc(-z / math::sqrt(2.0))
}

/// Upper tail of the chi-square distribution via the regularized incomplete
/// gamma function Q(df/2, x/2).
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    regularized_gamma_q(df / 2.0, x / 2.0).clamp(0.0, 1.0)
}

fn regularized_gamma_q(a: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_cont_fraction(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..600 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if math::abs(del) < math::abs(sum) * 1e-16 {
            break;
        }
    }
    sum * math::exp(-x + a * math::ln(x) - math::ln_gamma(a))
}

fn gamma_q_cont_fraction(a: f64, x: f64) -> f64 {
    const FPMIN: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..600 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if math::abs(d) < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if math::abs(c) < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if math::abs(del - 1.0) < 1e-16 {
            break;
        }
    }
    math::exp(-x + a * math::ln(x) - math::ln_gamma(a)) * h
}

/// Asymptotic Kolmogorov survival function
/// `Q(lambda) = 2 * sum_j (-1)^(j-1) exp(-2 j^2 lambda^2)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let a2 = -2.0 * lambda * lambda;
    let mut fac = 2.0;
    let mut sum = 0.0;
    let mut term_bf = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = fac * math::exp(a2 * jf * jf);
        sum += term;
        if math::abs(term) <= 0.001 * term_bf || math::abs(term) <= 1e-10 * math::abs(sum) {
            return sum.clamp(0.0, 1.0);
        }
        fac = -fac;
        term_bf = math::abs(term);
    }
    1.0
}
