//! Country-specific popularity outliers.
//!
//! Two detectors run along the global popularity rank order:
//!
//! * sliding window — an artist's country value is compared to the mean of
//!   its window (the artist plus its successors in global rank order);
//! * global difference — the country value is compared to the globally
//!   derived value rescaled to the country's range.
//!
//! In both cases the signed relative difference in percent decides: at least
//! +100% marks a positive outlier, at most -50% (the value no more than half
//! the baseline) a negative one.

use alloc::vec::Vec;

use crate::popularity::PopularityProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detector {
    SlidingWindow,
    GlobalDifference,
}

impl Detector {
    pub fn as_str(&self) -> &'static str {
        match self {
            Detector::SlidingWindow => "sliding_window",
            Detector::GlobalDifference => "global_difference",
        }
    }
}

/// One detected outlier. `global_rank` is 1-based in the global popularity
/// order. Whichever detector produced the record fills its own percentage;
/// [`outlier_report`] fills both.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutlierRecord {
    pub artist_index: u32,
    pub global_rank: usize,
    pub sliding_pct: Option<f64>,
    pub global_diff_pct: Option<f64>,
    pub polarity: Polarity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowParams {
    /// Number of artists per window, the anchor artist included.
    pub window: usize,
    /// Positive threshold in percent (inclusive).
    pub pos_thresh: f64,
    /// Negative threshold in percent (inclusive, negative number).
    pub neg_thresh: f64,
    /// How far down the global rank order to look.
    pub horizon: usize,
    /// Include the anchor artist in the window mean. The alternative
    /// (successors only) is exposed for comparison runs.
    pub include_self: bool,
}

impl Default for WindowParams {
    fn default() -> Self {
        WindowParams {
            window: 5,
            pos_thresh: 100.0,
            neg_thresh: -50.0,
            horizon: 10_000,
            include_self: true,
        }
    }
}

fn classify(pct: f64, pos_thresh: f64, neg_thresh: f64) -> Option<Polarity> {
    if pct >= pos_thresh {
        Some(Polarity::Positive)
    } else if pct <= neg_thresh {
        Some(Polarity::Negative)
    } else {
        None
    }
}

/// Signed percent deviation of each in-horizon artist's country value from
/// the mean of its window. `None` where the window mean is zero or the full
/// window no longer fits.
pub fn sliding_deviations(
    country: &PopularityProfile,
    rank_order: &[u32],
    params: &WindowParams,
) -> Vec<Option<f64>> {
    let horizon = params.horizon.min(rank_order.len());
    let values: Vec<f64> = rank_order.iter().map(|&i| country.value(i)).collect();
    let mut out = Vec::with_capacity(horizon);
    for pos in 0..horizon {
        let (start, end) = if params.include_self {
            (pos, pos + params.window)
        } else {
            (pos + 1, pos + 1 + params.window)
        };
        if end > values.len() {
            out.push(None);
            continue;
        }
        let mean = values[start..end].iter().sum::<f64>() / params.window as f64;
        if mean == 0.0 {
            out.push(None);
        } else {
            out.push(Some(100.0 * (values[pos] - mean) / mean));
        }
    }
    out
}

/// Signed percent deviation of each in-horizon artist's country value from
/// its rescaled global value. `None` where the scaled value is zero.
pub fn global_difference_deviations(
    country: &PopularityProfile,
    scaled_global: &PopularityProfile,
    rank_order: &[u32],
    horizon: usize,
) -> Vec<Option<f64>> {
    let horizon = horizon.min(rank_order.len());
    rank_order[..horizon]
        .iter()
        .map(|&idx| {
            let scaled = scaled_global.value(idx);
            if scaled == 0.0 {
                None
            } else {
                Some(100.0 * (country.value(idx) - scaled) / scaled)
            }
        })
        .collect()
}

fn records_from(
    deviations: &[Option<f64>],
    rank_order: &[u32],
    pos_thresh: f64,
    neg_thresh: f64,
    detector: Detector,
) -> Vec<OutlierRecord> {
    deviations
        .iter()
        .enumerate()
        .filter_map(|(pos, &dev)| {
            let pct = dev?;
            let polarity = classify(pct, pos_thresh, neg_thresh)?;
            let (sliding_pct, global_diff_pct) = match detector {
                Detector::SlidingWindow => (Some(pct), None),
                Detector::GlobalDifference => (None, Some(pct)),
            };
            Some(OutlierRecord {
                artist_index: rank_order[pos],
                global_rank: pos + 1,
                sliding_pct,
                global_diff_pct,
                polarity,
            })
        })
        .collect()
}

/// Sliding-window outlier detection along the global rank order. Output is
/// sorted by global rank.
pub fn sliding_window_outliers(
    country: &PopularityProfile,
    rank_order: &[u32],
    params: &WindowParams,
) -> Vec<OutlierRecord> {
    let deviations = sliding_deviations(country, rank_order, params);
    records_from(
        &deviations,
        rank_order,
        params.pos_thresh,
        params.neg_thresh,
        Detector::SlidingWindow,
    )
}

/// Global-difference outlier detection: country values against the rescaled
/// global profile. Output is sorted by global rank.
pub fn global_difference_outliers(
    country: &PopularityProfile,
    scaled_global: &PopularityProfile,
    rank_order: &[u32],
    pos_thresh: f64,
    neg_thresh: f64,
    horizon: usize,
) -> Vec<OutlierRecord> {
    let deviations = global_difference_deviations(country, scaled_global, rank_order, horizon);
    records_from(
        &deviations,
        rank_order,
        pos_thresh,
        neg_thresh,
        Detector::GlobalDifference,
    )
}

/// Both detectors over one country, each record annotated with both
/// percentage columns so the two views can be printed side by side.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutlierReport {
    pub sliding: Vec<OutlierRecord>,
    pub global_diff: Vec<OutlierRecord>,
}

pub fn outlier_report(
    country: &PopularityProfile,
    scaled_global: &PopularityProfile,
    rank_order: &[u32],
    params: &WindowParams,
) -> OutlierReport {
    let sliding_dev = sliding_deviations(country, rank_order, params);
    let global_dev =
        global_difference_deviations(country, scaled_global, rank_order, params.horizon);

    let annotate = |mut records: Vec<OutlierRecord>| -> Vec<OutlierRecord> {
        for r in &mut records {
            let pos = r.global_rank - 1;
            r.sliding_pct = r
                .sliding_pct
                .or_else(|| sliding_dev.get(pos).copied().flatten());
            r.global_diff_pct = r
                .global_diff_pct
                .or_else(|| global_dev.get(pos).copied().flatten());
        }
        records
    };

    OutlierReport {
        sliding: annotate(records_from(
            &sliding_dev,
            rank_order,
            params.pos_thresh,
            params.neg_thresh,
            Detector::SlidingWindow,
        )),
        global_diff: annotate(records_from(
            &global_dev,
            rank_order,
            params.pos_thresh,
            params.neg_thresh,
            Detector::GlobalDifference,
        )),
    }
}

/// The `n` most extreme positive and negative records by the triggering
/// percentage, each returned in global-rank order.
pub fn most_extreme(
    records: &[OutlierRecord],
    detector: Detector,
    n: usize,
) -> (Vec<OutlierRecord>, Vec<OutlierRecord>) {
    let pct = |r: &OutlierRecord| match detector {
        Detector::SlidingWindow => r.sliding_pct.unwrap_or(0.0),
        Detector::GlobalDifference => r.global_diff_pct.unwrap_or(0.0),
    };
    let mut positive: Vec<OutlierRecord> = records
        .iter()
        .copied()
        .filter(|r| r.polarity == Polarity::Positive)
        .collect();
    let mut negative: Vec<OutlierRecord> = records
        .iter()
        .copied()
        .filter(|r| r.polarity == Polarity::Negative)
        .collect();
    positive.sort_by(|a, b| {
        pct(b)
            .total_cmp(&pct(a))
            .then(a.global_rank.cmp(&b.global_rank))
    });
    negative.sort_by(|a, b| {
        pct(a)
            .total_cmp(&pct(b))
            .then(a.global_rank.cmp(&b.global_rank))
    });
    positive.truncate(n);
    negative.truncate(n);
    positive.sort_by_key(|r| r.global_rank);
    negative.sort_by_key(|r| r.global_rank);
    (positive, negative)
}
