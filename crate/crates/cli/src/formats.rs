//! CSV and TSV renderings of the pipeline artifacts.
//!
//! Floats are written with Rust's shortest round-trip formatting, so files
//! are byte-stable across runs and lossless to parse back. All outputs are
//! UTF-8 with `\n` line endings.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use mainstreamlab_core::mainstreaminess::{MainstreaminessTable, MeasureKey, UserScores};
use mainstreamlab_core::matrix::UserArtistMatrix;
use mainstreamlab_core::outliers::{Detector, OutlierRecord};
use mainstreamlab_core::popularity::PlotRow;
use mainstreamlab_core::stats::{CountryReport, DescriptiveSummary, TestResult};
use mainstreamlab_core::{ArtistId, CountryCode, UserId};

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub const MEASURE_COLUMNS: &str =
    "M_D_APC_global,M_D_APC_country,M_D_ALC_global,M_D_ALC_country,M_R_APC_global,M_R_APC_country";

/// `user_id,country,<six measure columns>`; absent scores are empty cells.
pub fn mainstreaminess_csv(table: &MainstreaminessTable) -> String {
    let mut out = String::with_capacity(table.len() * 64 + 64);
    out.push_str("user_id,country,");
    out.push_str(MEASURE_COLUMNS);
    out.push('\n');
    for row in table.rows() {
        out.push_str(&row.user_id.to_string());
        out.push(',');
        if let Some(c) = row.country {
            out.push_str(c.as_str());
        }
        for score in row.scores {
            out.push(',');
            out.push_str(&fmt_opt(score));
        }
        out.push('\n');
    }
    out
}

pub fn parse_mainstreaminess_csv(text: &str) -> Result<MainstreaminessTable> {
    let mut rows = Vec::new();
    let mut lines = text.lines();
    let header = lines.next().context("empty mainstreaminess file")?;
    let expected = format!("user_id,country,{MEASURE_COLUMNS}");
    if header != expected {
        bail!("unexpected mainstreaminess header: {header:?}");
    }
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            bail!("line {}: expected 8 fields, got {}", idx + 2, fields.len());
        }
        let user_id = UserId(fields[0].parse().context("bad user id")?);
        let country = if fields[1].is_empty() {
            None
        } else {
            CountryCode::parse(fields[1])
        };
        let mut scores = [None; 6];
        for (i, slot) in scores.iter_mut().enumerate() {
            let cell = fields[2 + i];
            if !cell.is_empty() {
                *slot = Some(cell.parse().context("bad score")?);
            }
        }
        rows.push(UserScores {
            user_id,
            country,
            scores,
        });
    }
    Ok(MainstreaminessTable::from_rows(rows))
}

pub fn plot_csv(rows: &[PlotRow]) -> String {
    let mut out = String::from("global_rank,artist_id,country_value,scaled_global_value\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.global_rank,
            r.artist_id,
            fmt_f64(r.country_value),
            fmt_f64(r.scaled_global_value)
        ));
    }
    out
}

pub fn ranked_csv(ranked: &[(ArtistId, f64)]) -> String {
    let mut out = String::from("global_rank,artist_id,value\n");
    for (pos, (artist, value)) in ranked.iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", pos + 1, artist, fmt_f64(*value)));
    }
    out
}

/// Overall descriptive statistics, one row per measure.
pub fn overall_stats_csv(summaries: &[Option<DescriptiveSummary>; 6]) -> String {
    let mut out = String::from("measure,mean,sd,min,q1,median,q3,max,skewness,kurtosis\n");
    for key in MeasureKey::all() {
        out.push_str(key.label());
        match &summaries[key.index()] {
            Some(s) => out.push_str(&format!(
                ",{},{},{},{},{},{},{},{},{}\n",
                fmt_f64(s.mean),
                fmt_f64(s.sd),
                fmt_f64(s.min),
                fmt_f64(s.q1),
                fmt_f64(s.median),
                fmt_f64(s.q3),
                fmt_f64(s.max),
                fmt_f64(s.skewness),
                fmt_f64(s.kurtosis)
            )),
            None => out.push_str(",,,,,,,,,\n"),
        }
    }
    out
}

/// Per-country mean/sd pairs per measure, plus a pooled total row.
pub fn country_stats_csv(report: &CountryReport) -> String {
    let mut out = String::from("country,n_users");
    for key in MeasureKey::all() {
        out.push_str(&format!(",{label}_mean,{label}_sd", label = key.label()));
    }
    out.push('\n');
    let mut push_row = |name: &str, n_users: usize, summaries: &[Option<DescriptiveSummary>; 6]| {
        out.push_str(&format!("{name},{n_users}"));
        for s in summaries {
            match s {
                Some(s) => out.push_str(&format!(",{},{}", fmt_f64(s.mean), fmt_f64(s.sd))),
                None => out.push_str(",,"),
            }
        }
        out.push('\n');
    };
    for row in &report.rows {
        push_row(row.country.as_str(), row.n_users, &row.summaries);
    }
    push_row("Total", report.total_users, &report.total_summaries);
    out
}

pub fn kruskal_wallis_csv(tests: &[Option<TestResult>; 6]) -> String {
    let mut out = String::from("measure,h,df,p\n");
    for key in MeasureKey::all() {
        match &tests[key.index()] {
            Some(t) => out.push_str(&format!(
                "{},{},{},{}\n",
                key.label(),
                fmt_f64(t.statistic),
                fmt_opt(t.df),
                fmt_f64(t.p_value)
            )),
            None => out.push_str(&format!("{},,,\n", key.label())),
        }
    }
    out
}

pub fn normality_csv(tests: &[Option<TestResult>; 6]) -> String {
    let mut out = String::from("measure,d,p\n");
    for key in MeasureKey::all() {
        match &tests[key.index()] {
            Some(t) => out.push_str(&format!(
                "{},{},{}\n",
                key.label(),
                fmt_f64(t.statistic),
                fmt_f64(t.p_value)
            )),
            None => out.push_str(&format!("{},,\n", key.label())),
        }
    }
    out
}

/// `artist_id,global_rank,sliding_pct,global_diff_pct,polarity,detector`,
/// sorted by global rank within each detector block.
pub fn outliers_csv(
    matrix: &UserArtistMatrix,
    sliding: &[OutlierRecord],
    global_diff: &[OutlierRecord],
) -> String {
    let mut out =
        String::from("artist_id,global_rank,sliding_pct,global_diff_pct,polarity,detector\n");
    let mut push = |records: &[OutlierRecord], detector: Detector| {
        for r in records {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                matrix.artists()[r.artist_index as usize],
                r.global_rank,
                fmt_opt(r.sliding_pct),
                fmt_opt(r.global_diff_pct),
                r.polarity.as_str(),
                detector.as_str()
            ));
        }
    };
    push(sliding, Detector::SlidingWindow);
    push(global_diff, Detector::GlobalDifference);
    out
}

pub fn clusters_csv(countries: &[CountryCode], labels: &[usize], exemplars: &[usize]) -> String {
    let mut out = String::from("country,cluster_id,is_exemplar\n");
    for (i, country) in countries.iter().enumerate() {
        let is_exemplar = exemplars.get(labels[i]) == Some(&i);
        out.push_str(&format!(
            "{},{},{}\n",
            country,
            labels[i],
            if is_exemplar { "true" } else { "false" }
        ));
    }
    out
}

/// One rating-prediction experiment, as serialized to JSON and the summary
/// CSV. `measure` is `baseline` for the unfiltered run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalRow {
    pub measure: String,
    pub scope: Option<String>,
    pub basis: Option<String>,
    pub method: Option<String>,
    pub country: Option<String>,
    pub user_set: String,
    pub folds: Vec<FoldRow>,
    pub rmse_mean: f64,
    pub mae_mean: f64,
    pub n_users: usize,
    pub n_test: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FoldRow {
    pub rmse: f64,
    pub mae: f64,
}

pub fn eval_report_json(row: &EvalRow) -> String {
    let mut json = serde_json::to_string_pretty(row).expect("eval row serializes");
    json.push('\n');
    json
}

pub fn eval_summary_csv(rows: &[EvalRow]) -> String {
    let mut out =
        String::from("measure,scope,basis,method,country,user_set,n_users,n_test,rmse,mae\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.measure,
            r.scope.as_deref().unwrap_or(""),
            r.basis.as_deref().unwrap_or(""),
            r.method.as_deref().unwrap_or(""),
            r.country.as_deref().unwrap_or(""),
            r.user_set,
            r.n_users,
            r.n_test,
            fmt_f64(r.rmse_mean),
            fmt_f64(r.mae_mean)
        ));
    }
    out
}

pub fn parse_eval_summary_csv(text: &str) -> Result<Vec<EvalRow>> {
    let mut rows = Vec::new();
    let mut lines = text.lines();
    let header = lines.next().context("empty eval summary")?;
    if header != "measure,scope,basis,method,country,user_set,n_users,n_test,rmse,mae" {
        bail!("unexpected eval summary header: {header:?}");
    }
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            bail!("line {}: expected 10 fields", idx + 2);
        }
        let opt = |s: &str| {
            if s.is_empty() {
                None
            } else {
                Some(s.to_string())
            }
        };
        rows.push(EvalRow {
            measure: f[0].to_string(),
            scope: opt(f[1]),
            basis: opt(f[2]),
            method: opt(f[3]),
            country: opt(f[4]),
            user_set: f[5].to_string(),
            folds: Vec::new(),
            rmse_mean: f[8].parse().context("bad rmse")?,
            mae_mean: f[9].parse().context("bad mae")?,
            n_users: f[6].parse().context("bad n_users")?,
            n_test: f[7].parse().context("bad n_test")?,
        });
    }
    Ok(rows)
}

/// Post-filter matrix re-serialized as ingestable TSV inputs.
pub fn matrix_tsv(matrix: &UserArtistMatrix) -> String {
    let mut out = String::new();
    for (i, _) in matrix.users().iter().enumerate() {
        let user = matrix.users()[i].user_id;
        for &(artist_idx, count) in matrix.row(i as u32) {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                user,
                matrix.artists()[artist_idx as usize],
                count
            ));
        }
    }
    out
}

pub fn users_tsv(matrix: &UserArtistMatrix) -> String {
    let mut out = String::new();
    for rec in matrix.users() {
        match rec.country {
            Some(c) => out.push_str(&format!("{}\t{}\n", rec.user_id, c)),
            None => out.push_str(&format!("{}\t\n", rec.user_id)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mainstreaminess_round_trip() {
        let rows = vec![
            UserScores {
                user_id: UserId(3),
                country: CountryCode::parse("FI"),
                scores: [
                    Some(0.25),
                    Some(0.5),
                    None,
                    Some(1.0 / 3.0),
                    Some(-0.125),
                    None,
                ],
            },
            UserScores {
                user_id: UserId(9),
                country: None,
                scores: [None; 6],
            },
        ];
        let table = MainstreaminessTable::from_rows(rows);
        let csv = mainstreaminess_csv(&table);
        let parsed = parse_mainstreaminess_csv(&csv).unwrap();
        assert_eq!(parsed, table);
    }

    #[test]
    fn eval_summary_round_trip() {
        let rows = vec![EvalRow {
            measure: "M_R_APC_country".into(),
            scope: Some("country".into()),
            basis: Some("APC".into()),
            method: Some("rank".into()),
            country: Some("FI".into()),
            user_set: "low".into(),
            folds: Vec::new(),
            rmse_mean: 0.123456789,
            mae_mean: 0.1,
            n_users: 42,
            n_test: 99,
        }];
        let csv = eval_summary_csv(&rows);
        let parsed = parse_eval_summary_csv(&csv).unwrap();
        assert_eq!(parsed, rows);
    }

    #[test]
    fn float_formatting_round_trips() {
        for v in [0.1, 1.0 / 3.0, 218.137, 1e-8, -50.0] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }
}
