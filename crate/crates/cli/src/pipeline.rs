//! Stage implementations behind the CLI subcommands.
//!
//! Every stage reads TSV inputs (or prior-stage artifacts), writes its CSV
//! and JSON outputs plus a `manifest.json` into the output directory, and is
//! fully deterministic given the resolved configuration.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

use mainstreamlab_core::clustering::{
    affinity_propagation, country_features, similarity_matrix, ApParams,
};
use mainstreamlab_core::mainstreaminess::{
    compute_table, ComputeOptions, MainstreaminessTable, MeasureKey, MeasureScope, Method,
};
use mainstreamlab_core::matrix::{
    build_matrix, filter_by_country_support, normalize_per_user, parse_events, parse_users,
    NormalizedMatrix, UserArtistMatrix,
};
use mainstreamlab_core::outliers::{most_extreme, outlier_report, Detector, WindowParams};
use mainstreamlab_core::popularity::{
    global_rank_order, plot_data, profile, scale_global_to_country, top_k, Basis, Scope,
};
use mainstreamlab_core::recsys::{
    run_experiment, validation_suite, ColdRule, EvalConfig, ExperimentSpec, MfConfig, RatingMode,
    UserSet, ValidationParams,
};
use mainstreamlab_core::stats::{country_report, ks_test_normal, CountryReport, TestResult};
use mainstreamlab_core::CountryCode;

use crate::config::RunConfig;
use crate::formats;
use crate::manifest::{Manifest, StageWriter};

pub fn parse_basis(value: &str) -> Result<Basis> {
    match value.to_ascii_lowercase().as_str() {
        "apc" => Ok(Basis::Apc),
        "alc" => Ok(Basis::Alc),
        other => bail!("unknown basis {other:?}; expected apc or alc"),
    }
}

fn parse_method(value: &str) -> Result<Method> {
    match value.to_ascii_lowercase().as_str() {
        "distribution" => Ok(Method::Distribution),
        "rank" => Ok(Method::Rank),
        other => bail!("unknown method {other:?}; expected distribution or rank"),
    }
}

fn parse_scope(value: &str) -> Result<MeasureScope> {
    match value.to_ascii_lowercase().as_str() {
        "global" => Ok(MeasureScope::Global),
        "country" => Ok(MeasureScope::Country),
        other => bail!("unknown scope {other:?}; expected global or country"),
    }
}

fn parse_country(value: &str) -> Result<CountryCode> {
    CountryCode::parse(value.trim())
        .ok_or_else(|| anyhow!("invalid country code {value:?}; expected two uppercase letters"))
}

fn parse_user_set(value: &str) -> Result<UserSet> {
    match value.to_ascii_lowercase().as_str() {
        "low" => Ok(UserSet::Low),
        "mid" => Ok(UserSet::Mid),
        "high" => Ok(UserSet::High),
        "all" => Ok(UserSet::All),
        other => bail!("unknown user set {other:?}; expected low, mid, high, or all"),
    }
}

pub struct Inputs<'a> {
    pub events: &'a Path,
    pub users: &'a Path,
}

pub struct LoadedData {
    pub raw: UserArtistMatrix,
    pub normalized: NormalizedMatrix,
    pub pre_filter_users: usize,
    pub dropped_unknown_users: u64,
    pub users_without_events: u64,
}

/// Parses both inputs, builds the matrix, applies the country-support
/// filter, and normalizes per user.
pub fn load(inputs: &Inputs, cfg: &RunConfig) -> Result<LoadedData> {
    let users_text = fs::read_to_string(inputs.users)
        .with_context(|| format!("cannot read users file {}", inputs.users.display()))?;
    let events_text = fs::read_to_string(inputs.events)
        .with_context(|| format!("cannot read events file {}", inputs.events.display()))?;
    let users = parse_users(&users_text)?;
    let triples = parse_events(&events_text)?;
    let outcome = build_matrix(&triples, &users);
    let pre_filter_users = outcome.matrix.n_users();
    let filtered = filter_by_country_support(&outcome.matrix, cfg.min_country_users)?;
    let normalized = normalize_per_user(&filtered)?;
    Ok(LoadedData {
        raw: filtered,
        normalized,
        pre_filter_users,
        dropped_unknown_users: outcome.dropped_unknown_users,
        users_without_events: outcome.users_without_events,
    })
}

#[derive(Serialize)]
struct IngestStats {
    n_users: usize,
    n_countries: usize,
    n_artists: usize,
    total_playcount: u64,
    pre_filter_users: usize,
    dropped_unknown_users: u64,
    users_without_events: u64,
}

/// Parse, filter, and re-serialize the matrix as ingestable TSVs plus a
/// stats file. Later stages accept `matrix.tsv`/`users.tsv` as inputs.
pub fn cmd_ingest(inputs: &Inputs, cfg: &RunConfig, out: &Path) -> Result<()> {
    let data = load(inputs, cfg)?;
    let mut writer = StageWriter::new(out)?;
    writer.write("matrix.tsv", &formats::matrix_tsv(&data.raw))?;
    writer.write("users.tsv", &formats::users_tsv(&data.raw))?;
    let stats = IngestStats {
        n_users: data.raw.n_users(),
        n_countries: data.raw.country_cohorts().len(),
        n_artists: data.raw.n_artists(),
        total_playcount: data.raw.total_playcount(),
        pre_filter_users: data.pre_filter_users,
        dropped_unknown_users: data.dropped_unknown_users,
        users_without_events: data.users_without_events,
    };
    let mut json = serde_json::to_string_pretty(&stats)?;
    json.push('\n');
    writer.write("ingest_stats.json", &json)?;
    writer.write_manifest(&Manifest::new(
        "ingest",
        cfg,
        &[inputs.events, inputs.users],
    )?)?;
    writer.commit();
    Ok(())
}

/// Ranked global popularity lists and, per country, popularity-plot data
/// with the rescaled global curve.
pub fn cmd_popularity(inputs: &Inputs, cfg: &RunConfig, out: &Path) -> Result<()> {
    let data = load(inputs, cfg)?;
    let basis_str = cfg.basis.clone().unwrap_or_else(|| "apc".into());
    let basis = parse_basis(&basis_str)?;
    let global = profile(&data.raw, basis, Scope::Global)?;
    if cfg.horizon > data.raw.n_artists() {
        eprintln!(
            "warning: horizon {} exceeds artist count {}; truncating",
            cfg.horizon,
            data.raw.n_artists()
        );
    }
    let ranked = top_k(&global, data.raw.artists(), cfg.horizon);
    let mut writer = StageWriter::new(out)?;
    writer.write(
        &format!("ranked_{}.csv", basis_str.to_ascii_lowercase()),
        &formats::ranked_csv(&ranked),
    )?;

    if let Some(code) = &cfg.country {
        let country = parse_country(code)?;
        let country_profile = profile(&data.raw, basis, Scope::Country(country))?;
        let scaled = scale_global_to_country(&global, &country_profile)?;
        let order = global_rank_order(&global, cfg.horizon);
        let rows = plot_data(&country_profile, &scaled, &order, data.raw.artists());
        writer.write(
            &format!("plot_{}_{}.csv", country, basis_str.to_ascii_lowercase()),
            &formats::plot_csv(&rows),
        )?;
    }
    writer.write_manifest(&Manifest::new(
        "popularity",
        cfg,
        &[inputs.events, inputs.users],
    )?)?;
    writer.commit();
    Ok(())
}

/// The per-user table of all six mainstreaminess measures.
pub fn cmd_measures(inputs: &Inputs, cfg: &RunConfig, out: &Path) -> Result<()> {
    let data = load(inputs, cfg)?;
    let table = compute_table(
        &data.raw,
        &ComputeOptions {
            epsilon: cfg.epsilon,
            leave_one_out: cfg.leave_one_out,
        },
    )?;
    let mut writer = StageWriter::new(out)?;
    writer.write("mainstreaminess.csv", &formats::mainstreaminess_csv(&table))?;
    writer.write_manifest(&Manifest::new(
        "measures",
        cfg,
        &[inputs.events, inputs.users],
    )?)?;
    writer.commit();
    Ok(())
}

/// Finds a stage artifact either directly in `dir` or in one of its
/// immediate subdirectories (stage output directories), searched in sorted
/// order.
fn find_artifact(dir: &Path, name: &str) -> Option<std::path::PathBuf> {
    let direct = dir.join(name);
    if direct.is_file() {
        return Some(direct);
    }
    let mut subdirs: Vec<std::path::PathBuf> = fs::read_dir(dir)
        .ok()?
        .flatten()
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    subdirs
        .into_iter()
        .map(|d| d.join(name))
        .find(|p| p.is_file())
}

fn artifact_label(artifacts: &Path, path: &Path) -> String {
    path.strip_prefix(artifacts)
        .unwrap_or(path)
        .display()
        .to_string()
}

fn table_from_artifacts(artifacts: &Path) -> Result<(MainstreaminessTable, std::path::PathBuf)> {
    let path = find_artifact(artifacts, "mainstreaminess.csv").ok_or_else(|| {
        anyhow!(
            "no mainstreaminess.csv under {}; run the measures stage first",
            artifacts.display()
        )
    })?;
    let text =
        fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok((formats::parse_mainstreaminess_csv(&text)?, path))
}

fn stats_outputs(
    report: &CountryReport,
    table: &MainstreaminessTable,
    writer: &mut StageWriter,
) -> Result<()> {
    writer.write(
        "overall_stats.csv",
        &formats::overall_stats_csv(&report.total_summaries),
    )?;
    writer.write("country_stats.csv", &formats::country_stats_csv(report))?;
    writer.write(
        "kruskal_wallis.csv",
        &formats::kruskal_wallis_csv(&report.kruskal_wallis),
    )?;

    let mut normality: [Option<TestResult>; 6] = [None; 6];
    for key in MeasureKey::all() {
        let scores: Vec<f64> = table
            .rows()
            .iter()
            .filter_map(|r| r.scores[key.index()])
            .collect();
        if scores.len() >= 2 {
            normality[key.index()] = ks_test_normal(&scores).ok();
        }
    }
    writer.write("normality.csv", &formats::normality_csv(&normality))?;
    Ok(())
}

/// Descriptive statistics per measure and per country, Kruskal-Wallis across
/// countries, and a normality check per measure. Reads a prior `measures`
/// stage when `--artifacts` points at one, otherwise recomputes.
pub fn cmd_stats(
    inputs: Option<&Inputs>,
    artifacts: Option<&Path>,
    cfg: &RunConfig,
    out: &Path,
) -> Result<()> {
    let (table, manifest) = match (artifacts, inputs) {
        (Some(dir), _) => {
            let (table, input_path) = table_from_artifacts(dir)?;
            let labeled = vec![(artifact_label(dir, &input_path), input_path.as_path())];
            (
                table,
                Manifest::with_labeled_inputs("stats", cfg, &labeled)?,
            )
        }
        (None, Some(inputs)) => {
            let data = load(inputs, cfg)?;
            let table = compute_table(
                &data.raw,
                &ComputeOptions {
                    epsilon: cfg.epsilon,
                    leave_one_out: cfg.leave_one_out,
                },
            )?;
            (
                table,
                Manifest::new("stats", cfg, &[inputs.events, inputs.users])?,
            )
        }
        (None, None) => bail!("stats needs --events/--users or --artifacts"),
    };
    let report = country_report(&table);
    let mut writer = StageWriter::new(out)?;
    stats_outputs(&report, &table, &mut writer)?;
    writer.write_manifest(&manifest)?;
    writer.commit();
    Ok(())
}

/// Sliding-window and global-difference outliers for one country.
pub fn cmd_outliers(inputs: &Inputs, cfg: &RunConfig, out: &Path) -> Result<()> {
    let code = cfg
        .country
        .as_deref()
        .ok_or_else(|| anyhow!("outliers needs --country"))?;
    let country = parse_country(code)?;
    let basis_str = cfg.basis.clone().unwrap_or_else(|| "apc".into());
    let basis = parse_basis(&basis_str)?;
    let data = load(inputs, cfg)?;

    let global = profile(&data.raw, basis, Scope::Global)?;
    let country_profile = profile(&data.raw, basis, Scope::Country(country))?;
    let scaled = scale_global_to_country(&global, &country_profile)?;
    if cfg.horizon > data.raw.n_artists() {
        eprintln!(
            "warning: horizon {} exceeds artist count {}; truncating",
            cfg.horizon,
            data.raw.n_artists()
        );
    }
    let order = global_rank_order(&global, cfg.horizon);
    let params = WindowParams {
        window: cfg.window,
        pos_thresh: cfg.pos_thresh,
        neg_thresh: cfg.neg_thresh,
        horizon: cfg.horizon,
        include_self: !cfg.exclude_self,
    };
    let report = outlier_report(&country_profile, &scaled, &order, &params);
    let (sliding, global_diff) = match cfg.top_n {
        Some(n) => {
            let (pos_s, neg_s) = most_extreme(&report.sliding, Detector::SlidingWindow, n);
            let mut sliding = pos_s;
            sliding.extend(neg_s);
            sliding.sort_by_key(|r| r.global_rank);
            let (pos_g, neg_g) = most_extreme(&report.global_diff, Detector::GlobalDifference, n);
            let mut global_diff = pos_g;
            global_diff.extend(neg_g);
            global_diff.sort_by_key(|r| r.global_rank);
            (sliding, global_diff)
        }
        None => (report.sliding, report.global_diff),
    };

    let mut writer = StageWriter::new(out)?;
    writer.write(
        &format!(
            "outliers_{}_{}.csv",
            country,
            basis_str.to_ascii_lowercase()
        ),
        &formats::outliers_csv(&data.raw, &sliding, &global_diff),
    )?;
    writer.write_manifest(&Manifest::new(
        "outliers",
        cfg,
        &[inputs.events, inputs.users],
    )?)?;
    writer.commit();
    Ok(())
}

#[derive(Serialize)]
struct ClusterMeta {
    n_clusters: usize,
    converged: bool,
    n_iterations: usize,
    preference: f64,
    basis: String,
    top_k_features: usize,
}

/// Affinity-propagation clustering of countries by popularity curves.
pub fn cmd_cluster(inputs: &Inputs, cfg: &RunConfig, out: &Path) -> Result<()> {
    let basis_str = cfg.basis.clone().unwrap_or_else(|| "alc".into());
    let basis = parse_basis(&basis_str)?;
    let data = load(inputs, cfg)?;
    let top_k = if cfg.top_k_features == 0 {
        None
    } else {
        Some(cfg.top_k_features)
    };
    let features = country_features(&data.raw, basis, top_k)?;
    let similarities = similarity_matrix(&features.features)?;
    let preference = cfg
        .preference
        .unwrap_or_else(|| similarities.median_off_diagonal());
    let assignment = affinity_propagation(
        &similarities,
        &ApParams {
            damping: cfg.damping,
            max_iter: cfg.max_iter,
            convergence_window: cfg.convergence_window,
            preference: Some(preference),
        },
    )?;

    let mut writer = StageWriter::new(out)?;
    writer.write(
        "clusters.csv",
        &formats::clusters_csv(
            &features.countries,
            &assignment.labels,
            &assignment.exemplars,
        ),
    )?;
    let meta = ClusterMeta {
        n_clusters: assignment.n_clusters(),
        converged: assignment.converged,
        n_iterations: assignment.n_iterations,
        preference,
        basis: basis_str.to_ascii_lowercase(),
        top_k_features: cfg.top_k_features,
    };
    let mut json = serde_json::to_string_pretty(&meta)?;
    json.push('\n');
    writer.write("cluster_meta.json", &json)?;
    writer.write_manifest(&Manifest::new(
        "cluster",
        cfg,
        &[inputs.events, inputs.users],
    )?)?;
    writer.commit();
    Ok(())
}

fn measure_fields(key: MeasureKey) -> (String, Option<String>, Option<String>, Option<String>) {
    let scope = match key.scope() {
        MeasureScope::Global => "global",
        MeasureScope::Country => "country",
    };
    let method = match key.method() {
        Method::Distribution => "distribution",
        Method::Rank => "rank",
    };
    (
        key.label().to_string(),
        Some(scope.to_string()),
        Some(key.basis().as_str().to_string()),
        Some(method.to_string()),
    )
}

fn selected_measures(cfg: &RunConfig) -> Result<Vec<MeasureKey>> {
    let method = cfg.method.as_deref().map(parse_method).transpose()?;
    let scope = cfg.scope.as_deref().map(parse_scope).transpose()?;
    let basis = cfg.basis.as_deref().map(parse_basis).transpose()?;
    let keys: Vec<MeasureKey> = MeasureKey::all()
        .into_iter()
        .filter(|k| method.map(|m| k.method() == m).unwrap_or(true))
        .filter(|k| scope.map(|s| k.scope() == s).unwrap_or(true))
        .filter(|k| basis.map(|b| k.basis() == b).unwrap_or(true))
        .collect();
    if keys.is_empty() {
        bail!("no valid measure matches the given method/basis/scope (rank is undefined for alc)");
    }
    Ok(keys)
}

/// Cross-validated rating-prediction experiments: the unfiltered baseline
/// plus every (measure, user set, country) combination requested.
pub fn cmd_recsys_eval(inputs: &Inputs, cfg: &RunConfig, out: &Path) -> Result<()> {
    let data = load(inputs, cfg)?;
    let table = compute_table(
        &data.raw,
        &ComputeOptions {
            epsilon: cfg.epsilon,
            leave_one_out: cfg.leave_one_out,
        },
    )?;

    let eval_cfg = EvalConfig {
        mf: MfConfig {
            factors: cfg.k,
            learning_rate: cfg.lr,
            regularization: cfg.reg,
            epochs: cfg.epochs,
            seed: cfg.seed,
        },
        train_frac: cfg.train_frac,
        cold_rule: if cfg.drop_cold {
            ColdRule::Drop
        } else {
            ColdRule::PredictZero
        },
        rating_mode: if cfg.raw_ratings {
            RatingMode::RawPlaycounts
        } else {
            RatingMode::Normalized
        },
    };

    let cohorts = data.raw.country_cohorts();
    let eligible: Vec<CountryCode> = cohorts
        .iter()
        .filter(|(_, users)| users.len() >= cfg.min_country_users_recsys)
        .map(|(&c, _)| c)
        .collect();
    let countries: Vec<CountryCode> = match cfg.country.as_deref() {
        Some("all") | None => eligible.clone(),
        Some(code) => {
            let c = parse_country(code)?;
            let size = cohorts.get(&c).map(|u| u.len()).unwrap_or(0);
            if size < cfg.min_country_users_recsys {
                bail!(
                    "country {c} has {size} users, below the evaluation threshold {}; \
                     lower --min-country-users-recsys to include it",
                    cfg.min_country_users_recsys
                );
            }
            vec![c]
        }
    };
    if countries.is_empty() {
        bail!(
            "no country reaches {} users; lower --min-country-users-recsys",
            cfg.min_country_users_recsys
        );
    }

    let requested_set = cfg.user_set.as_deref().map(parse_user_set).transpose()?;
    let user_sets: Vec<UserSet> = match requested_set {
        Some(UserSet::All) => vec![],
        Some(set) => vec![set],
        None => vec![UserSet::Low, UserSet::Mid, UserSet::High],
    };
    let measures = selected_measures(cfg)?;

    let mut writer = StageWriter::new(out)?;
    let mut rows: Vec<formats::EvalRow> = Vec::new();
    let mut specs: Vec<ExperimentSpec> = Vec::new();

    // Baseline: all users, no mainstreaminess filter.
    let baseline_spec = ExperimentSpec {
        measure: MeasureKey::all()[0],
        user_set: UserSet::All,
        country: None,
        folds: cfg.folds,
        seed: cfg.seed,
    };
    let baseline = run_experiment(
        &data.raw,
        &data.normalized,
        &table,
        &baseline_spec,
        &eval_cfg,
    )?;
    let baseline_row = formats::EvalRow {
        measure: "baseline".to_string(),
        scope: None,
        basis: None,
        method: None,
        country: None,
        user_set: "all".to_string(),
        folds: baseline
            .folds
            .iter()
            .map(|f| formats::FoldRow {
                rmse: f.rmse,
                mae: f.mae,
            })
            .collect(),
        rmse_mean: baseline.rmse_mean,
        mae_mean: baseline.mae_mean,
        n_users: baseline.n_users,
        n_test: baseline.n_test,
    };
    writer.write(
        "eval_baseline.json",
        &formats::eval_report_json(&baseline_row),
    )?;
    rows.push(baseline_row);

    for &measure in &measures {
        for &country in &countries {
            for &user_set in &user_sets {
                let spec = ExperimentSpec {
                    measure,
                    user_set,
                    country: Some(country),
                    folds: cfg.folds,
                    seed: cfg.seed,
                };
                let report = run_experiment(&data.raw, &data.normalized, &table, &spec, &eval_cfg)?;
                let (label, scope, basis, method) = measure_fields(measure);
                let row = formats::EvalRow {
                    measure: label.clone(),
                    scope,
                    basis,
                    method,
                    country: Some(country.as_str().to_string()),
                    user_set: user_set.as_str().to_string(),
                    folds: report
                        .folds
                        .iter()
                        .map(|f| formats::FoldRow {
                            rmse: f.rmse,
                            mae: f.mae,
                        })
                        .collect(),
                    rmse_mean: report.rmse_mean,
                    mae_mean: report.mae_mean,
                    n_users: report.n_users,
                    n_test: report.n_test,
                };
                writer.write(
                    &format!("eval_{}_{}_{}.json", label, user_set.as_str(), country),
                    &formats::eval_report_json(&row),
                )?;
                rows.push(row);
                specs.push(spec);
            }
        }
    }

    writer.write("eval_summary.csv", &formats::eval_summary_csv(&rows))?;

    if cfg.validate {
        let validation = validation_suite(
            &data.raw,
            &data.normalized,
            &table,
            &specs,
            &eval_cfg,
            &ValidationParams {
                subsample_size: cfg.subsample_size,
                n_subsamples: cfg.subsamples,
                seed: cfg.seed,
            },
        )?;
        #[derive(Serialize)]
        struct EffectRow {
            country: String,
            cohens_d: f64,
        }
        #[derive(Serialize)]
        struct ValidationJson {
            icc: f64,
            country_effects: Vec<EffectRow>,
        }
        let json_value = ValidationJson {
            icc: validation.icc,
            country_effects: validation
                .country_effects
                .iter()
                .map(|(c, d)| EffectRow {
                    country: c.as_str().to_string(),
                    cohens_d: *d,
                })
                .collect(),
        };
        let mut json = serde_json::to_string_pretty(&json_value)?;
        json.push('\n');
        writer.write("validation.json", &json)?;
    }

    writer.write_manifest(&Manifest::new(
        "recsys-eval",
        cfg,
        &[inputs.events, inputs.users],
    )?)?;
    writer.commit();
    Ok(())
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

fn rmse_table_by_measure(rows: &[formats::EvalRow]) -> String {
    let mut out = String::from("approach,rmse\n");
    let cell = |label: &str, value: Option<f64>, out: &mut String| {
        if let Some(v) = value {
            out.push_str(&format!("{label},{}\n", formats::fmt_f64(v)));
        }
    };
    let filtered: Vec<&formats::EvalRow> =
        rows.iter().filter(|r| r.measure != "baseline").collect();
    let baseline = rows.iter().find(|r| r.measure == "baseline");
    if let Some(b) = baseline {
        cell("baseline", Some(b.rmse_mean), &mut out);
    }
    let by = |pred: &dyn Fn(&formats::EvalRow) -> bool| -> Option<f64> {
        mean(
            &filtered
                .iter()
                .filter(|r| pred(r))
                .map(|r| r.rmse_mean)
                .collect::<Vec<f64>>(),
        )
    };
    cell(
        "mean_distribution_based",
        by(&|r| r.method.as_deref() == Some("distribution")),
        &mut out,
    );
    cell(
        "mean_rank_based",
        by(&|r| r.method.as_deref() == Some("rank")),
        &mut out,
    );
    cell(
        "mean_apc_based",
        by(&|r| r.basis.as_deref() == Some("APC")),
        &mut out,
    );
    cell(
        "mean_alc_based",
        by(&|r| r.basis.as_deref() == Some("ALC")),
        &mut out,
    );
    cell(
        "mean_global_scope",
        by(&|r| r.scope.as_deref() == Some("global")),
        &mut out,
    );
    cell(
        "mean_country_scope",
        by(&|r| r.scope.as_deref() == Some("country")),
        &mut out,
    );
    for key in MeasureKey::all() {
        cell(key.label(), by(&|r| r.measure == key.label()), &mut out);
    }
    cell("mean_all_measures", by(&|_| true), &mut out);
    out
}

fn rmse_table_by_user_set(rows: &[formats::EvalRow]) -> String {
    let mut out = String::from("measure,user_set,n_users,rmse\n");
    if let Some(b) = rows.iter().find(|r| r.measure == "baseline") {
        out.push_str(&format!(
            "baseline,all,{},{}\n",
            b.n_users,
            formats::fmt_f64(b.rmse_mean)
        ));
    }
    for key in MeasureKey::all() {
        for set in ["high", "mid", "low"] {
            let cells: Vec<&formats::EvalRow> = rows
                .iter()
                .filter(|r| r.measure == key.label() && r.user_set == set)
                .collect();
            if cells.is_empty() {
                continue;
            }
            let rmse = mean(&cells.iter().map(|r| r.rmse_mean).collect::<Vec<f64>>()).unwrap();
            let users: usize = cells.iter().map(|r| r.n_users).sum();
            out.push_str(&format!(
                "{},{},{},{}\n",
                key.label(),
                set,
                users,
                formats::fmt_f64(rmse)
            ));
        }
    }
    out
}

/// Table-shaped summaries over precomputed artifacts (preferred) or a fresh
/// in-memory run with the same configuration.
pub fn cmd_report(
    inputs: Option<&Inputs>,
    artifacts: Option<&Path>,
    cfg: &RunConfig,
    out: &Path,
) -> Result<()> {
    let (table, eval_rows, manifest) = match (artifacts, inputs) {
        (Some(dir), _) => {
            let (table, table_path) = table_from_artifacts(dir)?;
            let eval_path = find_artifact(dir, "eval_summary.csv");
            let eval_rows = match &eval_path {
                Some(path) => formats::parse_eval_summary_csv(&fs::read_to_string(path)?)?,
                None => Vec::new(),
            };
            let mut labeled = vec![(artifact_label(dir, &table_path), table_path.as_path())];
            if let Some(path) = &eval_path {
                labeled.push((artifact_label(dir, path), path.as_path()));
            }
            let manifest = Manifest::with_labeled_inputs("report", cfg, &labeled)?;
            (table, eval_rows, manifest)
        }
        (None, Some(inputs)) => {
            let data = load(inputs, cfg)?;
            let table = compute_table(
                &data.raw,
                &ComputeOptions {
                    epsilon: cfg.epsilon,
                    leave_one_out: cfg.leave_one_out,
                },
            )?;
            let manifest = Manifest::new("report", cfg, &[inputs.events, inputs.users])?;
            (table, Vec::new(), manifest)
        }
        (None, None) => bail!("report needs --events/--users or --artifacts"),
    };

    let report = country_report(&table);
    let mut writer = StageWriter::new(out)?;
    stats_outputs(&report, &table, &mut writer)?;
    if !eval_rows.is_empty() {
        writer.write("rmse_by_measure.csv", &rmse_table_by_measure(&eval_rows))?;
        writer.write("rmse_by_user_set.csv", &rmse_table_by_user_set(&eval_rows))?;
    }

    let mut text = String::new();
    text.push_str("Mainstreaminess report\n======================\n\n");
    text.push_str(&format!(
        "Users: {}   countries: {}\n\n",
        report.total_users,
        report.rows.len()
    ));
    text.push_str("Overall distribution per measure (mean, sd):\n");
    for key in MeasureKey::all() {
        if let Some(s) = &report.total_summaries[key.index()] {
            text.push_str(&format!(
                "  {:<18} mean {:.3}  sd {:.3}\n",
                key.label(),
                s.mean,
                s.sd
            ));
        }
    }
    if !eval_rows.is_empty() {
        text.push_str("\nRating prediction RMSE (averaged over countries):\n");
        text.push_str(&rmse_table_by_measure(&eval_rows).replace(',', "  "));
    }
    writer.write("report.txt", &text)?;
    writer.write_manifest(&manifest)?;
    writer.commit();
    Ok(())
}
