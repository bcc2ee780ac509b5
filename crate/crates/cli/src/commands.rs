use std::path::Path;

use serde::Serialize;
use xaudit::audit::{execute_run, ShapSettings, Variation};
use xaudit::data::ImbalanceProfile;
use xaudit::metrics::{mcc_guarantee_probe, Counterexample};
use xaudit::{
    confusion, consistency_sweep, cross_explain, cross_explain_features,
    false_positive_rate_benign, fit_model, generate_synthetic, load_csv, pearson_matrix,
    profile_imbalance, prune_correlated, score, split, toy_alignment_demo, ConfusionMatrix,
    Criterion, CsvOptions, Dataset64, ImportanceMethod, MetricKind, MetricSet, MlpHyper, ModelKind,
    ModelSpec, Optimizer, PruneMode, PruneReport, RunConfig, SyntheticSpec, TreeParams,
};

use crate::args::{
    CrossArgs, DataArgs, ModelArgs, Pipeline, ProbeArgs, RunArgs, SweepArgs, SyntheticArgs, ToyArgs,
};
use crate::report::{
    canonical_json, emit_report, importance_markdown, importance_svg, metric_table, sweep_markdown,
    transfer_markdown, Format,
};
use crate::CliError;

const LABEL_COLUMN: &str = "label";
const DEFAULT_PRUNE: f64 = 0.95;

/// Where a command's files go and whether to echo a summary.
pub struct Output<'a> {
    pub dir: &'a Path,
    pub quiet: bool,
}

impl Output<'_> {
    fn json<T: Serialize>(&self, stem: &str, report: &T) -> Result<(), CliError> {
        emit_report(self.dir, stem, Format::Json, &canonical_json(report)?).map(drop)
    }

    fn markdown(&self, stem: &str, body: &str) -> Result<(), CliError> {
        emit_report(self.dir, stem, Format::Markdown, body)?;
        if !self.quiet {
            print!("{body}");
        }
        Ok(())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn synthetic_spec(a: &SyntheticArgs) -> SyntheticSpec {
    let d = SyntheticSpec::default();
    SyntheticSpec {
        n_rows: a.rows.unwrap_or(d.n_rows),
        n_informative: a.informative.unwrap_or(d.n_informative),
        n_noise: a.noise.unwrap_or(d.n_noise),
        n_correlated_pairs: a.pairs.unwrap_or(d.n_correlated_pairs),
        positive_fraction: a.positive_fraction.unwrap_or(d.positive_fraction),
        class_separation: a.separation.unwrap_or(d.class_separation),
        correlation_noise: a.correlation_noise.unwrap_or(d.correlation_noise),
    }
}

fn load_raw(data: &DataArgs, synth: &SyntheticArgs) -> Result<Dataset64, CliError> {
    match (&data.csv, data.synthetic) {
        (Some(_), true) => Err(usage("give either --csv or --synthetic, not both")),
        (None, false) => Err(usage("a dataset is required: --csv <path> or --synthetic")),
        (Some(path), false) => {
            let mut opts = CsvOptions::new(
                data.label_column
                    .clone()
                    .unwrap_or_else(|| LABEL_COLUMN.into()),
            )
            .drop(data.drop.iter().cloned());
            if !data.positive.is_empty() {
                opts = opts.positive(data.positive.iter().cloned());
            }
            Ok(load_csv(path, &opts)?)
        }
        (None, true) => Ok(generate_synthetic(
            &synthetic_spec(synth),
            synth.data_seed.unwrap_or(0),
        )?),
    }
}

fn load(
    data: &DataArgs,
    synth: &SyntheticArgs,
) -> Result<(Dataset64, Option<PruneReport>), CliError> {
    let d = load_raw(data, synth)?;
    match data.prune {
        Some(t) => {
            let (d, rep) = prune_correlated(&d, t, PruneMode::DropAll)?;
            Ok((d, Some(rep)))
        }
        None => Ok((d, None)),
    }
}

fn model_spec(m: &ModelArgs) -> Result<ModelSpec, CliError> {
    let kind = match &m.model {
        Some(s) => ModelKind::parse(s).ok_or_else(|| usage(format!("unknown model {s:?}")))?,
        None => ModelKind::DecisionTree,
    };
    Ok(match ModelSpec::default_for(kind) {
        ModelSpec::DecisionTree(p) => ModelSpec::DecisionTree(TreeParams {
            criterion: match m.criterion.as_deref() {
                None => p.criterion,
                Some("gini") => Criterion::Gini,
                Some("entropy") => Criterion::Entropy,
                Some(other) => return Err(usage(format!("unknown criterion {other:?}"))),
            },
            max_depth: m.max_depth.or(p.max_depth),
            min_samples_split: m.min_samples_split.unwrap_or(p.min_samples_split),
        }),
        ModelSpec::Ridge { alpha } => ModelSpec::Ridge {
            alpha: m.alpha.unwrap_or(alpha),
        },
        ModelSpec::Mlp(h) => ModelSpec::Mlp(MlpHyper {
            optimizer: match &m.optimizer {
                Some(s) => {
                    Optimizer::parse(s).ok_or_else(|| usage(format!("unknown optimizer {s:?}")))?
                }
                None => h.optimizer,
            },
            learning_rate: m.learning_rate.unwrap_or(h.learning_rate),
            batch_size: m.batch_size.unwrap_or(h.batch_size),
            epochs: m.epochs.unwrap_or(h.epochs),
        }),
    })
}

fn run_config(m: &ModelArgs, r: &RunArgs) -> Result<RunConfig, CliError> {
    let spec = model_spec(m)?;
    let method = match &r.method {
        Some(s) => {
            ImportanceMethod::parse(s).ok_or_else(|| usage(format!("unknown method {s:?}")))?
        }
        None => match spec.kind() {
            ModelKind::DecisionTree => ImportanceMethod::DtFi,
            ModelKind::Ridge => ImportanceMethod::RidgeFc,
            ModelKind::Mlp => ImportanceMethod::ShapGlobal,
        },
    };
    let mut cfg = RunConfig::new(spec, method);
    let shap = ShapSettings::default();
    cfg.k = r.k.unwrap_or(cfg.k);
    cfg.seed = r.seed.unwrap_or(0);
    cfg.split_seed = r.split_seed.unwrap_or(cfg.seed);
    cfg.test_fraction = r.test_fraction.unwrap_or(cfg.test_fraction);
    cfg.pi_repeats = r.pi_repeats.unwrap_or(cfg.pi_repeats);
    if let Some(s) = &r.pi_metric {
        cfg.pi_metric =
            MetricKind::parse(s).ok_or_else(|| usage(format!("unknown metric {s:?}")))?;
    }
    cfg.pi_on_train = r.pi_on_train;
    cfg.shap = ShapSettings {
        n_samples: r.shap_samples.unwrap_or(shap.n_samples),
        max_background: r.shap_background.unwrap_or(shap.max_background),
        instances: r.shap_instances.unwrap_or(shap.instances),
    };
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct SynthReport {
    kind: &'static str,
    spec: SyntheticSpec,
    data_seed: u64,
    file: String,
    feature_names: Vec<String>,
    imbalance: ImbalanceProfile,
}

pub fn synth(a: &SyntheticArgs, out: &Output) -> Result<(), CliError> {
    let spec = synthetic_spec(a);
    let seed = a.data_seed.unwrap_or(0);
    let d: Dataset64 = generate_synthetic(&spec, seed)?;
    std::fs::create_dir_all(out.dir).map_err(|source| CliError::Output {
        path: out.dir.to_path_buf(),
        source,
    })?;
    xaudit::write_csv(&d, out.dir.join("synthetic.csv"), LABEL_COLUMN)?;
    let report = SynthReport {
        kind: "synth",
        spec,
        data_seed: seed,
        file: "synthetic.csv".into(),
        feature_names: d.feature_names().to_vec(),
        imbalance: profile_imbalance(&d)?,
    };
    out.json("synth", &report)?;
    out.markdown(
        "synth",
        &format!(
            "Wrote synthetic.csv: {} rows, {} features, {} attacks ({}).\n",
            d.n_rows(),
            d.n_features(),
            d.positives(),
            report.imbalance.degree.as_str()
        ),
    )
}

#[derive(Serialize)]
struct CorrelatedPair {
    a: String,
    b: String,
    r: f64,
}

#[derive(Serialize)]
struct ProfileReport {
    kind: &'static str,
    n_rows: usize,
    n_features: usize,
    imbalance: ImbalanceProfile,
    threshold: f64,
    correlated_pairs: Vec<CorrelatedPair>,
    constant_columns: Vec<String>,
    prune: PruneReport,
    retained: Vec<String>,
}

pub fn profile(data: &DataArgs, synth: &SyntheticArgs, out: &Output) -> Result<(), CliError> {
    let d = load_raw(data, synth)?;
    let threshold = data.prune.unwrap_or(DEFAULT_PRUNE);
    let imbalance = profile_imbalance(&d)?;
    let cm = pearson_matrix(&d)?;
    let names = d.feature_names();
    let mut correlated_pairs = Vec::new();
    for i in 0..cm.dim() {
        for j in i + 1..cm.dim() {
            if let Some(r) = cm.get(i, j).filter(|r| r.abs() >= threshold) {
                correlated_pairs.push(CorrelatedPair {
                    a: names[i].clone(),
                    b: names[j].clone(),
                    r,
                });
            }
        }
    }
    let (retained, prune) = match prune_correlated(&d, threshold, PruneMode::DropAll) {
        Ok((kept, rep)) => (kept.feature_names().to_vec(), rep),
        Err(xaudit::Error::AllFeaturesRemoved) => (
            Vec::new(),
            PruneReport {
                threshold,
                mode: PruneMode::DropAll,
                correlated: Vec::new(),
                constant: Vec::new(),
            },
        ),
        Err(e) => return Err(e.into()),
    };
    let report = ProfileReport {
        kind: "profile",
        n_rows: d.n_rows(),
        n_features: d.n_features(),
        imbalance: imbalance.clone(),
        threshold,
        constant_columns: cm
            .constant_columns()
            .into_iter()
            .map(|i| names[i].clone())
            .collect(),
        correlated_pairs,
        prune,
        retained,
    };
    out.json("profile", &report)?;
    let mut md = format!(
        "| Rows | Attacks | Majority share | Degree |\n|---|---|---|---|\n| {} | {} | {:.4} | {} |\n\n",
        report.n_rows,
        imbalance.positives,
        imbalance.majority_fraction,
        imbalance.degree.as_str()
    );
    md.push_str(&format!(
        "{} feature pairs with |r| >= {threshold}; {} constant columns; {} of {} features retained.\n",
        report.correlated_pairs.len(),
        report.constant_columns.len(),
        report.retained.len(),
        report.n_features
    ));
    out.markdown("profile", &md)
}

#[derive(Serialize)]
struct TrainReport {
    kind: &'static str,
    config: RunConfig,
    n_train: usize,
    n_test: usize,
    feature_names: Vec<String>,
    confusion: ConfusionMatrix,
    metrics: MetricSet,
    #[serde(skip_serializing_if = "Option::is_none")]
    false_positive_rate_benign: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pruned: Option<PruneReport>,
}

pub fn train(p: &Pipeline, out: &Output) -> Result<(), CliError> {
    let (d, pruned) = load(&p.data, &p.synthetic)?;
    let cfg = run_config(&p.model, &p.run)?;
    let (tr, te) = split(&d, cfg.test_fraction, cfg.split_seed)?;
    let model = fit_model(&cfg.model, &tr, cfg.seed)?;
    let pred = model.predict(&te)?;
    let cm = confusion(te.labels(), &pred.labels)?;
    let metrics = score(&cm)?;
    let label = cfg.model.kind().label().to_string();
    let report = TrainReport {
        kind: "train",
        n_train: tr.n_rows(),
        n_test: te.n_rows(),
        feature_names: d.feature_names().to_vec(),
        confusion: cm,
        metrics,
        false_positive_rate_benign: false_positive_rate_benign(&cm).ok(),
        pruned,
        config: cfg,
    };
    out.json("train", &report)?;
    out.json("model", &model)?;
    out.markdown("train", &metric_table(&[(label, metrics)]))
}

pub fn explain(p: &Pipeline, out: &Output) -> Result<(), CliError> {
    let (d, _) = load(&p.data, &p.synthetic)?;
    let cfg = run_config(&p.model, &p.run)?;
    let run = execute_run(&d, &cfg, "explain")?;
    out.json("explain", &run)?;
    emit_report(
        out.dir,
        "importance",
        Format::Svg,
        &importance_svg(&run.importance),
    )?;
    let mut md = importance_markdown(&run.importance, crate::report::SVG_MAX_BARS);
    md.push_str(&format!(
        "\nTop-{}: {}\n",
        run.top_k.k,
        run.top_k.features.join(", ")
    ));
    out.markdown("explain", &md)
}

pub fn cross(p: &Pipeline, c: &CrossArgs, out: &Output) -> Result<(), CliError> {
    let (d, _) = load(&p.data, &p.synthetic)?;
    let repeats = c.repeats.unwrap_or(10);
    let report = if c.features.is_empty() {
        cross_explain(&d, &run_config(&p.model, &p.run)?, repeats)?
    } else {
        let seed = p.run.seed.unwrap_or(0);
        let tf = p.run.test_fraction.unwrap_or(0.15);
        cross_explain_features(&d, &c.features, seed, repeats, tf)?
    };
    out.json("transfer", &report)?;
    out.markdown("transfer", &transfer_markdown(&report))
}

pub fn sweep(p: &Pipeline, s: &SweepArgs, out: &Output) -> Result<(), CliError> {
    let (d, _) = load(&p.data, &p.synthetic)?;
    let cfg = run_config(&p.model, &p.run)?;
    let mut variations = s
        .vary
        .iter()
        .map(|v| Variation::parse(v).map_err(|e| usage(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(n) = s.seeds {
        variations.extend(Variation::seeds(cfg.seed, n));
    }
    if variations.is_empty() {
        return Err(usage("a sweep needs --vary or --seeds N with N >= 2"));
    }
    let report = consistency_sweep(&d, &cfg, &variations, cfg.k)?;
    out.json("sweep", &report)?;
    out.markdown("sweep", &sweep_markdown(&report))
}

#[derive(Serialize)]
struct ProbeReport {
    kind: &'static str,
    threshold: f64,
    max_small: u64,
    tn_ladder: Vec<u64>,
    count: usize,
    counterexamples: Vec<Counterexample>,
}

pub fn probe(a: &ProbeArgs, out: &Output) -> Result<(), CliError> {
    let threshold = a.threshold.unwrap_or(0.95);
    let max_small = a.max_small.unwrap_or(20);
    let tn_ladder = if a.tn.is_empty() {
        vec![10_000, 1_000_000]
    } else {
        a.tn.clone()
    };
    let found = mcc_guarantee_probe(threshold, max_small, &tn_ladder);
    let mut md = format!(
        "{} matrices reach MCC >= {threshold} while another score stays below it.\n\n",
        found.len()
    );
    md.push_str("| TP | FN | FP | TN | MCC | Below threshold |\n|---|---|---|---|---|---|\n");
    for c in found.iter().take(20) {
        let m = &c.matrix;
        let failing: Vec<&str> = c.failing.iter().map(|k| k.label()).collect();
        md.push_str(&format!(
            "| {} | {} | {} | {} | {:.7} | {} |\n",
            m.tp,
            m.fn_,
            m.fp,
            m.tn,
            c.metrics.mcc,
            failing.join(", ")
        ));
    }
    let report = ProbeReport {
        kind: "probe-mcc",
        threshold,
        max_small,
        tn_ladder,
        count: found.len(),
        counterexamples: found,
    };
    out.json("probe", &report)?;
    out.markdown("probe", &md)
}

pub fn toy(a: &ToyArgs, out: &Output) -> Result<(), CliError> {
    let report = toy_alignment_demo(
        a.c1.unwrap_or(0.9),
        a.c2.unwrap_or(0.1),
        a.threshold.unwrap_or(7.0),
    )?;
    out.json("toy", &report)?;
    let mut md = String::from(
        "| Variant | Coefficient top | Gradient top | Mean abs dT | Mean abs dH | Agree |\n|---|---|---|---|---|---|\n",
    );
    for (name, v) in [("step", &report.step), ("smooth", &report.smooth)] {
        md.push_str(&format!(
            "| {name} | {} | {} | {:.6} | {:.6} | {} |\n",
            v.coefficient_top,
            v.gradient_top,
            v.gradient.scores[0],
            v.gradient.scores[1],
            if v.agree { "yes" } else { "no" }
        ));
    }
    out.markdown("toy", &md)
}
