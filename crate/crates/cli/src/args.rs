use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

/// Each group is both a set of flags and a section of the TOML config file.
/// A flag given on the command line wins over the file.
pub trait Merge {
    fn merge(self, file: Self) -> Self;
}

macro_rules! merge_fields {
    ($t:ty { $($opt:ident),* } vec { $($v:ident),* } flag { $($b:ident),* }) => {
        impl Merge for $t {
            fn merge(self, file: Self) -> Self {
                Self {
                    $($opt: self.$opt.or(file.$opt),)*
                    $($v: if self.$v.is_empty() { file.$v } else { self.$v },)*
                    $($b: self.$b || file.$b,)*
                }
            }
        }
    };
}

#[derive(Parser, Debug)]
#[command(
    name = "xaudit",
    version,
    about = "Audit feature-based explanations of binary classifiers"
)]
pub struct Cli {
    /// Directory that receives every file a command writes.
    #[arg(
        long,
        global = true,
        env = "XAUDIT_OUT_DIR",
        default_value = "xaudit-out"
    )]
    pub out_dir: PathBuf,
    /// TOML file supplying defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Do not print the summary to stdout.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a synthetic dataset as CSV.
    Synth {
        #[command(flatten)]
        synthetic: SyntheticArgs,
    },
    /// Class-imbalance and correlation report.
    Profile {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        synthetic: SyntheticArgs,
    },
    /// Fit a model and score it on the held-out split.
    Train(Pipeline),
    /// Compute a feature-importance vector and chart its top features.
    Explain(Pipeline),
    /// Check whether a model's top-k features alone support a fresh tree.
    CrossExplain {
        #[command(flatten)]
        pipeline: Pipeline,
        #[command(flatten)]
        cross: CrossArgs,
    },
    /// Compare top-k explanations across configuration variations.
    Sweep {
        #[command(flatten)]
        pipeline: Pipeline,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Search small confusion matrices where a high MCC hides a low score.
    ProbeMcc {
        #[command(flatten)]
        probe: ProbeArgs,
    },
    /// Coefficient versus gradient importance on two hand-set models.
    ToyDemo {
        #[command(flatten)]
        toy: ToyArgs,
    },
}

#[derive(Args, Debug, Default)]
pub struct Pipeline {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub synthetic: SyntheticArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataArgs {
    /// Read the dataset from this CSV file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Generate the dataset instead (see the synthetic flags).
    #[arg(long)]
    pub synthetic: bool,
    /// Label column of the CSV.
    #[arg(long)]
    pub label_column: Option<String>,
    /// Label value counted as the attack class; repeatable.
    #[arg(long = "positive")]
    pub positive: Vec<String>,
    /// Column to ignore; repeatable.
    #[arg(long = "drop")]
    pub drop: Vec<String>,
    /// Remove features with |r| at or above this value before use.
    #[arg(long)]
    pub prune: Option<f64>,
}
merge_fields!(DataArgs { csv, label_column, prune } vec { positive, drop } flag { synthetic });

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticArgs {
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub informative: Option<usize>,
    #[arg(long)]
    pub noise: Option<usize>,
    /// Correlated feature pairs.
    #[arg(long)]
    pub pairs: Option<usize>,
    #[arg(long)]
    pub positive_fraction: Option<f64>,
    /// Distance between class means on informative features.
    #[arg(long)]
    pub separation: Option<f64>,
    #[arg(long)]
    pub correlation_noise: Option<f64>,
    #[arg(long)]
    pub data_seed: Option<u64>,
}
merge_fields!(SyntheticArgs {
    rows, informative, noise, pairs, positive_fraction, separation, correlation_noise, data_seed
} vec {} flag {});

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelArgs {
    /// dt, ridge or mlp.
    #[arg(long)]
    pub model: Option<String>,
    /// gini or entropy.
    #[arg(long)]
    pub criterion: Option<String>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub min_samples_split: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// rmsprop or adam.
    #[arg(long)]
    pub optimizer: Option<String>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
}
merge_fields!(ModelArgs {
    model, criterion, max_depth, min_samples_split, alpha, optimizer, learning_rate, batch_size, epochs
} vec {} flag {});

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunArgs {
    /// dt_fi, ridge_fc, pi or shap; defaults to the model's own importance.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Seed for fitting and explanation sampling.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Seed for the train/test partition; defaults to --seed.
    #[arg(long)]
    pub split_seed: Option<u64>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long)]
    pub pi_repeats: Option<usize>,
    /// Score used by permutation importance.
    #[arg(long)]
    pub pi_metric: Option<String>,
    /// Permute on the training split instead of the test split.
    #[arg(long)]
    pub pi_on_train: bool,
    /// Coalitions per instance when SHAP cannot enumerate them all.
    #[arg(long)]
    pub shap_samples: Option<usize>,
    #[arg(long)]
    pub shap_background: Option<usize>,
    /// Test rows explained by SHAP.
    #[arg(long)]
    pub shap_instances: Option<usize>,
}
merge_fields!(RunArgs {
    method, k, seed, split_seed, test_fraction, pi_repeats, pi_metric, shap_samples, shap_background,
    shap_instances
} vec {} flag { pi_on_train });

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossArgs {
    /// Receiver trainings averaged into the report.
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Use these features instead of explaining a source model.
    #[arg(long, value_delimiter = ',')]
    pub features: Vec<String>,
}
merge_fields!(CrossArgs { repeats } vec { features } flag {});

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepArgs {
    /// One run per occurrence, e.g. `batch_size=512` or `optimizer=adam,lr=0.01`.
    #[arg(long = "vary")]
    pub vary: Vec<String>,
    /// Add seed-only runs until the sweep holds this many seeds.
    #[arg(long)]
    pub seeds: Option<usize>,
}
merge_fields!(SweepArgs { seeds } vec { vary } flag {});

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeArgs {
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Largest tp, fn and fp examined.
    #[arg(long)]
    pub max_small: Option<u64>,
    /// True-negative count to try; repeatable.
    #[arg(long = "tn")]
    pub tn: Vec<u64>,
}
merge_fields!(ProbeArgs { threshold, max_small } vec { tn } flag {});

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyArgs {
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
}
merge_fields!(ToyArgs { c1, c2, threshold } vec {} flag {});

/// Layout of the optional config file.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub data: DataArgs,
    pub synthetic: SyntheticArgs,
    pub model: ModelArgs,
    pub run: RunArgs,
    pub cross_explain: CrossArgs,
    pub sweep: SweepArgs,
    pub probe: ProbeArgs,
    pub toy: ToyArgs,
}
