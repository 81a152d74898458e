use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::json;
use tiaug::augment::{augment_dataset, AugmentConfig};
use tiaug::eval::{
    evaluate, run_ablation_experiment, run_assumption_experiment, run_sigma_sweep, with_views,
    BaselineConfig, ExperimentConfig, Table, Weights,
};
use tiaug::ingest::{
    build_sequences, filter_time_range, k_core_filter, leave_one_out, parse_interactions,
    InputFormat, RejectedRow, Target,
};
use tiaug::io::{read_augmented, read_dataset, write_augmented, write_dataset};
use tiaug::partition::{partition, Strategy};
use tiaug::similarity::{ModelDump, SimilarityModel};
use tiaug::stats::{profile, uniform_ratio_curve};
use tiaug::synth::{generate, tau_for_switch_probability, GapProfile, SynthConfig};
use tiaug::{Dataset, Error, Result};

use crate::args::*;
use crate::manifest::Recorder;

/// `println!` that ignores a closed stdout (e.g. piped into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

/// State shared by every subcommand.
pub struct Context {
    pub seed: u64,
    /// Config file contents merged over the defaults, seed already applied.
    pub augment: AugmentConfig,
    pub rec: Recorder,
}

/// What a subcommand reports back for its manifest.
pub struct Outcome {
    pub config: serde_json::Value,
}

impl Context {
    pub fn new(seed: Option<u64>, config: Option<&Path>, out_dir: &Path) -> Result<Self> {
        let mut augment = AugmentConfig::default();
        if let Some(path) = config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            augment.merge_kv_str(&text)?;
        }
        if let Some(seed) = seed {
            augment.seed = seed;
        }
        Ok(Self {
            seed: augment.seed,
            augment,
            rec: Recorder::new(out_dir)?,
        })
    }

    fn dataset(&mut self, path: &Path) -> Result<Dataset> {
        let bytes = self.rec.read(path)?;
        read_dataset(bytes.as_slice())
    }

    fn write_dataset(&mut self, name: &Path, ds: &Dataset) -> Result<()> {
        let mut buf = Vec::new();
        write_dataset(ds, &mut buf)?;
        self.rec.write(name, &buf)
    }

    fn write_table(&mut self, name: &str, table: &Table) -> Result<()> {
        self.rec.write(Path::new(name), table.to_csv()?.as_bytes())
    }

    fn augment_config(&self, o: &AugmentOverrides) -> Result<AugmentConfig> {
        let mut cfg = self.augment.clone();
        let ratios = [
            ("beta", o.beta),
            ("eta", o.eta),
            ("mu", o.mu),
            ("gamma", o.gamma),
            ("sigma", o.sigma),
        ];
        for (key, value) in ratios {
            if let Some(v) = value {
                cfg.set(key, &v.to_string())?;
            }
        }
        for (key, value) in [("short_threshold", o.short_threshold), ("max_len", o.max_len)] {
            if let Some(v) = value {
                cfg.set(key, &v.to_string())?;
            }
        }
        if let Some(ops) = &o.operators {
            cfg.set("operators", ops)
                .map_err(|e| Error::Config(format!("operators: {e}")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn strategy(s: StrategyArg) -> Strategy {
    match s {
        StrategyArg::S => Strategy::S,
        StrategyArg::I => Strategy::I,
        StrategyArg::Random => Strategy::Random,
    }
}

fn baseline_config(b: &BaselineArgs) -> Result<BaselineConfig> {
    if b.weights.len() != 3 {
        return Err(Error::Config(format!(
            "expected 3 weights (markov,knn,pop), got {}",
            b.weights.len()
        )));
    }
    let cfg = BaselineConfig {
        weights: Weights::new(b.weights[0], b.weights[1], b.weights[2])?,
        recent: b.recent,
        window: b.window,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn target(t: TargetArg) -> Target {
    match t {
        TargetArg::Valid => Target::Valid,
        TargetArg::Test => Target::Test,
    }
}

fn experiment_config(ctx: &Context, b: &BaselineArgs, augment: AugmentConfig, views: usize) -> Result<ExperimentConfig> {
    let cfg = ExperimentConfig {
        baseline: baseline_config(b)?,
        augment,
        k_list: b.k.clone(),
        target: target(b.target),
        views,
        seed: ctx.seed,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn to_value<T: Serialize>(value: &T) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(value)?)
}

#[derive(Serialize)]
struct IngestReport<'a> {
    format: InputFormat,
    rows_parsed: usize,
    rows_rejected: usize,
    after_time_filter: usize,
    after_k_core: usize,
    users: usize,
    items: usize,
    rejected: &'a [RejectedRow],
}

pub fn ingest(ctx: &mut Context, a: &IngestArgs) -> Result<Outcome> {
    let format = match a.format {
        Some(Format::Csv) => InputFormat::Csv,
        Some(Format::Jsonl) => InputFormat::Jsonl,
        None => match a.input.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => InputFormat::Jsonl,
            _ => InputFormat::Csv,
        },
    };
    let bytes = ctx.rec.read(&a.input)?;
    let parsed = parse_interactions(bytes.as_slice(), format)?;
    let rows_parsed = parsed.records.len();
    let ranged = filter_time_range(parsed.records, a.from, a.to);
    let after_time_filter = ranged.len();
    let kept = k_core_filter(ranged, a.k_core)?;
    let after_k_core = kept.len();
    let ds = build_sequences(kept);
    ctx.write_dataset(&a.out, &ds)?;
    let report = IngestReport {
        format,
        rows_parsed,
        rows_rejected: parsed.rejected.len(),
        after_time_filter,
        after_k_core,
        users: ds.len(),
        items: ds.item_catalog().len(),
        rejected: &parsed.rejected,
    };
    ctx.rec.write_json("ingest-report.json", &report)?;
    say!(
        "{} rows parsed, {} rejected, {} kept: {} users, {} items",
        rows_parsed,
        report.rows_rejected,
        after_k_core,
        report.users,
        report.items
    );
    Ok(Outcome {
        config: json!({ "format": format, "k_core": a.k_core, "from": a.from, "to": a.to }),
    })
}

pub fn stats(ctx: &mut Context, a: &StatsArgs) -> Result<Outcome> {
    let ds = ctx.dataset(&a.data)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["user_id", "n_intervals", "mean", "std"])?;
    for (user, p) in profile(&ds) {
        w.write_record([user, p.n_intervals.to_string(), p.mean.to_string(), p.std.to_string()])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    ctx.rec.write(Path::new("profile.csv"), &bytes)?;

    let curve = uniform_ratio_curve(&ds, &a.ratios)?;
    let table = Table::new(
        vec!["ratio".into(), "fraction".into()],
        curve.iter().map(|(r, f)| vec![r.to_string(), f.to_string()]).collect(),
    );
    ctx.write_table("curve.csv", &table)?;
    say!("{table}");
    Ok(Outcome {
        config: json!({ "ratios": a.ratios }),
    })
}

pub fn partition_cmd(ctx: &mut Context, a: &PartitionArgs) -> Result<Outcome> {
    let ds = ctx.dataset(&a.data)?;
    let strategy = strategy(a.strategy);
    let p = partition(&ds, strategy, ctx.seed);
    ctx.write_dataset(Path::new("U.jsonl"), &p.uniform)?;
    ctx.write_dataset(Path::new("N.jsonl"), &p.non_uniform)?;
    say!(
        "strategy {strategy}: U {} users / {} interactions, N {} users / {} interactions",
        p.uniform.len(),
        p.uniform.n_interactions(),
        p.non_uniform.len(),
        p.non_uniform.n_interactions()
    );
    Ok(Outcome {
        config: json!({ "strategy": strategy }),
    })
}

pub fn synth(ctx: &mut Context, a: &SynthArgs) -> Result<Outcome> {
    let gaps = match a.profile {
        ProfileArg::Uniform => GapProfile::Uniform {
            gap: a.gap,
            jitter: a.jitter,
        },
        ProfileArg::Heavytail => GapProfile::HeavyTail {
            log_mu: a.log_mu.unwrap_or((86_400f64).ln()),
            log_sigma: a.log_sigma,
        },
    };
    let drift_timescale = match a.tau {
        Some(tau) => tau,
        None if a.switch_prob == 0.0 => f64::INFINITY,
        None if (0.0..1.0).contains(&a.switch_prob) => {
            tau_for_switch_probability(gaps.median(), a.switch_prob)
        }
        None => {
            return Err(Error::Config(format!(
                "switch probability {} is outside [0, 1)",
                a.switch_prob
            )))
        }
    };
    let cfg = SynthConfig {
        n_users: a.users,
        n_items: a.items,
        n_categories: a.categories,
        seq_len: (a.min_len, a.max_len),
        gaps,
        drift_timescale,
        seed: ctx.seed,
        ..SynthConfig::default()
    };
    cfg.validate()?;
    let ds = generate(&cfg)?;
    ctx.write_dataset(&a.out, &ds)?;
    say!(
        "{} users, {} items, {} interactions",
        ds.len(),
        ds.item_catalog().len(),
        ds.n_interactions()
    );
    // serde_json has no infinity; keep the timescale readable
    let mut config = to_value(&cfg)?;
    config["drift_timescale"] = json!(drift_timescale.to_string());
    Ok(Outcome { config })
}

#[derive(Serialize)]
struct AugmentReport {
    users: usize,
    transformed: usize,
    steps: BTreeMap<String, usize>,
    failures: Vec<tiaug::augment::Failure>,
}

pub fn augment(ctx: &mut Context, a: &AugmentArgs) -> Result<Outcome> {
    let cfg = ctx.augment_config(&a.overrides)?;
    let ds = ctx.dataset(&a.input)?;
    let train = if a.holdout { leave_one_out(&ds).train } else { ds };
    let model = match &a.model {
        Some(path) => {
            let bytes = ctx.rec.read(path)?;
            let dump: ModelDump = serde_json::from_slice(&bytes)?;
            SimilarityModel::from_dump(dump)?
        }
        None => SimilarityModel::fit(&train, a.window)?,
    };
    if let Some(name) = &a.save_model {
        let bytes = serde_json::to_vec(&model.to_dump())?;
        ctx.rec.write(name, &bytes)?;
    }
    let out = augment_dataset(&train, &cfg, &model)?;
    let mut buf = Vec::new();
    write_augmented(&out, &mut buf)?;
    ctx.rec.write(&a.out, &buf)?;
    let report = AugmentReport {
        users: out.len(),
        transformed: out.transformed().count(),
        steps: out.step_counts(),
        failures: out.failures(),
    };
    ctx.rec.write_json("augment-report.json", &report)?;
    say!("{} of {} sequences transformed", report.transformed, report.users);
    for (step, n) in &report.steps {
        say!("  {step}: {n}");
    }
    Ok(Outcome {
        config: json!({
            "augment": to_value(&cfg)?,
            "holdout": a.holdout,
            "window": model.window(),
        }),
    })
}

pub fn eval(ctx: &mut Context, a: &EvalArgs) -> Result<Outcome> {
    let baseline = baseline_config(&a.baseline)?;
    let ds = ctx.dataset(&a.data)?;
    let split = leave_one_out(&ds);
    let train = match &a.augmented {
        Some(path) => {
            let bytes = ctx.rec.read(path)?;
            let aug = read_augmented(bytes.as_slice())?;
            with_views(&split.train, &[aug])?
        }
        None => split.train.clone(),
    };
    let model = baseline.fit(&train)?;
    let report = evaluate(&model, &split, target(a.baseline.target), &a.baseline.k)?;
    let table = report.table();
    ctx.rec.write_json("eval-report.json", &report)?;
    ctx.write_table("eval-report.csv", &table)?;
    say!("{table}");
    Ok(Outcome {
        config: json!({
            "baseline": to_value(&baseline)?,
            "k": a.baseline.k,
            "target": target(a.baseline.target),
        }),
    })
}

pub fn validate_assumption(ctx: &mut Context, a: &AssumptionArgs) -> Result<Outcome> {
    let cfg = experiment_config(ctx, &a.baseline, ctx.augment.clone(), 1)?;
    let ds = ctx.dataset(&a.data)?;
    let strategy = strategy(a.strategy);
    let report = run_assumption_experiment(&ds, strategy, &cfg)?;
    let table = report.table();
    ctx.rec.write_json("assumption.json", &report)?;
    ctx.write_table("assumption.csv", &table)?;
    say!("{table}");
    Ok(Outcome {
        config: json!({
            "strategy": strategy,
            "baseline": to_value(&cfg.baseline)?,
            "k": cfg.k_list,
            "target": cfg.target,
        }),
    })
}

fn experiment_outcome(cfg: &ExperimentConfig) -> Result<Outcome> {
    Ok(Outcome {
        config: to_value(cfg)?,
    })
}

pub fn ablate(ctx: &mut Context, a: &ExperimentArgs) -> Result<Outcome> {
    let aug = ctx.augment_config(&a.overrides)?;
    let cfg = experiment_config(ctx, &a.baseline, aug, a.views)?;
    let ds = ctx.dataset(&a.data)?;
    let report = run_ablation_experiment(&ds, &cfg)?;
    let table = report.table();
    ctx.rec.write_json("ablation.json", &report)?;
    ctx.write_table("ablation.csv", &table)?;
    say!("{table}");
    experiment_outcome(&cfg)
}

pub fn sigma_sweep(ctx: &mut Context, a: &ExperimentArgs) -> Result<Outcome> {
    let aug = ctx.augment_config(&a.overrides)?;
    let cfg = experiment_config(ctx, &a.baseline, aug, a.views)?;
    let ds = ctx.dataset(&a.data)?;
    let report = run_sigma_sweep(&ds, &cfg)?;
    let table = report.table();
    ctx.rec.write_json("sigma-sweep.json", &report)?;
    ctx.write_table("sigma-sweep.csv", &table)?;
    say!("{table}");
    experiment_outcome(&cfg)
}

/// Name used for the manifest file.
pub fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Ingest(_) => "ingest",
        Command::Stats(_) => "stats",
        Command::Partition(_) => "partition",
        Command::Synth(_) => "synth",
        Command::Augment(_) => "augment",
        Command::Eval(_) => "eval",
        Command::ValidateAssumption(_) => "validate-assumption",
        Command::Ablate(_) => "ablate",
        Command::SigmaSweep(_) => "sigma-sweep",
    }
}

pub fn dispatch(ctx: &mut Context, cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Ingest(a) => ingest(ctx, a),
        Command::Stats(a) => stats(ctx, a),
        Command::Partition(a) => partition_cmd(ctx, a),
        Command::Synth(a) => synth(ctx, a),
        Command::Augment(a) => augment(ctx, a),
        Command::Eval(a) => eval(ctx, a),
        Command::ValidateAssumption(a) => validate_assumption(ctx, a),
        Command::Ablate(a) => ablate(ctx, a),
        Command::SigmaSweep(a) => sigma_sweep(ctx, a),
    }
}
