use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use grounded_planner::domain::RoomKind;
use grounded_planner::eval::{self, EvalReport, ExperimentConfig, Record, Split};
use grounded_planner::graph2nl::{emit_context, ContextOptions, ContextVariant};
use grounded_planner::grounding::execute_plan;
use grounded_planner::lm::{DecodingStrategy, ModelConfig, SequenceModel};
use grounded_planner::planner::{self, TaskSpec};
use grounded_planner::plandsl::{extract_between_markers, parse_plan, prompt_text};
use grounded_planner::world::{self, WorldState};

use crate::config::Config;
use crate::{CheckFailed, StrategyKind, UsageError};

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn context_options(a: &crate::ContextArgs) -> ContextOptions {
    ContextOptions { depth: a.depth, condensed: !a.verbose_context }
}

fn strategy(config: &Config, a: &crate::DecodingArgs, seed: u64) -> Result<DecodingStrategy> {
    let s = match a.strategy {
        StrategyKind::Greedy => DecodingStrategy::Greedy,
        StrategyKind::Sampled => {
            DecodingStrategy::Sampled { k: a.k.unwrap_or(config.k), p: a.p.unwrap_or(config.p), seed }
        }
    };
    s.validate().map_err(|e| usage(e.to_string()))?;
    Ok(s)
}

fn model_config(config: &Config, order: Option<usize>) -> Result<ModelConfig> {
    let order = order.unwrap_or(config.order);
    if order == 0 {
        return Err(usage("order must be positive"));
    }
    Ok(ModelConfig { order, ..ModelConfig::default() })
}

fn model_path(config: &Config, variant: ContextVariant) -> PathBuf {
    config.paths.models.join(format!("{variant}.gplm"))
}

fn load_model(path: &Path) -> Result<SequenceModel> {
    let bytes = fs::read(path).with_context(|| format!("reading model {}", path.display()))?;
    SequenceModel::from_bytes(&bytes).with_context(|| format!("loading model {}", path.display()))
}

fn load_scene(path: &Path) -> Result<WorldState> {
    let text = fs::read_to_string(path).with_context(|| format!("reading scene {}", path.display()))?;
    world::read_scene(&text).with_context(|| format!("parsing scene {}", path.display()))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn gen_scenes(config: &Config, a: crate::GenScenes) -> Result<()> {
    let dir = a.out.unwrap_or_else(|| config.paths.scenes.clone());
    for i in 0..a.count {
        let seed = config.seed + i as u64;
        let room = a.room.unwrap_or(RoomKind::ALL[i % RoomKind::ALL.len()]);
        let state = world::generate_scene_with(seed, room, config.world())?;
        let path = dir.join(format!("{room}-{seed}.scene"));
        write_file(&path, world::write_scene(&state))?;
        println!("{}", path.display());
    }
    Ok(())
}

pub fn gen_dataset(config: &Config, a: crate::GenDataset) -> Result<()> {
    if a.n == 0 || !(a.split_ratio > 0.0 && a.split_ratio <= 1.0) {
        return Err(usage("n must be positive and split ratio in (0, 1]"));
    }
    let dir = a.out.unwrap_or_else(|| config.paths.datasets.clone());
    let meta = eval::gen_dataset(&dir, a.n, config.seed, a.variant, a.split_ratio, context_options(&a.context))?;
    for (split, n) in &meta.counts {
        println!("{split}\t{n}");
    }
    println!("wrote {}", dir.display());
    Ok(())
}

/// Records of a dataset directory restricted to `splits`.
fn dataset_records(dir: &Path, splits: &[Split]) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    for s in splits {
        let rows = eval::read_split(dir, *s).with_context(|| format!("reading {s} split of {}", dir.display()))?;
        out.extend(rows.into_iter().map(|r| r.record));
    }
    Ok(out)
}

pub fn train(config: &Config, a: crate::Train) -> Result<()> {
    let dir = a.data.unwrap_or_else(|| config.paths.datasets.clone());
    let meta = eval::read_meta(&dir).with_context(|| format!("reading dataset {}", dir.display()))?;
    let variant = a.variant.unwrap_or(meta.variant);
    let records = dataset_records(&dir, &[Split::Train])?;
    let model = eval::train_variant(&records, variant, meta.context, model_config(config, a.order)?)?;
    let path = a.out.unwrap_or_else(|| model_path(config, variant));
    write_file(&path, model.to_bytes())?;
    println!("trained {variant} on {} samples, vocabulary {}: {}", records.len(), model.vocab_size(), path.display());
    Ok(())
}

pub fn generate(config: &Config, a: crate::Generate) -> Result<()> {
    let context = match (a.variant, a.context, &a.scene) {
        (ContextVariant::None, Some(_), _) | (ContextVariant::None, _, Some(_)) => {
            return Err(usage("the none variant takes no context"));
        }
        (ContextVariant::None, None, None) => None,
        (_, Some(c), _) => Some(c),
        (ContextVariant::FirstStepHint, None, _) => return Err(usage("first_step_hint needs --context")),
        (v, None, Some(scene)) => {
            let state = load_scene(scene)?;
            let target = a.target.as_deref().unwrap_or_default();
            Some(emit_context(v, &state, target, None, context_options(&a.context_args))?)
        }
        (v, None, None) => return Err(usage(format!("{v} needs --context or --scene with --target"))),
    };
    let model = load_model(&a.model.unwrap_or_else(|| model_path(config, a.variant)))?;
    let strategy = strategy(config, &a.decoding, config.seed)?;
    let max_len = a.decoding.max_len.unwrap_or(config.max_len);
    let p = eval::predict(&model, &a.goal, context.as_deref(), &strategy, max_len)
        .with_context(|| format!("generating for {:?}", prompt_text(&a.goal, context.as_deref())))?;
    println!("{}", p.text);
    if p.plan.is_none() {
        eprintln!("warning: output does not contain a complete plan");
    }
    Ok(())
}

fn read_plan_text(a: &crate::Execute) -> Result<String> {
    match (&a.plan, &a.plan_file) {
        (Some(p), _) => Ok(p.clone()),
        (None, Some(f)) if f.as_os_str() == "-" => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s)?;
            Ok(s)
        }
        (None, Some(f)) => fs::read_to_string(f).with_context(|| format!("reading {}", f.display())),
        (None, None) => Err(usage("a plan is required")),
    }
}

pub fn execute(a: crate::Execute) -> Result<()> {
    let mut state = load_scene(&a.scene)?;
    let text = read_plan_text(&a)?;
    let body = if text.contains("<BOS>") {
        let e = extract_between_markers(&text).map_err(|e| usage(e.to_string()))?;
        e.text.to_string()
    } else {
        text
    };
    let plan = parse_plan(body.trim()).map_err(|e| usage(format!("invalid plan: {e}")))?;
    let trace = execute_plan(&plan, &mut state, a.try_all);
    for s in &trace.steps {
        println!("{}. {} [{}]", s.index, s.step, if s.success { "ok" } else { "failed" });
        if s.attempts.is_empty() {
            println!("   no object grounds `{}`", s.step.object());
        }
        for at in &s.attempts {
            let status = match (&at.error, at.success) {
                (Some(e), _) => format!("error: {e}"),
                (None, true) => "ok".to_string(),
                (None, false) => "failed".to_string(),
            };
            println!("   {} -> {status}, {} actions", at.candidate, at.actions.len());
            if a.verbose {
                for r in &at.actions {
                    match r.result.failure {
                        Some(f) => println!("      {} failed: {f:?}", r.action),
                        None => println!("      {}", r.action),
                    }
                }
            }
        }
    }
    let ok = trace.steps.iter().filter(|s| s.success).count();
    println!("{ok}/{} steps succeeded, {} rollbacks", trace.steps.len(), trace.rollbacks());
    Ok(())
}

fn print_checks(report: &EvalReport) -> usize {
    let checks = eval::check_report(report);
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    checks.iter().filter(|c| !c.passed).count()
}

pub fn evaluate(config: &Config, a: crate::Evaluate) -> Result<()> {
    let splits = if a.splits.is_empty() { vec![Split::Seen, Split::Unseen] } else { a.splits.clone() };
    if splits.contains(&Split::Train) {
        return Err(usage("the train split cannot be an evaluation split"));
    }
    let context = context_options(&a.context_args);
    let mut exp = ExperimentConfig {
        n: a.n,
        seed: config.seed,
        split_ratio: a.split_ratio,
        model: model_config(config, a.order)?,
        context,
        strategy: strategy(config, &a.decoding, config.seed)?,
        max_len: a.decoding.max_len.unwrap_or(config.max_len),
        budget: a.budget.unwrap_or(config.budget),
        splits: splits.clone(),
        ..ExperimentConfig::default()
    };
    if !a.variants.is_empty() {
        exp.variants = a.variants.clone();
    }
    exp.sampled = a
        .sample_seeds
        .iter()
        .map(|s| {
            let d = crate::DecodingArgs { strategy: StrategyKind::Sampled, k: a.decoding.k, p: a.decoding.p, max_len: None };
            strategy(config, &d, *s)
        })
        .collect::<Result<_>>()?;
    let records = match &a.data {
        Some(dir) => {
            let meta = eval::read_meta(dir).with_context(|| format!("reading dataset {}", dir.display()))?;
            exp.context = meta.context;
            let mut all = vec![Split::Train];
            all.extend(&splits);
            dataset_records(dir, &all)?
        }
        None => {
            if a.n == 0 || !(a.split_ratio > 0.0 && a.split_ratio <= 1.0) {
                return Err(usage("n must be positive and split ratio in (0, 1]"));
            }
            eval::generate_records(a.n, config.seed, a.split_ratio)?
        }
    };
    let report = eval::run_on_records(&exp, &records)?;
    let dir = a.out.unwrap_or_else(|| config.paths.reports.clone());
    write_file(&dir.join("report.csv"), report.to_csv())?;
    let table = report.to_table();
    write_file(&dir.join("report.txt"), &table)?;
    print!("{table}");
    if a.check {
        let failed = print_checks(&report);
        if failed > 0 {
            return Err(CheckFailed(failed).into());
        }
    }
    Ok(())
}

fn task_from_args(config: &Config, a: &crate::ExportPddl, state: &WorldState) -> Result<TaskSpec> {
    let Some(category) = a.category else {
        return Ok(planner::sample_task(config.seed, state)?);
    };
    let (Some(target), Some(receptacle)) = (&a.target, &a.receptacle) else {
        return Err(usage("--category needs --target and --receptacle"));
    };
    let task = TaskSpec::new(category, target, receptacle, a.movable.as_deref(), a.sliced);
    task.validate().map_err(|e| usage(format!("invalid task: {e}")))?;
    Ok(task)
}

pub fn export_pddl(config: &Config, a: crate::ExportPddl) -> Result<()> {
    let state = load_scene(&a.scene)?;
    let task = task_from_args(config, &a, &state)?;
    let name = a.scene.file_stem().and_then(|s| s.to_str()).unwrap_or("problem").replace(|c: char| !c.is_alphanumeric(), "-");
    let domain = planner::domain_pddl();
    let problem = planner::problem_pddl(&task, &state, &name);
    match &a.out {
        Some(dir) => {
            write_file(&dir.join("domain.pddl"), &domain)?;
            write_file(&dir.join("problem.pddl"), &problem)?;
            println!("{}: {}", dir.display(), planner::render_goal(&task));
        }
        None => println!("{domain}\n{problem}"),
    }
    Ok(())
}

/// Trains a model for `variant` unless a model file is given.
fn bench_model(path: Option<&Path>, train: &[Record], variant: ContextVariant, cfg: ModelConfig) -> Result<SequenceModel> {
    match path {
        Some(p) => load_model(p),
        None => Ok(eval::train_variant(train, variant, ContextOptions::default(), cfg)?),
    }
}

pub fn bench(config: &Config, a: crate::Bench) -> Result<()> {
    if a.n == 0 || a.prompts == 0 {
        return Err(usage("n and prompts must be positive"));
    }
    let records = eval::generate_records(a.n, config.seed, 5000.0 / 6000.0)?;
    let train: Vec<Record> = records.iter().filter(|r| r.split == Split::Train).cloned().collect();
    let test: Vec<&Record> = records.iter().filter(|r| r.split != Split::Train).take(a.prompts).collect();
    let cfg = model_config(config, None)?;
    let runs = [
        (ContextVariant::None, a.none_model.as_deref(), 200),
        (ContextVariant::FullContext, a.full_model.as_deref(), 1024),
    ];
    let mut results = Vec::new();
    for (variant, path, max_len) in runs {
        let model = bench_model(path, &train, variant, cfg)?;
        let prompts: Vec<String> = test
            .iter()
            .map(|r| Ok(prompt_text(&r.goal, r.context(variant, ContextOptions::default())?.as_deref())))
            .collect::<Result<_>>()?;
        results.push(eval::bench(variant.as_str(), &model, &prompts, &DecodingStrategy::Greedy, max_len)?);
    }
    println!("{:<14} {:>7} {:>10} {:>8} {:>11}", "config", "max_len", "iterations", "it/s", "mean_tokens");
    for r in &results {
        println!(
            "{:<14} {:>7} {:>10} {:>8.1} {:>11.1}",
            r.label, r.max_len, r.iterations, r.iterations_per_second, r.mean_tokens
        );
    }
    let lower = results[1].iterations_per_second < results[0].iterations_per_second;
    println!("full-context throughput lower: {}", if lower { "yes" } else { "no" });
    if a.check && !lower {
        return Err(CheckFailed(1).into());
    }
    Ok(())
}
