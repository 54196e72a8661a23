use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{generate_records, Record, Split};
use super::metrics::{plan_accuracy, success_rates, AccuracyTriple, PlanScore, SuccessRates, RATED_ACTIONS};
use crate::domain::{DomainKnowledge, RoomKind};
use crate::error::EvalError;
use crate::graph2nl::{describe_step, ContextOptions, ContextVariant, GeoRelation};
use crate::grounding::execute_plan;
use crate::lm::{generate, pretokenize, train_on_texts, DecodingStrategy, ModelConfig, SequenceModel};
use crate::plandsl::{extract_between_markers, parse_plan, prompt_text, serialize_sample, HighLevelAction, Plan, PlanStep};
use crate::planner::{goal_lexicon, solve, TaskCategory};

/// Tokens every model registers even if its training split never used
/// them: goal sentences for every category, relation words and symbols,
/// step descriptions and plan syntax.
pub fn domain_vocabulary() -> Vec<String> {
    let dk = DomainKnowledge::builtin();
    let mut texts = goal_lexicon();
    for kind in RoomKind::ALL {
        texts.push(format!("[{}=\n- x]", kind.title()));
    }
    for r in GeoRelation::all() {
        texts.push(format!("- {} {}", r.to_text(false), r.to_text(true)));
    }
    for c in dk.categories.keys() {
        let sym = dk.plan_symbol(c);
        texts.push(format!("{c} {sym}"));
        for a in HighLevelAction::ALL {
            let args = vec![sym.to_string(); a.arity()];
            texts.push(describe_step(a, &args));
            texts.push(format!("{}.{}", 0, PlanStep { action: a, args }));
        }
    }
    texts.push((0..64).map(|i| format!("{i}.")).collect::<Vec<_>>().join(" "));
    let mut v: Vec<String> = texts.iter().flat_map(|t| pretokenize(t)).map(str::to_string).collect();
    v.sort();
    v.dedup();
    v
}

pub fn train_variant(
    train: &[Record],
    variant: ContextVariant,
    opts: ContextOptions,
    config: ModelConfig,
) -> Result<SequenceModel, EvalError> {
    let texts: Vec<String> = train
        .par_iter()
        .map(|r| Ok(serialize_sample(&r.sample(variant, opts)?)))
        .collect::<Result<_, EvalError>>()?;
    Ok(train_on_texts(&texts, &domain_vocabulary(), config)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Prompt plus continuation as produced by the model.
    pub text: String,
    pub plan: Option<Plan>,
    pub truncated: bool,
}

pub fn predict(
    model: &SequenceModel,
    goal: &str,
    context: Option<&str>,
    strategy: &DecodingStrategy,
    max_len: usize,
) -> Result<Prediction, EvalError> {
    let prompt = prompt_text(goal, context);
    let g = generate(model, &prompt, strategy, max_len)?;
    let (plan, truncated) = match extract_between_markers(&g.text) {
        Ok(e) => (parse_plan(e.text).ok().filter(|_| !e.truncated), e.truncated),
        Err(_) => (None, true),
    };
    Ok(Prediction { text: g.text, plan, truncated })
}

/// Outcome of one evaluated sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub id: String,
    pub split: Split,
    pub category: TaskCategory,
    pub score: PlanScore,
    pub predicted: Option<Plan>,
    pub rates: SuccessRates,
    pub goal_reached: bool,
}

fn run_episode(record: &Record, predicted: Option<Plan>) -> Result<Episode, EvalError> {
    let score = plan_accuracy(predicted.as_ref(), &record.plan);
    let (rates, goal_reached) = match &predicted {
        Some(p) => {
            let mut state = record.scene()?;
            let trace = execute_plan(p, &mut state, true);
            (success_rates([&trace]), record.task.goal_satisfied(&state))
        }
        None => (SuccessRates::default(), false),
    };
    Ok(Episode {
        id: record.id.clone(),
        split: record.split,
        category: record.task.category,
        score,
        predicted,
        rates,
        goal_reached,
    })
}

/// Generates, scores and executes a plan for every record. Sampled
/// decoding uses an independent stream per record.
pub fn evaluate_model(
    model: &SequenceModel,
    records: &[Record],
    variant: ContextVariant,
    opts: ContextOptions,
    strategy: &DecodingStrategy,
    max_len: usize,
) -> Result<Vec<Episode>, EvalError> {
    records
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            let ctx = r.context(variant, opts)?;
            let p = predict(model, &r.goal, ctx.as_deref(), &strategy.for_stream(i as u64), max_len)?;
            run_episode(r, p.plan)
        })
        .collect()
}

/// Plans every record with the symbolic planner under the given budget.
/// Budget exhaustion counts as an unparseable prediction.
pub fn evaluate_baseline(records: &[Record], budget: usize) -> Result<Vec<Episode>, EvalError> {
    records
        .par_iter()
        .map(|r| {
            let scene = r.scene()?;
            run_episode(r, solve(&r.task, &scene, budget).ok().map(|s| s.plan))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    /// Context variant name, or `baseline` for the symbolic planner.
    pub system: String,
    pub split: Split,
    /// Task category, or `all`.
    pub category: String,
    pub samples: usize,
    pub accuracy: AccuracyTriple,
    pub goal_success: f64,
    pub rates: SuccessRates,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
}

impl EvalReport {
    /// Adds one `all` row per split plus one row per (split, category).
    pub fn add(&mut self, system: &str, episodes: &[Episode]) {
        let mut groups: BTreeMap<(Split, String), Vec<&Episode>> = BTreeMap::new();
        for e in episodes {
            groups.entry((e.split, "all".into())).or_default().push(e);
            groups.entry((e.split, e.category.to_string())).or_default().push(e);
        }
        for ((split, category), eps) in groups {
            let mut rates = SuccessRates::default();
            for e in &eps {
                rates.merge(&e.rates);
            }
            self.rows.push(ReportRow {
                system: system.to_string(),
                split,
                category,
                samples: eps.len(),
                accuracy: AccuracyTriple::from_scores(eps.iter().map(|e| &e.score)),
                goal_success: eps.iter().filter(|e| e.goal_reached).count() as f64 / eps.len() as f64,
                rates,
            });
        }
    }

    pub fn row(&self, system: &str, split: Split, category: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.system == system && r.split == split && r.category == category)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("system,split,category,samples,action_acc,argument_acc,full_plan_acc,goal_success");
        for a in RATED_ACTIONS {
            let _ = write!(out, ",{}", a.name());
        }
        out.push('\n');
        for r in &self.rows {
            let a = &r.accuracy;
            let _ = write!(
                out,
                "{},{},{},{},{:.4},{:.4},{:.4},{:.4}",
                r.system, r.split, r.category, r.samples, a.action_acc, a.argument_acc, a.full_plan_acc, r.goal_success
            );
            for act in RATED_ACTIONS {
                match r.rates.rate(act) {
                    Some(x) => {
                        let _ = write!(out, ",{x:.4}");
                    }
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Fixed-width table of the `all` rows.
    pub fn to_table(&self) -> String {
        let w = self.rows.iter().map(|r| r.system.len()).max().unwrap_or(0).max(6);
        let mut out = format!(
            "{:<w$} {:<7} {:>6} {:>7} {:>7} {:>7} {:>7}\n",
            "system", "split", "n", "action", "args", "full", "goal"
        );
        for r in self.rows.iter().filter(|r| r.category == "all") {
            let a = &r.accuracy;
            let _ = writeln!(
                out,
                "{:<w$} {:<7} {:>6} {:>7.3} {:>7.3} {:>7.3} {:>7.3}",
                r.system,
                r.split.as_str(),
                r.samples,
                a.action_acc,
                a.argument_acc,
                a.full_plan_acc,
                r.goal_success
            );
        }
        out
    }
}

/// Report name of a variant evaluated with a non-default decoding.
pub fn sampled_system(variant: ContextVariant, strategy: &DecodingStrategy) -> String {
    match strategy {
        DecodingStrategy::Greedy => variant.as_str().to_string(),
        DecodingStrategy::Sampled { seed, .. } => format!("{variant}+sampled{seed}"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub seed: u64,
    pub split_ratio: f64,
    pub variants: Vec<ContextVariant>,
    pub model: ModelConfig,
    pub context: ContextOptions,
    pub strategy: DecodingStrategy,
    /// Extra decodings evaluated per variant, reported under
    /// [`sampled_system`] names.
    pub sampled: Vec<DecodingStrategy>,
    pub max_len: usize,
    pub budget: usize,
    /// Splits to evaluate on.
    pub splits: Vec<Split>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 6000,
            seed: 0,
            split_ratio: 5000.0 / 6000.0,
            variants: ContextVariant::ALL.to_vec(),
            model: ModelConfig::default(),
            context: ContextOptions::default(),
            strategy: DecodingStrategy::Greedy,
            sampled: Vec::new(),
            max_len: crate::lm::DEFAULT_MAX_LEN,
            budget: crate::planner::DEFAULT_BUDGET,
            splits: vec![Split::Seen, Split::Unseen],
        }
    }
}

/// Trains one model per variant on the training split, evaluates each on
/// the configured splits and adds the symbolic baseline.
pub fn run_experiment(config: &ExperimentConfig) -> Result<EvalReport, EvalError> {
    let records = generate_records(config.n, config.seed, config.split_ratio)?;
    run_on_records(config, &records)
}

pub fn run_on_records(config: &ExperimentConfig, records: &[Record]) -> Result<EvalReport, EvalError> {
    let train: Vec<Record> = records.iter().filter(|r| r.split == Split::Train).cloned().collect();
    let test: Vec<Record> = records.iter().filter(|r| config.splits.contains(&r.split)).cloned().collect();
    if train.is_empty() || test.is_empty() {
        return Err(EvalError::Dataset("experiment needs training and evaluation samples".into()));
    }
    let mut report = EvalReport::default();
    for v in &config.variants {
        let model = train_variant(&train, *v, config.context, config.model)?;
        let eps = evaluate_model(&model, &test, *v, config.context, &config.strategy, config.max_len)?;
        report.add(v.as_str(), &eps);
        for s in &config.sampled {
            let eps = evaluate_model(&model, &test, *v, config.context, s, config.max_len)?;
            report.add(&sampled_system(*v, s), &eps);
        }
    }
    report.add("baseline", &evaluate_baseline(&test, config.budget)?);
    Ok(report)
}
