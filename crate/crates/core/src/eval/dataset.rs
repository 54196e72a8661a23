use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::RoomKind;
use crate::error::EvalError;
use crate::graph2nl::{emit_context, ContextOptions, ContextVariant};
use crate::grounding::execute_plan;
use crate::plandsl::{serialize_sample, Plan, Sample};
use crate::planner::{render_goal, sample_task, solve, TaskSpec};
use crate::world::{generate_scene, WorldState};

pub const DATASET_FORMAT_VERSION: u32 = 1;

/// Scene indices at or above this value are reserved for unseen scenes.
const UNSEEN_BASE: u64 = 1 << 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Seen,
    Unseen,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Seen, Split::Unseen];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Seen => "seen",
            Split::Unseen => "unseen",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Split::ALL.into_iter().find(|x| x.as_str() == s).ok_or_else(|| format!("unknown split `{s}`"))
    }
}

/// One (scene, task, gold plan) sample. The scene is stored by its seed and
/// room and regenerated on demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    pub split: Split,
    pub room: RoomKind,
    pub scene_seed: u64,
    pub task_seed: u64,
    pub task: TaskSpec,
    pub goal: String,
    pub plan: Plan,
}

impl Record {
    pub fn scene(&self) -> Result<WorldState, EvalError> {
        Ok(generate_scene(self.scene_seed, self.room)?)
    }

    pub fn context(&self, variant: ContextVariant, opts: ContextOptions) -> Result<Option<String>, EvalError> {
        if variant == ContextVariant::None {
            return Ok(None);
        }
        let scene = self.scene()?;
        Ok(Some(emit_context(variant, &scene, &self.task.target, Some(&self.plan), opts)?))
    }

    pub fn sample(&self, variant: ContextVariant, opts: ContextOptions) -> Result<Sample, EvalError> {
        Ok(Sample { goal: self.goal.clone(), context: self.context(variant, opts)?, plan: self.plan.clone() })
    }
}

/// Split sizes for `n` samples: train gets `round(n * ratio)`, the rest is
/// halved between seen and unseen (unseen takes the odd one).
pub fn split_sizes(n: usize, ratio: f64) -> (usize, usize, usize) {
    let train = ((n as f64) * ratio).round().clamp(0.0, n as f64) as usize;
    let seen = (n - train) / 2;
    (train, seen, n - train - seen)
}

fn scene_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer keeps neighbouring indices uncorrelated
    let mut z = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn room_for(scene_seed: u64) -> RoomKind {
    let mut rng = ChaCha8Rng::seed_from_u64(scene_seed);
    RoomKind::ALL[rng.gen_range(0..RoomKind::ALL.len())]
}

fn make_record(split: Split, scene_seed: u64, task_seed: u64, avoid: Option<&TaskSpec>) -> Option<Record> {
    let room = room_for(scene_seed);
    let scene = generate_scene(scene_seed, room).ok()?;
    let mut task_seed = task_seed;
    let mut task = sample_task(task_seed, &scene).ok()?;
    // seen samples need a task that differs from the training one
    for _ in 0..16 {
        if avoid.is_none_or(|a| (&a.category, &a.target, &a.receptacle) != (&task.category, &task.target, &task.receptacle)) {
            break;
        }
        task_seed = task_seed.wrapping_add(0x1000);
        task = sample_task(task_seed, &scene).ok()?;
    }
    let plan = solve(&task, &scene, crate::planner::DEFAULT_BUDGET).ok()?.plan;
    let mut check = scene.clone();
    let trace = execute_plan(&plan, &mut check, false);
    if !trace.all_succeeded() || !task.goal_satisfied(&check) {
        return None;
    }
    Some(Record {
        id: String::new(),
        split,
        room,
        scene_seed,
        task_seed,
        goal: render_goal(&task),
        task,
        plan,
    })
}

/// First `count` records produced over increasing indices from `base`.
/// Indices are tried in parallel chunks; order is preserved.
fn gather(count: usize, base: u64, make: impl Fn(u64) -> Option<Record> + Sync) -> Vec<Record> {
    let mut out: Vec<Record> = Vec::with_capacity(count);
    let mut start = base;
    while out.len() < count {
        let chunk = ((count - out.len()) * 5 / 4 + 8) as u64;
        let batch: Vec<Option<Record>> = (start..start + chunk).into_par_iter().map(&make).collect();
        out.extend(batch.into_iter().flatten().take(count - out.len()));
        start += chunk;
    }
    out
}

/// Deterministic dataset of `n` samples split into train / seen / unseen.
/// Seen samples reuse training scenes with a re-sampled task; unseen
/// samples come from scene seeds never used for training.
pub fn generate_records(n: usize, seed: u64, split_ratio: f64) -> Result<Vec<Record>, EvalError> {
    if n == 0 {
        return Err(EvalError::Dataset("dataset size must be positive".into()));
    }
    let (n_train, n_seen, n_unseen) = split_sizes(n, split_ratio);
    let fresh = |split: Split| {
        move |i: u64| make_record(split, scene_seed(seed, i), scene_seed(seed ^ 0x5eed, i), None)
    };
    let train = gather(n_train, 0, fresh(Split::Train));
    let unseen = gather(n_unseen, UNSEEN_BASE, fresh(Split::Unseen));
    if n_seen > 0 && train.is_empty() {
        return Err(EvalError::Dataset("seen split needs training scenes".into()));
    }
    let seen = gather(n_seen, 0, |i| {
        let base = &train[(i % train.len() as u64) as usize];
        make_record(Split::Seen, base.scene_seed, base.task_seed ^ 0xa5a5_0000 ^ i, Some(&base.task))
    });
    let mut all: Vec<Record> = train.into_iter().chain(seen).chain(unseen).collect();
    for (i, r) in all.iter_mut().enumerate() {
        r.id = format!("{}-{i:06}", r.split);
    }
    Ok(all)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub format_version: u32,
    pub n: usize,
    pub seed: u64,
    pub split_ratio: f64,
    pub variant: ContextVariant,
    pub context: ContextOptions,
    pub counts: std::collections::BTreeMap<Split, usize>,
}

/// A JSONL line: the record plus its context and serialized training text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    #[serde(flatten)]
    pub record: Record,
    pub context: Option<String>,
    pub text: String,
}

pub const META_FILE: &str = "metadata.json";

pub fn split_path(dir: &Path, split: Split) -> PathBuf {
    dir.join(format!("{split}.jsonl"))
}

/// Generates a dataset and writes one JSONL file per split plus a metadata
/// sidecar into `dir`.
pub fn gen_dataset(
    dir: &Path,
    n: usize,
    seed: u64,
    variant: ContextVariant,
    split_ratio: f64,
    opts: ContextOptions,
) -> Result<DatasetMeta, EvalError> {
    let records = generate_records(n, seed, split_ratio)?;
    write_dataset(dir, &records, variant, opts, seed, split_ratio)
}

pub fn write_dataset(
    dir: &Path,
    records: &[Record],
    variant: ContextVariant,
    opts: ContextOptions,
    seed: u64,
    split_ratio: f64,
) -> Result<DatasetMeta, EvalError> {
    fs::create_dir_all(dir)?;
    let rows: Vec<Row> = records
        .par_iter()
        .map(|r| {
            let sample = r.sample(variant, opts)?;
            Ok(Row { record: r.clone(), text: serialize_sample(&sample), context: sample.context })
        })
        .collect::<Result<_, EvalError>>()?;
    let mut counts = std::collections::BTreeMap::new();
    for split in Split::ALL {
        let mut f = std::io::BufWriter::new(fs::File::create(split_path(dir, split))?);
        let mut k = 0;
        for row in rows.iter().filter(|r| r.record.split == split) {
            serde_json::to_writer(&mut f, row)?;
            f.write_all(b"\n")?;
            k += 1;
        }
        f.flush()?;
        counts.insert(split, k);
    }
    let meta = DatasetMeta {
        format_version: DATASET_FORMAT_VERSION,
        n: records.len(),
        seed,
        split_ratio,
        variant,
        context: opts,
        counts,
    };
    fs::write(dir.join(META_FILE), serde_json::to_string_pretty(&meta)?)?;
    Ok(meta)
}

pub fn read_meta(dir: &Path) -> Result<DatasetMeta, EvalError> {
    let meta: DatasetMeta = serde_json::from_str(&fs::read_to_string(dir.join(META_FILE))?)?;
    if meta.format_version != DATASET_FORMAT_VERSION {
        return Err(EvalError::Dataset(format!("unsupported dataset format {}", meta.format_version)));
    }
    Ok(meta)
}

pub fn read_split(dir: &Path, split: Split) -> Result<Vec<Row>, EvalError> {
    let f = BufReader::new(fs::File::open(split_path(dir, split))?);
    let mut rows = Vec::new();
    for line in f.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            rows.push(serde_json::from_str(&line)?);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_arithmetic() {
        assert_eq!(split_sizes(1000, 0.8), (800, 100, 100));
        assert_eq!(split_sizes(11, 0.8), (9, 1, 1));
        assert_eq!(split_sizes(1, 1.0), (1, 0, 0));
    }
}
