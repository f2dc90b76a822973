//! Staged fine-tuning schedules, the held-out target set, cross-validation
//! folds, and the manifests handed to an external trainer.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bm25::Bm25Params;
use crate::corpus::{DatasetSubsetId, QAPair, YesNoInstance};
use crate::io::{write_json, write_jsonl, FormatError, RunProvenance, SquadDataset};
use crate::morph::{
    transform_dataset, FieldSelector, TransformChain, TransformJob, TransformKind, TransformSpec, TransformTarget,
    Transformable, Transformer,
};

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("unknown schedule `{0}`")]
    UnknownSchedule(String),
    #[error("holdout fraction for {subset} must be in (0, 1), got {fraction}")]
    InvalidFraction { subset: DatasetSubsetId, fraction: f64 },
    #[error("{0} cannot contribute to the target test set")]
    HoldoutNotAllowed(DatasetSubsetId),
    #[error("subset {0} has no instances")]
    EmptySubset(DatasetSubsetId),
    #[error("duplicate instance id `{0}`")]
    DuplicateId(String),
    #[error("need at least {need} ids for cross-validation, got {got}")]
    TooFewIds { got: usize, need: usize },
    #[error("dataset for subset {0} was not provided")]
    MissingDataset(DatasetSubsetId),
    #[error("schedule `{0}` transforms text but no lexicons were loaded")]
    MissingTransformer(String),
    #[error(transparent)]
    Format(#[from] FormatError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSpec {
    pub stage_index: usize,
    pub subset: DatasetSubsetId,
    #[serde(default)]
    pub chain: Option<TransformChain>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub schedule_id: String,
    pub stages: Vec<StageSpec>,
}

impl Schedule {
    fn new(id: &str, subsets: &[DatasetSubsetId], chain: Option<TransformChain>) -> Self {
        Schedule {
            schedule_id: id.to_string(),
            stages: subsets
                .iter()
                .enumerate()
                .map(|(i, &subset)| StageSpec {
                    stage_index: i + 1,
                    subset,
                    chain: chain.clone(),
                })
                .collect(),
        }
    }

    /// Yes/no schedules train on PQA-A/PQA-L; the rest are extractive.
    pub fn is_extractive(&self) -> bool {
        self.stages.iter().all(|s| s.subset.is_extractive())
    }
}

const ROMAN: [&str; 12] = ["I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX", "X", "XI", "XII"];

fn roman_chain(i: usize) -> Vec<TransformSpec> {
    use TransformKind::*;
    use TransformTarget::*;
    let targets = [Lemma, NeoForm, NeoMeaning];
    let kinds = [Replacement, Concatenation, Augmentation];
    match i {
        0..=8 => vec![TransformSpec::new(kinds[i % 3], targets[i / 3])],
        9 => vec![TransformSpec::new(Concatenation, Lemma), TransformSpec::new(Replacement, NeoForm)],
        10 => vec![TransformSpec::new(Replacement, NeoForm), TransformSpec::new(Replacement, NeoMeaning)],
        _ => vec![
            TransformSpec::new(Concatenation, Lemma),
            TransformSpec::new(Replacement, NeoForm),
            TransformSpec::new(Replacement, NeoMeaning),
        ],
    }
}

/// The 17 predefined schedules: "1".."4", "baseline", then "I".."XII".
pub fn builtin_schedules() -> Vec<Schedule> {
    use DatasetSubsetId::*;
    let mut out = vec![
        Schedule::new("1", &[D1], None),
        Schedule::new("2", &[D2, D1], None),
        Schedule::new("3", &[D2, D1, D3], None),
        Schedule::new("4", &[D2, D1, D3, D4], None),
        Schedule::new("baseline", &[PqaA, PqaL], None),
    ];
    for (i, id) in ROMAN.iter().enumerate() {
        let chain = TransformChain::new(roman_chain(i)).expect("builtin chains are valid");
        out.push(Schedule::new(id, &[PqaA, PqaL], Some(chain)));
    }
    out
}

pub fn find_schedule(id: &str) -> Result<Schedule, ScheduleError> {
    builtin_schedules()
        .into_iter()
        .find(|s| s.schedule_id.eq_ignore_ascii_case(id))
        .ok_or_else(|| ScheduleError::UnknownSchedule(id.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub seed: u64,
    pub holdout_fraction: BTreeMap<DatasetSubsetId, f64>,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            seed: 0,
            holdout_fraction: [DatasetSubsetId::D1, DatasetSubsetId::D3, DatasetSubsetId::D4]
                .into_iter()
                .map(|s| (s, 0.10))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSplit {
    pub train: BTreeMap<DatasetSubsetId, Vec<String>>,
    pub test: BTreeMap<DatasetSubsetId, Vec<String>>,
}

impl TargetSplit {
    /// All held-out ids (the target test set).
    pub fn test_ids(&self) -> BTreeSet<String> {
        self.test.values().flatten().cloned().collect()
    }
}

// Each subset samples from its own stream so adding a subset does not
// disturb the others.
fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn sorted_unique(ids: &[String]) -> Result<Vec<String>, ScheduleError> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(ScheduleError::DuplicateId(id.clone()));
        }
    }
    let mut v = ids.to_vec();
    v.sort();
    Ok(v)
}

/// Seeded sampling of the target test set. Subsets without a holdout
/// fraction go entirely to training. Output lists are sorted.
pub fn make_target_split(
    datasets: &BTreeMap<DatasetSubsetId, Vec<String>>,
    spec: &SplitSpec,
) -> Result<TargetSplit, ScheduleError> {
    for (&subset, &fraction) in &spec.holdout_fraction {
        if subset == DatasetSubsetId::D2 {
            return Err(ScheduleError::HoldoutNotAllowed(subset));
        }
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(ScheduleError::InvalidFraction { subset, fraction });
        }
        if datasets.get(&subset).is_none_or(|ids| ids.is_empty()) {
            return Err(ScheduleError::EmptySubset(subset));
        }
    }
    let mut split = TargetSplit::default();
    for (&subset, ids) in datasets {
        let mut ids = sorted_unique(ids)?;
        let Some(&fraction) = spec.holdout_fraction.get(&subset) else {
            split.train.insert(subset, ids);
            continue;
        };
        let n = ids.len();
        let mut k = (fraction * n as f64).round() as usize;
        if n < 10 {
            warn!("{subset}: only {n} instances, holding out {}", k.max(1));
            k = k.max(1);
        }
        ids.shuffle(&mut rng_for(spec.seed, subset as u64));
        let mut test = ids.split_off(n - k);
        test.sort();
        ids.sort();
        split.train.insert(subset, ids);
        split.test.insert(subset, test);
    }
    Ok(split)
}

pub const N_FOLDS: usize = 10;
const FULL_PQA_L: usize = 1000;
const FOLD_STREAM: u64 = 0xF01D;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<String>,
    pub validation: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSpec {
    pub seed: u64,
    pub n_folds: usize,
    pub pool: Vec<String>,
    pub reserved_test: Vec<String>,
    pub folds: Vec<Fold>,
}

/// Half of the ids go to a cross-validation pool split into ten folds; the
/// other half is reserved for testing. With 1000 ids this is 500/500 and
/// 450/50 per fold.
pub fn make_folds(ids: &[String], seed: u64) -> Result<FoldSpec, ScheduleError> {
    let mut ids = sorted_unique(ids)?;
    let n = ids.len();
    if n != FULL_PQA_L {
        warn!("cross-validation over {n} ids instead of {FULL_PQA_L}; sizes scaled");
    }
    let pool_size = n / 2;
    if pool_size < N_FOLDS {
        return Err(ScheduleError::TooFewIds { got: n, need: 2 * N_FOLDS });
    }
    ids.shuffle(&mut rng_for(seed, FOLD_STREAM));
    let mut reserved_test = ids.split_off(pool_size);
    reserved_test.sort();
    let pool = ids;

    let mut folds = Vec::with_capacity(N_FOLDS);
    let mut start = 0;
    for k in 0..N_FOLDS {
        let len = pool_size / N_FOLDS + usize::from(k < pool_size % N_FOLDS);
        let mut validation = pool[start..start + len].to_vec();
        let mut train: Vec<String> = pool[..start].iter().chain(&pool[start + len..]).cloned().collect();
        validation.sort();
        train.sort();
        folds.push(Fold { train, validation });
        start += len;
    }
    let mut pool = pool;
    pool.sort();
    Ok(FoldSpec {
        seed,
        n_folds: N_FOLDS,
        pool,
        reserved_test,
        folds,
    })
}

/// Materialized datasets available to schedules.
#[derive(Debug, Clone, Default)]
pub struct StageInputs {
    pub extractive: BTreeMap<DatasetSubsetId, Vec<QAPair>>,
    pub yes_no: BTreeMap<DatasetSubsetId, Vec<YesNoInstance>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage_index: usize,
    pub subset: DatasetSubsetId,
    pub transform_chain: Option<TransformChain>,
    /// Relative to the manifest.
    pub dataset_path: String,
    pub n_instances: usize,
    pub n_augmented: usize,
    pub n_rejected: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schedule_id: String,
    pub stages: Vec<StageManifest>,
    pub test_path: String,
    pub n_test: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub folds_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<RunProvenance>,
}

pub struct EmitOptions<'a> {
    /// Held out of every training file and written as the test file.
    pub test_ids: &'a BTreeSet<String>,
    pub folds: Option<&'a FoldSpec>,
    pub transformer: Option<&'a Transformer>,
    pub fields: FieldSelector,
    pub bm25: Bm25Params,
    pub provenance: Option<RunProvenance>,
}

struct Staged<T> {
    items: Vec<T>,
    n_augmented: usize,
    n_rejected: usize,
}

fn prepare<T: Transformable + Clone>(
    source: &[T],
    keep: impl Fn(&T) -> bool,
    chain: Option<&TransformChain>,
    opts: &EmitOptions<'_>,
    schedule_id: &str,
    main_only: bool,
) -> Result<Staged<T>, ScheduleError> {
    let kept: Vec<T> = source.iter().filter(|i| keep(i)).cloned().collect();
    let Some(chain) = chain.filter(|c| !c.is_empty()) else {
        return Ok(Staged { items: kept, n_augmented: 0, n_rejected: 0 });
    };
    let transformer = opts
        .transformer
        .ok_or_else(|| ScheduleError::MissingTransformer(schedule_id.to_string()))?;
    let job = TransformJob {
        transformer,
        chain,
        fields: opts.fields,
        bm25: opts.bm25,
    };
    let out = transform_dataset(&kept, &job);
    let originals: HashSet<&str> = kept.iter().map(|i| i.id()).collect();
    let mut items = out.instances;
    if main_only {
        items.retain(|i| originals.contains(i.id()));
    }
    let n_augmented = items.iter().filter(|i| !originals.contains(i.id())).count();
    Ok(Staged {
        items,
        n_augmented,
        n_rejected: out.rejected.len(),
    })
}

/// Writes `manifest.json`, one dataset file per stage and a test file into
/// `out_dir`. Stage files never contain test ids.
pub fn emit_schedule(
    schedule: &Schedule,
    inputs: &StageInputs,
    opts: &EmitOptions<'_>,
    out_dir: &Path,
) -> Result<Manifest, ScheduleError> {
    let extractive = schedule.is_extractive();
    let not_test = |id: &str| !opts.test_ids.contains(id);
    let mut stages = Vec::with_capacity(schedule.stages.len());

    for stage in &schedule.stages {
        let chain = stage.chain.as_ref();
        let name = format!("stage{}_{}", stage.stage_index, stage.subset);
        let (file, staged) = if stage.subset.is_extractive() {
            let src = inputs
                .extractive
                .get(&stage.subset)
                .ok_or(ScheduleError::MissingDataset(stage.subset))?;
            let s = prepare(src, |p| not_test(&p.id), chain, opts, &schedule.schedule_id, false)?;
            let file = format!("{name}.json");
            SquadDataset::from_pairs(&s.items, opts.provenance.clone()).write(&out_dir.join(&file))?;
            (file, (s.items.len(), s.n_augmented, s.n_rejected))
        } else {
            let src = inputs
                .yes_no
                .get(&stage.subset)
                .ok_or(ScheduleError::MissingDataset(stage.subset))?;
            let s = prepare(src, |i| not_test(&i.id), chain, opts, &schedule.schedule_id, false)?;
            let file = format!("{name}.jsonl");
            write_jsonl(&out_dir.join(&file), &s.items)?;
            (file, (s.items.len(), s.n_augmented, s.n_rejected))
        };
        stages.push(StageManifest {
            stage_index: stage.stage_index,
            subset: stage.subset,
            transform_chain: stage.chain.clone(),
            dataset_path: file,
            n_instances: staged.0,
            n_augmented: staged.1,
            n_rejected: staged.2,
        });
    }

    // The test set shares the schedule's representation but never gets
    // augmented copies.
    let chain = schedule.stages.last().and_then(|s| s.chain.as_ref());
    let is_test = |id: &str| opts.test_ids.contains(id);
    let (test_path, n_test) = if extractive {
        let all: Vec<QAPair> = inputs.extractive.values().flatten().cloned().collect();
        let s = prepare(&all, |p| is_test(&p.id), chain, opts, &schedule.schedule_id, true)?;
        let file = "test.json".to_string();
        SquadDataset::from_pairs(&s.items, opts.provenance.clone()).write(&out_dir.join(&file))?;
        (file, s.items.len())
    } else {
        let all: Vec<YesNoInstance> = inputs.yes_no.values().flatten().cloned().collect();
        let s = prepare(&all, |i| is_test(&i.id), chain, opts, &schedule.schedule_id, true)?;
        let file = "test.jsonl".to_string();
        write_jsonl(&out_dir.join(&file), &s.items)?;
        (file, s.items.len())
    };
    if n_test < opts.test_ids.len() {
        warn!(
            "schedule {}: {} of {} test ids found in the provided datasets",
            schedule.schedule_id,
            n_test,
            opts.test_ids.len()
        );
    }

    let folds_path = match (opts.folds, extractive) {
        (Some(folds), false) => {
            write_json(&out_dir.join("folds.json"), folds)?;
            Some("folds.json".to_string())
        }
        _ => None,
    };

    let manifest = Manifest {
        schedule_id: schedule.schedule_id.clone(),
        stages,
        test_path,
        n_test,
        folds_path,
        provenance: opts.provenance.clone(),
    };
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Provenance, YesNo};
    use crate::morph::{LemmaLexicon, MorphemeLexicon};
    use DatasetSubsetId::*;
    use TransformKind::*;
    use TransformTarget::*;

    fn ids(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i:04}")).collect()
    }

    #[test]
    fn seventeen_schedules_in_order() {
        let all = builtin_schedules();
        let names: Vec<_> = all.iter().map(|s| s.schedule_id.as_str()).collect();
        assert_eq!(
            names,
            ["1", "2", "3", "4", "baseline", "I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX", "X", "XI", "XII"]
        );
        let subsets = |id: &str| find_schedule(id).unwrap().stages.iter().map(|s| s.subset).collect::<Vec<_>>();
        assert_eq!(subsets("1"), [D1]);
        assert_eq!(subsets("2"), [D2, D1]);
        assert_eq!(subsets("4"), [D2, D1, D3, D4]);
        assert_eq!(subsets("baseline"), [PqaA, PqaL]);
        assert!(find_schedule("baseline").unwrap().stages.iter().all(|s| s.chain.is_none()));
    }

    #[test]
    fn roman_schedule_chains() {
        let chain = |id: &str| {
            let s = find_schedule(id).unwrap();
            assert_eq!(s.stages[0].chain, s.stages[1].chain);
            s.stages[1].chain.clone().unwrap().specs().iter().map(|s| (s.kind, s.target)).collect::<Vec<_>>()
        };
        assert_eq!(chain("I"), [(Replacement, Lemma)]);
        assert_eq!(chain("III"), [(Augmentation, Lemma)]);
        assert_eq!(chain("V"), [(Concatenation, NeoForm)]);
        assert_eq!(chain("VII"), [(Replacement, NeoMeaning)]);
        assert_eq!(chain("IX"), [(Augmentation, NeoMeaning)]);
        assert_eq!(chain("X"), [(Concatenation, Lemma), (Replacement, NeoForm)]);
        assert_eq!(chain("XI"), [(Replacement, NeoForm), (Replacement, NeoMeaning)]);
        assert_eq!(chain("XII"), [(Concatenation, Lemma), (Replacement, NeoForm), (Replacement, NeoMeaning)]);
        assert!(matches!(find_schedule("XIII"), Err(ScheduleError::UnknownSchedule(_))));
    }

    fn datasets() -> BTreeMap<DatasetSubsetId, Vec<String>> {
        [(D1, ids("a", 1000)), (D2, ids("b", 300)), (D3, ids("c", 40)), (D4, ids("d", 7))].into_iter().collect()
    }

    #[test]
    fn target_split_sizes() {
        let split = make_target_split(&datasets(), &SplitSpec::default()).unwrap();
        assert_eq!(split.test[&D1].len(), 100);
        assert_eq!(split.train[&D1].len(), 900);
        assert!(!split.test.contains_key(&D2));
        assert_eq!(split.train[&D2].len(), 300);
        assert_eq!(split.test[&D3].len(), 4);
        assert_eq!(split.test[&D4].len(), 1);
        let test = split.test_ids();
        assert!(split.train.values().flatten().all(|id| !test.contains(id)));
        assert_eq!(split, make_target_split(&datasets(), &SplitSpec::default()).unwrap());
        let other = make_target_split(&datasets(), &SplitSpec { seed: 1, ..SplitSpec::default() }).unwrap();
        assert_ne!(split.test[&D1], other.test[&D1]);
    }

    #[test]
    fn target_split_errors() {
        let mut spec = SplitSpec::default();
        spec.holdout_fraction.insert(D2, 0.1);
        assert!(matches!(make_target_split(&datasets(), &spec), Err(ScheduleError::HoldoutNotAllowed(D2))));
        let mut spec = SplitSpec::default();
        spec.holdout_fraction.insert(D1, 1.0);
        assert!(matches!(make_target_split(&datasets(), &spec), Err(ScheduleError::InvalidFraction { .. })));
        let mut d = datasets();
        d.remove(&D3);
        assert!(matches!(make_target_split(&d, &SplitSpec::default()), Err(ScheduleError::EmptySubset(D3))));
        let mut d = datasets();
        d.get_mut(&D1).unwrap().push("a0001".into());
        assert!(matches!(make_target_split(&d, &SplitSpec::default()), Err(ScheduleError::DuplicateId(_))));
    }

    #[test]
    fn folds_partition_the_pool() {
        let f = make_folds(&ids("p", 1000), 7).unwrap();
        assert_eq!((f.pool.len(), f.reserved_test.len(), f.folds.len()), (500, 500, 10));
        let mut union = BTreeSet::new();
        for fold in &f.folds {
            assert_eq!((fold.train.len(), fold.validation.len()), (450, 50));
            for id in &fold.validation {
                assert!(union.insert(id.clone()), "validation folds overlap");
            }
        }
        assert_eq!(union.into_iter().collect::<Vec<_>>(), f.pool);
        assert!(f.pool.iter().all(|id| f.reserved_test.binary_search(id).is_err()));
        assert_eq!(f, make_folds(&ids("p", 1000), 7).unwrap());
    }

    #[test]
    fn folds_scale_and_reject_bad_input() {
        let f = make_folds(&ids("p", 105), 1).unwrap();
        assert_eq!(f.pool.len(), 52);
        assert_eq!(f.folds.iter().map(|x| x.validation.len()).sum::<usize>(), 52);
        assert!(matches!(make_folds(&ids("p", 19), 1), Err(ScheduleError::TooFewIds { .. })));
        let mut dup = ids("p", 100);
        dup.push("p0000".into());
        assert!(matches!(make_folds(&dup, 1), Err(ScheduleError::DuplicateId(_))));
    }

    fn pair(id: &str, subset: DatasetSubsetId) -> QAPair {
        QAPair {
            id: id.into(),
            question: "Do details differ?".into(),
            context: "Nothing else. Critical details differ.".into(),
            answer_text: "Critical details differ.".into(),
            answer_start: 14,
            subset,
            provenance: Provenance::Bm25Weak,
        }
    }

    fn yn(id: &str) -> YesNoInstance {
        YesNoInstance { id: id.into(), question: "Do details differ?".into(), context: "Details differ.".into(), label: YesNo::Yes }
    }

    #[test]
    fn emitted_stages_exclude_test_ids() {
        let dir = tempfile::tempdir().unwrap();
        let mut inputs = StageInputs::default();
        for s in [D1, D2, D3, D4] {
            inputs.extractive.insert(s, (0..20).map(|i| pair(&format!("{s}-{i}"), s)).collect());
        }
        let test: BTreeSet<String> = ["d1-3", "d3-0", "d4-19"].iter().map(|s| s.to_string()).collect();
        let opts = EmitOptions {
            test_ids: &test,
            folds: None,
            transformer: None,
            fields: FieldSelector::default(),
            bm25: Bm25Params::default(),
            provenance: None,
        };
        let m = emit_schedule(&find_schedule("4").unwrap(), &inputs, &opts, dir.path()).unwrap();
        assert_eq!(m.stages.len(), 4);
        assert_eq!(m.n_test, 3);
        for st in &m.stages {
            let data = SquadDataset::read(&dir.path().join(&st.dataset_path)).unwrap();
            assert!(data.gold_answers().keys().all(|id| !test.contains(id)));
            assert_eq!(data.data.len(), st.n_instances);
        }
        assert_eq!(m.stages[1].n_instances, 19);

        inputs.extractive.remove(&D3);
        let err = emit_schedule(&find_schedule("3").unwrap(), &inputs, &opts, dir.path()).unwrap_err();
        assert!(err.to_string().contains("d3"));
    }

    #[test]
    fn yes_no_schedules_transform_and_augment() {
        let dir = tempfile::tempdir().unwrap();
        let mut inputs = StageInputs::default();
        inputs.yes_no.insert(PqaA, (0..5).map(|i| yn(&format!("a{i}"))).collect());
        inputs.yes_no.insert(PqaL, (0..5).map(|i| yn(&format!("l{i}"))).collect());
        let test: BTreeSet<String> = ["l0".to_string()].into();
        let t = Transformer::new(LemmaLexicon::default(), MorphemeLexicon::new());
        let opts = EmitOptions {
            test_ids: &test,
            folds: None,
            transformer: Some(&t),
            fields: FieldSelector::default(),
            bm25: Bm25Params::default(),
            provenance: None,
        };
        let m = emit_schedule(&find_schedule("III").unwrap(), &inputs, &opts, dir.path()).unwrap();
        assert_eq!((m.stages[1].n_instances, m.stages[1].n_augmented), (8, 4));
        let stage2: Vec<YesNoInstance> = crate::io::read_jsonl(&dir.path().join(&m.stages[1].dataset_path)).unwrap();
        assert_eq!(stage2[1].id, "l1#aug1");
        assert_eq!(stage2[1].context, "Detail differ.");
        let test_rows: Vec<YesNoInstance> = crate::io::read_jsonl(&dir.path().join(&m.test_path)).unwrap();
        assert_eq!(test_rows.len(), 1);

        let base = emit_schedule(&find_schedule("baseline").unwrap(), &inputs, &opts, dir.path()).unwrap();
        assert_eq!(base.stages.iter().map(|s| s.n_instances).collect::<Vec<_>>(), [5, 4]);

        let no_lex = EmitOptions { transformer: None, ..opts };
        assert!(matches!(
            emit_schedule(&find_schedule("I").unwrap(), &inputs, &no_lex, dir.path()),
            Err(ScheduleError::MissingTransformer(_))
        ));
    }
}
