//! `weakqa` command line: one TOML config, flag overrides, deterministic
//! outputs with provenance.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bm25::Bm25Params;
use crate::corpus::{read_corpus, DatasetSubsetId, Provenance, QAPair, StructuredAbstract, YesNoInstance};
use crate::curate::{
    build_artificial_pairs, collect_candidates, export_review_queue, import_review_queue, instantiate_templates,
    ConclusionRules, CovidFilterPolicy, CurationConfig,
};
use crate::io::{read_jsonl, read_pubmedqa, write_atomic, write_json, write_jsonl, RunProvenance, SquadDataset};
use crate::metrics::{evaluate, GoldSet, Prediction};
use crate::morph::{load_morpheme_lexicon, FieldSelector, LemmaLexicon, MorphemeLexicon, Transformer};
use crate::schedule::{
    builtin_schedules, emit_schedule, find_schedule, make_folds, make_target_split, EmitOptions, SplitSpec,
    StageInputs,
};
use crate::weak_label::build_prime_subset;
use crate::Error;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// PubMedQA labelled (PQA-L) source.
    pub pqa_l: Option<PathBuf>,
    /// PubMedQA artificial (PQA-A) source.
    pub pqa_a: Option<PathBuf>,
    /// Structured abstracts, one JSON object per line.
    pub corpus: Option<PathBuf>,
    /// Question templates and vocabularies (JSON); built-in set if absent.
    pub templates: Option<PathBuf>,
    /// Review queue TSV; defaults to `review_queue.tsv` in the output dir.
    pub review_queue: Option<PathBuf>,
    pub lemma_exceptions: Option<PathBuf>,
    pub morpheme_lexicons: Vec<PathBuf>,
    /// Where `schedule` finds d1..d4 and pqa_l/pqa_a; defaults to the
    /// output dir.
    pub datasets_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurationSettings {
    /// Candidate abstracts per question in the review queue.
    pub queue_depth: usize,
}

impl Default for CurationSettings {
    fn default() -> Self {
        CurationSettings { queue_depth: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSettings {
    pub ids: Vec<String>,
    pub holdout_fraction: BTreeMap<DatasetSubsetId, f64>,
    pub fields: FieldSelector,
}

impl Default for ScheduleSettings {
    fn default() -> Self {
        ScheduleSettings {
            ids: builtin_schedules().into_iter().map(|s| s.schedule_id).collect(),
            holdout_fraction: SplitSpec::default().holdout_fraction,
            fields: FieldSelector::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub paths: PathsConfig,
    pub bm25: Bm25Params,
    pub covid_filter: CovidFilterPolicy,
    pub conclusions: ConclusionRules,
    pub curation: CurationSettings,
    pub schedule: ScheduleSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            output_dir: PathBuf::from("weakqa-out"),
            paths: PathsConfig::default(),
            bm25: Bm25Params::default(),
            covid_filter: CovidFilterPolicy::default(),
            conclusions: ConclusionRules::default(),
            curation: CurationSettings::default(),
            schedule: ScheduleSettings::default(),
        }
    }
}

fn rebase(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl RunConfig {
    /// Parses a config file. Relative paths are taken relative to the file.
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let Some(base) = path.parent().filter(|b| !b.as_os_str().is_empty()) {
            let p = &mut cfg.paths;
            for opt in [&mut p.pqa_l, &mut p.pqa_a, &mut p.corpus, &mut p.templates, &mut p.review_queue]
                .into_iter()
                .chain([&mut p.lemma_exceptions, &mut p.datasets_dir])
            {
                if let Some(x) = opt.as_mut() {
                    rebase(base, x);
                }
            }
            for x in &mut p.morpheme_lexicons {
                rebase(base, x);
            }
            rebase(base, &mut cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.bm25.validate()?;
        for id in &self.schedule.ids {
            find_schedule(id)?;
        }
        if self.curation.queue_depth == 0 {
            return Err(Error::Config("curation.queue_depth must be positive".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String, Error> {
        toml::to_string(self).map_err(|e| Error::Internal(format!("config serialization: {e}")))
    }

    /// SHA-256 of the effective config, hex encoded.
    pub fn hash(&self) -> Result<String, Error> {
        Ok(hex::encode(Sha256::digest(self.to_toml()?.as_bytes())))
    }

    pub fn provenance(&self) -> Result<RunProvenance, Error> {
        Ok(RunProvenance::new(self.hash()?, self.seed))
    }
}

#[derive(Debug, Parser)]
#[command(name = "weakqa", version, about = "Weakly supervised biomedical QA datasets and schedules")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, env = "WEAKQA_OUTPUT_DIR")]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Repurpose PubMedQA into extractive pairs (d1, d2) by BM25 labelling.
    Label {
        #[arg(long)]
        pqa_l: Option<PathBuf>,
        #[arg(long)]
        pqa_a: Option<PathBuf>,
        #[arg(long)]
        k1: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
    },
    /// COVID-19 question curation.
    Curate {
        #[command(subcommand)]
        mode: CurateMode,
    },
    /// Emit staged fine-tuning manifests and stage datasets.
    Schedule {
        /// Schedule ids, comma separated (e.g. `1,2,XII`).
        #[arg(long, value_delimiter = ',')]
        ids: Option<Vec<String>>,
        #[arg(long)]
        datasets_dir: Option<PathBuf>,
        /// Morpheme lexicon files (`morpheme|meaning|type`).
        #[arg(long = "morphemes")]
        morphemes: Vec<PathBuf>,
    },
    /// Score predictions against gold answers.
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long, value_enum)]
        task: TaskArg,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum CurateMode {
    /// Instantiate templates and write the review queue.
    TemplatesExport {
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        queue: Option<PathBuf>,
    },
    /// Read a reviewed queue and write d3.
    TemplatesImport {
        #[arg(long)]
        queue: Option<PathBuf>,
    },
    /// Label COVID abstracts automatically and write d4.
    Artificial {
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Extractive,
    Yesno,
}

/// Applies flag overrides; flags win over the config file.
pub fn effective_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = &cli.output_dir {
        cfg.output_dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match &cli.command {
        Command::Label { pqa_l, pqa_a, k1, b } => {
            if pqa_l.is_some() {
                cfg.paths.pqa_l = pqa_l.clone();
            }
            if pqa_a.is_some() {
                cfg.paths.pqa_a = pqa_a.clone();
            }
            if let Some(k1) = k1 {
                cfg.bm25.k1 = *k1;
            }
            if let Some(b) = b {
                cfg.bm25.b = *b;
            }
        }
        Command::Curate { mode } => match mode {
            CurateMode::TemplatesExport { templates, corpus, queue } => {
                if templates.is_some() {
                    cfg.paths.templates = templates.clone();
                }
                if corpus.is_some() {
                    cfg.paths.corpus = corpus.clone();
                }
                if queue.is_some() {
                    cfg.paths.review_queue = queue.clone();
                }
            }
            CurateMode::TemplatesImport { queue } => {
                if queue.is_some() {
                    cfg.paths.review_queue = queue.clone();
                }
            }
            CurateMode::Artificial { corpus } => {
                if corpus.is_some() {
                    cfg.paths.corpus = corpus.clone();
                }
            }
        },
        Command::Schedule { ids, datasets_dir, morphemes } => {
            if let Some(ids) = ids {
                cfg.schedule.ids = ids.clone();
            }
            if datasets_dir.is_some() {
                cfg.paths.datasets_dir = datasets_dir.clone();
            }
            if !morphemes.is_empty() {
                cfg.paths.morpheme_lexicons = morphemes.clone();
            }
        }
        Command::Eval { .. } => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<(), Error> {
    let cfg = effective_config(cli)?;
    let prov = cfg.provenance()?;
    if let Command::Eval { gold, predictions, task, out } = &cli.command {
        return cmd_eval(gold, predictions, *task, out.as_deref(), prov);
    }
    let out = cfg.output_dir.clone();
    std::fs::create_dir_all(&out).map_err(|source| Error::Io {
        path: out.display().to_string(),
        source,
    })?;
    write_atomic(&out.join("effective_config.toml"), cfg.to_toml()?.as_bytes()).map_err(|source| Error::Io {
        path: out.join("effective_config.toml").display().to_string(),
        source,
    })?;
    write_json(&out.join("provenance.json"), &prov)?;
    match &cli.command {
        Command::Label { .. } => cmd_label(&cfg, &prov),
        Command::Curate { mode } => match mode {
            CurateMode::TemplatesExport { .. } => cmd_templates_export(&cfg),
            CurateMode::TemplatesImport { .. } => cmd_templates_import(&cfg, &prov),
            CurateMode::Artificial { .. } => cmd_artificial(&cfg, &prov),
        },
        Command::Schedule { .. } => cmd_schedule(&cfg, &prov),
        Command::Eval { .. } => unreachable!("handled above"),
    }
}

fn ensure_valid(pairs: &[QAPair]) -> Result<(), Error> {
    for p in pairs {
        p.validate().map_err(|e| Error::Internal(format!("emitted an unanchored pair: {e}")))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct LabelReport {
    subset: DatasetSubsetId,
    source: DatasetSubsetId,
    emitted: usize,
    skipped: usize,
    yes_no_instances: usize,
    dropped_labels: usize,
}

fn cmd_label(cfg: &RunConfig, prov: &RunProvenance) -> Result<(), Error> {
    let sources = [(DatasetSubsetId::PqaL, &cfg.paths.pqa_l), (DatasetSubsetId::PqaA, &cfg.paths.pqa_a)];
    if sources.iter().all(|(_, p)| p.is_none()) {
        return Err(Error::Config("label needs paths.pqa_l and/or paths.pqa_a".into()));
    }
    let mut reports = Vec::new();
    for (source, path) in sources {
        let Some(path) = path else { continue };
        let data = read_pubmedqa(path)?;
        let prime = build_prime_subset(&data.label_sources, source, &cfg.bm25)?;
        let pairs = prime.pairs();
        ensure_valid(&pairs)?;
        let summary = prime.summary();
        SquadDataset::from_pairs(&pairs, Some(prov.clone())).write(&cfg.output_dir.join(format!("{}.json", prime.subset)))?;
        if !data.yes_no.is_empty() {
            write_jsonl(&cfg.output_dir.join(format!("{source}.jsonl")), &data.yes_no)?;
        }
        println!("{source} -> {}: {} pairs, {} skipped", summary.subset, summary.emitted, summary.skipped);
        reports.push(LabelReport {
            subset: summary.subset,
            source,
            emitted: summary.emitted,
            skipped: summary.skipped,
            yes_no_instances: data.yes_no.len(),
            dropped_labels: data.dropped_labels,
        });
    }
    write_json(&cfg.output_dir.join("label_summary.json"), &reports)?;
    Ok(())
}

fn load_corpus(path: Option<&PathBuf>) -> Result<Vec<StructuredAbstract>, Error> {
    let path = path.ok_or_else(|| Error::Config("paths.corpus is not set".into()))?;
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_corpus(BufReader::new(file)).map_err(|source| Error::Corpus {
        path: path.display().to_string(),
        source,
    })
}

fn curation_config(cfg: &RunConfig) -> Result<CurationConfig, Error> {
    let raw = match &cfg.paths.templates {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            })?;
            CurationConfig::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => CurationConfig::builtin(),
    };
    Ok(raw.normalized()?)
}

fn queue_path(cfg: &RunConfig) -> PathBuf {
    cfg.paths
        .review_queue
        .clone()
        .unwrap_or_else(|| cfg.output_dir.join("review_queue.tsv"))
}

fn cmd_templates_export(cfg: &RunConfig) -> Result<(), Error> {
    let curation = curation_config(cfg)?;
    let instances = instantiate_templates(&curation.templates, &curation.vocabularies)?;
    let corpus = load_corpus(cfg.paths.corpus.as_ref())?;
    let candidates = collect_candidates(
        &instances,
        &corpus,
        &curation.vocabularies,
        &cfg.covid_filter,
        &cfg.conclusions,
        cfg.curation.queue_depth,
    );
    let queue = queue_path(cfg);
    export_review_queue(&candidates, &queue)?;
    write_json(&cfg.output_dir.join("template_instances.json"), &instances)?;
    let rows: usize = candidates.iter().map(|c| c.candidate_sentences.len()).sum();
    println!(
        "{} questions, {} candidate abstracts, {rows} rows -> {}",
        instances.len(),
        candidates.len(),
        queue.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct ImportReport<'a> {
    pairs: usize,
    unreviewed: &'a [String],
}

fn cmd_templates_import(cfg: &RunConfig, prov: &RunProvenance) -> Result<(), Error> {
    let queue = queue_path(cfg);
    let imported = import_review_queue(&queue)?;
    ensure_valid(&imported.pairs)?;
    SquadDataset::from_pairs(&imported.pairs, Some(prov.clone())).write(&cfg.output_dir.join("d3.json"))?;
    write_json(
        &cfg.output_dir.join("curate_import_summary.json"),
        &ImportReport {
            pairs: imported.pairs.len(),
            unreviewed: &imported.unreviewed,
        },
    )?;
    if !imported.unreviewed.is_empty() {
        warn!("{} candidate groups have no selected sentence", imported.unreviewed.len());
    }
    println!("d3: {} pairs, {} unreviewed groups", imported.pairs.len(), imported.unreviewed.len());
    Ok(())
}

#[derive(Serialize)]
struct ArtificialReport<'a> {
    pairs: usize,
    filtered_out: usize,
    skipped: &'a [crate::curate::SkippedAbstract],
}

fn cmd_artificial(cfg: &RunConfig, prov: &RunProvenance) -> Result<(), Error> {
    let corpus = load_corpus(cfg.paths.corpus.as_ref())?;
    let out = build_artificial_pairs(&corpus, &cfg.covid_filter, &cfg.conclusions, &cfg.bm25);
    ensure_valid(&out.pairs)?;
    SquadDataset::from_pairs(&out.pairs, Some(prov.clone())).write(&cfg.output_dir.join("d4.json"))?;
    write_json(
        &cfg.output_dir.join("artificial_summary.json"),
        &ArtificialReport {
            pairs: out.pairs.len(),
            filtered_out: out.filtered_out,
            skipped: &out.skipped,
        },
    )?;
    println!(
        "d4: {} pairs from {} abstracts ({} filtered out, {} skipped)",
        out.pairs.len(),
        corpus.len(),
        out.filtered_out,
        out.skipped.len()
    );
    Ok(())
}

fn provenance_of(subset: DatasetSubsetId) -> Provenance {
    match subset {
        DatasetSubsetId::D3 => Provenance::TemplateManual,
        DatasetSubsetId::D4 => Provenance::PubmedArtificial,
        _ => Provenance::Bm25Weak,
    }
}

fn load_stage_inputs(dir: &Path) -> Result<StageInputs, Error> {
    let mut inputs = StageInputs::default();
    for subset in DatasetSubsetId::ALL {
        if subset.is_extractive() {
            let path = dir.join(format!("{subset}.json"));
            if path.exists() {
                let pairs = SquadDataset::read(&path)?.to_pairs(subset, provenance_of(subset));
                info!("{subset}: {} pairs from {}", pairs.len(), path.display());
                inputs.extractive.insert(subset, pairs);
            }
        } else {
            let path = dir.join(format!("{subset}.jsonl"));
            if path.exists() {
                let rows: Vec<YesNoInstance> = read_jsonl(&path)?;
                info!("{subset}: {} instances from {}", rows.len(), path.display());
                inputs.yes_no.insert(subset, rows);
            }
        }
    }
    Ok(inputs)
}

fn cmd_schedule(cfg: &RunConfig, prov: &RunProvenance) -> Result<(), Error> {
    let dir = cfg.paths.datasets_dir.clone().unwrap_or_else(|| cfg.output_dir.clone());
    let inputs = load_stage_inputs(&dir)?;
    let schedules = cfg
        .schedule
        .ids
        .iter()
        .map(|id| find_schedule(id))
        .collect::<Result<Vec<_>, _>>()?;

    // Hold out only from subsets that are present; T for a subset does not
    // depend on which other subsets are loaded.
    let mut holdout = cfg.schedule.holdout_fraction.clone();
    holdout.retain(|subset, _| {
        let present = inputs.extractive.get(subset).is_some_and(|p| !p.is_empty());
        if !present {
            warn!("{subset} not found in {}; nothing held out from it", dir.display());
        }
        present
    });
    let ids: BTreeMap<DatasetSubsetId, Vec<String>> = inputs
        .extractive
        .iter()
        .map(|(s, pairs)| (*s, pairs.iter().map(|p| p.id.clone()).collect()))
        .collect();
    let split = make_target_split(
        &ids,
        &SplitSpec {
            seed: cfg.seed,
            holdout_fraction: holdout,
        },
    )?;
    write_json(&cfg.output_dir.join("split.json"), &split)?;
    let target = split.test_ids();

    let folds = match inputs.yes_no.get(&DatasetSubsetId::PqaL) {
        Some(rows) => {
            let ids: Vec<String> = rows.iter().map(|r| r.id.clone()).collect();
            let f = make_folds(&ids, cfg.seed)?;
            write_json(&cfg.output_dir.join("folds.json"), &f)?;
            Some(f)
        }
        None => None,
    };
    let reserved: BTreeSet<String> = folds.as_ref().map(|f| f.reserved_test.iter().cloned().collect()).unwrap_or_default();

    let mut lemmas = LemmaLexicon::default();
    if let Some(path) = &cfg.paths.lemma_exceptions {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        lemmas = lemmas.with_extra_exceptions(&text, &path.display().to_string())?;
    }
    let morphemes = if cfg.paths.morpheme_lexicons.is_empty() {
        MorphemeLexicon::new()
    } else {
        load_morpheme_lexicon(&cfg.paths.morpheme_lexicons)?
    };
    let have_morphemes = !morphemes.is_empty();
    let transformer = Transformer::new(lemmas, morphemes);

    println!("schedule\tstage\tsubset\tn");
    for schedule in &schedules {
        let needs_morphemes = schedule
            .stages
            .iter()
            .any(|s| s.chain.as_ref().is_some_and(|c| c.needs_morphemes()));
        let test_ids = if schedule.is_extractive() { &target } else { &reserved };
        let opts = EmitOptions {
            test_ids,
            folds: folds.as_ref(),
            transformer: (have_morphemes || !needs_morphemes).then_some(&transformer),
            fields: cfg.schedule.fields,
            bm25: cfg.bm25,
            provenance: Some(prov.clone()),
        };
        let out = cfg.output_dir.join("schedules").join(&schedule.schedule_id);
        let manifest = emit_schedule(schedule, &inputs, &opts, &out)?;
        for st in &manifest.stages {
            println!("{}\t{}\t{}\t{}", manifest.schedule_id, st.stage_index, st.subset, st.n_instances);
        }
    }
    Ok(())
}

fn cmd_eval(gold: &Path, predictions: &Path, task: TaskArg, out: Option<&Path>, prov: RunProvenance) -> Result<(), Error> {
    let gold_set = match task {
        TaskArg::Extractive => GoldSet::Extractive(SquadDataset::read(gold)?.gold_answers()),
        TaskArg::Yesno => {
            let rows: Vec<YesNoInstance> = read_jsonl(gold)?;
            let mut labels = BTreeMap::new();
            for r in rows {
                if labels.insert(r.id.clone(), r.label).is_some() {
                    return Err(Error::Config(format!("{}: duplicate gold id `{}`", gold.display(), r.id)));
                }
            }
            GoldSet::YesNo(labels)
        }
    };
    let preds: Vec<Prediction> = read_jsonl(predictions)?;
    let mut report = evaluate(&gold_set, &preds)?;
    report.provenance = Some(prov);
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Internal(e.to_string()))?;
    println!("{json}");
    if let Some(path) = out {
        write_json(path, &report)?;
    }
    Ok(())
}
