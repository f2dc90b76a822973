//! Shared fixtures: an independent BM25 scorer and a synthetic abstract
//! corpus.

#![allow(dead_code)]

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::Rng;
use weakqa::corpus::{AbstractSection, StructuredAbstract};

/// Straight transcription of the Okapi formula, recomputing every statistic
/// from scratch for each call.
pub fn oracle_score(query: &[String], docs: &[Vec<String>], i: usize, k1: f64, b: f64) -> f64 {
    let n = docs.len() as f64;
    let avgdl = docs.iter().map(|d| d.len() as f64).sum::<f64>() / n;
    let dl = docs[i].len() as f64;
    let mut total = 0.0;
    for q in query {
        let tf = docs[i].iter().filter(|t| *t == q).count() as f64;
        if tf == 0.0 {
            continue;
        }
        let df = docs.iter().filter(|d| d.contains(q)).count() as f64;
        let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
        total += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
    }
    total
}

pub fn oracle_best(query: &[String], docs: &[Vec<String>], k1: f64, b: f64) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for i in 0..docs.len() {
        let s = oracle_score(query, docs, i, k1, b);
        if s > best.1 {
            best = (i, s);
        }
    }
    best
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Random candidate set over a vocabulary of at most 30 content tokens.
pub fn random_case<R: Rng>(rng: &mut R) -> (Vec<String>, Vec<Vec<String>>) {
    let vocab = rng.gen_range(2..=30);
    let word = |rng: &mut R| format!("w{}", rng.gen_range(0..vocab));
    let n = rng.gen_range(1..=8);
    let docs = (0..n)
        .map(|_| (0..rng.gen_range(1..=12)).map(|_| word(rng)).collect())
        .collect();
    let query = (0..rng.gen_range(1..=6)).map(|_| word(rng)).collect();
    (query, docs)
}

const OPENERS: &[&str] = &[
    "Patients with diabetes had higher mortality",
    "Remdesivir shortened recovery (median 11 vs. 15 days)",
    "Viral load peaked early, i.e. before symptom onset",
    "Dr. Smith's cohort showed a 95% CI of 1.2-3.4",
    "Obesity was associated with ICU admission",
    "Anosmia occurred in 64% of cases",
    "Tocilizumab reduced IL-6 levels",
    "Children were less affected than adults",
    "Masks lowered transmission in households",
    "Ventilation time was 7.5 days on average",
    "Les patients âgés étaient plus vulnérables",
    "Serum ferritin > 500 µg/L predicted severe disease",
];

const CLOSERS: &[&str] = &[
    "Further studies are needed.",
    "These findings support early treatment!",
    "Is this effect causal?",
    "Results (see Table 2) were consistent.",
    "The effect was modest, e.g. a 3% change.",
    "COVID-19 outcomes varied by region.",
    "Heparin use was safe in 2020.",
    "“Long COVID” remains poorly understood.",
];

const RESULT_LABELS: &[&str] = &["RESULTS", "FINDINGS", "Results"];
const CONCLUSION_LABELS: &[&str] = &["CONCLUSIONS", "CONCLUSION", "Conclusions", "ANSWER", "CONCULSIONS", "INTERPRETATION"];

fn paragraph<R: Rng>(rng: &mut R, n: usize) -> String {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        if rng.gen_bool(0.6) {
            out.push(format!("{}.", OPENERS.choose(rng).unwrap()));
        } else {
            out.push(CLOSERS.choose(rng).unwrap().to_string());
        }
    }
    out.join(if rng.gen_bool(0.8) { " " } else { "  " })
}

/// Abstracts with a mix of COVID and non-COVID text, dates on both sides of
/// the cutoff, question and non-question titles, and assorted section
/// labels.
pub fn synthetic_corpus<R: Rng>(rng: &mut R, n: usize) -> Vec<StructuredAbstract> {
    (0..n)
        .map(|i| {
            let covid = rng.gen_bool(0.7);
            let title = match rng.gen_range(0..3) {
                0 => format!("Does treatment {i} improve outcomes in COVID-19?"),
                1 => format!("Is risk factor {i} relevant for patients?"),
                _ => format!("Outcomes of cohort {i}"),
            };
            let mut sections = vec![AbstractSection::new("BACKGROUND", paragraph(rng, 2))];
            if rng.gen_bool(0.2) {
                sections.push(AbstractSection::new("QUESTION", format!("Does exposure {i} matter?")));
            }
            let n_results = rng.gen_range(1..=4);
            let mut results = paragraph(rng, n_results);
            if covid {
                results.push_str(" SARS-CoV-2 infection was confirmed by PCR.");
            }
            sections.push(AbstractSection::new(RESULT_LABELS.choose(rng).unwrap(), results));
            if rng.gen_bool(0.9) {
                let n_conclusions = rng.gen_range(1..=5);
                let text = if rng.gen_bool(0.02) { "   ".to_string() } else { paragraph(rng, n_conclusions) };
                sections.push(AbstractSection::new(CONCLUSION_LABELS.choose(rng).unwrap(), text));
            }
            let pub_date = if rng.gen_bool(0.05) {
                None
            } else {
                let base = NaiveDate::from_ymd_opt(2019, 6, 1).unwrap();
                Some(base + chrono::Duration::days(rng.gen_range(0..700)))
            };
            StructuredAbstract {
                pmid: format!("{}", 30_000_000 + i),
                title,
                pub_date,
                keywords: if covid && rng.gen_bool(0.3) { vec!["COVID-19".into()] } else { vec![] },
                sections,
            }
        })
        .collect()
}

/// Section labels and whether they count as a conclusion.
pub const CONCLUSION_LABELS_TABLE: [(&str, bool); 20] = [
    ("CONCLUSIONS", true),
    ("CONCLUSION", true),
    ("conclusions", true),
    ("Conclusion", true),
    ("ANSWER", true),
    ("ANSWERS", true),
    ("CONCULSIONS", true),
    ("CONLUSION", true),
    ("CONCLUSIONS AND RELEVANCE", true),
    ("AUTHORS' CONCLUSIONS", true),
    ("CONCLUSIONS AND DISCUSSION", false),
    ("RESULTS AND CONCLUSIONS", false),
    ("SUMMARY AND CONCLUSION", false),
    ("MAIN FINDINGS AND CONCLUSIONS", false),
    ("RESULTS", false),
    ("DISCUSSION", false),
    ("SUMMARY", false),
    ("BACKGROUND", false),
    ("METHODS", false),
    ("QUESTION", false),
];

/// Labels every abstract of `corpus` two ways (as a PubMedQA-style source
/// and through the artificial pipeline) and checks every emitted pair.
/// Returns the number of pairs checked.
pub fn check_anchoring(corpus: &[StructuredAbstract]) -> Result<usize, String> {
    use weakqa::bm25::Bm25Params;
    use weakqa::corpus::{segment_sentences, DatasetSubsetId, Provenance, QAPair};
    use weakqa::curate::{build_artificial_pairs, extract_conclusion_section, ConclusionRules, CovidFilterPolicy};
    use weakqa::io::SquadDataset;
    use weakqa::weak_label::{build_prime_subset, LabelSource};

    let rules = ConclusionRules::default();
    let params = Bm25Params::default();
    let sources: Vec<LabelSource> = corpus
        .iter()
        .map(|a| LabelSource {
            id: a.pmid.clone(),
            question: a.title.clone(),
            conclusions: extract_conclusion_section(a, &rules).map(|s| s.text.clone()).unwrap_or_default(),
        })
        .collect();
    let prime = build_prime_subset(&sources, DatasetSubsetId::PqaL, &params).map_err(|e| e.to_string())?;
    let artificial = build_artificial_pairs(corpus, &CovidFilterPolicy::default(), &rules, &params);
    if artificial.pairs.is_empty() || prime.records.is_empty() {
        return Err("fixture produced no pairs".into());
    }

    let mut pairs: Vec<QAPair> = prime.pairs();
    pairs.extend(artificial.pairs.iter().cloned());
    for p in &pairs {
        p.validate().map_err(|e| e.to_string())?;
        let span: String = p.context.chars().skip(p.answer_start).take(p.answer_text.chars().count()).collect();
        if span != p.answer_text {
            return Err(format!("{}: span `{span}` != answer `{}`", p.id, p.answer_text));
        }
        if !segment_sentences(&p.context).iter().any(|s| s.text == p.answer_text) {
            return Err(format!("{}: answer is not a segmented sentence", p.id));
        }
    }
    // offsets survive the SQuAD round trip
    let back = SquadDataset::from_pairs(&artificial.pairs, None).to_pairs(DatasetSubsetId::D4, Provenance::PubmedArtificial);
    if back != artificial.pairs {
        return Err("SQuAD round trip changed pairs".into());
    }
    Ok(pairs.len())
}

pub const MORPHEMES: &str = "\
# morpheme|meaning|type
an|without|prefix
hyper|above|prefix
osm|smell|root
gastr|stomach|root
enter|intestine|root
cardi|heart|root
myo|muscle|root
tension|pressure|root
ventilat|air movement|root
ia|condition|terminal
itis|inflammation|terminal
pathy|disease|terminal
ion|process|terminal
";

/// Writes PubMedQA-style sources, a corpus, a lexicon and `run.toml` into
/// `dir`; returns the config path.
pub fn write_fixture(dir: &std::path::Path) -> std::path::PathBuf {
    use rand::SeedableRng;
    use std::fmt::Write as _;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
    let data = dir.join("data");
    std::fs::create_dir_all(&data).unwrap();

    for (name, n) in [("pqa_l.jsonl", 60), ("pqa_a.jsonl", 40)] {
        let mut text = String::new();
        for i in 0..n {
            let row = serde_json::json!({
                "id": format!("{}{:03}", &name[4..5], i),
                "question": format!("Does anosmia predict hypertension in cohort {i}?"),
                "conclusions": paragraph(&mut rng, 1 + i % 4),
                "context": paragraph(&mut rng, 3),
                "label": if i % 3 == 0 { "no" } else { "yes" },
            });
            writeln!(text, "{row}").unwrap();
        }
        std::fs::write(data.join(name), text).unwrap();
    }

    let corpus = synthetic_corpus(&mut rng, 300);
    let lines: String = corpus.iter().map(|a| a.to_json_line() + "\n").collect();
    std::fs::write(data.join("corpus.jsonl"), lines).unwrap();
    std::fs::write(data.join("morphemes.txt"), MORPHEMES).unwrap();

    let config = dir.join("run.toml");
    std::fs::write(
        &config,
        "seed = 17\n\
         output_dir = \"out\"\n\
         [paths]\n\
         pqa_l = \"data/pqa_l.jsonl\"\n\
         pqa_a = \"data/pqa_a.jsonl\"\n\
         corpus = \"data/corpus.jsonl\"\n\
         morpheme_lexicons = [\"data/morphemes.txt\"]\n\
         [curation]\n\
         queue_depth = 5\n",
    )
    .unwrap();
    config
}

pub fn weakqa(config: &std::path::Path, args: &[&str], envs: &[(&str, &str)]) -> std::process::Output {
    let mut cmd = std::process::Command::new(env!("CARGO_BIN_EXE_weakqa"));
    cmd.arg("--config").arg(config).args(args).env_remove("WEAKQA_OUTPUT_DIR");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("run weakqa")
}

fn ok(out: std::process::Output, what: &str) -> Result<std::process::Output, String> {
    if out.status.success() {
        Ok(out)
    } else {
        Err(format!("{what} failed: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

/// Marks sentence 0 of every queue group as the answer.
pub fn review_queue(path: &std::path::Path) {
    let mut reader = csv::ReaderBuilder::new().delimiter(b'\t').from_path(path).unwrap();
    let header = reader.headers().unwrap().clone();
    let mut writer = csv::WriterBuilder::new().delimiter(b'\t').from_writer(Vec::new());
    writer.write_record(&header).unwrap();
    for row in reader.records() {
        let mut row: Vec<String> = row.unwrap().iter().map(String::from).collect();
        if row[2] == "0" {
            row[4] = "x".into();
        }
        writer.write_record(&row).unwrap();
    }
    std::fs::write(path, writer.into_inner().unwrap()).unwrap();
}

/// Runs every command once over the fixture.
pub fn run_pipeline(config: &std::path::Path, envs: &[(&str, &str)]) -> Result<(), String> {
    let out_dir = config.parent().unwrap().join("out");
    ok(weakqa(config, &["label"], envs), "label")?;
    ok(weakqa(config, &["curate", "artificial"], envs), "curate artificial")?;
    ok(weakqa(config, &["curate", "templates-export"], envs), "templates-export")?;
    review_queue(&out_dir.join("review_queue.tsv"));
    ok(weakqa(config, &["curate", "templates-import"], envs), "templates-import")?;
    ok(weakqa(config, &["schedule"], envs), "schedule")?;

    let gold = out_dir.join("schedules/4/test.json");
    let data = weakqa::io::SquadDataset::read(&gold).map_err(|e| e.to_string())?;
    let preds: String = data
        .gold_answers()
        .iter()
        .map(|(id, answers)| serde_json::json!({"id": id, "predicted_text": answers[0]}).to_string() + "\n")
        .collect();
    std::fs::write(out_dir.join("predictions.jsonl"), preds).unwrap();
    ok(
        weakqa(
            config,
            &[
                "eval",
                "--gold",
                gold.to_str().unwrap(),
                "--predictions",
                out_dir.join("predictions.jsonl").to_str().unwrap(),
                "--task",
                "extractive",
                "--out",
                out_dir.join("eval_report.json").to_str().unwrap(),
            ],
            envs,
        ),
        "eval",
    )?;
    Ok(())
}

/// sha256 of every file under `dir`, keyed by relative path.
pub fn hash_tree(dir: &std::path::Path) -> std::collections::BTreeMap<String, String> {
    use sha2::{Digest, Sha256};
    fn walk(root: &std::path::Path, dir: &std::path::Path, out: &mut std::collections::BTreeMap<String, String>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, hex::encode(Sha256::digest(std::fs::read(&path).unwrap())));
            }
        }
    }
    let mut out = std::collections::BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}
