//! Deterministic synthetic clinical-PII corpus generation.
//!
//! Produces fictitious patient records, serializes them into fixed-template
//! sentences, partitions them into disjoint member/non-member sets, and
//! generates a held-out general corpus with no clinical vocabulary. Every
//! output is a pure function of `(n, seed)`.

mod words;

use std::collections::BTreeMap;
use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::artifact::{sha256_hex, write_atomic, write_json_atomic};
use crate::error::{Error, Result};

pub use words::{DIAGNOSES, FIRST_NAMES, LAST_NAMES, MEDICATIONS};

/// One fictitious patient record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PiiRecord {
    pub name: String,
    pub age: u32,
    pub diagnosis: String,
    pub medication: String,
    pub salary: u64,
    pub ssn: String,
}

impl PiiRecord {
    /// Check the record-level format invariants.
    pub fn is_valid(&self) -> bool {
        let ssn_ok = {
            let parts: Vec<&str> = self.ssn.split('-').collect();
            parts.len() == 3
                && parts[0].len() == 3
                && parts[1].len() == 2
                && parts[2].len() == 4
                && parts.iter().all(|p| p.bytes().all(|b| b.is_ascii_digit()))
        };
        !self.name.is_empty()
            && !self.diagnosis.is_empty()
            && !self.medication.is_empty()
            && (18..=90).contains(&self.age)
            && self.salary > 0
            && ssn_ok
    }
}

/// Disjoint member/non-member partition of serialized records.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitCorpus {
    pub members: Vec<String>,
    pub nonmembers: Vec<String>,
    pub seed: u64,
}

/// Held-out sentences with no clinical vocabulary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneralCorpus {
    pub sentences: Vec<String>,
    pub seed: u64,
}

/// Generate `n` records deterministically from the built-in word lists.
///
/// Records are sampled without replacement on both full name and SSN, so any
/// two records differ in at least those fields.
pub fn generate_records(n: usize, seed: u64) -> Vec<PiiRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen_names: HashSet<String> = HashSet::new();
    let mut seen_ssns: HashSet<String> = HashSet::new();
    let mut records = Vec::with_capacity(n);
    while records.len() < n {
        let first = *FIRST_NAMES.choose(&mut rng).expect("non-empty list");
        let last = *LAST_NAMES.choose(&mut rng).expect("non-empty list");
        let name = format!("{first} {last}");
        let age = rng.gen_range(18..=90);
        let diagnosis = *DIAGNOSES.choose(&mut rng).expect("non-empty list");
        let medication = *MEDICATIONS.choose(&mut rng).expect("non-empty list");
        let salary = u64::from(rng.gen_range(48u32..=396)) * 500;
        // Area 900-999 is never issued, keeping every SSN unmistakably fake.
        let ssn = format!(
            "{:03}-{:02}-{:04}",
            rng.gen_range(900u32..=999),
            rng.gen_range(10u32..=99),
            rng.gen_range(1000u32..=9999)
        );
        if seen_names.contains(&name) || seen_ssns.contains(&ssn) {
            continue;
        }
        seen_names.insert(name.clone());
        seen_ssns.insert(ssn.clone());
        records.push(PiiRecord {
            name,
            age,
            diagnosis: diagnosis.to_string(),
            medication: medication.to_string(),
            salary,
            ssn,
        });
    }
    records
}

/// Render a record as its fixed-template sentence.
pub fn serialize_record(r: &PiiRecord) -> String {
    format!(
        "Patient {}, aged {}, has been diagnosed with {} and is prescribed {}, \
         earns {} annually, SSN {}.",
        r.name, r.age, r.diagnosis, r.medication, r.salary, r.ssn
    )
}

/// Deterministically shuffle `records` and split the prefix into members and
/// non-members.
pub fn split_corpus(
    records: &[PiiRecord],
    n_members: usize,
    n_nonmembers: usize,
    seed: u64,
) -> Result<SplitCorpus> {
    if n_members + n_nonmembers > records.len() {
        return Err(Error::SizeMismatch {
            expected: n_members + n_nonmembers,
            actual: records.len(),
            context: "split requires n_members + n_nonmembers <= records",
        });
    }
    let mut indices: Vec<usize> = (0..records.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let members = indices[..n_members]
        .iter()
        .map(|&i| serialize_record(&records[i]))
        .collect();
    let nonmembers = indices[n_members..n_members + n_nonmembers]
        .iter()
        .map(|&i| serialize_record(&records[i]))
        .collect();
    Ok(SplitCorpus {
        members,
        nonmembers,
        seed,
    })
}

/// Generate `n` general sentences from non-clinical templates (travel,
/// weather, commerce).
pub fn generate_general_corpus(n: usize, seed: u64) -> GeneralCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sentences = Vec::with_capacity(n);
    for _ in 0..n {
        let adj = *words::GENERAL_ADJECTIVES.choose(&mut rng).unwrap();
        let place = *words::GENERAL_PLACES.choose(&mut rng).unwrap();
        let city = *words::GENERAL_CITIES.choose(&mut rng).unwrap();
        let city2 = *words::GENERAL_CITIES.choose(&mut rng).unwrap();
        let goods = *words::GENERAL_GOODS.choose(&mut rng).unwrap();
        let weekday = *words::WEEKDAYS.choose(&mut rng).unwrap();
        let sentence = match rng.gen_range(0u8..8) {
            0 => format!("The {adj} {place} in {city} stays open until late evening."),
            1 => format!("A {adj} breeze drifted across the {place} near {city}."),
            2 => format!("Travelers often praise the {adj} {place} they discover in {city}."),
            3 => format!("On {weekday} the {place} by the river feels especially {adj}."),
            4 => format!("The ferry from {city} to {city2} passes a {adj} {place}."),
            5 => format!("Local vendors at the {place} sell {goods} every {weekday}."),
            6 => format!("{city} is famous for its {adj} {place} and quiet mornings."),
            _ => format!("After the rain, the {place} in {city} smelled of {goods}."),
        };
        sentences.push(sentence);
    }
    GeneralCorpus { sentences, seed }
}

/// Lower-cased word tokens of the clinical vocabulary (diagnosis and
/// medication lists), used to verify the general corpus stays non-clinical.
pub fn clinical_tokens() -> HashSet<String> {
    DIAGNOSES
        .iter()
        .chain(MEDICATIONS.iter())
        .flat_map(|phrase| phrase.split_whitespace())
        .map(|w| w.to_lowercase())
        .collect()
}

/// All corpora a pipeline run needs: the member/non-member split, the general
/// utility-evaluation sentences, and the larger pretraining corpus drawn from
/// the same general templates.
#[derive(Debug, Clone)]
pub struct CorpusBundle {
    pub split: SplitCorpus,
    pub general: GeneralCorpus,
    pub pretrain: Vec<String>,
}

/// Per-file entry in the corpus manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileEntry {
    pub lines: usize,
    pub sha256: String,
}

/// JSON manifest written next to the corpus files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub seed: u64,
    pub n_records: usize,
    pub n_members: usize,
    pub n_nonmembers: usize,
    pub n_general: usize,
    pub n_pretrain: usize,
    pub files: BTreeMap<String, FileEntry>,
    /// SHA-256 over the concatenated file contents in manifest order; the
    /// dataset fingerprint cited by audit reports.
    pub combined_sha256: String,
}

/// Sizes for [`generate_bundle`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub struct CorpusSpec {
    pub n_records: usize,
    pub n_members: usize,
    pub n_nonmembers: usize,
    pub n_general: usize,
    pub n_pretrain: usize,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            n_records: 500,
            n_members: 300,
            n_nonmembers: 200,
            n_general: 50,
            n_pretrain: 500,
            seed: 42,
        }
    }
}

/// Generate every corpus a run needs from one spec.
///
/// General and pretraining sentences come from a single seeded stream (the
/// first `n_general` go to the evaluation corpus) so the two sets are drawn
/// from the same distribution.
pub fn generate_bundle(spec: &CorpusSpec) -> Result<CorpusBundle> {
    let records = generate_records(spec.n_records, spec.seed);
    let split = split_corpus(&records, spec.n_members, spec.n_nonmembers, spec.seed)?;
    let stream = generate_general_corpus(spec.n_general + spec.n_pretrain, spec.seed);
    let general = GeneralCorpus {
        sentences: stream.sentences[..spec.n_general].to_vec(),
        seed: spec.seed,
    };
    let pretrain = stream.sentences[spec.n_general..].to_vec();
    Ok(CorpusBundle {
        split,
        general,
        pretrain,
    })
}

const CORPUS_FILES: [&str; 4] = ["members.txt", "nonmembers.txt", "general.txt", "pretrain.txt"];

/// Write the bundle as line-delimited text files plus a JSON manifest; returns
/// the manifest.
pub fn write_corpus_dir(dir: &Path, bundle: &CorpusBundle, spec: &CorpusSpec) -> Result<CorpusManifest> {
    let contents = [
        bundle.split.members.join("\n") + "\n",
        bundle.split.nonmembers.join("\n") + "\n",
        bundle.general.sentences.join("\n") + "\n",
        bundle.pretrain.join("\n") + "\n",
    ];
    let mut files = BTreeMap::new();
    let mut combined = Vec::new();
    for (name, text) in CORPUS_FILES.iter().zip(contents.iter()) {
        write_atomic(&dir.join(name), text.as_bytes())?;
        files.insert(
            name.to_string(),
            FileEntry {
                lines: text.lines().count(),
                sha256: sha256_hex(text.as_bytes()),
            },
        );
        combined.extend_from_slice(text.as_bytes());
    }
    let manifest = CorpusManifest {
        seed: spec.seed,
        n_records: spec.n_records,
        n_members: spec.n_members,
        n_nonmembers: spec.n_nonmembers,
        n_general: spec.n_general,
        n_pretrain: spec.n_pretrain,
        files,
        combined_sha256: sha256_hex(&combined),
    };
    write_json_atomic(&dir.join("corpus_manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Read a corpus directory written by [`write_corpus_dir`].
pub fn read_corpus_dir(dir: &Path) -> Result<(CorpusBundle, CorpusManifest)> {
    let manifest: CorpusManifest = crate::artifact::read_json(&dir.join("corpus_manifest.json"))?;
    let read_lines = |name: &str| -> Result<Vec<String>> {
        let text = fs::read_to_string(dir.join(name))?;
        Ok(text.lines().map(str::to_string).collect())
    };
    let bundle = CorpusBundle {
        split: SplitCorpus {
            members: read_lines("members.txt")?,
            nonmembers: read_lines("nonmembers.txt")?,
            seed: manifest.seed,
        },
        general: GeneralCorpus {
            sentences: read_lines("general.txt")?,
            seed: manifest.seed,
        },
        pretrain: read_lines("pretrain.txt")?,
    };
    if bundle.split.members.len() != manifest.n_members
        || bundle.split.nonmembers.len() != manifest.n_nonmembers
    {
        return Err(Error::Corpus(format!(
            "corpus files in {} do not match their manifest counts",
            dir.display()
        )));
    }
    Ok((bundle, manifest))
}
