//! Bundled synthetic bilingual (English/Spanish) corpus with planted discrepancies,
//! used for demos and offline end-to-end runs with the mock providers.

use std::collections::BTreeMap;
use std::path::Path;

use mind_core::corpus::{write_documents_jsonl, Document};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::ProjectConfig;
use crate::error::Result;
use crate::store::write_json;

struct Lexicon {
    name: &'static str,
    nouns: &'static [(&'static str, &'static str)],
    verbs: &'static [(&'static str, &'static str)],
}

const PREPOSITIONS: &[(&str, &str)] = &[("during", "durante"), ("against", "contra"), ("after", "tras")];

const TOPICS: &[Lexicon] = &[
    Lexicon {
        name: "vaccination",
        nouns: &[
            ("vaccine", "vacuna"),
            ("measles", "sarampion"),
            ("booster", "refuerzo"),
            ("immunity", "inmunidad"),
            ("clinic", "clinica"),
            ("nurse", "enfermera"),
            ("dose", "dosis"),
            ("antibody", "anticuerpo"),
        ],
        verbs: &[
            ("protects", "protege"),
            ("requires", "requiere"),
            ("strengthens", "fortalece"),
            ("prevents", "previene"),
        ],
    },
    Lexicon {
        name: "pregnancy",
        nouns: &[
            ("pregnancy", "embarazo"),
            ("folate", "folato"),
            ("midwife", "partera"),
            ("placenta", "placenta"),
            ("ultrasound", "ecografia"),
            ("trimester", "trimestre"),
            ("nausea", "nauseas"),
            ("iron", "hierro"),
        ],
        verbs: &[
            ("supports", "apoya"),
            ("reduces", "reduce"),
            ("monitors", "vigila"),
            ("improves", "mejora"),
        ],
    },
    Lexicon {
        name: "infant sleep",
        nouns: &[
            ("crib", "cuna"),
            ("infant", "lactante"),
            ("swaddle", "envoltura"),
            ("mattress", "colchon"),
            ("nap", "siesta"),
            ("pacifier", "chupete"),
            ("bedtime", "acostarse"),
            ("blanket", "manta"),
        ],
        verbs: &[
            ("soothes", "calma"),
            ("disturbs", "perturba"),
            ("shortens", "acorta"),
            ("extends", "prolonga"),
        ],
    },
    Lexicon {
        name: "web artifacts",
        nouns: &[
            ("cookies", "galletas"),
            ("newsletter", "boletin"),
            ("subscription", "suscripcion"),
            ("banner", "anuncio"),
            ("login", "acceso"),
            ("sitemap", "mapa"),
            ("copyright", "derechos"),
            ("footer", "pie"),
        ],
        verbs: &[
            ("redirects", "redirige"),
            ("displays", "muestra"),
            ("blocks", "bloquea"),
            ("tracks", "rastrea"),
        ],
    },
];

/// Index of the topic made of navigation and boilerplate text.
pub const GARBAGE_TOPIC: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantedVariant {
    /// The comparison passage states the same fact.
    Same,
    /// The comparison passage negates the fact.
    Negated,
    /// The comparison passage negates the fact and frames it as tradition.
    Cultural,
    /// The comparison document carries an unrelated fact instead.
    Missing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedFact {
    pub topic: usize,
    pub anchor_passage: String,
    pub comparison_passage: String,
    pub variant: PlantedVariant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub anchor: Vec<Document>,
    pub comparison: Vec<Document>,
    pub alignment: Vec<(String, String)>,
    /// Spanish word -> English word.
    pub glossary: BTreeMap<String, String>,
    pub planted: Vec<PlantedFact>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub docs_per_topic: usize,
    pub passages_per_doc: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            docs_per_topic: 6,
            passages_per_doc: 4,
            seed: 42,
        }
    }
}

struct Fact {
    subject: usize,
    verb: usize,
    object: usize,
    prep: usize,
    tail: usize,
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

impl Fact {
    fn random(rng: &mut ChaCha8Rng, lex: &Lexicon) -> Self {
        let n = lex.nouns.len();
        let subject = rng.random_range(0..n);
        let mut object = rng.random_range(0..n - 1);
        if object >= subject {
            object += 1;
        }
        Self {
            subject,
            verb: rng.random_range(0..lex.verbs.len()),
            object,
            prep: rng.random_range(0..PREPOSITIONS.len()),
            tail: rng.random_range(0..n),
        }
    }

    fn english(&self, lex: &Lexicon) -> String {
        capitalize(&format!(
            "{} {} {} {} {}.",
            lex.nouns[self.subject].0,
            lex.verbs[self.verb].0,
            lex.nouns[self.object].0,
            PREPOSITIONS[self.prep].0,
            lex.nouns[self.tail].0
        ))
    }

    fn spanish(&self, lex: &Lexicon, negated: bool, cultural: bool) -> String {
        let mut words = Vec::new();
        if cultural {
            words.push("tradicionalmente");
        }
        words.push(lex.nouns[self.subject].1);
        if negated {
            words.push("no");
        }
        words.extend([
            lex.verbs[self.verb].1,
            lex.nouns[self.object].1,
            PREPOSITIONS[self.prep].1,
            lex.nouns[self.tail].1,
        ]);
        capitalize(&format!("{}.", words.join(" ")))
    }
}

pub fn glossary() -> BTreeMap<String, String> {
    let mut g = BTreeMap::new();
    for lex in TOPICS {
        for (en, es) in lex.nouns.iter().chain(lex.verbs) {
            g.insert(es.to_string(), en.to_string());
        }
    }
    for (en, es) in PREPOSITIONS {
        g.insert(es.to_string(), en.to_string());
    }
    g.insert("tradicionalmente".into(), "traditionally".into());
    g
}

pub fn topic_names() -> Vec<&'static str> {
    TOPICS.iter().map(|t| t.name).collect()
}

pub fn generate(spec: SynthSpec) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut anchor = Vec::new();
    let mut comparison = Vec::new();
    let mut alignment = Vec::new();
    let mut planted = Vec::new();
    for (t, lex) in TOPICS.iter().enumerate() {
        for d in 0..spec.docs_per_topic {
            let en_id = format!("en-t{t}-d{d}");
            let es_id = format!("es-t{t}-d{d}");
            let mut en_lines = Vec::new();
            let mut es_lines = Vec::new();
            for p in 0..spec.passages_per_doc {
                let fact = Fact::random(&mut rng, lex);
                let roll: f64 = rng.random();
                let variant = match roll {
                    r if r < 0.55 => PlantedVariant::Same,
                    r if r < 0.70 => PlantedVariant::Negated,
                    r if r < 0.85 => PlantedVariant::Cultural,
                    _ => PlantedVariant::Missing,
                };
                en_lines.push(fact.english(lex));
                es_lines.push(match variant {
                    PlantedVariant::Same => fact.spanish(lex, false, false),
                    PlantedVariant::Negated => fact.spanish(lex, true, false),
                    PlantedVariant::Cultural => fact.spanish(lex, true, true),
                    PlantedVariant::Missing => Fact::random(&mut rng, lex).spanish(lex, false, false),
                });
                planted.push(PlantedFact {
                    topic: t,
                    anchor_passage: format!("{en_id}#{p}"),
                    comparison_passage: format!("{es_id}#{p}"),
                    variant,
                });
            }
            anchor.push(Document::new(&en_id, "en", en_lines.join("\n")));
            comparison.push(Document::new(&es_id, "es", es_lines.join("\n")));
            alignment.push((en_id, es_id));
        }
    }
    SyntheticCorpus {
        anchor,
        comparison,
        alignment,
        glossary: glossary(),
        planted,
    }
}

/// Settings sized for the synthetic corpus and the offline providers.
pub fn synthetic_config() -> ProjectConfig {
    let mut cfg = ProjectConfig::default();
    cfg.topics.train.k = TOPICS.len();
    cfg.topics.train.iterations = 300;
    cfg.topics.train.burn_in = 100;
    cfg.topics.n_keywords = 6;
    cfg.retrieval.l = 3;
    cfg.retrieval.h = 5;
    cfg
}

impl SyntheticCorpus {
    /// Writes `en.jsonl`, `es.jsonl`, `alignment.json`, `glossary.json`, `planted.json`
    /// and a matching `mind.toml`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("mind.toml"), synthetic_config().to_toml())?;
        write_documents_jsonl(&dir.join("en.jsonl"), &self.anchor)?;
        write_documents_jsonl(&dir.join("es.jsonl"), &self.comparison)?;
        write_json(&dir.join("alignment.json"), &self.alignment)?;
        write_json(&dir.join("glossary.json"), &self.glossary)?;
        write_json(&dir.join("planted.json"), &self.planted)?;
        Ok(())
    }
}
