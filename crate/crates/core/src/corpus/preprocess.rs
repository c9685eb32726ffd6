use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, OnceLock};

use regex::Regex;

use super::{CorpusError, Passage};

/// Lemmatization hook. Implementations may tag parts of speech internally.
pub trait Lemmatizer: Send + Sync {
    fn lemmatize(&self, token: &str) -> String;
}

/// Language-specific preprocessing resources.
#[derive(Clone)]
pub struct LangConfig {
    pub language: String,
    pub stopwords: HashSet<String>,
    /// Lowercase contraction or acronym -> expansion.
    pub contractions: HashMap<String, String>,
    pub lemmatizer: Option<Arc<dyn Lemmatizer>>,
}

impl fmt::Debug for LangConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LangConfig")
            .field("language", &self.language)
            .field("stopwords", &self.stopwords.len())
            .field("contractions", &self.contractions.len())
            .field("lemmatizer", &self.lemmatizer.is_some())
            .finish()
    }
}

const EN_STOPWORDS: &str = "a about above after again against all am an and any are as at be because been \
before being below between both but by can could did do does doing down during each few for from further \
had has have having he her here hers herself him himself his how i if in into is it its itself just me \
more most my myself no nor not now of off on once only or other our ours ourselves out over own s same she \
should so some such t than that the their theirs them themselves then there these they this those through \
to too under until up very was we were what when where which while who whom why will with would you your \
yours yourself yourselves";

const ES_STOPWORDS: &str = "a al algo algunas algunos ante antes como con contra cual cuando de del desde \
donde durante e el ella ellas ellos en entre era es esa esas ese eso esos esta estaba estas este esto estos \
fue fueron ha hay la las le les lo los mas me mi mucho muy nada ni no nos o os otra otro para pero poco por \
porque que quien se ser si sin sobre su sus tambien te tiene tu un una uno unos y ya";

const DE_STOPWORDS: &str = "aber alle als also am an auch auf aus bei bin bis da damit dann das dass dem den \
der des die dies diese dieser du durch ein eine einem einen einer eines er es fur hat hatte ich ihr im in \
ist ja kann kein man mit nach nicht noch nur oder sein sich sie sind so uber um und uns von vor war wie wir \
wird zu zum zur";

const EN_CONTRACTIONS: &[(&str, &str)] = &[
    ("don't", "do not"),
    ("doesn't", "does not"),
    ("didn't", "did not"),
    ("can't", "can not"),
    ("cannot", "can not"),
    ("won't", "will not"),
    ("wouldn't", "would not"),
    ("shouldn't", "should not"),
    ("couldn't", "could not"),
    ("isn't", "is not"),
    ("aren't", "are not"),
    ("wasn't", "was not"),
    ("weren't", "were not"),
    ("haven't", "have not"),
    ("hasn't", "has not"),
    ("it's", "it is"),
    ("i'm", "i am"),
    ("you're", "you are"),
    ("they're", "they are"),
    ("we're", "we are"),
    ("i've", "i have"),
    ("you've", "you have"),
    ("let's", "let us"),
    ("e.g.", "for example"),
    ("i.e.", "that is"),
    ("u.s.", "united states"),
];

impl LangConfig {
    pub fn new(language: impl Into<String>) -> Self {
        Self {
            language: language.into(),
            stopwords: HashSet::new(),
            contractions: HashMap::new(),
            lemmatizer: None,
        }
    }

    /// Small built-in defaults for `en`, `es` and `de`; empty resources otherwise.
    pub fn default_for(language: &str) -> Self {
        let base = language.split(['-', '_']).next().unwrap_or(language);
        let stop = match base {
            "en" => EN_STOPWORDS,
            "es" => ES_STOPWORDS,
            "de" => DE_STOPWORDS,
            _ => "",
        };
        let mut cfg = Self::new(language);
        cfg.stopwords = stop.split_whitespace().map(str::to_string).collect();
        if base == "en" {
            cfg.contractions = EN_CONTRACTIONS
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect();
        }
        cfg
    }

    pub fn with_stopwords<I: IntoIterator<Item = S>, S: Into<String>>(mut self, words: I) -> Self {
        self.stopwords
            .extend(words.into_iter().map(|w| w.into().to_lowercase()));
        self
    }

    pub fn with_contraction(mut self, from: &str, to: &str) -> Self {
        self.contractions.insert(from.to_lowercase(), to.to_lowercase());
        self
    }

    pub fn with_lemmatizer(mut self, lemmatizer: Arc<dyn Lemmatizer>) -> Self {
        self.lemmatizer = Some(lemmatizer);
        self
    }
}

fn word_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // words with inner apostrophes or dots, so "don't" and "e.g." survive until expansion
    RE.get_or_init(|| Regex::new(r"[\p{L}\p{N}]+(?:['’.][\p{L}\p{N}]+)*\.?").unwrap())
}

/// Runs contraction expansion, tokenization, stopword removal and lemmatization on raw text.
pub fn preprocess_text(text: &str, cfg: &LangConfig) -> Vec<String> {
    let mut expanded = Vec::new();
    for m in word_regex().find_iter(text) {
        let lower = m.as_str().to_lowercase().replace('’', "'");
        let key = lower.as_str();
        let expansion = cfg
            .contractions
            .get(key)
            .or_else(|| cfg.contractions.get(key.trim_end_matches('.')));
        match expansion {
            Some(e) => expanded.extend(e.split_whitespace().map(str::to_string)),
            None => expanded.push(lower),
        }
    }
    expanded
        .iter()
        .flat_map(|w| {
            w.split(|c: char| !c.is_alphanumeric())
                .filter(|t| !t.is_empty())
                .map(str::to_lowercase)
                .collect::<Vec<_>>()
        })
        .filter(|t| !cfg.stopwords.contains(t))
        .filter_map(|t| match &cfg.lemmatizer {
            Some(l) => {
                let lemma = l.lemmatize(&t).to_lowercase();
                (!lemma.is_empty() && !cfg.stopwords.contains(&lemma)).then_some(lemma)
            }
            None => Some(t),
        })
        .collect()
}

/// Populates `tokens` of a passage. The passage language must match the config language.
pub fn preprocess_passage(p: &Passage, cfg: &LangConfig) -> Result<Passage, CorpusError> {
    if p.language != cfg.language {
        return Err(CorpusError::LanguageMismatch {
            expected: cfg.language.clone(),
            found: p.language.clone(),
        });
    }
    Ok(Passage {
        tokens: preprocess_text(&p.text, cfg),
        ..p.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn passage(text: &str, lang: &str) -> Passage {
        Passage {
            id: "d#0".into(),
            document_id: "d".into(),
            language: lang.into(),
            text: text.into(),
            tokens: vec![],
            index_in_document: 0,
        }
    }

    #[test]
    fn contraction_then_stopwords() {
        let cfg = LangConfig::new("en")
            .with_contraction("don't", "do not")
            .with_stopwords(["do", "not"]);
        let out = preprocess_passage(&passage("Don't eat PEANUTS!", "en"), &cfg).unwrap();
        assert_eq!(out.tokens, ["eat", "peanuts"]);
    }

    #[test]
    fn empty_text() {
        let cfg = LangConfig::default_for("en");
        assert!(preprocess_passage(&passage("", "en"), &cfg).unwrap().tokens.is_empty());
    }

    #[test]
    fn no_lemmatizer_keeps_surface_forms() {
        let cfg = LangConfig::new("en");
        assert_eq!(
            preprocess_text("Babies Were Sleeping", &cfg),
            ["babies", "were", "sleeping"]
        );
    }

    struct StripS;
    impl Lemmatizer for StripS {
        fn lemmatize(&self, token: &str) -> String {
            token.strip_suffix('s').unwrap_or(token).to_string()
        }
    }

    #[test]
    fn lemmatizer_hook_applied() {
        let cfg = LangConfig::new("en").with_lemmatizer(Arc::new(StripS));
        assert_eq!(preprocess_text("cats dogs", &cfg), ["cat", "dog"]);
    }

    #[test]
    fn language_mismatch() {
        let cfg = LangConfig::default_for("es");
        assert!(matches!(
            preprocess_passage(&passage("hola", "en"), &cfg),
            Err(CorpusError::LanguageMismatch { .. })
        ));
    }

    #[test]
    fn non_alphanumerics_removed_and_acronyms_expanded() {
        let cfg = LangConfig::default_for("en");
        assert_eq!(
            preprocess_text("MIS-C cases, e.g. in the U.S. (2020)", &cfg),
            ["mis", "c", "cases", "example", "united", "states", "2020"]
        );
    }

    proptest! {
        #[test]
        fn idempotent(text in "[A-Za-z' ,.!?0-9]{0,120}") {
            let cfg = LangConfig::default_for("en");
            let once = preprocess_text(&text, &cfg);
            let twice = preprocess_text(&once.join(" "), &cfg);
            prop_assert_eq!(once, twice);
        }
    }
}
