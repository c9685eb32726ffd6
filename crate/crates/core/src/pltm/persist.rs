//! On-disk model layout: `model.json`, `beta_<lang>.f32` and `theta_<corpus>.f32`,
//! each matrix with a JSON sidecar.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::PassageRef;
use super::{PltmError, PolyTopicModel};
use crate::corpus::Vocabulary;
use crate::matrix::{read_matrix, write_matrix, Matrix};

#[derive(Serialize, Deserialize)]
struct Metadata {
    k: usize,
    alpha: f64,
    eta: f64,
    seed: u64,
    iterations: usize,
    burn_in: usize,
    vocabularies: BTreeMap<String, Vocabulary>,
    /// corpus id -> language
    corpora: BTreeMap<String, String>,
}

fn topic_ids(k: usize) -> Vec<String> {
    (0..k).map(|t| t.to_string()).collect()
}

/// Writes the model into `dir`, creating it if needed. Values are stored as f32.
pub fn save_model(model: &PolyTopicModel, dir: &Path) -> Result<(), PltmError> {
    fs::create_dir_all(dir)?;
    let mut corpora: BTreeMap<String, String> = BTreeMap::new();
    for p in &model.passages {
        corpora.insert(p.corpus_id.clone(), p.language.clone());
    }
    let meta = Metadata {
        k: model.k,
        alpha: model.alpha,
        eta: model.eta,
        seed: model.seed,
        iterations: model.iterations,
        burn_in: model.burn_in,
        vocabularies: model.vocabularies.clone(),
        corpora: corpora.clone(),
    };
    let json = serde_json::to_vec_pretty(&meta).map_err(|e| PltmError::Metadata(e.to_string()))?;
    fs::write(dir.join("model.json"), json)?;

    let topics = topic_ids(model.k);
    for (lang, beta) in &model.beta {
        let words = model.vocabularies[lang].words().to_vec();
        write_matrix(&dir.join(format!("beta_{lang}.f32")), beta, &topics, &words)?;
    }
    for corpus in corpora.keys() {
        let rows: Vec<usize> = model
            .passages
            .iter()
            .enumerate()
            .filter(|(_, p)| &p.corpus_id == corpus)
            .map(|(i, _)| i)
            .collect();
        let ids: Vec<String> = rows.iter().map(|&i| model.passages[i].id.clone()).collect();
        let data: Vec<Vec<f64>> = rows.iter().map(|&i| model.theta.row(i).to_vec()).collect();
        let theta = Matrix::from_rows(&data)?;
        write_matrix(&dir.join(format!("theta_{corpus}.f32")), &theta, &ids, &topics)?;
    }
    Ok(())
}

fn renormalize(m: &mut Matrix<f64>) {
    for r in 0..m.rows() {
        let row = m.row_mut(r);
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter_mut().for_each(|v| *v /= s);
        }
    }
}

/// Reads a model written by [`save_model`]. Passages come back grouped by corpus in
/// corpus-id order; rows are renormalized after the f32 round trip.
pub fn load_model(dir: &Path) -> Result<PolyTopicModel, PltmError> {
    let raw = fs::read(dir.join("model.json"))?;
    let meta: Metadata = serde_json::from_slice(&raw).map_err(|e| PltmError::Metadata(e.to_string()))?;
    let mut beta = BTreeMap::new();
    for (lang, vocab) in &meta.vocabularies {
        let (mut m, sc) = read_matrix::<f64>(&dir.join(format!("beta_{lang}.f32")))?;
        if sc.rows != meta.k || sc.cols != vocab.len() {
            return Err(PltmError::Metadata(format!(
                "beta_{lang} is {}x{}, expected {}x{}",
                sc.rows,
                sc.cols,
                meta.k,
                vocab.len()
            )));
        }
        renormalize(&mut m);
        beta.insert(lang.clone(), m);
    }
    let mut passages = Vec::new();
    let mut rows = Vec::new();
    for (corpus, lang) in &meta.corpora {
        let (m, sc) = read_matrix::<f64>(&dir.join(format!("theta_{corpus}.f32")))?;
        if sc.cols != meta.k || sc.row_ids.len() != sc.rows {
            return Err(PltmError::Metadata(format!("theta_{corpus} has a bad shape")));
        }
        for (i, id) in sc.row_ids.iter().enumerate() {
            passages.push(PassageRef {
                id: id.clone(),
                corpus_id: corpus.clone(),
                language: lang.clone(),
            });
            rows.push(m.row(i).to_vec());
        }
    }
    let mut theta = if rows.is_empty() {
        Matrix::zeros(0, meta.k)
    } else {
        Matrix::from_rows(&rows)?
    };
    renormalize(&mut theta);
    Ok(PolyTopicModel {
        k: meta.k,
        alpha: meta.alpha,
        eta: meta.eta,
        seed: meta.seed,
        iterations: meta.iterations,
        burn_in: meta.burn_in,
        vocabularies: meta.vocabularies,
        beta,
        passage_index: PolyTopicModel::index_passages(&passages),
        passages,
        theta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pltm::{train, TokenizedPassage, TrainConfig, TrainingSide, TrainingTuple};

    fn side(corpus: &str, lang: &str, id: &str, words: &[&str]) -> TrainingSide {
        TrainingSide {
            corpus_id: corpus.into(),
            language: lang.into(),
            passages: vec![TokenizedPassage {
                id: id.into(),
                tokens: words.iter().map(|w| w.to_string()).collect(),
            }],
        }
    }

    #[test]
    fn roundtrip_within_f32_precision() {
        let tuples = vec![
            TrainingTuple {
                sides: vec![
                    side("a", "en", "d1#0", &["milk", "baby", "sleep"]),
                    side("c", "es", "e1#0", &["leche", "bebe"]),
                ],
            },
            TrainingTuple {
                sides: vec![
                    side("a", "en", "d2#0", &["vaccine", "dose"]),
                    side("c", "es", "e2#0", &["vacuna", "dosis", "dosis"]),
                ],
            },
        ];
        let cfg = TrainConfig {
            iterations: 40,
            burn_in: 10,
            ..TrainConfig::with_k(2)
        };
        let model = train(&tuples, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_model(&model, dir.path()).unwrap();
        assert!(dir.path().join("theta_c.f32.json").exists());
        let back = load_model(dir.path()).unwrap();
        assert_eq!(back.k, model.k);
        assert_eq!(back.vocabularies, model.vocabularies);
        assert_eq!(back.passages.len(), model.passages.len());
        for p in &model.passages {
            let (x, y) = (model.theta_of(&p.id).unwrap(), back.theta_of(&p.id).unwrap());
            for (a, b) in x.iter().zip(y) {
                assert!((a - b).abs() < 1e-6);
            }
        }
        for (lang, b) in &model.beta {
            for (x, y) in b.as_slice().iter().zip(back.beta[lang].as_slice()) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn missing_dir_is_io_error() {
        assert!(matches!(
            load_model(Path::new("/nonexistent/model")),
            Err(PltmError::Io(_))
        ));
    }
}
