//! Command-line interface. Each subcommand maps onto one [`Workspace`] operation and
//! prints the same JSON the HTTP API returns.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use mind_core::corpus::{read_documents_jsonl, CorpusRole};
use mind_core::eval::{Composition, DplaceDefinition, FeverClaim};
use serde::Serialize;

use crate::config::ProjectConfig;
use crate::controlled::build_controlled;
use crate::error::{Result, ServiceError};
use crate::evaluation::{evaluate_retrieval, RetrievalEvalOptions};
use crate::ops::{AddCorpus, CreateProject, DiscrepancyReview, SetAlignment, TopicReview, Workspace};
use crate::providers::chat_from_settings;
use crate::store::{read_json, read_jsonl, write_atomic, write_jsonl};
use crate::synth::{generate, SynthSpec};

#[derive(Debug, Parser)]
#[command(name = "mind", version, about = "Cross-lingual discrepancy detection pipeline")]
pub struct Cli {
    /// Directory holding the projects.
    #[arg(long, env = "MIND_ROOT", default_value = ".", global = true)]
    pub root: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create a project.
    Init {
        id: String,
        /// TOML or JSON settings; defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write the synthetic bilingual corpus and matching settings to a directory.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 6)]
        docs_per_topic: usize,
        #[arg(long, default_value_t = 4)]
        passages_per_doc: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Add or replace a corpus from a JSONL file of documents.
    AddCorpus {
        project: String,
        #[arg(long)]
        id: String,
        #[arg(long)]
        language: String,
        #[arg(long, value_parser = parse_role)]
        role: CorpusRole,
        #[arg(long)]
        file: PathBuf,
    },
    /// Set the document alignment: explicit pairs, or machine translation.
    AddAlignment {
        project: String,
        /// JSON array of [anchor_id, comparison_id] pairs.
        #[arg(long, conflicts_with = "translation")]
        pairs: Option<PathBuf>,
        #[arg(long)]
        translation: bool,
        /// JSON object mapping comparison-language words to anchor-language words.
        #[arg(long)]
        glossary: Option<PathBuf>,
    },
    /// Run one stage, or every stage with `all`.
    Run {
        project: String,
        stage: String,
        #[arg(long)]
        force: bool,
    },
    Status {
        project: String,
    },
    Topics {
        project: String,
    },
    /// Exclude a topic's passages from question generation.
    Discard {
        project: String,
        topic: usize,
        #[arg(long)]
        actor: Option<String>,
        #[arg(long)]
        note: Option<String>,
    },
    Restore {
        project: String,
        topic: usize,
        #[arg(long)]
        actor: Option<String>,
        #[arg(long)]
        note: Option<String>,
    },
    Discrepancies {
        project: String,
        /// pending, confirmed, relabeled or rejected.
        #[arg(long)]
        state: Option<String>,
    },
    /// Confirm, reject or relabel a detected discrepancy.
    Review {
        project: String,
        record: String,
        #[arg(long)]
        action: String,
        #[arg(long)]
        label: Option<String>,
        #[arg(long)]
        note: Option<String>,
        #[arg(long)]
        actor: Option<String>,
    },
    /// Print (or write) the reviewed records as JSONL.
    Export {
        project: String,
        #[arg(long)]
        include_rejected: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: std::net::SocketAddr,
    },
    /// Judge retrieval candidates with the project's chat model and benchmark every search mode.
    EvalRetrieval {
        project: String,
        /// CSV with one row per search configuration.
        #[arg(long)]
        out: PathBuf,
        /// Also write the relevance judgments as JSONL.
        #[arg(long)]
        gold: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        max_questions: usize,
        /// Use every active question.
        #[arg(long)]
        all_questions: bool,
        #[arg(long, default_value_t = 3)]
        repetitions: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Build the controlled discrepancy dataset from FEVER claims and D-PLACE definitions.
    BuildControlled {
        /// JSONL of {id, claim, label, evidence}.
        #[arg(long)]
        fever: PathBuf,
        /// JSONL of {id, definition, example1, example2}.
        #[arg(long)]
        dplace: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Provider settings; the offline mock is used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Keep every input instead of the default per-source quotas.
        #[arg(long)]
        unlimited: bool,
        /// Classify the items and write a score report.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Confusion matrix CSV; needs --report.
        #[arg(long, requires = "report")]
        confusion: Option<PathBuf>,
    },
}

fn parse_role(s: &str) -> std::result::Result<CorpusRole, String> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
        .map_err(|_| format!("unknown role {s:?}; expected anchor, comparison or translation"))
}

fn print_json<W: Write, T: Serialize>(out: &mut W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| ServiceError::Invalid(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

/// Parses `args` (including the program name) and runs the command, writing to `out`.
pub fn run_from<I, T, W>(args: I, out: &mut W) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    W: Write,
{
    let cli = Cli::try_parse_from(args).map_err(|e| ServiceError::Invalid(e.to_string()))?;
    execute(cli, out)
}

pub fn execute<W: Write>(cli: Cli, out: &mut W) -> Result<()> {
    let ws = Workspace::new(&cli.root);
    match cli.command {
        Command::Init { id, config } => {
            let config = config.map(|p| ProjectConfig::load(&p)).transpose()?;
            print_json(out, &ws.create_project(CreateProject { id, config })?)
        }
        Command::Synth {
            out: dir,
            docs_per_topic,
            passages_per_doc,
            seed,
        } => {
            let corpus = generate(SynthSpec {
                docs_per_topic,
                passages_per_doc,
                seed,
            });
            corpus.write_to(&dir)?;
            writeln!(
                out,
                "wrote {} anchor and {} comparison documents to {}",
                corpus.anchor.len(),
                corpus.comparison.len(),
                dir.display()
            )?;
            Ok(())
        }
        Command::AddCorpus {
            project,
            id,
            language,
            role,
            file,
        } => {
            let documents = read_documents_jsonl(&file)?;
            let req = AddCorpus {
                id,
                language,
                role,
                documents,
            };
            print_json(out, &ws.add_corpus(&project, req)?)
        }
        Command::AddAlignment {
            project,
            pairs,
            translation,
            glossary,
        } => {
            if pairs.is_none() && !translation {
                return Err(ServiceError::Invalid("give --pairs FILE or --translation".into()));
            }
            let req = SetAlignment {
                pairs: pairs.map(|p| read_json(&p)).transpose()?,
                glossary: glossary.map(|p| read_json(&p)).transpose()?,
            };
            print_json(out, &ws.set_alignment(&project, req)?)
        }
        Command::Run { project, stage, force } => {
            if stage.eq_ignore_ascii_case("all") {
                print_json(out, &ws.run_all(&project, force)?)
            } else {
                print_json(out, &ws.run_stage(&project, &stage, force)?)
            }
        }
        Command::Status { project } => print_json(out, &ws.status(&project)?),
        Command::Topics { project } => print_json(out, &ws.topics(&project)?),
        Command::Discard {
            project,
            topic,
            actor,
            note,
        } => print_json(
            out,
            &ws.review_topic(&project, topic, "discard", TopicReview { actor, note })?,
        ),
        Command::Restore {
            project,
            topic,
            actor,
            note,
        } => print_json(
            out,
            &ws.review_topic(&project, topic, "restore", TopicReview { actor, note })?,
        ),
        Command::Discrepancies { project, state } => print_json(out, &ws.discrepancies(&project, state.as_deref())?),
        Command::Review {
            project,
            record,
            action,
            label,
            note,
            actor,
        } => {
            let req = DiscrepancyReview {
                action,
                label,
                note,
                actor,
            };
            print_json(out, &ws.review_discrepancy(&project, &record, req)?)
        }
        Command::Export {
            project,
            include_rejected,
            out: file,
        } => {
            let body = ws.export(&project, include_rejected)?;
            match file {
                Some(f) => write_atomic(&f, body.as_bytes()),
                None => Ok(out.write_all(body.as_bytes())?),
            }
        }
        Command::Serve { addr } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(crate::api::serve(ws, addr))?;
            Ok(())
        }
        Command::EvalRetrieval {
            project,
            out: csv,
            gold,
            max_questions,
            all_questions,
            repetitions,
            seed,
        } => {
            let p = ws.open(&project)?;
            let opts = RetrievalEvalOptions {
                max_questions: (!all_questions).then_some(max_questions),
                repetitions,
                seed,
            };
            let eval = evaluate_retrieval(&p, &opts)?;
            let mut buf = Vec::new();
            mind_core::index::write_benchmark_csv(&eval.rows, &mut buf)
                .map_err(|e| ServiceError::Invalid(e.to_string()))?;
            write_atomic(&csv, &buf)?;
            if let Some(g) = gold {
                write_jsonl(&g, &eval.gold)?;
            }
            writeln!(
                out,
                "{} questions scored ({} without gold passages); {} configurations written to {}",
                eval.questions,
                eval.judged_without_gold,
                eval.rows.len(),
                csv.display()
            )?;
            Ok(())
        }
        Command::BuildControlled {
            fever,
            dplace,
            out: file,
            config,
            unlimited,
            report,
            confusion,
        } => {
            let cfg = config.map(|p| ProjectConfig::load(&p)).transpose()?.unwrap_or_default();
            let cache_dir = file
                .parent()
                .map(|p| p.join("cache"))
                .unwrap_or_else(|| PathBuf::from("cache"));
            let chat = chat_from_settings(&cfg.providers, Default::default(), &cache_dir)?;
            let claims: Vec<FeverClaim> = read_jsonl(&fever)?;
            let defs: Vec<DplaceDefinition> = read_jsonl(&dplace)?;
            let composition = if unlimited {
                Composition::unlimited()
            } else {
                Composition::default()
            };
            let outcome = build_controlled(&claims, &defs, chat.as_ref(), &composition, report.is_some())?;
            write_jsonl(&file, &outcome.items)?;
            if let (Some(path), Some(r)) = (&report, &outcome.report) {
                crate::store::write_json(path, r)?;
                if let Some(c) = &confusion {
                    let mut buf = Vec::new();
                    r.write_confusion_csv(&mut buf)
                        .map_err(|e| ServiceError::Invalid(e.to_string()))?;
                    write_atomic(c, &buf)?;
                }
                writeln!(out, "{} items; macro F1 {:.4}", outcome.items.len(), r.macro_f1)?;
            } else {
                writeln!(out, "{} items written to {}", outcome.items.len(), file.display())?;
            }
            Ok(())
        }
    }
}
