#![allow(dead_code)]

use std::path::Path;

use mind_service::ops::Workspace;
use mind_service::synth::{generate, SynthSpec, SyntheticCorpus};

pub const PROJECT: &str = "demo";

pub fn corpus() -> SyntheticCorpus {
    generate(SynthSpec::default())
}

/// A workspace under `root` holding the synthetic project, nothing run yet.
pub fn synthetic_workspace(root: &Path) -> Workspace {
    let ws = Workspace::new(root);
    ws.create_synthetic(PROJECT, &corpus()).unwrap();
    ws
}

/// Topic whose English keywords are mostly web boilerplate.
pub fn boilerplate_topic(ws: &Workspace) -> usize {
    const WEB: [&str; 6] = ["cookies", "login", "newsletter", "footer", "sitemap", "banner"];
    ws.topics(PROJECT)
        .unwrap()
        .into_iter()
        .max_by_key(|t| t.keywords["en"].iter().filter(|w| WEB.contains(&w.as_str())).count())
        .unwrap()
        .topic_id
}
