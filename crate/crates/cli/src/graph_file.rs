//! JSON graph files: `{"n": 4, "edges": [[0, 1], [1, 2]], "labels": [...]}`.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use forestconc::Graph;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl GraphFile {
    pub fn from_graph(graph: &Graph) -> Self {
        Self { n: graph.n(), edges: graph.edges().iter().map(|&(u, v)| [u, v]).collect(), labels: None }
    }

    /// Rejects duplicate edges (in either orientation), self-loops,
    /// out-of-range vertices and non-unique labels.
    pub fn to_graph(&self) -> Result<Graph, CliError> {
        let mut seen = HashSet::new();
        for &[u, v] in &self.edges {
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(CliError::Input(format!("duplicate edge [{u}, {v}]")));
            }
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.n {
                return Err(CliError::Input(format!(
                    "{} labels for {} vertices",
                    labels.len(),
                    self.n
                )));
            }
            let mut unique = HashSet::new();
            if let Some(dup) = labels.iter().find(|l| !unique.insert(l.as_str())) {
                return Err(CliError::Input(format!("duplicate label {dup:?}")));
            }
        }
        Ok(Graph::new(self.n, self.edges.iter().map(|&[u, v]| (u, v)))?)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("graph file: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph files always serialize") + "\n"
    }
}
