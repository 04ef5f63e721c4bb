use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::CasError;

/// Role a variable plays inside an analysis session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarKind {
    Time,
    State,
    Input,
    Parameter,
    TransformedParameter,
    AnsatzCoefficient,
    Jet,
    Auxiliary,
}

impl fmt::Display for VarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            VarKind::Time => "time",
            VarKind::State => "state",
            VarKind::Input => "input",
            VarKind::Parameter => "parameter",
            VarKind::TransformedParameter => "transformed-parameter",
            VarKind::AnsatzCoefficient => "ansatz-coefficient",
            VarKind::Jet => "jet",
            VarKind::Auxiliary => "auxiliary",
        };
        f.write_str(s)
    }
}

/// Ordered, duplicate-free list of named variables. Index 0 is the most
/// significant variable in lexicographic comparisons.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VarRegistry {
    names: Vec<String>,
    kinds: Vec<VarKind>,
    index: HashMap<String, usize>,
}

impl VarRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: &str, kind: VarKind) -> Result<usize, CasError> {
        if self.index.contains_key(name) {
            return Err(CasError::DuplicateVariable(name.to_string()));
        }
        let id = self.names.len();
        self.names.push(name.to_string());
        self.kinds.push(kind);
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn kind(&self, id: usize) -> VarKind {
        self.kinds[id]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn lookup(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<usize, CasError> {
        self.lookup(name)
            .ok_or_else(|| CasError::UnknownVariable(name.to_string()))
    }

    pub fn ids_of_kind(&self, kind: VarKind) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.kinds[i] == kind).collect()
    }
}
