use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::llm::{GatewayError, StructuredProblem, Target};
use crate::solver::SolveErrorKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutcomeClass {
    Solved,
    CompileError,
    RuntimeError,
}

impl OutcomeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeClass::Solved => "solved",
            OutcomeClass::CompileError => "compile-error",
            OutcomeClass::RuntimeError => "runtime-error",
        }
    }
}

/// Result of executing one spec. `kind` of a compile error is a
/// modeling-language error kind, `no-spec-block`, or `external`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum ExecOutcome {
    Solved {
        objective: f64,
        #[serde(default)]
        assignment: IndexMap<String, f64>,
    },
    CompileError {
        kind: String,
        message: String,
    },
    RuntimeError {
        kind: SolveErrorKind,
        message: String,
    },
}

impl ExecOutcome {
    pub fn class(&self) -> OutcomeClass {
        match self {
            ExecOutcome::Solved { .. } => OutcomeClass::Solved,
            ExecOutcome::CompileError { .. } => OutcomeClass::CompileError,
            ExecOutcome::RuntimeError { .. } => OutcomeClass::RuntimeError,
        }
    }

    pub fn objective(&self) -> Option<f64> {
        match self {
            ExecOutcome::Solved { objective, .. } => Some(*objective),
            _ => None,
        }
    }

    /// `solved`, or the error kind.
    pub fn kind(&self) -> String {
        match self {
            ExecOutcome::Solved { .. } => "solved".into(),
            ExecOutcome::CompileError { kind, .. } => kind.clone(),
            ExecOutcome::RuntimeError { kind, .. } => kind.as_str().into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecAttempt {
    pub spec: String,
    pub outcome: ExecOutcome,
    /// Text handed to the next refinement prompt; empty when solved.
    #[serde(default)]
    pub feedback: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptStep {
    Structure,
    Generate,
    Refine,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub step: PromptStep,
    pub prompt_sha256: String,
    pub response_sha256: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub problem_id: String,
    pub variant: String,
    /// Backend the specs came from, e.g. `remote:gpt-4o`.
    pub model: String,
    pub run_index: usize,
    pub target: Target,
    pub structured: bool,
    pub refinement: bool,
    pub inline_data: bool,
    pub max_refinements: usize,
    /// Copied from the bundle so records can be scored on their own.
    pub ground_truth: Option<f64>,
    pub structured_problem: Option<StructuredProblem>,
    /// Why Step 1 output was rejected; generation then used the raw text.
    pub structure_error: Option<String>,
    pub spec_history: Vec<SpecAttempt>,
    pub final_outcome: ExecOutcome,
    pub refinement_count: usize,
    pub objective: Option<f64>,
    /// Set when a completion failed; the run stops there.
    pub gateway_error: Option<GatewayError>,
    pub wall_time_ms: u64,
    pub prompt_transcript: Vec<TranscriptEntry>,
}

impl RunRecord {
    pub fn class(&self) -> OutcomeClass {
        self.final_outcome.class()
    }

    /// Store key, unique per bench cell.
    pub fn key(&self) -> String {
        cell_key(&self.problem_id, &self.variant, self.run_index)
    }

    /// Checks the structural invariants every record must satisfy.
    pub fn check(&self) -> Result<(), String> {
        if self.refinement_count > self.max_refinements {
            return Err(format!("refinement_count {} exceeds cap {}", self.refinement_count, self.max_refinements));
        }
        if !self.refinement && self.refinement_count > 0 {
            return Err("one-off run has refinements".into());
        }
        if self.spec_history.len() != self.refinement_count + 1 {
            return Err(format!(
                "spec_history has {} entries for {} refinements",
                self.spec_history.len(),
                self.refinement_count
            ));
        }
        if self.spec_history.last().map(|a| &a.outcome) != Some(&self.final_outcome) {
            return Err("final outcome differs from the last attempt".into());
        }
        if self.objective != self.final_outcome.objective() {
            return Err("objective does not match the final outcome".into());
        }
        Ok(())
    }
}

pub fn cell_key(problem_id: &str, variant: &str, run_index: usize) -> String {
    format!("{problem_id}--{variant}--run{run_index}")
}
