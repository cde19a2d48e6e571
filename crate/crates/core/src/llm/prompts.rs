use std::fmt::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::gateway::{GatewayError, LlmClient};
use super::structure::{StructureError, StructuredProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Ampl,
    ExternalRuntime,
}

impl Target {
    pub fn as_str(self) -> &'static str {
        match self {
            Target::Ampl => "ampl",
            Target::ExternalRuntime => "external-runtime",
        }
    }
}

impl std::str::FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ampl" => Ok(Target::Ampl),
            "external-runtime" | "external" => Ok(Target::ExternalRuntime),
            other => Err(format!("unknown target '{other}' (expected ampl or external-runtime)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FewShot {
    pub input: String,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FewShotSet {
    pub examples: Vec<FewShot>,
}

impl FewShotSet {
    /// Loads every `*.toml` in `dir`, sorted by file name.
    pub fn load_dir(dir: &Path) -> Result<Self, LlmError> {
        let err = |m: String| LlmError::FewShots(m);
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| err(format!("{}: {e}", dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "toml"))
            .collect();
        paths.sort();
        let mut examples = Vec::new();
        for p in paths {
            let text = std::fs::read_to_string(&p).map_err(|e| err(format!("{}: {e}", p.display())))?;
            examples.push(toml::from_str(&text).map_err(|e| err(format!("{}: {e}", p.display())))?);
        }
        Ok(FewShotSet { examples })
    }
}

/// Few-shot examples for each prompt kind.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FewShotLibrary {
    pub structure: FewShotSet,
    pub ampl: FewShotSet,
    pub external: FewShotSet,
}

impl FewShotLibrary {
    /// Expects `structure/`, `ampl/` and `external/` below `root`.
    pub fn load(root: &Path) -> Result<Self, LlmError> {
        Ok(FewShotLibrary {
            structure: FewShotSet::load_dir(&root.join("structure"))?,
            ampl: FewShotSet::load_dir(&root.join("ampl"))?,
            external: FewShotSet::load_dir(&root.join("external"))?,
        })
    }

    pub fn for_target(&self, target: Target) -> &FewShotSet {
        match target {
            Target::Ampl => &self.ampl,
            Target::ExternalRuntime => &self.external,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no-spec-block: {0}")]
pub struct ExtractionError(pub String);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LlmError {
    #[error("gateway {0}")]
    Gateway(#[from] GatewayError),
    #[error("{0}")]
    Structure(#[from] StructureError),
    #[error("{0}")]
    Extraction(#[from] ExtractionError),
    #[error("few-shot examples: {0}")]
    FewShots(String),
}

/// What the generator sees about the problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Context {
    Structured(StructuredProblem),
    Raw(String),
}

impl Context {
    fn render(&self) -> String {
        match self {
            Context::Structured(sp) => sp.to_string(),
            Context::Raw(d) => format!("{}\n", d.trim_end()),
        }
    }
}

/// Inputs shared by generation and refinement prompts. `data_schema` is
/// `None` when values must be taken from the description and inlined.
#[derive(Debug, Clone, Copy)]
pub struct GenerationRequest<'a> {
    pub context: &'a Context,
    pub target: Target,
    pub few_shots: &'a FewShotSet,
    pub data_schema: Option<&'a str>,
}

/// Separates model and data when a spec carries both.
pub const DATA_DELIMITER: &str = "data;";

const STRUCTURE_INSTRUCTIONS: &str = "\
TASK: structure
Read the optimization problem description and list its components.
Answer with exactly these blocks, in this order, one item per line:
OBJECTIVES: each objective in words
PARAMETERS: one line per input quantity as `name | dimension | description`
VARIABLES: one line per decision quantity as `name | dimension | description`
CONSTRAINTS: each constraint in words
REWRITTEN: the description again, with every mention of a parameter written
as \\param{name} and every mention of a variable written as \\var{name}
Dimensions are scalar, one-dimensional or two-dimensional. Names must be
identifiers (letters, digits, underscores) and unique.
";

fn ampl_instructions(inline: bool) -> &'static str {
    if inline {
        "TASK: generate ampl
Write an AMPL model for the problem, then a line containing only `data;`,
then a data section holding every set member and parameter value stated in
the description. Use only set, param, var, subject to, maximize and
minimize declarations with linear expressions. Reply with one fenced code
block.
"
    } else {
        "TASK: generate ampl
Write an AMPL model (no data section) for the problem. Use exactly the set
and parameter names listed under DATA; values are supplied separately. Use
only set, param, var, subject to, maximize and minimize declarations with
linear expressions. Reply with one fenced code block.
"
    }
}

fn external_instructions(inline: bool) -> &'static str {
    if inline {
        "TASK: generate external-runtime
Write a program for the external runtime that builds and solves the
problem with every value taken from the description. It is called as
`<runtime> SPEC DATA` from its working directory and must write a file
named `result` with the line `status: solved`, `status: infeasible`,
`status: unbounded` or `status: error`, plus `objective: <number>` when
solved. Reply with one fenced code block.
"
    } else {
        "TASK: generate external-runtime
Write a program for the external runtime that builds and solves the
problem. It is called as `<runtime> SPEC DATA`, where DATA is a JSON file
holding the sets and parameters listed under DATA, and must write a file
named `result` in its working directory with the line `status: solved`,
`status: infeasible`, `status: unbounded` or `status: error`, plus
`objective: <number>` when solved. Reply with one fenced code block.
"
    }
}

fn examples(out: &mut String, shots: &FewShotSet, input_label: &str, fence: Option<&str>) {
    for (i, ex) in shots.examples.iter().enumerate() {
        let _ = write!(out, "\n### Example {}\n{input_label}:\n{}\n", i + 1, ex.input.trim_end());
        match fence {
            Some(lang) => {
                let _ = writeln!(out, "Answer:\n```{lang}\n{}\n```", ex.output.trim_end());
            }
            None => {
                let _ = writeln!(out, "Answer:\n{}", ex.output.trim_end());
            }
        }
    }
}

pub fn structure_prompt(description: &str, few_shots: &FewShotSet) -> String {
    let mut p = String::from(STRUCTURE_INSTRUCTIONS);
    examples(&mut p, few_shots, "Description", None);
    let _ = write!(p, "\n### Problem\nDescription:\n{}\nAnswer:\n", description.trim_end());
    p
}

pub fn generation_prompt(req: &GenerationRequest) -> String {
    let inline = req.data_schema.is_none();
    let (instructions, lang) = match req.target {
        Target::Ampl => (ampl_instructions(inline), "ampl"),
        Target::ExternalRuntime => (external_instructions(inline), "text"),
    };
    let mut p = String::from(instructions);
    examples(&mut p, req.few_shots, "Problem", Some(lang));
    let _ = write!(p, "\n### Problem\n{}", req.context.render());
    if let Some(schema) = req.data_schema {
        let _ = write!(p, "\nDATA:\n{}", schema);
        if !schema.ends_with('\n') {
            p.push('\n');
        }
    }
    p
}

pub fn refinement_prompt(req: &GenerationRequest, prev_spec: &str, feedback: &str) -> String {
    let mut p = generation_prompt(req);
    let _ = write!(
        p,
        "\n### PREVIOUS SPECIFICATION\n```\n{}\n```\n### FEEDBACK\n{}\n\nAnalyze the errors above, identify the problematic parts of the previous specification and reply with a corrected specification in one fenced code block.\n",
        prev_spec.trim_end(),
        feedback.trim_end()
    );
    p
}

/// Body of the first fenced block, or the whole trimmed response if there
/// is none.
pub fn extract_spec(response: &str) -> Result<String, ExtractionError> {
    let body = match response.find("```") {
        Some(start) => {
            let after = &response[start + 3..];
            let after = after.split_once('\n').map_or("", |(_, rest)| rest);
            match after.find("```") {
                Some(end) => after[..end].to_string(),
                None => after.to_string(),
            }
        }
        None => response.trim().to_string(),
    };
    if body.trim().is_empty() {
        return Err(ExtractionError("the response contains no specification text".into()));
    }
    Ok(body)
}

/// Step 1. The raw response is returned alongside so callers can record it.
pub fn structure_problem(
    client: &LlmClient,
    description: &str,
    few_shots: &FewShotSet,
) -> Result<StructuredProblem, LlmError> {
    let response = client.complete(&structure_prompt(description, few_shots))?;
    let text = match extract_spec(&response) {
        Ok(t) if response.contains("```") => t,
        _ => response,
    };
    Ok(StructuredProblem::parse(&text)?)
}

pub fn generate_spec(client: &LlmClient, req: &GenerationRequest) -> Result<String, LlmError> {
    if req.few_shots.examples.is_empty() {
        return Err(LlmError::FewShots(format!("no examples for target {}", req.target.as_str())));
    }
    Ok(extract_spec(&client.complete(&generation_prompt(req))?)?)
}

pub fn refine_spec(client: &LlmClient, req: &GenerationRequest, prev_spec: &str, feedback: &str) -> Result<String, LlmError> {
    if req.few_shots.examples.is_empty() {
        return Err(LlmError::FewShots(format!("no examples for target {}", req.target.as_str())));
    }
    if feedback.trim().is_empty() {
        return Err(LlmError::FewShots("refinement needs non-empty feedback".into()));
    }
    Ok(extract_spec(&client.complete(&refinement_prompt(req, prev_spec, feedback))?)?)
}
