use std::path::PathBuf;
use std::time::Instant;

use crate::llm::{
    extract_spec, generation_prompt, refinement_prompt, sha256_hex, structure_prompt, Context, FewShotLibrary,
    GatewayError, GenerationRequest, LlmClient, StructuredProblem,
};
use crate::solver::SolveErrorKind;

use super::bundle::{BundleData, BundleError, ProblemBundle};
use super::execute::{execute_spec, Execution, ExternalRuntime, SpecData};
use super::record::{ExecOutcome, PromptStep, RunRecord, SpecAttempt, TranscriptEntry};
use super::variant::VariantConfig;

/// Everything a run needs besides the bundle and the variant.
#[derive(Debug, Clone)]
pub struct Runner {
    pub client: LlmClient,
    pub few_shots: FewShotLibrary,
    /// Recorded as the record's `model`.
    pub model_label: String,
    /// Attempts go to `<scratch>/<problem>/<variant>/run<k>/attempt<j>`.
    pub scratch_root: PathBuf,
    pub runtime: ExternalRuntime,
}

struct Transcript(Vec<TranscriptEntry>);

impl Transcript {
    fn ask(&mut self, client: &LlmClient, step: PromptStep, prompt: &str) -> Result<String, GatewayError> {
        let result = client.complete(prompt);
        self.0.push(TranscriptEntry {
            step,
            prompt_sha256: sha256_hex(prompt),
            response_sha256: result.as_ref().ok().map(|r| sha256_hex(r)),
            error: result.as_ref().err().map(|e| e.to_string()),
        });
        result
    }
}

fn gateway_failure(e: &GatewayError) -> Execution {
    let message = format!("the model call failed: {e}");
    Execution {
        feedback: format!("ERROR unexpected-termination\n{message}\n"),
        outcome: ExecOutcome::RuntimeError {
            kind: SolveErrorKind::UnexpectedTermination,
            message,
        },
    }
}

fn no_spec(message: String) -> Execution {
    Execution {
        feedback: format!("ERROR no-spec-block\n{message}\n"),
        outcome: ExecOutcome::CompileError {
            kind: "no-spec-block".into(),
            message,
        },
    }
}

impl Runner {
    pub fn new(client: LlmClient, few_shots: FewShotLibrary, scratch_root: impl Into<PathBuf>) -> Self {
        Runner {
            model_label: client.describe(),
            client,
            few_shots,
            scratch_root: scratch_root.into(),
            runtime: ExternalRuntime::default(),
        }
    }

    pub fn attempt_dir(&self, problem: &str, variant: &str, run_index: usize, attempt: usize) -> PathBuf {
        self.scratch_root
            .join(problem)
            .join(variant)
            .join(format!("run{run_index}"))
            .join(format!("attempt{attempt}"))
    }

    /// Structure (optional), generate, execute, then refine while the spec
    /// fails and the budget lasts.
    pub fn run_variant(&self, bundle: &ProblemBundle, data: &BundleData, cfg: &VariantConfig, run_index: usize) -> RunRecord {
        self.run(bundle, &bundle.description, SpecData::Bound(&data.bound), Some(&data.schema), cfg, run_index)
    }

    /// Same loop without the binding step: the description carries the
    /// values and the spec must inline them.
    pub fn run_baseline(&self, bundle: &ProblemBundle, cfg: &VariantConfig, run_index: usize) -> Result<RunRecord, BundleError> {
        let description = bundle.inline_description.as_deref().ok_or_else(|| BundleError::Layout {
            dir: bundle.dir.clone(),
            message: "inline/description.md is missing; inline-data runs need the values in the description".into(),
        })?;
        Ok(self.run(bundle, description, SpecData::Inline, None, cfg, run_index))
    }

    /// Dispatches on `cfg.inline_data`.
    pub fn run_cell(&self, bundle: &ProblemBundle, data: Option<&BundleData>, cfg: &VariantConfig, run_index: usize) -> Result<RunRecord, BundleError> {
        if cfg.inline_data {
            return self.run_baseline(bundle, cfg, run_index);
        }
        match data {
            Some(d) => Ok(self.run_variant(bundle, d, cfg, run_index)),
            None => Ok(self.run_variant(bundle, &bundle.bind()?, cfg, run_index)),
        }
    }

    fn run(
        &self,
        bundle: &ProblemBundle,
        description: &str,
        data: SpecData,
        schema: Option<&str>,
        cfg: &VariantConfig,
        run_index: usize,
    ) -> RunRecord {
        let started = Instant::now();
        let mut transcript = Transcript(Vec::new());
        let mut structured_problem: Option<StructuredProblem> = None;
        let mut structure_error = None;
        let mut gateway_error = None;
        let mut history: Vec<SpecAttempt> = Vec::new();

        let mut context = Context::Raw(description.to_string());
        if cfg.structured {
            let prompt = structure_prompt(description, &self.few_shots.structure);
            match transcript.ask(&self.client, PromptStep::Structure, &prompt) {
                Ok(response) => {
                    let text = if response.contains("```") {
                        extract_spec(&response).unwrap_or(response)
                    } else {
                        response
                    };
                    match StructuredProblem::parse(&text) {
                        Ok(sp) => {
                            context = Context::Structured(sp.clone());
                            structured_problem = Some(sp);
                        }
                        Err(e) => structure_error = Some(e.to_string()),
                    }
                }
                Err(e) => gateway_error = Some(e),
            }
        }

        let req = GenerationRequest {
            context: &context,
            target: cfg.target,
            few_shots: self.few_shots.for_target(cfg.target),
            data_schema: schema,
        };
        let budget = cfg.refinement_budget();
        let mut refinements = 0;
        if let Some(e) = &gateway_error {
            let ex = gateway_failure(e);
            history.push(SpecAttempt {
                spec: String::new(),
                outcome: ex.outcome,
                feedback: ex.feedback,
            });
        } else {
            loop {
                let (step, prompt) = match history.last() {
                    None => (PromptStep::Generate, generation_prompt(&req)),
                    Some(prev) => (PromptStep::Refine, refinement_prompt(&req, &prev.spec, &prev.feedback)),
                };
                let attempt = history.len();
                let (spec, ex) = match transcript.ask(&self.client, step, &prompt) {
                    Err(e) => {
                        let ex = gateway_failure(&e);
                        gateway_error = Some(e);
                        (String::new(), ex)
                    }
                    Ok(response) => match extract_spec(&response) {
                        Err(e) => (String::new(), no_spec(e.0)),
                        Ok(spec) => {
                            let dir = self.attempt_dir(&bundle.id, &cfg.label, run_index, attempt);
                            let ex = execute_spec(&spec, data, cfg, &self.runtime, &dir);
                            (spec, ex)
                        }
                    },
                };
                history.push(SpecAttempt {
                    spec,
                    outcome: ex.outcome,
                    feedback: ex.feedback,
                });
                let solved = matches!(history.last().map(|a| &a.outcome), Some(ExecOutcome::Solved { .. }));
                if solved || gateway_error.is_some() || refinements >= budget {
                    break;
                }
                refinements += 1;
            }
        }

        let final_outcome = history.last().expect("at least one attempt").outcome.clone();
        RunRecord {
            problem_id: bundle.id.clone(),
            variant: cfg.label.clone(),
            model: self.model_label.clone(),
            run_index,
            target: cfg.target,
            structured: cfg.structured,
            refinement: cfg.refinement,
            inline_data: matches!(data, SpecData::Inline),
            max_refinements: cfg.max_refinements,
            ground_truth: Some(bundle.ground_truth),
            structured_problem,
            structure_error,
            refinement_count: history.len() - 1,
            objective: final_outcome.objective(),
            final_outcome,
            spec_history: history,
            gateway_error,
            wall_time_ms: started.elapsed().as_millis() as u64,
            prompt_transcript: transcript.0,
        }
    }
}
