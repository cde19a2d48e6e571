use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::ampl::{instantiate, parse_data, parse_model, CompileError, DataSection};
use crate::databind::{emit_ampl_data, emit_generic_data, BoundData};
use crate::llm::{Target, DATA_DELIMITER};
use crate::solver::{render_diagnostics, solve_milp, SolveErrorKind, SolveOutcome};

use super::record::ExecOutcome;
use super::variant::VariantConfig;

/// How external-runtime specs are run: `command... SPEC DATA` in the
/// attempt directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExternalRuntime {
    pub command: Vec<String>,
    pub timeout_secs: f64,
    /// Substrings of stderr that mark a failed run as a compile error.
    pub compile_error_markers: Vec<String>,
}

impl Default for ExternalRuntime {
    fn default() -> Self {
        ExternalRuntime {
            command: vec!["python3".into()],
            timeout_secs: 60.0,
            compile_error_markers: vec!["SyntaxError".into(), "IndentationError".into()],
        }
    }
}

impl ExternalRuntime {
    pub fn validate(&self) -> Result<(), String> {
        if self.command.is_empty() || self.command[0].trim().is_empty() {
            return Err("external runtime command is empty".into());
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err("external runtime timeout must be a positive number of seconds".into());
        }
        Ok(())
    }
}

/// Where a spec's values come from.
#[derive(Debug, Clone, Copy)]
pub enum SpecData<'a> {
    Bound(&'a BoundData),
    /// Values are part of the spec text.
    Inline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub outcome: ExecOutcome,
    /// Diagnostics for the next refinement prompt; empty when solved.
    pub feedback: String,
}

fn compile_error(e: &CompileError) -> Execution {
    Execution {
        outcome: ExecOutcome::CompileError {
            kind: e.kind.as_str().into(),
            message: e.to_string(),
        },
        feedback: format!("ERROR {}\n{e}\n", e.kind),
    }
}

fn runtime_error(kind: SolveErrorKind, message: String, detail: &str) -> Execution {
    let mut feedback = format!("ERROR {kind}\n{message}\n");
    if !detail.trim().is_empty() {
        feedback.push_str(detail.trim_end());
        feedback.push('\n');
    }
    Execution {
        outcome: ExecOutcome::RuntimeError { kind, message },
        feedback,
    }
}

/// Splits a self-contained spec at the line holding only `data;`.
pub fn split_inline(spec: &str) -> (&str, Option<&str>) {
    let mut offset = 0;
    for line in spec.split_inclusive('\n') {
        if line.trim() == DATA_DELIMITER {
            return (&spec[..offset], Some(&spec[offset + line.len()..]));
        }
        offset += line.len();
    }
    (spec, None)
}

fn write(path: &Path, text: &str) -> Result<(), Execution> {
    std::fs::write(path, text).map_err(|e| {
        runtime_error(
            SolveErrorKind::UnexpectedTermination,
            format!("cannot write {}: {e}", path.display()),
            "",
        )
    })
}

/// Runs one spec. Files are written below `dir`, which is created fresh.
pub fn execute_spec(spec: &str, data: SpecData, cfg: &VariantConfig, runtime: &ExternalRuntime, dir: &Path) -> Execution {
    if let Err(e) = fresh_dir(dir) {
        return runtime_error(SolveErrorKind::UnexpectedTermination, e, "");
    }
    let result = match cfg.target {
        Target::Ampl => execute_ampl(spec, data, cfg, dir),
        Target::ExternalRuntime => execute_external(spec, data, runtime, dir),
    };
    result.unwrap_or_else(|e| e)
}

fn fresh_dir(dir: &Path) -> Result<(), String> {
    if dir.exists() {
        std::fs::remove_dir_all(dir).map_err(|e| format!("cannot clear {}: {e}", dir.display()))?;
    }
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))
}

fn execute_ampl(spec: &str, data: SpecData, cfg: &VariantConfig, dir: &Path) -> Result<Execution, Execution> {
    let (model_text, data_section) = match data {
        SpecData::Bound(b) => {
            write(&dir.join("model.mod"), spec)?;
            write(&dir.join("data.dat"), &emit_ampl_data(&b.data))?;
            (spec, b.data.clone())
        }
        SpecData::Inline => {
            write(&dir.join("spec.txt"), spec)?;
            let (model, data_text) = split_inline(spec);
            let section = match data_text {
                Some(t) => parse_data(t).map_err(|e| compile_error(&e))?,
                None => DataSection::default(),
            };
            (model, section)
        }
    };
    let model = parse_model(model_text).map_err(|e| compile_error(&e))?;
    let instance = instantiate(&model, &data_section, &cfg.objective_policy).map_err(|e| compile_error(&e))?;
    let outcome = solve_milp(&instance, &cfg.solver_params);
    Ok(match &outcome {
        SolveOutcome::Solved(s) => Execution {
            outcome: ExecOutcome::Solved {
                objective: s.objective,
                assignment: s.assignment.clone(),
            },
            feedback: String::new(),
        },
        SolveOutcome::RuntimeError(e) => Execution {
            outcome: ExecOutcome::RuntimeError {
                kind: e.kind,
                message: e.message.clone(),
            },
            feedback: render_diagnostics(&outcome, &instance),
        },
    })
}

fn tail(text: &str, lines: usize) -> String {
    let all: Vec<&str> = text.lines().collect();
    all[all.len().saturating_sub(lines)..].join("\n")
}

fn absolute(p: PathBuf) -> PathBuf {
    std::path::absolute(&p).unwrap_or(p)
}

fn execute_external(spec: &str, data: SpecData, runtime: &ExternalRuntime, dir: &Path) -> Result<Execution, Execution> {
    let unexpected = |m: String, detail: &str| runtime_error(SolveErrorKind::UnexpectedTermination, m, detail);
    let spec_path = absolute(dir.join("spec.txt"));
    let data_path = absolute(dir.join("data.json"));
    write(&spec_path, spec)?;
    write(
        &data_path,
        &match data {
            SpecData::Bound(b) => emit_generic_data(&b.data),
            SpecData::Inline => "{}\n".to_string(),
        },
    )?;
    let open = |name: &str| File::create(dir.join(name)).map_err(|e| unexpected(format!("cannot create {name}: {e}"), ""));
    let (stdout, stderr) = (open("stdout.txt")?, open("stderr.txt")?);
    let mut child = Command::new(&runtime.command[0])
        .args(&runtime.command[1..])
        .arg(&spec_path)
        .arg(&data_path)
        .current_dir(dir)
        .stdin(Stdio::null())
        .stdout(stdout)
        .stderr(stderr)
        .spawn()
        .map_err(|e| unexpected(format!("cannot start '{}': {e}", runtime.command[0]), ""))?;

    let deadline = Instant::now() + Duration::from_secs_f64(runtime.timeout_secs);
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(unexpected(format!("no result within {} s; the run was stopped", runtime.timeout_secs), ""));
            }
            Ok(None) => std::thread::sleep(Duration::from_millis(5)),
            Err(e) => return Err(unexpected(format!("lost track of the runtime process: {e}"), "")),
        }
    };
    let err_text = std::fs::read_to_string(dir.join("stderr.txt")).unwrap_or_default();
    let err_tail = tail(&err_text, 20);

    if !status.success() {
        if runtime.compile_error_markers.iter().any(|m| err_text.contains(m.as_str())) {
            return Ok(Execution {
                outcome: ExecOutcome::CompileError {
                    kind: "external".into(),
                    message: format!("the program was rejected before running ({status})"),
                },
                feedback: format!("ERROR external\nthe program was rejected before running\n{err_tail}\n"),
            });
        }
        return Err(unexpected(format!("the runtime exited with {status}"), &err_tail));
    }

    let result = std::fs::read_to_string(dir.join("result"))
        .map_err(|_| unexpected("the runtime exited without writing a result file".into(), &err_tail))?;
    let field = |key: &str| {
        result.lines().find_map(|l| {
            let (k, v) = l.split_once(':')?;
            (k.trim() == key).then(|| v.trim().to_string())
        })
    };
    let Some(status_line) = field("status") else {
        return Err(unexpected("the result file has no status line".into(), &err_tail));
    };
    match status_line.as_str() {
        "solved" => {
            let objective = field("objective")
                .and_then(|o| o.parse::<f64>().ok())
                .filter(|o| o.is_finite())
                .ok_or_else(|| unexpected("status is solved but no finite objective is given".into(), &err_tail))?;
            Ok(Execution {
                outcome: ExecOutcome::Solved {
                    objective,
                    assignment: Default::default(),
                },
                feedback: String::new(),
            })
        }
        "infeasible" => Ok(runtime_error(
            SolveErrorKind::Infeasible,
            "the program reports the problem as infeasible".into(),
            &err_tail,
        )),
        "unbounded" => Ok(runtime_error(
            SolveErrorKind::Unbounded,
            "the program reports the problem as unbounded".into(),
            &err_tail,
        )),
        "compile-error" => Ok(Execution {
            outcome: ExecOutcome::CompileError {
                kind: "external".into(),
                message: "the runtime rejected the program".into(),
            },
            feedback: format!("ERROR external\nthe runtime rejected the program\n{err_tail}\n"),
        }),
        "error" => Err(unexpected("the program reports an error".into(), &err_tail)),
        other => Err(unexpected(format!("unknown status '{other}' in the result file"), &err_tail)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inline_split() {
        assert_eq!(split_inline("var x;\n  data;  \nparam a := 1;\n"), ("var x;\n", Some("param a := 1;\n")));
        assert_eq!(split_inline("var x;\n"), ("var x;\n", None));
        assert_eq!(split_inline("var x;\ndata;"), ("var x;\n", Some("")));
    }

    #[test]
    fn garbage_is_a_syntax_error() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = VariantConfig::preset("Ampl1").unwrap();
        let ex = execute_spec("garbage", SpecData::Inline, &cfg, &ExternalRuntime::default(), tmp.path());
        assert!(matches!(&ex.outcome, ExecOutcome::CompileError { kind, .. } if kind == "syntax"));
        assert!(ex.feedback.starts_with("ERROR syntax\n"));
    }

    #[test]
    fn failing_runtime_is_unexpected_termination() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = VariantConfig::preset("Python1").unwrap();
        let rt = ExternalRuntime {
            command: vec!["false".into()],
            ..Default::default()
        };
        let ex = execute_spec("print(1)", SpecData::Inline, &cfg, &rt, tmp.path());
        assert_eq!(
            ex.outcome.kind(),
            "unexpected-termination",
            "{:?}",
            ex.outcome
        );
    }
}
