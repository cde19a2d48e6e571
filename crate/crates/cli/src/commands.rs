use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use optspec_core::ampl::{instantiate, parse_data, parse_model, DataSection, ObjectivePolicy};
use optspec_core::databind::{bind as bind_tables, emit_ampl_data, emit_generic_data, load_tables, BindingManifest};
use optspec_core::evalstats::{build_cells, compare, report as render_report, ComparisonConfig};
use optspec_core::llm::{
    generate_spec, structure_problem, Context, FewShotLibrary, GatewayError, GenerationRequest, LlmClient, LlmError,
    StructuredProblem,
};
use optspec_core::pipeline::{
    bench as run_bench, load_records, BenchError, BenchOptions, BundleError, OutcomeClass, ProblemBundle, RecordStore,
    Runner, StoreError, VariantConfig,
};
use optspec_core::{render_diagnostics, solve_milp, SolveOutcome};

use crate::config::Resolved;
use crate::{DataFormat, Failure, EXIT_COMPILE, EXIT_GATEWAY, EXIT_RUNTIME};

/// `%g` with six significant digits.
pub fn sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{}", if v == 0.0 { 0.0 } else { v });
    }
    let exp = v.abs().log10().floor() as i32;
    let trim = |s: String| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if !(-5..6).contains(&exp) {
        let s = format!("{v:.5e}");
        let (m, e) = s.split_once('e').unwrap_or((&s, "0"));
        return format!("{}e{e}", trim(m.to_string()));
    }
    let decimals = (5 - exp).max(0) as usize;
    let s = trim(format!("{v:.decimals$}"));
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    if !path.exists() {
        return Err(Failure::usage(format!("{} does not exist", path.display())));
    }
    std::fs::read_to_string(path).map_err(|e| Failure::io(format!("cannot read {}: {e}", path.display())))
}

fn gateway(e: GatewayError) -> Failure {
    Failure::new(EXIT_GATEWAY, format!("model gateway: {e}"))
}

fn bundle_failure(e: BundleError) -> Failure {
    match e {
        BundleError::Io { .. } => Failure::io(e.to_string()),
        other => Failure::data(other.to_string()),
    }
}

fn load_bundle(path: &Path) -> Result<ProblemBundle, Failure> {
    if !path.is_dir() {
        return Err(Failure::usage(format!("{} is not a bundle directory", path.display())));
    }
    ProblemBundle::load(path).map_err(bundle_failure)
}

fn client(cfg: &Resolved) -> Result<LlmClient, Failure> {
    let backend = cfg
        .backend
        .as_ref()
        .ok_or_else(|| Failure::usage("no model backend: pass --llm-backend or set default_backend in the config"))?;
    LlmClient::from_config(backend).map_err(gateway)
}

fn few_shots(cfg: &Resolved) -> Result<FewShotLibrary, Failure> {
    FewShotLibrary::load(&cfg.few_shots).map_err(|e| Failure::usage(format!("{e} (few_shots = {})", cfg.few_shots.display())))
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), Failure> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::io(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn structure(cfg: &Resolved, input: &Path) -> Result<u8, Failure> {
    let description = if input.is_dir() {
        load_bundle(input)?.description
    } else {
        read(input)?
    };
    let client = client(cfg)?;
    let shots = few_shots(cfg)?;
    match structure_problem(&client, &description, &shots.structure) {
        Ok(sp) => {
            print!("{sp}");
            Ok(0)
        }
        Err(LlmError::Gateway(e)) => Err(gateway(e)),
        Err(e) => Err(Failure::data(e.to_string())),
    }
}

pub fn bind(bundle: &Path, structure: Option<&Path>, format: DataFormat, check: bool, output: Option<&Path>) -> Result<u8, Failure> {
    let b = load_bundle(bundle)?;
    let manifest_path = b
        .manifest
        .clone()
        .ok_or_else(|| Failure::data(format!("{} has no binding.manifest", bundle.display())))?;
    let manifest = BindingManifest::load(&manifest_path).map_err(|e| Failure::data(e.to_string()))?;
    let tables = load_tables(&b.tables).map_err(|e| Failure::data(e.to_string()))?;
    let meta = match structure {
        Some(p) => {
            let sp = StructuredProblem::parse(&read(p)?).map_err(|e| Failure::data(e.to_string()))?;
            Some(sp.symbols().cloned().collect::<Vec<_>>())
        }
        None => None,
    };
    let bound = bind_tables(&manifest, meta.as_deref(), &tables).map_err(|e| Failure::data(e.to_string()))?;
    if check {
        let mut text = String::new();
        for (name, members) in &bound.data.sets {
            text.push_str(&format!("set {name}: {} members\n", members.len()));
        }
        for (name, value) in &bound.data.params {
            text.push_str(&format!("param {name}: {} values\n", value.entries().len()));
        }
        for (name, source) in &bound.provenance {
            text.push_str(&format!("{name} <- {source}\n"));
        }
        return emit(&text, output).map(|_| 0);
    }
    let doc = match format {
        DataFormat::Ampl => emit_ampl_data(&bound.data),
        DataFormat::Json => emit_generic_data(&bound.data),
    };
    emit(&doc, output).map(|_| 0)
}

pub fn generate(cfg: &Resolved, bundle: &Path, label: &str, output: Option<&Path>) -> Result<u8, Failure> {
    let variant = cfg.variant(label)?;
    let b = load_bundle(bundle)?;
    let (description, schema) = if variant.inline_data {
        let d = b
            .inline_description
            .clone()
            .ok_or_else(|| Failure::data("the bundle has no inline/description.md"))?;
        (d, None)
    } else {
        (b.description.clone(), Some(b.bind().map_err(bundle_failure)?.schema))
    };
    let client = client(cfg)?;
    let shots = few_shots(cfg)?;
    let mut context = Context::Raw(description.clone());
    if variant.structured {
        match structure_problem(&client, &description, &shots.structure) {
            Ok(sp) => context = Context::Structured(sp),
            Err(LlmError::Gateway(e)) => return Err(gateway(e)),
            Err(e) => eprintln!("warning: {e}; generating from the description"),
        }
    }
    let req = GenerationRequest {
        context: &context,
        target: variant.target,
        few_shots: shots.for_target(variant.target),
        data_schema: schema.as_deref(),
    };
    match generate_spec(&client, &req) {
        Ok(spec) => emit(&spec, output).map(|_| 0),
        Err(LlmError::Gateway(e)) => Err(gateway(e)),
        Err(LlmError::FewShots(m)) => Err(Failure::usage(m)),
        Err(e) => Err(Failure::data(e.to_string())),
    }
}

pub fn solve(cfg: &Resolved, model: &Path, data: Option<&Path>, objective: &str, json: bool) -> Result<u8, Failure> {
    let policy: ObjectivePolicy = objective.parse().map_err(Failure::usage)?;
    let model_text = read(model)?;
    let data_text = data.map(read).transpose()?;
    let compile = |e: optspec_core::CompileError| Failure::new(EXIT_COMPILE, format!("compile error: {e}"));
    let m = parse_model(&model_text).map_err(compile)?;
    let d = match &data_text {
        Some(t) => parse_data(t).map_err(compile)?,
        None => DataSection::default(),
    };
    let inst = instantiate(&m, &d, &policy).map_err(compile)?;
    let outcome = solve_milp(&inst, &cfg.solver);
    if json {
        println!("{}", serde_json::to_string_pretty(&outcome).expect("outcome serializes"));
    }
    match &outcome {
        SolveOutcome::Solved(s) => {
            if !json {
                println!("status: solved");
                println!("objective: {}", sig6(s.objective));
                for (name, v) in &s.assignment {
                    println!("{name} = {}", sig6(*v));
                }
            }
            Ok(0)
        }
        SolveOutcome::RuntimeError(e) => {
            if !json {
                println!("status: {}", e.kind);
                print!("{}", render_diagnostics(&outcome, &inst));
            }
            Ok(EXIT_RUNTIME)
        }
    }
}

fn runner(cfg: &Resolved) -> Result<Runner, Failure> {
    let client = client(cfg)?;
    let mut r = Runner::new(client, few_shots(cfg)?, cfg.scratch.clone());
    if let Some(label) = &cfg.model_label {
        r.model_label = label.clone();
    }
    r.runtime = cfg.runtime.clone();
    Ok(r)
}

fn store_failure(e: StoreError) -> Failure {
    match e {
        StoreError::Io { .. } => Failure::io(e.to_string()),
        StoreError::Corrupt { .. } => Failure::data(e.to_string()),
    }
}

pub fn run(cfg: &Resolved, bundle: &Path, label: &str, run_index: usize, records: Option<PathBuf>) -> Result<u8, Failure> {
    let variant = cfg.variant(label)?;
    let b = load_bundle(bundle)?;
    let data = if variant.inline_data {
        None
    } else {
        Some(b.bind().map_err(bundle_failure)?)
    };
    let runner = runner(cfg)?;
    let store = RecordStore::open(&records.unwrap_or_else(|| cfg.records.clone())).map_err(store_failure)?;
    let rec = runner.run_cell(&b, data.as_ref(), &variant, run_index).map_err(bundle_failure)?;
    let path = store.put(&rec).map_err(store_failure)?;
    let objective = rec.objective.map(|o| format!(" objective {}", sig6(o))).unwrap_or_default();
    println!(
        "{} {} run{}: {}{objective} after {} refinement(s)",
        rec.problem_id,
        rec.variant,
        rec.run_index,
        rec.final_outcome.kind(),
        rec.refinement_count
    );
    println!("record: {}", path.display());
    if let Some(e) = &rec.gateway_error {
        eprintln!("error: model gateway: {e}");
        return Ok(EXIT_GATEWAY);
    }
    Ok(match rec.class() {
        OutcomeClass::Solved => 0,
        OutcomeClass::CompileError => EXIT_COMPILE,
        OutcomeClass::RuntimeError => EXIT_RUNTIME,
    })
}

/// Bench matrix file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixFile {
    #[serde(default)]
    labels: Vec<String>,
    runs: Option<usize>,
    #[serde(default)]
    variant: Vec<VariantConfig>,
}

pub fn bench(
    cfg: &Resolved,
    dataset: &Path,
    matrix: Option<&Path>,
    runs: Option<usize>,
    records: Option<PathBuf>,
    stop_after: Option<usize>,
) -> Result<u8, Failure> {
    if !dataset.is_dir() {
        return Err(Failure::usage(format!("{} is not a directory", dataset.display())));
    }
    let file = match matrix {
        Some(p) => toml::from_str::<MatrixFile>(&read(p)?).map_err(|e| Failure::usage(format!("invalid matrix {}: {e}", p.display())))?,
        None => MatrixFile::default(),
    };
    let mut variants: Vec<VariantConfig> = if file.labels.is_empty() && file.variant.is_empty() {
        VariantConfig::matrix()
            .into_iter()
            .map(|v| cfg.variant(&v.label))
            .collect::<Result<_, _>>()?
    } else {
        let mut out = Vec::new();
        for l in &file.labels {
            out.push(match file.variant.iter().find(|v| &v.label == l) {
                Some(v) => v.clone(),
                None => cfg.variant(l)?,
            });
        }
        out.extend(file.variant.iter().filter(|v| !file.labels.contains(&v.label)).cloned());
        out
    };
    if let Some(n) = runs.or(file.runs) {
        variants.iter_mut().for_each(|v| v.runs = n);
    }
    let bundles = ProblemBundle::load_all(dataset).map_err(bundle_failure)?;
    if bundles.is_empty() {
        return Err(Failure::data(format!("no bundles under {}", dataset.display())));
    }
    let runner = runner(cfg)?;
    let store = RecordStore::open(&records.unwrap_or_else(|| cfg.records.clone())).map_err(store_failure)?;
    let summary = run_bench(
        &runner,
        &bundles,
        &variants,
        &store,
        BenchOptions {
            jobs: cfg.jobs,
            stop_after,
        },
    )
    .map_err(|e| match e {
        BenchError::Matrix(m) => Failure::usage(m),
        BenchError::Bundle(b) => bundle_failure(b),
        BenchError::Store(s) => store_failure(s),
    })?;
    let count = |c: OutcomeClass| summary.records.iter().filter(|r| r.class() == c).count();
    println!(
        "{} records ({} run now, {} already stored, {} pending): {} solved, {} compile errors, {} runtime errors",
        summary.records.len(),
        summary.executed,
        summary.skipped,
        summary.pending,
        count(OutcomeClass::Solved),
        count(OutcomeClass::CompileError),
        count(OutcomeClass::RuntimeError)
    );
    println!("store: {}", store.root().display());
    Ok(0)
}

pub fn report(records: &Path, comparisons: Option<&Path>, out: Option<PathBuf>) -> Result<u8, Failure> {
    if !records.is_dir() {
        return Err(Failure::usage(format!("{} is not a directory", records.display())));
    }
    let dir = if records.join("records").is_dir() {
        records.join("records")
    } else {
        records.to_path_buf()
    };
    let recs = load_records(&dir).map_err(store_failure)?;
    if recs.is_empty() {
        return Err(Failure::data(format!("no records in {}", dir.display())));
    }
    let config = match comparisons {
        Some(p) => ComparisonConfig::from_toml(&read(p)?).map_err(|e| Failure::data(format!("invalid comparisons {}: {e}", p.display())))?,
        None => ComparisonConfig::default(),
    };
    let cells = build_cells(&recs, &BTreeMap::new()).map_err(|e| Failure::data(e.to_string()))?;
    let tests = compare(&cells, &config);
    let doc = render_report(&cells, &tests);
    let out = out.unwrap_or_else(|| records.join("report"));
    std::fs::create_dir_all(&out).map_err(|e| Failure::io(format!("cannot create {}: {e}", out.display())))?;
    for (name, text) in [
        ("report.md", &doc.markdown),
        ("cells.csv", &doc.cells_csv),
        ("comparisons.csv", &doc.comparisons_csv),
    ] {
        let p = out.join(name);
        std::fs::write(&p, text).map_err(|e| Failure::io(format!("cannot write {}: {e}", p.display())))?;
    }
    println!("{} records in {} cells; report written to {}", recs.len(), cells.len(), out.display());
    Ok(0)
}
