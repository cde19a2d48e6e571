use std::path::Path;

use indexmap::IndexMap;
use optspec_core::ampl::{parse_data, parse_model, validate, DataSection, ParamValue, Table2};
use optspec_core::databind::{bind, emit_ampl_data, emit_generic_data, load_tables, read_generic_data, BindingManifest};
use optspec_core::llm::FewShotLibrary;
use optspec_core::pipeline::ProblemBundle;
use proptest::prelude::*;

fn root() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures"))
}

#[test]
fn production_tables_bind_to_the_reference_data() {
    let expected = parse_data(&std::fs::read_to_string(root().join("production/production.dat")).unwrap()).unwrap();
    let bundle = ProblemBundle::load(&root().join("bundles/production")).unwrap();
    let bound = bundle.bind().unwrap();
    assert_eq!(bound.bound.data, expected);
    assert_eq!(parse_data(&emit_ampl_data(&bound.bound.data)).unwrap(), expected);
    assert!(bound.schema.contains("param unit {RESOURCES, PRODUCTS};"), "{}", bound.schema);
}

#[test]
fn bound_data_satisfies_the_reference_model() {
    let dir = root().join("bundles/production");
    let manifest = BindingManifest::load(&dir.join("binding.manifest")).unwrap();
    let paths: Vec<_> = manifest.table_names().iter().map(|t| dir.join("tables").join(t)).collect();
    let tables = load_tables(&paths).unwrap();
    let bound = bind(&manifest, None, &tables).unwrap();
    let model = parse_model(&std::fs::read_to_string(root().join("production/production.mod")).unwrap()).unwrap();
    assert!(validate(&model, &bound.data).is_ok());
}

#[test]
fn every_bundle_binds() {
    for b in ProblemBundle::load_all(&root().join("bundles")).unwrap() {
        let d = b.bind().unwrap();
        let json = emit_generic_data(&d.bound.data);
        assert_eq!(read_generic_data(&json).unwrap(), d.bound.data, "{}", b.id);
    }
}

#[test]
fn few_shot_models_parse() {
    let lib = FewShotLibrary::load(&root().join("fewshot")).unwrap();
    assert!(!lib.ampl.examples.is_empty());
    for ex in &lib.ampl.examples {
        parse_model(&ex.output).unwrap_or_else(|e| panic!("{e}\n{}", ex.output));
    }
}

fn member() -> impl Strategy<Value = String> {
    prop_oneof![
        "[A-Za-z][A-Za-z0-9_]{0,6}",
        "[0-9]{1,3}",
        "[a-z]{1,3} [a-z]{1,3}",
        "[a-z]{1,3}'[a-z]{1,2}",
    ]
}

fn value() -> impl Strategy<Value = f64> {
    prop_oneof![(-1000i32..1000).prop_map(f64::from), -1e6f64..1e6, Just(1e-7), Just(0.0)]
}

fn section() -> impl Strategy<Value = DataSection> {
    (
        prop::collection::vec(member(), 0..5),
        prop::collection::vec(member(), 1..4),
        prop::collection::vec(value(), 12),
        value(),
    )
        .prop_map(|(rows, cols, vals, scalar)| {
            let dedup = |v: Vec<String>| {
                let mut out: Vec<String> = Vec::new();
                for m in v {
                    if !out.contains(&m) {
                        out.push(m);
                    }
                }
                out
            };
            let rows = dedup(rows);
            let cols = dedup(cols);
            let mut d = DataSection::default();
            d.sets.insert("ROWS".into(), rows.clone());
            d.sets.insert("COLS".into(), cols.clone());
            d.params.insert("s".into(), ParamValue::Scalar(scalar));
            let one: IndexMap<String, f64> = cols.iter().cloned().zip(vals.iter().copied()).collect();
            d.params.insert("w".into(), ParamValue::OneD(one));
            if !rows.is_empty() {
                let values = rows
                    .iter()
                    .enumerate()
                    .map(|(i, _)| (0..cols.len()).map(|j| vals[(i * 3 + j) % 12]).collect())
                    .collect();
                d.params.insert("a".into(), ParamValue::TwoD(Table2 { rows, cols, values }));
            }
            d
        })
}

proptest! {
    #[test]
    fn ampl_data_round_trips(d in section()) {
        let text = emit_ampl_data(&d);
        let back = parse_data(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, d);
    }

    #[test]
    fn generic_data_round_trips(d in section()) {
        prop_assert_eq!(read_generic_data(&emit_generic_data(&d)).unwrap(), d);
    }
}
