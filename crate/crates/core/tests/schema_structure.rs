//! Validates every JSON document the crate emits against the schema files
//! shipped under `docs/schemas/`.
//!
//! The validator below implements exactly the structural subset of JSON
//! Schema those files use: type unions, closed objects with required keys,
//! per-element array items, enums, and numeric bounds. Instances are produced
//! by the real writers (or by serializing the real report types), so a field
//! rename or a type change in the code fails here before it can silently
//! desynchronize the documented formats.

use std::path::{Path, PathBuf};

use jkolab::harnack::{
    check_chain_consistency, check_diff_harnack, check_harnack_pair, check_recursion,
    check_step_harnack, scalar_threshold_equivalence, HarnackSamples, NodeSampling,
};
use jkolab::io::{export_trajectory, write_density, write_json, write_plan};
use jkolab::jko::{run_trajectory, InnerSettings, JkoTrajectory};
use jkolab::torus::{DensityField, TorusGrid};
use jkolab::transport::sinkhorn;
use once_cell::sync::Lazy;
use serde_json::Value;
use tempfile::tempdir;

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/schemas")
}

fn load_schema(name: &str) -> Value {
    let path = schema_dir().join(name);
    let bytes = std::fs::read(&path)
        .unwrap_or_else(|e| panic!("cannot read schema {}: {e}", path.display()));
    serde_json::from_slice(&bytes)
        .unwrap_or_else(|e| panic!("schema {} is not valid JSON: {e}", path.display()))
}

fn type_matches(name: &str, instance: &Value) -> bool {
    match name {
        "null" => instance.is_null(),
        "boolean" => instance.is_boolean(),
        "object" => instance.is_object(),
        "array" => instance.is_array(),
        "string" => instance.is_string(),
        "integer" => instance.as_u64().is_some() || instance.as_i64().is_some(),
        "number" => instance.is_number(),
        other => panic!("schema names unsupported type {other:?}"),
    }
}

/// Recursively checks `instance` against `schema`, appending one message per
/// violation. Annotation keys ($schema, $id, title, description) are ignored.
fn validate(schema: &Value, instance: &Value, path: &str, errors: &mut Vec<String>) {
    if let Some(ty) = schema.get("type") {
        let allowed: Vec<&str> = match ty {
            Value::String(s) => vec![s.as_str()],
            Value::Array(names) => names
                .iter()
                .map(|n| n.as_str().expect("type union entries must be strings"))
                .collect(),
            other => panic!("malformed type clause {other}"),
        };
        if !allowed.iter().any(|name| type_matches(name, instance)) {
            errors.push(format!("{path}: expected type {allowed:?}, got {instance}"));
            return;
        }
    }

    if let Some(options) = schema.get("enum") {
        let options = options.as_array().expect("enum clause must be an array");
        if !options.contains(instance) {
            errors.push(format!("{path}: {instance} is not one of {options:?}"));
        }
    }

    if let Some(x) = instance.as_f64() {
        if let Some(lo) = schema.get("minimum").and_then(Value::as_f64) {
            if x < lo {
                errors.push(format!("{path}: {x} is below the minimum {lo}"));
            }
        }
        if let Some(lo) = schema.get("exclusiveMinimum").and_then(Value::as_f64) {
            if x <= lo {
                errors.push(format!("{path}: {x} must exceed {lo}"));
            }
        }
        if let Some(hi) = schema.get("maximum").and_then(Value::as_f64) {
            if x > hi {
                errors.push(format!("{path}: {x} is above the maximum {hi}"));
            }
        }
        if let Some(hi) = schema.get("exclusiveMaximum").and_then(Value::as_f64) {
            if x >= hi {
                errors.push(format!("{path}: {x} must stay below {hi}"));
            }
        }
    }

    if let Some(object) = instance.as_object() {
        if let Some(props) = schema.get("properties") {
            let props = props.as_object().expect("properties must be an object");
            let closed = schema.get("additionalProperties") == Some(&Value::Bool(false));
            for (key, value) in object {
                match props.get(key) {
                    Some(sub) => validate(sub, value, &format!("{path}/{key}"), errors),
                    None if closed => {
                        errors.push(format!("{path}: unexpected key {key:?}"));
                    }
                    None => {}
                }
            }
        }
        if let Some(required) = schema.get("required") {
            for name in required.as_array().expect("required must be an array") {
                let name = name.as_str().expect("required entries must be strings");
                if !object.contains_key(name) {
                    errors.push(format!("{path}: missing required key {name:?}"));
                }
            }
        }
    }

    if let Some(elements) = instance.as_array() {
        if let Some(items) = schema.get("items") {
            for (i, element) in elements.iter().enumerate() {
                validate(items, element, &format!("{path}/{i}"), errors);
            }
        }
    }
}

fn assert_valid(schema_name: &str, instance: &Value) {
    let schema = load_schema(schema_name);
    let mut errors = Vec::new();
    validate(&schema, instance, "#", &mut errors);
    assert!(
        errors.is_empty(),
        "instance violates {schema_name}:\n{}",
        errors.join("\n")
    );
}

fn read_value(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

/// A short proximal run shared by the report tests; only the shape of the
/// emitted documents matters here, not the dynamics.
static SHORT_RUN: Lazy<JkoTrajectory> = Lazy::new(|| {
    let grid = TorusGrid::new(1, 32).unwrap();
    let initial = DensityField::cosine(grid, 0.5).unwrap();
    run_trajectory(&initial, 0.01, 4, &InnerSettings::default()).unwrap()
});

#[test]
fn field_headers_match_their_schema() {
    let dir = tempdir().unwrap();
    let grid = TorusGrid::new(2, 8).unwrap();
    let base = dir.path().join("rho");
    write_density(&base, &DensityField::uniform(grid)).unwrap();
    assert_valid(
        "field_header.schema.json",
        &read_value(&base.with_extension("json")),
    );
}

#[test]
fn plan_headers_match_their_schema() {
    let dir = tempdir().unwrap();
    let grid = TorusGrid::new(1, 8).unwrap();
    let mu = DensityField::cosine(grid, 0.3).unwrap();
    let nu = DensityField::uniform(grid);
    let plan = sinkhorn(&mu, &nu, &[1e-1, 1e-2], 20_000, 1e-9).unwrap().plan;
    let base = dir.path().join("plan");
    write_plan(&base, &plan).unwrap();
    assert_valid(
        "plan_header.schema.json",
        &read_value(&base.with_extension("json")),
    );
}

#[test]
fn trajectory_manifests_match_their_schema() {
    let dir = tempdir().unwrap();
    export_trajectory(dir.path(), &SHORT_RUN).unwrap();
    assert_valid(
        "trajectory_manifest.schema.json",
        &read_value(&dir.path().join("manifest.json")),
    );
}

#[test]
fn hessian_bound_reports_match_their_schema() {
    let report = check_diff_harnack(&SHORT_RUN, 1.0, 1e-9, 1e-3).unwrap();
    // One report goes through the actual file writer to cover the bytes on
    // disk, not just the in-memory serialization.
    let dir = tempdir().unwrap();
    let path = dir.path().join("diff.json");
    write_json(&path, &report).unwrap();
    assert_valid("diff_harnack_report.schema.json", &read_value(&path));
}

#[test]
fn recursion_reports_match_their_schema() {
    let report = check_recursion(&SHORT_RUN, 1e-6).unwrap();
    assert_valid(
        "recursion_report.schema.json",
        &serde_json::to_value(&report).unwrap(),
    );
}

#[test]
fn threshold_tables_match_their_schema() {
    let table = scalar_threshold_equivalence(0.6, 10).unwrap();
    assert_valid(
        "threshold_table.schema.json",
        &serde_json::to_value(&table).unwrap(),
    );
}

#[test]
fn step_reports_match_their_schema() {
    let report = check_step_harnack(
        SHORT_RUN.density(0).unwrap(),
        SHORT_RUN.density(1).unwrap(),
        1,
        SHORT_RUN.tau(),
        1.0,
        NodeSampling::Full,
        1e-3,
    )
    .unwrap();
    assert_valid(
        "step_harnack_report.schema.json",
        &serde_json::to_value(&report).unwrap(),
    );
}

#[test]
fn two_time_reports_match_their_schema() {
    let samples = HarnackSamples {
        nodes: NodeSampling::Strided { per_dim: 8 },
        ..HarnackSamples::default()
    };
    let report = check_harnack_pair(&SHORT_RUN, &samples).unwrap();
    assert_valid(
        "harnack_report.schema.json",
        &serde_json::to_value(&report).unwrap(),
    );
}

#[test]
fn chain_rows_match_their_schema() {
    let rows = check_chain_consistency(
        &SHORT_RUN,
        1.0,
        &[1],
        NodeSampling::Strided { per_dim: 8 },
        1e-3,
    )
    .unwrap();
    assert_valid(
        "chain_rows.schema.json",
        &serde_json::to_value(&rows).unwrap(),
    );
}

#[test]
fn validator_rejects_shape_violations() {
    let schema = load_schema("field_header.schema.json");
    let mut errors = Vec::new();
    validate(
        &schema,
        &serde_json::json!({"dim": 1, "M": 16, "kind": "density", "extra": 0}),
        "#",
        &mut errors,
    );
    assert!(errors.iter().any(|e| e.contains("unexpected key")));

    errors.clear();
    validate(
        &schema,
        &serde_json::json!({"dim": 3, "M": 16, "kind": "velocity"}),
        "#",
        &mut errors,
    );
    assert_eq!(errors.len(), 2, "{errors:?}");

    errors.clear();
    validate(&schema, &serde_json::json!({"dim": 1}), "#", &mut errors);
    assert!(errors.iter().any(|e| e.contains("missing required key")));
}
