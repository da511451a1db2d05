//! End-to-end tests of the `gdof` binary: exit codes, config precedence,
//! golden headers, schema conformance, and byte-level reproducibility.

use std::path::Path;
use std::process::{Command, Output};

fn gdof(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gdof"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr_str(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = reader
        .headers()
        .expect("csv header")
        .iter()
        .map(str::to_string)
        .collect();
    let rows = reader
        .records()
        .map(|r| r.expect("csv row").iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}

fn field<'a>(header: &[String], row: &'a [String], name: &str) -> &'a str {
    let idx = header.iter().position(|h| h == name).expect("column exists");
    &row[idx]
}

#[test]
fn curve_defaults_to_33_point_grid() {
    let out = gdof(&["curve"]);
    assert!(out.status.success());
    let (header, rows) = csv_rows(&stdout_str(&out));
    assert_eq!(header, ["tool_version", "alpha", "regime", "users", "d_theory"]);
    assert_eq!(rows.len(), 33);
    assert_eq!(field(&header, &rows[0], "alpha"), "0");
    assert_eq!(field(&header, &rows[0], "d_theory"), "1");
    assert_eq!(field(&header, &rows[32], "alpha"), "3");
    // the 3/32 step never lands on alpha = 1, so no alpha-one row
    assert!(rows.iter().all(|r| field(&header, r, "regime") != "alpha-one"));
}

#[test]
fn golden_headers() {
    let sim = gdof(&["simulate", "--users", "2", "--base", "12", "--levels", "1",
                     "--alpha", "2", "--trials", "10"]);
    assert!(sim.status.success());
    let (header, _) = csv_rows(&stdout_str(&sim));
    assert_eq!(
        header,
        [
            "tool_version", "alpha", "regime", "users", "base", "levels", "trials",
            "seed", "record", "level", "level_mismatch_rate", "user",
            "user_message_error_rate", "d_theory", "d_empirical_formula",
            "d_empirical_measured", "max_level_error", "rate_formula_qits",
            "rate_measured_qits", "out_of_alphabet_rate"
        ]
    );

    let ver = gdof(&["verify", "--users", "2", "--base", "12", "--levels", "1", "--alpha", "2"]);
    assert!(ver.status.success());
    let (header, _) = csv_rows(&stdout_str(&ver));
    assert_eq!(
        header,
        [
            "tool_version", "alpha", "regime", "users", "base", "levels", "seed",
            "cap", "record", "mode", "tuples_checked", "failures", "passed", "user",
            "expected", "decoded", "unresolved", "out_of_alphabet", "messages",
            "transmitted", "composite", "reduced"
        ]
    );

    let sweep = gdof(&["sweep", "--alpha-grid", "0:0:1", "--trials", "10"]);
    assert!(sweep.status.success());
    let (header, _) = csv_rows(&stdout_str(&sweep));
    assert_eq!(
        header,
        [
            "tool_version", "alpha", "regime", "users", "base", "levels", "trials",
            "d_theory", "d_empirical", "gap", "max_level_error", "seed"
        ]
    );
}

#[test]
fn configuration_errors_exit_2() {
    // simulate and verify need a single alpha
    assert_eq!(gdof(&["simulate"]).status.code(), Some(2));
    assert_eq!(
        gdof(&["verify", "--alpha", "3/2", "--alpha-grid", "0:1:1"]).status.code(),
        Some(2)
    );
    // malformed grid
    assert_eq!(gdof(&["curve", "--alpha-grid", "0:1"]).status.code(), Some(2));
    assert_eq!(gdof(&["curve", "--alpha-grid", "0:1:0"]).status.code(), Some(2));
    // the alpha = 1 singularity has no scheme
    let one = gdof(&["simulate", "--alpha", "1", "--trials", "10"]);
    assert_eq!(one.status.code(), Some(2));
    // degenerate construction: no information level fits at M = 1
    let tiny = gdof(&["verify", "--users", "3", "--base", "10", "--levels", "1",
                      "--alpha", "5/2"]);
    assert_eq!(tiny.status.code(), Some(2));
    assert!(stderr_str(&tiny).contains("no information levels"));
}

#[test]
fn config_file_below_flags_above_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "users=2\ntrials=7\n").unwrap();
    let out = gdof(&["sweep", "--alpha-grid", "0:0:1",
                     "--config", conf.to_str().unwrap(), "--users", "4"]);
    assert!(out.status.success());
    let (header, rows) = csv_rows(&stdout_str(&out));
    assert_eq!(field(&header, &rows[0], "users"), "4"); // flag wins
    assert_eq!(field(&header, &rows[0], "trials"), "7"); // file wins
    assert_eq!(field(&header, &rows[0], "base"), "64"); // default

    std::fs::write(&conf, "frobnicate=1\n").unwrap();
    let bad = gdof(&["curve", "--config", conf.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr_str(&bad).contains("frobnicate"));
}

#[test]
fn out_file_matches_stdout_and_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sim.csv");
    let args = ["simulate", "--users", "3", "--base", "10", "--levels", "2",
                "--alpha", "5/2", "--trials", "300", "--seed", "11"];
    let streamed = gdof(&args);
    assert!(streamed.status.success());
    let mut with_out: Vec<&str> = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    assert!(gdof(&with_out).status.success());
    let first = std::fs::read(&path).unwrap();
    assert_eq!(first, streamed.stdout);
    assert!(gdof(&with_out).status.success());
    assert_eq!(std::fs::read(&path).unwrap(), first);
}

#[test]
fn zero_noise_run_is_error_free() {
    let out = gdof(&["simulate", "--users", "3", "--base", "10", "--levels", "2",
                     "--alpha", "5/2", "--trials", "200", "--zero-noise"]);
    assert!(out.status.success());
    let (header, rows) = csv_rows(&stdout_str(&out));
    for row in &rows {
        match field(&header, row, "record") {
            "summary" => {
                assert_eq!(field(&header, row, "max_level_error"), "0");
                assert_eq!(field(&header, row, "out_of_alphabet_rate"), "0");
                assert_eq!(
                    field(&header, row, "d_empirical_formula"),
                    field(&header, row, "d_empirical_measured"),
                );
            }
            "level" => assert_eq!(field(&header, row, "level_mismatch_rate"), "0"),
            "user" => assert_eq!(field(&header, row, "user_message_error_rate"), "0"),
            other => panic!("unexpected record kind {other}"),
        }
    }
}

#[test]
fn verify_summary_row_reports_full_enumeration() {
    let out = gdof(&["verify", "--users", "3", "--base", "10", "--levels", "2",
                     "--alpha", "5/2"]);
    assert!(out.status.success());
    let (header, rows) = csv_rows(&stdout_str(&out));
    assert_eq!(rows.len(), 1); // no counterexamples
    let row = &rows[0];
    assert_eq!(field(&header, row, "record"), "summary");
    assert_eq!(field(&header, row, "mode"), "full");
    // one info level, digits {1,2,3}, three users: 3^3 joint tuples
    assert_eq!(field(&header, row, "tuples_checked"), "27");
    assert_eq!(field(&header, row, "failures"), "0");
    assert_eq!(field(&header, row, "passed"), "true");
}

// ---- JSON output against the published schemas ----

fn schema_type_ok(value: &serde_json::Value, ty: &str) -> bool {
    match ty {
        "string" => value.is_string(),
        "integer" => value.as_f64().is_some_and(|x| x.fract() == 0.0),
        "number" => value.is_number(),
        "boolean" => value.is_boolean(),
        "null" => value.is_null(),
        other => panic!("unsupported schema type {other}"),
    }
}

/// Minimal validator for the subset of JSON Schema the published schemas use:
/// array-of-objects shape, property types (scalar or union with null), enum
/// membership, required keys, and closed property sets.
fn validate_against_schema(rows: &serde_json::Value, schema_path: &Path) {
    let schema: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(schema_path).unwrap()).unwrap();
    assert_eq!(schema["type"], "array");
    let item_schema = &schema["items"];
    let properties = item_schema["properties"].as_object().unwrap();
    let required: Vec<&str> = item_schema["required"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(item_schema["additionalProperties"], false);

    let rows = rows.as_array().expect("output is a json array");
    assert!(!rows.is_empty());
    for row in rows {
        let object = row.as_object().expect("row is an object");
        for key in &required {
            assert!(object.contains_key(*key), "missing required field {key}");
        }
        for (key, value) in object {
            let spec = properties
                .get(key)
                .unwrap_or_else(|| panic!("undeclared field {key}"));
            let ty_ok = match &spec["type"] {
                serde_json::Value::String(ty) => schema_type_ok(value, ty),
                serde_json::Value::Array(tys) => tys
                    .iter()
                    .any(|ty| schema_type_ok(value, ty.as_str().unwrap())),
                other => panic!("bad type spec {other} for {key}"),
            };
            assert!(ty_ok, "field {key} = {value} fails type {}", spec["type"]);
            if let Some(variants) = spec["enum"].as_array() {
                assert!(
                    variants.contains(value),
                    "field {key} = {value} not in enum {variants:?}"
                );
            }
        }
    }
}

#[test]
fn json_output_conforms_to_schemas() {
    let schemas = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas");
    let cases: [(&str, Vec<&str>); 4] = [
        ("curve", vec!["curve", "--alpha-grid", "0:3:1/2"]),
        (
            "simulate",
            vec!["simulate", "--users", "3", "--base", "10", "--levels", "2",
                 "--alpha", "5/2", "--trials", "50"],
        ),
        (
            "verify",
            vec!["verify", "--users", "3", "--base", "10", "--levels", "2",
                 "--alpha", "5/2"],
        ),
        (
            "sweep",
            vec!["sweep", "--alpha-grid", "1/2:5/4:1/4", "--users", "2",
                 "--base", "12", "--levels", "2", "--trials", "40"],
        ),
    ];
    for (name, mut args) in cases {
        args.extend(["--format", "json"]);
        let out = gdof(&args);
        assert!(out.status.success(), "{name} failed: {}", stderr_str(&out));
        let rows: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
        validate_against_schema(&rows, &schemas.join(format!("{name}.schema.json")));
    }
}
