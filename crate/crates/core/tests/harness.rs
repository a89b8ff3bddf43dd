mod common;

use common::*;
use gradlsq::bounds;
use gradlsq::harness::config::{DataSource, PilotPolicy, SizeSpec};
use gradlsq::harness::experiment::run_on_dataset;
use gradlsq::harness::report::{read_report_csv, write_report, REPORT_SCHEMA};
use gradlsq::harness::{self, csvio, ColumnRef, ExperimentConfig, MethodSpec, ReportFormat};
use gradlsq::linalg;
use gradlsq::probabilities::{self, ProbMethod};
use gradlsq::sampling::{self, Scheme};
use gradlsq::seed::RngSeed;
use gradlsq::synthesis::{Preset, ResponseSpec, SyntheticSpec};
use serde_json::Value;

fn config(methods: &[(ProbMethod, Scheme)], sizes: Vec<SizeSpec>, replications: usize) -> ExperimentConfig {
    ExperimentConfig {
        source: DataSource::Synthetic {
            spec: SyntheticSpec {
                n: 1000,
                d: 3,
                mixture: Preset::Ga.spec(1.0),
                response: ResponseSpec::default(),
            },
            seed: RngSeed(1),
        },
        methods: methods.iter().map(|&(prob, scheme)| MethodSpec { prob, scheme }).collect(),
        sizes,
        pilot: PilotPolicy::FractionOfR(1.0),
        replications,
        seed: RngSeed(99),
        delta: 0.1,
        redistribute: false,
        sketch_rows: None,
        output_csv: None,
        output_json: None,
        include_timing: false,
    }
}

/// Checks the subset of draft-07 keywords the report schema uses.
fn validate(schema: &Value, v: &Value, path: &str) -> Result<(), String> {
    let obj = schema.as_object().unwrap();
    if let Some(t) = obj.get("type").and_then(Value::as_str) {
        let ok = match t {
            "object" => v.is_object(),
            "array" => v.is_array(),
            "integer" => v.is_u64() || v.is_i64(),
            "number" => v.is_number(),
            "string" => v.is_string(),
            other => return Err(format!("unsupported type {other}")),
        };
        if !ok {
            return Err(format!("{path}: expected {t}, got {v}"));
        }
    }
    if let Some(choices) = obj.get("enum").and_then(Value::as_array) {
        if !choices.contains(v) {
            return Err(format!("{path}: {v} not in enum"));
        }
    }
    if let Some(x) = v.as_f64() {
        let num = |k: &str| obj.get(k).and_then(Value::as_f64);
        if num("minimum").is_some_and(|m| x < m)
            || num("maximum").is_some_and(|m| x > m)
            || num("exclusiveMinimum").is_some_and(|m| x <= m)
            || num("exclusiveMaximum").is_some_and(|m| x >= m)
        {
            return Err(format!("{path}: {x} out of range"));
        }
    }
    if let Some(map) = v.as_object() {
        let props = obj.get("properties").and_then(Value::as_object);
        for req in obj.get("required").and_then(Value::as_array).into_iter().flatten() {
            if !map.contains_key(req.as_str().unwrap()) {
                return Err(format!("{path}: missing {req}"));
            }
        }
        for (k, child) in map {
            match props.and_then(|p| p.get(k)) {
                Some(s) => validate(s, child, &format!("{path}.{k}"))?,
                None if obj.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    return Err(format!("{path}: unexpected key {k}"))
                }
                None => {}
            }
        }
    }
    if let (Some(items), Some(arr)) = (obj.get("items"), v.as_array()) {
        for (i, child) in arr.iter().enumerate() {
            validate(items, child, &format!("{path}[{i}]"))?;
        }
    }
    Ok(())
}

#[test]
fn json_report_matches_schema() {
    let schema: Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    let cfg = config(
        &[(ProbMethod::Gradient, Scheme::Poisson), (ProbMethod::Leverage, Scheme::WithReplacement)],
        vec![SizeSpec::Ratio(0.05), SizeSpec::Absolute(80.0)],
        20,
    );
    let report = harness::run_experiment(&cfg).unwrap();
    for timing in [true, false] {
        let mut buf = Vec::new();
        write_report(&report, ReportFormat::Json, &mut buf, timing).unwrap();
        let v: Value = serde_json::from_slice(&buf).unwrap();
        validate(&schema, &v, "$").unwrap();
    }
    let mut broken: Value = serde_json::to_value(&report).unwrap();
    broken["records"][0]["coverage"] = Value::from(1.5);
    assert!(validate(&schema, &broken, "$").is_err());
    broken["records"][0]["coverage"] = Value::from(0.5);
    broken["records"][0]["method"] = Value::from("magic");
    assert!(validate(&schema, &broken, "$").is_err());
}

#[test]
fn report_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&[(ProbMethod::Uniform, Scheme::Poisson)], vec![SizeSpec::Ratio(0.1)], 10);
    let report = harness::run_experiment(&cfg).unwrap();
    let csv = dir.path().join("r.csv");
    let json = dir.path().join("r.json");
    harness::emit_report(&report, ReportFormat::Csv, &csv, true).unwrap();
    harness::emit_report(&report, ReportFormat::Json, &json, true).unwrap();
    let back = read_report_csv(std::fs::File::open(&csv).unwrap()).unwrap();
    assert_eq!(back, report.records);
    let back: harness::ExperimentReport = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(back, report);
}

#[test]
fn dataset_csv_round_trip_is_exact() {
    let data = dataset(Preset::Mg3, 300, 4, 21);
    let mut buf = Vec::new();
    csvio::write_csv_to(&mut buf, &data).unwrap();
    let back = csvio::read_csv(buf.as_slice(), &ColumnRef::Name("y".into()), true).unwrap();
    assert_eq!(back, data);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("d.csv");
    csvio::write_csv(&p, &data).unwrap();
    assert_eq!(harness::load_csv(&p, &ColumnRef::Index(4), true).unwrap(), data);
}

#[test]
fn csv_source_in_config_is_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(Preset::Ga, 400, 3, 2);
    csvio::write_csv(dir.path().join("data.csv"), &data).unwrap();
    let cfg_path = dir.path().join("exp.toml");
    std::fs::write(
        &cfg_path,
        "source = \"csv\"\ncsv_path = \"data.csv\"\nmethods = [\"uniform:poisson\"]\nr_ratios = [1.0]\nreplications = 3\n",
    )
    .unwrap();
    let cfg = ExperimentConfig::from_path(&cfg_path).unwrap();
    let report = harness::run_experiment(&cfg).unwrap();
    assert_eq!(report.n, 400);
    assert_eq!(report.records[0].mse, 0.0);
}

#[test]
fn reports_do_not_depend_on_cell_order_or_threads() {
    let both = [(ProbMethod::Gradient, Scheme::Poisson), (ProbMethod::Uniform, Scheme::WithReplacement)];
    let cfg = config(&both, vec![SizeSpec::Ratio(0.05)], 40);
    let a = gradlsq::par::with_threads(1, || harness::run_experiment(&cfg).unwrap());
    let b = gradlsq::par::with_threads(3, || harness::run_experiment(&cfg).unwrap());
    let strip = |r: &harness::ExperimentReport| {
        let mut buf = Vec::new();
        write_report(r, ReportFormat::Csv, &mut buf, false).unwrap();
        buf
    };
    assert_eq!(strip(&a), strip(&b));
    let swapped = config(&[both[1], both[0]], vec![SizeSpec::Ratio(0.05)], 40);
    let c = harness::run_experiment(&swapped).unwrap();
    assert_eq!(c.records[0].mse, a.records[1].mse);
    assert_eq!(c.records[1].mse, a.records[0].mse);
}

#[test]
fn mse_falls_as_r_grows() {
    for preset in [Preset::Ga, Preset::Mg1, Preset::Mg2] {
        let data = dataset(preset, 10_000, 20, 7);
        let methods = [
            (ProbMethod::Uniform, Scheme::Poisson),
            (ProbMethod::Leverage, Scheme::Poisson),
            (ProbMethod::Gradient, Scheme::Poisson),
        ];
        let cfg = config(&methods, vec![SizeSpec::Ratio(0.01), SizeSpec::Ratio(0.05)], 200);
        let report = run_on_dataset(&data, &cfg).unwrap();
        for pair in report.records.chunks(2) {
            assert!(pair[1].mse < pair[0].mse, "{preset} {}: {} !< {}", pair[0].method, pair[1].mse, pair[0].mse);
            assert!(pair.iter().all(|r| r.failures * 100 < r.replications));
        }
    }
}

#[test]
fn gradient_probabilities_are_more_dispersed_on_mg2() {
    let data = dataset(Preset::Mg2, 20_000, 10, 3);
    let pilot = sampling::pilot_estimate(&data, 1000.0, RngSeed(5)).unwrap();
    let grad = harness::probability_dispersion(&probabilities::gradient_probs(&data, &pilot.beta).unwrap());
    let lev = harness::probability_dispersion(&probabilities::leverage_probs(&data.x).unwrap());
    assert!(grad.variance > lev.variance, "{} vs {}", grad.variance, lev.variance);
    assert!(grad.min < lev.min);
}

#[test]
fn coverage_holds_once_r_is_admissible() {
    // d = 2 keeps the minimum size well below n.
    let data = dataset(Preset::Ga, 200_000, 2, 9);
    let full = linalg::solve_full(&data).unwrap().beta;
    let pilot = sampling::pilot_estimate(&data, 2000.0, RngSeed(1)).unwrap();
    let dists = [
        probabilities::uniform_probs(data.n()).unwrap(),
        probabilities::leverage_probs(&data.x).unwrap(),
        probabilities::gradient_probs(&data, &pilot.beta).unwrap(),
    ];
    let r_min = dists
        .iter()
        .map(|pi| bounds::bound_report(&data, &full, pi, 0.1).unwrap().r_min.value().unwrap())
        .fold(0.0, f64::max);
    // Gradient π (and so its r_min) moves with each replication's pilot.
    let r = (3.0 * r_min).ceil();
    assert!(r < data.n() as f64 / 2.0, "r_min {r_min}");
    let methods = [
        (ProbMethod::Uniform, Scheme::Poisson),
        (ProbMethod::Leverage, Scheme::Poisson),
        (ProbMethod::Gradient, Scheme::Poisson),
    ];
    let cfg = config(&methods, vec![SizeSpec::Absolute(r)], 100);
    let report = run_on_dataset(&data, &cfg).unwrap();
    for rec in &report.records {
        // Gradient π is rebuilt from each replication's pilot, and rows with a
        // tiny pilot residual inflate σ_Σ², so only the fixed distributions are
        // admissible in every replication.
        if rec.method != ProbMethod::Gradient {
            assert_eq!(rec.admissible, 1.0, "{}", rec.method);
        } else {
            assert!(rec.admissible >= 0.5, "{}", rec.admissible);
        }
        assert!(rec.coverage >= 0.9, "{}: {}", rec.method, rec.coverage);
    }
}
