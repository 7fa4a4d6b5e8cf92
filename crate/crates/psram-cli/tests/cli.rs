//! End-to-end tests for the psram-perf binary: flag handling, exit codes,
//! report files, and the frozen reference-configuration numbers.

mod common;

use common::{code, config_path, read_json, run, run_raw, stderr, stdout, TempDir};

#[test]
fn help_exits_zero() {
    let out = run_raw(&["--help"], &[]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("model"));
    assert!(stdout(&out).contains("simulate"));
}

#[test]
fn version_exits_zero() {
    let out = run_raw(&["--version"], &[]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = run_raw(&["model", "--no-such-flag"], &[]);
    assert_eq!(code(&out), 1);
}

#[test]
fn missing_config_is_a_validation_error() {
    let dir = TempDir::new("missing-config");
    let out = run_raw(
        &["--config", "/nonexistent/config.json", "--out", &dir.arg(), "model"],
        &[],
    );
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("/nonexistent/config.json"));
}

#[test]
fn invalid_config_field_is_a_validation_error() {
    let dir = TempDir::new("bad-config");
    let cfg = dir.join("bad.json");
    let mut value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(config_path()).unwrap()).unwrap();
    value["f_hz"] = serde_json::json!(-1.0);
    std::fs::write(&cfg, serde_json::to_string(&value).unwrap()).unwrap();

    let out = run_raw(
        &["--config", cfg.to_str().unwrap(), "--out", &dir.arg(), "model"],
        &[],
    );
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("f_hz"), "stderr: {}", stderr(&out));
}

#[test]
fn model_reports_the_reference_numbers() {
    let dir = TempDir::new("model-ref");
    let out = run(&dir, &["model"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    let report = read_json(&dir.join("model.json"));
    assert_eq!(report["compute_cells"], 32);
    assert_eq!(report["peak_ops_per_s"].as_f64().unwrap(), 2.048e12);
    assert_eq!(report["efficiency_ops_per_j"].as_f64().unwrap(), 2.5e12);
    assert_eq!(report["area_mm2"].as_f64().unwrap(), 25.6);
    assert_eq!(report["energy_per_bit_j"].as_f64().unwrap(), 0.8e-12);
    // No workload requested: latencies collapse to the fixed overheads,
    // which are zero in the reference configuration.
    assert_eq!(report["breakdown"]["t_total_s"].as_f64().unwrap(), 0.0);
    assert_eq!(report["sustained_ops_per_s"].as_f64().unwrap(), 0.0);

    assert!(dir.join("model.csv").exists());
    assert!(dir.join("manifest.json").exists());
}

#[test]
fn wider_words_halve_the_cell_count() {
    let dir = TempDir::new("model-w16");
    let cfg = dir.join("w16.json");
    let mut value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(config_path()).unwrap()).unwrap();
    value["w_bits"] = serde_json::json!(16);
    std::fs::write(&cfg, serde_json::to_string(&value).unwrap()).unwrap();

    let out = run_raw(
        &["--config", cfg.to_str().unwrap(), "--out", &dir.arg(), "model"],
        &[],
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let report = read_json(&dir.join("model.json"));
    assert_eq!(report["compute_cells"], 16);
    assert_eq!(report["peak_ops_per_s"].as_f64().unwrap(), 1.024e12);
}

#[test]
fn model_accepts_a_named_workload() {
    let dir = TempDir::new("model-sst");
    let out = run(&dir, &["model", "--workload", "sst", "--n", "100000", "--steps", "10"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let report = read_json(&dir.join("model.json"));
    assert_eq!(report["workload"], "sst-n100000-s10");
    let total = report["breakdown"]["t_total_s"].as_f64().unwrap();
    assert!(total > 0.0);
    let sustained = report["sustained_ops_per_s"].as_f64().unwrap();
    assert!(sustained > 0.0 && sustained <= 2.048e12);
}

#[test]
fn unknown_workload_lists_the_known_names() {
    let dir = TempDir::new("model-unknown");
    let out = run(&dir, &["model", "--workload", "gemm"]);
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains("unknown workload 'gemm'"), "stderr: {err}");
    assert!(err.contains("sst") && err.contains("mttkrp") && err.contains("vlasov"));
}

#[test]
fn frequency_sweep_reports_energy_columns() {
    let dir = TempDir::new("sweep-freq");
    let out = run(
        &dir,
        &["sweep", "--param", "frequency", "--axis", "16e9,20e9,32e9,48e9"],
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    let csv = std::fs::read_to_string(dir.join("sweep-frequency.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "value,t_mem_s,t_conv_s,t_comp_s,t_total_s,sustained_ops_per_s,peak_ops_per_s,\
         energy_per_bit_pj,efficiency_tops_per_w"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].ends_with(",0.40,5.00"), "row: {}", rows[0]);
    assert!(rows[1].ends_with(",0.50,4.00"), "row: {}", rows[1]);
    assert!(rows[2].ends_with(",0.80,2.50"), "row: {}", rows[2]);
    assert!(rows[3].ends_with(",1.20,1.67"), "row: {}", rows[3]);
}

#[test]
fn bandwidth_sweep_never_slows_down() {
    let dir = TempDir::new("sweep-bw");
    let out = run(
        &dir,
        &["sweep", "--param", "bandwidth", "--axis", "1e12,2e12,4e12,8e12,16e12"],
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let report = read_json(&dir.join("sweep-bandwidth.json"));
    let sustained: Vec<f64> = report["reports"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["sustained_ops_per_s"].as_f64().unwrap())
        .collect();
    assert_eq!(sustained.len(), 5);
    for pair in sustained.windows(2) {
        assert!(pair[1] >= pair[0], "sustained fell: {sustained:?}");
    }
}

#[test]
fn array_capacity_sweep_scales_the_peak() {
    let dir = TempDir::new("sweep-bits");
    let out = run(&dir, &["sweep", "--param", "arraybits", "--axis", "256,512,1024"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let csv = std::fs::read_to_string(dir.join("sweep-arraybits.csv")).unwrap();
    let peaks: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|row| row.split(',').nth(6).unwrap())
        .collect();
    assert_eq!(peaks, ["2.04800000e12", "4.09600000e12", "8.19200000e12"]);
}

#[test]
fn unknown_sweep_parameter_lists_the_options() {
    let dir = TempDir::new("sweep-unknown");
    let out = run(&dir, &["sweep", "--param", "voltage", "--axis", "1,2"]);
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains("unknown parameter 'voltage'"), "stderr: {err}");
    assert!(err.contains("gridpoints") && err.contains("arraybits"));
}

#[test]
fn decreasing_axis_is_rejected() {
    let dir = TempDir::new("sweep-axis");
    let out = run(&dir, &["sweep", "--param", "frequency", "--axis", "32e9,16e9"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("increasing"), "stderr: {}", stderr(&out));
}

#[test]
fn roofline_places_the_default_workloads() {
    let dir = TempDir::new("roofline");
    let out = run(&dir, &["roofline"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("ridge point 1.67183673e0 ops/byte"), "stdout: {text}");
    assert!(text.contains("compute_bound") && text.contains("memory_bound"));

    let report = read_json(&dir.join("roofline.json"));
    assert_eq!(report["points"].as_array().unwrap().len(), 3);
    assert!(report["roof"].as_array().unwrap().len() > 100);
}

#[test]
fn roofs_only_emits_no_points() {
    let dir = TempDir::new("roofs-only");
    let out = run(&dir, &["roofline", "--roofs-only"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("roof curve only"));
    let report = read_json(&dir.join("roofline.json"));
    assert!(report["points"].as_array().unwrap().is_empty());
}

#[test]
fn custom_point_at_the_ridge_is_balanced() {
    let dir = TempDir::new("roofline-knee");
    let out = run(
        &dir,
        &["roofline", "--roofs-only", "--point", "knee,1.6718367346938775,8"],
    );
    // --roofs-only excludes points, so combining them must be rejected.
    assert_eq!(code(&out), 1);

    let out = run(&dir, &["roofline", "--point", "knee,1.6718367346938775,8"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("knee"), "stdout: {}", stdout(&out));
    assert!(stdout(&out).contains("balanced"), "stdout: {}", stdout(&out));
}

#[test]
fn shock_tube_simulation_matches_its_oracle() {
    let dir = TempDir::new("sim-sst");
    let out = run(
        &dir,
        &["--seed", "1", "simulate", "--workload", "sst", "--n", "100", "--steps", "50"],
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    let report = read_json(&dir.join("simulate-sst.json"));
    assert_eq!(report["workload"], "sst-n100-s50");
    assert!(report["within_tolerance"].as_bool().unwrap());
    assert!(report["max_oracle_err"].as_f64().unwrap() <= 1e-12);
    assert_eq!(report["stats"]["macs_executed"], 150_000);
}

#[test]
fn kinetic_kernel_energy_matches_the_closed_form() {
    let dir = TempDir::new("sim-vlasov");
    let out = run(&dir, &["simulate", "--workload", "vlasov", "--n-modes", "64"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("3072 switching events"), "stdout: {text}");
    assert!(text.contains("energy 2.45760000e-9 J"), "stdout: {text}");

    let report = read_json(&dir.join("simulate-vlasov.json"));
    assert_eq!(report["stats"]["switching_events"], 3072);
    // 3072 events at 0.5 pJ/bit scaled from 20 GHz up to 32 GHz.
    let expect = 3072.0 * (0.5e-12 * (32e9 / 20e9_f64));
    assert_eq!(report["energy_j"].as_f64().unwrap(), expect);
    assert_eq!(report["max_oracle_err"].as_f64().unwrap(), 0.0);
}

#[test]
fn tensor_kernel_runs_from_a_generated_input() {
    let dir = TempDir::new("sim-mttkrp");
    let out = run(
        &dir,
        &[
            "--seed", "7", "simulate", "--workload", "mttkrp", "--dims", "6x7x8",
            "--density", "0.2", "--rank", "3",
        ],
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let report = read_json(&dir.join("simulate-mttkrp.json"));
    assert!(report["within_tolerance"].as_bool().unwrap());
    assert_eq!(report["output"]["dims"], serde_json::json!([6, 7, 8]));
}

#[test]
fn tensor_kernel_reads_a_coordinate_file() {
    let dir = TempDir::new("sim-tns");
    let tns = dir.join("small.tns");
    std::fs::write(&tns, "1 1 1 2.0\n2 2 2 -1.5\n3 1 2 0.25\n").unwrap();
    let out = run(
        &dir,
        &["simulate", "--workload", "mttkrp", "--tensor", tns.to_str().unwrap(), "--rank", "2"],
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let report = read_json(&dir.join("simulate-mttkrp.json"));
    assert_eq!(report["workload"], "mttkrp-nnz3-r2");

    let manifest = read_json(&dir.join("manifest.json"));
    let inputs: Vec<String> = manifest["inputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    assert!(inputs.iter().any(|p| p.ends_with("small.tns")), "inputs: {inputs:?}");
}

#[test]
fn missing_tensor_file_is_a_validation_error() {
    let dir = TempDir::new("sim-missing-tns");
    let out = run(&dir, &["simulate", "--workload", "mttkrp", "--tensor", "missing.tns"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("missing.tns"), "stderr: {}", stderr(&out));
}

#[test]
fn malformed_tensor_file_reports_the_line() {
    let dir = TempDir::new("sim-bad-tns");
    let tns = dir.join("bad.tns");
    std::fs::write(&tns, "1 1 1 2.0\n1 2\n").unwrap();
    let out = run(
        &dir,
        &["simulate", "--workload", "mttkrp", "--tensor", tns.to_str().unwrap()],
    );
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("line 2"), "stderr: {}", stderr(&out));
}

#[test]
fn convolution_round_trip_stays_within_tolerance() {
    let dir = TempDir::new("sim-conv");
    let out = run(&dir, &["simulate", "--workload", "convolution", "--n-modes", "32"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let report = read_json(&dir.join("simulate-convolution.json"));
    assert!(report["within_tolerance"].as_bool().unwrap());
    assert!(report["max_oracle_err"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn convolution_rejects_fixed_point() {
    let dir = TempDir::new("sim-conv-fixed");
    let out = run(
        &dir,
        &["simulate", "--workload", "convolution", "--quantization", "fixed"],
    );
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("fixed-point"), "stderr: {}", stderr(&out));
}

#[test]
fn fixed_point_needs_room_for_fraction_bits() {
    let dir = TempDir::new("sim-fixed-bad");
    let out = run(
        &dir,
        &[
            "simulate", "--workload", "sst", "--n", "16", "--steps", "1",
            "--quantization", "fixed", "--frac-bits", "8",
        ],
    );
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("frac_bits"), "stderr: {}", stderr(&out));
}

#[test]
fn fixed_point_error_stays_under_the_bound() {
    let dir = TempDir::new("sim-fixed");
    let out = run(
        &dir,
        &[
            "simulate", "--workload", "sst", "--n", "64", "--steps", "3",
            "--quantization", "fixed", "--frac-bits", "6",
        ],
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let report = read_json(&dir.join("simulate-sst.json"));
    assert!(report["within_tolerance"].as_bool().unwrap());
    assert_eq!(report["quantization"], serde_json::json!({"fixed": {"frac_bits": 6}}));
}

#[test]
fn format_flag_selects_the_report_files() {
    let json_dir = TempDir::new("fmt-json");
    let out = run(&json_dir, &["--format", "json", "model"]);
    assert_eq!(code(&out), 0);
    assert!(json_dir.join("model.json").exists());
    assert!(!json_dir.join("model.csv").exists());
    assert!(json_dir.join("manifest.json").exists());

    let csv_dir = TempDir::new("fmt-csv");
    let out = run(&csv_dir, &["--format", "csv", "model"]);
    assert_eq!(code(&out), 0);
    assert!(!csv_dir.join("model.json").exists());
    assert!(csv_dir.join("model.csv").exists());
    assert!(csv_dir.join("manifest.json").exists());
}

#[test]
fn manifest_records_the_run() {
    let dir = TempDir::new("manifest");
    let out = run(&dir, &["--seed", "9", "model"]);
    assert_eq!(code(&out), 0);
    let manifest = read_json(&dir.join("manifest.json"));
    assert_eq!(manifest["command"], "model");
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest["config"]["c_total_bits"], 256);
    let outputs: Vec<&str> = manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert!(outputs.contains(&"model.json") && outputs.contains(&"model.csv"));
    assert!(manifest["created_utc"].as_str().unwrap().contains('T'));
}
