use std::f64::consts::FRAC_PI_8;
use std::path::Path;
use std::process::{Command, Output};

use fso_geoloss::config::ExperimentConfig;
use fso_geoloss::geoloss::{exact_loss, loss_db};
use fso_geoloss::geometry::{spherical_mean_position, tracking_orientation, Pose};
use fso_geoloss::output::extract_effective_config;

const BIN: &str = env!("CARGO_BIN_EXE_fso-geoloss");

fn run(args: &[&str], threads: Option<&str>) -> Output {
    let mut c = Command::new(BIN);
    c.args(args).env_remove("FSO_GEOLOSS_THREADS");
    if let Some(t) = threads {
        c.env("FSO_GEOLOSS_THREADS", t);
    }
    c.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn validate_default_passes() {
    let o = run(&["validate"], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("# failed = none"));
}

#[test]
fn validate_detects_flipped_cross_term() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "hook.cfg", "validate.flip_rho_yz_sign = true\n");
    let o = run(&["validate", "--config", &cfg], None);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("intensity_cross_product,false"), "{out}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("intensity_cross_product"));
}

#[test]
fn validate_with_loose_tolerance_passes() {
    let o = run(&["validate", "--tol", "1e-3"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("orthogonal_collapse,true"));
}

#[test]
fn config_errors_exit_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "mc.seed = 4\n\ndetector.a_m = -1\n");
    let o = run(&["bounds", "--config", &cfg], None);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3") && err.contains("detector.a_m"), "{err}");

    let o = run(&["bounds", "--config", "/nonexistent/file.cfg"], None);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["bounds", "--tol", "2"], None);
    assert_eq!(o.status.code(), Some(2));
    // the density needs a non-degenerate distribution
    let o = run(&["pdf"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // alpha = π/2 puts the mean position in the detector plane
    let cfg = write(dir.path(), "deg.cfg", "sweep.variable = alpha\nsweep.values_deg = 90\n");
    let o = run(&["bounds", "--config", &cfg], None);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bounds_table_layout_and_claims() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "b.cfg", "sweep.variable = alpha\nsweep.values_deg = 0, 45\nbounds.offsets_m = 0,0;0.05,0.03\n");
    let o = run(&["bounds", "--config", &cfg], None);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(
        header,
        "alpha_rad,offset_y_m,offset_z_m,exact_db,bound_low_db,bound_upp_db,approx_low_db,approx_upp_db,approx_mean_db"
    );
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 4);
    let f = |r: &Vec<String>, i: usize| r[i].parse::<f64>().unwrap();
    // α = 0, centred: every column agrees
    let r0 = &rows[0];
    for i in 4..6 {
        assert!((f(r0, i) - f(r0, 3)).abs() < 1e-6);
    }
    let r45 = rows.iter().find(|r| f(r, 0) > 0.7 && f(r, 1) == 0.0).unwrap();
    assert!(f(r45, 3) - f(r0, 3) <= 1.5);
    for r in &rows {
        assert!(f(r, 4) >= f(r, 3) - 1e-7 && f(r, 3) >= f(r, 5) - 1e-7);
    }
}

#[test]
fn csv_metadata_and_effective_config_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "r.cfg", "geometry.alpha_deg = 22.5\ngeometry.beta_rad = 1.9634954084936207\nmc.seed = 9\n");
    let out = dir.path().join("out.csv");
    let o = run(&["bounds", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "11"], None);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# fso-geoloss "));
    assert!(text.contains("# seed = 11\n"));
    let block = extract_effective_config(&text).unwrap();
    let parsed = ExperimentConfig::parse_str(&block).unwrap();
    assert_eq!(parsed.seed, 11);
    assert_eq!(parsed.to_text(), block.clone() + "\n");
    assert!(text.contains(&format!("# config_hash = {}\n", parsed.hash())));
}

#[test]
fn json_output() {
    let o = run(&["bounds", "--format", "json"], None);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["command"], "bounds");
    assert_eq!(v["columns"][3], "exact");
    assert_eq!(v["units"][3], "db");
    assert_eq!(v["rows"].as_array().unwrap().len(), 9);
    let block = v["effective_config"].as_str().unwrap();
    assert_eq!(ExperimentConfig::parse_str(block).unwrap().format, fso_geoloss::config::OutputFormat::Json);
}

#[test]
fn average_loss_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "a.cfg",
        "geometry.alpha_rad = 0.39269908169872414\ngeometry.beta_rad = 1.9634954084936207\n\
         sweep.variable = sigma_o_mrad\nsweep.values = 0, 0.5\nsweep.ranges_m = 800, 1500\nmc.n_trials = 300\n",
    );
    let outs: Vec<Vec<u8>> = ["1", "4", "8"]
        .iter()
        .map(|t| {
            let o = run(&["average-loss", "--config", &cfg], Some(t));
            assert_eq!(o.status.code(), Some(0));
            o.stdout
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
    assert_eq!(outs[0], outs[2]);
    let rows = data_rows(&String::from_utf8(outs[0].clone()).unwrap());
    assert_eq!(rows.len(), 4);
    // σ = 0 rows carry the deterministic loss for both kernels' exact column
    let exact0: f64 = rows[0][3].parse().unwrap();
    let mu = spherical_mean_position(800.0, FRAC_PI_8, 5.0 * FRAC_PI_8);
    let pose = Pose::new(mu, tracking_orientation(&mu).unwrap());
    let h = exact_loss(&pose, &Default::default(), &Default::default()).unwrap();
    assert!((exact0 - loss_db(h)).abs() < 1e-12);
}

#[test]
fn pdf_command_reports_histogram_and_gof() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.cfg", "stability.sigma_o_rad = 2e-4\npdf.bins = 20\nmc.n_trials = 2000\n");
    let o = run(&["pdf", "--config", &cfg], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = stdout(&o);
    assert!(csv.contains("# chi2_p_value = "));
    assert!(csv.contains("# hoyt_q = 1\n"));
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 20);
    let total: u64 = rows.iter().map(|r| r[2].parse::<u64>().unwrap()).sum();
    assert!(total <= 2000);

    let cfg = write(dir.path(), "q.cfg", "stability.sigma_o_rad = 2e-4\nmc.n_trials = 3\n");
    let o = run(&["pdf", "--config", &cfg], None);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("trials"));
}
