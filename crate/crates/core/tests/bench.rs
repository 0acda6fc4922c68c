use std::path::PathBuf;

use ocst_core::bench::{
    expand_cells, read_rows, run_experiment, summarize, ExperimentConfig, Initialization, InstanceSource, ReportRow,
    SolverTarget,
};
use ocst_core::exact::{brute_force_optimum, EnumerationBudget};
use ocst_core::milp::relative_gap;
use ocst_core::model::import_lp;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ocst-bench-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn row(formulation: &str, elapsed: f64, status: &str) -> ReportRow {
    ReportRow {
        instance: "i".into(),
        n: 5,
        degseq: 0,
        formulation: formulation.into(),
        status: status.into(),
        record: Some(10.0),
        bound: Some(if status == "optimal" { 10.0 } else { 8.0 }),
        gap: Some(if status == "optimal" { 0.0 } else { 0.25 }),
        elapsed,
        nodes: 1,
        file: None,
    }
}

#[test]
fn grid_size_and_reports() {
    let dir = scratch("grid");
    let cfg = ExperimentConfig {
        sizes: vec![6],
        degseqs_per_n: 2,
        formulations: vec!["F2L".into(), "F1L:M=n-1".into()],
        out_dir: Some(dir.clone()),
        ..ExperimentConfig::default()
    };
    let rows = run_experiment(&cfg).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(read_rows(&dir.join("rows.json")).unwrap(), rows);
    let from_csv = read_rows(&dir.join("rows.csv")).unwrap();
    assert_eq!(from_csv.len(), 4);
    for r in &rows {
        assert_eq!(r.status, "optimal");
        assert_eq!(r.gap, Some(relative_gap(r.record.unwrap(), r.bound.unwrap())));
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn tiny_time_limit_reports_partial_results() {
    let cfg = ExperimentConfig {
        sizes: vec![9],
        seeds: vec![2],
        formulations: vec!["F1Q".into()],
        time_limit: 0.001,
        ..ExperimentConfig::default()
    };
    let rows = run_experiment(&cfg).unwrap();
    assert_eq!(rows.len(), 1);
    let r = &rows[0];
    assert!(r.status == "feasible_time_limit" || r.status == "node_limit", "{}", r.status);
    assert!(r.timed_out());
    if let (Some(rec), Some(b)) = (r.record, r.bound) {
        assert!(rec >= b);
    }
}

#[test]
fn all_formulations_agree_with_the_oracle() {
    for init in [Initialization::None, Initialization::LocalSearch] {
        let cfg = ExperimentConfig { sizes: vec![7], seeds: vec![5], init, ..ExperimentConfig::default() };
        let cells = expand_cells(&cfg).unwrap();
        let opt = brute_force_optimum(&cells[0].instance, EnumerationBudget::default()).unwrap().cost;
        let rows = run_experiment(&cfg).unwrap();
        assert_eq!(rows.len(), 7);
        for r in &rows {
            assert_eq!(r.status, "optimal", "{}", r.formulation);
            assert!((r.record.unwrap() - opt).abs() <= 1e-4, "{} {:?} vs {opt}", r.formulation, r.record);
        }
    }
}

#[test]
fn lp_export_writes_importable_files() {
    let dir = scratch("export");
    let cfg = ExperimentConfig {
        sizes: vec![6],
        formulations: vec!["F1Q".into(), "F0L".into()],
        target: SolverTarget::LpExport,
        cuts: true,
        out_dir: Some(dir.clone()),
        ..ExperimentConfig::default()
    };
    let rows = run_experiment(&cfg).unwrap();
    for r in &rows {
        assert_eq!(r.status, "exported");
        let path = PathBuf::from(r.file.as_ref().unwrap());
        let text = std::fs::read_to_string(&path).unwrap();
        let m = import_lp(&text).unwrap();
        assert!(m.is_linear());
        assert!(m.constraints().iter().any(|c| c.name.starts_with("cut_")));
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn od_and_instance_sources() {
    let dir = scratch("sources");
    std::fs::create_dir_all(&dir).unwrap();
    let od = dir.join("zones.txt");
    let table: String = (0..8)
        .map(|i| (0..8).map(|j| if i == j { "0".to_string() } else { ((i * 3 + j) % 7).to_string() }).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(&od, table).unwrap();
    let inst_path = dir.join("fixed.json");
    let fixed = ocst_core::instance::generate_instance(5, 10, 0.8, None, 3).unwrap();
    std::fs::write(&inst_path, fixed.to_json()).unwrap();
    let cfg = ExperimentConfig {
        sources: vec![InstanceSource::OdMatrix { path: od }, InstanceSource::Instance { path: inst_path }],
        sizes: vec![5],
        formulations: vec!["F2L".into()],
        ..ExperimentConfig::default()
    };
    let cells = expand_cells(&cfg).unwrap();
    assert_eq!(cells.len(), 2);
    assert_eq!(cells[0].id, "zones-n5-s0");
    assert_eq!(cells[1].id, "fixed");
    assert_eq!(cells[1].instance.to_json(), fixed.to_json());

    let missing = ExperimentConfig { sources: vec![InstanceSource::Instance { path: dir.join("nope.json") }], ..cfg };
    assert!(missing.validate().is_err());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn summary_statistics() {
    let one = summarize(&[row("F2L", 1.5, "optimal")]);
    assert_eq!(one[0].median_time, 1.5);
    assert_eq!(one[0].mean_time, 1.5);

    let rows = vec![row("A", 1.0, "optimal"), row("A", 2.0, "optimal"), row("B", 5.0, "optimal"), row("B", 9.0, "feasible_time_limit")];
    let s = summarize(&rows);
    let a = s.iter().find(|r| r.formulation == "A").unwrap();
    let b = s.iter().find(|r| r.formulation == "B").unwrap();
    assert_eq!(a.rank, "I");
    assert_eq!(b.rank, "II");
    assert_eq!(a.timeout_fraction, 0.0);
    assert_eq!(b.timeout_fraction, 0.5);
    assert_eq!(b.median_time, 7.0);
}
