//! Builtin figure grids and the CSV contract.

use indexmap::IndexMap;
use lrcalc_core::sweep::{builtin_figure, run_sweep, sweep_to_csv, Figure, Grid, Output, SweepModel};
use lrcalc_core::SweepSpec;

fn csv_bytes(spec: &SweepSpec) -> Vec<u8> {
    let mut out = Vec::new();
    sweep_to_csv(spec, &mut out).unwrap();
    out
}

#[test]
fn fig5_grid_and_right_edge() {
    let spec = builtin_figure(Figure::Fig5);
    assert_eq!(spec.fixed["N"], 100.0);
    assert_eq!(spec.fixed["b"], 0.0);
    let rows: Vec<_> = run_sweep(&spec).unwrap().collect();
    assert_eq!(rows.len(), 1000);
    let names = spec.axis_names();
    let (bi, ai) = (
        names.iter().position(|&n| n == "beta").unwrap(),
        names.iter().position(|&n| n == "alpha").unwrap(),
    );
    let edge = rows
        .iter()
        .find(|r| r.point[bi] == 1.0 && r.point[ai] == 20.0)
        .unwrap();
    // (α + β + N + 1) / (α + b + 1) = 122 / 21
    assert!((edge.log10_lr.unwrap() - (122.0f64 / 21.0).log10()).abs() < 1e-12);
    assert!(rows.iter().all(|r| r.error.is_none()));
}

#[test]
fn fig6_grid_and_large_lambda_asymptote() {
    let spec = builtin_figure(Figure::Fig6);
    assert_eq!(
        spec.axes["lambda"],
        Grid::Log {
            start: 1.0,
            stop: 1e4,
            points: 200
        }
    );
    let rows: Vec<_> = run_sweep(&spec).unwrap().collect();
    assert_eq!(rows.len(), 200 * 8);
    let li = spec.axis_names().iter().position(|&n| n == "lambda").unwrap();
    let edge: Vec<_> = rows.iter().filter(|r| r.point[li] == 1e4).collect();
    assert_eq!(edge.len(), 8);
    for r in edge {
        assert!((r.log10_lr.unwrap() - 5000f64.log10()).abs() < 0.05, "{r:?}");
    }
    // plug-in overestimates once λ dwarfs kobs
    for r in &rows {
        let kobs = r.point[0];
        if r.point[li] >= 100.0 * (kobs + 1.0) {
            assert!(r.diff().unwrap() > 0.0, "{r:?}");
        }
    }
}

#[test]
fn table3_sub_sweeps_cover_the_four_shapes() {
    let spec = builtin_figure(Figure::Table3);
    let subs = spec.sub_sweeps("r").unwrap();
    let shapes: Vec<f64> = subs.iter().map(|s| s.fixed["r"]).collect();
    assert_eq!(shapes, [1.0, 10.0, 100.0, 1000.0]);
    for s in &subs {
        assert_eq!(s.model, SweepModel::DirichletNegbinomial);
        assert_eq!(s.axis_names(), ["kobs", "lambda"]);
    }
    // one kobs line from the r = 1000 sweep, evaluated in full
    let mut line = subs[3].clone();
    line.axes.insert("kobs".into(), Grid::Values(vec![50.0]));
    let rows: Vec<_> = run_sweep(&line).unwrap().collect();
    assert_eq!(rows.len(), 200);
    assert!(rows.iter().all(|r| r.error.is_none() && r.truncated.is_some()));
}

#[test]
fn error_rows_are_kept_in_place() {
    let spec = SweepSpec {
        model: SweepModel::DirichletPoisson,
        fixed: IndexMap::from([("N".into(), 20.0), ("m".into(), 12.0)]),
        axes: IndexMap::from([
            ("kobs".into(), Grid::Values(vec![5.0, 11.0, 12.0, 15.0])),
            ("lambda".into(), Grid::Values(vec![3.0, 30.0])),
        ]),
        outputs: vec![Output::Log10Lr],
    };
    let rows: Vec<_> = run_sweep(&spec).unwrap().collect();
    assert_eq!(rows.len(), 8);
    let failed: Vec<_> = rows.iter().filter(|r| r.error.is_some()).map(|r| r.point[0]).collect();
    assert_eq!(failed, [12.0, 12.0, 15.0, 15.0]);
    let text = String::from_utf8(csv_bytes(&spec)).unwrap();
    assert_eq!(text.lines().count(), 9);
    assert_eq!(text.lines().next().unwrap(), "kobs,lambda,log10_lr,error,terms_evaluated,truncated");
}

#[test]
fn csv_is_reproducible_and_round_trips() {
    let mut spec = builtin_figure(Figure::Fig6);
    spec.axes.insert(
        "lambda".into(),
        Grid::Log {
            start: 1.0,
            stop: 1e4,
            points: 15,
        },
    );
    let first = csv_bytes(&spec);
    assert_eq!(first, csv_bytes(&spec));
    let text = String::from_utf8(first).unwrap();
    let rows: Vec<_> = run_sweep(&spec).unwrap().collect();
    for (line, row) in text.lines().skip(1).zip(&rows) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[2].parse::<f64>().unwrap(), row.log10_lr.unwrap());
        assert_eq!(fields[3].parse::<f64>().unwrap(), row.log10_lr_plugin.unwrap());
        // 17 significant digits
        assert_eq!(fields[2].split('e').next().unwrap().replace(['-', '.'], "").len(), 17);
    }
}

#[test]
fn sweep_spec_from_file() {
    let dir = std::env::temp_dir().join(format!("lrcalc-sweep-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("spec.json");
    std::fs::write(&path, builtin_figure(Figure::Fig5).to_json()).unwrap();
    assert_eq!(SweepSpec::from_path(&path).unwrap(), builtin_figure(Figure::Fig5));
    std::fs::remove_dir_all(&dir).unwrap();
    assert!(SweepSpec::from_path(&path).is_err());
}
