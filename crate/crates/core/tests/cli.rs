mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::{axis_probes, build, cubic_centred, kelvin_cube};
use phfoam::lattice::{generate, LatticeSpec};
use phfoam::phassembly::MaterialParams;
use phfoam::primal::{build_primal, BcKind, Facet, FacetBcs};
use phfoam::simulate::SimConfig;
use serde_json::Value;
use tempfile::TempDir;

fn phfoam(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phfoam"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn plates(cfg: SimConfig, bottom: f64, top: f64) -> SimConfig {
    cfg.with_dirichlet(Facet::ZMin, &[(0.0, bottom)])
        .with_dirichlet(Facet::ZMax, &[(0.0, top)])
}

#[test]
fn generate_writes_the_cubic_graph() {
    let dir = TempDir::new().unwrap();
    write_json(dir.path(), "spec.json", &LatticeSpec::cubic([2; 3], 1.0, 0.1));
    let o = phfoam(dir.path(), &["generate", "--spec", "spec.json", "--out-dir", "out"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let g: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/graph.json")).unwrap()).unwrap();
    assert_eq!(g["nodes"].as_array().unwrap().len(), 27);

    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/manifest.json")).unwrap()).unwrap();
    let outputs = manifest["outputs"].as_array().unwrap();
    assert!(outputs.iter().any(|f| f["path"].as_str().unwrap().ends_with("graph.json") && f["sha256"].as_str().unwrap().len() == 64));
}

#[test]
fn generate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let spec = LatticeSpec::kelvin([8.0; 3], 4.0, 0.1).with_origin([0.3, 0.7, 0.1]).with_azimuth(20.0);
    write_json(dir.path(), "spec.json", &spec);
    let a = phfoam(dir.path(), &["generate", "--spec", "spec.json"]);
    let b = phfoam(dir.path(), &["generate", "--spec", "spec.json"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    for out in ["x", "y"] {
        assert!(phfoam(dir.path(), &["generate", "--spec", "spec.json", "--out-dir", out]).status.success());
    }
    assert_eq!(fs::read(dir.path().join("x/graph.json")).unwrap(), fs::read(dir.path().join("y/graph.json")).unwrap());
}

#[test]
fn malformed_json_is_an_input_error_with_a_line_number() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("spec.json"), "{\n  \"kind\": \"cubic\",\n  \"extents\": [1, 1,\n").unwrap();
    let o = phfoam(dir.path(), &["generate", "--spec", "spec.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn invalid_spec_is_rejected() {
    let dir = TempDir::new().unwrap();
    write_json(dir.path(), "spec.json", &LatticeSpec::cubic([2; 3], -1.0, 0.1));
    let o = phfoam(dir.path(), &["generate", "--spec", "spec.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("invalid lattice spec"), "{}", stderr(&o));
}

#[test]
fn inspect_counts_match_the_library_classification() {
    let dir = TempDir::new().unwrap();
    let spec = cubic_centred(1, FacetBcs::all(BcKind::Nbc));
    write_json(dir.path(), "spec.json", &spec);
    let o = phfoam(dir.path(), &["inspect", "--spec", "spec.json", "--json", "--check", "topology"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();

    let p = build_primal(&generate(&spec).unwrap()).unwrap();
    let k = p.kind_counts();
    let as_vec = |v: &Value| -> Vec<usize> { v.as_array().unwrap().iter().map(|x| x.as_u64().unwrap() as usize).collect() };
    assert_eq!(as_vec(&report["kinds"]["nodes"]), k.nodes.to_vec());
    assert_eq!(as_vec(&report["kinds"]["edges"]), k.edges.to_vec());
    assert_eq!(as_vec(&report["kinds"]["faces"]), k.faces.to_vec());
    assert_eq!(as_vec(&report["kinds"]["volumes"]), k.volumes.to_vec());
    assert_eq!(report["valid"], Value::Bool(true));
    assert_eq!(report["inner_nodes"], 1);
    assert_eq!(report["state_dimension"], 2);
}

#[test]
fn inspect_writes_geometry_tables() {
    let dir = TempDir::new().unwrap();
    write_json(dir.path(), "spec.json", &cubic_centred(2, FacetBcs::top_bottom_dirichlet()));
    let o = phfoam(dir.path(), &["inspect", "--spec", "spec.json", "--out-dir", "geo"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ["edges.csv", "nodes.csv", "report.json", "manifest.json"] {
        assert!(dir.path().join("geo").join(name).is_file(), "{name}");
    }
}

#[test]
fn empty_graph_gives_an_empty_report() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("graph.json"),
        r#"{"nodes": [], "struts": [], "windows": [], "cells": [],
            "domain": {"min": [0, 0, 0], "max": [1, 1, 1]}}"#,
    )
    .unwrap();
    let o = phfoam(dir.path(), &["inspect", "--graph", "graph.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("empty complex"), "{}", stdout(&o));
}

#[test]
fn inspect_reports_the_kelvin_state_dimension() {
    let dir = TempDir::new().unwrap();
    write_json(dir.path(), "spec.json", &kelvin_cube());
    let o = phfoam(dir.path(), &["inspect", "--spec", "spec.json", "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["inner_nodes"], 424);
    assert_eq!(report["state_dimension"], 848);
}

#[test]
fn assemble_writes_the_bundle_and_passes_the_skew_check() {
    let dir = TempDir::new().unwrap();
    write_json(dir.path(), "spec.json", &cubic_centred(2, FacetBcs::top_bottom_dirichlet()));
    let o = phfoam(dir.path(), &["assemble", "--spec", "spec.json", "--out-dir", "model", "--check", "skew"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("max |J + Jᵀ| = 0"), "{}", stdout(&o));
    for name in ["A.txt", "B.txt", "C_s.txt", "C_f.txt", "Lambda_s.txt", "Lambda_f.txt", "H.txt", "model.json", "manifest.json"] {
        assert!(dir.path().join("model").join(name).is_file(), "{name}");
    }
}

#[test]
fn insulated_model_reports_a_zero_eigenvalue() {
    let dir = TempDir::new().unwrap();
    write_json(dir.path(), "spec.json", &cubic_centred(2, FacetBcs::all(BcKind::Nbc)));
    let o = phfoam(dir.path(), &["assemble", "--spec", "spec.json", "--out-dir", "model", "--check", "energy"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let zeros: usize = out
        .lines()
        .find_map(|l| l.strip_prefix("eigenvalues: "))
        .and_then(|rest| rest.split_whitespace().next())
        .and_then(|n| n.parse().ok())
        .expect("eigenvalue line");
    assert!(zeros >= 1, "{out}");
}

#[test]
fn missing_material_file_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    write_json(dir.path(), "spec.json", &cubic_centred(1, FacetBcs::all(BcKind::Nbc)));
    let o = phfoam(dir.path(), &["assemble", "--spec", "spec.json", "--materials", "absent.json", "--out-dir", "m"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.json"));
}

#[test]
fn invalid_materials_are_an_input_error() {
    let dir = TempDir::new().unwrap();
    write_json(dir.path(), "spec.json", &cubic_centred(1, FacetBcs::all(BcKind::Nbc)));
    write_json(dir.path(), "mat.json", &MaterialParams { lambda_s: -1.0, ..MaterialParams::default() });
    let o = phfoam(dir.path(), &["assemble", "--spec", "spec.json", "--materials", "mat.json", "--out-dir", "m"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn constant_boundary_run_gives_a_constant_trace() {
    let dir = TempDir::new().unwrap();
    let spec = cubic_centred(2, FacetBcs::top_bottom_dirichlet());
    let model = build(&spec, &MaterialParams::default()).model;
    let ids: Vec<String> = model.layout.inner_nodes.iter().take(3).map(|n| n.id.clone()).collect();
    write_json(dir.path(), "spec.json", &spec);
    write_json(dir.path(), "sim.json", &plates(SimConfig::new(0.1, 2.0, 300.0), 300.0, 300.0).with_probes(&ids));
    let o = phfoam(dir.path(), &["simulate", "--spec", "spec.json", "--sim", "sim.json", "--out-dir", "run"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = csv_rows(&dir.path().join("run/trace.csv"));
    assert_eq!(&header[1..4], &ids[..]);
    assert_eq!(rows.len(), 21);
    for row in &rows {
        for k in 1..=3 {
            assert!((row[k] - 300.0).abs() <= 1e-9, "{row:?}");
        }
    }
}

#[test]
fn audit_residual_column_is_bounded() {
    let dir = TempDir::new().unwrap();
    write_json(dir.path(), "spec.json", &cubic_centred(3, FacetBcs::top_bottom_dirichlet()));
    write_json(dir.path(), "sim.json", &plates(SimConfig::new(0.05, 3.0, 300.0), 300.0, 400.0));
    let o = phfoam(dir.path(), &["simulate", "--spec", "spec.json", "--sim", "sim.json", "--out-dir", "run", "--check", "energy"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = csv_rows(&dir.path().join("run/trace.csv"));
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let (es, ef, audit) = (col("E_solid"), col("E_fluid"), col("audit_residual"));
    for row in &rows {
        assert!(row[audit].abs() <= 1e-10 * (row[es] + row[ef]), "{row:?}");
    }
}

#[test]
fn kelvin_probe_trace_has_four_columns() {
    let dir = TempDir::new().unwrap();
    let spec = kelvin_cube();
    let model = build(&spec, &MaterialParams::default()).model;
    let probes: Vec<String> = axis_probes(&model).into_iter().map(|(id, _)| id).collect();
    write_json(dir.path(), "spec.json", &spec);
    write_json(dir.path(), "sim.json", &plates(SimConfig::new(0.5, 10.0, 300.0), 300.0, 400.0).with_probes(&probes));
    let o = phfoam(dir.path(), &["simulate", "--spec", "spec.json", "--sim", "sim.json", "--out-dir", "run"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = csv_rows(&dir.path().join("run/trace.csv"));
    assert_eq!(&header[..5], &["t", probes[0].as_str(), probes[1].as_str(), probes[2].as_str(), probes[3].as_str()]);
    assert_eq!(rows.len(), 21);
    let last = rows.last().unwrap();
    // Higher probes warm faster under the heated lid.
    assert!(last[1] < last[2] && last[2] < last[3] && last[3] < last[4], "{last:?}");
    assert!(last[1..5].iter().all(|&t| (300.0..=400.0).contains(&t)));
}

#[test]
fn vtk_frames_cover_every_model_node() {
    let dir = TempDir::new().unwrap();
    let spec = cubic_centred(2, FacetBcs::top_bottom_dirichlet());
    let model = build(&spec, &MaterialParams::default()).model;
    let nodes = model.n_inner() + model.n_border_nodes();
    let mut cfg = plates(SimConfig::new(0.1, 1.0, 300.0), 300.0, 400.0);
    cfg.frame_every = 5;
    write_json(dir.path(), "spec.json", &spec);
    write_json(dir.path(), "sim.json", &cfg);
    let o = phfoam(dir.path(), &["simulate", "--spec", "spec.json", "--sim", "sim.json", "--out-dir", "run", "--format", "vtk"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let frames: Vec<PathBuf> = (0..3).map(|k| dir.path().join(format!("run/frame_{k:05}.vtk"))).collect();
    for f in &frames {
        let text = fs::read_to_string(f).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(text.contains(&format!("POINTS {nodes} double")));
        assert!(text.contains(&format!("POINT_DATA {nodes}")));
        assert!(text.contains("SCALARS T_solid double 1") && text.contains("SCALARS T_fluid double 1"));
    }
    assert!(!dir.path().join("run/frame_00003.vtk").exists());
}

#[test]
fn bundle_runs_match_direct_runs() {
    let dir = TempDir::new().unwrap();
    let spec = cubic_centred(2, FacetBcs::top_bottom_dirichlet());
    let model = build(&spec, &MaterialParams::default()).model;
    let ids: Vec<String> = model.layout.inner_nodes.iter().map(|n| n.id.clone()).collect();
    write_json(dir.path(), "spec.json", &spec);
    write_json(dir.path(), "sim.json", &plates(SimConfig::new(0.1, 2.0, 300.0), 300.0, 400.0).with_probes(&ids));
    assert!(phfoam(dir.path(), &["assemble", "--spec", "spec.json", "--out-dir", "model"]).status.success());
    let a = phfoam(dir.path(), &["simulate", "--model", "model", "--sim", "sim.json", "--out-dir", "a"]);
    let b = phfoam(dir.path(), &["simulate", "--spec", "spec.json", "--sim", "sim.json", "--out-dir", "b"]);
    assert!(a.status.success() && b.status.success(), "{}{}", stderr(&a), stderr(&b));
    let (ha, ra) = csv_rows(&dir.path().join("a/trace.csv"));
    let (hb, rb) = csv_rows(&dir.path().join("b/trace.csv"));
    assert_eq!(ha, hb);
    for (x, y) in ra.iter().zip(&rb) {
        for (u, v) in x.iter().zip(y) {
            assert!((u - v).abs() <= 1e-12 * u.abs().max(1.0), "{u} vs {v}");
        }
    }
}

#[test]
fn simulate_writes_the_fit_when_requested() {
    let dir = TempDir::new().unwrap();
    let spec = LatticeSpec::cubic([10; 3], 4.0, 0.5).with_bcs(FacetBcs::top_bottom_dirichlet());
    let model = build(&spec, &MaterialParams::default()).model;
    let probes: Vec<String> = [8.0, 16.0, 24.0, 32.0]
        .iter()
        .map(|&z| {
            model
                .layout
                .inner_nodes
                .iter()
                .find(|n| n.position == [20.0, 20.0, z])
                .unwrap()
                .id
                .clone()
        })
        .collect();
    let mut cfg = plates(SimConfig::new(0.1, 20.0, 300.0), 300.0, 400.0).with_probes(&probes);
    cfg.fit = Some(phfoam::simulate::FitRequest { t_bottom: 300.0, t_top: 400.0, t_initial: 300.0, order: 200 });
    write_json(dir.path(), "spec.json", &spec);
    write_json(dir.path(), "sim.json", &cfg);
    let o = phfoam(dir.path(), &["simulate", "--spec", "spec.json", "--sim", "sim.json", "--out-dir", "run"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let fit: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("run/fit.json")).unwrap()).unwrap();
    assert!(fit["a_eff_mm2_per_s"].as_f64().unwrap() > 0.0);
    assert!(fit["rms_K"].as_f64().unwrap().is_finite());
    assert_eq!(fit["order"], 200);
}
