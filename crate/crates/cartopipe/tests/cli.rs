mod common;

use std::fs;
use std::process::{Command, Output};

use common::fixture;
use tempfile::TempDir;

fn cartopipe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cartopipe"))
        .args(args)
        .env_remove("CARTOPIPE_WORKSPACE")
        .output()
        .unwrap()
}

fn path(rel: &str) -> String {
    fixture(rel).to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_exits_zero_and_writes_the_workspace() {
    let ws = TempDir::new().unwrap();
    let o = cartopipe(&["run", &path("tools/tools.pipeline.json"), "--workspace", ws.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 4);
    assert!(ws.path().join("central.graphml").exists());
    assert!(ws.path().join("run-report.json").exists());
}

#[test]
fn workspace_from_environment() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("a.xml"), "<a/>").unwrap();
    fs::write(
        dir.path().join("p.json"),
        r#"{"steps": [{"step": "inject_xml", "in": "a.xml", "out": "a.carto.json"}]}"#,
    )
    .unwrap();
    let ws = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_cartopipe"))
        .args(["run", dir.path().join("p.json").to_str().unwrap()])
        .env("CARTOPIPE_WORKSPACE", ws.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(ws.path().join("a.carto.json").exists());
}

#[test]
fn run_exit_codes() {
    let dir = TempDir::new().unwrap();
    let failing = dir.path().join("fail.json");
    fs::write(&failing, r#"{"steps": [{"step": "inject_xml", "in": "nope.xml", "out": "a.carto.json"}]}"#).unwrap();
    assert_eq!(cartopipe(&["run", failing.to_str().unwrap()]).status.code(), Some(1));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"steps": [{"step": "unknown"}]}"#).unwrap();
    assert_eq!(cartopipe(&["run", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(cartopipe(&["run", dir.path().join("missing.json").to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(cartopipe(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(cartopipe(&["run", "x", "--strict", "--lenient"]).status.code(), Some(2));
}

#[test]
fn validate_reports_issues() {
    let o = cartopipe(&["validate", &path("tools/minimal.carto.json"), &path("tools/tools.cartoschema.json")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "ok");

    // The minimal model uses Tools types, which Core does not know.
    let o = cartopipe(&["validate", &path("tools/minimal.carto.json"), "Core"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("error"));
}

#[test]
fn export_writes_each_format() {
    let dir = TempDir::new().unwrap();
    for exporter in ["graphml", "kml", "dot", "viewjson"] {
        let out = dir.path().join(format!("m.{exporter}"));
        let o = cartopipe(&[
            "export",
            exporter,
            &path("collab/golden/central.carto.json"),
            "Core",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{exporter}");
        let golden = match exporter {
            "viewjson" => "view.json",
            other => other,
        };
        assert_eq!(
            fs::read_to_string(&out).unwrap(),
            fs::read_to_string(fixture(&format!("collab/golden/central.{golden}"))).unwrap()
        );
    }
    let o = cartopipe(&["export", "svg", &path("tools/minimal.carto.json"), "Core", "x"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn view_prints_the_document() {
    let o = cartopipe(&[
        "view",
        &path("tools/views.vd.json"),
        "extract-tools",
        &path("tools/minimal.carto.json"),
        &path("tools/tools.cartoschema.json"),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), fs::read_to_string(fixture("tools/golden/extract_tools.graphml")).unwrap());

    let o = cartopipe(&[
        "view",
        &path("tools/views.vd.json"),
        "nope",
        &path("tools/minimal.carto.json"),
        &path("tools/tools.cartoschema.json"),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn inject_and_transform_reproduce_the_pipeline() {
    let dir = TempDir::new().unwrap();
    let xml = dir.path().join("x.carto.json");
    let sheet = dir.path().join("s.carto.json");
    let central = dir.path().join("c.carto.json");
    assert!(cartopipe(&["inject", &path("tools/tools.xml"), xml.to_str().unwrap()]).status.success());
    assert!(cartopipe(&["inject", &path("tools/tools.xml"), sheet.to_str().unwrap(), "--spreadsheet"])
        .status
        .success());
    let o = cartopipe(&[
        "transform",
        &path("tools/Spreadsheet2Tools.carto.tx"),
        sheet.to_str().unwrap(),
        &path("tools/tools.cartoschema.json"),
        central.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read_to_string(&central).unwrap(),
        fs::read_to_string(fixture("tools/golden/central.carto.json")).unwrap()
    );
    let o = cartopipe(&["inject", &path("tools/Spreadsheet2Tools.carto.tx"), xml.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}
