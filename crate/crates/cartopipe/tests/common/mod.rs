#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use cartopipe::core::export::ExporterId;
use cartopipe::core::views::run_view;
use cartopipe::core::xform::ExecOptions;
use cartopipe::files::{load_model, load_registry, load_schema_arg};
use cartopipe::pipeline::{run_pipeline, RunOptions, RunReport};
use tempfile::TempDir;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture(rel: &str) -> PathBuf {
    fixtures().join(rel)
}

/// (case directory, pipeline file, artifacts with a golden copy)
pub const PIPELINES: &[(&str, &str, &[&str])] = &[
    ("collab", "collab.pipeline.json", &[
        "central.carto.json",
        "central.graphml",
        "central.kml",
        "central.dot",
        "central.view.json",
    ]),
    ("tools", "tools.pipeline.json", &["central.carto.json", "central.graphml"]),
    ("b3", "build.pipeline.json", &[
        "central.carto.json",
        "central.graphml",
        "central.view.json",
        "cross-site.carto.json",
        "cross-site.dot",
    ]),
];

pub fn run_case(case: &str, config: &str) -> (TempDir, RunReport) {
    let ws = TempDir::new().unwrap();
    let options = RunOptions {
        workspace: Some(ws.path().to_path_buf()),
        ..RunOptions::default()
    };
    let report = run_pipeline(&fixture(case).join(config), &options)
        .unwrap_or_else(|e| panic!("{case}: {:#}", e.0));
    (ws, report)
}

/// Compares `actual` with `fixtures/<case>/golden/<name>`; with
/// `CARTOPIPE_BLESS=1` the golden is rewritten instead.
pub fn check_golden(case: &str, name: &str, actual: &str) -> Result<(), String> {
    let path = fixture(case).join("golden").join(name);
    if std::env::var_os("CARTOPIPE_BLESS").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, actual).unwrap();
        return Ok(());
    }
    let expected = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected == actual {
        Ok(())
    } else {
        let line = expected
            .lines()
            .zip(actual.lines())
            .position(|(a, b)| a != b)
            .map_or_else(|| "length".to_string(), |i| format!("line {}", i + 1));
        Err(format!("{case}/golden/{name} differs at {line}"))
    }
}

/// The extract-tools view on the minimal fixture, exported as GraphML and DOT.
pub fn extract_tools_docs() -> (String, String) {
    let (schema, _) = load_schema_arg(fixture("tools/tools.cartoschema.json").to_str().unwrap()).unwrap();
    let registry = load_registry(&fixture("tools/views.vd.json")).unwrap();
    let model = load_model(&fixture("tools/minimal.carto.json")).unwrap();
    let result = run_view(&registry, "extract-tools", &model, &schema, ExecOptions::default()).unwrap();
    (
        ExporterId::GraphMl.export(&result.model, &schema),
        ExporterId::Dot.export(&result.model, &schema),
    )
}

/// Runs every pipeline and checks every golden; returns the mismatches.
pub fn golden_mismatches() -> Vec<String> {
    let mut problems = Vec::new();
    for (case, config, artifacts) in PIPELINES {
        let (ws, report) = run_case(case, config);
        if !report.ok {
            problems.push(format!("{case}: pipeline failed: {:?}", report.steps.last().and_then(|s| s.error.clone())));
            continue;
        }
        for name in *artifacts {
            let actual = fs::read_to_string(ws.path().join(name)).unwrap();
            if let Err(e) = check_golden(case, name, &actual) {
                problems.push(e);
            }
        }
    }
    let (graphml, dot) = extract_tools_docs();
    for (name, text) in [("extract_tools.graphml", graphml), ("extract_tools.dot", dot)] {
        if let Err(e) = check_golden("tools", name, &text) {
            problems.push(e);
        }
    }
    problems
}
