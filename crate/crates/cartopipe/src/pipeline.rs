//! Runs `*.pipeline.json` step chains.
//!
//! Inputs that an earlier step produced are read from the workspace; every
//! other input is an external file relative to the config file. Outputs
//! always go to the workspace.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use cartopipe_core::schema::{load_schema, MetamodelSchema};
use cartopipe_core::spreadsheet::{spreadsheet_to_model, xml_to_spreadsheet};
use cartopipe_core::views::run_view;
use cartopipe_core::xform::{execute, parse_transformation, ExecOptions};
use cartopipe_core::xml::{model_to_xml, xml_to_model};
use cartopipe_core::{merge, validate, ExporterId};

use crate::files::{load_model, load_registry, read_text, resolve_schema, save_model, write_text};
use crate::inject::inject_xml;

pub const REPORT_FILE: &str = "run-report.json";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub workspace: Option<String>,
    /// Central schema; the core schema when absent.
    #[serde(default)]
    pub schema: Option<String>,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Inputs {
    One(String),
    Many(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case", deny_unknown_fields)]
pub enum Step {
    InjectXml {
        #[serde(rename = "in")]
        input: String,
        out: String,
    },
    XmlToSpreadsheet {
        #[serde(rename = "in")]
        input: String,
        out: String,
    },
    Transform {
        tx: String,
        #[serde(rename = "in")]
        input: Inputs,
        out: String,
        #[serde(default)]
        lenient: Option<bool>,
    },
    Merge {
        #[serde(rename = "in")]
        input: Vec<String>,
        out: String,
    },
    View {
        registry: String,
        id: String,
        #[serde(rename = "in")]
        input: String,
        #[serde(rename = "outModel")]
        out_model: String,
        #[serde(rename = "outDoc")]
        out_doc: String,
        #[serde(default)]
        lenient: Option<bool>,
    },
    Export {
        exporter: String,
        #[serde(rename = "in")]
        input: String,
        out: String,
    },
}

impl Step {
    pub fn kind(&self) -> &'static str {
        match self {
            Step::InjectXml { .. } => "inject_xml",
            Step::XmlToSpreadsheet { .. } => "xml_to_spreadsheet",
            Step::Transform { .. } => "transform",
            Step::Merge { .. } => "merge",
            Step::View { .. } => "view",
            Step::Export { .. } => "export",
        }
    }

    /// Every path the step reads: model/document inputs plus the
    /// transformation and registry files.
    pub fn inputs(&self) -> Vec<&str> {
        match self {
            Step::InjectXml { input, .. } | Step::XmlToSpreadsheet { input, .. } | Step::Export { input, .. } => {
                vec![input]
            }
            Step::Transform { tx, input, .. } => {
                let mut v = vec![tx.as_str()];
                match input {
                    Inputs::One(i) => v.push(i),
                    Inputs::Many(is) => v.extend(is.iter().map(String::as_str)),
                }
                v
            }
            Step::Merge { input, .. } => input.iter().map(String::as_str).collect(),
            Step::View { registry, input, .. } => vec![registry, input],
        }
    }

    pub fn outputs(&self) -> Vec<&str> {
        match self {
            Step::View { out_model, out_doc, .. } => vec![out_model, out_doc],
            Step::InjectXml { out, .. }
            | Step::XmlToSpreadsheet { out, .. }
            | Step::Transform { out, .. }
            | Step::Merge { out, .. }
            | Step::Export { out, .. } => vec![out],
        }
    }
}

/// Problems detected before any step runs (exit code 2).
#[derive(Debug, thiserror::Error)]
#[error("{0:#}")]
pub struct ConfigError(pub anyhow::Error);

impl From<anyhow::Error> for ConfigError {
    fn from(e: anyhow::Error) -> Self {
        ConfigError(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StepReport {
    pub index: usize,
    pub step: String,
    pub status: Status,
    pub wall_time_ms: f64,
    /// Workspace-relative paths written by the step.
    pub artifacts: Vec<String>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    pub ok: bool,
    pub workspace: PathBuf,
    pub steps: Vec<StepReport>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.ok {
            0
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the config's `workspace`.
    pub workspace: Option<PathBuf>,
    /// Used when neither the options nor the config name a workspace
    /// (normally `CARTOPIPE_WORKSPACE`).
    pub default_workspace: Option<PathBuf>,
    /// Overrides every transformation's strict/lenient flag.
    pub lenient: Option<bool>,
}

pub fn parse_config(text: &str) -> Result<PipelineConfig, ConfigError> {
    let config: PipelineConfig = serde_json::from_str(text).context("invalid pipeline config")?;
    check_dataflow(&config)?;
    Ok(config)
}

/// Outputs are unique, multi-input transforms are rejected and no step
/// reads what the same or a later step writes.
pub fn check_dataflow(config: &PipelineConfig) -> Result<(), ConfigError> {
    let mut producer: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, step) in config.steps.iter().enumerate() {
        match step {
            Step::Transform { input: Inputs::Many(_), .. } => {
                return Err(anyhow!("step {i}: transform takes a single input; merge explicitly first").into());
            }
            Step::Export { exporter, .. } if ExporterId::from_name(exporter).is_none() => {
                return Err(anyhow!("step {i}: unknown exporter `{exporter}`").into());
            }
            _ => {}
        }
        for out in step.outputs() {
            if let Some(j) = producer.insert(out, i) {
                return Err(anyhow!("steps {j} and {i} both write `{out}`").into());
            }
        }
    }
    for (i, step) in config.steps.iter().enumerate() {
        for input in step.inputs() {
            if let Some(&j) = producer.get(input) {
                if j >= i {
                    return Err(anyhow!("step {i} reads `{input}`, which step {j} only writes later").into());
                }
            }
        }
    }
    Ok(())
}

struct Run<'a> {
    config_dir: PathBuf,
    workspace: PathBuf,
    schema: MetamodelSchema,
    produced: BTreeMap<&'a str, usize>,
    lenient: Option<bool>,
}

impl Run<'_> {
    fn input(&self, path: &str) -> PathBuf {
        if self.produced.contains_key(path) {
            self.workspace.join(path)
        } else {
            self.config_dir.join(path)
        }
    }

    fn output(&self, path: &str) -> PathBuf {
        self.workspace.join(path)
    }

    fn exec_options(&self, step: Option<bool>) -> ExecOptions {
        ExecOptions {
            lenient: self.lenient.or(step),
        }
    }
}

/// Loads, checks and runs a pipeline. The report is also written to
/// `<workspace>/run-report.json`.
pub fn run_pipeline(config_path: &Path, options: &RunOptions) -> Result<RunReport, ConfigError> {
    let text = read_text(config_path)?;
    let config = parse_config(&text)?;
    let config_dir = config_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let workspace = options
        .workspace
        .clone()
        .or_else(|| config.workspace.as_ref().map(|w| config_dir.join(w)))
        .or_else(|| options.default_workspace.clone())
        .unwrap_or_else(|| config_dir.clone());
    let schema = match &config.schema {
        Some(p) => {
            let path = config_dir.join(p);
            load_schema(&read_text(&path)?).with_context(|| format!("invalid schema `{}`", path.display()))?
        }
        None => MetamodelSchema::core(),
    };
    std::fs::create_dir_all(&workspace)
        .with_context(|| format!("cannot create workspace `{}`", workspace.display()))?;

    let mut cx = Run {
        config_dir,
        workspace: workspace.clone(),
        schema,
        produced: BTreeMap::new(),
        lenient: options.lenient,
    };
    let mut report = RunReport {
        ok: true,
        workspace,
        steps: Vec::new(),
    };
    for (index, step) in config.steps.iter().enumerate() {
        log::info!("step {index}: {}", step.kind());
        let started = Instant::now();
        let result = run_step(&cx, step);
        let wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
        let (status, warnings, error) = match result {
            Ok(warnings) => (Status::Ok, warnings, None),
            Err(e) => {
                log::error!("step {index} ({}) failed: {e:#}", step.kind());
                (Status::Failed, Vec::new(), Some(format!("{e:#}")))
            }
        };
        for w in &warnings {
            log::warn!("step {index}: {w}");
        }
        let ok = status == Status::Ok;
        report.steps.push(StepReport {
            index,
            step: step.kind().into(),
            status,
            wall_time_ms,
            artifacts: if ok { step.outputs().into_iter().map(String::from).collect() } else { Vec::new() },
            warnings,
            error,
        });
        if !ok {
            report.ok = false;
            break;
        }
        for out in step.outputs() {
            cx.produced.insert(out, index);
        }
    }
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_text(&report.workspace.join(REPORT_FILE), &(json + "\n"))?;
    Ok(report)
}

fn run_step(cx: &Run<'_>, step: &Step) -> Result<Vec<String>> {
    let mut warnings = Vec::new();
    match step {
        Step::InjectXml { input, out } => {
            let xml = inject_xml(&read_text(&cx.input(input))?).with_context(|| format!("cannot inject `{input}`"))?;
            save_model(&cx.output(out), &xml_to_model(&xml))?;
        }
        Step::XmlToSpreadsheet { input, out } => {
            let xml = model_to_xml(&load_model(&cx.input(input))?).with_context(|| format!("`{input}`"))?;
            let book = xml_to_spreadsheet(&xml).with_context(|| format!("`{input}`"))?;
            save_model(&cx.output(out), &spreadsheet_to_model(&book))?;
        }
        Step::Transform { tx, input, out, lenient } => {
            let Inputs::One(input) = input else { bail!("transform takes a single input") };
            let ast = parse_transformation(&read_text(&cx.input(tx))?).with_context(|| format!("`{tx}`"))?;
            let model = load_model(&cx.input(input))?;
            let source_name = if ast.source_schema.is_empty() { &model.schema_name } else { &ast.source_schema };
            let source = resolve_schema(source_name, &cx.schema)?;
            let target = if ast.target_schema.is_empty() {
                cx.schema.clone()
            } else {
                resolve_schema(&ast.target_schema, &cx.schema)?
            };
            let outcome = execute(&ast, &model, &source, &target, cx.exec_options(*lenient))
                .with_context(|| format!("transformation `{tx}`"))?;
            warnings.extend(outcome.warnings);
            save_model(&cx.output(out), &outcome.model)?;
        }
        Step::Merge { input, out } => {
            let models = input
                .iter()
                .map(|i| load_model(&cx.input(i)))
                .collect::<Result<Vec<_>>>()?;
            let name = models.first().map_or(cx.schema.name(), |m| m.schema_name.as_str());
            let schema = resolve_schema(name, &cx.schema)?;
            let merged = merge(&models, &schema)?;
            warnings.extend(merged.warnings);
            save_model(&cx.output(out), &merged.model)?;
        }
        Step::View {
            registry,
            id,
            input,
            out_model,
            out_doc,
            lenient,
        } => {
            let reg = load_registry(&cx.input(registry))?;
            let model = load_model(&cx.input(input))?;
            let schema = resolve_schema(&model.schema_name, &cx.schema)?;
            let result = run_view(&reg, id, &model, &schema, cx.exec_options(*lenient))?;
            warnings.extend(result.warnings);
            save_model(&cx.output(out_model), &result.model)?;
            write_text(&cx.output(out_doc), &result.exporter.export(&result.model, &schema))?;
        }
        Step::Export { exporter, input, out } => {
            let exporter = ExporterId::from_name(exporter).ok_or_else(|| anyhow!("unknown exporter `{exporter}`"))?;
            let model = load_model(&cx.input(input))?;
            let schema = resolve_schema(&model.schema_name, &cx.schema)?;
            let report = validate(&model, &schema);
            if let Some(issue) = report.errors().next() {
                bail!("`{input}` does not conform to schema `{}`: {issue}", schema.name());
            }
            write_text(&cx.output(out), &exporter.export(&model, &schema))?;
        }
    }
    Ok(warnings)
}
