use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use cartopipe::core::export::ExporterId;
use cartopipe::core::views::run_view;
use cartopipe::core::xform::{execute, parse_transformation, ExecOptions};
use cartopipe::core::xml::xml_to_model;
use cartopipe::core::spreadsheet::{spreadsheet_to_model, xml_to_spreadsheet};
use cartopipe::core::validate;
use cartopipe::files::{load_model, load_registry, load_schema_arg, read_text, resolve_schema, save_model, write_text};
use cartopipe::inject_xml;
use cartopipe::pipeline::{run_pipeline, RunOptions};
use cartopipe::serve::{serve, Snapshot};

/// Cartography pipelines: inject, transform, view, export and serve models.
#[derive(Parser)]
#[command(name = "cartopipe", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Fail on unresolved trace references (the default unless a
    /// transformation says `lenient`).
    #[arg(long, global = true, conflicts_with = "lenient")]
    strict: bool,
    /// Drop unresolved trace references with a warning instead of failing.
    #[arg(long, global = true)]
    lenient: bool,
    /// Directory for pipeline artifacts.
    #[arg(long, global = true, env = "CARTOPIPE_WORKSPACE")]
    workspace: Option<PathBuf>,
}

impl Global {
    fn lenient(&self) -> Option<bool> {
        match (self.strict, self.lenient) {
            (true, _) => Some(false),
            (_, true) => Some(true),
            _ => None,
        }
    }

    fn exec_options(&self) -> ExecOptions {
        ExecOptions { lenient: self.lenient() }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a `*.pipeline.json` and write `run-report.json` to the workspace.
    Run { config: PathBuf },
    /// Check a model against a schema (a file, or Core/Xml/Spreadsheet).
    Validate { model: PathBuf, schema: String },
    /// Write a model in one of graphml, kml, dot, viewjson.
    Export {
        exporter: String,
        model: PathBuf,
        schema: String,
        out: PathBuf,
    },
    /// Run a registered view; the document goes to stdout unless --out is given.
    View {
        registry: PathBuf,
        id: String,
        model: PathBuf,
        schema: String,
        /// Where to write the exported view document.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where to write the view's model.
        #[arg(long)]
        out_model: Option<PathBuf>,
    },
    /// Run a transformation. Schemas named in its header are resolved
    /// against `schema` and the built-ins.
    Transform {
        tx: PathBuf,
        model: PathBuf,
        schema: String,
        out: PathBuf,
    },
    /// Inject an XML file as an Xml (or, with --spreadsheet, Spreadsheet) model.
    Inject {
        xml: PathBuf,
        out: PathBuf,
        #[arg(long)]
        spreadsheet: bool,
    },
    /// Serve the JSON API (and optionally the viewer bundle).
    Serve {
        model: PathBuf,
        registry: PathBuf,
        schema: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Directory served at `/`.
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<ExitCode> {
    let g = &cli.global;
    match &cli.command {
        Command::Run { config } => {
            let options = RunOptions {
                workspace: g.workspace.clone(),
                default_workspace: None,
                lenient: g.lenient(),
            };
            let report = match run_pipeline(config, &options) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {:#}", e.0);
                    return Ok(ExitCode::from(2));
                }
            };
            for s in &report.steps {
                for w in &s.warnings {
                    eprintln!("warning: step {} ({}): {w}", s.index, s.step);
                }
                match &s.error {
                    None => println!("step {} {}: ok ({:.1} ms)", s.index, s.step, s.wall_time_ms),
                    Some(e) => println!("step {} {}: failed: {e}", s.index, s.step),
                }
            }
            Ok(ExitCode::from(report.exit_code() as u8))
        }
        Command::Validate { model, schema } => {
            let (schema, _) = load_schema_arg(schema)?;
            let model = load_model(model)?;
            let report = validate(&model, &schema);
            for issue in &report.issues {
                println!("{issue}");
            }
            Ok(if report.ok {
                println!("ok");
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Export {
            exporter,
            model,
            schema,
            out,
        } => {
            let exporter = exporter_arg(exporter)?;
            let (schema, _) = load_schema_arg(schema)?;
            let model = load_valid(model, &schema)?;
            write_text(out, &exporter.export(&model, &schema))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::View {
            registry,
            id,
            model,
            schema,
            out,
            out_model,
        } => {
            let (schema, _) = load_schema_arg(schema)?;
            let registry = load_registry(registry)?;
            let model = load_model(model)?;
            let result = run_view(&registry, id, &model, &schema, g.exec_options())?;
            for w in &result.warnings {
                eprintln!("warning: {w}");
            }
            let doc = result.exporter.export(&result.model, &schema);
            match out {
                Some(path) => write_text(path, &doc)?,
                None => print!("{doc}"),
            }
            if let Some(path) = out_model {
                save_model(path, &result.model)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Transform { tx, model, schema, out } => {
            let (configured, _) = load_schema_arg(schema)?;
            let ast = parse_transformation(&read_text(tx)?).with_context(|| format!("`{}`", tx.display()))?;
            let model = load_model(model)?;
            let source_name = if ast.source_schema.is_empty() { &model.schema_name } else { &ast.source_schema };
            let source = resolve_schema(source_name, &configured)?;
            let target = if ast.target_schema.is_empty() {
                configured.clone()
            } else {
                resolve_schema(&ast.target_schema, &configured)?
            };
            let outcome = execute(&ast, &model, &source, &target, g.exec_options())?;
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            save_model(out, &outcome.model)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Inject { xml, out, spreadsheet } => {
            let doc = inject_xml(&read_text(xml)?).with_context(|| format!("`{}`", xml.display()))?;
            let model = if *spreadsheet {
                spreadsheet_to_model(&xml_to_spreadsheet(&doc)?)
            } else {
                xml_to_model(&doc)
            };
            save_model(out, &model)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve {
            model,
            registry,
            schema,
            port,
            host,
            static_dir,
        } => {
            let snapshot = Snapshot::load(model, registry, schema, g.exec_options())?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(serve(snapshot, SocketAddr::new(*host, *port), static_dir.clone()))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn exporter_arg(name: &str) -> Result<ExporterId> {
    ExporterId::from_name(name).ok_or_else(|| {
        let known: Vec<&str> = ExporterId::ALL.iter().map(|e| e.name()).collect();
        anyhow!("unknown exporter `{name}` (expected one of {})", known.join(", "))
    })
}

fn load_valid(path: &Path, schema: &cartopipe::core::MetamodelSchema) -> Result<cartopipe::core::CartographyModel> {
    let model = load_model(path)?;
    let report = validate(&model, schema);
    if let Some(issue) = report.errors().next() {
        bail!("`{}` does not conform to schema `{}`: {issue}", path.display(), schema.name());
    }
    Ok(model)
}
