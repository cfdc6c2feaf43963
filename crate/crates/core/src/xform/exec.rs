//! Two-phase rule execution.
//!
//! Phase one matches every source element against the rules, instantiates
//! target elements and records trace links. Phase two evaluates bindings;
//! any source element appearing as a reference resolves through the trace
//! to the primary target created for it.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::ast::{FieldPath, Rule, TargetSpec, TransformationAst};
use super::check::check_transformation;
use super::eval::{Env, EvalError, Evaluator, Value};
use super::ParseError;
use crate::model::{CartographyModel, Element, Locator};
use crate::schema::MetamodelSchema;
use crate::validate::{validate, Issue};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceMap {
    by_rule: BTreeMap<(String, String), String>,
    by_source: BTreeMap<String, String>,
}

impl TraceMap {
    /// Primary target created for `source_id`, whichever rule matched it.
    pub fn resolve(&self, source_id: &str) -> Option<&str> {
        self.by_source.get(source_id).map(String::as_str)
    }

    pub fn resolve_rule(&self, source_id: &str, rule: &str) -> Option<&str> {
        self.by_rule
            .get(&(source_id.to_string(), rule.to_string()))
            .map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.by_source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_source.is_empty()
    }

    fn record(&mut self, source_id: &str, rule: &str, target_id: &str) {
        self.by_rule
            .insert((source_id.into(), rule.into()), target_id.into());
        self.by_source.insert(source_id.into(), target_id.into());
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExecError {
    #[error(transparent)]
    Check(#[from] ParseError),
    #[error("source model does not conform to schema `{schema}`: {}", first_issue(.issues))]
    SourceInvalid { schema: String, issues: Vec<Issue> },
    #[error("element `{element}` is matched by both rule `{first}` and rule `{second}`")]
    Ambiguous {
        element: String,
        first: String,
        second: String,
    },
    #[error("rule `{rule}`, element `{element}`: {binding} refers to `{referenced}` which no rule matched")]
    Unresolved {
        rule: String,
        element: String,
        binding: String,
        referenced: String,
    },
    #[error("rule `{rule}`, element `{element}`: {error}")]
    Eval {
        rule: String,
        element: String,
        error: EvalError,
    },
    #[error("two target elements share the id `{0}`")]
    DuplicateTargetId(String),
    #[error("transformation produced an invalid model: {}", first_issue(.0))]
    OutputInvalid(Vec<Issue>),
}

fn first_issue(issues: &[Issue]) -> String {
    match issues.first() {
        Some(i) if issues.len() > 1 => format!("{i} (and {} more)", issues.len() - 1),
        Some(i) => i.to_string(),
        None => "no details".into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExecOptions {
    /// Overrides the transformation's own strict/lenient flag.
    pub lenient: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecOutcome {
    pub model: CartographyModel,
    pub trace: TraceMap,
    pub warnings: Vec<String>,
}

struct Instance<'r> {
    rule: &'r Rule,
    source: usize,
    item: Option<Value>,
    ids: Vec<String>,
}

fn eval_err(rule: &Rule, element: &Element, error: EvalError) -> ExecError {
    ExecError::Eval {
        rule: rule.name.clone(),
        element: element.id.clone(),
        error,
    }
}

pub fn execute(
    ast: &TransformationAst,
    source: &CartographyModel,
    source_schema: &MetamodelSchema,
    target_schema: &MetamodelSchema,
    options: ExecOptions,
) -> Result<ExecOutcome, ExecError> {
    check_transformation(ast, source_schema, target_schema)?;
    let report = validate(source, source_schema);
    if !report.ok {
        return Err(ExecError::SourceInvalid {
            schema: source_schema.name().into(),
            issues: report.errors().cloned().collect(),
        });
    }
    let lenient = options.lenient.unwrap_or(ast.lenient);

    // Phase 1: match and instantiate.
    let ev = Evaluator::new(source, source_schema);
    let mut trace = TraceMap::default();
    let mut instances = Vec::new();
    let mut taken = BTreeSet::new();

    for &pos in ev.canonical_positions() {
        let element = ev.element(pos);
        let mut matched: Option<&Rule> = None;
        for rule in &ast.rules {
            if !source_schema.is_subtype(&element.type_name, &rule.source_type) {
                continue;
            }
            let mut env = Env::new();
            env.insert(rule.source_var.clone(), Value::Elem(pos));
            if let Some(guard) = &rule.guard {
                match ev.evaluate(guard, &env).map_err(|e| eval_err(rule, element, e))? {
                    Value::Bool(true) => {}
                    Value::Bool(false) => continue,
                    other => {
                        return Err(eval_err(
                            rule,
                            element,
                            EvalError::Type(format!("guard must be boolean, got {}", other.type_label())),
                        ))
                    }
                }
            }
            if let Some(first) = matched {
                return Err(ExecError::Ambiguous {
                    element: element.id.clone(),
                    first: first.name.clone(),
                    second: rule.name.clone(),
                });
            }
            matched = Some(rule);
        }
        let Some(rule) = matched else { continue };

        let mut env = Env::new();
        env.insert(rule.source_var.clone(), Value::Elem(pos));
        let items: Vec<Option<Value>> = match &rule.foreach {
            None => alloc::vec![None],
            Some(f) => match ev.evaluate(&f.collection, &env).map_err(|e| eval_err(rule, element, e))? {
                Value::Coll(items) => items.into_iter().map(Some).collect(),
                other => {
                    return Err(eval_err(
                        rule,
                        element,
                        EvalError::Type(format!("foreach expects a collection, got {}", other.type_label())),
                    ))
                }
            },
        };

        for (k, item) in items.into_iter().enumerate() {
            let base = if rule.foreach.is_some() {
                format!("{}/{}/{k}", rule.name, element.id)
            } else {
                format!("{}/{}", rule.name, element.id)
            };
            let mut env = env.clone();
            if let (Some(f), Some(item)) = (&rule.foreach, &item) {
                env.insert(f.var.clone(), item.clone());
            }
            let mut ids = Vec::with_capacity(rule.targets.len());
            for (ti, target) in rule.targets.iter().enumerate() {
                let id = match target.binding(&FieldPath::Id) {
                    Some(b) => match ev.evaluate(&b.expr, &env).map_err(|e| eval_err(rule, element, e))? {
                        Value::Str(s) if !s.is_empty() => s,
                        other => {
                            return Err(eval_err(
                                rule,
                                element,
                                EvalError::Type(format!("id must be a non-empty string, got {other:?}")),
                            ))
                        }
                    },
                    None if ti == 0 => base.clone(),
                    None => format!("{base}/{}", target.var),
                };
                if !taken.insert(id.clone()) {
                    return Err(ExecError::DuplicateTargetId(id));
                }
                ids.push(id);
            }
            if k == 0 {
                trace.record(&element.id, &rule.name, &ids[0]);
            }
            instances.push(Instance {
                rule,
                source: pos,
                item,
                ids,
            });
        }
    }

    // Phase 2: bind.
    let ev = ev.with_trace(&trace);
    let mut built: Vec<Element> = Vec::new();
    let mut dropped: BTreeSet<String> = BTreeSet::new();
    let mut warnings = Vec::new();

    for inst in &instances {
        let rule = inst.rule;
        let element = ev.element(inst.source);
        let mut env = Env::new();
        env.insert(rule.source_var.clone(), Value::Elem(inst.source));
        if let (Some(f), Some(item)) = (&rule.foreach, &inst.item) {
            env.insert(f.var.clone(), item.clone());
        }
        for (t, id) in rule.targets.iter().zip(&inst.ids) {
            env.insert(t.var.clone(), Value::Target(id.clone()));
        }
        for (spec, id) in rule.targets.iter().zip(&inst.ids) {
            match bind_target(&ev, &trace, spec, id, &env) {
                Ok(e) => built.push(e),
                Err(BindFailure::Error(error)) => return Err(eval_err(rule, element, error)),
                Err(BindFailure::Unresolved { binding, referenced }) => {
                    if !lenient {
                        return Err(ExecError::Unresolved {
                            rule: rule.name.clone(),
                            element: element.id.clone(),
                            binding,
                            referenced,
                        });
                    }
                    warnings.push(format!(
                        "dropped `{id}` (rule `{}`): {binding} refers to unmatched `{referenced}`",
                        rule.name
                    ));
                    dropped.insert(id.clone());
                }
            }
        }
    }

    cascade_drops(&mut built, &mut dropped, &mut warnings);

    let model = CartographyModel {
        schema_name: target_schema.name().into(),
        elements: built,
    }
    .canonical();
    let report = validate(&model, target_schema);
    if !report.ok {
        return Err(ExecError::OutputInvalid(report.errors().cloned().collect()));
    }
    Ok(ExecOutcome {
        model,
        trace,
        warnings,
    })
}

/// Removes elements that point at dropped ones; members are pruned instead of
/// dropping the whole group.
fn cascade_drops(built: &mut Vec<Element>, dropped: &mut BTreeSet<String>, warnings: &mut Vec<String>) {
    if dropped.is_empty() {
        return;
    }
    loop {
        let mut changed = false;
        built.retain(|e| {
            let refs = [&e.source, &e.target, &e.container];
            let hit = refs.iter().filter_map(|r| r.as_deref()).find(|r| dropped.contains(*r));
            match hit {
                Some(r) => {
                    warnings.push(format!("dropped `{}`: it refers to dropped `{r}`", e.id));
                    dropped.insert(e.id.clone());
                    changed = true;
                    false
                }
                None => true,
            }
        });
        if !changed {
            break;
        }
    }
    for e in built.iter_mut() {
        let before = e.members.len();
        e.members.retain(|m| !dropped.contains(m));
        if e.members.len() != before {
            warnings.push(format!("`{}`: pruned {} dropped member(s)", e.id, before - e.members.len()));
        }
    }
}

enum BindFailure {
    Error(EvalError),
    Unresolved { binding: String, referenced: String },
}

impl From<EvalError> for BindFailure {
    fn from(e: EvalError) -> Self {
        BindFailure::Error(e)
    }
}

fn reference(
    ev: &Evaluator<'_>,
    trace: &TraceMap,
    field: &FieldPath,
    value: &Value,
) -> Result<String, BindFailure> {
    match value {
        Value::Target(id) => Ok(id.clone()),
        Value::Elem(p) => {
            let src = &ev.element(*p).id;
            trace
                .resolve(src)
                .map(ToString::to_string)
                .ok_or_else(|| BindFailure::Unresolved {
                    binding: field.to_string(),
                    referenced: src.clone(),
                })
        }
        other => Err(BindFailure::Error(EvalError::Type(format!(
            "`{field}` expects an element, got {}",
            other.type_label()
        )))),
    }
}

fn bind_target(
    ev: &Evaluator<'_>,
    trace: &TraceMap,
    spec: &TargetSpec,
    id: &str,
    env: &Env,
) -> Result<Element, BindFailure> {
    let mut out = Element::new(id, spec.type_name.as_str(), "");
    let mut lat = None;
    let mut lon = None;
    for b in &spec.bindings {
        if b.field == FieldPath::Id {
            continue;
        }
        let value = ev.evaluate(&b.expr, env)?;
        let type_err = |want: &str| {
            BindFailure::Error(EvalError::Type(format!(
                "`{}` expects {want}, got {}",
                b.field,
                value.type_label()
            )))
        };
        match &b.field {
            FieldPath::Id => unreachable!(),
            FieldPath::Name => match &value {
                Value::Str(s) => out.name = s.clone(),
                _ => return Err(type_err("a string")),
            },
            FieldPath::Source | FieldPath::Target => {
                let r = reference(ev, trace, &b.field, &value)?;
                if b.field == FieldPath::Source {
                    out.source = Some(r);
                } else {
                    out.target = Some(r);
                }
            }
            FieldPath::Container => {
                if value != Value::Null {
                    out.container = Some(reference(ev, trace, &b.field, &value)?);
                }
            }
            FieldPath::Members => {
                let items = match value {
                    Value::Coll(items) => items,
                    Value::Null => Vec::new(),
                    single => alloc::vec![single],
                };
                for item in &items {
                    let m = reference(ev, trace, &b.field, item)?;
                    if !out.members.contains(&m) {
                        out.members.push(m);
                    }
                }
            }
            FieldPath::LocatorLat | FieldPath::LocatorLon => match value {
                Value::Num(n) if b.field == FieldPath::LocatorLat => lat = Some(n),
                Value::Num(n) => lon = Some(n),
                Value::Null => {}
                _ => return Err(type_err("a number")),
            },
            FieldPath::LocatorValue => match &value {
                Value::Str(s) => out.locator = Some(Locator::Plain(s.clone())),
                Value::Null => {}
                _ => return Err(type_err("a string")),
            },
            FieldPath::Metadata(key) => match value.as_meta() {
                Some(m) => {
                    out.metadata.insert(key.clone(), m);
                }
                None if value == Value::Null => {}
                None => return Err(type_err("a scalar")),
            },
        }
    }
    match (lat, lon) {
        (Some(lat), Some(lon)) => out.locator = Some(Locator::Geo { lat, lon }),
        (None, None) => {}
        _ => {
            return Err(BindFailure::Error(EvalError::Other(
                "a geo locator needs both locator.lat and locator.lon".into(),
            )))
        }
    }
    Ok(out)
}
