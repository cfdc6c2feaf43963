//! Expression evaluation over a source model.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::ast::{BinOp, Builtin, Expr, ExprKind, Field, Literal};
use super::exec::TraceMap;
use crate::model::{CartographyModel, Element, MetaValue};
use crate::schema::MetamodelSchema;
use crate::spreadsheet::CELL;
use crate::xml::{XML_ATTRIBUTE, XML_TEXT};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Str(String),
    Num(f64),
    Bool(bool),
    /// Position of a source element in the evaluated model.
    Elem(usize),
    /// Id of an element of the model being built.
    Target(String),
    Coll(Vec<Value>),
    Pair(Box<Value>, Box<Value>),
}

impl Value {
    pub fn type_label(&self) -> &'static str {
        match self {
            Value::Null => "null",
            Value::Str(_) => "string",
            Value::Num(_) => "number",
            Value::Bool(_) => "boolean",
            Value::Elem(_) => "element",
            Value::Target(_) => "target element",
            Value::Coll(_) => "collection",
            Value::Pair(..) => "pair",
        }
    }

    pub fn as_meta(&self) -> Option<MetaValue> {
        match self {
            Value::Str(s) => Some(MetaValue::Str(s.clone())),
            Value::Num(n) => Some(MetaValue::Num(*n)),
            Value::Bool(b) => Some(MetaValue::Bool(*b)),
            _ => None,
        }
    }
}

impl From<&MetaValue> for Value {
    fn from(v: &MetaValue) -> Self {
        match v {
            MetaValue::Str(s) => Value::Str(s.clone()),
            MetaValue::Num(n) => Value::Num(*n),
            MetaValue::Bool(b) => Value::Bool(*b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("`{name}` takes {expected} argument(s), got {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("field `{field}` is not available on {on}")]
    WrongKind { field: String, on: String },
    #[error("type error: {0}")]
    Type(String),
    #[error("`{source_id}` has no trace for rule `{rule}`")]
    NoTrace { source_id: String, rule: String },
    #[error("trace lookups are only available while binding targets")]
    TraceUnavailable,
    #[error("{0}")]
    Other(String),
}

pub type Env = BTreeMap<String, Value>;

/// Read-only view of a source model with the adjacency indexes the builtins
/// need. Every collection it hands out is in canonical `(type, id)` order.
pub struct Evaluator<'a> {
    model: &'a CartographyModel,
    schema: &'a MetamodelSchema,
    order: Vec<usize>,
    rank: Vec<usize>,
    by_id: BTreeMap<&'a str, usize>,
    incoming: BTreeMap<usize, Vec<usize>>,
    outgoing: BTreeMap<usize, Vec<usize>>,
    contents: BTreeMap<usize, Vec<usize>>,
    trace: Option<&'a TraceMap>,
}

impl<'a> Evaluator<'a> {
    pub fn new(model: &'a CartographyModel, schema: &'a MetamodelSchema) -> Self {
        let mut order: Vec<usize> = (0..model.elements.len()).collect();
        order.sort_by(|&a, &b| crate::model::canonical_order(&model.elements[a], &model.elements[b]));
        let mut rank = alloc::vec![0; order.len()];
        for (r, &p) in order.iter().enumerate() {
            rank[p] = r;
        }
        let by_id: BTreeMap<&str, usize> = model
            .elements
            .iter()
            .enumerate()
            .map(|(i, e)| (e.id.as_str(), i))
            .collect();
        let mut incoming: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut outgoing: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut contents: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &p in &order {
            let e = &model.elements[p];
            if let Some(&s) = e.source.as_deref().and_then(|s| by_id.get(s)) {
                outgoing.entry(s).or_default().push(p);
            }
            if let Some(&t) = e.target.as_deref().and_then(|t| by_id.get(t)) {
                incoming.entry(t).or_default().push(p);
            }
            if let Some(&c) = e.container.as_deref().and_then(|c| by_id.get(c)) {
                contents.entry(c).or_default().push(p);
            }
        }
        Evaluator {
            model,
            schema,
            order,
            rank,
            by_id,
            incoming,
            outgoing,
            contents,
            trace: None,
        }
    }

    pub(crate) fn with_trace(mut self, trace: &'a TraceMap) -> Self {
        self.trace = Some(trace);
        self
    }

    pub fn model(&self) -> &'a CartographyModel {
        self.model
    }

    pub fn schema(&self) -> &'a MetamodelSchema {
        self.schema
    }

    /// Element positions in canonical order.
    pub fn canonical_positions(&self) -> &[usize] {
        &self.order
    }

    pub fn element(&self, pos: usize) -> &'a Element {
        &self.model.elements[pos]
    }

    /// Value handle for the element with the given id.
    pub fn lookup(&self, id: &str) -> Option<Value> {
        self.by_id.get(id).map(|&p| Value::Elem(p))
    }

    pub fn evaluate(&self, expr: &Expr, env: &Env) -> Result<Value, EvalError> {
        match &expr.kind {
            ExprKind::Literal(l) => Ok(match l {
                Literal::Str(s) => Value::Str(s.clone()),
                Literal::Num(n) => Value::Num(*n),
                Literal::Bool(b) => Value::Bool(*b),
            }),
            ExprKind::Var(v) => env
                .get(v)
                .cloned()
                .ok_or_else(|| EvalError::UnboundVariable(v.clone())),
            ExprKind::Field(inner, field) => {
                let v = self.evaluate(inner, env)?;
                self.field(&v, *field)
            }
            ExprKind::Not(inner) => match self.evaluate(inner, env)? {
                Value::Bool(b) => Ok(Value::Bool(!b)),
                other => Err(EvalError::Type(format!("`not` expects a boolean, got {}", other.type_label()))),
            },
            ExprKind::Binary(op, l, r) => self.binary(*op, l, r, env),
            ExprKind::Select {
                collection,
                var,
                predicate,
            } => {
                let items = self.collection(self.evaluate(collection, env)?, "select")?;
                let mut scope = env.clone();
                let mut kept = Vec::new();
                for item in items {
                    scope.insert(var.clone(), item.clone());
                    match self.evaluate(predicate, &scope)? {
                        Value::Bool(true) => kept.push(item),
                        Value::Bool(false) => {}
                        other => {
                            return Err(EvalError::Type(format!(
                                "`select` predicate must be boolean, got {}",
                                other.type_label()
                            )))
                        }
                    }
                }
                Ok(Value::Coll(kept))
            }
            ExprKind::Call(builtin, args) => {
                if args.len() != builtin.arity() {
                    return Err(EvalError::Arity {
                        name: builtin.name().into(),
                        expected: builtin.arity(),
                        found: args.len(),
                    });
                }
                let values = args
                    .iter()
                    .map(|a| self.evaluate(a, env))
                    .collect::<Result<Vec<_>, _>>()?;
                self.call(*builtin, values)
            }
        }
    }

    fn binary(&self, op: BinOp, l: &Expr, r: &Expr, env: &Env) -> Result<Value, EvalError> {
        let lhs = self.evaluate(l, env)?;
        match op {
            BinOp::And | BinOp::Or => {
                let Value::Bool(a) = lhs else {
                    return Err(EvalError::Type(format!("logical operand must be boolean, got {}", lhs.type_label())));
                };
                if (op == BinOp::And && !a) || (op == BinOp::Or && a) {
                    return Ok(Value::Bool(a));
                }
                match self.evaluate(r, env)? {
                    Value::Bool(b) => Ok(Value::Bool(b)),
                    other => Err(EvalError::Type(format!("logical operand must be boolean, got {}", other.type_label()))),
                }
            }
            BinOp::Eq => Ok(Value::Bool(lhs == self.evaluate(r, env)?)),
            BinOp::Ne => Ok(Value::Bool(lhs != self.evaluate(r, env)?)),
            BinOp::Add => match (lhs, self.evaluate(r, env)?) {
                (Value::Str(a), Value::Str(b)) => Ok(Value::Str(a + &b)),
                (Value::Num(a), Value::Num(b)) => Ok(Value::Num(a + b)),
                (a, b) => Err(EvalError::Type(format!(
                    "cannot add {} and {}",
                    a.type_label(),
                    b.type_label()
                ))),
            },
        }
    }

    fn elem(&self, v: &Value, what: &str) -> Result<&'a Element, EvalError> {
        match v {
            Value::Elem(p) => Ok(&self.model.elements[*p]),
            other => Err(EvalError::Type(format!("{what} expects an element, got {}", other.type_label()))),
        }
    }

    fn str_arg<'v>(&self, v: &'v Value, what: &str) -> Result<&'v str, EvalError> {
        match v {
            Value::Str(s) => Ok(s),
            other => Err(EvalError::Type(format!("{what} expects a string, got {}", other.type_label()))),
        }
    }

    fn collection(&self, v: Value, what: &str) -> Result<Vec<Value>, EvalError> {
        match v {
            Value::Coll(items) => Ok(items),
            other => Err(EvalError::Type(format!("{what} expects a collection, got {}", other.type_label()))),
        }
    }

    fn is_relationship(&self, e: &Element) -> bool {
        self.schema
            .core_kind_of(&e.type_name)
            .is_ok_and(|k| k.is_relationship())
    }

    fn endpoint(&self, e: &Element, id: Option<&str>, field: &str) -> Result<Value, EvalError> {
        if !self.is_relationship(e) {
            return Err(EvalError::WrongKind {
                field: field.into(),
                on: format!("`{}` ({})", e.id, e.type_name),
            });
        }
        let id = id.unwrap_or_default();
        self.lookup(id)
            .ok_or_else(|| EvalError::Other(format!("`{}` has a dangling {field} `{id}`", e.id)))
    }

    fn field(&self, v: &Value, field: Field) -> Result<Value, EvalError> {
        let Value::Elem(p) = v else {
            return Err(EvalError::WrongKind {
                field: format!("{field:?}").to_lowercase(),
                on: v.type_label().into(),
            });
        };
        let e = &self.model.elements[*p];
        Ok(match field {
            Field::Id => Value::Str(e.id.clone()),
            Field::Name => Value::Str(e.name.clone()),
            Field::Type => Value::Str(e.type_name.clone()),
            Field::Source => return self.endpoint(e, e.source.as_deref(), "source"),
            Field::Target => return self.endpoint(e, e.target.as_deref(), "target"),
        })
    }

    fn typed(&self, list: Option<&Vec<usize>>, type_name: &str) -> Value {
        Value::Coll(
            list.into_iter()
                .flatten()
                .filter(|&&p| self.schema.is_subtype(&self.model.elements[p].type_name, type_name))
                .map(|&p| Value::Elem(p))
                .collect(),
        )
    }

    fn contained(&self, e: &Element, type_name: &str) -> impl Iterator<Item = &'a Element> + '_ {
        let pos = self.by_id.get(e.id.as_str()).copied();
        let type_name = type_name.to_string();
        pos.and_then(|p| self.contents.get(&p))
            .into_iter()
            .flatten()
            .map(|&c| &self.model.elements[c])
            .filter(move |c| self.schema.is_subtype(&c.type_name, &type_name))
    }

    fn text_of(&self, e: &Element, out: &mut String, depth: usize) {
        if depth > 4096 {
            return;
        }
        let Some(&p) = self.by_id.get(e.id.as_str()) else { return };
        // Injected ids are zero-padded pre-order numbers: id order is document order.
        let mut children: Vec<&Element> =
            self.contents.get(&p).into_iter().flatten().map(|&c| &self.model.elements[c]).collect();
        children.sort_by(|a, b| a.id.cmp(&b.id));
        for child in children {
            if child.type_name == XML_TEXT {
                if let Some(MetaValue::Str(s)) = child.metadata.get("value") {
                    out.push_str(s);
                }
            } else if child.type_name != XML_ATTRIBUTE {
                self.text_of(child, out, depth + 1);
            }
        }
    }

    fn call(&self, builtin: Builtin, args: Vec<Value>) -> Result<Value, EvalError> {
        let name = builtin.name();
        match builtin {
            Builtin::AllOf => {
                let t = self.str_arg(&args[0], name)?;
                Ok(Value::Coll(
                    self.order
                        .iter()
                        .filter(|&&p| self.schema.is_subtype(&self.model.elements[p].type_name, t))
                        .map(|&p| Value::Elem(p))
                        .collect(),
                ))
            }
            Builtin::SourceOf => {
                let e = self.elem(&args[0], name)?;
                self.endpoint(e, e.source.as_deref(), "source")
            }
            Builtin::TargetOf => {
                let e = self.elem(&args[0], name)?;
                self.endpoint(e, e.target.as_deref(), "target")
            }
            Builtin::Incoming | Builtin::Outgoing => {
                self.elem(&args[0], name)?;
                let Value::Elem(p) = args[0] else { unreachable!() };
                let t = self.str_arg(&args[1], name)?;
                let index = if builtin == Builtin::Incoming { &self.incoming } else { &self.outgoing };
                Ok(self.typed(index.get(&p), t))
            }
            Builtin::Meta => {
                let e = self.elem(&args[0], name)?;
                let key = self.str_arg(&args[1], name)?;
                Ok(e.metadata.get(key).map_or(Value::Null, Value::from))
            }
            Builtin::KindOf => {
                let e = self.elem(&args[0], name)?;
                let t = self.str_arg(&args[1], name)?;
                Ok(Value::Bool(self.schema.is_subtype(&e.type_name, t)))
            }
            Builtin::Pairs => {
                let mut args = args.into_iter();
                let left = self.collection(args.next().expect("arity"), name)?;
                let right = self.collection(args.next().expect("arity"), name)?;
                let mut out = Vec::with_capacity(left.len() * right.len());
                for a in &left {
                    for b in &right {
                        out.push(Value::Pair(Box::new(a.clone()), Box::new(b.clone())));
                    }
                }
                Ok(Value::Coll(out))
            }
            Builtin::First | Builtin::Second => match args.into_iter().next().expect("arity") {
                Value::Pair(a, b) => Ok(if builtin == Builtin::First { *a } else { *b }),
                other => Err(EvalError::Type(format!("`{name}` expects a pair, got {}", other.type_label()))),
            },
            Builtin::Resolve => {
                let e = self.elem(&args[0], name)?;
                let rule = self.str_arg(&args[1], name)?;
                let trace = self.trace.ok_or(EvalError::TraceUnavailable)?;
                trace
                    .resolve_rule(&e.id, rule)
                    .map(|id| Value::Target(id.to_string()))
                    .ok_or_else(|| EvalError::NoTrace {
                        source_id: e.id.clone(),
                        rule: rule.into(),
                    })
            }
            Builtin::ContainerOf => {
                let e = self.elem(&args[0], name)?;
                Ok(e.container
                    .as_deref()
                    .and_then(|c| self.lookup(c))
                    .unwrap_or(Value::Null))
            }
            Builtin::Contents => {
                self.elem(&args[0], name)?;
                let Value::Elem(p) = args[0] else { unreachable!() };
                let t = self.str_arg(&args[1], name)?;
                Ok(self.typed(self.contents.get(&p), t))
            }
            Builtin::MembersOf => {
                let e = self.elem(&args[0], name)?;
                let mut members: Vec<usize> =
                    e.members.iter().filter_map(|m| self.by_id.get(m.as_str()).copied()).collect();
                members.sort_by_key(|&p| self.rank[p]);
                Ok(Value::Coll(members.into_iter().map(Value::Elem).collect()))
            }
            Builtin::Single => {
                let items = self.collection(args.into_iter().next().expect("arity"), name)?;
                match <[Value; 1]>::try_from(items) {
                    Ok([one]) => Ok(one),
                    Err(items) => Err(EvalError::Other(format!(
                        "`single` expects exactly one item, got {}",
                        items.len()
                    ))),
                }
            }
            Builtin::Nth => {
                let mut args = args.into_iter();
                let items = self.collection(args.next().expect("arity"), name)?;
                let k = match args.next().expect("arity") {
                    Value::Num(k) if k >= 1.0 && k == (k as u64) as f64 => k as usize,
                    other => return Err(EvalError::Type(format!("`nth` index must be a positive integer, got {other:?}"))),
                };
                let len = items.len();
                items
                    .into_iter()
                    .nth(k - 1)
                    .ok_or_else(|| EvalError::Other(format!("`nth` index {k} out of range for {len} item(s)")))
            }
            Builtin::Count => {
                let items = self.collection(args.into_iter().next().expect("arity"), name)?;
                Ok(Value::Num(items.len() as f64))
            }
            Builtin::IsEmpty => {
                let items = self.collection(args.into_iter().next().expect("arity"), name)?;
                Ok(Value::Bool(items.is_empty()))
            }
            Builtin::ToNumber => match &args[0] {
                Value::Num(n) => Ok(Value::Num(*n)),
                Value::Str(s) => s
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|n| n.is_finite())
                    .map(Value::Num)
                    .ok_or_else(|| EvalError::Type(format!("`{s}` is not a number"))),
                Value::Null => Ok(Value::Null),
                other => Err(EvalError::Type(format!("`toNumber` cannot convert {}", other.type_label()))),
            },
            Builtin::ToString => match &args[0] {
                Value::Str(s) => Ok(Value::Str(s.clone())),
                Value::Num(n) => Ok(Value::Str(format!("{n}"))),
                Value::Bool(b) => Ok(Value::Str(format!("{b}"))),
                Value::Null => Ok(Value::Null),
                other => Err(EvalError::Type(format!("`toString` cannot convert {}", other.type_label()))),
            },
            Builtin::Attr => {
                let e = self.elem(&args[0], name)?;
                let key = self.str_arg(&args[1], name)?;
                Ok(self
                    .contained(e, XML_ATTRIBUTE)
                    .find(|a| a.name == key)
                    .and_then(|a| a.metadata.get("value"))
                    .map_or(Value::Null, Value::from))
            }
            Builtin::Text => {
                let e = self.elem(&args[0], name)?;
                let mut out = String::new();
                self.text_of(e, &mut out, 0);
                Ok(Value::Str(out))
            }
            Builtin::Cell => {
                let e = self.elem(&args[0], name)?;
                let column = match &args[1] {
                    Value::Num(c) => *c,
                    other => return Err(EvalError::Type(format!("`cell` column must be a number, got {}", other.type_label()))),
                };
                Ok(self
                    .contained(e, CELL)
                    .find(|c| c.metadata.get("column") == Some(&MetaValue::Num(column)))
                    .and_then(|c| c.metadata.get("value"))
                    .map_or(Value::Null, Value::from))
            }
        }
    }
}

/// Evaluates a standalone expression (no trace available).
pub fn evaluate(
    expr: &Expr,
    env: &Env,
    model: &CartographyModel,
    schema: &MetamodelSchema,
) -> Result<Value, EvalError> {
    Evaluator::new(model, schema).evaluate(expr, env)
}
