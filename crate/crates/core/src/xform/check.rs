use alloc::format;
use alloc::string::{String, ToString};

use super::ast::{Expr, ExprKind, FieldPath, Literal, TargetSpec, TransformationAst};
use super::ParseError;
use crate::model::CoreKind;
use crate::schema::MetamodelSchema;

fn schema_matches(declared: &str, schema: &MetamodelSchema) -> bool {
    declared.is_empty()
        || declared == schema.name()
        || (declared == "Core" && schema.types().is_empty())
}

fn unknown_type(name: &str, schema: &MetamodelSchema, line: usize, column: usize) -> ParseError {
    ParseError::UnknownType {
        name: name.to_string(),
        schema: schema.name().to_string(),
        line,
        column,
    }
}

fn check_type_args(expr: &Expr, schema: &MetamodelSchema) -> Result<(), ParseError> {
    match &expr.kind {
        ExprKind::Literal(_) | ExprKind::Var(_) => Ok(()),
        ExprKind::Field(inner, _) | ExprKind::Not(inner) => check_type_args(inner, schema),
        ExprKind::Binary(_, l, r) => {
            check_type_args(l, schema)?;
            check_type_args(r, schema)
        }
        ExprKind::Select {
            collection,
            predicate,
            ..
        } => {
            check_type_args(collection, schema)?;
            check_type_args(predicate, schema)
        }
        ExprKind::Call(builtin, args) => {
            for &i in builtin.type_args() {
                if let ExprKind::Literal(Literal::Str(t)) = &args[i].kind {
                    if !schema.contains(t) {
                        return Err(unknown_type(t, schema, args[i].pos.line, args[i].pos.column));
                    }
                }
            }
            args.iter().try_for_each(|a| check_type_args(a, schema))
        }
    }
}

fn check_target(target: &TargetSpec, schema: &MetamodelSchema) -> Result<(), ParseError> {
    let kind = schema
        .core_kind_of(&target.type_name)
        .map_err(|_| unknown_type(&target.type_name, schema, target.pos.line, target.pos.column))?;
    for b in &target.bindings {
        let allowed = match b.field {
            FieldPath::Source | FieldPath::Target => kind.is_relationship(),
            FieldPath::Members => kind == CoreKind::Group,
            FieldPath::LocatorLat | FieldPath::LocatorLon | FieldPath::LocatorValue => {
                kind == CoreKind::Entity
            }
            FieldPath::Id | FieldPath::Name | FieldPath::Container | FieldPath::Metadata(_) => true,
        };
        if !allowed {
            return Err(ParseError::IllegalBindingField {
                field: b.field.to_string(),
                reason: format!("`{}` is of kind {kind}", target.type_name),
                line: b.pos.line,
                column: b.pos.column,
            });
        }
    }
    if kind.is_relationship() {
        for end in [FieldPath::Source, FieldPath::Target] {
            if target.binding(&end).is_none() {
                return Err(ParseError::Invalid {
                    message: format!("relationship target `{}` must bind `{end}`", target.var),
                    line: target.pos.line,
                    column: target.pos.column,
                });
            }
        }
    }
    let lat = target.binding(&FieldPath::LocatorLat).is_some();
    let lon = target.binding(&FieldPath::LocatorLon).is_some();
    let plain = target.binding(&FieldPath::LocatorValue).is_some();
    if lat != lon || (plain && (lat || lon)) {
        return Err(ParseError::Invalid {
            message: String::from("bind either locator.lat and locator.lon together, or locator.value alone"),
            line: target.pos.line,
            column: target.pos.column,
        });
    }
    Ok(())
}

/// Checks every type reference of `ast` against the source and target
/// schemas and every binding against its target's core kind.
pub fn check_transformation(
    ast: &TransformationAst,
    source: &MetamodelSchema,
    target: &MetamodelSchema,
) -> Result<(), ParseError> {
    for (role, declared, schema) in [
        ("source", &ast.source_schema, source),
        ("target", &ast.target_schema, target),
    ] {
        if !schema_matches(declared, schema) {
            return Err(ParseError::SchemaMismatch {
                role,
                declared: declared.clone(),
                given: schema.name().to_string(),
            });
        }
    }
    for rule in &ast.rules {
        if !source.contains(&rule.source_type) {
            return Err(unknown_type(&rule.source_type, source, rule.pos.line, rule.pos.column));
        }
        if let Some(g) = &rule.guard {
            check_type_args(g, source)?;
        }
        if let Some(f) = &rule.foreach {
            check_type_args(&f.collection, source)?;
        }
        for t in &rule.targets {
            check_target(t, target)?;
            for b in &t.bindings {
                check_type_args(&b.expr, source)?;
            }
        }
    }
    Ok(())
}
