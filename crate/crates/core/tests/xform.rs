use cartopipe_core::model::{CartographyModel, Element};
use cartopipe_core::schema::{load_schema, MetamodelSchema};
use cartopipe_core::xform::{
    evaluate, execute, parse_expression, parse_transformation, Env, EvalError, ExecError, ExecOptions,
    ParseError, Value,
};
use cartopipe_core::{parse_model, serialize_model, validate};

const TOOLS_SCHEMA: &str = include_str!("../../../fixtures/tools/tools.cartoschema.json");
const EXTRACT_TOOLS: &str = include_str!("../../../fixtures/tools/ExtractTools.carto.tx");
const MINIMAL: &str = include_str!("../../../fixtures/tools/minimal.carto.json");

fn tools() -> MetamodelSchema {
    load_schema(TOOLS_SCHEMA).unwrap()
}

fn minimal() -> CartographyModel {
    parse_model(MINIMAL).unwrap()
}

fn run(tx: &str, model: &CartographyModel, schema: &MetamodelSchema) -> Result<CartographyModel, ExecError> {
    let ast = parse_transformation(tx).unwrap();
    execute(&ast, model, schema, schema, ExecOptions::default()).map(|o| o.model)
}

#[test]
fn identity_rule_ast() {
    let ast = parse_transformation("rule E { from e : Entity to t : Entity (name <- e.name) }").unwrap();
    assert_eq!(ast.rules.len(), 1);
    assert_eq!(ast.rules[0].targets.len(), 1);
    assert_eq!(ast.rules[0].targets[0].bindings.len(), 1);
    assert_eq!(ast.name, "");
}

#[test]
fn extract_tools_ast() {
    let ast = parse_transformation(EXTRACT_TOOLS).unwrap();
    assert_eq!(ast.name, "ExtractTools");
    assert_eq!((ast.source_schema.as_str(), ast.target_schema.as_str()), ("Tools", "Tools"));
    assert_eq!(ast.rules.len(), 2);
    assert!(ast.rules[0].foreach.is_none());
    let compose = &ast.rules[1];
    assert_eq!(compose.name, "Compose");
    assert_eq!(compose.foreach.as_ref().unwrap().var, "p");
}

#[test]
fn reference_listing_as_printed_is_rejected() {
    // `t` is not in scope inside rule Compose.
    let printed = EXTRACT_TOOLS.replace("name <- f.name", "name <- t.name");
    match parse_transformation(&printed) {
        Err(ParseError::UnboundVariable { name, .. }) => assert_eq!(name, "t"),
        other => panic!("expected unbound variable, got {other:?}"),
    }
}

#[test]
fn illegal_binding_field() {
    let err = parse_transformation("rule R { from x : Tool to y : Export (lat <- 1) }").unwrap_err();
    assert!(matches!(err, ParseError::IllegalBindingField { ref field, .. } if field == "lat"), "{err:?}");
}

#[test]
fn locator_binding_on_relationship_is_rejected_by_schema_check() {
    let ast = parse_transformation(
        "rule R { from x : Tool to y : Export (locator.lat <- 1, locator.lon <- 2, source <- x, target <- x) }",
    )
    .unwrap();
    let err = execute(&ast, &minimal(), &tools(), &tools(), ExecOptions::default()).unwrap_err();
    assert!(
        matches!(err, ExecError::Check(ParseError::IllegalBindingField { ref field, .. }) if field == "locator.lat"),
        "{err:?}"
    );
}

#[test]
fn syntax_errors_carry_position_and_expectation() {
    let err = parse_transformation("rule R {\n  from x Tool }").unwrap_err();
    match err {
        ParseError::Syntax {
            line,
            column,
            expected,
            found,
        } => {
            assert_eq!((line, column), (2, 10));
            assert!(expected.iter().any(|e| e.contains(':')), "{expected:?}");
            assert!(found.contains("Tool"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn static_errors() {
    let cases = [
        ("rule R { from x : Tool to y : Tool (name <- nope(x)) }", "unknown function"),
        ("rule R { from x : Tool to y : Tool (name <- meta(x)) }", "argument"),
        ("rule R { from x : Tool to y : Tool (name <- x.colour) }", "unknown field"),
        ("rule R { from x : Tool to y : Tool (name <- x.name, name <- x.id) }", "bound twice"),
        (
            "rule R { from x : Tool to y : Tool (name <- x.name) } rule R { from x : Format to y : Format (name <- x.name) }",
            "defined twice",
        ),
    ];
    for (src, needle) in cases {
        let msg = parse_transformation(src).unwrap_err().to_string();
        assert!(msg.contains(needle), "{src}: {msg}");
    }
}

#[test]
fn unknown_types_are_reported() {
    let schema = tools();
    for src in [
        "rule R { from x : Gadget to y : Tool (name <- x.name) }",
        "rule R { from x : Tool to y : Gadget (name <- x.name) }",
        "rule R { from x : Tool (isEmpty(allOf(Gadget))) to y : Tool (name <- x.name) }",
    ] {
        let ast = parse_transformation(src).unwrap();
        let err = execute(&ast, &minimal(), &schema, &schema, ExecOptions::default()).unwrap_err();
        assert!(
            matches!(err, ExecError::Check(ParseError::UnknownType { ref name, .. }) if name == "Gadget"),
            "{src}: {err:?}"
        );
    }
}

fn eval_in(expr: &str, env: &[(&str, &str)], model: &CartographyModel, schema: &MetamodelSchema) -> Result<Value, EvalError> {
    let expr = parse_expression(expr).unwrap();
    let pos: Vec<(String, Value)> = env
        .iter()
        .map(|(var, id)| {
            let p = model.elements.iter().position(|e| e.id == *id).unwrap();
            (var.to_string(), Value::Elem(p))
        })
        .collect();
    let env: Env = pos.into_iter().collect();
    evaluate(&expr, &env, model, schema)
}

#[test]
fn evaluate_examples() {
    let m = minimal();
    let s = tools();
    assert_eq!(eval_in("kindOf(e, Entity)", &[("e", "t1")], &m, &s), Ok(Value::Bool(true)));
    assert_eq!(eval_in("kindOf(e, Relationship)", &[("e", "t1")], &m, &s), Ok(Value::Bool(false)));
    assert_eq!(eval_in("1 = 1", &[], &m, &s), Ok(Value::Bool(true)));

    let x1 = m.elements.iter().position(|e| e.id == "x1").unwrap();
    assert_eq!(
        eval_in("outgoing(t1, Export)", &[("t1", "t1")], &m, &s),
        Ok(Value::Coll(vec![Value::Elem(x1)]))
    );
    assert_eq!(eval_in("outgoing(t2, Export)", &[("t2", "t2")], &m, &s), Ok(Value::Coll(vec![])));
}

#[test]
fn evaluate_operators_and_builtins() {
    let m = minimal();
    let s = tools();
    let str_ = |v: &str| Ok(Value::Str(v.into()));
    assert_eq!(eval_in("\"a\" + \"b\" + \"c\"", &[], &m, &s), str_("abc"));
    assert_eq!(eval_in("1 + 2 = 3", &[], &m, &s), Ok(Value::Bool(true)));
    assert_eq!(eval_in("not true or true", &[], &m, &s), Ok(Value::Bool(true)));
    assert_eq!(eval_in("not (true or true)", &[], &m, &s), Ok(Value::Bool(false)));
    assert_eq!(eval_in("-1.5 + 2", &[], &m, &s), Ok(Value::Num(0.5)));
    assert_eq!(eval_in("x.source.name", &[("x", "x1")], &m, &s), str_("Alpha"));
    assert_eq!(eval_in("targetOf(x).type", &[("x", "x1")], &m, &s), str_("Format"));
    assert_eq!(eval_in("count(allOf(DirectedRelationship))", &[], &m, &s), Ok(Value::Num(2.0)));
    assert_eq!(eval_in("count(allOf(Entity))", &[], &m, &s), Ok(Value::Num(3.0)));
    assert_eq!(eval_in("nth(allOf(Tool), 2).name", &[], &m, &s), str_("Beta"));
    assert_eq!(eval_in("single(select(allOf(Tool), t, t.name = \"Beta\")).id", &[], &m, &s), str_("t2"));
    assert_eq!(eval_in("count(pairs(allOf(Tool), allOf(Entity)))", &[], &m, &s), Ok(Value::Num(6.0)));
    assert_eq!(eval_in("meta(t, \"weight\")", &[("t", "t1")], &m, &s), Ok(Value::Null));
    assert_eq!(eval_in("toNumber(\" 4.5 \") + 1", &[], &m, &s), Ok(Value::Num(5.5)));
    assert_eq!(eval_in("toString(3)", &[], &m, &s), str_("3"));
    // false and <error> short-circuits
    assert_eq!(eval_in("false and single(allOf(Tool)) = 1", &[], &m, &s), Ok(Value::Bool(false)));
}

#[test]
fn evaluate_errors() {
    let m = minimal();
    let s = tools();
    assert!(matches!(eval_in("y", &[], &m, &s), Err(EvalError::UnboundVariable(v)) if v == "y"));
    assert!(matches!(eval_in("t.source", &[("t", "t1")], &m, &s), Err(EvalError::WrongKind { .. })));
    assert!(matches!(eval_in("1 + \"a\"", &[], &m, &s), Err(EvalError::Type(_))));
    assert!(matches!(eval_in("single(allOf(Tool))", &[], &m, &s), Err(EvalError::Other(_))));
    assert!(matches!(eval_in("not 1", &[], &m, &s), Err(EvalError::Type(_))));
}

fn entity_model() -> CartographyModel {
    CartographyModel::with_elements(
        "",
        vec![
            Element::new("a", "Entity", "A").with_meta("k", 1.0),
            Element::new("b", "Entity", "B"),
            Element::new("c", "Entity", "C"),
        ],
    )
}

#[test]
fn identity_copy_preserves_entities() {
    let core = MetamodelSchema::core();
    let out = run(
        "rule E { from e : Entity to t : Entity (id <- e.id, name <- e.name, metadata.k <- meta(e, \"k\")) }",
        &entity_model(),
        &core,
    )
    .unwrap();
    assert_eq!(out, entity_model().canonical());
}

#[test]
fn auto_ids() {
    let core = MetamodelSchema::core();
    let out = run("rule E { from e : Entity to t : Entity (name <- e.name) to u : Entity (name <- \"u\") }", &entity_model(), &core).unwrap();
    let ids: Vec<&str> = out.elements.iter().map(|e| e.id.as_str()).collect();
    assert_eq!(ids, ["E/a", "E/a/u", "E/b", "E/b/u", "E/c", "E/c/u"]);
}

#[test]
fn filter_rule_keeps_two_tools() {
    let mut model = minimal();
    model.elements.retain(|e| e.type_name == "Tool" || e.type_name == "Format");
    model.push(Element::new("t3", "Tool", "Gamma"));
    model.elements.retain(|e| e.id != "t2");
    // {2 Tools, 1 Format}
    let s = tools();
    let out = run(
        "rule F { from e : Entity (e.type = \"Tool\") to t : Entity (name <- e.name) }",
        &model,
        &s,
    )
    .unwrap();
    let oracle = model.elements.iter().filter(|e| e.type_name == "Tool").count();
    assert_eq!(oracle, 2);
    assert_eq!(out.len(), oracle);
}

#[test]
fn extract_tools_on_minimal_fixture() {
    let s = tools();
    let out = run(EXTRACT_TOOLS, &minimal(), &s).unwrap();
    assert!(validate(&out, &s).ok);
    let ids: Vec<(&str, &str)> = out.elements.iter().map(|e| (e.type_name.as_str(), e.id.as_str())).collect();
    assert_eq!(ids, [("Link", "Compose/f1/0"), ("Tool", "t1"), ("Tool", "t2")]);
    let link = &out.elements[0];
    assert_eq!((link.source.as_deref(), link.target.as_deref()), (Some("t1"), Some("t2")));
    assert_eq!(link.name, "CSV");
}

#[test]
fn ambiguous_match_names_both_rules() {
    let core = MetamodelSchema::core();
    let err = run(
        "rule A { from e : Entity to t : Entity (name <- e.name) } rule B { from e : Entity (e.name = \"B\") to t : Entity (name <- e.name) }",
        &entity_model(),
        &core,
    )
    .unwrap_err();
    assert_eq!(
        err,
        ExecError::Ambiguous {
            element: "b".into(),
            first: "A".into(),
            second: "B".into()
        }
    );
}

const PARTIAL_COPY: &str = "rule T { from t : Tool to c : Tool (id <- t.id, name <- t.name) }
rule X { from x : Export to c : Export (source <- x.source, target <- x.target) }";

#[test]
fn strict_mode_rejects_unresolved_references() {
    let s = tools();
    let err = run(PARTIAL_COPY, &minimal(), &s).unwrap_err();
    match err {
        ExecError::Unresolved {
            rule,
            element,
            binding,
            referenced,
        } => {
            assert_eq!((rule.as_str(), element.as_str(), binding.as_str(), referenced.as_str()), ("X", "x1", "target", "f1"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn lenient_mode_drops_with_warning() {
    let s = tools();
    for src in [format!("transformation P from Tools to Tools lenient {PARTIAL_COPY}"), PARTIAL_COPY.to_string()] {
        let ast = parse_transformation(&src).unwrap();
        let options = if ast.lenient { ExecOptions::default() } else { ExecOptions { lenient: Some(true) } };
        let out = execute(&ast, &minimal(), &s, &s, options).unwrap();
        assert_eq!(out.model.len(), 2);
        assert_eq!(out.warnings.len(), 1, "{:?}", out.warnings);
        assert!(out.warnings[0].contains("f1"));
    }
    // The command-line override also works the other way round.
    let ast = parse_transformation(&format!("transformation P from Tools to Tools lenient {PARTIAL_COPY}")).unwrap();
    assert!(execute(&ast, &minimal(), &s, &s, ExecOptions { lenient: Some(false) }).is_err());
}

#[test]
fn lenient_drops_cascade_through_groups() {
    let core = MetamodelSchema::core();
    let model = CartographyModel::with_elements(
        "",
        vec![
            Element::new("a", "Entity", "A"),
            Element::new("b", "Container", "B"),
            Element::link("r", "Relationship", "a", "b"),
            Element::new("g", "Group", "G").with_members(["a", "r"]),
        ],
    );
    let src = "transformation L from Core to Core lenient
rule E { from e : Entity to t : Entity (id <- e.id, name <- e.name) }
rule R { from r : Relationship to t : Relationship (id <- r.id, source <- r.source, target <- r.target) }
rule G { from g : Group to t : Group (id <- g.id, name <- g.name, members <- membersOf(g)) }";
    let out = run(src, &model, &core).unwrap();
    let ids: Vec<&str> = out.elements.iter().map(|e| e.id.as_str()).collect();
    assert_eq!(ids, ["a", "g"]);
    assert_eq!(out.elements[1].members, ["a"]);
}

#[test]
fn source_must_validate() {
    let s = tools();
    let mut model = minimal();
    model.push(Element::new("z", "Gadget", "Z"));
    assert!(matches!(run(EXTRACT_TOOLS, &model, &s), Err(ExecError::SourceInvalid { .. })));
}

#[test]
fn invalid_output_is_an_error_not_a_model() {
    let core = MetamodelSchema::core();
    // Every source entity produces the same id.
    let err = run("rule E { from e : Entity to t : Entity (id <- \"same\", name <- e.name) }", &entity_model(), &core).unwrap_err();
    assert!(matches!(err, ExecError::DuplicateTargetId(ref id) if id == "same"), "{err:?}");
    // Entities must be named.
    let err = run("rule E { from e : Entity to t : Entity (id <- e.id) }", &entity_model(), &core).unwrap_err();
    assert!(matches!(err, ExecError::OutputInvalid(_)), "{err:?}");
}

#[test]
fn schema_header_must_match_supplied_schemas() {
    let ast = parse_transformation(EXTRACT_TOOLS).unwrap();
    let core = MetamodelSchema::core();
    let err = execute(&ast, &CartographyModel::new(""), &core, &core, ExecOptions::default()).unwrap_err();
    assert!(matches!(err, ExecError::Check(ParseError::SchemaMismatch { .. })), "{err:?}");
}

#[test]
fn output_does_not_depend_on_element_order() {
    let s = tools();
    let reference = serialize_model(&run(EXTRACT_TOOLS, &minimal(), &s).unwrap());
    let mut m = minimal();
    for _ in 0..m.len() {
        m.elements.rotate_left(1);
        assert_eq!(serialize_model(&run(EXTRACT_TOOLS, &m, &s).unwrap()), reference);
        m.elements.reverse();
        assert_eq!(serialize_model(&run(EXTRACT_TOOLS, &m, &s).unwrap()), reference);
    }
}
