use std::collections::{BTreeMap, BTreeSet};

use cartopipe_core::model::{CartographyModel, CoreKind, Element, Locator};
use cartopipe_core::schema::{MetamodelSchema, TypeDef};
use cartopipe_core::xform::{execute, parse_transformation, ExecOptions};
use cartopipe_core::{merge, parse_model, serialize_model, validate};
use proptest::prelude::*;

/// A random forest of types hanging off the core kinds: type `Ti` extends
/// either a core kind or some `Tj` with j < i.
fn schema_strategy() -> impl Strategy<Value = (MetamodelSchema, Vec<(String, String)>)> {
    prop::collection::vec((any::<prop::sample::Index>(), 0usize..5, any::<bool>()), 0..12).prop_map(|spec| {
        let mut edges = Vec::new();
        for (i, (pick, core, to_core)) in spec.into_iter().enumerate() {
            let parent = if to_core || i == 0 {
                CoreKind::ALL[core].name().to_string()
            } else {
                format!("T{}", pick.index(i))
            };
            edges.push((format!("T{i}"), parent));
        }
        let types = edges.iter().map(|(n, p)| TypeDef::new(n.as_str(), p.as_str())).collect();
        (MetamodelSchema::new("Gen", types).unwrap(), edges)
    })
}

fn walk(edges: &[(String, String)], name: &str) -> CoreKind {
    let parents: BTreeMap<&str, &str> = edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    let mut at = name;
    loop {
        if let Some(k) = CoreKind::from_name(at) {
            return k;
        }
        at = parents[at];
    }
}

const NAMES: &[&str] = &["Alpha", "Beta", "Gamma", "Delta"];

fn element_strategy() -> impl Strategy<Value = Element> {
    (
        0usize..6,
        0usize..4,
        prop::option::of((-100.0f64..100.0, -200.0f64..200.0)),
        prop::option::of(0u8..4),
    )
        .prop_map(|(ty, name, geo, w)| {
            let types = ["Entity", "Container", "Group", "Tool", "Format", "Unknown"];
            let mut e = Element::new("", types[ty], NAMES[name]);
            if let Some((lat, lon)) = geo {
                e.locator = Some(Locator::Geo { lat, lon });
            }
            if let Some(w) = w {
                e.metadata.insert("weight".into(), f64::from(w).into());
            }
            e
        })
}

fn model_strategy() -> impl Strategy<Value = CartographyModel> {
    (
        prop::collection::vec(element_strategy(), 0..10),
        prop::collection::vec((any::<prop::sample::Index>(), any::<prop::sample::Index>(), any::<bool>()), 0..6),
    )
        .prop_map(|(mut nodes, links)| {
            for (i, e) in nodes.iter_mut().enumerate() {
                e.id = format!("e{i}");
            }
            let n = nodes.len();
            let mut elements = nodes;
            if n > 0 {
                for (k, (a, b, directed)) in links.into_iter().enumerate() {
                    let t = if directed { "Export" } else { "Relationship" };
                    elements.push(Element::link(format!("r{k}"), t, format!("e{}", a.index(n)), format!("e{}", b.index(n))));
                }
            }
            CartographyModel::with_elements("Tools", elements)
        })
}

fn tools() -> MetamodelSchema {
    MetamodelSchema::new(
        "Tools",
        vec![
            TypeDef::new("Tool", "Entity"),
            TypeDef::new("Format", "Entity"),
            TypeDef::new("Export", "DirectedRelationship"),
        ],
    )
    .unwrap()
}

/// Relationship-free, valid, with unique (type, name) keys per model.
fn keyed_model(prefix: &'static str) -> impl Strategy<Value = CartographyModel> {
    prop::collection::btree_set((0usize..2, 0usize..4), 0..8).prop_map(move |keys| {
        let elements = keys
            .into_iter()
            .enumerate()
            .map(|(i, (t, n))| Element::new(format!("{prefix}{i}"), ["Tool", "Format"][t], NAMES[n]))
            .collect();
        CartographyModel::with_elements("Tools", elements)
    })
}

fn identity_keys(m: &CartographyModel) -> Vec<(String, String)> {
    let mut k: Vec<_> = m.elements.iter().map(|e| (e.type_name.clone(), e.name.clone())).collect();
    k.sort();
    k
}

proptest! {
    #[test]
    fn core_kind_matches_chain_walk((schema, edges) in schema_strategy()) {
        for (name, _) in &edges {
            let kind = schema.core_kind_of(name).unwrap();
            prop_assert_eq!(kind, walk(&edges, name));
            prop_assert_eq!(schema.core_kind_of(kind.name()).unwrap(), kind);
        }
    }

    #[test]
    fn serialization_is_deterministic_and_round_trips(m in model_strategy(), seed in any::<u64>()) {
        let text = serialize_model(&m);
        let mut shuffled = m.clone();
        let n = shuffled.elements.len().max(1);
        shuffled.elements.rotate_left((seed as usize) % n);
        prop_assert_eq!(serialize_model(&shuffled), text.clone());
        let back = parse_model(&text).unwrap();
        prop_assert_eq!(serialize_model(&back), text);
    }

    #[test]
    fn validation_survives_round_trip(m in model_strategy()) {
        let schema = tools();
        let before = validate(&m, &schema);
        let after = validate(&parse_model(&serialize_model(&m)).unwrap(), &schema);
        prop_assert_eq!(before, after);
    }

    #[test]
    fn merge_count_law(a in keyed_model("a"), b in keyed_model("b")) {
        let schema = tools();
        let ka: BTreeSet<_> = identity_keys(&a).into_iter().collect();
        let kb: BTreeSet<_> = identity_keys(&b).into_iter().collect();
        let collisions = ka.intersection(&kb).count();
        let merged = merge(&[a.clone(), b.clone()], &schema).unwrap().model;
        prop_assert_eq!(merged.len(), a.len() + b.len() - collisions);
        let union: Vec<_> = ka.union(&kb).cloned().collect();
        prop_assert_eq!(identity_keys(&merged), union);
    }

    #[test]
    fn merge_is_associative_up_to_ids(a in keyed_model("a"), b in keyed_model("b"), c in keyed_model("c")) {
        let s = tools();
        let flat = merge(&[a.clone(), b.clone(), c.clone()], &s).unwrap().model;
        let left = merge(&[merge(&[a.clone(), b.clone()], &s).unwrap().model, c.clone()], &s).unwrap().model;
        let right = merge(&[a, merge(&[b, c], &s).unwrap().model], &s).unwrap().model;
        prop_assert_eq!(identity_keys(&left), identity_keys(&flat));
        prop_assert_eq!(identity_keys(&right), identity_keys(&flat));
    }

    #[test]
    fn merge_laws(mut m in model_strategy()) {
        let schema = tools();
        // Make identity keys unique inside M so merge has nothing to unify.
        for (i, e) in m.elements.iter_mut().enumerate() {
            if e.source.is_none() {
                e.name = format!("{}{i}", e.name);
            }
        }
        let mut seen = BTreeSet::new();
        m.elements.retain(|e| seen.insert((e.type_name.clone(), e.source.clone(), e.target.clone(), e.name.clone())));
        prop_assume!(validate(&m, &schema).ok);
        let once = merge(&[m.clone()], &schema).unwrap();
        prop_assert_eq!(&once.model, &m.clone().canonical());
        prop_assert!(once.warnings.is_empty());
        let with_empty = merge(&[m.clone(), CartographyModel::new("Tools")], &schema).unwrap().model;
        prop_assert_eq!(&with_empty, &m.canonical());
    }

    #[test]
    fn guards_never_add_targets(m in model_strategy(), name in 0usize..4) {
        let schema = tools();
        prop_assume!(validate(&m, &schema).ok);
        let run = |src: &str| {
            let ast = parse_transformation(src).unwrap();
            execute(&ast, &m, &schema, &schema, ExecOptions::default()).unwrap().model.len()
        };
        let plain = run("rule R { from e : Entity to t : Entity (name <- e.name) }");
        let guarded = run(&format!(
            "rule R {{ from e : Entity (e.name = \"{}\") to t : Entity (name <- e.name) }}",
            NAMES[name]
        ));
        prop_assert!(guarded <= plain);
    }

    #[test]
    fn identity_copy_is_an_isomorphism(m in model_strategy()) {
        let schema = tools();
        prop_assume!(validate(&m, &schema).ok);
        let mut src = String::new();
        for t in ["Entity", "Container", "Group", "Tool", "Format"] {
            let members = if t == "Group" { ", members <- membersOf(e)" } else { "" };
            src.push_str(&format!(
                "rule C{t} {{ from e : {t} (e.type = \"{t}\") to c : {t} (name <- e.name{members}) }}\n"
            ));
        }
        src.push_str("rule CRelationship { from e : Relationship (e.type = \"Relationship\") to c : Relationship (source <- e.source, target <- e.target) }\n");
        src.push_str("rule CExport { from e : Export to c : Export (source <- e.source, target <- e.target) }\n");
        let ast = parse_transformation(&src).unwrap();
        let out = execute(&ast, &m, &schema, &schema, ExecOptions::default()).unwrap();
        let per_type = |m: &CartographyModel| {
            let mut c: BTreeMap<String, usize> = BTreeMap::new();
            for e in &m.elements { *c.entry(e.type_name.clone()).or_default() += 1; }
            c
        };
        prop_assert_eq!(per_type(&out.model), per_type(&m));
        for e in m.elements.iter().filter(|e| e.source.is_some()) {
            let copy = out.model.get(out.trace.resolve(&e.id).unwrap()).unwrap();
            prop_assert_eq!(copy.source.as_deref(), out.trace.resolve(e.source.as_deref().unwrap()));
            prop_assert_eq!(copy.target.as_deref(), out.trace.resolve(e.target.as_deref().unwrap()));
        }
    }
}
