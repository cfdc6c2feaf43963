use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformationAst {
    pub name: String,
    pub source_schema: String,
    pub target_schema: String,
    /// Drop elements whose references cannot be resolved instead of failing.
    pub lenient: bool,
    pub rules: Vec<Rule>,
}

impl TransformationAst {
    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub name: String,
    pub source_var: String,
    pub source_type: String,
    pub guard: Option<Expr>,
    pub foreach: Option<Foreach>,
    /// Never empty; the first entry is the primary target used for traces.
    pub targets: Vec<TargetSpec>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Foreach {
    pub var: String,
    pub collection: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    pub var: String,
    pub type_name: String,
    pub bindings: Vec<Binding>,
    pub pos: Pos,
}

impl TargetSpec {
    pub fn binding(&self, field: &FieldPath) -> Option<&Binding> {
        self.bindings.iter().find(|b| b.field == *field)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Binding {
    pub field: FieldPath,
    pub expr: Expr,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum FieldPath {
    Id,
    Name,
    Source,
    Target,
    LocatorLat,
    LocatorLon,
    LocatorValue,
    Container,
    Members,
    Metadata(String),
}

impl FieldPath {
    pub fn parse(path: &str) -> Option<FieldPath> {
        Some(match path {
            "id" => FieldPath::Id,
            "name" => FieldPath::Name,
            "source" => FieldPath::Source,
            "target" => FieldPath::Target,
            "locator.lat" => FieldPath::LocatorLat,
            "locator.lon" => FieldPath::LocatorLon,
            "locator.value" => FieldPath::LocatorValue,
            "container" => FieldPath::Container,
            "members" => FieldPath::Members,
            _ => {
                let key = path.strip_prefix("metadata.")?;
                if key.is_empty() {
                    return None;
                }
                FieldPath::Metadata(key.into())
            }
        })
    }
}

impl fmt::Display for FieldPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldPath::Id => f.write_str("id"),
            FieldPath::Name => f.write_str("name"),
            FieldPath::Source => f.write_str("source"),
            FieldPath::Target => f.write_str("target"),
            FieldPath::LocatorLat => f.write_str("locator.lat"),
            FieldPath::LocatorLon => f.write_str("locator.lon"),
            FieldPath::LocatorValue => f.write_str("locator.value"),
            FieldPath::Container => f.write_str("container"),
            FieldPath::Members => f.write_str("members"),
            FieldPath::Metadata(k) => write!(f, "metadata.{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Literal(Literal),
    Var(String),
    Field(Box<Expr>, Field),
    /// Type-name arguments are stored as string literals.
    Call(Builtin, Vec<Expr>),
    /// `select(collection, var, predicate)`
    Select {
        collection: Box<Expr>,
        var: String,
        predicate: Box<Expr>,
    },
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Str(String),
    Num(f64),
    Bool(bool),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Id,
    Name,
    Type,
    Source,
    Target,
}

impl Field {
    pub fn from_name(name: &str) -> Option<Field> {
        Some(match name {
            "id" => Field::Id,
            "name" => Field::Name,
            "type" => Field::Type,
            "source" => Field::Source,
            "target" => Field::Target,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Eq,
    Ne,
    And,
    Or,
    Add,
}

macro_rules! builtins {
    ($($variant:ident => $name:literal, $arity:literal, [$($ty:literal),*];)*) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq)]
        pub enum Builtin {
            $($variant,)*
        }

        impl Builtin {
            pub fn from_name(name: &str) -> Option<Builtin> {
                match name {
                    $($name => Some(Builtin::$variant),)*
                    _ => None,
                }
            }

            pub fn name(self) -> &'static str {
                match self {
                    $(Builtin::$variant => $name,)*
                }
            }

            pub fn arity(self) -> usize {
                match self {
                    $(Builtin::$variant => $arity,)*
                }
            }

            /// Argument positions that name a type rather than hold a value.
            pub fn type_args(self) -> &'static [usize] {
                match self {
                    $(Builtin::$variant => &[$($ty),*],)*
                }
            }
        }
    };
}

builtins! {
    AllOf => "allOf", 1, [0];
    SourceOf => "sourceOf", 1, [];
    TargetOf => "targetOf", 1, [];
    Incoming => "incoming", 2, [1];
    Outgoing => "outgoing", 2, [1];
    Meta => "meta", 2, [];
    KindOf => "kindOf", 2, [1];
    Pairs => "pairs", 2, [];
    First => "first", 1, [];
    Second => "second", 1, [];
    Resolve => "resolve", 2, [];
    ContainerOf => "containerOf", 1, [];
    Contents => "contents", 2, [1];
    MembersOf => "membersOf", 1, [];
    Single => "single", 1, [];
    Nth => "nth", 2, [];
    Count => "count", 1, [];
    IsEmpty => "isEmpty", 1, [];
    ToNumber => "toNumber", 1, [];
    ToString => "toString", 1, [];
    Attr => "attr", 2, [];
    Text => "text", 1, [];
    Cell => "cell", 2, [];
}
