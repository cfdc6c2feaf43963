use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;

const KEYWORDS: &[&str] = &[
    "transformation", "rule", "from", "to", "foreach", "in", "and", "or", "not", "true", "false",
];

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].tok
    }

    fn pos(&self) -> Pos {
        self.tokens[self.at].pos
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let pos = self.pos();
        ParseError::Syntax {
            line: pos.line,
            column: pos.column,
            expected: expected.iter().map(|s| (*s).to_string()).collect(),
            found: self.peek().to_string(),
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> Result<Pos, ParseError> {
        if self.is_keyword(kw) {
            Ok(self.advance().pos)
        } else {
            Err(self.error(&[&format!("`{kw}`")]))
        }
    }

    fn expect(&mut self, tok: Tok, label: &str) -> Result<Pos, ParseError> {
        if *self.peek() == tok {
            Ok(self.advance().pos)
        } else {
            Err(self.error(&[label]))
        }
    }

    /// An identifier that is not a reserved word.
    fn ident(&mut self) -> Result<(String, Pos), ParseError> {
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                Ok((s, self.advance().pos))
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn transformation(&mut self) -> Result<TransformationAst, ParseError> {
        let mut ast = TransformationAst {
            name: String::new(),
            source_schema: String::new(),
            target_schema: String::new(),
            lenient: false,
            rules: Vec::new(),
        };
        if self.is_keyword("transformation") {
            self.advance();
            ast.name = self.ident()?.0;
            self.keyword("from")?;
            ast.source_schema = self.ident()?.0;
            self.keyword("to")?;
            ast.target_schema = self.ident()?.0;
            if self.is_keyword("lenient") {
                self.advance();
                ast.lenient = true;
            } else if self.is_keyword("strict") {
                self.advance();
            }
        }
        loop {
            if self.is_keyword("rule") {
                let rule = self.rule()?;
                if ast.rule(&rule.name).is_some() {
                    return Err(ParseError::DuplicateRule(rule.name));
                }
                ast.rules.push(rule);
            } else if *self.peek() == Tok::Eof {
                return Ok(ast);
            } else if ast.rules.is_empty() && ast.name.is_empty() {
                return Err(self.error(&["`transformation`", "`rule`"]));
            } else {
                return Err(self.error(&["`rule`", "end of input"]));
            }
        }
    }

    fn rule(&mut self) -> Result<Rule, ParseError> {
        let pos = self.keyword("rule")?;
        let (name, _) = self.ident()?;
        self.expect(Tok::LBrace, "`{`")?;
        self.keyword("from")?;
        let (source_var, _) = self.ident()?;
        self.expect(Tok::Colon, "`:`")?;
        let (source_type, _) = self.ident()?;

        let guard = if *self.peek() == Tok::LParen {
            self.advance();
            let e = self.expr()?;
            self.expect(Tok::RParen, "`)`")?;
            Some(e)
        } else {
            None
        };

        let foreach = if self.is_keyword("foreach") {
            self.advance();
            let (var, _) = self.ident()?;
            self.keyword("in")?;
            let collection = self.expr()?;
            Some(Foreach { var, collection })
        } else {
            None
        };

        let mut targets = Vec::new();
        while self.is_keyword("to") {
            self.advance();
            targets.push(self.target()?);
        }
        if targets.is_empty() {
            let mut expected = vec!["`to`"];
            if guard.is_none() && foreach.is_none() {
                expected.insert(0, "`(`");
            }
            if foreach.is_none() {
                expected.insert(expected.len() - 1, "`foreach`");
            }
            return Err(self.error(&expected));
        }
        self.expect(Tok::RBrace, "`}`").map_err(|_| self.error(&["`to`", "`}`"]))?;
        Ok(Rule {
            name,
            source_var,
            source_type,
            guard,
            foreach,
            targets,
            pos,
        })
    }

    fn target(&mut self) -> Result<TargetSpec, ParseError> {
        let (var, pos) = self.ident()?;
        self.expect(Tok::Colon, "`:`")?;
        let (type_name, _) = self.ident()?;
        self.expect(Tok::LParen, "`(`")?;
        let mut bindings: Vec<Binding> = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                let b = self.binding()?;
                if bindings.iter().any(|o| o.field == b.field) {
                    return Err(ParseError::DuplicateBinding {
                        field: b.field.to_string(),
                        line: b.pos.line,
                        column: b.pos.column,
                    });
                }
                bindings.push(b);
                if *self.peek() == Tok::Comma {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")
            .map_err(|_| self.error(&["`,`", "`)`"]))?;
        Ok(TargetSpec {
            var,
            type_name,
            bindings,
            pos,
        })
    }

    fn binding(&mut self) -> Result<Binding, ParseError> {
        let pos = self.pos();
        let mut path = match self.peek() {
            Tok::Ident(s) => s.clone(),
            _ => return Err(self.error(&["binding field"])),
        };
        self.advance();
        if *self.peek() == Tok::Dot {
            self.advance();
            match self.peek() {
                Tok::Ident(s) => {
                    path.push('.');
                    path.push_str(s);
                    self.advance();
                }
                _ => return Err(self.error(&["field name"])),
            }
        }
        let field = FieldPath::parse(&path).ok_or_else(|| ParseError::IllegalBindingField {
            field: path.clone(),
            reason: "not a bindable field".into(),
            line: pos.line,
            column: pos.column,
        })?;
        self.expect(Tok::Arrow, "`<-`")?;
        let expr = self.expr()?;
        Ok(Binding { field, expr, pos })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.and_expr()?;
        while self.is_keyword("or") {
            let pos = self.advance().pos;
            let rhs = self.and_expr()?;
            lhs = binary(BinOp::Or, lhs, rhs, pos);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.not_expr()?;
        while self.is_keyword("and") {
            let pos = self.advance().pos;
            let rhs = self.not_expr()?;
            lhs = binary(BinOp::And, lhs, rhs, pos);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<Expr, ParseError> {
        if self.is_keyword("not") {
            let pos = self.advance().pos;
            let inner = self.not_expr()?;
            return Ok(Expr {
                kind: ExprKind::Not(Box::new(inner)),
                pos,
            });
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.add_expr()?;
        let op = match self.peek() {
            Tok::Eq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            _ => return Ok(lhs),
        };
        let pos = self.advance().pos;
        let rhs = self.add_expr()?;
        Ok(binary(op, lhs, rhs, pos))
    }

    fn add_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.postfix()?;
        while *self.peek() == Tok::Plus {
            let pos = self.advance().pos;
            let rhs = self.postfix()?;
            lhs = binary(BinOp::Add, lhs, rhs, pos);
        }
        Ok(lhs)
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.primary()?;
        while *self.peek() == Tok::Dot {
            self.advance();
            let pos = self.pos();
            let name = match self.peek() {
                Tok::Ident(s) => s.clone(),
                _ => return Err(self.error(&["field name"])),
            };
            self.advance();
            let field = Field::from_name(&name).ok_or(ParseError::UnknownField {
                name,
                line: pos.line,
                column: pos.column,
            })?;
            e = Expr {
                kind: ExprKind::Field(Box::new(e), field),
                pos,
            };
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        let kind = match self.peek().clone() {
            Tok::Str(s) => {
                self.advance();
                ExprKind::Literal(Literal::Str(s))
            }
            Tok::Num(n) => {
                self.advance();
                ExprKind::Literal(Literal::Num(n))
            }
            Tok::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                return Ok(e);
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.advance();
                ExprKind::Literal(Literal::Bool(s == "true"))
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.advance();
                if *self.peek() == Tok::LParen {
                    return self.call(s, pos);
                }
                ExprKind::Var(s)
            }
            _ => return Err(self.error(&["expression"])),
        };
        Ok(Expr { kind, pos })
    }

    fn call(&mut self, name: String, pos: Pos) -> Result<Expr, ParseError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                args.push(self.expr()?);
                if *self.peek() == Tok::Comma {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")
            .map_err(|_| self.error(&["`,`", "`)`"]))?;

        if name == "select" {
            if args.len() != 3 {
                return Err(ParseError::Arity {
                    name,
                    expected: 3,
                    found: args.len(),
                    line: pos.line,
                    column: pos.column,
                });
            }
            let predicate = args.pop().expect("three args");
            let var_expr = args.pop().expect("three args");
            let collection = args.pop().expect("three args");
            let ExprKind::Var(var) = var_expr.kind else {
                return Err(ParseError::Invalid {
                    message: "second argument of `select` must be a variable name".into(),
                    line: var_expr.pos.line,
                    column: var_expr.pos.column,
                });
            };
            return Ok(Expr {
                kind: ExprKind::Select {
                    collection: Box::new(collection),
                    var,
                    predicate: Box::new(predicate),
                },
                pos,
            });
        }

        let builtin = Builtin::from_name(&name).ok_or_else(|| ParseError::UnknownFunction {
            name: name.clone(),
            line: pos.line,
            column: pos.column,
        })?;
        if args.len() != builtin.arity() {
            return Err(ParseError::Arity {
                name,
                expected: builtin.arity(),
                found: args.len(),
                line: pos.line,
                column: pos.column,
            });
        }
        for &i in builtin.type_args() {
            let arg = &mut args[i];
            match &arg.kind {
                ExprKind::Var(t) => arg.kind = ExprKind::Literal(Literal::Str(t.clone())),
                ExprKind::Literal(Literal::Str(_)) => {}
                _ => {
                    return Err(ParseError::Invalid {
                        message: format!("argument {} of `{name}` must be a type name", i + 1),
                        line: arg.pos.line,
                        column: arg.pos.column,
                    })
                }
            }
        }
        Ok(Expr {
            kind: ExprKind::Call(builtin, args),
            pos,
        })
    }
}

fn binary(op: BinOp, lhs: Expr, rhs: Expr, pos: Pos) -> Expr {
    Expr {
        kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
        pos,
    }
}

fn check_scope(expr: &Expr, scope: &mut Vec<String>) -> Result<(), ParseError> {
    match &expr.kind {
        ExprKind::Literal(_) => Ok(()),
        ExprKind::Var(v) => {
            if scope.iter().any(|s| s == v) {
                Ok(())
            } else {
                Err(ParseError::UnboundVariable {
                    name: v.clone(),
                    line: expr.pos.line,
                    column: expr.pos.column,
                })
            }
        }
        ExprKind::Field(inner, _) | ExprKind::Not(inner) => check_scope(inner, scope),
        ExprKind::Call(_, args) => args.iter().try_for_each(|a| check_scope(a, scope)),
        ExprKind::Select {
            collection,
            var,
            predicate,
        } => {
            check_scope(collection, scope)?;
            scope.push(var.clone());
            let r = check_scope(predicate, scope);
            scope.pop();
            r
        }
        ExprKind::Binary(_, l, r) => {
            check_scope(l, scope)?;
            check_scope(r, scope)
        }
    }
}

fn check_rule_scopes(rule: &Rule) -> Result<(), ParseError> {
    let mut scope = vec![rule.source_var.clone()];
    if let Some(g) = &rule.guard {
        check_scope(g, &mut scope)?;
    }
    if let Some(f) = &rule.foreach {
        check_scope(&f.collection, &mut scope)?;
        scope.push(f.var.clone());
    }
    let mut vars = BTreeSet::new();
    vars.insert(rule.source_var.as_str());
    if let Some(f) = &rule.foreach {
        if !vars.insert(f.var.as_str()) {
            return Err(ParseError::Invalid {
                message: format!("variable `{}` declared twice in rule `{}`", f.var, rule.name),
                line: rule.pos.line,
                column: rule.pos.column,
            });
        }
    }
    for t in &rule.targets {
        if !vars.insert(t.var.as_str()) {
            return Err(ParseError::Invalid {
                message: format!("variable `{}` declared twice in rule `{}`", t.var, rule.name),
                line: t.pos.line,
                column: t.pos.column,
            });
        }
        scope.push(t.var.clone());
    }
    for t in &rule.targets {
        for b in &t.bindings {
            check_scope(&b.expr, &mut scope)?;
        }
    }
    Ok(())
}

/// Parses DSL source. Checks syntax, builtin arities, bindable fields and
/// variable scoping; schema-dependent checks live in `check_transformation`.
pub fn parse_transformation(text: &str) -> Result<TransformationAst, ParseError> {
    let mut p = Parser {
        tokens: tokenize(text)?,
        at: 0,
    };
    let ast = p.transformation()?;
    for rule in &ast.rules {
        check_rule_scopes(rule)?;
    }
    Ok(ast)
}


/// Parses a standalone expression, e.g. for [`super::evaluate`]. Variables
/// are not scope-checked here; evaluation reports unbound ones.
pub fn parse_expression(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        tokens: tokenize(text)?,
        at: 0,
    };
    let expr = p.expr()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(&["end of input"]));
    }
    Ok(expr)
}
