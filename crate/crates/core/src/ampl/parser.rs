use super::ast::*;
use super::error::{CompileError, CompileErrorKind, Location};
use super::lexer::{tokenize, Tok, Token};

const RESERVED: &[&str] = &[
    "set", "param", "var", "subject", "to", "s.t.", "maximize", "minimize", "sum", "in", "integer", "binary",
    "data",
];

pub(crate) fn is_reserved(name: &str) -> bool {
    RESERVED.contains(&name)
}

pub(crate) struct TokenStream {
    toks: Vec<Token>,
    pos: usize,
}

impl TokenStream {
    pub(crate) fn new(src: &str) -> Result<Self, CompileError> {
        Ok(TokenStream {
            toks: tokenize(src)?,
            pos: 0,
        })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub(crate) fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub(crate) fn loc(&self) -> Location {
        self.toks[self.pos].loc
    }

    pub(crate) fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub(crate) fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub(crate) fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.next();
            true
        } else {
            false
        }
    }

    pub(crate) fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.next();
            true
        } else {
            false
        }
    }

    pub(crate) fn error(&self, message: impl Into<String>) -> CompileError {
        CompileError::at(CompileErrorKind::Syntax, self.loc(), message)
    }

    pub(crate) fn unexpected(&self, expected: &str) -> CompileError {
        self.error(format!("expected {expected}, found {}", self.peek().describe()))
    }

    pub(crate) fn expect(&mut self, tok: &Tok, context: &str) -> Result<(), CompileError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("{} {context}", tok.describe())))
        }
    }

    pub(crate) fn expect_keyword(&mut self, kw: &str) -> Result<(), CompileError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("'{kw}'")))
        }
    }

    pub(crate) fn name(&mut self, what: &str) -> Result<String, CompileError> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_reserved(&s) => {
                self.next();
                Ok(s)
            }
            Tok::Ident(s) => Err(self.error(format!("'{s}' is a reserved word and cannot name a {what}"))),
            _ => Err(self.unexpected(&format!("{what} name"))),
        }
    }

    pub(crate) fn signed_number(&mut self) -> Result<f64, CompileError> {
        let negative = self.eat(&Tok::Minus);
        if !negative {
            self.eat(&Tok::Plus);
        }
        match *self.peek() {
            Tok::Number(v) => {
                self.next();
                Ok(if negative { -v } else { v })
            }
            _ => Err(self.unexpected("a number")),
        }
    }
}

/// Parses a model document into its declaration lists.
pub fn parse_model(text: &str) -> Result<Model, CompileError> {
    let mut ts = TokenStream::new(text)?;
    let mut model = Model::default();
    while !ts.at_eof() {
        let Tok::Ident(kw) = ts.peek().clone() else {
            return Err(ts.unexpected("a declaration keyword (set, param, var, subject to, maximize, minimize)"));
        };
        match kw.as_str() {
            "set" => {
                ts.next();
                let name = ts.name("set")?;
                end_of_declaration(&mut ts, "set", &name)?;
                model.sets.push(SetDecl { name });
            }
            "param" => {
                ts.next();
                model.params.push(parse_param(&mut ts)?);
            }
            "var" => {
                ts.next();
                model.vars.push(parse_var(&mut ts)?);
            }
            "subject" | "s.t." => {
                ts.next();
                if kw == "subject" {
                    ts.expect_keyword("to")?;
                }
                model.constraints.push(parse_constraint(&mut ts)?);
            }
            "maximize" | "minimize" => {
                ts.next();
                let sense = if kw == "maximize" { Sense::Maximize } else { Sense::Minimize };
                let name = ts.name("objective")?;
                ts.expect(&Tok::Colon, &format!("after objective name '{name}'"))?;
                let expr = parse_expr(&mut ts)?;
                end_of_declaration(&mut ts, "objective", &name)?;
                model.objectives.push(ObjectiveDecl { name, sense, expr });
            }
            _ => {
                return Err(ts.error(format!(
                    "unknown statement '{kw}'; expected set, param, var, subject to, maximize or minimize"
                )))
            }
        }
    }
    Ok(model)
}

fn end_of_declaration(ts: &mut TokenStream, what: &str, name: &str) -> Result<(), CompileError> {
    if ts.eat(&Tok::Semi) {
        Ok(())
    } else {
        Err(ts.error(format!(
            "expected ';' to end the {what} declaration '{name}', found {}",
            ts.peek().describe()
        )))
    }
}

pub(crate) fn parse_indexing(ts: &mut TokenStream, max: usize, owner: &str) -> Result<Vec<IndexEntry>, CompileError> {
    if !ts.eat(&Tok::LBrace) {
        return Ok(Vec::new());
    }
    let start = ts.loc();
    let mut entries = Vec::new();
    loop {
        let first = ts.name("set or index")?;
        let entry = if ts.eat_keyword("in") {
            let set = ts.name("set")?;
            IndexEntry { dummy: Some(first), set }
        } else {
            IndexEntry { dummy: None, set: first }
        };
        entries.push(entry);
        if ts.eat(&Tok::Comma) {
            continue;
        }
        ts.expect(&Tok::RBrace, "to close the indexing expression")?;
        break;
    }
    if entries.len() > max {
        return Err(CompileError::at(
            CompileErrorKind::Syntax,
            start,
            format!(
                "'{owner}' is indexed over {} sets but at most {max} {} supported here",
                entries.len(),
                if max == 1 { "is" } else { "are" }
            ),
        ));
    }
    Ok(entries)
}

fn parse_param(ts: &mut TokenStream) -> Result<ParamDecl, CompileError> {
    let name = ts.name("param")?;
    let index = parse_indexing(ts, 2, &name)?;
    let mut decl = ParamDecl {
        name,
        index,
        lower: None,
        upper: None,
    };
    loop {
        if ts.eat(&Tok::Ge) {
            decl.lower = Some(ts.signed_number()?);
        } else if ts.eat(&Tok::Le) {
            decl.upper = Some(ts.signed_number()?);
        } else if ts.eat(&Tok::Comma) {
            continue;
        } else {
            break;
        }
    }
    end_of_declaration(ts, "param", &decl.name)?;
    Ok(decl)
}

fn parse_var(ts: &mut TokenStream) -> Result<VarDecl, CompileError> {
    let name = ts.name("var")?;
    let index = parse_indexing(ts, 1, &name)?;
    let mut decl = VarDecl {
        name,
        index,
        lower: None,
        upper: None,
        integrality: Integrality::Continuous,
    };
    loop {
        if ts.eat(&Tok::Ge) {
            decl.lower = Some(parse_expr(ts)?);
        } else if ts.eat(&Tok::Le) {
            decl.upper = Some(parse_expr(ts)?);
        } else if ts.eat_keyword("integer") {
            decl.integrality = Integrality::Integer;
        } else if ts.eat_keyword("binary") {
            decl.integrality = Integrality::Binary;
        } else if ts.eat(&Tok::Comma) {
            continue;
        } else {
            break;
        }
    }
    end_of_declaration(ts, "var", &decl.name)?;
    Ok(decl)
}

fn parse_constraint(ts: &mut TokenStream) -> Result<ConstraintDecl, CompileError> {
    let name = ts.name("constraint")?;
    let index = parse_indexing(ts, 1, &name)?;
    ts.expect(&Tok::Colon, &format!("after constraint name '{name}'"))?;
    let lhs = parse_expr(ts)?;
    let relation = match ts.peek() {
        Tok::Le => Relation::Le,
        Tok::Ge => Relation::Ge,
        Tok::Eq => Relation::Eq,
        _ => return Err(ts.unexpected(&format!("'<=', '>=' or '=' in constraint '{name}'"))),
    };
    ts.next();
    let rhs = parse_expr(ts)?;
    end_of_declaration(ts, "constraint", &name)?;
    Ok(ConstraintDecl {
        name,
        index,
        lhs,
        relation,
        rhs,
    })
}

pub(crate) fn parse_expr(ts: &mut TokenStream) -> Result<Expr, CompileError> {
    let mut lhs = parse_term(ts)?;
    loop {
        if ts.eat(&Tok::Plus) {
            lhs = Expr::Add(Box::new(lhs), Box::new(parse_term(ts)?));
        } else if ts.eat(&Tok::Minus) {
            lhs = Expr::Sub(Box::new(lhs), Box::new(parse_term(ts)?));
        } else {
            return Ok(lhs);
        }
    }
}

fn parse_term(ts: &mut TokenStream) -> Result<Expr, CompileError> {
    let mut lhs = parse_unary(ts)?;
    while ts.eat(&Tok::Star) {
        lhs = Expr::Mul(Box::new(lhs), Box::new(parse_unary(ts)?));
    }
    Ok(lhs)
}

fn parse_unary(ts: &mut TokenStream) -> Result<Expr, CompileError> {
    if ts.eat(&Tok::Minus) {
        return Ok(Expr::Neg(Box::new(parse_unary(ts)?)));
    }
    parse_primary(ts)
}

fn parse_primary(ts: &mut TokenStream) -> Result<Expr, CompileError> {
    match ts.peek().clone() {
        Tok::Number(v) => {
            ts.next();
            Ok(Expr::Num(v))
        }
        Tok::LParen => {
            ts.next();
            let e = parse_expr(ts)?;
            ts.expect(&Tok::RParen, "to close the parenthesized expression")?;
            Ok(e)
        }
        Tok::Ident(kw) if kw == "sum" => {
            ts.next();
            if *ts.peek() != Tok::LBrace {
                return Err(ts.unexpected("'{' after 'sum'"));
            }
            let loc = ts.loc();
            let mut binders = parse_indexing(ts, 1, "sum")?;
            let binder = binders.pop().expect("indexing after '{' has an entry");
            if binder.dummy.is_none() {
                return Err(CompileError::at(
                    CompileErrorKind::Syntax,
                    loc,
                    format!("sum binder over '{}' needs a dummy index, e.g. {{i in {}}}", binder.set, binder.set),
                ));
            }
            let body = parse_term(ts)?;
            Ok(Expr::Sum {
                binder,
                body: Box::new(body),
            })
        }
        Tok::Ident(_) => {
            let name = ts.name("identifier")?;
            let mut subscripts = Vec::new();
            if ts.eat(&Tok::LBracket) {
                loop {
                    let sub = match ts.peek().clone() {
                        Tok::Ident(s) if !is_reserved(&s) => Subscript::Dummy(s),
                        Tok::Str(s) => Subscript::Member(s),
                        Tok::Number(v) => Subscript::Member(format!("{v}")),
                        _ => return Err(ts.unexpected(&format!("a subscript for '{name}'"))),
                    };
                    ts.next();
                    subscripts.push(sub);
                    if ts.eat(&Tok::Comma) {
                        continue;
                    }
                    ts.expect(&Tok::RBracket, &format!("to close the subscript of '{name}'"))?;
                    break;
                }
            }
            Ok(Expr::Ref { name, subscripts })
        }
        _ => Err(ts.unexpected("an expression")),
    }
}
