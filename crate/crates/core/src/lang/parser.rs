//! Lexer, recursive-descent parser and static checks for MiniImp.

use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::LangError;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Kw(&'static str),
    Sym(&'static str),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(v) => format!("integer `{v}`"),
            Tok::Kw(k) => format!("`{k}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

const KEYWORDS: [&str; 11] = ["input", "int", "in", "fn", "var", "if", "else", "while", "output", "call", "true"];
const SYMBOLS: [&str; 25] = [
    "&&", "||", "<=", ">=", "==", "!=", "<", ">", "!", "+", "-", "*", "/", "%", "=", "(", ")", "{", "}", "[", "]", ",", ";",
    ":", ".",
];

fn lex(text: &str) -> Result<Vec<(Tok, Span)>, LangError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let lit: String = chars[start..i].iter().collect();
            let value = lit.parse::<i64>().map_err(|_| LangError::Syntax {
                line,
                col,
                expected: vec!["integer literal within 64 bits".into()],
                found: lit.clone(),
            })?;
            col += (i - start) as u32;
            out.push((Tok::Int(value), span));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += (i - start) as u32;
            let tok = if word == "false" {
                Tok::Kw("false")
            } else if let Some(k) = KEYWORDS.iter().find(|k| **k == word) {
                Tok::Kw(k)
            } else {
                Tok::Ident(word)
            };
            out.push((tok, span));
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(sym) => {
                i += sym.len();
                col += sym.len() as u32;
                out.push((Tok::Sym(sym), span));
            }
            None => {
                return Err(LangError::Syntax { line, col, expected: vec!["a token".into()], found: c.to_string() });
            }
        }
    }
    out.push((Tok::Eof, Span { line, col }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> Result<T, LangError> {
        let span = self.span();
        Err(LangError::Syntax {
            line: span.line,
            col: span.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().describe(),
        })
    }

    fn eat_sym(&mut self, s: &'static str) -> bool {
        if *self.peek() == Tok::Sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &'static str) -> Result<Span, LangError> {
        let span = self.span();
        if self.eat_sym(s) {
            Ok(span)
        } else {
            self.error(&[&format!("`{s}`")])
        }
    }

    fn eat_kw(&mut self, k: &'static str) -> bool {
        if *self.peek() == Tok::Kw(k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, k: &'static str) -> Result<(), LangError> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            self.error(&[&format!("`{k}`")])
        }
    }

    fn ident(&mut self) -> Result<(String, Span), LangError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let span = self.span();
                self.bump();
                Ok((name, span))
            }
            _ => self.error(&["identifier"]),
        }
    }

    fn signed_int(&mut self) -> Result<i64, LangError> {
        let negative = self.eat_sym("-");
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(if negative { -v } else { v })
            }
            _ => self.error(&["integer"]),
        }
    }

    fn program(&mut self) -> Result<Ast, LangError> {
        let mut inputs = Vec::new();
        let mut functions = Vec::new();
        loop {
            match self.peek() {
                Tok::Kw("input") => inputs.push(self.input_decl()?),
                Tok::Kw("fn") => functions.push(self.fn_def()?),
                Tok::Eof => break,
                _ => return self.error(&["`input`", "`fn`"]),
            }
        }
        Ok(Ast { inputs, functions, entry: "main".to_string() })
    }

    fn input_decl(&mut self) -> Result<InputDecl, LangError> {
        let span = self.span();
        self.expect_kw("input")?;
        let (name, _) = self.ident()?;
        self.expect_sym(":")?;
        self.expect_kw("int")?;
        let (lo, hi) = if self.eat_kw("in") {
            self.expect_sym("[")?;
            let lo = self.signed_int()?;
            self.expect_sym(",")?;
            let hi = self.signed_int()?;
            self.expect_sym("]")?;
            (lo, hi)
        } else {
            DEFAULT_DOMAIN
        };
        self.expect_sym(";")?;
        if lo > hi {
            return Err(LangError::Semantic { line: span.line, col: span.col, message: format!("empty domain [{lo}, {hi}] for input `{name}`") });
        }
        Ok(InputDecl { name, lo, hi, span })
    }

    fn fn_def(&mut self) -> Result<FnDef, LangError> {
        let span = self.span();
        self.expect_kw("fn")?;
        let (name, _) = self.ident()?;
        self.expect_sym("(")?;
        let mut params = Vec::new();
        if !self.eat_sym(")") {
            loop {
                params.push(self.ident()?.0);
                if self.eat_sym(")") {
                    break;
                }
                self.expect_sym(",")?;
            }
        }
        let body = self.block()?;
        Ok(FnDef { name, params, body, span })
    }

    fn block(&mut self) -> Result<Vec<Stmt>, LangError> {
        self.expect_sym("{")?;
        let mut stmts = Vec::new();
        while !self.eat_sym("}") {
            if *self.peek() == Tok::Eof {
                return self.error(&["`}`", "statement"]);
            }
            stmts.push(self.stmt()?);
        }
        Ok(stmts)
    }

    fn stmt(&mut self) -> Result<Stmt, LangError> {
        let span = self.span();
        let kind = match self.peek().clone() {
            Tok::Kw("var") => {
                self.bump();
                let (name, _) = self.ident()?;
                let init = if self.eat_sym("=") { Some(self.expr()?) } else { None };
                self.expect_sym(";")?;
                StmtKind::Var { name, init }
            }
            Tok::Kw("if") => {
                self.bump();
                self.expect_sym("(")?;
                let cond = self.expr()?;
                self.expect_sym(")")?;
                let then_block = self.block()?;
                let else_block = if self.eat_kw("else") {
                    if *self.peek() == Tok::Kw("if") {
                        Some(vec![self.stmt()?])
                    } else {
                        Some(self.block()?)
                    }
                } else {
                    None
                };
                StmtKind::If { cond, then_block, else_block }
            }
            Tok::Kw("while") => {
                self.bump();
                self.expect_sym("(")?;
                let cond = self.expr()?;
                self.expect_sym(")")?;
                StmtKind::While { cond, body: self.block()? }
            }
            Tok::Kw("output") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(";")?;
                StmtKind::Output(e)
            }
            Tok::Kw("call") => {
                self.bump();
                let (name, _) = self.ident()?;
                let args = self.call_args()?;
                self.expect_sym(";")?;
                StmtKind::Call { name, args }
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::Sym("(") {
                    let args = self.call_args()?;
                    self.expect_sym(";")?;
                    StmtKind::Call { name, args }
                } else {
                    self.expect_sym("=")?;
                    let value = self.expr()?;
                    self.expect_sym(";")?;
                    StmtKind::Assign { name, value }
                }
            }
            _ => return self.error(&["`var`", "`if`", "`while`", "`output`", "`call`", "identifier"]),
        };
        Ok(Stmt { kind, span })
    }

    fn call_args(&mut self) -> Result<Vec<Expr>, LangError> {
        self.expect_sym("(")?;
        let mut args = Vec::new();
        if !self.eat_sym(")") {
            loop {
                args.push(self.expr()?);
                if self.eat_sym(")") {
                    break;
                }
                self.expect_sym(",")?;
            }
        }
        Ok(args)
    }

    fn expr(&mut self) -> Result<Expr, LangError> {
        self.binary_level(1)
    }

    fn binary_op(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Sym("||") => BinOp::Or,
            Tok::Sym("&&") => BinOp::And,
            Tok::Sym("<") => BinOp::Lt,
            Tok::Sym("<=") => BinOp::Le,
            Tok::Sym(">") => BinOp::Gt,
            Tok::Sym(">=") => BinOp::Ge,
            Tok::Sym("==") => BinOp::Eq,
            Tok::Sym("!=") => BinOp::Ne,
            Tok::Sym("+") => BinOp::Add,
            Tok::Sym("-") => BinOp::Sub,
            Tok::Sym("*") => BinOp::Mul,
            Tok::Sym("/") => BinOp::Div,
            Tok::Sym("%") => BinOp::Rem,
            _ => return None,
        })
    }

    // Precedence climbing. Level 3 is the prefix `!`, 7 the prefix `-`.
    fn binary_level(&mut self, level: u8) -> Result<Expr, LangError> {
        if level == 3 {
            if *self.peek() == Tok::Sym("!") {
                let span = self.span();
                self.bump();
                let e = self.binary_level(3)?;
                return Ok(Expr { kind: ExprKind::Unary(UnOp::Not, Box::new(e)), span });
            }
            return self.binary_level(4);
        }
        if level == 7 {
            return self.unary();
        }
        let mut lhs = self.binary_level(level + 1)?;
        while let Some(op) = self.binary_op().filter(|op| op.precedence() == level) {
            let span = self.span();
            self.bump();
            let rhs = self.binary_level(level + 1)?;
            lhs = Expr { span: lhs.span, kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)) };
            if op.is_comparison() {
                if let Some(next) = self.binary_op().filter(|o| o.is_comparison()) {
                    return Err(LangError::Syntax {
                        line: span.line,
                        col: span.col,
                        expected: vec!["parenthesized comparison".into()],
                        found: format!("chained `{}`", next.symbol()),
                    });
                }
                break;
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, LangError> {
        let span = self.span();
        if self.eat_sym("-") {
            let e = self.unary()?;
            return Ok(Expr { kind: ExprKind::Unary(UnOp::Neg, Box::new(e)), span });
        }
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr { kind: ExprKind::Int(v), span })
            }
            Tok::Kw("true") => {
                self.bump();
                Ok(Expr { kind: ExprKind::Bool(true), span })
            }
            Tok::Kw("false") => {
                self.bump();
                Ok(Expr { kind: ExprKind::Bool(false), span })
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(Expr { kind: ExprKind::Var(name), span })
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            _ => self.error(&["expression"]),
        }
    }
}

/// Parses MiniImp text and runs the static checks.
pub fn parse_program(src: &SourceProgram) -> Result<Ast, LangError> {
    if src.text.trim().is_empty() {
        return Err(LangError::Semantic { line: 1, col: 1, message: "empty program".into() });
    }
    let mut parser = Parser { toks: lex(&src.text)?, pos: 0 };
    let ast = parser.program()?;
    check(&ast)?;
    Ok(ast)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Ty {
    Int,
    Bool,
}

fn semantic(span: Span, message: String) -> LangError {
    LangError::Semantic { line: span.line, col: span.col, message }
}

struct Checker<'a> {
    inputs: HashSet<&'a str>,
    arity: HashMap<&'a str, usize>,
}

impl<'a> Checker<'a> {
    fn block(&self, block: &'a [Stmt], scopes: &mut Vec<HashSet<&'a str>>) -> Result<(), LangError> {
        scopes.push(HashSet::new());
        for stmt in block {
            self.stmt(stmt, scopes)?;
        }
        scopes.pop();
        Ok(())
    }

    fn visible(&self, name: &str, scopes: &[HashSet<&'a str>]) -> bool {
        self.inputs.contains(name) || scopes.iter().any(|s| s.contains(name))
    }

    fn stmt(&self, stmt: &'a Stmt, scopes: &mut Vec<HashSet<&'a str>>) -> Result<(), LangError> {
        match &stmt.kind {
            StmtKind::Var { name, init } => {
                if let Some(e) = init {
                    self.expect(e, Ty::Int, scopes)?;
                }
                if self.visible(name, scopes) {
                    return Err(semantic(stmt.span, format!("`{name}` is already declared")));
                }
                scopes.last_mut().unwrap().insert(name);
            }
            StmtKind::Assign { name, value } => {
                if !self.visible(name, scopes) {
                    return Err(semantic(stmt.span, format!("undeclared variable `{name}`")));
                }
                self.expect(value, Ty::Int, scopes)?;
            }
            StmtKind::If { cond, then_block, else_block } => {
                self.expect(cond, Ty::Bool, scopes)?;
                self.block(then_block, scopes)?;
                if let Some(eb) = else_block {
                    self.block(eb, scopes)?;
                }
            }
            StmtKind::While { cond, body } => {
                self.expect(cond, Ty::Bool, scopes)?;
                self.block(body, scopes)?;
            }
            StmtKind::Output(e) => self.expect(e, Ty::Int, scopes)?,
            StmtKind::Call { name, args } => {
                let Some(&n) = self.arity.get(name.as_str()) else {
                    return Err(semantic(stmt.span, format!("undefined function `{name}`")));
                };
                if n != args.len() {
                    return Err(semantic(stmt.span, format!("`{name}` expects {n} arguments, got {}", args.len())));
                }
                for a in args {
                    self.expect(a, Ty::Int, scopes)?;
                }
            }
        }
        Ok(())
    }

    fn expect(&self, e: &Expr, ty: Ty, scopes: &[HashSet<&'a str>]) -> Result<(), LangError> {
        let got = self.type_of(e, scopes)?;
        if got != ty {
            let want = if ty == Ty::Int { "integer" } else { "boolean" };
            return Err(semantic(e.span, format!("expected {want} expression, found `{e}`")));
        }
        Ok(())
    }

    fn type_of(&self, e: &Expr, scopes: &[HashSet<&'a str>]) -> Result<Ty, LangError> {
        Ok(match &e.kind {
            ExprKind::Int(_) => Ty::Int,
            ExprKind::Bool(_) => Ty::Bool,
            ExprKind::Var(name) => {
                if !self.visible(name, scopes) {
                    return Err(semantic(e.span, format!("undeclared variable `{name}`")));
                }
                Ty::Int
            }
            ExprKind::Unary(UnOp::Neg, a) => {
                self.expect(a, Ty::Int, scopes)?;
                Ty::Int
            }
            ExprKind::Unary(UnOp::Not, a) => {
                self.expect(a, Ty::Bool, scopes)?;
                Ty::Bool
            }
            ExprKind::Binary(op, a, b) if op.is_logical() => {
                self.expect(a, Ty::Bool, scopes)?;
                self.expect(b, Ty::Bool, scopes)?;
                Ty::Bool
            }
            ExprKind::Binary(op, a, b) => {
                self.expect(a, Ty::Int, scopes)?;
                self.expect(b, Ty::Int, scopes)?;
                if op.is_comparison() {
                    Ty::Bool
                } else {
                    Ty::Int
                }
            }
        })
    }
}

fn check(ast: &Ast) -> Result<(), LangError> {
    let mut inputs = HashSet::new();
    for input in &ast.inputs {
        if !inputs.insert(input.name.as_str()) {
            return Err(semantic(input.span, format!("duplicate input `{}`", input.name)));
        }
    }
    let mut arity = HashMap::new();
    for f in &ast.functions {
        if arity.insert(f.name.as_str(), f.params.len()).is_some() {
            return Err(semantic(f.span, format!("duplicate function `{}`", f.name)));
        }
    }
    let Some(main) = ast.function(&ast.entry) else {
        return Err(semantic(Span { line: 1, col: 1 }, "missing `main` function".into()));
    };
    if !main.params.is_empty() {
        return Err(semantic(main.span, "`main` takes no parameters".into()));
    }
    let checker = Checker { inputs, arity };
    for f in &ast.functions {
        let mut params = HashSet::new();
        for p in &f.params {
            if checker.inputs.contains(p.as_str()) || !params.insert(p.as_str()) {
                return Err(semantic(f.span, format!("parameter `{p}` clashes with another declaration")));
            }
        }
        let mut scopes = vec![params];
        checker.block(&f.body, &mut scopes)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Ast, LangError> {
        parse_program(&SourceProgram::inline(text))
    }

    #[test]
    fn minimal_program() {
        let ast = parse("input x: int in [-8,7]; fn main(){ output x; }").unwrap();
        assert_eq!(ast.inputs.len(), 1);
        assert_eq!((ast.inputs[0].lo, ast.inputs[0].hi), (-8, 7));
        assert_eq!(ast.functions.len(), 1);
    }

    #[test]
    fn undeclared_variable() {
        let err = parse("fn main(){ output y; }").unwrap_err();
        assert!(matches!(err, LangError::Semantic { ref message, .. } if message.contains("undeclared variable `y`")), "{err}");
    }

    #[test]
    fn missing_main() {
        assert!(matches!(parse("fn f(){ }"), Err(LangError::Semantic { .. })));
    }

    #[test]
    fn duplicate_input() {
        let err = parse("input x: int; input x: int; fn main(){ }").unwrap_err();
        assert!(err.to_string().contains("duplicate input"));
    }

    #[test]
    fn default_domain() {
        let ast = parse("input x: int; fn main(){ output x; }").unwrap();
        assert_eq!((ast.inputs[0].lo, ast.inputs[0].hi), DEFAULT_DOMAIN);
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse("fn main() {\n  output 1 +;\n}").unwrap_err();
        match err {
            LangError::Syntax { line, col, ref expected, .. } => {
                assert_eq!((line, col), (2, 13));
                assert!(expected.iter().any(|e| e == "expression"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn type_errors() {
        assert!(parse("input x: int; fn main(){ output x < 1; }").is_err());
        assert!(parse("input x: int; fn main(){ if (x + 1) { } }").is_err());
        assert!(parse("input x: int; fn main(){ if (x < 1 < 2) { } }").is_err());
    }

    #[test]
    fn call_arity_checked() {
        assert!(parse("fn f(a) { output a; } fn main(){ call f(); }").is_err());
        assert!(parse("fn f(a) { output a; } fn main(){ f(1); }").is_ok());
        assert!(parse("fn main(){ call g(1); }").is_err());
    }

    #[test]
    fn precedence() {
        let ast = parse("input x: int; fn main(){ output 1 + 2 * x - -x; }").unwrap();
        match &ast.functions[0].body[0].kind {
            StmtKind::Output(e) => assert_eq!(e.to_string(), "1 + 2 * x - -x"),
            _ => unreachable!(),
        }
    }
}
