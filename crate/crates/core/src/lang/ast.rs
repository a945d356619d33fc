use std::fmt;

/// 1-based source position.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Program text plus where it came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceProgram {
    pub text: String,
    pub origin: String,
}

impl SourceProgram {
    pub fn inline(text: impl Into<String>) -> Self {
        SourceProgram { text: text.into(), origin: "<inline>".to_string() }
    }

    pub fn from_file(path: &std::path::Path) -> std::io::Result<Self> {
        Ok(SourceProgram { text: std::fs::read_to_string(path)?, origin: path.display().to_string() })
    }
}

pub const DEFAULT_DOMAIN: (i64, i64) = (-128, 127);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ast {
    pub inputs: Vec<InputDecl>,
    pub functions: Vec<FnDef>,
    pub entry: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputDecl {
    pub name: String,
    pub lo: i64,
    pub hi: i64,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FnDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StmtKind {
    Var { name: String, init: Option<Expr> },
    Assign { name: String, value: Expr },
    If { cond: Expr, then_block: Vec<Stmt>, else_block: Option<Vec<Stmt>> },
    While { cond: Expr, body: Vec<Stmt> },
    Output(Expr),
    Call { name: String, args: Vec<Expr> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 4
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    Int(i64),
    Bool(bool),
    Var(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    fn precedence(&self) -> u8 {
        match &self.kind {
            ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Var(_) => 8,
            ExprKind::Unary(UnOp::Neg, _) => 7,
            ExprKind::Unary(UnOp::Not, _) => 3,
            ExprKind::Binary(op, _, _) => op.precedence(),
        }
    }

    fn write(&self, out: &mut String, ctx: u8) {
        let prec = self.precedence();
        let paren = prec < ctx;
        if paren {
            out.push('(');
        }
        match &self.kind {
            ExprKind::Int(v) => out.push_str(&v.to_string()),
            ExprKind::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            ExprKind::Var(name) => out.push_str(name),
            ExprKind::Unary(op, e) => {
                out.push(if *op == UnOp::Neg { '-' } else { '!' });
                // operand must bind tighter than the prefix operator
                e.write(out, prec + 1);
            }
            ExprKind::Binary(op, a, b) => {
                // comparisons do not chain, so both sides need strictly higher precedence
                let left_ctx = if op.is_comparison() { prec + 1 } else { prec };
                a.write(out, left_ctx);
                out.push(' ');
                out.push_str(op.symbol());
                out.push(' ');
                b.write(out, prec + 1);
            }
        }
        if paren {
            out.push(')');
        }
    }

    pub fn without_spans(&self) -> Expr {
        let kind = match &self.kind {
            ExprKind::Unary(op, e) => ExprKind::Unary(*op, Box::new(e.without_spans())),
            ExprKind::Binary(op, a, b) => ExprKind::Binary(*op, Box::new(a.without_spans()), Box::new(b.without_spans())),
            other => other.clone(),
        };
        Expr { kind, span: Span::default() }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write(&mut s, 0);
        f.write_str(&s)
    }
}

fn write_block(out: &mut String, block: &[Stmt], indent: usize) {
    for stmt in block {
        write_stmt(out, stmt, indent);
    }
}

fn write_stmt(out: &mut String, stmt: &Stmt, indent: usize) {
    let pad = "    ".repeat(indent);
    out.push_str(&pad);
    match &stmt.kind {
        StmtKind::Var { name, init: Some(e) } => out.push_str(&format!("var {name} = {e};\n")),
        StmtKind::Var { name, init: None } => out.push_str(&format!("var {name};\n")),
        StmtKind::Assign { name, value } => out.push_str(&format!("{name} = {value};\n")),
        StmtKind::Output(e) => out.push_str(&format!("output {e};\n")),
        StmtKind::Call { name, args } => {
            let args: Vec<String> = args.iter().map(|a| a.to_string()).collect();
            out.push_str(&format!("call {name}({});\n", args.join(", ")));
        }
        StmtKind::If { cond, then_block, else_block } => {
            out.push_str(&format!("if ({cond}) {{\n"));
            write_block(out, then_block, indent + 1);
            out.push_str(&pad);
            match else_block {
                Some(eb) => {
                    out.push_str("} else {\n");
                    write_block(out, eb, indent + 1);
                    out.push_str(&pad);
                    out.push_str("}\n");
                }
                None => out.push_str("}\n"),
            }
        }
        StmtKind::While { cond, body } => {
            out.push_str(&format!("while ({cond}) {{\n"));
            write_block(out, body, indent + 1);
            out.push_str(&pad);
            out.push_str("}\n");
        }
    }
}

fn strip_block(block: &[Stmt]) -> Vec<Stmt> {
    block.iter().map(Stmt::without_spans).collect()
}

impl Stmt {
    pub fn without_spans(&self) -> Stmt {
        let kind = match &self.kind {
            StmtKind::Var { name, init } => StmtKind::Var { name: name.clone(), init: init.as_ref().map(Expr::without_spans) },
            StmtKind::Assign { name, value } => StmtKind::Assign { name: name.clone(), value: value.without_spans() },
            StmtKind::If { cond, then_block, else_block } => StmtKind::If {
                cond: cond.without_spans(),
                then_block: strip_block(then_block),
                else_block: else_block.as_deref().map(strip_block),
            },
            StmtKind::While { cond, body } => StmtKind::While { cond: cond.without_spans(), body: strip_block(body) },
            StmtKind::Output(e) => StmtKind::Output(e.without_spans()),
            StmtKind::Call { name, args } => StmtKind::Call { name: name.clone(), args: args.iter().map(Expr::without_spans).collect() },
        };
        Stmt { kind, span: Span::default() }
    }
}

impl Ast {
    /// Copy with every position reset, for structural comparison.
    pub fn without_spans(&self) -> Ast {
        Ast {
            inputs: self.inputs.iter().map(|i| InputDecl { span: Span::default(), ..i.clone() }).collect(),
            functions: self
                .functions
                .iter()
                .map(|f| FnDef { name: f.name.clone(), params: f.params.clone(), body: strip_block(&f.body), span: Span::default() })
                .collect(),
            entry: self.entry.clone(),
        }
    }

    pub fn function(&self, name: &str) -> Option<&FnDef> {
        self.functions.iter().find(|f| f.name == name)
    }
}

impl fmt::Display for Ast {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        for input in &self.inputs {
            out.push_str(&format!("input {}: int in [{}, {}];\n", input.name, input.lo, input.hi));
        }
        for func in &self.functions {
            out.push_str(&format!("fn {}({}) {{\n", func.name, func.params.join(", ")));
            write_block(&mut out, &func.body, 1);
            out.push_str("}\n");
        }
        f.write_str(&out)
    }
}
