//! Lowering from the AST to the transition system: one location per
//! statement, numbered in source pre-order, plus a single exit location.

use std::collections::HashMap;

use super::ast::*;
use super::lts::*;
use super::LangError;
use crate::expr::{ArithOp, CmpOp, Formula, Term};

pub const DEFAULT_INLINE_DEPTH: usize = 8;

#[derive(Clone, Copy, Debug)]
pub struct LowerOptions {
    pub inline_depth: usize,
}

impl Default for LowerOptions {
    fn default() -> Self {
        LowerOptions { inline_depth: DEFAULT_INLINE_DEPTH }
    }
}

enum Node {
    Simple { id: LocId, update: Update },
    Branch { id: LocId, cond: Formula<VarId>, then_block: Vec<Node>, else_block: Vec<Node> },
    Loop { id: LocId, cond: Formula<VarId>, body: Vec<Node> },
}

impl Node {
    fn id(&self) -> LocId {
        match self {
            Node::Simple { id, .. } | Node::Branch { id, .. } | Node::Loop { id, .. } => *id,
        }
    }
}

struct Lowerer<'a> {
    ast: &'a Ast,
    opts: LowerOptions,
    variables: Vec<Variable>,
    inputs: HashMap<String, VarId>,
    locations: Vec<Location>,
    name_uses: HashMap<String, usize>,
}

impl<'a> Lowerer<'a> {
    fn fresh_var(&mut self, name: &str) -> VarId {
        let uses = self.name_uses.entry(name.to_string()).or_insert(0);
        *uses += 1;
        let unique = if *uses == 1 { name.to_string() } else { format!("{name}#{uses}") };
        self.variables.push(Variable { name: unique, kind: VarKind::Local });
        self.variables.len() - 1
    }

    fn new_location(&mut self, kind: LocKind, span: Span, text: String) -> LocId {
        let id = self.locations.len() + 1;
        self.locations.push(Location { id, kind, span, text });
        id
    }

    fn lookup(&self, name: &str, scopes: &[HashMap<String, VarId>], span: Span) -> Result<VarId, LangError> {
        scopes
            .iter()
            .rev()
            .find_map(|s| s.get(name).copied())
            .or_else(|| self.inputs.get(name).copied())
            .ok_or_else(|| LangError::Semantic { line: span.line, col: span.col, message: format!("undeclared variable `{name}`") })
    }

    fn term(&self, e: &Expr, scopes: &[HashMap<String, VarId>]) -> Result<Term<VarId>, LangError> {
        Ok(match &e.kind {
            ExprKind::Int(v) => Term::Const(*v),
            ExprKind::Var(name) => Term::Var(self.lookup(name, scopes, e.span)?),
            ExprKind::Unary(UnOp::Neg, inner) => match self.term(inner, scopes)? {
                Term::Const(c) if matches!(inner.kind, ExprKind::Int(_)) => Term::Const(-c),
                t => Term::neg(t),
            },
            ExprKind::Binary(op, a, b) => {
                let arith = match op {
                    BinOp::Add => ArithOp::Add,
                    BinOp::Sub => ArithOp::Sub,
                    BinOp::Mul => ArithOp::Mul,
                    BinOp::Div => ArithOp::Div,
                    BinOp::Rem => ArithOp::Rem,
                    _ => return Err(LangError::Lowering(format!("boolean operator in integer context at {}", e.span))),
                };
                Term::bin(arith, self.term(a, scopes)?, self.term(b, scopes)?)
            }
            ExprKind::Bool(_) | ExprKind::Unary(UnOp::Not, _) => {
                return Err(LangError::Lowering(format!("boolean expression in integer context at {}", e.span)))
            }
        })
    }

    fn formula(&self, e: &Expr, scopes: &[HashMap<String, VarId>]) -> Result<Formula<VarId>, LangError> {
        Ok(match &e.kind {
            ExprKind::Bool(true) => Formula::True,
            ExprKind::Bool(false) => Formula::False,
            ExprKind::Unary(UnOp::Not, inner) => Formula::Not(Box::new(self.formula(inner, scopes)?)),
            ExprKind::Binary(BinOp::And, a, b) => Formula::And(vec![self.formula(a, scopes)?, self.formula(b, scopes)?]),
            ExprKind::Binary(BinOp::Or, a, b) => Formula::Or(vec![self.formula(a, scopes)?, self.formula(b, scopes)?]),
            ExprKind::Binary(op, a, b) if op.is_comparison() => {
                let cmp = match op {
                    BinOp::Lt => CmpOp::Lt,
                    BinOp::Le => CmpOp::Le,
                    BinOp::Gt => CmpOp::Gt,
                    BinOp::Ge => CmpOp::Ge,
                    BinOp::Eq => CmpOp::Eq,
                    _ => CmpOp::Ne,
                };
                Formula::Cmp(cmp, self.term(a, scopes)?, self.term(b, scopes)?)
            }
            _ => return Err(LangError::Lowering(format!("integer expression in boolean context at {}", e.span))),
        })
    }

    fn block(&mut self, block: &[Stmt], scopes: &mut Vec<HashMap<String, VarId>>, depth: usize) -> Result<Vec<Node>, LangError> {
        scopes.push(HashMap::new());
        let mut nodes = Vec::new();
        for stmt in block {
            self.stmt(stmt, scopes, depth, &mut nodes)?;
        }
        scopes.pop();
        Ok(nodes)
    }

    fn stmt(
        &mut self,
        stmt: &Stmt,
        scopes: &mut Vec<HashMap<String, VarId>>,
        depth: usize,
        nodes: &mut Vec<Node>,
    ) -> Result<(), LangError> {
        match &stmt.kind {
            StmtKind::Var { name, init } => {
                let value = match init {
                    Some(e) => self.term(e, scopes)?,
                    None => Term::Const(0),
                };
                let text = match init {
                    Some(e) => format!("var {name} = {e}"),
                    None => format!("var {name}"),
                };
                let id = self.new_location(LocKind::Assign, stmt.span, text);
                let v = self.fresh_var(name);
                scopes.last_mut().unwrap().insert(name.clone(), v);
                nodes.push(Node::Simple { id, update: Update { assigns: vec![(v, value)], emit: None } });
            }
            StmtKind::Assign { name, value } => {
                let id = self.new_location(LocKind::Assign, stmt.span, format!("{name} = {value}"));
                let v = self.lookup(name, scopes, stmt.span)?;
                let t = self.term(value, scopes)?;
                nodes.push(Node::Simple { id, update: Update { assigns: vec![(v, t)], emit: None } });
            }
            StmtKind::Output(e) => {
                let id = self.new_location(LocKind::Output, stmt.span, format!("output {e}"));
                let t = self.term(e, scopes)?;
                nodes.push(Node::Simple { id, update: Update { assigns: vec![], emit: Some(t) } });
            }
            StmtKind::If { cond, then_block, else_block } => {
                let id = self.new_location(LocKind::If, stmt.span, format!("if ({cond})"));
                let cond = self.formula(cond, scopes)?;
                let then_block = self.block(then_block, scopes, depth)?;
                let else_block = match else_block {
                    Some(b) => self.block(b, scopes, depth)?,
                    None => Vec::new(),
                };
                nodes.push(Node::Branch { id, cond, then_block, else_block });
            }
            StmtKind::While { cond, body } => {
                let id = self.new_location(LocKind::While, stmt.span, format!("while ({cond})"));
                let cond = self.formula(cond, scopes)?;
                let body = self.block(body, scopes, depth)?;
                nodes.push(Node::Loop { id, cond, body });
            }
            StmtKind::Call { name, args } => {
                if depth >= self.opts.inline_depth {
                    return Err(LangError::InliningDepthExceeded { function: name.clone(), bound: self.opts.inline_depth });
                }
                let ast = self.ast;
                let func = ast.function(name).ok_or_else(|| LangError::Semantic {
                    line: stmt.span.line,
                    col: stmt.span.col,
                    message: format!("undefined function `{name}`"),
                })?;
                let rendered: Vec<String> = args.iter().map(|a| a.to_string()).collect();
                let id = self.new_location(LocKind::Call, stmt.span, format!("call {name}({})", rendered.join(", ")));
                let values = args.iter().map(|a| self.term(a, scopes)).collect::<Result<Vec<_>, _>>()?;
                let mut frame = HashMap::new();
                let mut assigns = Vec::new();
                for (param, value) in func.params.iter().zip(values) {
                    let v = self.fresh_var(param);
                    frame.insert(param.clone(), v);
                    assigns.push((v, value));
                }
                nodes.push(Node::Simple { id, update: Update { assigns, emit: None } });
                let mut callee_scopes = vec![frame];
                let body = self.block(&func.body, &mut callee_scopes, depth + 1)?;
                nodes.extend(body);
            }
        }
        Ok(())
    }
}

fn emit(block: &[Node], next: LocId, out: &mut Vec<Transition>) {
    for (i, node) in block.iter().enumerate() {
        let succ = block.get(i + 1).map(Node::id).unwrap_or(next);
        let plain = |src, dst, guard, update| Transition { src, dst, cmd: GuardedCommand { guard, update }, selector: Selector::Any };
        match node {
            Node::Simple { id, update } => out.push(plain(*id, succ, Formula::True, update.clone())),
            Node::Branch { id, cond, then_block, else_block } => {
                let t = then_block.first().map(Node::id).unwrap_or(succ);
                let e = else_block.first().map(Node::id).unwrap_or(succ);
                out.push(plain(*id, t, cond.clone(), Update::identity()));
                out.push(plain(*id, e, cond.negate(), Update::identity()));
                emit(then_block, succ, out);
                emit(else_block, succ, out);
            }
            Node::Loop { id, cond, body } => {
                let b = body.first().map(Node::id).unwrap_or(*id);
                out.push(plain(*id, b, cond.clone(), Update::identity()));
                out.push(plain(*id, succ, cond.negate(), Update::identity()));
                emit(body, *id, out);
            }
        }
    }
}

/// Lowers with the default inlining bound.
pub fn lower_to_lts(ast: &Ast) -> Result<Lts, LangError> {
    lower_with(ast, LowerOptions::default())
}

pub fn lower_with(ast: &Ast, opts: LowerOptions) -> Result<Lts, LangError> {
    let main = ast
        .function(&ast.entry)
        .ok_or_else(|| LangError::Semantic { line: 1, col: 1, message: format!("missing `{}` function", ast.entry) })?;
    let mut lw = Lowerer {
        ast,
        opts,
        variables: Vec::new(),
        inputs: HashMap::new(),
        locations: Vec::new(),
        name_uses: HashMap::new(),
    };
    for input in &ast.inputs {
        lw.variables.push(Variable { name: input.name.clone(), kind: VarKind::Input { lo: input.lo, hi: input.hi } });
        lw.inputs.insert(input.name.clone(), lw.variables.len() - 1);
        lw.name_uses.insert(input.name.clone(), 1);
    }
    let mut scopes = Vec::new();
    let nodes = lw.block(&main.body, &mut scopes, 0)?;
    let exit = lw.new_location(LocKind::Exit, main.span, "exit".to_string());
    let mut transitions = Vec::new();
    emit(&nodes, exit, &mut transitions);
    transitions.sort_by_key(|t| t.src);
    let entry = nodes.first().map(Node::id).unwrap_or(exit);
    Ok(Lts::new(lw.locations, entry, vec![exit], lw.variables, transitions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::compile_str;

    #[test]
    fn straight_line_output() {
        let lts = compile_str("input x: int; fn main(){ output x; }").unwrap();
        assert_eq!(lts.num_locations(), 2);
        assert_eq!(lts.transitions.len(), 1);
        assert_eq!(lts.terminals, vec![2]);
        lts.validate().unwrap();
    }

    #[test]
    fn if_has_complementary_guards() {
        let lts = compile_str("input x: int; fn main(){ var y = 0; if (x < 3) { y = 1; } else { y = 2; } output y; }").unwrap();
        lts.validate().unwrap();
        let out: Vec<_> = lts.outgoing(2).collect();
        assert_eq!(out.len(), 2);
        assert_eq!(out[1].cmd.guard, out[0].cmd.guard.negate());
        assert_eq!((out[0].dst, out[1].dst), (3, 4));
    }

    #[test]
    fn loop_back_edge() {
        let lts = compile_str("input x: int; fn main(){ while (x > 0) { x = x - 1; } output x; }").unwrap();
        lts.validate().unwrap();
        let body: Vec<_> = lts.outgoing(2).collect();
        assert_eq!(body[0].dst, 1);
        let dist = lts.distance_to_output();
        assert_eq!(dist.get(4), Some(0));
        assert_eq!(dist.get(1), Some(2));
        assert_eq!(dist.get(2), Some(3));
    }

    #[test]
    fn calls_are_inlined_with_fresh_parameters() {
        let src = "input x: int; fn show(v) { output v * 2; } fn main(){ show(x); call show(x + 1); }";
        let lts = compile_str(src).unwrap();
        lts.validate().unwrap();
        // call, output, call, output, exit
        assert_eq!(lts.num_locations(), 5);
        assert!(lts.var_id("v").is_some() && lts.var_id("v#2").is_some());
    }

    #[test]
    fn recursion_exceeds_bound() {
        let src = "input x: int; fn f(a) { if (a > 0) { f(a - 1); } } fn main(){ f(x); }";
        let err = compile_str(src).unwrap_err();
        assert!(matches!(err, LangError::InliningDepthExceeded { bound: 8, .. }));
    }

    #[test]
    fn empty_main_is_just_the_exit() {
        let lts = compile_str("fn main(){ }").unwrap();
        assert_eq!(lts.num_locations(), 1);
        assert_eq!(lts.entry, 1);
        lts.validate().unwrap();
    }
}
