//! Integer terms and boolean formulas shared by the program representation
//! (over program variables) and the constraint solver (over input symbols).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

impl ArithOp {
    pub const ALL: [ArithOp; 5] = [ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div, ArithOp::Rem];

    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
            ArithOp::Rem => "%",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            ArithOp::Add | ArithOp::Sub => 5,
            ArithOp::Mul | ArithOp::Div | ArithOp::Rem => 6,
        }
    }

    /// Truncated-toward-zero division and remainder, checked for overflow.
    pub fn apply(self, a: i64, b: i64) -> Result<i64, ArithError> {
        let r = match self {
            ArithOp::Add => a.checked_add(b),
            ArithOp::Sub => a.checked_sub(b),
            ArithOp::Mul => a.checked_mul(b),
            ArithOp::Div | ArithOp::Rem if b == 0 => return Err(ArithError::DivisionByZero),
            ArithOp::Div => a.checked_div(b),
            ArithOp::Rem => a.checked_rem(b),
        };
        r.ok_or(ArithError::Overflow)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Eq, CmpOp::Ne];

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }

    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
        }
    }

    /// The operator obtained by swapping the operands: `a op b` iff `b op.flip() a`.
    pub fn flip(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
            CmpOp::Eq | CmpOp::Ne => self,
        }
    }

    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Error)]
pub enum ArithError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("integer overflow")]
    Overflow,
}

/// Integer-valued term over leaves of type `V`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term<V> {
    Const(i64),
    Var(V),
    Neg(Arc<Term<V>>),
    Bin(ArithOp, Arc<Term<V>>, Arc<Term<V>>),
}

impl<V: Clone + Ord> Term<V> {
    pub fn var(v: V) -> Self {
        Term::Var(v)
    }

    pub fn bin(op: ArithOp, a: Term<V>, b: Term<V>) -> Self {
        Term::Bin(op, Arc::new(a), Arc::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(a: Term<V>) -> Self {
        Term::Neg(Arc::new(a))
    }

    /// Binary node with constant folding when both operands are constants and
    /// the operation is defined.
    pub fn fold_bin(op: ArithOp, a: Term<V>, b: Term<V>) -> Self {
        if let (Term::Const(x), Term::Const(y)) = (&a, &b) {
            if let Ok(v) = op.apply(*x, *y) {
                return Term::Const(v);
            }
        }
        Term::bin(op, a, b)
    }

    pub fn fold_neg(a: Term<V>) -> Self {
        match a {
            Term::Const(c) if c != i64::MIN => Term::Const(-c),
            Term::Neg(inner) => (*inner).clone(),
            other => Term::neg(other),
        }
    }

    pub fn as_const(&self) -> Option<i64> {
        match self {
            Term::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn eval<F: FnMut(&V) -> i64>(&self, env: &mut F) -> Result<i64, ArithError> {
        match self {
            Term::Const(c) => Ok(*c),
            Term::Var(v) => Ok(env(v)),
            Term::Neg(a) => a.eval(env)?.checked_neg().ok_or(ArithError::Overflow),
            Term::Bin(op, a, b) => {
                let x = a.eval(env)?;
                let y = b.eval(env)?;
                op.apply(x, y)
            }
        }
    }

    /// Substitutes every leaf, folding constants on the way up.
    pub fn substitute<W: Clone + Ord, F: Fn(&V) -> Term<W>>(&self, f: &F) -> Term<W> {
        match self {
            Term::Const(c) => Term::Const(*c),
            Term::Var(v) => f(v),
            Term::Neg(a) => Term::fold_neg(a.substitute(f)),
            Term::Bin(op, a, b) => Term::fold_bin(*op, a.substitute(f), b.substitute(f)),
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<V>) {
        match self {
            Term::Const(_) => {}
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Neg(a) => a.collect_vars(out),
            Term::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Right-hand operands of every division and remainder, innermost first.
    pub fn collect_divisors(&self, out: &mut Vec<Term<V>>) {
        match self {
            Term::Const(_) | Term::Var(_) => {}
            Term::Neg(a) => a.collect_divisors(out),
            Term::Bin(op, a, b) => {
                a.collect_divisors(out);
                b.collect_divisors(out);
                if matches!(op, ArithOp::Div | ArithOp::Rem) {
                    out.push((**b).clone());
                }
            }
        }
    }

    pub fn has_division(&self) -> bool {
        match self {
            Term::Const(_) | Term::Var(_) => false,
            Term::Neg(a) => a.has_division(),
            Term::Bin(op, a, b) => matches!(op, ArithOp::Div | ArithOp::Rem) || a.has_division() || b.has_division(),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Const(_) | Term::Var(_) => 1,
            Term::Neg(a) => 1 + a.size(),
            Term::Bin(_, a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Algebraic normalization: constant folding plus the identities
    /// `x+0`, `0+x`, `x-0`, `x*1`, `1*x`, `x/1`, `--x`, and `x*0` when `x`
    /// cannot fail. Linear terms are put in a canonical sum-of-monomials form.
    pub fn simplify(&self) -> Term<V> {
        self.simplify_bottom_up().into_term()
    }

    fn simplify_bottom_up(&self) -> Simplified<V> {
        let lin = match self {
            Term::Const(c) => Linear { coeffs: BTreeMap::new(), konst: *c },
            Term::Var(v) => Linear { coeffs: BTreeMap::from([(v.clone(), 1)]), konst: 0 },
            Term::Neg(a) => match a.simplify_bottom_up() {
                Simplified::Linear(l) => match l.clone().scale(-1) {
                    Some(n) => n,
                    None => return Simplified::Other(Term::fold_neg(l.to_term())),
                },
                Simplified::Other(t) => return Simplified::Other(Term::fold_neg(t)),
            },
            Term::Bin(op, a, b) => {
                let (sa, sb) = (a.simplify_bottom_up(), b.simplify_bottom_up());
                let combined = match (op, &sa, &sb) {
                    (ArithOp::Add, Simplified::Linear(x), Simplified::Linear(y)) => x.clone().add(y),
                    (ArithOp::Sub, Simplified::Linear(x), Simplified::Linear(y)) => {
                        y.clone().scale(-1).and_then(|y| x.clone().add(&y))
                    }
                    (ArithOp::Mul, Simplified::Linear(x), Simplified::Linear(y)) => {
                        if x.coeffs.is_empty() {
                            y.clone().scale(x.konst)
                        } else if y.coeffs.is_empty() {
                            x.clone().scale(y.konst)
                        } else {
                            None
                        }
                    }
                    _ => None,
                };
                match combined {
                    Some(l) => l,
                    None => return Simplified::Other(Term::identities(*op, sa.into_term(), sb.into_term())),
                }
            }
        };
        let mut lin = lin;
        lin.coeffs.retain(|_, c| *c != 0);
        Simplified::Linear(lin)
    }

    fn identities(op: ArithOp, a: Term<V>, b: Term<V>) -> Term<V> {
        match (op, a.as_const(), b.as_const()) {
            (ArithOp::Add, _, Some(0)) | (ArithOp::Sub, _, Some(0)) => a,
            (ArithOp::Add, Some(0), _) => b,
            (ArithOp::Mul, _, Some(1)) | (ArithOp::Div, _, Some(1)) => a,
            (ArithOp::Mul, Some(1), _) => b,
            (ArithOp::Mul, _, Some(0)) if !a.has_division() => Term::Const(0),
            (ArithOp::Mul, Some(0), _) if !b.has_division() => Term::Const(0),
            _ => Term::fold_bin(op, a, b),
        }
    }

    pub fn render(&self, name: &dyn Fn(&V) -> String) -> String {
        let mut s = String::new();
        self.render_into(&mut s, name, 0);
        s
    }

    fn precedence(&self) -> u8 {
        match self {
            Term::Const(c) if *c < 0 => 7,
            Term::Const(_) | Term::Var(_) => 8,
            Term::Neg(_) => 7,
            Term::Bin(op, _, _) => op.precedence(),
        }
    }

    fn render_into(&self, s: &mut String, name: &dyn Fn(&V) -> String, ctx: u8) {
        let prec = self.precedence();
        let paren = prec < ctx;
        if paren {
            s.push('(');
        }
        match self {
            Term::Const(c) => s.push_str(&c.to_string()),
            Term::Var(v) => s.push_str(&name(v)),
            Term::Neg(a) => {
                s.push('-');
                a.render_into(s, name, 8);
            }
            Term::Bin(op, a, b) => {
                a.render_into(s, name, prec);
                s.push(' ');
                s.push_str(op.symbol());
                s.push(' ');
                b.render_into(s, name, prec + 1);
            }
        }
        if paren {
            s.push(')');
        }
    }
}

impl<V: Clone + Ord + fmt::Display> fmt::Display for Term<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(&|v| v.to_string()))
    }
}

enum Simplified<V: Ord> {
    Linear(Linear<V>),
    Other(Term<V>),
}

impl<V: Clone + Ord> Simplified<V> {
    fn into_term(self) -> Term<V> {
        match self {
            Simplified::Linear(l) => l.to_term(),
            Simplified::Other(t) => t,
        }
    }
}

fn push_unique<V: Clone + Ord>(out: &mut Vec<Formula<V>>, seen: &mut BTreeSet<Formula<V>>, q: Formula<V>) {
    if seen.insert(q.clone()) {
        out.push(q);
    }
}

/// `Σ coeff·var + konst` with checked arithmetic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Linear<V: Ord> {
    pub coeffs: BTreeMap<V, i64>,
    pub konst: i64,
}

impl<V: Clone + Ord> Linear<V> {
    pub fn of(t: &Term<V>) -> Option<Self> {
        let mut lin = match t {
            Term::Const(c) => Linear { coeffs: BTreeMap::new(), konst: *c },
            Term::Var(v) => Linear { coeffs: BTreeMap::from([(v.clone(), 1)]), konst: 0 },
            Term::Neg(a) => Linear::of(a)?.scale(-1)?,
            Term::Bin(ArithOp::Add, a, b) => Linear::of(a)?.add(&Linear::of(b)?)?,
            Term::Bin(ArithOp::Sub, a, b) => Linear::of(a)?.add(&Linear::of(b)?.scale(-1)?)?,
            Term::Bin(ArithOp::Mul, a, b) => {
                let la = Linear::of(a)?;
                let lb = Linear::of(b)?;
                if la.coeffs.is_empty() {
                    lb.scale(la.konst)?
                } else if lb.coeffs.is_empty() {
                    la.scale(lb.konst)?
                } else {
                    return None;
                }
            }
            Term::Bin(ArithOp::Div | ArithOp::Rem, ..) => return None,
        };
        lin.coeffs.retain(|_, c| *c != 0);
        Some(lin)
    }

    fn scale(mut self, k: i64) -> Option<Self> {
        for c in self.coeffs.values_mut() {
            *c = c.checked_mul(k)?;
        }
        self.konst = self.konst.checked_mul(k)?;
        Some(self)
    }

    fn add(mut self, other: &Self) -> Option<Self> {
        for (v, c) in &other.coeffs {
            let e = self.coeffs.entry(v.clone()).or_insert(0);
            *e = e.checked_add(*c)?;
        }
        self.konst = self.konst.checked_add(other.konst)?;
        Some(self)
    }

    /// Sum of monomials in variable order, constant last.
    pub fn to_term(&self) -> Term<V> {
        Linear { coeffs: self.coeffs.clone(), konst: 0 }.monomials_plus(self.konst)
    }

    fn monomials_plus(&self, konst: i64) -> Term<V> {
        let mut acc: Option<Term<V>> = None;
        for (v, c) in &self.coeffs {
            let mono = |k: i64| -> Term<V> {
                if k == 1 {
                    Term::Var(v.clone())
                } else {
                    Term::bin(ArithOp::Mul, Term::Const(k), Term::Var(v.clone()))
                }
            };
            acc = Some(match acc {
                None if *c == -1 => Term::neg(Term::Var(v.clone())),
                None => mono(*c),
                Some(t) if *c < 0 && *c != i64::MIN => Term::bin(ArithOp::Sub, t, mono(-c)),
                Some(t) => Term::bin(ArithOp::Add, t, mono(*c)),
            });
        }
        match acc {
            None => Term::Const(konst),
            Some(t) if konst == 0 => t,
            Some(t) if konst < 0 && konst != i64::MIN => Term::bin(ArithOp::Sub, t, Term::Const(-konst)),
            Some(t) => Term::bin(ArithOp::Add, t, Term::Const(konst)),
        }
    }
}

/// Boolean formula over integer terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula<V> {
    True,
    False,
    Cmp(CmpOp, Term<V>, Term<V>),
    Not(Box<Formula<V>>),
    And(Vec<Formula<V>>),
    Or(Vec<Formula<V>>),
}

impl<V: Clone + Ord> Formula<V> {
    pub fn cmp(op: CmpOp, a: Term<V>, b: Term<V>) -> Self {
        Formula::Cmp(op, a, b)
    }

    /// Conjunction that flattens nested conjunctions and drops `True`.
    pub fn conj<I: IntoIterator<Item = Formula<V>>>(parts: I) -> Self {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::True => {}
                Formula::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    /// Disjunction that flattens nested disjunctions and drops `False`.
    pub fn disj<I: IntoIterator<Item = Formula<V>>>(parts: I) -> Self {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::False => {}
                Formula::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    /// Disequality of two equally long tuples: the disjunction of component
    /// disequalities. Syntactically identical components contribute nothing.
    pub fn tuple_ne(pairs: impl IntoIterator<Item = (Term<V>, Term<V>)>) -> Self {
        Formula::disj(pairs.into_iter().filter(|(a, b)| a != b).map(|(a, b)| Formula::Cmp(CmpOp::Ne, a, b)))
    }

    /// Negation pushed through connectives. Comparisons whose operands may
    /// divide by zero keep an explicit `Not` so that undefined comparisons
    /// stay false under [`Formula::holds`].
    pub fn negate(&self) -> Formula<V> {
        match self {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Cmp(op, a, b) if !a.has_division() && !b.has_division() => Formula::Cmp(op.negate(), a.clone(), b.clone()),
            Formula::Cmp(..) => Formula::Not(Box::new(self.clone())),
            Formula::Not(inner) => (**inner).clone(),
            Formula::And(parts) => Formula::Or(parts.iter().map(Formula::negate).collect()),
            Formula::Or(parts) => Formula::And(parts.iter().map(Formula::negate).collect()),
        }
    }

    /// Strict evaluation: every subterm is evaluated and arithmetic failures
    /// propagate. Used by the concrete interpreter.
    pub fn eval<F: FnMut(&V) -> i64>(&self, env: &mut F) -> Result<bool, ArithError> {
        Ok(match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Cmp(op, a, b) => {
                let x = a.eval(env)?;
                let y = b.eval(env)?;
                op.holds(x, y)
            }
            Formula::Not(f) => !f.eval(env)?,
            Formula::And(parts) => {
                let mut all = true;
                for p in parts {
                    all &= p.eval(env)?;
                }
                all
            }
            Formula::Or(parts) => {
                let mut any = false;
                for p in parts {
                    any |= p.eval(env)?;
                }
                any
            }
        })
    }

    /// Total evaluation used by the solver: a comparison whose operands are
    /// undefined (division by zero, overflow) is false.
    pub fn holds<F: FnMut(&V) -> i64>(&self, env: &mut F) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Cmp(op, a, b) => match (a.eval(env), b.eval(env)) {
                (Ok(x), Ok(y)) => op.holds(x, y),
                _ => false,
            },
            Formula::Not(f) => !f.holds(env),
            Formula::And(parts) => parts.iter().all(|p| p.holds(env)),
            Formula::Or(parts) => parts.iter().any(|p| p.holds(env)),
        }
    }

    pub fn substitute<W: Clone + Ord, F: Fn(&V) -> Term<W>>(&self, f: &F) -> Formula<W> {
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Cmp(op, a, b) => Formula::Cmp(*op, a.substitute(f), b.substitute(f)),
            Formula::Not(inner) => Formula::Not(Box::new(inner.substitute(f))),
            Formula::And(parts) => Formula::And(parts.iter().map(|p| p.substitute(f)).collect()),
            Formula::Or(parts) => Formula::Or(parts.iter().map(|p| p.substitute(f)).collect()),
        }
    }

    /// Applies `f` to every term in place of the original.
    pub fn map_terms<F: Fn(&Term<V>) -> Term<V>>(&self, f: &F) -> Formula<V> {
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Cmp(op, a, b) => Formula::Cmp(*op, f(a), f(b)),
            Formula::Not(inner) => Formula::Not(Box::new(inner.map_terms(f))),
            Formula::And(parts) => Formula::And(parts.iter().map(|p| p.map_terms(f)).collect()),
            Formula::Or(parts) => Formula::Or(parts.iter().map(|p| p.map_terms(f)).collect()),
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<V>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Cmp(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Formula::Not(inner) => inner.collect_vars(out),
            Formula::And(parts) | Formula::Or(parts) => parts.iter().for_each(|p| p.collect_vars(out)),
        }
    }

    pub fn vars(&self) -> BTreeSet<V> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_divisors(&self, out: &mut Vec<Term<V>>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Cmp(_, a, b) => {
                a.collect_divisors(out);
                b.collect_divisors(out);
            }
            Formula::Not(inner) => inner.collect_divisors(out),
            Formula::And(parts) | Formula::Or(parts) => parts.iter().for_each(|p| p.collect_divisors(out)),
        }
    }

    pub fn has_division(&self) -> bool {
        let mut d = Vec::new();
        self.collect_divisors(&mut d);
        !d.is_empty()
    }

    /// Equisatisfiable (in fact model-preserving) simplification: constant
    /// folding, identity elimination, double-negation removal, flattening of
    /// conjunctions and disjunctions, and canonical linear comparisons
    /// (`x + 1 < 0` becomes `x < -1`, `x != x + 1` becomes `true`).
    /// Idempotent.
    pub fn simplify(&self) -> Formula<V> {
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Cmp(op, a, b) => simplify_cmp(*op, a, b),
            Formula::Not(inner) => match inner.simplify() {
                Formula::True => Formula::False,
                Formula::False => Formula::True,
                Formula::Not(f) => *f,
                Formula::Cmp(op, a, b) if !a.has_division() && !b.has_division() => Formula::Cmp(op.negate(), a, b).simplify(),
                other => Formula::Not(Box::new(other)),
            },
            Formula::And(parts) => {
                let (mut out, mut seen) = (Vec::new(), BTreeSet::new());
                for p in parts {
                    match p.simplify() {
                        Formula::True => {}
                        Formula::False => return Formula::False,
                        Formula::And(inner) => {
                            for q in inner {
                                push_unique(&mut out, &mut seen, q);
                            }
                        }
                        q => push_unique(&mut out, &mut seen, q),
                    }
                }
                match out.len() {
                    0 => Formula::True,
                    1 => out.pop().unwrap(),
                    _ => Formula::And(out),
                }
            }
            Formula::Or(parts) => {
                let (mut out, mut seen) = (Vec::new(), BTreeSet::new());
                for p in parts {
                    match p.simplify() {
                        Formula::False => {}
                        Formula::True => return Formula::True,
                        Formula::Or(inner) => {
                            for q in inner {
                                push_unique(&mut out, &mut seen, q);
                            }
                        }
                        q => push_unique(&mut out, &mut seen, q),
                    }
                }
                match out.len() {
                    0 => Formula::False,
                    1 => out.pop().unwrap(),
                    _ => Formula::Or(out),
                }
            }
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::False => 1,
            Formula::Cmp(_, a, b) => 1 + a.size() + b.size(),
            Formula::Not(inner) => 1 + inner.size(),
            Formula::And(parts) | Formula::Or(parts) => 1 + parts.iter().map(Formula::size).sum::<usize>(),
        }
    }

    pub fn render(&self, name: &dyn Fn(&V) -> String) -> String {
        let mut s = String::new();
        self.render_into(&mut s, name, 0);
        s
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Or(_) => 1,
            Formula::And(_) => 2,
            Formula::Not(_) => 3,
            Formula::Cmp(..) => 4,
            Formula::True | Formula::False => 8,
        }
    }

    fn render_into(&self, s: &mut String, name: &dyn Fn(&V) -> String, ctx: u8) {
        let prec = self.precedence();
        let paren = prec < ctx;
        if paren {
            s.push('(');
        }
        match self {
            Formula::True => s.push_str("true"),
            Formula::False => s.push_str("false"),
            Formula::Cmp(op, a, b) => {
                a.render_into(s, name, 5);
                s.push(' ');
                s.push_str(op.symbol());
                s.push(' ');
                b.render_into(s, name, 5);
            }
            Formula::Not(inner) => {
                s.push('!');
                inner.render_into(s, name, 4);
            }
            Formula::And(parts) | Formula::Or(parts) => {
                let sep = if matches!(self, Formula::And(_)) { " && " } else { " || " };
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        s.push_str(sep);
                    }
                    p.render_into(s, name, prec + 1);
                }
            }
        }
        if paren {
            s.push(')');
        }
    }
}

fn simplify_cmp<V: Clone + Ord>(op: CmpOp, a: &Term<V>, b: &Term<V>) -> Formula<V> {
    let diff = Term::bin(ArithOp::Sub, a.clone(), b.clone());
    if let Some(lin) = Linear::of(&diff) {
        if lin.coeffs.is_empty() {
            return if op.holds(lin.konst, 0) { Formula::True } else { Formula::False };
        }
        // Make the leading coefficient positive so `-x < 3` reads `x > -3`.
        let leading_negative = lin.coeffs.values().next().is_some_and(|c| *c < 0);
        let (lin, op) = match leading_negative {
            true => match lin.clone().scale(-1) {
                Some(l) => (l, op.flip()),
                None => (lin, op),
            },
            false => (lin, op),
        };
        if let Some(rhs) = lin.konst.checked_neg() {
            let lhs = Linear { coeffs: lin.coeffs.clone(), konst: 0 }.to_term();
            return Formula::Cmp(op, lhs, Term::Const(rhs));
        }
    }
    let a = a.simplify();
    let b = b.simplify();
    if let (Term::Const(x), Term::Const(y)) = (&a, &b) {
        return if op.holds(*x, *y) { Formula::True } else { Formula::False };
    }
    Formula::Cmp(op, a, b)
}

impl<V: Clone + Ord + fmt::Display> fmt::Display for Formula<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(&|v| v.to_string()))
    }
}
