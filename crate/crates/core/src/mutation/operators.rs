use crate::expr::{ArithOp, CmpOp, Formula, Term};
use crate::lang::VarId;

use super::Operator;

type T = Term<VarId>;
type F = Formula<VarId>;

/// One syntactic variant of a term or formula plus its label suffix.
pub(crate) type Variant<X> = (X, String);

fn term_variants(t: &T, at_node: &dyn Fn(&T) -> Vec<Variant<T>>) -> Vec<Variant<T>> {
    let mut out = at_node(t);
    match t {
        Term::Const(_) | Term::Var(_) => {}
        Term::Neg(a) => {
            out.extend(term_variants(a, at_node).into_iter().map(|(a2, l)| (Term::neg(a2), l)));
        }
        Term::Bin(op, a, b) => {
            out.extend(term_variants(a, at_node).into_iter().map(|(a2, l)| (Term::bin(*op, a2, (**b).clone()), l)));
            out.extend(term_variants(b, at_node).into_iter().map(|(b2, l)| (Term::bin(*op, (**a).clone(), b2), l)));
        }
    }
    out
}

fn formula_variants(
    f: &F,
    at_formula: &dyn Fn(&F) -> Vec<Variant<F>>,
    at_term: &dyn Fn(&T) -> Vec<Variant<T>>,
) -> Vec<Variant<F>> {
    let mut out = at_formula(f);
    match f {
        Formula::True | Formula::False => {}
        Formula::Cmp(op, a, b) => {
            out.extend(term_variants(a, at_term).into_iter().map(|(a2, l)| (Formula::Cmp(*op, a2, b.clone()), l)));
            out.extend(term_variants(b, at_term).into_iter().map(|(b2, l)| (Formula::Cmp(*op, a.clone(), b2), l)));
        }
        Formula::Not(inner) => {
            out.extend(formula_variants(inner, at_formula, at_term).into_iter().map(|(g, l)| (Formula::Not(Box::new(g)), l)));
        }
        Formula::And(parts) | Formula::Or(parts) => {
            for (i, p) in parts.iter().enumerate() {
                for (g, l) in formula_variants(p, at_formula, at_term) {
                    let mut parts2 = parts.clone();
                    parts2[i] = g;
                    let rebuilt = if matches!(f, Formula::And(_)) { Formula::And(parts2) } else { Formula::Or(parts2) };
                    out.push((rebuilt, l));
                }
            }
        }
    }
    out
}

fn aor_at(t: &T) -> Vec<Variant<T>> {
    match t {
        Term::Bin(op, a, b) => ArithOp::ALL
            .iter()
            .filter(|o| *o != op)
            .map(|o| (Term::bin(*o, (**a).clone(), (**b).clone()), format!("{}→{}", op.symbol(), o.symbol())))
            .collect(),
        _ => Vec::new(),
    }
}

/// Replacement literals for `c`, deduplicated, in the order c+1, c-1, 0, 1, -c.
pub(crate) fn crp_candidates(c: i64) -> Vec<i64> {
    let mut out = Vec::new();
    for cand in [c.checked_add(1), c.checked_sub(1), Some(0), Some(1), c.checked_neg()].into_iter().flatten() {
        if cand != c && !out.contains(&cand) {
            out.push(cand);
        }
    }
    out
}

fn crp_at(t: &T) -> Vec<Variant<T>> {
    match t {
        Term::Const(c) => crp_candidates(*c).into_iter().map(|v| (Term::Const(v), format!("{c}→{v}"))).collect(),
        _ => Vec::new(),
    }
}

fn ror_at(f: &F) -> Vec<Variant<F>> {
    match f {
        Formula::Cmp(op, a, b) => CmpOp::ALL
            .iter()
            .filter(|o| *o != op)
            .map(|o| (Formula::Cmp(*o, a.clone(), b.clone()), format!("{}→{}", op.symbol(), o.symbol())))
            .collect(),
        _ => Vec::new(),
    }
}

fn lcr_at(f: &F) -> Vec<Variant<F>> {
    match f {
        Formula::And(parts) => vec![(Formula::Or(parts.clone()), "&&→||".to_string())],
        Formula::Or(parts) => vec![(Formula::And(parts.clone()), "||→&&".to_string())],
        _ => Vec::new(),
    }
}

fn none_t(_: &T) -> Vec<Variant<T>> {
    Vec::new()
}

fn none_f(_: &F) -> Vec<Variant<F>> {
    Vec::new()
}

/// Variants of a branch guard produced by `op`.
pub(crate) fn guard_variants(op: Operator, g: &F) -> Vec<Variant<F>> {
    match op {
        Operator::Aor => formula_variants(g, &none_f, &aor_at),
        Operator::Crp => formula_variants(g, &none_f, &crp_at),
        Operator::Ror => formula_variants(g, &ror_at, &none_t),
        Operator::Lcr => formula_variants(g, &lcr_at, &none_t),
        Operator::Rhs | Operator::Sdl => Vec::new(),
    }
}

/// Variants of an integer expression produced by `op` (AOR, CRP, RHS).
pub(crate) fn term_variants_for(op: Operator, t: &T) -> Vec<Variant<T>> {
    match op {
        Operator::Aor => term_variants(t, &aor_at),
        Operator::Crp => term_variants(t, &crp_at),
        Operator::Rhs => vec![
            (Term::bin(ArithOp::Add, t.clone(), Term::Const(1)), "+1".to_string()),
            (Term::bin(ArithOp::Sub, t.clone(), Term::Const(1)), "-1".to_string()),
        ],
        _ => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crp_dedupes() {
        assert_eq!(crp_candidates(1), vec![2, 0, -1]);
        assert_eq!(crp_candidates(0), vec![1, -1]);
        assert_eq!(crp_candidates(2), vec![3, 1, 0, -2]);
        assert_eq!(crp_candidates(-1), vec![0, -2, 1]);
    }

    #[test]
    fn aor_visits_nodes_in_preorder() {
        // (x + 1) * 2
        let t = Term::bin(ArithOp::Mul, Term::bin(ArithOp::Add, Term::Var(0), Term::Const(1)), Term::Const(2));
        let labels: Vec<String> = term_variants(&t, &aor_at).into_iter().map(|(_, l)| l).collect();
        assert_eq!(labels.len(), 8);
        assert_eq!(labels[0], "*→+");
        assert_eq!(labels[4], "+→-");
    }

    #[test]
    fn ror_gives_five_variants_per_comparison() {
        let g = Formula::And(vec![
            Formula::Cmp(CmpOp::Lt, Term::Var(0), Term::Const(0)),
            Formula::Cmp(CmpOp::Eq, Term::Var(1), Term::Const(0)),
        ]);
        assert_eq!(guard_variants(Operator::Ror, &g).len(), 10);
        assert_eq!(guard_variants(Operator::Lcr, &g).len(), 1);
    }
}
