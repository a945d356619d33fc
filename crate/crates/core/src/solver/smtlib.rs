use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use super::{Constraint, Domains, Model, SatResult, SolverError};
use crate::expr::{ArithOp, CmpOp, Formula, Term};
use crate::lang::VarId;

fn symbol(domains: &Domains, v: VarId) -> String {
    match domains.get(v) {
        Some(e) => format!("|{}|", e.name),
        None => format!("|v{v}|"),
    }
}

fn literal(c: i64) -> String {
    if c < 0 {
        format!("(- {})", c.unsigned_abs())
    } else {
        c.to_string()
    }
}

fn term(t: &Term<VarId>, d: &Domains) -> String {
    match t {
        Term::Const(c) => literal(*c),
        Term::Var(v) => symbol(d, *v),
        Term::Neg(a) => format!("(- {})", term(a, d)),
        Term::Bin(op, a, b) => {
            let (a, b) = (term(a, d), term(b, d));
            match op {
                ArithOp::Add => format!("(+ {a} {b})"),
                ArithOp::Sub => format!("(- {a} {b})"),
                ArithOp::Mul => format!("(* {a} {b})"),
                ArithOp::Div => tdiv(&a, &b),
                ArithOp::Rem => format!("(- {a} (* {b} {}))", tdiv(&a, &b)),
            }
        }
    }
}

// Truncating division expressed with SMT-LIB `div`, which rounds so that the
// remainder is non-negative.
fn tdiv(a: &str, b: &str) -> String {
    format!("(ite (>= {a} 0) (div {a} {b}) (- (div (- {a}) {b})))")
}

fn formula(f: &Constraint, d: &Domains) -> String {
    match f {
        Formula::True => "true".into(),
        Formula::False => "false".into(),
        Formula::Cmp(op, a, b) => {
            let (x, y) = (term(a, d), term(b, d));
            let atom = match op {
                CmpOp::Lt => format!("(< {x} {y})"),
                CmpOp::Le => format!("(<= {x} {y})"),
                CmpOp::Gt => format!("(> {x} {y})"),
                CmpOp::Ge => format!("(>= {x} {y})"),
                CmpOp::Eq => format!("(= {x} {y})"),
                CmpOp::Ne => format!("(distinct {x} {y})"),
            };
            let mut divisors = Vec::new();
            a.collect_divisors(&mut divisors);
            b.collect_divisors(&mut divisors);
            if divisors.is_empty() {
                atom
            } else {
                // comparisons over an undefined quotient are false
                let guards: Vec<String> = divisors.iter().map(|q| format!("(distinct {} 0)", term(q, d))).collect();
                format!("(and {} {atom})", guards.join(" "))
            }
        }
        Formula::Not(inner) => format!("(not {})", formula(inner, d)),
        Formula::And(parts) if parts.is_empty() => "true".into(),
        Formula::Or(parts) if parts.is_empty() => "false".into(),
        Formula::And(parts) => format!("(and {})", parts.iter().map(|p| formula(p, d)).collect::<Vec<_>>().join(" ")),
        Formula::Or(parts) => format!("(or {})", parts.iter().map(|p| formula(p, d)).collect::<Vec<_>>().join(" ")),
    }
}

/// SMT-LIB v2 script declaring every input symbol with its domain bounds,
/// asserting `c`, and asking for satisfiability and the symbol values.
pub fn emit_smtlib(c: &Constraint, domains: &Domains) -> String {
    let mut out = String::from("(set-option :produce-models true)\n(set-logic QF_NIA)\n");
    for e in domains.entries() {
        let s = format!("|{}|", e.name);
        out.push_str(&format!("(declare-const {s} Int)\n"));
        out.push_str(&format!("(assert (<= {} {s}))\n", literal(e.lo)));
        out.push_str(&format!("(assert (<= {s} {}))\n", literal(e.hi)));
    }
    out.push_str(&format!("(assert {})\n(check-sat)\n", formula(c, domains)));
    if !domains.entries().is_empty() {
        let names: Vec<String> = domains.entries().iter().map(|e| format!("|{}|", e.name)).collect();
        out.push_str(&format!("(get-value ({}))\n", names.join(" ")));
    }
    out
}

#[derive(Debug, PartialEq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn parse_sexps(text: &str) -> Result<Vec<Sexp>, String> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '(' => stack.push(Vec::new()),
            ')' => {
                let list = stack.pop().ok_or("unbalanced `)`")?;
                stack.last_mut().ok_or("unbalanced `)`")?.push(Sexp::List(list));
            }
            '|' => {
                let mut atom = String::new();
                for ch in chars.by_ref() {
                    if ch == '|' {
                        break;
                    }
                    atom.push(ch);
                }
                stack.last_mut().unwrap().push(Sexp::Atom(atom));
            }
            c if c.is_whitespace() => {}
            c => {
                let mut atom = c.to_string();
                while let Some(&ch) = chars.peek() {
                    if ch.is_whitespace() || ch == '(' || ch == ')' {
                        break;
                    }
                    atom.push(ch);
                    chars.next();
                }
                stack.last_mut().unwrap().push(Sexp::Atom(atom));
            }
        }
    }
    if stack.len() != 1 {
        return Err("unbalanced `(`".into());
    }
    Ok(stack.pop().unwrap())
}

fn sexp_int(s: &Sexp) -> Option<i64> {
    match s {
        Sexp::Atom(a) => a.parse().ok(),
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(minus), inner] if minus == "-" => sexp_int(inner).map(|v| -v),
            _ => None,
        },
    }
}

/// Interprets a solver's answer: verdict on the first line, then the
/// `get-value` response.
pub fn parse_solver_output(text: &str, domains: &Domains) -> Result<SatResult, SolverError> {
    let fail = |m: String| SolverError::ExternalProcessFailure(m);
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let verdict = lines.next().ok_or_else(|| fail("empty solver output".into()))?;
    match verdict {
        "unsat" => return Ok(SatResult::Unsat),
        "unknown" => return Ok(SatResult::Unknown("external solver answered unknown".into())),
        "sat" => {}
        other => return Err(fail(format!("unexpected solver answer `{other}`"))),
    }
    let rest: Vec<&str> = lines.collect();
    let sexps = parse_sexps(&rest.join(" ")).map_err(fail)?;
    let mut values = BTreeMap::new();
    for s in &sexps {
        if let Sexp::List(pairs) = s {
            for pair in pairs {
                if let Sexp::List(kv) = pair {
                    if let [Sexp::Atom(name), value] = kv.as_slice() {
                        let v = sexp_int(value).ok_or_else(|| fail(format!("cannot read value of `{name}`")))?;
                        values.insert(name.clone(), v);
                    }
                }
            }
        }
    }
    for e in domains.entries() {
        values.entry(e.name.clone()).or_insert(e.lo);
    }
    Ok(SatResult::Sat(Model { values }))
}

pub(super) fn solve_external(
    c: &Constraint,
    domains: &Domains,
    cmd: &[String],
    timeout: Duration,
) -> Result<SatResult, SolverError> {
    let fail = |m: String| SolverError::ExternalProcessFailure(m);
    let (program, args) = cmd.split_first().ok_or_else(|| fail("empty solver command".into()))?;
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| fail(format!("cannot start `{program}`: {e}")))?;
    let script = emit_smtlib(c, domains);
    child.stdin.take().unwrap().write_all(script.as_bytes()).map_err(|e| fail(e.to_string()))?;
    let mut stdout = child.stdout.take().unwrap();
    let reader = std::thread::spawn(move || {
        let mut buf = String::new();
        stdout.read_to_string(&mut buf).map(|_| buf)
    });
    let deadline = Instant::now() + timeout;
    loop {
        match child.try_wait().map_err(|e| fail(e.to_string()))? {
            Some(_) => break,
            None if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                return Ok(SatResult::Unknown("timeout".into()));
            }
            None => std::thread::sleep(Duration::from_millis(2)),
        }
    }
    let text = reader.join().map_err(|_| fail("reader thread panicked".into()))?.map_err(|e| fail(e.to_string()))?;
    parse_solver_output(&text, domains)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::DomainEntry;

    #[test]
    fn script_structure() {
        let d = Domains::new(vec![DomainEntry { var: 0, name: "x".into(), lo: -8, hi: 7 }]);
        let c = Formula::cmp(CmpOp::Lt, Term::Var(0), Term::Const(0));
        let s = emit_smtlib(&c, &d);
        assert_eq!(s.matches("declare-const").count(), 1);
        assert_eq!(s.matches("(assert").count(), 3);
        assert!(s.contains("(assert (< |x| 0))"));
        assert!(s.trim_end().ends_with("(get-value (|x|))"));
    }

    #[test]
    fn parses_negative_values() {
        let d = Domains::new(vec![
            DomainEntry { var: 0, name: "x".into(), lo: -8, hi: 7 },
            DomainEntry { var: 1, name: "y".into(), lo: 0, hi: 7 },
        ]);
        let r = parse_solver_output("sat\n((|x| (- 2))\n (y 5))\n", &d).unwrap();
        let m = r.model().unwrap();
        assert_eq!((m.get("x"), m.get("y")), (Some(-2), Some(5)));
        assert_eq!(parse_solver_output("unsat\n(error \"no model\")", &d).unwrap(), SatResult::Unsat);
        assert!(parse_solver_output("garbage", &d).is_err());
    }
}
