use std::fmt::Write;

use num_traits::Signed;

use super::ast::{Clause, Expr, ExprKind, Literal, Module};
use crate::item::{ItemType, Occurrence, SequenceType};

/// Renders a module as parseable text. Every compound subexpression is
/// parenthesized, so the output does not depend on operator precedence.
pub fn print_module(m: &Module) -> String {
    let mut out = String::new();
    for f in &m.functions {
        let _ = write!(out, "declare function {}(", f.name);
        for (i, p) in f.params.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            let _ = write!(out, "${}", p.name);
            if let Some(t) = &p.ty {
                let _ = write!(out, " as {}", print_sequence_type(t));
            }
        }
        out.push(')');
        if let Some(t) = &f.ret {
            let _ = write!(out, " as {}", print_sequence_type(t));
        }
        out.push_str(" {\n  ");
        write_expr(&f.body, &mut out);
        out.push_str("\n};\n");
    }
    write_expr(&m.body, &mut out);
    out
}

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, &mut out);
    out
}

pub fn print_sequence_type(t: &SequenceType) -> String {
    let item = match &t.item {
        ItemType::Function(Some(sig)) => {
            let params: Vec<String> = sig.params.iter().map(print_sequence_type).collect();
            let s = format!("function({}) as {}", params.join(", "), print_sequence_type(&sig.ret));
            if t.occurrence == Occurrence::One {
                return s;
            }
            format!("({s})")
        }
        other => other.to_string(),
    };
    format!("{item}{}", t.occurrence.suffix())
}

fn is_name(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '-')
}

fn write_literal(l: &Literal, out: &mut String) {
    match l {
        Literal::String(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
        Literal::Integer(v) if v.is_negative() => {
            let _ = write!(out, "({v})");
        }
        Literal::Integer(v) => {
            let _ = write!(out, "{v}");
        }
        Literal::Decimal(v) => {
            let mut s = crate::item::Atomic::Decimal(v.clone()).lexical();
            if !s.contains('.') {
                s.push_str(".0");
            }
            if v.is_negative() {
                let _ = write!(out, "({s})");
            } else {
                out.push_str(&s);
            }
        }
        Literal::Double(v) => {
            if v.is_sign_negative() {
                let _ = write!(out, "({v:e})");
            } else {
                let _ = write!(out, "{v:e}");
            }
        }
        Literal::Boolean(b) => out.push_str(if *b { "true" } else { "false" }),
        Literal::Null => out.push_str("null"),
    }
}

/// Atoms print without surrounding parentheses; everything else is wrapped.
fn is_atom(e: &Expr) -> bool {
    matches!(
        e.kind,
        ExprKind::Literal(_)
            | ExprKind::Var(_)
            | ExprKind::ContextItem
            | ExprKind::Sequence(_)
            | ExprKind::ObjectCtor(_)
            | ExprKind::MergedObjectCtor(_)
            | ExprKind::ArrayCtor(_)
            | ExprKind::StaticCall { .. }
            | ExprKind::NamedFunctionRef { .. }
            | ExprKind::Predicate { .. }
            | ExprKind::Lookup { .. }
            | ExprKind::DynamicCall { .. }
    )
}

fn write_operand(e: &Expr, out: &mut String) {
    if is_atom(e) {
        write_expr(e, out);
    } else {
        out.push('(');
        write_expr(e, out);
        out.push(')');
    }
}

fn write_args(args: &[Expr], out: &mut String) {
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_operand(a, out);
    }
    out.push(')');
}

fn write_expr(e: &Expr, out: &mut String) {
    match &e.kind {
        ExprKind::Literal(l) => write_literal(l, out),
        ExprKind::Var(v) => {
            let _ = write!(out, "${v}");
        }
        ExprKind::ContextItem => out.push_str("$$"),
        ExprKind::Sequence(items) => {
            out.push('(');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_operand(item, out);
            }
            out.push(')');
        }
        ExprKind::Flwor { clauses, ret } => {
            for c in clauses {
                match c {
                    Clause::For { var, at, expr, .. } => {
                        let _ = write!(out, "for ${var} ");
                        if let Some(p) = at {
                            let _ = write!(out, "at ${p} ");
                        }
                        out.push_str("in ");
                        write_operand(expr, out);
                    }
                    Clause::Let { var, expr, .. } => {
                        let _ = write!(out, "let ${var} := ");
                        write_operand(expr, out);
                    }
                    Clause::Where(cond) => {
                        out.push_str("where ");
                        write_operand(cond, out);
                    }
                    Clause::OrderBy { key, descending } => {
                        out.push_str("order by ");
                        write_operand(key, out);
                        out.push_str(if *descending { " descending" } else { " ascending" });
                    }
                }
                out.push(' ');
            }
            out.push_str("return ");
            write_operand(ret, out);
        }
        ExprKind::If { cond, then, otherwise } => {
            out.push_str("if (");
            write_expr(cond, out);
            out.push_str(") then ");
            write_operand(then, out);
            out.push_str(" else ");
            write_operand(otherwise, out);
        }
        ExprKind::Or(a, b) | ExprKind::And(a, b) => {
            write_operand(a, out);
            out.push_str(if matches!(e.kind, ExprKind::Or(..)) { " or " } else { " and " });
            write_operand(b, out);
        }
        ExprKind::Not(a) => {
            out.push_str("not ");
            write_operand(a, out);
        }
        ExprKind::Comparison { op, lhs, rhs } => {
            write_operand(lhs, out);
            let _ = write!(out, " {} ", op.keyword());
            write_operand(rhs, out);
        }
        ExprKind::Arithmetic { op, lhs, rhs } => {
            write_operand(lhs, out);
            let _ = write!(out, " {} ", op.symbol());
            write_operand(rhs, out);
        }
        ExprKind::Negate(a) => {
            out.push_str("-(");
            write_expr(a, out);
            out.push(')');
        }
        ExprKind::Range { from, to } => {
            write_operand(from, out);
            out.push_str(" to ");
            write_operand(to, out);
        }
        ExprKind::ObjectCtor(pairs) => {
            out.push('{');
            for (i, (k, v)) in pairs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_operand(k, out);
                out.push_str(" : ");
                write_operand(v, out);
            }
            out.push('}');
        }
        ExprKind::MergedObjectCtor(inner) => {
            out.push_str("{| ");
            write_expr(inner, out);
            out.push_str(" |}");
        }
        ExprKind::ArrayCtor(inner) => {
            out.push('[');
            if let Some(inner) = inner {
                write_expr(inner, out);
            }
            out.push(']');
        }
        ExprKind::Predicate { base, cond } => {
            write_operand(base, out);
            out.push('[');
            write_expr(cond, out);
            out.push(']');
        }
        ExprKind::Lookup { base, key } => {
            write_operand(base, out);
            out.push('.');
            match &key.kind {
                ExprKind::Literal(Literal::String(s)) if is_name(s) => out.push_str(s),
                ExprKind::Literal(Literal::String(_)) => write_expr(key, out),
                _ => {
                    out.push('(');
                    write_expr(key, out);
                    out.push(')');
                }
            }
        }
        ExprKind::StaticCall { name, args } => {
            out.push_str(name);
            write_args(args, out);
        }
        ExprKind::DynamicCall { target, args } => {
            if matches!(target.kind, ExprKind::Literal(_) | ExprKind::NamedFunctionRef { .. }) {
                out.push('(');
                write_expr(target, out);
                out.push(')');
            } else {
                write_operand(target, out);
            }
            write_args(args, out);
        }
        ExprKind::NamedFunctionRef { name, arity } => {
            let _ = write!(out, "{name}#{arity}");
        }
    }
}
