//! C-like source text for a compiled program.

use std::fmt::Write;

use super::slp::{Opcode, RegisterClass, StraightLineProgram, NEGATED};

fn literal(v: f64) -> String {
    if v.is_nan() {
        "NAN".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "INFINITY".into()
        } else {
            "(-INFINITY)".into()
        }
    } else if v.is_sign_negative() {
        format!("({v:?})")
    } else {
        format!("{v:?}")
    }
}

fn operand(p: &StraightLineProgram, r: u32) -> String {
    match p.register_class(r) {
        RegisterClass::Input(i) => format!("x[{i}]"),
        RegisterClass::Constant(v) => literal(v),
        RegisterClass::Temporary => format!("t{r}"),
    }
}

fn product(p: &StraightLineProgram, a: u32, b: u32) -> String {
    match p.register_class(b) {
        RegisterClass::Constant(1.0) => operand(p, a),
        _ => format!("{} * {}", operand(p, a), operand(p, b)),
    }
}

/// Renders `p` as a function `void name(const double *x, double *y)`, one
/// statement per instruction.
pub fn emit_source(p: &StraightLineProgram, name: &str) -> String {
    let mut s = String::new();
    let uses_sign = p.instructions().iter().any(|i| i.op == Opcode::Sign);
    if uses_sign {
        s.push_str("#define sign(v) (double)(((v) > 0) - ((v) < 0))\n\n");
    }
    let _ = writeln!(s, "void {name}(const double *x, double *y)\n{{");
    let mut temps: Vec<u32> = p.instructions().iter().map(|i| i.dst).collect();
    temps.sort_unstable();
    temps.dedup();
    if !temps.is_empty() {
        let decl: Vec<String> = temps.iter().map(|r| format!("t{r}")).collect();
        for chunk in decl.chunks(12) {
            let _ = writeln!(s, "    double {};", chunk.join(", "));
        }
    }
    let terms = p.terms();
    for ins in p.instructions() {
        let a = || operand(p, ins.src1);
        let b = || operand(p, ins.src2);
        let rhs = match ins.op {
            Opcode::Add => format!("{} + {}", a(), b()),
            Opcode::Sub => format!("{} - {}", a(), b()),
            Opcode::Mul => format!("{} * {}", a(), b()),
            Opcode::Div => format!("{} / {}", a(), b()),
            Opcode::Neg => format!("-{}", a()),
            Opcode::SumProd => {
                let t = &terms[ins.src1 as usize..];
                let n = t[0] as usize;
                let mut e = String::new();
                for (k, pr) in t[1..1 + 2 * n].chunks_exact(2).enumerate() {
                    let term = product(p, pr[0] & !NEGATED, pr[1]);
                    let negated = pr[0] & NEGATED != 0;
                    match (k, negated) {
                        (0, false) => e.push_str(&term),
                        (0, true) => e.push_str(&format!("-({term})")),
                        (_, false) => e.push_str(&format!(" + {term}")),
                        (_, true) => e.push_str(&format!(" - {term}")),
                    }
                }
                e
            }
            op => format!("{}({})", op.name(), a()),
        };
        let _ = writeln!(s, "    t{} = {};", ins.dst, rhs);
    }
    for (k, &r) in p.outputs().iter().enumerate() {
        let _ = writeln!(s, "    y[{k}] = {};", operand(p, r));
    }
    s.push_str("}\n");
    s
}
