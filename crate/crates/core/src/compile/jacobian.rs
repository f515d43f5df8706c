//! Symbolic forward and reverse differentiation of an [`Ir`] into a fused
//! graph whose outputs are the primal values followed by the Jacobian in
//! row-major order.

use crate::autodiff::Op;

use super::ir::{Builder, Ir};

/// A graph node with a pending sign, so negations fold into the adds and
/// subtracts that consume them.
#[derive(Clone, Copy, Debug)]
struct Signed {
    node: u32,
    neg: bool,
}

impl Signed {
    fn plus(node: u32) -> Self {
        Signed { node, neg: false }
    }
}

fn mul(b: &mut Builder, x: Signed, s: Signed) -> Signed {
    Signed {
        node: b.mul(x.node, s.node),
        neg: x.neg ^ s.neg,
    }
}

fn add(b: &mut Builder, x: Signed, y: Signed) -> Signed {
    match (x.neg, y.neg) {
        (false, false) => Signed::plus(b.add(x.node, y.node)),
        (false, true) => Signed::plus(b.sub(x.node, y.node)),
        (true, false) => Signed::plus(b.sub(y.node, x.node)),
        (true, true) => Signed {
            node: b.add(x.node, y.node),
            neg: true,
        },
    }
}

fn materialize(b: &mut Builder, x: Signed) -> u32 {
    if x.neg {
        b.neg(x.node)
    } else {
        x.node
    }
}

/// Sparse tangent: `(column, value)` pairs sorted by column.
type Tangent = Vec<(u32, Signed)>;

/// Imports the primal graph into `b` and returns the node map.
fn import(primal: &Ir, b: &mut Builder) -> Vec<u32> {
    let mut map = Vec::with_capacity(primal.nodes.len());
    for (i, n) in primal.nodes.iter().enumerate() {
        let id = match n.op {
            Op::Input => i as u32,
            Op::Const => b.constant(n.value),
            op => b.op(
                op,
                map[n.args[0] as usize],
                if op.arity() == 2 {
                    map[n.args[1] as usize]
                } else {
                    0
                },
            ),
        };
        map.push(id);
    }
    map
}

fn scale(b: &mut Builder, t: &Tangent, s: Signed) -> Tangent {
    t.iter().map(|&(j, d)| (j, mul(b, d, s))).collect()
}

fn term(b: &mut Builder, d: Signed, s: Option<Signed>) -> Signed {
    match s {
        Some(s) => mul(b, d, s),
        None => d,
    }
}

/// `ta * sa + tb * sb` where a missing scale means one.
fn combine(
    b: &mut Builder,
    ta: &Tangent,
    sa: Option<Signed>,
    tb: &Tangent,
    sb: Option<Signed>,
) -> Tangent {
    let mut out = Vec::with_capacity(ta.len() + tb.len());
    let (mut i, mut k) = (0, 0);
    while i < ta.len() || k < tb.len() {
        let ja = ta.get(i).map_or(u32::MAX, |e| e.0);
        let jb = tb.get(k).map_or(u32::MAX, |e| e.0);
        if ja < jb {
            out.push((ja, term(b, ta[i].1, sa)));
            i += 1;
        } else if jb < ja {
            out.push((jb, term(b, tb[k].1, sb)));
            k += 1;
        } else {
            let x = term(b, ta[i].1, sa);
            let y = term(b, tb[k].1, sb);
            out.push((ja, add(b, x, y)));
            i += 1;
            k += 1;
        }
    }
    out
}

/// Local partial derivatives of a node; `None` stands for a unit partial.
#[derive(Clone, Copy)]
enum Partials {
    Zero,
    Unary(Signed),
    Binary(Option<Signed>, Option<Signed>),
}

fn partials(b: &mut Builder, op: Op, a: u32, bb: u32, y: u32) -> Partials {
    let one = b.constant(1.0);
    match op {
        Op::Input | Op::Const | Op::Sign => Partials::Zero,
        Op::Add => Partials::Binary(None, None),
        Op::Sub => Partials::Binary(
            None,
            Some(Signed {
                node: one,
                neg: true,
            }),
        ),
        Op::Mul => Partials::Binary(Some(Signed::plus(bb)), Some(Signed::plus(a))),
        Op::Div => {
            let inv = b.div(one, bb);
            let r = b.mul(y, inv);
            Partials::Binary(Some(Signed::plus(inv)), Some(Signed { node: r, neg: true }))
        }
        Op::Neg => Partials::Unary(Signed {
            node: one,
            neg: true,
        }),
        Op::Sin => Partials::Unary(Signed::plus(b.unary(Op::Cos, a))),
        Op::Cos => Partials::Unary(Signed {
            node: b.unary(Op::Sin, a),
            neg: true,
        }),
        Op::Tan => {
            let y2 = b.mul(y, y);
            Partials::Unary(Signed::plus(b.add(one, y2)))
        }
        Op::Exp => Partials::Unary(Signed::plus(y)),
        Op::Ln => Partials::Unary(Signed::plus(b.div(one, a))),
        Op::Sqrt => {
            let half = b.constant(0.5);
            Partials::Unary(Signed::plus(b.div(half, y)))
        }
        Op::Abs => Partials::Unary(Signed::plus(b.unary(Op::Sign, a))),
    }
}

fn primal_outputs(primal: &Ir, map: &[u32]) -> Vec<u32> {
    primal.outputs.iter().map(|&o| map[o as usize]).collect()
}

/// Forward mode: one sparse tangent per node, seeded on `wrt`.
pub(crate) fn forward(primal: &Ir, wrt: &[usize]) -> Ir {
    let mut b = Builder::new(primal.n_inputs);
    let map = import(primal, &mut b);
    let one = b.constant(1.0);
    let zero = b.constant(0.0);
    let mut seed = vec![None; primal.n_inputs];
    for (c, &j) in wrt.iter().enumerate() {
        seed[j] = Some(c as u32);
    }
    let empty: Tangent = Vec::new();
    let mut tangents: Vec<Tangent> = Vec::with_capacity(primal.nodes.len());
    for (i, n) in primal.nodes.iter().enumerate() {
        let t = if n.op == Op::Input {
            seed[i].map_or_else(Vec::new, |c| vec![(c, Signed::plus(one))])
        } else if n.op.arity() == 0 {
            Vec::new()
        } else {
            let a = map[n.args[0] as usize];
            let bb = if n.op.arity() == 2 {
                map[n.args[1] as usize]
            } else {
                0
            };
            let ta = &tangents[n.args[0] as usize];
            let tb = if n.op.arity() == 2 {
                &tangents[n.args[1] as usize]
            } else {
                &empty
            };
            if ta.is_empty() && tb.is_empty() {
                Vec::new()
            } else {
                match partials(&mut b, n.op, a, bb, map[i]) {
                    Partials::Zero => Vec::new(),
                    Partials::Unary(s) => scale(&mut b, ta, s),
                    Partials::Binary(sa, sb) => combine(&mut b, ta, sa, tb, sb),
                }
            }
        };
        tangents.push(t);
    }
    let mut outputs = primal_outputs(primal, &map);
    for &o in &primal.outputs {
        let t = &tangents[o as usize];
        let mut row = vec![zero; wrt.len()];
        for &(j, d) in t {
            row[j as usize] = materialize(&mut b, d);
        }
        outputs.extend(row);
    }
    b.finish(outputs)
}

/// Reverse mode: one adjoint sweep per output, all in the same builder so
/// shared partials are computed once.
pub(crate) fn reverse(primal: &Ir, wrt: &[usize]) -> Ir {
    let mut b = Builder::new(primal.n_inputs);
    let map = import(primal, &mut b);
    let one = b.constant(1.0);
    let zero = b.constant(0.0);
    let n = primal.nodes.len();
    // Partials depend only on the primal node, so cache them across sweeps.
    let mut cache: Vec<Option<Partials>> = (0..n).map(|_| None).collect();
    let mut outputs = primal_outputs(primal, &map);
    let mut adj: Vec<Option<Signed>> = vec![None; n];
    for &o in &primal.outputs {
        adj.iter_mut().for_each(|a| *a = None);
        adj[o as usize] = Some(Signed::plus(one));
        for i in (primal.n_inputs..n).rev() {
            let Some(g) = adj[i] else { continue };
            let node = primal.nodes[i];
            if node.op.arity() == 0 {
                continue;
            }
            let ai = node.args[0] as usize;
            let bi = node.args[1] as usize;
            if cache[i].is_none() {
                let a = map[ai];
                let bb = if node.op.arity() == 2 { map[bi] } else { 0 };
                cache[i] = Some(partials(&mut b, node.op, a, bb, map[i]));
            }
            let accumulate =
                |b: &mut Builder, adj: &mut Vec<Option<Signed>>, k: usize, v: Signed| {
                    adj[k] = Some(match adj[k] {
                        None => v,
                        Some(acc) => add(b, acc, v),
                    });
                };
            match *cache[i].as_ref().unwrap() {
                Partials::Zero => {}
                Partials::Unary(s) => {
                    let v = mul(&mut b, g, s);
                    accumulate(&mut b, &mut adj, ai, v);
                }
                Partials::Binary(sa, sb) => {
                    let va = term(&mut b, g, sa);
                    accumulate(&mut b, &mut adj, ai, va);
                    let vb = term(&mut b, g, sb);
                    accumulate(&mut b, &mut adj, bi, vb);
                }
            }
        }
        for &j in wrt {
            let v = adj[j].map_or(zero, |a| materialize(&mut b, a));
            outputs.push(v);
        }
    }
    b.finish(outputs)
}
