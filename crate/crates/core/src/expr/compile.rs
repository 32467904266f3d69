use super::{rational_to_f64, Expr};

#[derive(Clone, Debug)]
enum Op {
    Const(f64),
    Var(usize),
    Add(usize),
    Mul(usize),
    Neg,
    Div,
    PowI(i32),
    PowF(f64),
    Sin,
    Cos,
    Exp,
    Sqrt,
}

/// Postfix program for fast repeated evaluation of an [`Expr`].
#[derive(Clone, Debug)]
pub struct Compiled {
    ops: Vec<Op>,
    depth: usize,
}

impl Compiled {
    pub(crate) fn new(e: &Expr) -> Self {
        let mut ops = Vec::new();
        emit(e, &mut ops);
        let mut depth = 0usize;
        let mut cur = 0usize;
        for op in &ops {
            match op {
                Op::Const(_) | Op::Var(_) => cur += 1,
                Op::Add(n) | Op::Mul(n) => cur = cur + 1 - n,
                Op::Div => cur -= 1,
                _ => {}
            }
            depth = depth.max(cur);
        }
        Compiled { ops, depth }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        if self.depth <= 32 {
            let mut stack = [0.0f64; 32];
            run(&self.ops, x, &mut stack)
        } else {
            let mut stack = vec![0.0f64; self.depth];
            run(&self.ops, x, &mut stack)
        }
    }
}

fn run(ops: &[Op], x: &[f64], stack: &mut [f64]) -> f64 {
    let mut sp = 0usize;
    for op in ops {
        match *op {
            Op::Const(c) => {
                stack[sp] = c;
                sp += 1;
            }
            Op::Var(i) => {
                stack[sp] = x[i];
                sp += 1;
            }
            Op::Add(n) => {
                let s: f64 = stack[sp - n..sp].iter().sum();
                sp -= n;
                stack[sp] = s;
                sp += 1;
            }
            Op::Mul(n) => {
                let p: f64 = stack[sp - n..sp].iter().product();
                sp -= n;
                stack[sp] = p;
                sp += 1;
            }
            Op::Neg => stack[sp - 1] = -stack[sp - 1],
            Op::Div => {
                sp -= 1;
                stack[sp - 1] /= stack[sp];
            }
            Op::PowI(k) => stack[sp - 1] = stack[sp - 1].powi(k),
            Op::PowF(q) => stack[sp - 1] = stack[sp - 1].powf(q),
            Op::Sin => stack[sp - 1] = stack[sp - 1].sin(),
            Op::Cos => stack[sp - 1] = stack[sp - 1].cos(),
            Op::Exp => stack[sp - 1] = stack[sp - 1].exp(),
            Op::Sqrt => stack[sp - 1] = stack[sp - 1].sqrt(),
        }
    }
    stack[0]
}

fn emit(e: &Expr, ops: &mut Vec<Op>) {
    match e {
        Expr::Const(r) => ops.push(Op::Const(rational_to_f64(r))),
        Expr::Float(f) => ops.push(Op::Const(*f)),
        Expr::Var(i) => ops.push(Op::Var(*i)),
        Expr::Add(v) | Expr::Mul(v) if v.is_empty() => {
            ops.push(Op::Const(if matches!(e, Expr::Add(_)) { 0.0 } else { 1.0 }))
        }
        Expr::Add(v) => {
            v.iter().for_each(|t| emit(t, ops));
            ops.push(Op::Add(v.len()));
        }
        Expr::Mul(v) => {
            v.iter().for_each(|t| emit(t, ops));
            ops.push(Op::Mul(v.len()));
        }
        Expr::Neg(a) => {
            emit(a, ops);
            ops.push(Op::Neg);
        }
        Expr::Div(a, b) => {
            emit(a, ops);
            emit(b, ops);
            ops.push(Op::Div);
        }
        Expr::IntPow(a, k) => {
            emit(a, ops);
            ops.push(Op::PowI(*k as i32));
        }
        Expr::RealPow(a, q) => {
            emit(a, ops);
            ops.push(Op::PowF(rational_to_f64(q)));
        }
        Expr::Sin(a) => {
            emit(a, ops);
            ops.push(Op::Sin);
        }
        Expr::Cos(a) => {
            emit(a, ops);
            ops.push(Op::Cos);
        }
        Expr::Exp(a) => {
            emit(a, ops);
            ops.push(Op::Exp);
        }
        Expr::Sqrt(a) => {
            emit(a, ops);
            ops.push(Op::Sqrt);
        }
    }
}
