//! Forward-mode derivatives expressed as graph nodes.

use super::{Graph, Op, Tensor};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

impl Graph {
    /// Builds the directional derivative of `output` with respect to `input`
    /// along `seed` as new nodes of this graph.
    ///
    /// Parameters and constants have zero tangent. The returned tensor has the
    /// shape of `output` and is itself differentiable, so a later
    /// [`Graph::backward`] propagates through it (this is how gradient
    /// penalties reach the parameters).
    pub fn jvp(&mut self, input: Tensor, seed: Matrix, output: Tensor) -> Result<Tensor> {
        if seed.shape() != self.shape(input) {
            return Err(Error::Shape { op: "jvp", left: self.shape(input), right: seed.shape() });
        }
        let (r, c) = self.shape(output);
        if output.0 < input.0 {
            return Ok(self.constant(Matrix::zeros(r, c)));
        }
        let base = input.0;
        let end = output.0;
        let mut tan: Vec<Option<Tensor>> = vec![None; end - base + 1];
        tan[0] = Some(self.constant(seed));
        for i in base + 1..=end {
            let op = self.nodes[i].op.clone();
            let look = |t: Tensor| if t.0 >= base && t.0 <= end { tan[t.0 - base] } else { None };
            let out = match op {
                Op::Leaf => None,
                Op::MatMul(a, b) => {
                    let x = match look(a) { Some(ta) => Some(self.matmul(ta, b)?), None => None };
                    let y = match look(b) { Some(tb) => Some(self.matmul(a, tb)?), None => None };
                    self.sum_opt(x, y)?
                }
                Op::MatMulT(a, b) => {
                    let x = match look(a) { Some(ta) => Some(self.matmul_t(ta, b)?), None => None };
                    let y = match look(b) { Some(tb) => Some(self.matmul_t(a, tb)?), None => None };
                    self.sum_opt(x, y)?
                }
                Op::Add(a, b) => {
                    let (x, y) = (look(a), look(b));
                    self.sum_opt(x, y)?
                }
                Op::Sub(a, b) => {
                    let y = look(b).map(|tb| self.neg(tb));
                    self.sum_opt(look(a), y)?
                }
                Op::Mul(a, b) => {
                    let x = match look(a) { Some(ta) => Some(self.mul(ta, b)?), None => None };
                    let y = match look(b) { Some(tb) => Some(self.mul(a, tb)?), None => None };
                    self.sum_opt(x, y)?
                }
                Op::Div(a, b) => {
                    // d(a/b) = (da - (a/b) db) / b
                    let y = match look(b) {
                        Some(tb) => {
                            let q = self.mul(Tensor(i), tb)?;
                            Some(self.neg(q))
                        }
                        None => None,
                    };
                    match self.sum_opt(look(a), y)? {
                        Some(num) => Some(self.div(num, b)?),
                        None => None,
                    }
                }
                Op::AddRow(a, row) => match (look(a), look(row)) {
                    (ta, Some(tr)) => {
                        let base_t = match ta {
                            Some(ta) => ta,
                            None => {
                                let (r, c) = self.shape(a);
                                self.constant(Matrix::zeros(r, c))
                            }
                        };
                        Some(self.add_row(base_t, tr)?)
                    }
                    (ta, None) => ta,
                },
                Op::MulCol(a, col) => {
                    let x = match look(a) { Some(ta) => Some(self.mul_col(ta, col)?), None => None };
                    let y = match look(col) { Some(tc) => Some(self.mul_col(a, tc)?), None => None };
                    self.sum_opt(x, y)?
                }
                Op::MulScalar(a, s) => {
                    let x = match look(a) { Some(ta) => Some(self.mul_scalar(ta, s)?), None => None };
                    let y = match look(s) { Some(ts) => Some(self.mul_scalar(a, ts)?), None => None };
                    self.sum_opt(x, y)?
                }
                Op::Scale(a, f) => look(a).map(|ta| self.scale(ta, f)),
                Op::AddConst(a) => look(a),
                Op::MulConst(a, m) => match look(a) {
                    Some(ta) => Some(self.mul_const(ta, m)?),
                    None => None,
                },
                Op::ScaleCols(a, w) => match look(a) {
                    Some(ta) => Some(self.scale_cols(ta, w)?),
                    None => None,
                },
                Op::Unary(a, f) => match look(a) {
                    Some(ta) => {
                        let d = self.unary_deriv(a, f);
                        Some(self.mul(d, ta)?)
                    }
                    None => None,
                },
                Op::RowSum(a) => look(a).map(|ta| self.row_sum(ta)),
                Op::Sum(a) => look(a).map(|ta| self.sum(ta)),
                Op::Mean(a) => look(a).map(|ta| self.mean(ta)),
                Op::ConcatCols(parts) => {
                    let tans: Vec<Option<Tensor>> = parts.iter().map(|&p| look(p)).collect();
                    if tans.iter().all(Option::is_none) {
                        None
                    } else {
                        let filled = self.fill_zero_tangents(&parts, &tans);
                        Some(self.concat_cols(&filled)?)
                    }
                }
                Op::SliceCols(a, start) => match look(a) {
                    Some(ta) => {
                        let len = self.shape(Tensor(i)).1;
                        Some(self.slice_cols(ta, start, len)?)
                    }
                    None => None,
                },
                Op::ConcatRows(parts) => {
                    let tans: Vec<Option<Tensor>> = parts.iter().map(|&p| look(p)).collect();
                    if tans.iter().all(Option::is_none) {
                        None
                    } else {
                        let filled = self.fill_zero_tangents(&parts, &tans);
                        Some(self.concat_rows(&filled)?)
                    }
                }
                Op::SegmentSum(a, segments) => match look(a) {
                    Some(ta) => Some(self.segment_sum(ta, segments)?),
                    None => None,
                },
                op @ (Op::UnaryDeriv(..) | Op::Softmax(..) | Op::CrossEntropy(..)) => {
                    if look_any(&op, &look) {
                        return Err(Error::NoTangentRule(op.name()));
                    }
                    None
                }
            };
            tan[i - base] = out;
        }
        Ok(match tan[end - base] {
            Some(t) => t,
            None => self.constant(Matrix::zeros(r, c)),
        })
    }

    fn sum_opt(&mut self, a: Option<Tensor>, b: Option<Tensor>) -> Result<Option<Tensor>> {
        Ok(match (a, b) {
            (Some(a), Some(b)) => Some(self.add(a, b)?),
            (a, None) => a,
            (None, b) => b,
        })
    }

    fn fill_zero_tangents(&mut self, parts: &[Tensor], tans: &[Option<Tensor>]) -> Vec<Tensor> {
        parts
            .iter()
            .zip(tans)
            .map(|(&p, t)| match t {
                Some(t) => *t,
                None => {
                    let (r, c) = self.shape(p);
                    self.constant(Matrix::zeros(r, c))
                }
            })
            .collect()
    }
}

fn look_any(op: &Op, look: &impl Fn(Tensor) -> Option<Tensor>) -> bool {
    match op {
        Op::UnaryDeriv(a, _) | Op::Softmax(a) | Op::CrossEntropy(a, _) => look(*a).is_some(),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jvp_matches_reverse_mode_for_each_coordinate() {
        // f(x) = sum over rows of sigmoid(x W^T) . c, a per-row scalar.
        let x0 = Matrix::from_rows(&[vec![0.3, -1.2, 0.8], vec![1.1, 0.4, -0.6]]);
        let w = Matrix::from_rows(&[vec![0.5, -0.2, 0.1], vec![0.3, 0.9, -0.4]]);
        let build = |g: &mut Graph, x: Tensor| -> Result<Tensor> {
            let wt = g.constant(w.clone());
            let h = g.matmul_t(x, wt)?;
            let s = g.sigmoid(h);
            let sq = g.square(s);
            Ok(g.row_sum(sq))
        };
        let mut g = Graph::new();
        let x = g.input(x0.clone());
        let y = build(&mut g, x).unwrap();
        let total = g.sum(y);
        g.backward(total).unwrap();
        let rev = g.grad(x).unwrap().clone();
        for k in 0..3 {
            let mut seed = Matrix::zeros(2, 3);
            seed.set(0, k, 1.0);
            seed.set(1, k, 1.0);
            let t = g.jvp(x, seed, y).unwrap();
            for r in 0..2 {
                assert!((g.value(t).get(r, 0) - rev.get(r, k)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn second_order_through_jvp() {
        // d/dx of (d/dx sinh(x)^2) = d/dx 2 sinh cosh = 2 cosh(2x)
        let mut g = Graph::new();
        let x = g.input(Matrix::scalar(0.7));
        let s = g.sinh(x);
        let y = g.square(s);
        let dy = g.jvp(x, Matrix::scalar(1.0), y).unwrap();
        assert!((g.value(dy).item() - (1.4f64).sinh()).abs() < 1e-14);
        g.backward(dy).unwrap();
        assert!((g.grad(x).unwrap().item() - 2.0 * (1.4f64).cosh()).abs() < 1e-13);
    }
}
