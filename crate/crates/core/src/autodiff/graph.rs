//! Reverse-mode differentiation over a recorded tape of matrix operations.
//!
//! Every value is a dense `rows x cols` matrix. A [`Graph`] records the
//! operations applied through it; [`Graph::backward`] replays the tape in
//! reverse from a `1 x 1` loss and returns the gradient of every named
//! parameter leaf the loss depends on.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::autodiff::tensor::{ParamStore, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Handle to a value recorded on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// Gradients keyed by parameter name.
pub type Gradients<S> = BTreeMap<String, Tensor<S>>;

/// Grouping of input rows into (possibly empty) segments, stored CSR-style.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segments {
    offsets: Vec<usize>,
    members: Vec<usize>,
}

impl Segments {
    pub fn from_groups<I, G>(groups: I) -> Self
    where
        I: IntoIterator<Item = G>,
        G: IntoIterator<Item = usize>,
    {
        let mut offsets = vec![0];
        let mut members = Vec::new();
        for g in groups {
            members.extend(g);
            offsets.push(members.len());
        }
        Segments { offsets, members }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn segment(&self, i: usize) -> &[usize] {
        &self.members[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        (0..self.len()).map(move |i| self.segment(i))
    }

    fn max_member(&self) -> Option<usize> {
        self.members.iter().copied().max()
    }
}

enum Op<S> {
    Constant,
    Param(String),
    MatMul(Var, Var),
    AddRow(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, S),
    Relu(Var),
    ConcatCols(Vec<Var>),
    GatherRows(Var, Arc<[usize]>),
    /// Mean, max and min per segment, concatenated column-wise. `argmax` and
    /// `argmin` hold the winning input row per (segment, column).
    Aggregate {
        input: Var,
        segments: Arc<Segments>,
        argmax: Vec<usize>,
        argmin: Vec<usize>,
    },
    SumAll(Var),
    MeanAll(Var),
}

struct Node<S> {
    rows: usize,
    cols: usize,
    value: Vec<S>,
    op: Op<S>,
    tracked: bool,
}

/// Recording tape for one forward pass.
pub struct Graph<S: Scalar> {
    nodes: Vec<Node<S>>,
    params: HashMap<String, Var>,
}

impl<S: Scalar> Default for Graph<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> Graph<S> {
    pub fn new() -> Self {
        Graph {
            nodes: Vec::new(),
            params: HashMap::new(),
        }
    }

    fn push(&mut self, rows: usize, cols: usize, value: Vec<S>, op: Op<S>, tracked: bool) -> Var {
        debug_assert_eq!(rows * cols, value.len());
        self.nodes.push(Node {
            rows,
            cols,
            value,
            op,
            tracked,
        });
        Var(self.nodes.len() - 1)
    }

    fn node(&self, v: Var) -> &Node<S> {
        &self.nodes[v.0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        let n = self.node(v);
        (n.rows, n.cols)
    }

    pub fn value(&self, v: Var) -> &[S] {
        &self.node(v).value
    }

    pub fn to_tensor(&self, v: Var) -> Tensor<S> {
        let n = self.node(v);
        Tensor::matrix(n.rows, n.cols, n.value.clone()).expect("recorded node has a valid shape")
    }

    /// Records an untracked input matrix.
    pub fn constant(&mut self, rows: usize, cols: usize, value: Vec<S>) -> Result<Var> {
        if rows * cols != value.len() {
            return Err(Error::dim("constant", rows * cols, value.len()));
        }
        Ok(self.push(rows, cols, value, Op::Constant, false))
    }

    pub fn constant_tensor(&mut self, t: &Tensor<S>) -> Var {
        self.push(t.rows(), t.cols(), t.values().to_vec(), Op::Constant, false)
    }

    /// Records a named parameter leaf; repeated calls with the same name
    /// return the same handle.
    pub fn param(&mut self, name: &str, t: &Tensor<S>) -> Var {
        if let Some(&v) = self.params.get(name) {
            return v;
        }
        let v = self.push(
            t.rows(),
            t.cols(),
            t.values().to_vec(),
            Op::Param(name.to_string()),
            true,
        );
        self.params.insert(name.to_string(), v);
        v
    }

    /// Looks a parameter up in `store` and records it.
    pub fn param_from(&mut self, store: &ParamStore<S>, name: &str) -> Result<Var> {
        if let Some(&v) = self.params.get(name) {
            return Ok(v);
        }
        let t = store.get(name)?;
        Ok(self.param(name, t))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.shape(a);
        let (k2, n) = self.shape(b);
        if k != k2 {
            return Err(Error::dim("matmul inner dimension", k, k2));
        }
        let mut out = vec![S::zero(); m * n];
        S::gemm(
            m,
            k,
            n,
            S::one(),
            self.value(a),
            false,
            self.value(b),
            false,
            S::zero(),
            &mut out,
        );
        let tracked = self.node(a).tracked || self.node(b).tracked;
        Ok(self.push(m, n, out, Op::MatMul(a, b), tracked))
    }

    /// Adds a `1 x cols` row to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (m, n) = self.shape(a);
        let (r, c) = self.shape(row);
        if r != 1 || c != n {
            return Err(Error::dim("row broadcast", n, r * c));
        }
        let bias = self.value(row);
        let mut out = self.value(a).to_vec();
        for chunk in out.chunks_exact_mut(n) {
            for (o, b) in chunk.iter_mut().zip(bias) {
                *o += *b;
            }
        }
        let tracked = self.node(a).tracked || self.node(row).tracked;
        Ok(self.push(m, n, out, Op::AddRow(a, row), tracked))
    }

    fn elementwise(&mut self, a: Var, b: Var, what: &str, f: impl Fn(S, S) -> S) -> Result<Var> {
        let sa = self.shape(a);
        let sb = self.shape(b);
        if sa != sb {
            return Err(Error::dim(what, sa.0 * sa.1, sb.0 * sb.1));
        }
        let out = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(&x, &y)| f(x, y))
            .collect();
        let op = match what {
            "add" => Op::Add(a, b),
            "sub" => Op::Sub(a, b),
            _ => Op::Mul(a, b),
        };
        let tracked = self.node(a).tracked || self.node(b).tracked;
        Ok(self.push(sa.0, sa.1, out, op, tracked))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.elementwise(a, b, "add", |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.elementwise(a, b, "sub", |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.elementwise(a, b, "mul", |x, y| x * y)
    }

    pub fn scale(&mut self, a: Var, s: S) -> Var {
        let (m, n) = self.shape(a);
        let out = self.value(a).iter().map(|&x| x * s).collect();
        let tracked = self.node(a).tracked;
        self.push(m, n, out, Op::Scale(a, s), tracked)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let (m, n) = self.shape(a);
        let out = self
            .value(a)
            .iter()
            .map(|&x| if x > S::zero() { x } else { S::zero() })
            .collect();
        let tracked = self.node(a).tracked;
        self.push(m, n, out, Op::Relu(a), tracked)
    }

    /// Column-wise concatenation of matrices with equal row counts.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let Some(&first) = parts.first() else {
            return Err(Error::Contract("concat of zero matrices".into()));
        };
        let rows = self.shape(first).0;
        let mut cols = 0;
        for &p in parts {
            let (r, c) = self.shape(p);
            if r != rows {
                return Err(Error::dim("concat rows", rows, r));
            }
            cols += c;
        }
        let mut out = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for &p in parts {
                let c = self.node(p).cols;
                out.extend_from_slice(&self.node(p).value[i * c..(i + 1) * c]);
            }
        }
        let tracked = parts.iter().any(|&p| self.node(p).tracked);
        Ok(self.push(rows, cols, out, Op::ConcatCols(parts.to_vec()), tracked))
    }

    /// Selects rows of `a` (repetition allowed).
    pub fn gather_rows(&mut self, a: Var, index: Arc<[usize]>) -> Result<Var> {
        let (m, n) = self.shape(a);
        if let Some(&bad) = index.iter().find(|&&i| i >= m) {
            return Err(Error::Contract(format!("row index {bad} out of range for {m} rows")));
        }
        let src = self.value(a);
        let mut out = Vec::with_capacity(index.len() * n);
        for &i in index.iter() {
            out.extend_from_slice(&src[i * n..(i + 1) * n]);
        }
        let tracked = self.node(a).tracked;
        Ok(self.push(index.len(), n, out, Op::GatherRows(a, index), tracked))
    }

    /// Permutation-invariant set aggregation: for every segment, the
    /// element-wise mean, max and min of its member rows, concatenated into
    /// `3 * cols` columns. Empty segments produce zeros.
    ///
    /// The mean sums members in value order, so the output does not depend on
    /// the order in which members are listed.
    pub fn aggregate(&mut self, a: Var, segments: Arc<Segments>) -> Result<Var> {
        let (m, n) = self.shape(a);
        if let Some(mx) = segments.max_member() {
            if mx >= m {
                return Err(Error::Contract(format!(
                    "segment member {mx} out of range for {m} rows"
                )));
            }
        }
        let k = segments.len();
        let src = self.value(a);
        let mut out = vec![S::zero(); k * 3 * n];
        let mut argmax = vec![usize::MAX; k * n];
        let mut argmin = vec![usize::MAX; k * n];
        let mut scratch: Vec<S> = Vec::new();
        for (s, members) in segments.iter().enumerate() {
            if members.is_empty() {
                continue;
            }
            let count = S::from_usize(members.len()).expect("segment size fits the scalar type");
            let row = &mut out[s * 3 * n..(s + 1) * 3 * n];
            for j in 0..n {
                scratch.clear();
                scratch.extend(members.iter().map(|&r| src[r * n + j]));
                scratch.sort_by(|x, y| x.total_cmp(y));
                let sum: S = scratch.iter().copied().sum();
                row[j] = sum / count;

                let mut best_max = members[0];
                let mut best_min = members[0];
                for &r in &members[1..] {
                    if src[r * n + j] > src[best_max * n + j] {
                        best_max = r;
                    }
                    if src[r * n + j] < src[best_min * n + j] {
                        best_min = r;
                    }
                }
                row[n + j] = src[best_max * n + j];
                row[2 * n + j] = src[best_min * n + j];
                argmax[s * n + j] = best_max;
                argmin[s * n + j] = best_min;
            }
        }
        let tracked = self.node(a).tracked;
        Ok(self.push(
            k,
            3 * n,
            out,
            Op::Aggregate {
                input: a,
                segments,
                argmax,
                argmin,
            },
            tracked,
        ))
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let s: S = self.value(a).iter().copied().sum();
        let tracked = self.node(a).tracked;
        self.push(1, 1, vec![s], Op::SumAll(a), tracked)
    }

    pub fn mean_all(&mut self, a: Var) -> Var {
        let n = self.node(a).value.len();
        let s: S = self.value(a).iter().copied().sum();
        let mean = s / S::from_usize(n).expect("element count fits the scalar type");
        let tracked = self.node(a).tracked;
        self.push(1, 1, vec![mean], Op::MeanAll(a), tracked)
    }

    /// Mean squared error between two equally shaped matrices.
    pub fn mse(&mut self, pred: Var, target: Var) -> Result<Var> {
        let diff = self.sub(pred, target)?;
        let sq = self.mul(diff, diff)?;
        Ok(self.mean_all(sq))
    }

    /// Gradient of the scalar `loss` with respect to every parameter leaf it
    /// depends on. Parameters the loss does not reach are absent.
    pub fn backward(&self, loss: Var) -> Result<Gradients<S>> {
        let (r, c) = self.shape(loss);
        if r * c != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got a {r}x{c} value"
            )));
        }
        let mut out = Gradients::new();
        if !self.node(loss).tracked {
            return Ok(out);
        }
        let mut grads: Vec<Option<Vec<S>>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(vec![S::one()]);

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Constant => {}
                Op::Param(name) => {
                    let t = Tensor::matrix(node.rows, node.cols, g)?;
                    out.insert(name.clone(), t);
                }
                Op::MatMul(a, b) => {
                    let (m, k) = self.shape(*a);
                    let n = node.cols;
                    if self.node(*a).tracked {
                        let ga = acc(&mut grads, *a, m * k);
                        S::gemm(m, n, k, S::one(), &g, false, self.value(*b), true, S::one(), ga);
                    }
                    if self.node(*b).tracked {
                        let gb = acc(&mut grads, *b, k * n);
                        S::gemm(k, m, n, S::one(), self.value(*a), true, &g, false, S::one(), gb);
                    }
                }
                Op::AddRow(a, row) => {
                    let n = node.cols;
                    if self.node(*a).tracked {
                        add_into(acc(&mut grads, *a, g.len()), &g);
                    }
                    if self.node(*row).tracked {
                        let gr = acc(&mut grads, *row, n);
                        for chunk in g.chunks_exact(n) {
                            add_into(gr, chunk);
                        }
                    }
                }
                Op::Add(a, b) => {
                    for v in [*a, *b] {
                        if self.node(v).tracked {
                            add_into(acc(&mut grads, v, g.len()), &g);
                        }
                    }
                }
                Op::Sub(a, b) => {
                    if self.node(*a).tracked {
                        add_into(acc(&mut grads, *a, g.len()), &g);
                    }
                    if self.node(*b).tracked {
                        let gb = acc(&mut grads, *b, g.len());
                        for (o, x) in gb.iter_mut().zip(&g) {
                            *o -= *x;
                        }
                    }
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (self.value(*a), self.value(*b));
                    if self.node(*a).tracked {
                        let ga = acc(&mut grads, *a, g.len());
                        for ((o, x), y) in ga.iter_mut().zip(&g).zip(vb) {
                            *o += *x * *y;
                        }
                    }
                    if self.node(*b).tracked {
                        let gb = acc(&mut grads, *b, g.len());
                        for ((o, x), y) in gb.iter_mut().zip(&g).zip(va) {
                            *o += *x * *y;
                        }
                    }
                }
                Op::Scale(a, s) => {
                    let ga = acc(&mut grads, *a, g.len());
                    for (o, x) in ga.iter_mut().zip(&g) {
                        *o += *x * *s;
                    }
                }
                Op::Relu(a) => {
                    let ga = acc(&mut grads, *a, g.len());
                    for ((o, x), y) in ga.iter_mut().zip(&g).zip(&node.value) {
                        if *y > S::zero() {
                            *o += *x;
                        }
                    }
                }
                Op::ConcatCols(parts) => {
                    let rows = node.rows;
                    let total = node.cols;
                    let mut offset = 0;
                    for &p in parts {
                        let c = self.node(p).cols;
                        if self.node(p).tracked {
                            let gp = acc(&mut grads, p, rows * c);
                            for i in 0..rows {
                                add_into(
                                    &mut gp[i * c..(i + 1) * c],
                                    &g[i * total + offset..i * total + offset + c],
                                );
                            }
                        }
                        offset += c;
                    }
                }
                Op::GatherRows(a, index) => {
                    let (m, n) = self.shape(*a);
                    let ga = acc(&mut grads, *a, m * n);
                    for (k, &i) in index.iter().enumerate() {
                        add_into(&mut ga[i * n..(i + 1) * n], &g[k * n..(k + 1) * n]);
                    }
                }
                Op::Aggregate {
                    input,
                    segments,
                    argmax,
                    argmin,
                } => {
                    let (m, n) = self.shape(*input);
                    let ga = acc(&mut grads, *input, m * n);
                    for (s, members) in segments.iter().enumerate() {
                        if members.is_empty() {
                            continue;
                        }
                        let inv = S::one() / S::from_usize(members.len()).expect("fits");
                        let row = &g[s * 3 * n..(s + 1) * 3 * n];
                        for &r in members {
                            for j in 0..n {
                                ga[r * n + j] += row[j] * inv;
                            }
                        }
                        for j in 0..n {
                            ga[argmax[s * n + j] * n + j] += row[n + j];
                            ga[argmin[s * n + j] * n + j] += row[2 * n + j];
                        }
                    }
                }
                Op::SumAll(a) => {
                    let len = self.node(*a).value.len();
                    let ga = acc(&mut grads, *a, len);
                    for o in ga.iter_mut() {
                        *o += g[0];
                    }
                }
                Op::MeanAll(a) => {
                    let len = self.node(*a).value.len();
                    let share = g[0] / S::from_usize(len).expect("fits");
                    let ga = acc(&mut grads, *a, len);
                    for o in ga.iter_mut() {
                        *o += share;
                    }
                }
            }
        }
        Ok(out)
    }
}

fn acc<S: Scalar>(grads: &mut [Option<Vec<S>>], v: Var, len: usize) -> &mut [S] {
    grads[v.0].get_or_insert_with(|| vec![S::zero(); len])
}

fn add_into<S: Scalar>(dst: &mut [S], src: &[S]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += *s;
    }
}
