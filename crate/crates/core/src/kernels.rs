//! Perturbable workloads: the harmonic series, summation, dot product, axpy
//! and dense matrix product, plus repetition drivers and a per-operation
//! timing harness.
//!
//! Accumulation order is left to right everywhere. Matrices are dense and
//! row-major.

use std::fmt;
use std::hint::black_box;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpcore::{FormatName, IeeeFloat};
use crate::metrics::SampleSet;
use crate::rng::RngStream;
use crate::rounding::{OpContext, RoundingMode};

/// Stream id reserved for generating kernel input data.
pub const DATA_STREAM_ID: u64 = u64::MAX;

/// Largest matrix dimension accepted by the drivers.
pub const MAX_MATRIX_DIM: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Harmonic,
    Sum,
    Dot,
    Axpy,
    Matmul,
}

impl KernelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelKind::Harmonic => "harmonic",
            KernelKind::Sum => "sum",
            KernelKind::Dot => "dot",
            KernelKind::Axpy => "axpy",
            KernelKind::Matmul => "matmul",
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "harmonic" => Ok(KernelKind::Harmonic),
            "sum" => Ok(KernelKind::Sum),
            "dot" => Ok(KernelKind::Dot),
            "axpy" => Ok(KernelKind::Axpy),
            "matmul" => Ok(KernelKind::Matmul),
            _ => Err(Error::Shape(format!("unknown kernel `{s}`"))),
        }
    }
}

/// What to run. `n` is the series length or vector length; matmul
/// multiplies an `m x k` matrix by a `k x n` matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub format: FormatName,
    pub mode: RoundingMode,
    /// Perturb the `1/i` terms of the harmonic series as well as the sums.
    pub perturb_division: bool,
}

impl KernelSpec {
    pub fn harmonic(n: usize, format: FormatName, mode: RoundingMode) -> Self {
        KernelSpec { kind: KernelKind::Harmonic, n, m: 1, k: 1, format, mode, perturb_division: true }
    }

    pub fn vector(kind: KernelKind, n: usize, format: FormatName, mode: RoundingMode) -> Self {
        KernelSpec { kind, n, m: 1, k: 1, format, mode, perturb_division: true }
    }

    pub fn matmul(m: usize, k: usize, n: usize, format: FormatName, mode: RoundingMode) -> Self {
        KernelSpec { kind: KernelKind::Matmul, n, m, k, format, mode, perturb_division: true }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.k == 0 {
            return Err(Error::Shape("kernel sizes must be at least 1".into()));
        }
        if self.kind == KernelKind::Matmul && [self.m, self.k, self.n].iter().any(|&d| d > MAX_MATRIX_DIM) {
            return Err(Error::Shape(format!("matrix dimensions are capped at {MAX_MATRIX_DIM}")));
        }
        match self.format {
            FormatName::Binary32 => self.mode.virtual_precision::<f32>().map(drop),
            FormatName::Binary64 => self.mode.virtual_precision::<f64>().map(drop),
        }
    }

    /// Number of scalar outputs per execution.
    pub fn output_len(&self) -> usize {
        match self.kind {
            KernelKind::Harmonic | KernelKind::Sum | KernelKind::Dot => 1,
            KernelKind::Axpy => self.n,
            KernelKind::Matmul => self.m * self.n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<F> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<F>,
}

impl<F: IeeeFloat> Matrix<F> {
    pub fn new(rows: usize, cols: usize, data: Vec<F>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!("{} values for a {rows}x{cols} matrix", data.len())));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![F::ZERO; n * n];
        for i in 0..n {
            data[i * n + i] = F::ONE;
        }
        Matrix { rows: n, cols: n, data }
    }

    pub fn get(&self, r: usize, c: usize) -> F {
        self.data[r * self.cols + c]
    }
}

/// `sum_{i=1}^{n} 1/i`, accumulated left to right.
pub fn harmonic_series<F: IeeeFloat>(n: usize, ctx: &mut OpContext<'_, F>, perturb_division: bool) -> F {
    let mut acc = F::ZERO;
    for i in 1..=n {
        let denom = F::from_f64(i as f64);
        let term = if perturb_division { ctx.div(F::ONE, denom) } else { F::ONE / denom };
        acc = ctx.add(acc, term);
    }
    acc
}

pub fn perturbed_sum<F: IeeeFloat>(v: &[F], ctx: &mut OpContext<'_, F>) -> Result<F> {
    if v.is_empty() {
        return Err(Error::Empty("sum of an empty vector"));
    }
    Ok(v.iter().fold(F::ZERO, |acc, &x| ctx.add(acc, x)))
}

/// FMA accumulation `acc = u_i * v_i + acc`, starting from zero.
pub fn perturbed_dot<F: IeeeFloat>(u: &[F], v: &[F], ctx: &mut OpContext<'_, F>) -> Result<F> {
    if u.len() != v.len() {
        return Err(Error::Shape(format!("dot of lengths {} and {}", u.len(), v.len())));
    }
    if u.is_empty() {
        return Err(Error::Empty("dot of empty vectors"));
    }
    Ok(u.iter().zip(v).fold(F::ZERO, |acc, (&a, &b)| ctx.fma(a, b, acc)))
}

/// `a * x + y` elementwise, one FMA per element.
pub fn perturbed_axpy<F: IeeeFloat>(a: F, x: &[F], y: &[F], ctx: &mut OpContext<'_, F>) -> Result<Vec<F>> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("axpy of lengths {} and {}", x.len(), y.len())));
    }
    Ok(x.iter().zip(y).map(|(&xi, &yi)| ctx.fma(a, xi, yi)).collect())
}

/// Each output cell is a [`perturbed_dot`] of a row of `a` and a column of `b`.
pub fn perturbed_matmul<F: IeeeFloat>(a: &Matrix<F>, b: &Matrix<F>, ctx: &mut OpContext<'_, F>) -> Result<Matrix<F>> {
    if a.cols != b.rows {
        return Err(Error::Shape(format!("matmul of {}x{} by {}x{}", a.rows, a.cols, b.rows, b.cols)));
    }
    let mut out = Vec::with_capacity(a.rows * b.cols);
    for i in 0..a.rows {
        for j in 0..b.cols {
            let mut acc = F::ZERO;
            for p in 0..a.cols {
                acc = ctx.fma(a.get(i, p), b.get(p, j), acc);
            }
            out.push(acc);
        }
    }
    Matrix::new(a.rows, b.cols, out)
}

/// Uninstrumented implementations with the same evaluation order.
pub mod reference {
    use super::Matrix;
    use crate::fpcore::IeeeFloat;

    pub fn harmonic_series<F: IeeeFloat>(n: usize) -> F {
        let mut acc = F::ZERO;
        for i in 1..=n {
            acc = acc + F::ONE / F::from_f64(i as f64);
        }
        acc
    }

    pub fn sum<F: IeeeFloat>(v: &[F]) -> F {
        v.iter().fold(F::ZERO, |acc, &x| acc + x)
    }

    pub fn dot<F: IeeeFloat>(u: &[F], v: &[F]) -> F {
        u.iter().zip(v).fold(F::ZERO, |acc, (&a, &b)| a.fma(b, acc))
    }

    pub fn axpy<F: IeeeFloat>(a: F, x: &[F], y: &[F]) -> Vec<F> {
        x.iter().zip(y).map(|(&xi, &yi)| a.fma(xi, yi)).collect()
    }

    pub fn matmul<F: IeeeFloat>(a: &Matrix<F>, b: &Matrix<F>) -> Matrix<F> {
        let mut data = Vec::with_capacity(a.rows * b.cols);
        for i in 0..a.rows {
            for j in 0..b.cols {
                let mut acc = F::ZERO;
                for p in 0..a.cols {
                    acc = a.get(i, p).fma(b.get(p, j), acc);
                }
                data.push(acc);
            }
        }
        Matrix { rows: a.rows, cols: b.cols, data }
    }
}

/// Kernel operands, stored as `f64` values exactly representable in the
/// kernel's format.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelInputs {
    pub scalar: f64,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl KernelInputs {
    /// Uniform values on `[-1, 1)` drawn from `(seed, DATA_STREAM_ID)`.
    pub fn generate(spec: &KernelSpec, seed: u64) -> Self {
        let mut stream = RngStream::new(seed, DATA_STREAM_ID);
        let mut draw = |len: usize| -> Vec<f64> {
            (0..len)
                .map(|_| {
                    let x = 2.0 * stream.next_unit_uniform() - 1.0;
                    match spec.format {
                        FormatName::Binary32 => x as f32 as f64,
                        FormatName::Binary64 => x,
                    }
                })
                .collect()
        };
        let (first_len, second_len) = match spec.kind {
            KernelKind::Harmonic => (0, 0),
            KernelKind::Sum => (spec.n, 0),
            KernelKind::Dot | KernelKind::Axpy => (spec.n, spec.n),
            KernelKind::Matmul => (spec.m * spec.k, spec.k * spec.n),
        };
        let scalar = draw(1)[0];
        let first = draw(first_len);
        let second = draw(second_len);
        KernelInputs { scalar, first, second }
    }
}

fn cast<F: IeeeFloat>(v: &[f64]) -> Vec<F> {
    v.iter().map(|&x| F::from_f64(x)).collect()
}

fn widen<F: IeeeFloat>(v: &[F]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64()).collect()
}

fn execute_typed<F: IeeeFloat>(spec: &KernelSpec, inputs: &KernelInputs, stream: &mut RngStream) -> Result<Vec<f64>> {
    let mut ctx = OpContext::<F>::new(spec.mode, stream)?;
    let out = match spec.kind {
        KernelKind::Harmonic => vec![harmonic_series(spec.n, &mut ctx, spec.perturb_division)],
        KernelKind::Sum => vec![perturbed_sum(&cast::<F>(&inputs.first), &mut ctx)?],
        KernelKind::Dot => vec![perturbed_dot(&cast::<F>(&inputs.first), &cast::<F>(&inputs.second), &mut ctx)?],
        KernelKind::Axpy => {
            perturbed_axpy(F::from_f64(inputs.scalar), &cast::<F>(&inputs.first), &cast::<F>(&inputs.second), &mut ctx)?
        }
        KernelKind::Matmul => {
            let a = Matrix::new(spec.m, spec.k, cast::<F>(&inputs.first))?;
            let b = Matrix::new(spec.k, spec.n, cast::<F>(&inputs.second))?;
            perturbed_matmul(&a, &b, &mut ctx)?.data
        }
    };
    Ok(widen(&out))
}

/// Runs the kernel once under `spec.mode`, returning its outputs widened to
/// `f64`.
pub fn execute(spec: &KernelSpec, inputs: &KernelInputs, stream: &mut RngStream) -> Result<Vec<f64>> {
    spec.validate()?;
    match spec.format {
        FormatName::Binary32 => execute_typed::<f32>(spec, inputs, stream),
        FormatName::Binary64 => execute_typed::<f64>(spec, inputs, stream),
    }
}

fn reference_typed<F: IeeeFloat>(spec: &KernelSpec, inputs: &KernelInputs) -> Result<Vec<f64>> {
    let out = match spec.kind {
        KernelKind::Harmonic => vec![reference::harmonic_series::<F>(spec.n)],
        KernelKind::Sum => vec![reference::sum(&cast::<F>(&inputs.first))],
        KernelKind::Dot => vec![reference::dot(&cast::<F>(&inputs.first), &cast::<F>(&inputs.second))],
        KernelKind::Axpy => {
            reference::axpy(F::from_f64(inputs.scalar), &cast::<F>(&inputs.first), &cast::<F>(&inputs.second))
        }
        KernelKind::Matmul => {
            let a = Matrix::new(spec.m, spec.k, cast::<F>(&inputs.first))?;
            let b = Matrix::new(spec.k, spec.n, cast::<F>(&inputs.second))?;
            reference::matmul(&a, &b).data
        }
    };
    Ok(widen(&out))
}

/// The uninstrumented round-to-nearest result in the kernel's working format.
pub fn execute_reference(spec: &KernelSpec, inputs: &KernelInputs) -> Result<Vec<f64>> {
    spec.validate()?;
    match spec.format {
        FormatName::Binary32 => reference_typed::<f32>(spec, inputs),
        FormatName::Binary64 => reference_typed::<f64>(spec, inputs),
    }
}

/// Outputs of repeated executions, indexed by repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct Repetitions {
    pub spec: KernelSpec,
    /// `outputs[rep][element]`.
    pub outputs: Vec<Vec<f64>>,
    pub wall_ns: Vec<u64>,
}

impl Repetitions {
    pub fn reps(&self) -> usize {
        self.outputs.len()
    }

    /// Samples of one output element across repetitions.
    pub fn sample_set(&self, element: usize) -> SampleSet {
        SampleSet {
            values: self.outputs.iter().map(|o| o[element]).collect(),
            format: self.spec.format,
            label: format!("{}:{}:{}", self.spec.kind, self.spec.mode, element),
        }
    }
}

/// Executes `spec` `reps` times, repetition `r` drawing from
/// `base.child(r)`. Repetitions may run in parallel; results are ordered by
/// repetition index.
pub fn run_repetitions(spec: &KernelSpec, inputs: &KernelInputs, reps: usize, base: &RngStream) -> Result<Repetitions> {
    if reps == 0 {
        return Err(Error::Empty("at least one repetition is required"));
    }
    spec.validate()?;
    let runs = base
        .split(reps)
        .into_par_iter()
        .map(|mut stream| {
            let start = Instant::now();
            let out = execute(spec, inputs, &mut stream)?;
            Ok((out, start.elapsed().as_nanos() as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    let (outputs, wall_ns) = runs.into_iter().unzip();
    Ok(Repetitions { spec: spec.clone(), outputs, wall_ns })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchOp {
    Add,
    Mul,
    Div,
    Sqrt,
    Fma,
}

impl BenchOp {
    pub const ALL: [BenchOp; 5] = [BenchOp::Add, BenchOp::Mul, BenchOp::Div, BenchOp::Sqrt, BenchOp::Fma];

    pub fn as_str(self) -> &'static str {
        match self {
            BenchOp::Add => "add",
            BenchOp::Mul => "mul",
            BenchOp::Div => "div",
            BenchOp::Sqrt => "sqrt",
            BenchOp::Fma => "fma",
        }
    }
}

/// Median nanoseconds per scalar operation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpTiming {
    pub op: BenchOp,
    pub mode: RoundingMode,
    pub format: FormatName,
    pub ops_per_run: usize,
    pub median_ns_per_op: f64,
    pub runs_ns_per_op: Vec<f64>,
}

pub const BENCH_WARMUP_RUNS: usize = 3;
pub const BENCH_MIN_RUNS: usize = 10;

fn time_op_typed<F: IeeeFloat>(
    op: BenchOp,
    mode: RoundingMode,
    ops: usize,
    runs: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut data = RngStream::new(seed, DATA_STREAM_ID);
    let mut operand = || F::from_f64(0.5 + data.next_unit_uniform());
    let xs: Vec<F> = (0..ops).map(|_| operand()).collect();
    let ys: Vec<F> = (0..ops).map(|_| operand()).collect();
    let mut stream = RngStream::new(seed, 0);
    let mut ctx = OpContext::<F>::new(mode, &mut stream)?;

    let mut per_op = Vec::with_capacity(runs);
    for run in 0..BENCH_WARMUP_RUNS + runs {
        let start = Instant::now();
        for (&x, &y) in xs.iter().zip(&ys) {
            let (x, y) = (black_box(x), black_box(y));
            let r = match op {
                BenchOp::Add => ctx.add(x, y),
                BenchOp::Mul => ctx.mul(x, y),
                BenchOp::Div => ctx.div(x, y),
                BenchOp::Sqrt => ctx.sqrt(x),
                BenchOp::Fma => ctx.fma(x, y, x),
            };
            black_box(r);
        }
        let elapsed = start.elapsed().as_nanos() as f64;
        if run >= BENCH_WARMUP_RUNS {
            per_op.push(elapsed / ops as f64);
        }
    }
    Ok(per_op)
}

/// Times `ops` scalar operations per run over `runs` runs (at least
/// [`BENCH_MIN_RUNS`]) after [`BENCH_WARMUP_RUNS`] warm-up runs, on a
/// monotonic clock.
pub fn time_op(
    op: BenchOp,
    mode: RoundingMode,
    format: FormatName,
    ops: usize,
    runs: usize,
    seed: u64,
) -> Result<OpTiming> {
    let runs = runs.max(BENCH_MIN_RUNS);
    let ops = ops.max(1);
    let samples = match format {
        FormatName::Binary32 => time_op_typed::<f32>(op, mode, ops, runs, seed)?,
        FormatName::Binary64 => time_op_typed::<f64>(op, mode, ops, runs, seed)?,
    };
    Ok(OpTiming { op, mode, format, ops_per_run: ops, median_ns_per_op: median(&samples), runs_ns_per_op: samples })
}

pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if sorted.len().is_multiple_of(2) {
        0.5 * (sorted[mid - 1] + sorted[mid])
    } else {
        sorted[mid]
    }
}
