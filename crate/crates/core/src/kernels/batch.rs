//! Batch integration: one element per logical thread, elements partitioned
//! across a fixed pool of workers.

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use super::physics::{ConvDiff, Physics, Poisson};
use super::variants::{select_kernel, Sink};
use super::{ElementMatrix, KernelDescriptor, ProblemClass, CONV_DIFF_COEFFS};
use crate::error::{Error, GeometryError, Result};
use crate::layout::{ElementBatch, OutputLayout, PAD};
use crate::refelem::{prism_tables, tet_tables, ElementType, RefTables};

/// Elements per scheduling unit. A multiple of every lane width, so a task
/// always owns whole output blocks.
const TASK_ELEMENTS: usize = 256;

/// Global memory traffic, counted in `f64` values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrafficCounters {
    pub reads: u64,
    pub writes: u64,
}

impl TrafficCounters {
    pub fn total(&self) -> u64 {
        self.reads + self.writes
    }

    fn merge(self, other: TrafficCounters) -> TrafficCounters {
        TrafficCounters { reads: self.reads + other.reads, writes: self.writes + other.writes }
    }
}

/// Output of [`integrate_batch`]: `A` row-major then `b`, per element, in
/// the requested output layout.
#[derive(Debug, Clone)]
pub struct BatchResult {
    pub element: ElementType,
    pub problem: ProblemClass,
    pub n_elements: usize,
    pub layout: OutputLayout,
    pub data: Vec<f64>,
    pub traffic: TrafficCounters,
}

impl BatchResult {
    pub fn stride(&self) -> usize {
        let n = self.element.num_shape_functions();
        n * n + n
    }

    pub fn element_result(&self, e: usize) -> Result<ElementMatrix> {
        if e >= self.n_elements {
            return Err(Error::IndexOutOfRange { index: e, len: self.n_elements });
        }
        let n = self.element.num_shape_functions();
        let ds = self.stride();
        let get = |d: usize| self.data[self.layout.index(e, d, ds)];
        Ok(ElementMatrix { n, a: (0..n * n).map(get).collect(), b: (n * n..ds).map(get).collect() })
    }

    /// Global accesses per element; exact when every element moved the same
    /// amount of data.
    pub fn accesses_per_element(&self) -> f64 {
        if self.n_elements == 0 {
            return 0.0;
        }
        self.traffic.total() as f64 / self.n_elements as f64
    }
}

/// A fixed worker count for batch integration. With one worker the batch
/// runs on the calling thread.
pub struct Executor {
    workers: usize,
    pool: Option<ThreadPool>,
}

impl Executor {
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::Parse("worker count must be at least 1".into()));
        }
        let pool = if workers > 1 {
            Some(
                ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .map_err(|e| Error::Parse(format!("thread pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(Executor { workers, pool })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn integrate(&self, desc: &KernelDescriptor, batch: &ElementBatch, out_layout: OutputLayout) -> Result<BatchResult> {
        desc.validate()?;
        if desc.element != batch.element() || desc.problem != batch.problem() {
            return Err(Error::InvalidDescriptor(format!(
                "kernel {desc} cannot integrate a {}/{} batch",
                batch.element(),
                batch.problem()
            )));
        }
        match (desc.element, desc.problem) {
            (ElementType::Tetrahedron, ProblemClass::Poisson) => {
                self.run::<4, 4, Poisson>(desc, tet_tables(), batch, out_layout)
            }
            (ElementType::Tetrahedron, ProblemClass::ConvDiff) => {
                self.run::<4, 4, ConvDiff>(desc, tet_tables(), batch, out_layout)
            }
            (ElementType::Prism, ProblemClass::Poisson) => {
                self.run::<6, 6, Poisson>(desc, prism_tables(), batch, out_layout)
            }
            (ElementType::Prism, ProblemClass::ConvDiff) => {
                self.run::<6, 6, ConvDiff>(desc, prism_tables(), batch, out_layout)
            }
        }
    }

    fn run<const NS: usize, const NQ: usize, P: Physics>(
        &self,
        desc: &KernelDescriptor,
        tables: &RefTables<NS, NQ>,
        batch: &ElementBatch,
        out_layout: OutputLayout,
    ) -> Result<BatchResult> {
        debug_assert_eq!(P::CLASS, batch.problem());
        let n = batch.len();
        let ds = NS * NS + NS;
        let mut data = vec![PAD; out_layout.padded_len(n) * ds];

        let task = |(ci, chunk): (usize, &mut [f64])| -> Result<TrafficCounters, (usize, GeometryError)> {
            let first = ci * TASK_ELEMENTS;
            let last = (first + TASK_ELEMENTS).min(n);
            let kernel = select_kernel::<NS, NQ, P, ChunkSink>(desc.variant, desc.geometry_path);
            let mut sink = ChunkSink { chunk, base: first * ds, e: first, ns: NS, ds, layout: out_layout, writes: 0 };
            let mut traffic = TrafficCounters::default();
            let mut coeff_buf = [0.0; CONV_DIFF_COEFFS];
            let cs = batch.coefficient_stride();
            for e in first..last {
                let mut x = [[0.0; 3]; NS];
                for (v, xv) in x.iter_mut().enumerate() {
                    for (i, xi) in xv.iter_mut().enumerate() {
                        *xi = batch.geometry_at(e, 3 * v + i);
                    }
                }
                for (d, c) in coeff_buf[..cs].iter_mut().enumerate() {
                    *c = batch.coefficient_at(e, d);
                }
                traffic.reads += (3 * NS + cs) as u64;
                let c = P::from_slice(&coeff_buf[..cs]);
                sink.e = e;
                kernel(tables, &x, &c, &mut sink).map_err(|g| (e, g))?;
            }
            traffic.writes = sink.writes;
            Ok(traffic)
        };
        let merge = |a: Result<TrafficCounters, (usize, GeometryError)>, b| match (a, b) {
            (Ok(x), Ok(y)) => Ok(x.merge(y)),
            (Err(x), Err(y)) => Err(if x.0 <= y.0 { x } else { y }),
            (Err(x), _) | (_, Err(x)) => Err(x),
        };

        let chunk_len = TASK_ELEMENTS * ds;
        let outcome = match &self.pool {
            Some(pool) => pool.install(|| {
                data.par_chunks_mut(chunk_len).enumerate().map(task).reduce(|| Ok(TrafficCounters::default()), merge)
            }),
            None => data.chunks_mut(chunk_len).enumerate().map(task).fold(Ok(TrafficCounters::default()), merge),
        };
        let traffic = outcome.map_err(|(index, source)| Error::Element { index, source })?;
        Ok(BatchResult { element: desc.element, problem: desc.problem, n_elements: n, layout: out_layout, data, traffic })
    }
}

struct ChunkSink<'a> {
    chunk: &'a mut [f64],
    base: usize,
    e: usize,
    ns: usize,
    ds: usize,
    layout: OutputLayout,
    writes: u64,
}

impl Sink for ChunkSink<'_> {
    #[inline(always)]
    fn store_a(&mut self, r: usize, s: usize, v: f64) {
        self.chunk[self.layout.index(self.e, r * self.ns + s, self.ds) - self.base] = v;
        self.writes += 1;
    }

    #[inline(always)]
    fn store_b(&mut self, r: usize, v: f64) {
        self.chunk[self.layout.index(self.e, self.ns * self.ns + r, self.ds) - self.base] = v;
        self.writes += 1;
    }
}

/// Integrate every element of `batch` with `workers` threads.
pub fn integrate_batch(
    desc: &KernelDescriptor,
    batch: &ElementBatch,
    out_layout: OutputLayout,
    workers: usize,
) -> Result<BatchResult> {
    Executor::new(workers)?.integrate(desc, batch, out_layout)
}
