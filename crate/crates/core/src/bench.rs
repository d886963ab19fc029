//! Kernel timing and the exhaustive layout × lane width × worker sweep.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::kernels::{Executor, KernelDescriptor};
use crate::layout::{BatchLayout, ElementBatch, Scheme, LANE_WIDTHS};
use crate::perfmodel::{efficiency, efficiency_pct, global_accesses, kernel_cost, time_bound, ProcessorProfile};

pub const MIN_REPEATS: usize = 3;
pub const DEFAULT_REPEATS: usize = 5;
pub const DEFAULT_ELEMENTS: usize = 100_000;

/// One point of the tuning space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunConfig {
    pub desc: KernelDescriptor,
    pub layout: BatchLayout,
    pub workers: usize,
}

/// Source of batch timings in nanoseconds.
pub trait Timer {
    fn measure(&mut self, config: &RunConfig, run: &mut dyn FnMut() -> Result<()>) -> Result<f64>;
}

/// Wall clock around the whole batch.
#[derive(Debug, Default, Clone, Copy)]
pub struct WallClock;

impl Timer for WallClock {
    fn measure(&mut self, _config: &RunConfig, run: &mut dyn FnMut() -> Result<()>) -> Result<f64> {
        let start = Instant::now();
        run()?;
        Ok(start.elapsed().as_nanos() as f64)
    }
}

/// Timer returning a fixed function of the configuration without running
/// the batch. For testing the statistics and the tuner.
pub struct SyntheticTimer<F>(pub F);

impl<F: FnMut(&RunConfig) -> f64> Timer for SyntheticTimer<F> {
    fn measure(&mut self, config: &RunConfig, _run: &mut dyn FnMut() -> Result<()>) -> Result<f64> {
        Ok((self.0)(config))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub desc: KernelDescriptor,
    pub layout: BatchLayout,
    pub workers: usize,
    pub n_elements: usize,
    /// Median over the repeats.
    pub ns_per_element: f64,
    /// Median absolute deviation of the per-element times.
    pub ns_mad: f64,
    pub accesses_per_element: f64,
    pub ops_model: u64,
    pub intensity: f64,
    pub bound_ns: f64,
    pub efficiency_pct: u32,
}

impl RunRecord {
    pub fn efficiency(&self) -> f64 {
        efficiency(self.ns_per_element, self.bound_ns)
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn median_abs_deviation(values: &[f64]) -> f64 {
    let m = median(values);
    median(&values.iter().map(|x| (x - m).abs()).collect::<Vec<_>>())
}

/// Time `desc` on `batch` converted to `layout`, with outputs in the same
/// layout. One untimed warmup run checks the traffic counters against the
/// model before any timing.
pub fn run_benchmark(
    batch: &ElementBatch,
    config: &RunConfig,
    repeats: usize,
    profile: &ProcessorProfile,
    timer: &mut dyn Timer,
) -> Result<RunRecord> {
    if repeats < MIN_REPEATS {
        return Err(Error::Parse(format!("at least {MIN_REPEATS} repeats are required, got {repeats}")));
    }
    let desc = config.desc;
    desc.validate()?;
    let batch = if batch.layout() == config.layout { batch.clone() } else { batch.convert(config.layout) };
    let n = batch.len();
    let executor = Executor::new(config.workers)?;
    let expected = global_accesses(desc.element, desc.problem);
    let check = |traffic: u64| {
        if traffic != expected * n as u64 {
            return Err(Error::CounterMismatch { expected, measured: traffic / n.max(1) as u64 });
        }
        Ok(())
    };

    let warm = executor.integrate(&desc, &batch, config.layout)?;
    check(warm.traffic.total())?;
    let accesses_per_element = warm.accesses_per_element();
    drop(warm);

    let mut per_element = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let mut run = || {
            let r = executor.integrate(&desc, &batch, config.layout)?;
            check(r.traffic.total())?;
            std::hint::black_box(&r.data);
            Ok(())
        };
        per_element.push(timer.measure(config, &mut run)? / n as f64);
    }
    let ns = median(&per_element);
    if ns.is_nan() || ns <= 0.0 {
        return Err(Error::Parse(format!("non-positive timing {ns} ns per element")));
    }
    let cost = kernel_cost(&desc);
    let bound_ns = time_bound(&desc, profile).bound_ns();
    Ok(RunRecord {
        desc,
        layout: config.layout,
        workers: config.workers,
        n_elements: n,
        ns_per_element: ns,
        ns_mad: median_abs_deviation(&per_element),
        accesses_per_element,
        ops_model: cost.op_count,
        intensity: cost.intensity_exact(),
        bound_ns,
        efficiency_pct: efficiency_pct(ns, bound_ns),
    })
}

/// Dimensions of the tuning sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TuneGrid {
    pub schemes: Vec<Scheme>,
    pub lane_widths: Vec<usize>,
    pub workers: Vec<usize>,
}

impl TuneGrid {
    /// Both schemes, every lane width and `{1, cores, 2·cores}` workers.
    pub fn full() -> Self {
        TuneGrid { schemes: Scheme::ALL.to_vec(), lane_widths: LANE_WIDTHS.to_vec(), workers: default_workers() }
    }

    /// Configurations in sweep order: scheme, then lane width, then workers.
    /// Element-major entries carry the lane width without using it.
    pub fn configs(&self, desc: KernelDescriptor) -> Result<Vec<RunConfig>> {
        let mut out = Vec::with_capacity(self.len());
        for &scheme in &self.schemes {
            for &w in &self.lane_widths {
                let layout = BatchLayout::new(scheme, w)?;
                for &workers in &self.workers {
                    out.push(RunConfig { desc, layout, workers });
                }
            }
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.schemes.len() * self.lane_widths.len() * self.workers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn default_workers() -> Vec<usize> {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut w = vec![1, cores, 2 * cores];
    w.dedup();
    w
}

#[derive(Debug, Clone)]
pub struct TuneResult {
    /// Index into `records` of the fastest configuration.
    pub best: usize,
    pub records: Vec<RunRecord>,
}

impl TuneResult {
    pub fn best_record(&self) -> &RunRecord {
        &self.records[self.best]
    }
}

/// Benchmark every configuration of `grid`. The first configuration with
/// the lowest median wins ties.
pub fn tune(
    batch: &ElementBatch,
    desc: KernelDescriptor,
    grid: &TuneGrid,
    repeats: usize,
    profile: &ProcessorProfile,
    timer: &mut dyn Timer,
) -> Result<TuneResult> {
    let configs = grid.configs(desc)?;
    if configs.is_empty() {
        return Err(Error::Parse("empty tuning grid".into()));
    }
    let mut records = Vec::with_capacity(configs.len());
    let mut best = 0;
    for (i, config) in configs.iter().enumerate() {
        let r = run_benchmark(batch, config, repeats, profile, timer)?;
        if r.ns_per_element < records.get(best).map_or(f64::INFINITY, |b: &RunRecord| b.ns_per_element) {
            best = i;
        }
        records.push(r);
    }
    Ok(TuneResult { best, records })
}
