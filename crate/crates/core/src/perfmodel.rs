//! Roofline cost model: memory requirements, global traffic, operation
//! counts, arithmetic intensity and per-element execution time bounds.
//!
//! Only global memory traffic and floating point operations enter the time
//! bound. Shared memory access counts are carried for reporting.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kernels::{phase_op_counts, KernelDescriptor, ProblemClass};
use crate::refelem::ElementType;

/// Bytes per double precision value.
pub const BYTES_PER_VALUE: f64 = 8.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessorProfile {
    pub name: String,
    pub peak_dp_tflops: f64,
    pub peak_bandwidth_gbs: f64,
    /// DGEMM throughput.
    pub bench_dp_tflops: f64,
    /// STREAM bandwidth.
    pub bench_bandwidth_gbs: f64,
}

impl ProcessorProfile {
    pub fn new(
        name: impl Into<String>,
        peak_dp_tflops: f64,
        peak_bandwidth_gbs: f64,
        bench_dp_tflops: f64,
        bench_bandwidth_gbs: f64,
    ) -> Result<Self> {
        let p = ProcessorProfile {
            name: name.into(),
            peak_dp_tflops,
            peak_bandwidth_gbs,
            bench_dp_tflops,
            bench_bandwidth_gbs,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.peak_dp_tflops, self.peak_bandwidth_gbs, self.bench_dp_tflops, self.bench_bandwidth_gbs];
        if !all.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(Error::Parse(format!("profile '{}': all rates must be positive", self.name)));
        }
        if self.bench_dp_tflops > 1.05 * self.peak_dp_tflops || self.bench_bandwidth_gbs > 1.05 * self.peak_bandwidth_gbs
        {
            return Err(Error::Parse(format!("profile '{}': benchmark rate exceeds peak", self.name)));
        }
        Ok(())
    }

    /// Tesla K20m, Xeon Phi 5110P and a two-socket Xeon E5-2620.
    pub fn builtin() -> Vec<ProcessorProfile> {
        vec![
            ProcessorProfile {
                name: "tesla-k20m".into(),
                peak_dp_tflops: 1.17,
                peak_bandwidth_gbs: 208.0,
                bench_dp_tflops: 1.10,
                bench_bandwidth_gbs: 144.0,
            },
            ProcessorProfile {
                name: "xeon-phi-5110p".into(),
                peak_dp_tflops: 1.01,
                peak_bandwidth_gbs: 320.0,
                bench_dp_tflops: 0.84,
                bench_bandwidth_gbs: 171.0,
            },
            // two sockets treated as one device
            ProcessorProfile {
                name: "xeon-e5-2620x2".into(),
                peak_dp_tflops: 2.0 * 0.096,
                peak_bandwidth_gbs: 2.0 * 42.6,
                bench_dp_tflops: 0.18,
                bench_bandwidth_gbs: 67.0,
            },
        ]
    }

    pub fn by_name(name: &str) -> Option<ProcessorProfile> {
        Self::builtin().into_iter().find(|p| p.name.eq_ignore_ascii_case(name))
    }

    /// Parse `key = value` lines. Blank lines and `#` comments are skipped.
    ///
    /// Keys: `name`, `peak_dp_tflops`, `peak_bw_gbs`, `bench_dp_tflops`,
    /// `bench_bw_gbs`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut name = None;
        let mut vals = [None; 4];
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("profile line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim().trim_matches('"'));
            let slot = match key {
                "name" => {
                    name = Some(value.to_string());
                    continue;
                }
                "peak_dp_tflops" => 0,
                "peak_bw_gbs" | "peak_bandwidth_gbs" => 1,
                "bench_dp_tflops" => 2,
                "bench_bw_gbs" | "bench_bandwidth_gbs" => 3,
                other => return Err(Error::Parse(format!("profile line {}: unknown key '{other}'", lineno + 1))),
            };
            let v: f64 = value
                .parse()
                .map_err(|_| Error::Parse(format!("profile line {}: '{value}' is not a number", lineno + 1)))?;
            vals[slot] = Some(v);
        }
        let get = |i: usize, k: &str| vals[i].ok_or_else(|| Error::Parse(format!("profile: missing '{k}'")));
        ProcessorProfile::new(
            name.unwrap_or_else(|| "custom".into()),
            get(0, "peak_dp_tflops")?,
            get(1, "peak_bw_gbs")?,
            get(2, "bench_dp_tflops")?,
            get(3, "bench_bw_gbs")?,
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn rates(&self, use_benchmark: bool) -> (f64, f64) {
        if use_benchmark {
            (self.bench_dp_tflops, self.bench_bandwidth_gbs)
        } else {
            (self.peak_dp_tflops, self.peak_bandwidth_gbs)
        }
    }
}

/// Operations per double precision value moved at which memory and
/// arithmetic time balance.
pub fn limiting_intensity_exact(p: &ProcessorProfile, use_benchmark: bool) -> f64 {
    let (tflops, gbs) = p.rates(use_benchmark);
    tflops * 1e12 / (gbs * 1e9 / BYTES_PER_VALUE)
}

/// [`limiting_intensity_exact`] rounded to an integer.
pub fn limiting_intensity(p: &ProcessorProfile, use_benchmark: bool) -> u64 {
    limiting_intensity_exact(p, use_benchmark).round() as u64
}

/// Extra shared memory accesses of the QSS kernel when one array lives in
/// shared memory. Reported only; they do not enter the time bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SharedAccesses {
    pub geometry: u64,
    pub coefficients: u64,
    pub shape_functions: u64,
    pub outputs: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelCost {
    pub global_accesses: u64,
    pub op_count: u64,
    /// `op_count / global_accesses`, rounded to an integer.
    pub arithmetic_intensity: u64,
    pub shared: SharedAccesses,
}

impl KernelCost {
    pub fn intensity_exact(&self) -> f64 {
        self.op_count as f64 / self.global_accesses as f64
    }
}

/// Geometry and coefficients read plus `A` and `b` written, in values.
pub fn global_accesses(element: ElementType, problem: ProblemClass) -> u64 {
    let ns = element.num_shape_functions();
    (element.geometry_len() + problem.coefficient_len(element) + ns * ns + ns) as u64
}

fn shared_accesses(element: ElementType, problem: ProblemClass) -> SharedAccesses {
    match (element, problem) {
        (ElementType::Tetrahedron, ProblemClass::Poisson) => {
            SharedAccesses { geometry: 12, coefficients: 4, shape_functions: 60, outputs: 180 }
        }
        (ElementType::Prism, ProblemClass::Poisson) => {
            SharedAccesses { geometry: 108, coefficients: 6, shape_functions: 210, outputs: 546 }
        }
        (ElementType::Tetrahedron, ProblemClass::ConvDiff) => {
            SharedAccesses { geometry: 12, coefficients: 80, shape_functions: 60, outputs: 180 }
        }
        (ElementType::Prism, ProblemClass::ConvDiff) => {
            SharedAccesses { geometry: 108, coefficients: 120, shape_functions: 210, outputs: 546 }
        }
    }
}

pub fn kernel_cost(desc: &KernelDescriptor) -> KernelCost {
    let global = global_accesses(desc.element, desc.problem);
    let ops = phase_op_counts(desc).total;
    KernelCost {
        global_accesses: global,
        op_count: ops,
        arithmetic_intensity: (ops as f64 / global as f64).round() as u64,
        shared: shared_accesses(desc.element, desc.problem),
    }
}

/// Scalar counts of one working set: coefficients, shape data and the total
/// including the output entries held at the same time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorkingSet {
    pub coefficients: usize,
    pub shape_functions: usize,
    pub total: usize,
}

/// Array sizes, in scalars, for one (element, problem) case.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryRequirements {
    pub n_shape: usize,
    pub n_quad: usize,
    /// Quadrature points and weights of the reference element.
    pub integration_data: usize,
    pub geometry: usize,
    pub coefficients: usize,
    pub stiffness: usize,
    pub load: usize,
    /// QSS, data for a single integration point.
    pub qss_point: WorkingSet,
    /// QSS, data for all integration points.
    pub qss_all: WorkingSet,
    /// SSQ, all points but a single output entry.
    pub ssq_all: WorkingSet,
}

pub fn memory_requirements(desc: &KernelDescriptor) -> MemoryRequirements {
    let (element, problem) = (desc.element, desc.problem);
    let ns = element.num_shape_functions();
    let nq = element.num_quadrature_points();
    let coefficients = problem.coefficient_len(element);
    let stiffness = ns * ns;
    let point_coeffs = match problem {
        ProblemClass::Poisson => 1,
        ProblemClass::ConvDiff => coefficients,
    };
    // φ and its three derivatives per shape function
    let point_shape = 4 * ns;
    // tetrahedra keep the constant gradients once plus values per point
    let all_shape = match element {
        ElementType::Tetrahedron => 28,
        ElementType::Prism => nq * point_shape,
    };
    let ssq_shape = 8;
    MemoryRequirements {
        n_shape: ns,
        n_quad: nq,
        integration_data: 4 * nq,
        geometry: element.geometry_len(),
        coefficients,
        stiffness,
        load: ns,
        qss_point: WorkingSet {
            coefficients: point_coeffs,
            shape_functions: point_shape,
            total: point_coeffs + point_shape + stiffness + ns,
        },
        qss_all: WorkingSet {
            coefficients,
            shape_functions: all_shape,
            total: coefficients + all_shape + stiffness + ns,
        },
        ssq_all: WorkingSet { coefficients, shape_functions: ssq_shape, total: coefficients + ssq_shape + 2 },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    MemoryBound,
    ComputeBound,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::MemoryBound => "memory",
            Regime::ComputeBound => "compute",
        })
    }
}

/// Per-element time bound against benchmark rates, in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeBound {
    pub memory_ns: f64,
    pub compute_ns: f64,
}

impl TimeBound {
    pub fn bound_ns(&self) -> f64 {
        self.memory_ns.max(self.compute_ns)
    }

    pub fn regime(&self) -> Regime {
        if self.memory_ns > self.compute_ns {
            Regime::MemoryBound
        } else {
            Regime::ComputeBound
        }
    }
}

pub fn time_bound(desc: &KernelDescriptor, p: &ProcessorProfile) -> TimeBound {
    let cost = kernel_cost(desc);
    TimeBound {
        // bytes / (GB/s) = ns
        memory_ns: cost.global_accesses as f64 * BYTES_PER_VALUE / p.bench_bandwidth_gbs,
        // ops / (TFlops) = ps
        compute_ns: cost.op_count as f64 / (p.bench_dp_tflops * 1e3),
    }
}

/// Memory-bound iff the kernel's intensity is below the processor's.
pub fn classify(desc: &KernelDescriptor, p: &ProcessorProfile, use_benchmark: bool) -> Regime {
    if kernel_cost(desc).intensity_exact() < limiting_intensity_exact(p, use_benchmark) {
        Regime::MemoryBound
    } else {
        Regime::ComputeBound
    }
}

/// Round to the 0.01 ns precision of reported times.
pub fn round_ns(ns: f64) -> f64 {
    (ns * 100.0).round() / 100.0
}

/// `bound / measured × 100`.
pub fn efficiency(measured_ns: f64, bound_ns: f64) -> f64 {
    debug_assert!(measured_ns > 0.0 && bound_ns > 0.0);
    bound_ns / measured_ns * 100.0
}

/// [`efficiency`] as an integer percentage.
pub fn efficiency_pct(measured_ns: f64, bound_ns: f64) -> u32 {
    efficiency(measured_ns, bound_ns).round() as u32
}
