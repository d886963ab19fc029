//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fails.

#![allow(clippy::needless_range_loop)]

use std::process::{Command, ExitCode};
use std::time::Instant;

use felab::geometry::jacobian_at_point;
use felab::mesh::random_elements;
use felab::oracle::{integrate_high_order, integrate_reference};
use felab::perfmodel::{efficiency_pct, kernel_cost, limiting_intensity, time_bound};
use felab::refelem::{reference_element, shape_at};
use felab::report::CSV_COLUMNS;
use felab::{
    integrate_batch, integrate_element, BatchLayout, CoefficientSet, ElementBatch, ElementGeometry, ElementMatrix,
    ElementType, KernelDescriptor, ProblemClass, ProcessorProfile, Variant,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: usize = 1000;
const SEED: u64 = 2024;
const LANES: [usize; 6] = [1, 4, 8, 16, 32, 64];

const CASES: [(ElementType, ProblemClass); 4] = [
    (ElementType::Tetrahedron, ProblemClass::Poisson),
    (ElementType::Prism, ProblemClass::Poisson),
    (ElementType::Tetrahedron, ProblemClass::ConvDiff),
    (ElementType::Prism, ProblemClass::ConvDiff),
];
const VARIANTS: [Variant; 3] = [Variant::Qss, Variant::Sqs, Variant::Ssq];
const PROFILES: [&str; 3] = ["tesla-k20m", "xeon-phi-5110p", "xeon-e5-2620x2"];

const TRAFFIC: [u64; 4] = [36, 66, 52, 80];
const OPS: [[u64; 4]; 3] = [[290, 2700, 986, 4806], [290, 10416, 986, 12492], [290, 54876, 1623, 65232]];
const INTENSITY: [[u64; 4]; 3] = [[8, 41, 19, 60], [8, 158, 19, 156], [8, 831, 31, 815]];
const LIMITING: [[u64; 3]; 2] = [[45, 25, 18], [61, 39, 21]];

/// Per-element bounds in ns, [profile][variant][case].
const BOUNDS: [[[f64; 4]; 3]; 3] = [
    [[2.00, 3.67, 2.89, 4.44], [2.00, 9.47, 2.89, 11.36], [2.00, 49.89, 2.89, 59.30]],
    [[1.68, 3.21, 2.43, 5.72], [1.68, 12.40, 2.43, 14.87], [1.68, 57.87, 2.43, 69.40]],
    [[4.30, 15.00, 6.21, 26.70], [4.30, 57.87, 6.21, 69.40], [4.30, 304.87, 9.02, 362.40]],
];

/// Measured (ns, percent), same indexing.
const MEASURED: [[[(f64, u32); 4]; 3]; 3] = [
    [
        [(2.02, 99), (12.80, 29), (4.46, 65), (15.58, 29)],
        [(2.02, 99), (38.39, 25), (6.05, 48), (64.81, 18)],
        [(2.02, 99), (94.99, 53), (6.13, 47), (194.93, 30)],
    ],
    [
        [(8.77, 19), (25.09, 13), (17.11, 14), (33.29, 17)],
        [(11.35, 15), (41.20, 30), (15.97, 15), (60.18, 25)],
        [(11.43, 15), (101.20, 65), (16.53, 15), (132.46, 59)],
    ],
    [
        [(19.31, 22), (49.74, 30), (26.74, 23), (64.27, 42)],
        [(18.77, 23), (128.07, 45), (24.86, 25), (133.14, 52)],
        [(17.76, 24), (385.33, 79), (26.11, 35), (475.41, 76)],
    ],
];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn descriptor(v: Variant, element: ElementType, problem: ProblemClass) -> KernelDescriptor {
    KernelDescriptor::new(v, KernelDescriptor::default_path(element), problem, element).unwrap()
}

fn corpus(element: ElementType, problem: ProblemClass) -> Vec<(ElementGeometry, CoefficientSet)> {
    random_elements(element, problem, N, SEED + 2 * element as u64 + problem as u64)
}

fn cross_variant() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (element, problem) in CASES {
        let descs = KernelDescriptor::for_case(element, problem);
        for (g, c) in corpus(element, problem) {
            let outs: Vec<_> = descs.iter().map(|d| integrate_element(d, &g, &c).unwrap()).collect();
            for i in 0..outs.len() {
                for j in i + 1..outs.len() {
                    worst = worst.max(outs[i].relative_diff(&outs[j]));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-12 && secs < 10.0, format!("max rel diff {worst:.2e}, {secs:.2} s"))
}

/// Right prism over the unit triangle, top face rotated about the centroid.
fn twisted(angle: f64) -> ElementGeometry {
    let (s, c) = angle.sin_cos();
    let base = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let mut coords: Vec<[f64; 3]> = base.iter().map(|p| [p[0], p[1], 0.0]).collect();
    for p in base {
        let (dx, dy) = (p[0] - 1.0 / 3.0, p[1] - 1.0 / 3.0);
        coords.push([1.0 / 3.0 + c * dx - s * dy, 1.0 / 3.0 + s * dx + c * dy, 1.0]);
    }
    ElementGeometry::new(ElementType::Prism, coords).unwrap()
}

fn oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    for (element, problem) in CASES {
        let els = corpus(element, problem);
        for d in KernelDescriptor::for_case(element, problem) {
            for (g, c) in &els {
                let r = integrate_reference(g, c, element, problem).unwrap();
                worst = worst.max(integrate_element(&d, g, c).unwrap().relative_diff(&r));
            }
        }
    }
    let mut twist: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for angle in [15.0f64, 30.0, 60.0] {
        let g = twisted(angle.to_radians());
        for problem in ProblemClass::ALL {
            let c = match problem {
                ProblemClass::Poisson => CoefficientSet::Poisson { d0: (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect() },
                ProblemClass::ConvDiff => CoefficientSet::ConvDiff {
                    c: std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0))),
                    d: std::array::from_fn(|_| rng.gen_range(-1.0..1.0)),
                },
            };
            let r = integrate_high_order(&g, &c, ElementType::Prism, problem, 4).unwrap();
            for d in KernelDescriptor::for_case(ElementType::Prism, problem) {
                twist = twist.max(integrate_element(&d, &g, &c).unwrap().relative_diff(&r));
            }
        }
    }
    outcome(
        worst <= 1e-12 && twist <= 1e-10,
        format!("reference max {worst:.2e} (tol 1e-12), twisted prism vs level 4 max {twist:.2e} (tol 1e-10)"),
    )
}

fn analytic() -> Outcome {
    let unit = ElementGeometry::reference(ElementType::Tetrahedron);
    let grad = [[-1.0, -1.0, -1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut ks: f64 = 0.0;
    let mut km: f64 = 0.0;
    for d in KernelDescriptor::for_case(ElementType::Tetrahedron, ProblemClass::Poisson) {
        let m = integrate_element(&d, &unit, &CoefficientSet::Poisson { d0: vec![0.0; 4] }).unwrap();
        for r in 0..4 {
            for s in 0..4 {
                let g: f64 = (0..3).map(|k| grad[r][k] * grad[s][k]).sum();
                ks = ks.max((m.a(r, s) - g / 6.0).abs());
            }
        }
    }
    let mut c = [[0.0; 4]; 4];
    c[0][0] = 1.0;
    for d in KernelDescriptor::for_case(ElementType::Tetrahedron, ProblemClass::ConvDiff) {
        let m = integrate_element(&d, &unit, &CoefficientSet::ConvDiff { c, d: [0.0; 4] }).unwrap();
        for r in 0..4 {
            for s in 0..4 {
                let exact = if r == s { 1.0 / 60.0 } else { 1.0 / 120.0 };
                km = km.max((m.a(r, s) - exact).abs());
            }
        }
    }
    outcome(ks <= 1e-14 && km <= 1e-14, format!("stiffness {ks:.2e}, mass {km:.2e}"))
}

fn frob(m: &ElementMatrix) -> f64 {
    m.a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn det3(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0])
}

fn quadrature_volume(g: &ElementGeometry) -> f64 {
    let re = reference_element(g.element);
    (0..g.element.num_quadrature_points()).map(|q| jacobian_at_point(g, q, re).unwrap().vol).sum()
}

fn structural() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let (mut nullity, mut symmetry, mut scaling, mut unity, mut volume): (f64, f64, f64, f64, f64) = Default::default();
    for element in ElementType::ALL {
        let descs = KernelDescriptor::for_case(element, ProblemClass::ConvDiff);
        for (g, set) in corpus(element, ProblemClass::ConvDiff) {
            let CoefficientSet::ConvDiff { c, d } = set else { unreachable!() };
            let mut diff = [[0.0; 4]; 4];
            let mut sym = c;
            for i in 1..4 {
                sym[0][i] = 0.0;
                sym[i][0] = 0.0;
                for j in 1..4 {
                    diff[i][j] = c[i][j];
                    sym[i][j] = c[i.max(j)][i.min(j)];
                }
            }
            for desc in &descs {
                let m = integrate_element(desc, &g, &CoefficientSet::ConvDiff { c: diff, d: [0.0; 4] }).unwrap();
                for r in 0..m.n {
                    let s: f64 = (0..m.n).map(|k| m.a(r, k)).sum();
                    nullity = nullity.max(s.abs() / frob(&m));
                }
                let m = integrate_element(desc, &g, &CoefficientSet::ConvDiff { c: sym, d }).unwrap();
                for r in 0..m.n {
                    for s in 0..r {
                        symmetry = symmetry.max((m.a(r, s) - m.a(s, r)).abs() / frob(&m));
                    }
                }
                if element == ElementType::Tetrahedron {
                    let h: f64 = rng.gen_range(0.05..20.0);
                    let big = g.map(|[x, y, z]| [h * x, h * y, h * z]);
                    let mut react = [[0.0; 4]; 4];
                    react[0][0] = c[0][0];
                    for (coeffs, factor) in [(diff, h), (react, h * h * h)] {
                        let coeffs = CoefficientSet::ConvDiff { c: coeffs, d: [0.0; 4] };
                        let m0 = integrate_element(desc, &g, &coeffs).unwrap();
                        let m1 = integrate_element(desc, &big, &coeffs).unwrap();
                        let err = m0.a.iter().zip(&m1.a).map(|(x, y)| (x * factor - y).powi(2)).sum::<f64>().sqrt();
                        scaling = scaling.max(err / frob(&m1));
                    }
                }
            }
            if element == ElementType::Tetrahedron {
                let x = &g.coords;
                let e = |i: usize| [x[i][0] - x[0][0], x[i][1] - x[0][1], x[i][2] - x[0][2]];
                let exact = det3(e(1), e(2), e(3)) / 6.0;
                volume = volume.max((quadrature_volume(&g) - exact).abs() / exact);
            }
        }
        for _ in 0..N {
            let (u, v) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            let (xi, eta) = if u + v > 1.0 { (1.0 - u, 1.0 - v) } else { (u, v) };
            let zeta = match element {
                ElementType::Tetrahedron => rng.gen_range(0.0..=1.0 - xi - eta),
                ElementType::Prism => rng.gen_range(-1.0..=1.0),
            };
            let (vals, ders) = shape_at(element, [xi, eta, zeta]).unwrap();
            unity = unity.max((vals.iter().sum::<f64>() - 1.0).abs());
            for k in 0..3 {
                unity = unity.max(ders.iter().map(|d| d[k]).sum::<f64>().abs());
            }
        }
    }
    // planar-faced prisms: affine images of right prisms and of frustums
    for i in 0..N {
        let a: [[f64; 3]; 3] = loop {
            let a = std::array::from_fn(|r| std::array::from_fn(|k| (r == k) as u8 as f64 + rng.gen_range(-0.3..0.3)));
            if det3(a[0], a[1], a[2]) > 0.2 {
                break a;
            }
        };
        let s = if i % 2 == 0 { 1.0 } else { rng.gen_range(0.4..1.6) };
        let h: f64 = rng.gen_range(0.3..2.0);
        let base = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let c = 1.0 / 3.0;
        let mut pts: Vec<[f64; 3]> = base.iter().map(|p| [p[0], p[1], 0.0]).collect();
        pts.extend(base.iter().map(|p| [c + s * (p[0] - c), c + s * (p[1] - c), h]));
        let coords = pts.iter().map(|p| std::array::from_fn(|r| (0..3).map(|k| a[r][k] * p[k]).sum())).collect();
        let g = ElementGeometry::new(ElementType::Prism, coords).unwrap();
        let exact = h / 3.0 * 0.5 * (1.0 + s * s + s) * det3(a[0], a[1], a[2]);
        volume = volume.max((quadrature_volume(&g) - exact).abs() / exact);
    }
    let pass = nullity <= 1e-12 && symmetry <= 1e-12 && scaling <= 1e-12 && unity <= 1e-14 && volume <= 1e-12;
    outcome(
        pass,
        format!(
            "row sums {nullity:.1e}, symmetry {symmetry:.1e}, scaling {scaling:.1e}, unity {unity:.1e}, volume {volume:.1e}"
        ),
    )
}

fn traffic() -> Outcome {
    let mut mismatches = Vec::new();
    let mut runs = 0;
    for (ci, (element, problem)) in CASES.into_iter().enumerate() {
        let els = random_elements(element, problem, 300, SEED);
        let mut layouts = vec![BatchLayout::element_major()];
        layouts.extend(LANES.iter().map(|&w| BatchLayout::interleaved(w).unwrap()));
        for layout in layouts {
            let batch = ElementBatch::build(&els, layout).unwrap();
            for d in KernelDescriptor::for_case(element, problem) {
                let r = integrate_batch(&d, &batch, layout, 2).unwrap();
                runs += 1;
                if r.traffic.total() != TRAFFIC[ci] * els.len() as u64 {
                    mismatches.push(format!("{d} {layout:?}: {}", r.accesses_per_element()));
                }
            }
        }
    }
    outcome(mismatches.is_empty(), format!("{runs} runs, mismatches: {mismatches:?}"))
}

fn op_counts() -> Outcome {
    let mut bad = Vec::new();
    for (vi, v) in VARIANTS.into_iter().enumerate() {
        for (ci, (element, problem)) in CASES.into_iter().enumerate() {
            let cost = kernel_cost(&descriptor(v, element, problem));
            if cost.op_count != OPS[vi][ci] || cost.arithmetic_intensity != INTENSITY[vi][ci] {
                bad.push(format!("{v}/{element}/{problem}: {} ops, intensity {}", cost.op_count, cost.arithmetic_intensity));
            }
        }
    }
    outcome(bad.is_empty(), format!("12 cells, mismatches: {bad:?}"))
}

fn model() -> Outcome {
    let mut bad = Vec::new();
    for (pi, name) in PROFILES.into_iter().enumerate() {
        let p = ProcessorProfile::by_name(name).unwrap();
        for (bi, bench) in [false, true].into_iter().enumerate() {
            let li = limiting_intensity(&p, bench);
            if li != LIMITING[bi][pi] {
                bad.push(format!("{name} intensity {li}"));
            }
        }
        for (vi, v) in VARIANTS.into_iter().enumerate() {
            for (ci, (element, problem)) in CASES.into_iter().enumerate() {
                let t = time_bound(&descriptor(v, element, problem), &p).bound_ns();
                if (t - BOUNDS[pi][vi][ci]).abs() > 0.01 {
                    bad.push(format!("{name} {v}/{element}/{problem}: {t:.2} vs {:.2}", BOUNDS[pi][vi][ci]));
                }
            }
        }
    }
    outcome(bad.is_empty(), format!("6 intensities + 36 bounds, mismatches: {bad:?}"))
}

fn efficiency_table() -> Outcome {
    let mut bad = Vec::new();
    for (pi, name) in PROFILES.into_iter().enumerate() {
        let p = ProcessorProfile::by_name(name).unwrap();
        for (vi, v) in VARIANTS.into_iter().enumerate() {
            for (ci, (element, problem)) in CASES.into_iter().enumerate() {
                let bound = time_bound(&descriptor(v, element, problem), &p).bound_ns();
                let (ns, pct) = MEASURED[pi][vi][ci];
                let got = efficiency_pct(ns, bound);
                if got.abs_diff(pct) > 1 {
                    bad.push(format!("{name} {v}/{element}/{problem}: {got}% vs {pct}%"));
                }
            }
        }
    }
    outcome(bad.is_empty(), format!("36 cells, mismatches: {bad:?}"))
}

fn bench_smoke() -> Outcome {
    let out = match Command::new(env!("CARGO_BIN_EXE_felab"))
        .args(["bench", "--elements", "100000", "--format", "csv"])
        .output()
    {
        Ok(o) => o,
        Err(e) => return outcome(false, format!("spawn failed: {e}")),
    };
    if !out.status.success() {
        return outcome(false, format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    if header != CSV_COLUMNS {
        return outcome(false, format!("unexpected header {header:?}"));
    }
    let col = header.iter().position(|h| *h == "efficiency_pct").unwrap();
    let pcts: Vec<f64> = lines.filter_map(|l| l.split(',').nth(col)?.parse().ok()).collect();
    let pass = !pcts.is_empty() && pcts.iter().all(|&p| p > 0.0 && p <= 100.0);
    outcome(pass, format!("efficiency_pct {pcts:?}"))
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        ("cross-variant equivalence", cross_variant),
        ("oracle equivalence", oracle),
        ("analytic unit tetrahedron", analytic),
        ("structural invariants", structural),
        ("global traffic per element", traffic),
        ("operation counts and intensities", op_counts),
        ("limiting intensities and time bounds", model),
        ("efficiency arithmetic", efficiency_table),
        ("bench smoke on 100k elements", bench_smoke),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let o = check();
        failed += !o.pass as usize;
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
