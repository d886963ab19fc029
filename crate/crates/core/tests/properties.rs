#![allow(clippy::needless_range_loop)]

use felab::geometry::jacobian_at_point;
use felab::kernels::TrafficCounters;
use felab::layout::{LANE_WIDTHS, PAD};
use felab::mesh::{generate_mesh, mesh_geometries, random_elements, MeshSpec};
use felab::oracle::{integrate_high_order, integrate_reference, simplex_mass_matrix};
use felab::refelem::{reference_element, shape_at};
use felab::{
    integrate_batch, integrate_element, BatchLayout, CoefficientSet, ElementBatch, ElementGeometry, ElementMatrix,
    ElementType, Error, GeometryPath, KernelDescriptor, ProblemClass, Scheme, Variant,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: usize = 1000;

fn diffusion_only(c: &[[f64; 4]; 4]) -> CoefficientSet {
    let mut k = [[0.0; 4]; 4];
    for i in 1..4 {
        for j in 1..4 {
            k[i][j] = c[i][j];
        }
    }
    CoefficientSet::ConvDiff { c: k, d: [0.0; 4] }
}

fn conv_diff_parts(set: &CoefficientSet) -> ([[f64; 4]; 4], [f64; 4]) {
    match set {
        CoefficientSet::ConvDiff { c, d } => (*c, *d),
        CoefficientSet::Poisson { .. } => unreachable!(),
    }
}

fn max_row_sum(m: &ElementMatrix) -> f64 {
    (0..m.n).map(|r| (0..m.n).map(|s| m.a(r, s)).sum::<f64>().abs()).fold(0.0, f64::max)
}

fn a_norm(m: &ElementMatrix) -> f64 {
    m.a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[test]
fn row_sums_vanish_for_pure_diffusion() {
    for element in ElementType::ALL {
        for (g, set) in random_elements(element, ProblemClass::ConvDiff, N, 11) {
            let (c, _) = conv_diff_parts(&set);
            let coeffs = diffusion_only(&c);
            for d in KernelDescriptor::for_case(element, ProblemClass::ConvDiff) {
                let m = integrate_element(&d, &g, &coeffs).unwrap();
                assert!(max_row_sum(&m) <= 1e-12 * a_norm(&m), "{d}");
            }
        }
        for (g, set) in random_elements(element, ProblemClass::Poisson, N, 12) {
            for d in KernelDescriptor::for_case(element, ProblemClass::Poisson) {
                let m = integrate_element(&d, &g, &set).unwrap();
                assert!(max_row_sum(&m) <= 1e-12 * a_norm(&m), "{d}");
            }
        }
    }
}

#[test]
fn symmetric_coefficients_give_symmetric_matrices() {
    for element in ElementType::ALL {
        for (g, set) in random_elements(element, ProblemClass::ConvDiff, N, 13) {
            let (mut c, d) = conv_diff_parts(&set);
            for i in 1..4 {
                c[0][i] = 0.0;
                c[i][0] = 0.0;
                for j in 1..i {
                    c[j][i] = c[i][j];
                }
            }
            let coeffs = CoefficientSet::ConvDiff { c, d };
            for desc in KernelDescriptor::for_case(element, ProblemClass::ConvDiff) {
                let m = integrate_element(&desc, &g, &coeffs).unwrap();
                let asym = (0..m.n)
                    .flat_map(|r| (0..m.n).map(move |s| (r, s)))
                    .map(|(r, s)| (m.a(r, s) - m.a(s, r)).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert!(asym <= 1e-12 * a_norm(&m), "{desc}");
            }
        }
    }
}

#[test]
fn convection_terms_break_symmetry() {
    let g = ElementGeometry::reference(ElementType::Tetrahedron);
    let mut c = [[0.0; 4]; 4];
    c[0][1] = 1.0;
    let desc = KernelDescriptor::new(Variant::Qss, GeometryPath::GeoLinear, ProblemClass::ConvDiff, ElementType::Tetrahedron)
        .unwrap();
    let m = integrate_element(&desc, &g, &CoefficientSet::ConvDiff { c, d: [0.0; 4] }).unwrap();
    assert!((m.a(0, 1) - m.a(1, 0)).abs() > 1e-3);
}

#[test]
fn tet_scaling_laws() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for (g, set) in random_elements(ElementType::Tetrahedron, ProblemClass::ConvDiff, N, 15) {
        let h: f64 = rng.gen_range(0.01..50.0);
        let scaled = g.map(|[x, y, z]| [h * x, h * y, h * z]);
        let (c, _) = conv_diff_parts(&set);
        let mut reaction = [[0.0; 4]; 4];
        reaction[0][0] = c[0][0];
        let cases = [(diffusion_only(&c), h), (CoefficientSet::ConvDiff { c: reaction, d: [0.0; 4] }, h.powi(3))];
        for desc in KernelDescriptor::for_case(ElementType::Tetrahedron, ProblemClass::ConvDiff) {
            for (coeffs, factor) in &cases {
                let m0 = integrate_element(&desc, &g, coeffs).unwrap();
                let m1 = integrate_element(&desc, &scaled, coeffs).unwrap();
                let expect = ElementMatrix { n: 4, a: m0.a.iter().map(|v| v * factor).collect(), b: m0.b.clone() };
                assert!(m1.relative_diff(&expect) <= 1e-12, "{desc} h={h}");
            }
        }
    }
}

#[test]
fn partition_of_unity_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for element in ElementType::ALL {
        for _ in 0..N {
            let (a, b) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            let (xi, eta) = if a + b > 1.0 { (1.0 - a, 1.0 - b) } else { (a, b) };
            let zeta = match element {
                ElementType::Tetrahedron => rng.gen_range(0.0..=(1.0 - xi - eta)),
                ElementType::Prism => rng.gen_range(-1.0..=1.0),
            };
            let (v, d) = shape_at(element, [xi, eta, zeta]).unwrap();
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for k in 0..3 {
                assert!(d.iter().map(|g| g[k]).sum::<f64>().abs() < 1e-14);
            }
        }
    }
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn quadrature_volume(g: &ElementGeometry) -> f64 {
    let re = reference_element(g.element);
    (0..re.num_quadrature_points()).map(|q| jacobian_at_point(g, q, re).unwrap().vol).sum()
}

#[test]
fn volume_conservation_tets() {
    for (g, _) in random_elements(ElementType::Tetrahedron, ProblemClass::Poisson, N, 17) {
        let x = &g.coords;
        let e = |i: usize| [x[i][0] - x[0][0], x[i][1] - x[0][1], x[i][2] - x[0][2]];
        let exact = det3([e(1), e(2), e(3)]).abs() / 6.0;
        assert!((quadrature_volume(&g) - exact).abs() <= 1e-12 * exact);
        // sum of mass matrix entries is the volume as well
        let mass: f64 = simplex_mass_matrix(&g).unwrap().iter().sum();
        assert!((mass - exact).abs() <= 1e-12 * exact);
    }
}

/// Frustum over a random triangle with a homothetic top face, then a random
/// affine map. All faces are planar.
fn planar_prism(rng: &mut ChaCha8Rng) -> (ElementGeometry, f64) {
    let tri = loop {
        let t: [[f64; 2]; 3] = std::array::from_fn(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
        let area2 = (t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[2][0] - t[0][0]) * (t[1][1] - t[0][1]);
        if area2 > 0.3 {
            break t;
        }
    };
    let area = 0.5 * ((tri[1][0] - tri[0][0]) * (tri[2][1] - tri[0][1]) - (tri[2][0] - tri[0][0]) * (tri[1][1] - tri[0][1]));
    let s: f64 = rng.gen_range(0.4..1.6);
    let h: f64 = rng.gen_range(0.3..2.0);
    let c = [(tri[0][0] + tri[1][0] + tri[2][0]) / 3.0, (tri[0][1] + tri[1][1] + tri[2][1]) / 3.0];
    let mut coords: Vec<[f64; 3]> = tri.iter().map(|p| [p[0], p[1], 0.0]).collect();
    coords.extend(tri.iter().map(|p| [c[0] + s * (p[0] - c[0]), c[1] + s * (p[1] - c[1]), h]));
    let top = s * s * area;
    let frustum = h / 3.0 * (area + top + (area * top).sqrt());
    let m: [[f64; 3]; 3] = loop {
        let m: [[f64; 3]; 3] = std::array::from_fn(|i| {
            std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 } + 0.3 * rng.gen_range(-1.0..1.0))
        });
        if det3(m) > 0.2 {
            break m;
        }
    };
    let coords = coords
        .iter()
        .map(|x| std::array::from_fn(|i| (0..3).map(|j| m[i][j] * x[j]).sum()))
        .collect();
    (ElementGeometry::new(ElementType::Prism, coords).unwrap(), frustum * det3(m))
}

#[test]
fn volume_conservation_planar_prisms() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for _ in 0..N {
        let (g, exact) = planar_prism(&mut rng);
        assert!((quadrature_volume(&g) - exact).abs() <= 1e-12 * exact);
    }
}

#[test]
fn mesh_volumes_sum_to_one() {
    for spec in [
        MeshSpec::new(1, 1, 1, ElementType::Tetrahedron).unwrap(),
        MeshSpec::new(4, 3, 5, ElementType::Tetrahedron).unwrap(),
        MeshSpec::new(10, 10, 10, ElementType::Prism).unwrap(),
        MeshSpec::new(7, 2, 1, ElementType::Prism).unwrap(),
    ] {
        let geoms = mesh_geometries(&spec);
        assert_eq!(geoms.len(), spec.num_elements());
        let v: f64 = geoms.iter().map(quadrature_volume).sum();
        assert!((v - 1.0).abs() < 1e-12, "{spec:?}");
    }
}

#[test]
fn oracle_self_consistency_on_affine_tets() {
    for problem in ProblemClass::ALL {
        for (g, c) in random_elements(ElementType::Tetrahedron, problem, 200, 19) {
            let r = integrate_reference(&g, &c, ElementType::Tetrahedron, problem).unwrap();
            let h = integrate_high_order(&g, &c, ElementType::Tetrahedron, problem, 1).unwrap();
            assert!(r.relative_diff(&h) < 1e-13);
        }
    }
}

#[test]
fn mass_matrix_on_affine_tets() {
    let mut c = [[0.0; 4]; 4];
    c[0][0] = 1.0;
    let coeffs = CoefficientSet::ConvDiff { c, d: [0.0; 4] };
    for (g, _) in random_elements(ElementType::Tetrahedron, ProblemClass::ConvDiff, N, 20) {
        let exact = simplex_mass_matrix(&g).unwrap();
        let exact = ElementMatrix { n: 4, a: exact, b: vec![0.0; 4] };
        for d in KernelDescriptor::for_case(ElementType::Tetrahedron, ProblemClass::ConvDiff) {
            assert!(integrate_element(&d, &g, &coeffs).unwrap().relative_diff(&exact) < 1e-12);
        }
    }
}

fn all_layouts() -> Vec<BatchLayout> {
    let mut v = vec![BatchLayout::element_major()];
    v.extend(LANE_WIDTHS.iter().map(|&w| BatchLayout::interleaved(w).unwrap()));
    v
}

#[test]
fn layouts_and_workers_are_transparent() {
    for element in ElementType::ALL {
        for problem in ProblemClass::ALL {
            // 1001 leaves a partial last block for every lane width above 1
            let els = random_elements(element, problem, 1001, 21);
            let reference = ElementBatch::build(&els, BatchLayout::element_major()).unwrap();
            for desc in KernelDescriptor::for_case(element, problem) {
                let base = integrate_batch(&desc, &reference, BatchLayout::element_major(), 1).unwrap();
                for e in [0, 500, 1000] {
                    assert_eq!(base.element_result(e).unwrap(), integrate_element(&desc, &els[e].0, &els[e].1).unwrap());
                }
                for input in all_layouts() {
                    let batch = reference.convert(input);
                    for (output, workers) in all_layouts().into_iter().zip([1, 2, 3, 4, 1, 2, 5]) {
                        let r = integrate_batch(&desc, &batch, output, workers).unwrap();
                        for e in 0..els.len() {
                            let x = r.element_result(e).unwrap();
                            let y = base.element_result(e).unwrap();
                            assert!(
                                x.a.iter().zip(&y.a).chain(x.b.iter().zip(&y.b)).all(|(p, q)| p.to_bits() == q.to_bits()),
                                "{desc} {input:?} -> {output:?}"
                            );
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn traffic_counts_for_every_layout() {
    let expected = |e: ElementType, p: ProblemClass| match (e, p) {
        (ElementType::Tetrahedron, ProblemClass::Poisson) => 36,
        (ElementType::Prism, ProblemClass::Poisson) => 66,
        (ElementType::Tetrahedron, ProblemClass::ConvDiff) => 52,
        (ElementType::Prism, ProblemClass::ConvDiff) => 80,
    };
    for element in ElementType::ALL {
        for problem in ProblemClass::ALL {
            let els = random_elements(element, problem, 333, 22);
            for layout in all_layouts() {
                let batch = ElementBatch::build(&els, layout).unwrap();
                for desc in KernelDescriptor::for_case(element, problem) {
                    let r = integrate_batch(&desc, &batch, layout, 2).unwrap();
                    assert_eq!(r.accesses_per_element(), expected(element, problem) as f64);
                    let ns = element.num_shape_functions() as u64;
                    assert_eq!(r.traffic, TrafficCounters {
                        reads: 333 * (expected(element, problem) - ns * ns - ns),
                        writes: 333 * (ns * ns + ns)
                    });
                }
            }
        }
    }
}

#[test]
fn padding_is_never_read() {
    let els = random_elements(ElementType::Prism, ProblemClass::ConvDiff, 37, 23);
    let layout = BatchLayout::interleaved(16).unwrap();
    let batch = ElementBatch::build(&els, layout).unwrap();
    // 37 elements in blocks of 16 leave 11 padded slots per value
    let ds = 42;
    let pad_slots = (48 - 37) * ds;
    if cfg!(debug_assertions) {
        assert!(PAD.is_nan());
        assert_eq!(batch.geometry_data().iter().filter(|v| v.is_nan()).count(), (48 - 37) * 18);
    }
    for desc in KernelDescriptor::for_case(ElementType::Prism, ProblemClass::ConvDiff) {
        let r = integrate_batch(&desc, &batch, layout, 3).unwrap();
        assert_eq!(r.data.len(), 48 * ds);
        for e in 0..37 {
            assert!(r.element_result(e).unwrap().is_finite());
        }
        let untouched = r.data.iter().filter(|v| v.to_bits() == PAD.to_bits()).count();
        assert!(untouched >= pad_slots);
    }
}

#[test]
fn batch_file_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mesh.fekb");
    let spec = MeshSpec::new(3, 3, 3, ElementType::Tetrahedron).unwrap();
    let batch = generate_mesh(&spec, ProblemClass::ConvDiff, BatchLayout::interleaved(8).unwrap(), 9).unwrap();
    batch.save(&path).unwrap();
    let back = ElementBatch::load(&path).unwrap();
    assert_eq!(back.len(), batch.len());
    assert_eq!(back.layout(), batch.layout());
    assert_eq!(back.layout().scheme, Scheme::LaneInterleaved);
    assert_eq!(back.to_element_major(), batch.to_element_major());

    std::fs::write(&path, b"not a batch").unwrap();
    assert!(matches!(ElementBatch::load(&path), Err(Error::Format(_)) | Err(Error::Io(_))));
}

#[test]
fn inverted_element_in_batch() {
    let mut els = random_elements(ElementType::Tetrahedron, ProblemClass::Poisson, 1000, 24);
    for idx in [999, 412, 700] {
        els[idx].0.coords.swap(1, 2);
    }
    let batch = ElementBatch::build(&els, BatchLayout::interleaved(4).unwrap()).unwrap();
    for desc in KernelDescriptor::for_case(ElementType::Tetrahedron, ProblemClass::Poisson) {
        for workers in [1, 2, 7] {
            match integrate_batch(&desc, &batch, BatchLayout::element_major(), workers) {
                Err(Error::Element { index, .. }) => assert_eq!(index, 412),
                other => panic!("{other:?}"),
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn translation_invariance(seed in any::<u64>(), t in prop::array::uniform3(-100.0f64..100.0)) {
        for element in ElementType::ALL {
            let (g, c) = random_elements(element, ProblemClass::ConvDiff, 1, seed).remove(0);
            let moved = g.map(|[x, y, z]| [x + t[0], y + t[1], z + t[2]]);
            for d in KernelDescriptor::for_case(element, ProblemClass::ConvDiff) {
                let a = integrate_element(&d, &g, &c).unwrap();
                let b = integrate_element(&d, &moved, &c).unwrap();
                prop_assert!(a.relative_diff(&b) < 1e-10);
            }
        }
    }

    #[test]
    fn load_vector_scales_with_volume(seed in any::<u64>(), h in 0.01f64..100.0) {
        let (g, c) = random_elements(ElementType::Prism, ProblemClass::Poisson, 1, seed).remove(0);
        let scaled = g.map(|[x, y, z]| [h * x, h * y, h * z]);
        let d = KernelDescriptor::new(Variant::Sqs, GeometryPath::GeoGeneric, ProblemClass::Poisson, ElementType::Prism).unwrap();
        let a = integrate_element(&d, &g, &c).unwrap();
        let b = integrate_element(&d, &scaled, &c).unwrap();
        for (x, y) in a.b.iter().zip(&b.b) {
            prop_assert!((x * h.powi(3) - y).abs() <= 1e-12 * (x.abs() * h.powi(3)).max(1e-300));
        }
        for (x, y) in a.a.iter().zip(&b.a) {
            prop_assert!((x * h - y).abs() <= 1e-11 * a_norm(&a) * h);
        }
    }

    #[test]
    fn kernels_match_reference(seed in any::<u64>()) {
        for element in ElementType::ALL {
            for problem in ProblemClass::ALL {
                let (g, c) = random_elements(element, problem, 1, seed).remove(0);
                let r = integrate_reference(&g, &c, element, problem).unwrap();
                for d in KernelDescriptor::for_case(element, problem) {
                    prop_assert!(integrate_element(&d, &g, &c).unwrap().relative_diff(&r) < 1e-12);
                }
            }
        }
    }
}
