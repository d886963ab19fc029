//! Synthetic inputs: structured unit-cube meshes for benchmarking and
//! seeded random elements for the equivalence and property suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{classify_determinant, element_scale, jacobian_at_point, ElementGeometry};
use crate::kernels::{CoefficientSet, ProblemClass};
use crate::layout::{BatchLayout, ElementBatch};
use crate::refelem::{reference_element, shape_at, ElementType};

/// Unit cube split into `nx × ny × nz` cells.
///
/// Tetrahedral meshes use the six-tetrahedron Kuhn split of every cell.
/// Prism meshes split each `(i, j)` column into two triangular prisms that
/// span the full height, so `nz` does not change the element count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeshSpec {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub element: ElementType,
}

impl MeshSpec {
    pub fn new(nx: usize, ny: usize, nz: usize, element: ElementType) -> Result<Self> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::Parse(format!("mesh subdivisions must be at least 1, got {nx}x{ny}x{nz}")));
        }
        Ok(MeshSpec { nx, ny, nz, element })
    }

    /// Smallest cubic subdivision with at least `n` elements.
    pub fn for_element_count(element: ElementType, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyBatch);
        }
        let mut k = 1;
        loop {
            let spec = MeshSpec::new(k, k, k, element)?;
            if spec.num_elements() >= n {
                return Ok(spec);
            }
            k += 1;
        }
    }

    pub fn num_elements(&self) -> usize {
        match self.element {
            ElementType::Tetrahedron => 6 * self.nx * self.ny * self.nz,
            ElementType::Prism => 2 * self.nx * self.ny,
        }
    }
}

// Kuhn split: one tetrahedron per ordering of the axes, each walking from
// (0,0,0) to (1,1,1) one unit step at a time.
const AXIS_ORDERS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

fn signed_volume6(v: &[[f64; 3]]) -> f64 {
    let e = |i: usize| [v[i][0] - v[0][0], v[i][1] - v[0][1], v[i][2] - v[0][2]];
    let (a, b, c) = (e(1), e(2), e(3));
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0])
}

/// Element geometries of the structured mesh, positively oriented.
pub fn mesh_geometries(spec: &MeshSpec) -> Vec<ElementGeometry> {
    let mut out = Vec::with_capacity(spec.num_elements());
    match spec.element {
        ElementType::Tetrahedron => {
            let h = [1.0 / spec.nx as f64, 1.0 / spec.ny as f64, 1.0 / spec.nz as f64];
            for k in 0..spec.nz {
                for j in 0..spec.ny {
                    for i in 0..spec.nx {
                        let origin = [i as f64 * h[0], j as f64 * h[1], k as f64 * h[2]];
                        for order in AXIS_ORDERS {
                            let mut v = [origin; 4];
                            for s in 0..3 {
                                v[s + 1] = v[s];
                                v[s + 1][order[s]] += h[order[s]];
                            }
                            if signed_volume6(&v) < 0.0 {
                                v.swap(1, 2);
                            }
                            out.push(ElementGeometry { element: ElementType::Tetrahedron, coords: v.to_vec() });
                        }
                    }
                }
            }
        }
        ElementType::Prism => {
            let (hx, hy) = (1.0 / spec.nx as f64, 1.0 / spec.ny as f64);
            for j in 0..spec.ny {
                for i in 0..spec.nx {
                    let (x0, y0) = (i as f64 * hx, j as f64 * hy);
                    let (x1, y1) = (x0 + hx, y0 + hy);
                    for tri in [[(x0, y0), (x1, y0), (x1, y1)], [(x0, y0), (x1, y1), (x0, y1)]] {
                        let coords = [0.0, 1.0]
                            .iter()
                            .flat_map(|&z| tri.iter().map(move |&(x, y)| [x, y, z]))
                            .collect();
                        out.push(ElementGeometry { element: ElementType::Prism, coords });
                    }
                }
            }
        }
    }
    out
}

/// Random coefficients with every entry uniform in `[-1, 1]`.
pub fn random_coefficients<R: Rng>(rng: &mut R, problem: ProblemClass, element: ElementType) -> CoefficientSet {
    let flat: Vec<f64> = (0..problem.coefficient_len(element)).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    CoefficientSet::from_flat(problem, element, &flat).expect("length matches problem class")
}

/// Structured mesh with seeded random coefficients.
pub fn generate_mesh(spec: &MeshSpec, problem: ProblemClass, layout: BatchLayout, seed: u64) -> Result<ElementBatch> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let elements: Vec<_> = mesh_geometries(spec)
        .into_iter()
        .map(|g| {
            let c = random_coefficients(&mut rng, problem, spec.element);
            (g, c)
        })
        .collect();
    ElementBatch::build(&elements, layout)
}

/// Exactly `n` mesh elements: the smallest cubic mesh with enough elements,
/// truncated.
pub fn generate_elements(
    element: ElementType,
    problem: ProblemClass,
    n: usize,
    layout: BatchLayout,
    seed: u64,
) -> Result<ElementBatch> {
    let spec = MeshSpec::for_element_count(element, n)?;
    Ok(generate_mesh(&spec, problem, layout, seed)?.truncate(n))
}

fn random_affine<R: Rng>(rng: &mut R) -> ([[f64; 3]; 3], [f64; 3]) {
    loop {
        let scale: f64 = rng.gen_range(0.5..2.0);
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                let id = if i == j { 1.0 } else { 0.0 };
                *x = scale * (id + 0.5 * rng.gen_range(-1.0..1.0));
            }
        }
        let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        if det > 0.1 * scale.powi(3) {
            let t = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            return (m, t);
        }
    }
}

fn apply(m: &[[f64; 3]; 3], t: [f64; 3], x: [f64; 3]) -> [f64; 3] {
    let mut y = t;
    for i in 0..3 {
        for j in 0..3 {
            y[i] += m[i][j] * x[j];
        }
    }
    y
}

/// Checks positivity of `det J` at the quadrature points and the vertices.
fn well_shaped(g: &ElementGeometry) -> bool {
    let re = reference_element(g.element);
    let scale = element_scale(&g.coords);
    let points_ok = (0..re.num_quadrature_points()).all(|q| jacobian_at_point(g, q, re).is_ok());
    points_ok
        && g.element.reference_vertices().iter().all(|&xi| {
            let (_, d) = shape_at(g.element, xi).expect("vertex lies in the element");
            let mut j = [[0.0; 3]; 3];
            for (x, dv) in g.coords.iter().zip(&d) {
                for a in 0..3 {
                    for b in 0..3 {
                        j[a][b] += x[a] * dv[b];
                    }
                }
            }
            let det = j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1])
                - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
                + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
            classify_determinant(det, scale, None).is_ok() && det > 1e-3 * scale.powi(3)
        })
}

/// A random positively oriented element. Tetrahedra are random affine
/// images of the reference; prisms additionally get independent vertex
/// perturbations, so they are not affine.
pub fn random_element<R: Rng>(rng: &mut R, element: ElementType) -> ElementGeometry {
    loop {
        let (m, t) = random_affine(rng);
        let coords: Vec<[f64; 3]> = element
            .reference_vertices()
            .iter()
            .map(|&x| {
                let mut y = apply(&m, t, x);
                if element == ElementType::Prism {
                    for c in &mut y {
                        *c += rng.gen_range(-0.1..0.1);
                    }
                }
                y
            })
            .collect();
        let g = ElementGeometry { element, coords };
        if well_shaped(&g) {
            return g;
        }
    }
}

/// `n` seeded random elements with random coefficients.
pub fn random_elements(
    element: ElementType,
    problem: ProblemClass,
    n: usize,
    seed: u64,
) -> Vec<(ElementGeometry, CoefficientSet)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let g = random_element(&mut rng, element);
            let c = random_coefficients(&mut rng, problem, element);
            (g, c)
        })
        .collect()
}

/// Right prism over the unit reference triangle with its top face rotated
/// by `angle` radians about the centroid axis. Bilinear for any non-zero
/// angle.
pub fn twisted_prism(angle: f64, height: f64) -> ElementGeometry {
    let tri = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let c = [1.0 / 3.0, 1.0 / 3.0];
    let (s, co) = angle.sin_cos();
    let mut coords: Vec<[f64; 3]> = tri.iter().map(|p| [p[0], p[1], 0.0]).collect();
    coords.extend(tri.iter().map(|p| {
        let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
        [c[0] + co * dx - s * dy, c[1] + s * dx + co * dy, height]
    }));
    ElementGeometry { element: ElementType::Prism, coords }
}
