//! Reference elements: quadrature rules and tabulated first-order shape
//! functions for the unit tetrahedron and the triangle × [-1, 1] prism.
//!
//! Local coordinates are always three components `(ξ, η, ζ)`. Vertex
//! numbering for the prism is bottom face (ζ = -1) first, then the top face,
//! each in the triangle order `(0,0), (1,0), (0,1)`.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Number of space dimensions; fixed for every element handled here.
pub const NUM_DIMS: usize = 3;
/// Upper bound on shape functions (and vertices) over all element types.
pub const MAX_SHAPE: usize = 6;
/// Upper bound on quadrature points over all element types.
pub const MAX_QUAD: usize = 6;

const OUTSIDE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElementType {
    Tetrahedron,
    Prism,
}

impl ElementType {
    pub const ALL: [ElementType; 2] = [ElementType::Tetrahedron, ElementType::Prism];

    pub const fn num_shape_functions(self) -> usize {
        match self {
            ElementType::Tetrahedron => 4,
            ElementType::Prism => 6,
        }
    }

    pub const fn num_quadrature_points(self) -> usize {
        match self {
            ElementType::Tetrahedron => 4,
            ElementType::Prism => 6,
        }
    }

    /// Geometry degrees of freedom are the vertices, one per shape function.
    pub const fn num_vertices(self) -> usize {
        self.num_shape_functions()
    }

    /// Scalars of geometry input per element (12 or 18).
    pub const fn geometry_len(self) -> usize {
        self.num_vertices() * NUM_DIMS
    }

    pub fn reference_volume(self) -> f64 {
        match self {
            ElementType::Tetrahedron => 1.0 / 6.0,
            ElementType::Prism => 1.0,
        }
    }

    pub fn reference_vertices(self) -> &'static [[f64; 3]] {
        const TET: [[f64; 3]; 4] = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        const PRISM: [[f64; 3]; 6] = [
            [0.0, 0.0, -1.0],
            [1.0, 0.0, -1.0],
            [0.0, 1.0, -1.0],
            [0.0, 0.0, 1.0],
            [1.0, 0.0, 1.0],
            [0.0, 1.0, 1.0],
        ];
        match self {
            ElementType::Tetrahedron => &TET,
            ElementType::Prism => &PRISM,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ElementType::Tetrahedron => "tet",
            ElementType::Prism => "prism",
        }
    }

    /// Whether `xi` lies in the closed reference element, up to `tol`.
    pub fn contains(self, xi: [f64; 3], tol: f64) -> bool {
        let [x, y, z] = xi;
        match self {
            ElementType::Tetrahedron => {
                x >= -tol && y >= -tol && z >= -tol && x + y + z <= 1.0 + tol
            }
            ElementType::Prism => {
                x >= -tol && y >= -tol && x + y <= 1.0 + tol && z.abs() <= 1.0 + tol
            }
        }
    }
}

impl fmt::Display for ElementType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ElementType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tet" | "tetra" | "tetrahedron" => Ok(ElementType::Tetrahedron),
            "prism" => Ok(ElementType::Prism),
            other => Err(Error::Parse(format!("unknown element type '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Shape function values and local derivatives at the quadrature points.
///
/// `values[q][s]` is φ̂_s(ξ^q); `local_derivatives[q][s][k]` is ∂φ̂_s/∂ξ_k at ξ^q.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeFunctionTable {
    pub values: Vec<Vec<f64>>,
    pub local_derivatives: Vec<Vec<[f64; 3]>>,
}

/// Quadrature rule and tabulated basis for one element type.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceElement {
    pub element: ElementType,
    pub rule: QuadratureRule,
    pub table: ShapeFunctionTable,
}

impl ReferenceElement {
    pub fn num_shape_functions(&self) -> usize {
        self.element.num_shape_functions()
    }

    pub fn num_quadrature_points(&self) -> usize {
        self.rule.len()
    }
}

fn tet_rule() -> QuadratureRule {
    let a = (5.0 - 5.0_f64.sqrt()) / 20.0;
    let b = 1.0 - 3.0 * a;
    QuadratureRule {
        points: vec![[a, a, a], [b, a, a], [a, b, a], [a, a, b]],
        weights: vec![1.0 / 24.0; 4],
    }
}

fn prism_rule() -> QuadratureRule {
    let tri = [[1.0 / 6.0, 1.0 / 6.0], [2.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 2.0 / 3.0]];
    let g = 1.0 / 3.0_f64.sqrt();
    let mut points = Vec::with_capacity(6);
    let mut weights = Vec::with_capacity(6);
    for z in [-g, g] {
        for [x, y] in tri {
            points.push([x, y, z]);
            // triangle weight 1/6, Gauss weight 1
            weights.push(1.0 / 6.0);
        }
    }
    QuadratureRule { points, weights }
}

/// Basis values and local derivatives at `xi`, without the domain check.
pub(crate) fn eval_basis(element: ElementType, xi: [f64; 3]) -> (Vec<f64>, Vec<[f64; 3]>) {
    let [x, y, z] = xi;
    match element {
        ElementType::Tetrahedron => (
            vec![1.0 - x - y - z, x, y, z],
            vec![[-1.0, -1.0, -1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        ),
        ElementType::Prism => {
            let lam = [1.0 - x - y, x, y];
            let dlam = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
            let lo = 0.5 * (1.0 - z);
            let hi = 0.5 * (1.0 + z);
            let mut values = Vec::with_capacity(6);
            let mut derivs = Vec::with_capacity(6);
            for (f, df) in [(lo, -0.5), (hi, 0.5)] {
                for a in 0..3 {
                    values.push(lam[a] * f);
                    derivs.push([dlam[a][0] * f, dlam[a][1] * f, lam[a] * df]);
                }
            }
            (values, derivs)
        }
    }
}

fn build(element: ElementType) -> ReferenceElement {
    let rule = match element {
        ElementType::Tetrahedron => tet_rule(),
        ElementType::Prism => prism_rule(),
    };
    let (values, local_derivatives) = rule.points.iter().map(|&p| eval_basis(element, p)).unzip();
    ReferenceElement { element, rule, table: ShapeFunctionTable { values, local_derivatives } }
}

/// Shared, immutable reference data for `element`.
pub fn reference_element(element: ElementType) -> &'static ReferenceElement {
    static TET: OnceLock<ReferenceElement> = OnceLock::new();
    static PRISM: OnceLock<ReferenceElement> = OnceLock::new();
    match element {
        ElementType::Tetrahedron => TET.get_or_init(|| build(ElementType::Tetrahedron)),
        ElementType::Prism => PRISM.get_or_init(|| build(ElementType::Prism)),
    }
}

/// Evaluate the basis on the fly at an arbitrary local point.
pub fn shape_at(element: ElementType, xi: [f64; 3]) -> Result<(Vec<f64>, Vec<[f64; 3]>)> {
    if !xi.iter().all(|v| v.is_finite()) || !element.contains(xi, OUTSIDE_TOL) {
        return Err(Error::PointOutsideElement { element, xi });
    }
    Ok(eval_basis(element, xi))
}

/// Fixed-size copy of the reference data used by the kernels.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RefTables<const NS: usize, const NQ: usize> {
    pub weights: [f64; NQ],
    pub values: [[f64; NS]; NQ],
    pub derivs: [[[f64; 3]; NS]; NQ],
}

impl<const NS: usize, const NQ: usize> RefTables<NS, NQ> {
    pub fn from_reference(re: &ReferenceElement) -> Self {
        assert_eq!(re.num_shape_functions(), NS);
        assert_eq!(re.num_quadrature_points(), NQ);
        let mut t = RefTables { weights: [0.0; NQ], values: [[0.0; NS]; NQ], derivs: [[[0.0; 3]; NS]; NQ] };
        for q in 0..NQ {
            t.weights[q] = re.rule.weights[q];
            t.values[q].copy_from_slice(&re.table.values[q]);
            t.derivs[q].copy_from_slice(&re.table.local_derivatives[q]);
        }
        t
    }
}

pub(crate) fn tet_tables() -> &'static RefTables<4, 4> {
    static T: OnceLock<RefTables<4, 4>> = OnceLock::new();
    T.get_or_init(|| RefTables::from_reference(reference_element(ElementType::Tetrahedron)))
}

pub(crate) fn prism_tables() -> &'static RefTables<6, 6> {
    static T: OnceLock<RefTables<6, 6>> = OnceLock::new();
    T.get_or_init(|| RefTables::from_reference(reference_element(ElementType::Prism)))
}
