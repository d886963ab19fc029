//! The twelve integration kernels: loop order {QSS, SQS, SSQ} × geometry
//! path {linear, generic} × problem {Poisson, conv-diff}, instantiated for
//! tetrahedra and prisms.
//!
//! Every kernel computes
//!
//! ```text
//! A[r][s] = Σ_q vol[q] Σ_{i,j=0..3} c[i][j] φ[i][r] φ[j][s]
//! b[r]    = Σ_q vol[q] Σ_{i=0..3}   d[i] φ[i][r]
//! ```
//!
//! with slot 0 holding the shape function value and slots 1..3 its global
//! derivatives. The variants only differ in loop nesting and in where the
//! Jacobian terms are evaluated.

mod batch;
mod opcount;
mod physics;
mod variants;

use std::fmt;
use std::str::FromStr;

pub use batch::{integrate_batch, BatchResult, Executor, TrafficCounters};
pub use opcount::{phase_op_counts, PhaseOpCounts};
pub(crate) use physics::{ConvDiff, Physics, Poisson};
pub(crate) use variants::{select_kernel, Sink};

use crate::error::{Error, Result};
use crate::geometry::ElementGeometry;
use crate::refelem::{prism_tables, tet_tables, ElementType, RefTables, MAX_QUAD};

/// Coefficient slots per problem for conv-diff: 4×4 `c` and 4 `d`.
pub const CONV_DIFF_COEFFS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProblemClass {
    /// Identity diffusion, one right-hand-side value per quadrature point.
    Poisson,
    /// Full element-constant coefficient set.
    ConvDiff,
}

impl ProblemClass {
    pub const ALL: [ProblemClass; 2] = [ProblemClass::Poisson, ProblemClass::ConvDiff];

    /// Scalars of coefficient input per element.
    pub const fn coefficient_len(self, element: ElementType) -> usize {
        match self {
            ProblemClass::Poisson => element.num_quadrature_points(),
            ProblemClass::ConvDiff => CONV_DIFF_COEFFS,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemClass::Poisson => "poisson",
            ProblemClass::ConvDiff => "convdiff",
        }
    }
}

impl fmt::Display for ProblemClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "poisson" => Ok(ProblemClass::Poisson),
            "convdiff" | "conv-diff" => Ok(ProblemClass::ConvDiff),
            other => Err(Error::Parse(format!("unknown problem class '{other}'"))),
        }
    }
}

/// PDE coefficients of one element.
///
/// For conv-diff, index 0 of `c` and `d` is the no-derivative slot and 1..3
/// are the x, y, z derivative slots. The flat form is `c` row-major then `d`.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientSet {
    Poisson { d0: Vec<f64> },
    ConvDiff { c: [[f64; 4]; 4], d: [f64; 4] },
}

impl CoefficientSet {
    pub fn problem(&self) -> ProblemClass {
        match self {
            CoefficientSet::Poisson { .. } => ProblemClass::Poisson,
            CoefficientSet::ConvDiff { .. } => ProblemClass::ConvDiff,
        }
    }

    pub fn zero(problem: ProblemClass, element: ElementType) -> Self {
        match problem {
            ProblemClass::Poisson => CoefficientSet::Poisson { d0: vec![0.0; element.num_quadrature_points()] },
            ProblemClass::ConvDiff => CoefficientSet::ConvDiff { c: [[0.0; 4]; 4], d: [0.0; 4] },
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        match self {
            CoefficientSet::Poisson { d0 } => d0.clone(),
            CoefficientSet::ConvDiff { c, d } => c.iter().flatten().chain(d).copied().collect(),
        }
    }

    pub fn from_flat(problem: ProblemClass, element: ElementType, flat: &[f64]) -> Result<Self> {
        let expected = problem.coefficient_len(element);
        if flat.len() != expected {
            return Err(Error::ShapeMismatch { what: "coefficient data", expected, found: flat.len() });
        }
        Ok(match problem {
            ProblemClass::Poisson => CoefficientSet::Poisson { d0: flat.to_vec() },
            ProblemClass::ConvDiff => {
                let mut c = [[0.0; 4]; 4];
                for (i, row) in c.iter_mut().enumerate() {
                    row.copy_from_slice(&flat[4 * i..4 * i + 4]);
                }
                let mut d = [0.0; 4];
                d.copy_from_slice(&flat[16..20]);
                CoefficientSet::ConvDiff { c, d }
            }
        })
    }

    pub(crate) fn check(&self, element: ElementType) -> Result<()> {
        if let CoefficientSet::Poisson { d0 } = self {
            let expected = element.num_quadrature_points();
            if d0.len() != expected {
                return Err(Error::ShapeMismatch { what: "Poisson right-hand side", expected, found: d0.len() });
            }
        }
        Ok(())
    }
}

/// Stiffness matrix and load vector of one element.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementMatrix {
    pub n: usize,
    /// Row-major `n × n`.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl ElementMatrix {
    pub fn zeros(n: usize) -> Self {
        ElementMatrix { n, a: vec![0.0; n * n], b: vec![0.0; n] }
    }

    #[inline]
    pub fn a(&self, r: usize, s: usize) -> f64 {
        self.a[r * self.n + s]
    }

    pub fn is_finite(&self) -> bool {
        self.a.iter().chain(&self.b).all(|v| v.is_finite())
    }

    /// Frobenius norm of the stacked `(A, b)`.
    pub fn norm(&self) -> f64 {
        self.a.iter().chain(&self.b).map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `‖self − other‖_F / ‖other‖_F` over `(A, b)`; absolute when `other` is zero.
    pub fn relative_diff(&self, other: &ElementMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        let diff = self
            .a
            .iter()
            .chain(&self.b)
            .zip(other.a.iter().chain(&other.b))
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        let norm = other.norm();
        if norm > 0.0 {
            diff / norm
        } else {
            diff
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    /// Quadrature point loop outermost.
    Qss,
    /// Row outermost, quadrature point in the middle.
    Sqs,
    /// Matrix entry outermost, quadrature point innermost.
    Ssq,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Qss, Variant::Sqs, Variant::Ssq];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Qss => "qss",
            Variant::Sqs => "sqs",
            Variant::Ssq => "ssq",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qss" => Ok(Variant::Qss),
            "sqs" => Ok(Variant::Sqs),
            "ssq" => Ok(Variant::Ssq),
            other => Err(Error::Parse(format!("unknown variant '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GeometryPath {
    /// Jacobian terms hoisted out of every loop; affine tetrahedra only.
    GeoLinear,
    /// Jacobian terms evaluated per quadrature point.
    GeoGeneric,
}

impl GeometryPath {
    pub const ALL: [GeometryPath; 2] = [GeometryPath::GeoLinear, GeometryPath::GeoGeneric];

    pub fn as_str(self) -> &'static str {
        match self {
            GeometryPath::GeoLinear => "linear",
            GeometryPath::GeoGeneric => "generic",
        }
    }
}

impl fmt::Display for GeometryPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GeometryPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" | "geo_linear" => Ok(GeometryPath::GeoLinear),
            "generic" | "geo_generic" => Ok(GeometryPath::GeoGeneric),
            other => Err(Error::Parse(format!("unknown geometry path '{other}'"))),
        }
    }
}

/// Identifies one concrete kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KernelDescriptor {
    pub variant: Variant,
    pub geometry_path: GeometryPath,
    pub problem: ProblemClass,
    pub element: ElementType,
}

impl KernelDescriptor {
    pub fn new(variant: Variant, geometry_path: GeometryPath, problem: ProblemClass, element: ElementType) -> Result<Self> {
        let desc = KernelDescriptor { variant, geometry_path, problem, element };
        desc.validate()?;
        Ok(desc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.geometry_path == GeometryPath::GeoLinear && self.element != ElementType::Tetrahedron {
            return Err(Error::InvalidDescriptor(format!("the linear geometry path cannot integrate a {}", self.element)));
        }
        Ok(())
    }

    /// Every valid descriptor for one (element, problem) case, in
    /// variant-major order.
    pub fn for_case(element: ElementType, problem: ProblemClass) -> Vec<KernelDescriptor> {
        let mut out = Vec::new();
        for variant in Variant::ALL {
            for geometry_path in GeometryPath::ALL {
                if let Ok(d) = KernelDescriptor::new(variant, geometry_path, problem, element) {
                    out.push(d);
                }
            }
        }
        out
    }

    /// All 18 valid descriptors.
    pub fn all() -> Vec<KernelDescriptor> {
        ElementType::ALL
            .iter()
            .flat_map(|&e| ProblemClass::ALL.iter().flat_map(move |&p| KernelDescriptor::for_case(e, p)))
            .collect()
    }

    /// The preferred geometry path for an element.
    pub fn default_path(element: ElementType) -> GeometryPath {
        match element {
            ElementType::Tetrahedron => GeometryPath::GeoLinear,
            ElementType::Prism => GeometryPath::GeoGeneric,
        }
    }
}

impl fmt::Display for KernelDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_geo_{}/{}/{}", self.variant, self.geometry_path, self.element, self.problem)
    }
}

struct MatrixSink<'a>(&'a mut ElementMatrix);

impl Sink for MatrixSink<'_> {
    #[inline(always)]
    fn store_a(&mut self, r: usize, s: usize, v: f64) {
        let n = self.0.n;
        self.0.a[r * n + s] = v;
    }

    #[inline(always)]
    fn store_b(&mut self, r: usize, v: f64) {
        self.0.b[r] = v;
    }
}

fn run_element<const NS: usize, const NQ: usize, P: Physics>(
    desc: &KernelDescriptor,
    tables: &RefTables<NS, NQ>,
    geom: &ElementGeometry,
    coeff: &CoefficientSet,
) -> Result<ElementMatrix> {
    let mut x = [[0.0; 3]; NS];
    x.copy_from_slice(&geom.coords);
    let flat = coeff.flat();
    let c = P::from_slice(&flat);
    let mut out = ElementMatrix::zeros(NS);
    let kernel = select_kernel::<NS, NQ, P, MatrixSink>(desc.variant, desc.geometry_path);
    kernel(tables, &x, &c, &mut MatrixSink(&mut out))?;
    Ok(out)
}

/// Integrate one element with the kernel named by `desc`.
pub fn integrate_element(desc: &KernelDescriptor, geom: &ElementGeometry, coeff: &CoefficientSet) -> Result<ElementMatrix> {
    desc.validate()?;
    if geom.element != desc.element {
        return Err(Error::InvalidDescriptor(format!("descriptor expects a {}, got a {}", desc.element, geom.element)));
    }
    if geom.coords.len() != desc.element.num_vertices() {
        return Err(Error::ShapeMismatch {
            what: "element vertices",
            expected: desc.element.num_vertices(),
            found: geom.coords.len(),
        });
    }
    if coeff.problem() != desc.problem {
        return Err(Error::ShapeMismatch {
            what: "coefficient set",
            expected: desc.problem.coefficient_len(desc.element),
            found: coeff.flat().len(),
        });
    }
    coeff.check(desc.element)?;
    debug_assert!(desc.element.num_quadrature_points() <= MAX_QUAD);
    match (desc.element, desc.problem) {
        (ElementType::Tetrahedron, ProblemClass::Poisson) => run_element::<4, 4, Poisson>(desc, tet_tables(), geom, coeff),
        (ElementType::Tetrahedron, ProblemClass::ConvDiff) => {
            run_element::<4, 4, ConvDiff>(desc, tet_tables(), geom, coeff)
        }
        (ElementType::Prism, ProblemClass::Poisson) => run_element::<6, 6, Poisson>(desc, prism_tables(), geom, coeff),
        (ElementType::Prism, ProblemClass::ConvDiff) => run_element::<6, 6, ConvDiff>(desc, prism_tables(), geom, coeff),
    }
}
