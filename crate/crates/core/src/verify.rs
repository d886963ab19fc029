//! The oracle-equivalence suite behind `felab verify`.

use std::fmt;

use crate::error::Result;
use crate::geometry::ElementGeometry;
use crate::kernels::{integrate_element, CoefficientSet, ElementMatrix, KernelDescriptor, ProblemClass};
use crate::mesh::{random_elements, twisted_prism};
use crate::oracle::{integrate_high_order, integrate_reference, simplex_mass_matrix};
use crate::refelem::ElementType;

pub const CROSS_VARIANT_TOL: f64 = 1e-12;
pub const REFERENCE_TOL: f64 = 1e-12;
pub const ANALYTIC_TOL: f64 = 1e-14;
pub const HIGH_ORDER_TOL: f64 = 1e-10;
pub const HIGH_ORDER_LEVEL: usize = 4;
pub const TWIST_ANGLES: [f64; 3] = [std::f64::consts::PI / 12.0, std::f64::consts::PI / 6.0, std::f64::consts::PI / 3.0];

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    /// Largest observed error.
    pub worst: f64,
    pub tolerance: f64,
    /// Whether a failure of this check fails the suite.
    pub gating: bool,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = match (self.passed(), self.gating) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "INFO",
        };
        write!(f, "{status} {:<48} max err {:.3e} (tol {:.0e})", self.name, self.worst, self.tolerance)
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    /// True when every gating check passed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed() || !c.gating)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        write!(f, "{}", if self.passed() { "verification passed" } else { "verification FAILED" })
    }
}

fn case_seed(seed: u64, element: ElementType, problem: ProblemClass) -> u64 {
    seed.wrapping_mul(4).wrapping_add(2 * element as u64 + problem as u64)
}

/// Largest pairwise relative difference between all kernels of one case.
pub fn cross_variant_error(elements: &[(ElementGeometry, CoefficientSet)], element: ElementType, problem: ProblemClass) -> Result<f64> {
    let descs = KernelDescriptor::for_case(element, problem);
    let mut worst: f64 = 0.0;
    for (g, c) in elements {
        let outs = descs.iter().map(|d| integrate_element(d, g, c)).collect::<Result<Vec<_>>>()?;
        for i in 0..outs.len() {
            for j in i + 1..outs.len() {
                worst = worst.max(outs[i].relative_diff(&outs[j]));
            }
        }
    }
    Ok(worst)
}

/// Largest relative difference between `desc` and the reference integrator.
pub fn reference_error(elements: &[(ElementGeometry, CoefficientSet)], desc: &KernelDescriptor) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (g, c) in elements {
        let k = integrate_element(desc, g, c)?;
        let r = integrate_reference(g, c, desc.element, desc.problem)?;
        worst = worst.max(k.relative_diff(&r));
    }
    Ok(worst)
}

/// Unit tetrahedron: stiffness `G Gᵀ / 6` and the exact mass matrix, max
/// absolute entry error over all tetrahedral kernels.
pub fn analytic_errors() -> Result<(f64, f64)> {
    let unit = ElementGeometry::reference(ElementType::Tetrahedron);
    let grads = [[-1.0, -1.0, -1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut stiffness = ElementMatrix::zeros(4);
    for r in 0..4 {
        for s in 0..4 {
            stiffness.a[r * 4 + s] = (0..3).map(|i| grads[r][i] * grads[s][i]).sum::<f64>() / 6.0;
        }
    }
    let mass = simplex_mass_matrix(&unit)?;
    let mut c = [[0.0; 4]; 4];
    c[0][0] = 1.0;
    let mass_coeffs = CoefficientSet::ConvDiff { c, d: [0.0; 4] };
    let poisson = CoefficientSet::Poisson { d0: vec![0.0; 4] };
    let max_abs = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let (mut ks, mut km) = (0.0f64, 0.0f64);
    for d in KernelDescriptor::for_case(ElementType::Tetrahedron, ProblemClass::Poisson) {
        ks = ks.max(max_abs(&integrate_element(&d, &unit, &poisson)?.a, &stiffness.a));
    }
    for d in KernelDescriptor::for_case(ElementType::Tetrahedron, ProblemClass::ConvDiff) {
        km = km.max(max_abs(&integrate_element(&d, &unit, &mass_coeffs)?.a, &mass));
    }
    Ok((ks, km))
}

/// Largest relative difference between the prism kernels and the
/// high-order integrator on twisted prisms.
pub fn twisted_prism_error(seed: u64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for problem in ProblemClass::ALL {
        let coeffs = random_elements(ElementType::Prism, problem, TWIST_ANGLES.len(), seed);
        for (&angle, (_, c)) in TWIST_ANGLES.iter().zip(&coeffs) {
            let g = twisted_prism(angle, 1.0);
            let r = integrate_high_order(&g, c, ElementType::Prism, problem, HIGH_ORDER_LEVEL)?;
            for d in KernelDescriptor::for_case(ElementType::Prism, problem) {
                worst = worst.max(integrate_element(&d, &g, c)?.relative_diff(&r));
            }
        }
    }
    Ok(worst)
}

/// Run the suite on `n` random elements per (element, problem) case.
///
/// The twisted-prism comparison measures the production rule's quadrature
/// error on a non-affine element, not an implementation mismatch, and is
/// reported without gating.
pub fn run_suite(n: usize, seed: u64) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    for element in ElementType::ALL {
        for problem in ProblemClass::ALL {
            let elements = random_elements(element, problem, n, case_seed(seed, element, problem));
            checks.push(Check {
                name: format!("cross-variant {element}/{problem}"),
                worst: cross_variant_error(&elements, element, problem)?,
                tolerance: CROSS_VARIANT_TOL,
                gating: true,
            });
            for d in KernelDescriptor::for_case(element, problem) {
                checks.push(Check {
                    name: format!("reference {d}"),
                    worst: reference_error(&elements, &d)?,
                    tolerance: REFERENCE_TOL,
                    gating: true,
                });
            }
        }
    }
    let (stiffness, mass) = analytic_errors()?;
    checks.push(Check { name: "unit tetrahedron stiffness".into(), worst: stiffness, tolerance: ANALYTIC_TOL, gating: true });
    checks.push(Check { name: "unit tetrahedron mass".into(), worst: mass, tolerance: ANALYTIC_TOL, gating: true });
    checks.push(Check {
        name: format!("twisted prism vs level-{HIGH_ORDER_LEVEL} rule"),
        worst: twisted_prism_error(seed)?,
        tolerance: HIGH_ORDER_TOL,
        gating: false,
    });
    Ok(VerifyReport { checks })
}
