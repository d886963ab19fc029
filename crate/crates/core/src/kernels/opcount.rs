//! Floating point operation counts of the kernels, as model constants.
//!
//! Totals are the per-element estimates for each (variant, element, problem)
//! cell. The phase split uses the per-evaluation costs of the three
//! preparatory phases times the number of times a variant evaluates them;
//! the remainder is attributed to the final stiffness/load update.

use super::{KernelDescriptor, ProblemClass, Variant};
use crate::refelem::ElementType;

/// Column order: tet/Poisson, prism/Poisson, tet/conv-diff, prism/conv-diff.
const TOTALS: [[u64; 4]; 3] = [
    [290, 2700, 986, 4806],
    [290, 10416, 986, 12492],
    [290, 54876, 1623, 65232],
];

const JACOBIAN_TERMS: u64 = 49;

pub(crate) fn case_index(element: ElementType, problem: ProblemClass) -> usize {
    match (element, problem) {
        (ElementType::Tetrahedron, ProblemClass::Poisson) => 0,
        (ElementType::Prism, ProblemClass::Poisson) => 1,
        (ElementType::Tetrahedron, ProblemClass::ConvDiff) => 2,
        (ElementType::Prism, ProblemClass::ConvDiff) => 3,
    }
}

pub(crate) fn variant_index(variant: Variant) -> usize {
    match variant {
        Variant::Qss => 0,
        Variant::Sqs => 1,
        Variant::Ssq => 2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseOpCounts {
    /// Real derivatives of the geometric shape functions.
    pub geo_derivs: u64,
    /// Inverse Jacobian, determinant and `vol`.
    pub jacobian_terms: u64,
    /// Global derivatives of the solution shape functions.
    pub shape_derivs: u64,
    pub final_update: u64,
    pub total: u64,
    /// How many times the three preparatory phases run per element.
    pub evaluations: u64,
}

/// Operation counts for one kernel.
pub fn phase_op_counts(desc: &KernelDescriptor) -> PhaseOpCounts {
    let total = TOTALS[variant_index(desc.variant)][case_index(desc.element, desc.problem)];
    let ns = desc.element.num_shape_functions() as u64;
    let nq = desc.element.num_quadrature_points() as u64;
    let (geo, shape, evaluations) = match desc.element {
        // constant over the element: evaluated once regardless of loop order
        ElementType::Tetrahedron => (9, 60, 1),
        ElementType::Prism => {
            let evals = match desc.variant {
                Variant::Qss => nq,
                Variant::Sqs => ns * nq,
                // symmetric entries only
                Variant::Ssq => ns * (ns + 1) / 2 * nq,
            };
            (126, 90, evals)
        }
    };
    let geo_derivs = geo * evaluations;
    let jacobian_terms = JACOBIAN_TERMS * evaluations;
    let shape_derivs = shape * evaluations;
    PhaseOpCounts {
        geo_derivs,
        jacobian_terms,
        shape_derivs,
        final_update: total - geo_derivs - jacobian_terms - shape_derivs,
        total,
        evaluations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::GeometryPath;

    fn desc(v: Variant, e: ElementType, p: ProblemClass) -> KernelDescriptor {
        KernelDescriptor::new(v, KernelDescriptor::default_path(e), p, e).unwrap()
    }

    #[test]
    fn spot_totals() {
        assert_eq!(phase_op_counts(&desc(Variant::Qss, ElementType::Tetrahedron, ProblemClass::Poisson)).total, 290);
        assert_eq!(phase_op_counts(&desc(Variant::Ssq, ElementType::Prism, ProblemClass::ConvDiff)).total, 65232);
        assert_eq!(phase_op_counts(&desc(Variant::Qss, ElementType::Prism, ProblemClass::Poisson)).total, 2700);
    }

    #[test]
    fn phases_sum_to_total() {
        for d in KernelDescriptor::all() {
            let c = phase_op_counts(&d);
            assert_eq!(c.geo_derivs + c.jacobian_terms + c.shape_derivs + c.final_update, c.total, "{d}");
        }
    }

    #[test]
    fn tet_phases_run_once() {
        let c = phase_op_counts(&desc(Variant::Sqs, ElementType::Tetrahedron, ProblemClass::ConvDiff));
        assert_eq!((c.geo_derivs, c.jacobian_terms, c.shape_derivs), (9, 49, 60));
        let g = KernelDescriptor::new(Variant::Sqs, GeometryPath::GeoGeneric, ProblemClass::ConvDiff, ElementType::Tetrahedron)
            .unwrap();
        assert_eq!(phase_op_counts(&g), c);
    }

    #[test]
    fn prism_qss_per_point() {
        let c = phase_op_counts(&desc(Variant::Qss, ElementType::Prism, ProblemClass::Poisson));
        assert_eq!(c.evaluations, 6);
        assert_eq!(c.geo_derivs, 126 * 6);
        assert_eq!(c.shape_derivs, 90 * 6);
    }
}
