//! Jacobian terms of the reference-to-physical element map.

use crate::error::{Error, GeometryError, Result};
use crate::refelem::{ElementType, ReferenceElement};

pub type Mat3 = [[f64; 3]; 3];

/// Relative degeneracy threshold, applied to `det J / scale³`.
pub const DEGENERACY_TOL: f64 = 1e-14;

/// Vertex coordinates of one physical element.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementGeometry {
    pub element: ElementType,
    pub coords: Vec<[f64; 3]>,
}

impl ElementGeometry {
    pub fn new(element: ElementType, coords: Vec<[f64; 3]>) -> Result<Self> {
        if coords.len() != element.num_vertices() {
            return Err(Error::ShapeMismatch {
                what: "element vertices",
                expected: element.num_vertices(),
                found: coords.len(),
            });
        }
        Ok(ElementGeometry { element, coords })
    }

    /// Build from `x0 y0 z0 x1 y1 z1 ...`.
    pub fn from_flat(element: ElementType, flat: &[f64]) -> Result<Self> {
        if flat.len() != element.geometry_len() {
            return Err(Error::ShapeMismatch {
                what: "geometry data",
                expected: element.geometry_len(),
                found: flat.len(),
            });
        }
        let coords = flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Ok(ElementGeometry { element, coords })
    }

    /// The element whose vertices are the reference vertices.
    pub fn reference(element: ElementType) -> Self {
        ElementGeometry { element, coords: element.reference_vertices().to_vec() }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.coords.iter().flatten().copied().collect()
    }

    pub fn map(&self, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        ElementGeometry { element: self.element, coords: self.coords.iter().map(|&c| f(c)).collect() }
    }

    pub fn scale(&self) -> f64 {
        element_scale(&self.coords)
    }
}

/// Bounding-box diagonal of a vertex set.
pub fn element_scale(coords: &[[f64; 3]]) -> f64 {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for c in coords {
        for i in 0..3 {
            lo[i] = lo[i].min(c[i]);
            hi[i] = hi[i].max(c[i]);
        }
    }
    ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2) + (hi[2] - lo[2]).powi(2)).sqrt()
}

/// Jacobian terms at one point. `vol` is `det_j` times the point's weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianData {
    pub dx_dxi: Mat3,
    pub dxi_dx: Mat3,
    pub det_j: f64,
    pub vol: f64,
}

/// `dx_dxi[i][k] = Σ_v x_v[i] ∂φ̂_v/∂ξ_k`
#[inline(always)]
pub(crate) fn jacobian_matrix(coords: &[[f64; 3]], dloc: &[[f64; 3]]) -> Mat3 {
    let mut m = [[0.0; 3]; 3];
    for (x, d) in coords.iter().zip(dloc) {
        for i in 0..3 {
            for k in 0..3 {
                m[i][k] += x[i] * d[k];
            }
        }
    }
    m
}

/// Closed-form cofactor inverse. Returns `(inverse, det)`; the inverse is
/// meaningless when `det` is zero, callers classify first.
#[inline(always)]
pub(crate) fn invert(m: &Mat3) -> (Mat3, f64) {
    let c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    let c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
    let c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
    let det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
    let r = 1.0 / det;
    let inv = [
        [c00 * r, (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * r, (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * r],
        [c01 * r, (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * r, (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * r],
        [c02 * r, (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * r, (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * r],
    ];
    (inv, det)
}

/// Reject degenerate and inverted mappings. `scale` is the element's
/// bounding-box diagonal.
#[inline]
pub fn classify_determinant(det: f64, scale: f64, point: Option<usize>) -> Result<(), GeometryError> {
    if !det.is_finite() || det.abs() <= DEGENERACY_TOL * scale * scale * scale {
        Err(GeometryError::DegenerateElement { det, point })
    } else if det < 0.0 {
        Err(GeometryError::InvertedElement { det, point })
    } else {
        Ok(())
    }
}

/// Inverse Jacobian and determinant, checked. Kernel entry point.
#[inline(always)]
pub(crate) fn checked_inverse(
    coords: &[[f64; 3]],
    dloc: &[[f64; 3]],
    scale: f64,
    point: Option<usize>,
) -> Result<(Mat3, f64), GeometryError> {
    let (inv, det) = invert(&jacobian_matrix(coords, dloc));
    classify_determinant(det, scale, point)?;
    Ok((inv, det))
}

/// `∂φ/∂x_i = Σ_k ∂φ̂/∂ξ_k ∂ξ_k/∂x_i`
#[inline(always)]
pub(crate) fn global_gradient(dxi_dx: &Mat3, d: &[f64; 3]) -> [f64; 3] {
    let mut g = [0.0; 3];
    for (i, gi) in g.iter_mut().enumerate() {
        *gi = d[0] * dxi_dx[0][i] + d[1] * dxi_dx[1][i] + d[2] * dxi_dx[2][i];
    }
    g
}

fn jacobian_data(coords: &[[f64; 3]], dloc: &[[f64; 3]], weight: f64, point: Option<usize>) -> Result<JacobianData> {
    let dx_dxi = jacobian_matrix(coords, dloc);
    let (dxi_dx, det_j) = invert(&dx_dxi);
    classify_determinant(det_j, element_scale(coords), point)?;
    Ok(JacobianData { dx_dxi, dxi_dx, det_j, vol: det_j * weight })
}

/// Element-constant Jacobian of an affine tetrahedron. All tetrahedron
/// quadrature weights are equal, so `vol` holds for every point.
pub fn jacobian_affine(geom: &ElementGeometry) -> Result<JacobianData> {
    if geom.element != ElementType::Tetrahedron {
        return Err(Error::InvalidDescriptor("affine Jacobian requires a tetrahedron".into()));
    }
    let re = crate::refelem::reference_element(ElementType::Tetrahedron);
    check_vertices(geom)?;
    jacobian_data(&geom.coords, &re.table.local_derivatives[0], re.rule.weights[0], None)
}

/// Jacobian terms at quadrature point `q` of `reference`.
pub fn jacobian_at_point(geom: &ElementGeometry, q: usize, reference: &ReferenceElement) -> Result<JacobianData> {
    if geom.element != reference.element {
        return Err(Error::InvalidDescriptor(format!(
            "geometry is a {} but reference element is a {}",
            geom.element, reference.element
        )));
    }
    check_vertices(geom)?;
    let nq = reference.num_quadrature_points();
    if q >= nq {
        return Err(Error::IndexOutOfRange { index: q, len: nq });
    }
    jacobian_data(&geom.coords, &reference.table.local_derivatives[q], reference.rule.weights[q], Some(q))
}

fn check_vertices(geom: &ElementGeometry) -> Result<()> {
    if geom.coords.len() != geom.element.num_vertices() {
        return Err(Error::ShapeMismatch {
            what: "element vertices",
            expected: geom.element.num_vertices(),
            found: geom.coords.len(),
        });
    }
    Ok(())
}

/// Chain rule applied to every row of `local_derivs`.
pub fn global_derivatives(jac: &JacobianData, local_derivs: &[[f64; 3]]) -> Vec<[f64; 3]> {
    local_derivs.iter().map(|d| global_gradient(&jac.dxi_dx, d)).collect()
}
