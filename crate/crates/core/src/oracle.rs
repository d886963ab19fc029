//! Independent reference integrators used to check the production kernels.
//!
//! Nothing here shares code with `kernels`: Jacobians are built and inverted
//! with nalgebra, loops follow the textbook order without hoisting, and the
//! high-order rules are generated from Gauss-Legendre nodes on the fly.
//! Speed is irrelevant.

use nalgebra::{DMatrix, DVector, Matrix3};

use crate::error::{Error, Result};
use crate::geometry::{classify_determinant, element_scale, ElementGeometry};
use crate::kernels::{CoefficientSet, ElementMatrix, ProblemClass};
use crate::refelem::{reference_element, shape_at, ElementType};

const ND: usize = 3;

fn check_inputs(geom: &ElementGeometry, coeff: &CoefficientSet, element: ElementType, problem: ProblemClass) -> Result<()> {
    if geom.element != element || geom.coords.len() != element.num_vertices() {
        return Err(Error::ShapeMismatch { what: "element vertices", expected: element.num_vertices(), found: geom.coords.len() });
    }
    if coeff.problem() != problem {
        return Err(Error::ShapeMismatch {
            what: "coefficient set",
            expected: problem.coefficient_len(element),
            found: coeff.flat().len(),
        });
    }
    if let CoefficientSet::Poisson { d0 } = coeff {
        if d0.len() != element.num_quadrature_points() {
            return Err(Error::ShapeMismatch {
                what: "Poisson right-hand side",
                expected: element.num_quadrature_points(),
                found: d0.len(),
            });
        }
    }
    Ok(())
}

/// Determinant and inverse of `∂x/∂ξ` at one local point.
fn mapping(geom: &ElementGeometry, local_derivs: &[[f64; 3]], point: Option<usize>) -> Result<(f64, Matrix3<f64>)> {
    let mut j = Matrix3::zeros();
    for (x, d) in geom.coords.iter().zip(local_derivs) {
        j += nalgebra::Vector3::new(x[0], x[1], x[2]) * nalgebra::RowVector3::new(d[0], d[1], d[2]);
    }
    let det = j.determinant();
    classify_determinant(det, element_scale(&geom.coords), point)?;
    let inv = j.try_inverse().ok_or(Error::Geometry(crate::error::GeometryError::DegenerateElement { det, point }))?;
    Ok((det, inv))
}

/// `c[i][j]` and `d[i]` as full 4×4 / 4 arrays at point `q`.
fn coefficients_at(coeff: &CoefficientSet, rhs: f64) -> ([[f64; 4]; 4], [f64; 4]) {
    match coeff {
        CoefficientSet::Poisson { .. } => {
            let mut c = [[0.0; 4]; 4];
            for (i, row) in c.iter_mut().enumerate().skip(1) {
                row[i] = 1.0;
            }
            (c, [rhs, 0.0, 0.0, 0.0])
        }
        CoefficientSet::ConvDiff { c, d } => (*c, *d),
    }
}

/// Direct transcription of the generic integration loop: Jacobian terms
/// and shape data for every point, then coefficients for every point, then
/// the five nested update loops.
pub fn integrate_reference(
    geom: &ElementGeometry,
    coeff: &CoefficientSet,
    element: ElementType,
    problem: ProblemClass,
) -> Result<ElementMatrix> {
    check_inputs(geom, coeff, element, problem)?;
    let re = reference_element(element);
    let n_s = element.num_shape_functions();
    let n_q = element.num_quadrature_points();

    let mut vol = vec![0.0; n_q];
    // phi[i_d][i_s][i_q]
    let mut phi = vec![vec![vec![0.0; n_q]; n_s]; ND + 1];
    for i_q in 0..n_q {
        let (det, inv) = mapping(geom, &re.table.local_derivatives[i_q], Some(i_q))?;
        vol[i_q] = det * re.rule.weights[i_q];
        for i_s in 0..n_s {
            phi[0][i_s][i_q] = re.table.values[i_q][i_s];
            let d = &re.table.local_derivatives[i_q][i_s];
            for i in 0..ND {
                phi[i + 1][i_s][i_q] = (0..ND).map(|k| d[k] * inv[(k, i)]).sum();
            }
        }
    }

    // c[i_d][j_d][i_q], d[i_d][i_q]
    let mut c = vec![vec![vec![0.0; n_q]; ND + 1]; ND + 1];
    let mut d = vec![vec![0.0; n_q]; ND + 1];
    for i_q in 0..n_q {
        let rhs = match coeff {
            CoefficientSet::Poisson { d0 } => d0[i_q],
            CoefficientSet::ConvDiff { .. } => 0.0,
        };
        let (cq, dq) = coefficients_at(coeff, rhs);
        for i_d in 0..=ND {
            for j_d in 0..=ND {
                c[i_d][j_d][i_q] = cq[i_d][j_d];
            }
            d[i_d][i_q] = dq[i_d];
        }
    }

    let mut out = ElementMatrix::zeros(n_s);
    for i_q in 0..n_q {
        for i_s in 0..n_s {
            for j_s in 0..n_s {
                for i_d in 0..=ND {
                    for j_d in 0..=ND {
                        out.a[i_s * n_s + j_s] +=
                            vol[i_q] * c[i_d][j_d][i_q] * phi[i_d][i_s][i_q] * phi[j_d][j_s][i_q];
                    }
                }
            }
            for i_d in 0..=ND {
                out.b[i_s] += vol[i_q] * d[i_d][i_q] * phi[i_d][i_s][i_q];
            }
        }
    }
    Ok(out)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let step = pn / dp;
            z -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn gauss_unit(n: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    x.iter().zip(&w).map(|(&x, &w)| (0.5 * (x + 1.0), 0.5 * w)).collect()
}

/// Collapsed-coordinate rule on the unit triangle, exact for degree ≤ 2n−2.
fn triangle_rule(n: usize) -> Vec<([f64; 2], f64)> {
    let g = gauss_unit(n);
    let mut out = Vec::with_capacity(n * n);
    for &(u, wu) in &g {
        for &(v, wv) in &g {
            out.push(([u, v * (1.0 - u)], wu * wv * (1.0 - u)));
        }
    }
    out
}

/// Collapsed-coordinate rule on the unit tetrahedron, exact for degree ≤ 2n−3.
fn tetrahedron_rule(n: usize) -> Vec<([f64; 3], f64)> {
    let g = gauss_unit(n);
    let mut out = Vec::with_capacity(n * n * n);
    for &(u, wu) in &g {
        for &(v, wv) in &g {
            for &(w, ww) in &g {
                let p = [u, v * (1.0 - u), w * (1.0 - u) * (1.0 - v)];
                out.push((p, wu * wv * ww * (1.0 - u) * (1.0 - u) * (1.0 - v)));
            }
        }
    }
    out
}

/// Reference-element rule exact to degree ≥ 2·level. For prisms the
/// triangle factor has degree 2·level and the line factor level+1 points.
pub fn high_order_rule(element: ElementType, level: usize) -> Vec<([f64; 3], f64)> {
    match element {
        ElementType::Tetrahedron => tetrahedron_rule(level + 2),
        ElementType::Prism => {
            let (zs, wz) = gauss_legendre(level + 1);
            let tri = triangle_rule(level + 1);
            let mut out = Vec::with_capacity(tri.len() * zs.len());
            for (&z, &w) in zs.iter().zip(&wz) {
                for &([x, y], wt) in &tri {
                    out.push(([x, y, z], wt * w));
                }
            }
            out
        }
    }
}

/// Interpolant of the pointwise Poisson right-hand side in the element's own
/// basis, so it can be evaluated at any point. Returns nodal coefficients.
fn rhs_interpolant(element: ElementType, d0: &[f64]) -> Result<Vec<f64>> {
    let re = reference_element(element);
    let n = element.num_shape_functions();
    let v = DMatrix::from_fn(n, n, |q, s| re.table.values[q][s]);
    let rhs = DVector::from_column_slice(d0);
    let sol = v
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidDescriptor("quadrature points are not unisolvent".into()))?;
    Ok(sol.iter().copied().collect())
}

/// Integrate with a high-order rule (see [`high_order_rule`]). The Poisson
/// right-hand side is extended off the production quadrature points by its
/// interpolant in the element basis.
pub fn integrate_high_order(
    geom: &ElementGeometry,
    coeff: &CoefficientSet,
    element: ElementType,
    problem: ProblemClass,
    level: usize,
) -> Result<ElementMatrix> {
    check_inputs(geom, coeff, element, problem)?;
    if level == 0 {
        return Err(Error::Parse("refinement level must be at least 1".into()));
    }
    let n_s = element.num_shape_functions();
    let rhs_nodal = match coeff {
        CoefficientSet::Poisson { d0 } => Some(rhs_interpolant(element, d0)?),
        CoefficientSet::ConvDiff { .. } => None,
    };
    let mut out = ElementMatrix::zeros(n_s);
    for (xi, w) in high_order_rule(element, level) {
        let (values, local) = shape_at(element, xi)?;
        let (det, inv) = mapping(geom, &local, None)?;
        let vol = det * w;
        let phi: Vec<[f64; 4]> = values
            .iter()
            .zip(&local)
            .map(|(&v, d)| {
                let mut p = [v, 0.0, 0.0, 0.0];
                for i in 0..ND {
                    p[i + 1] = (0..ND).map(|k| d[k] * inv[(k, i)]).sum();
                }
                p
            })
            .collect();
        let rhs = rhs_nodal.as_ref().map_or(0.0, |a| a.iter().zip(&values).map(|(a, v)| a * v).sum());
        let (c, d) = coefficients_at(coeff, rhs);
        for r in 0..n_s {
            for s in 0..n_s {
                let mut acc = 0.0;
                for i in 0..=ND {
                    for j in 0..=ND {
                        acc += c[i][j] * phi[r][i] * phi[s][j];
                    }
                }
                out.a[r * n_s + s] += vol * acc;
            }
            out.b[r] += vol * (0..=ND).map(|i| d[i] * phi[r][i]).sum::<f64>();
        }
    }
    Ok(out)
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Exact `∫ λ₁ᵃ λ₂ᵇ λ₃ᶜ λ₄ᵈ` over a tetrahedron:
/// `a! b! c! d! · 3! · V / (a+b+c+d+3)!`.
pub fn simplex_exact(powers: [u32; 4], geom: &ElementGeometry) -> Result<f64> {
    if geom.element != ElementType::Tetrahedron || geom.coords.len() != 4 {
        return Err(Error::InvalidDescriptor("simplex integrals need a tetrahedron".into()));
    }
    let x = &geom.coords;
    let edge = |i: usize| nalgebra::Vector3::new(x[i][0] - x[0][0], x[i][1] - x[0][1], x[i][2] - x[0][2]);
    let volume = Matrix3::from_columns(&[edge(1), edge(2), edge(3)]).determinant().abs() / 6.0;
    let num: f64 = powers.iter().map(|&p| factorial(p)).product();
    Ok(num * 6.0 * volume / factorial(powers.iter().sum::<u32>() + 3))
}

/// `∫ φ_r φ_s` over a tetrahedron from [`simplex_exact`].
pub fn simplex_mass_matrix(geom: &ElementGeometry) -> Result<Vec<f64>> {
    let mut m = vec![0.0; 16];
    for r in 0..4 {
        for s in 0..4 {
            let mut p = [0u32; 4];
            p[r] += 1;
            p[s] += 1;
            m[r * 4 + s] = simplex_exact(p, geom)?;
        }
    }
    Ok(m)
}
