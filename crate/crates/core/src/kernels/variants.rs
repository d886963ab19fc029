//! The six loop arrangements. Each function integrates one element and
//! stores its output through a [`Sink`] at the points the algorithm stores
//! to global memory: whole element (QSS), per row (SQS), per entry (SSQ).

use super::physics::{Physics, Slots};
use super::{GeometryPath, Variant};
use crate::error::GeometryError;
use crate::geometry::{checked_inverse, element_scale, global_gradient};
use crate::refelem::RefTables;

pub(crate) trait Sink {
    fn store_a(&mut self, r: usize, s: usize, v: f64);
    fn store_b(&mut self, r: usize, v: f64);
}

pub(crate) type KernelFn<const NS: usize, const NQ: usize, P, S> = fn(
    &RefTables<NS, NQ>,
    &[[f64; 3]; NS],
    &<P as Physics>::Coeffs,
    &mut S,
) -> Result<(), GeometryError>;

pub(crate) fn select_kernel<const NS: usize, const NQ: usize, P: Physics, S: Sink>(
    variant: Variant,
    path: GeometryPath,
) -> KernelFn<NS, NQ, P, S> {
    match (variant, path) {
        (Variant::Qss, GeometryPath::GeoGeneric) => qss_generic::<NS, NQ, P, S>,
        (Variant::Qss, GeometryPath::GeoLinear) => qss_linear::<NS, NQ, P, S>,
        (Variant::Sqs, GeometryPath::GeoGeneric) => sqs_generic::<NS, NQ, P, S>,
        (Variant::Sqs, GeometryPath::GeoLinear) => sqs_linear::<NS, NQ, P, S>,
        (Variant::Ssq, GeometryPath::GeoGeneric) => ssq_generic::<NS, NQ, P, S>,
        (Variant::Ssq, GeometryPath::GeoLinear) => ssq_linear::<NS, NQ, P, S>,
    }
}

#[inline(always)]
fn slots(value: f64, g: [f64; 3]) -> Slots {
    [value, g[0], g[1], g[2]]
}

fn qss_generic<const NS: usize, const NQ: usize, P: Physics, S: Sink>(
    t: &RefTables<NS, NQ>,
    x: &[[f64; 3]; NS],
    c: &P::Coeffs,
    sink: &mut S,
) -> Result<(), GeometryError> {
    let scale = element_scale(x);
    let mut a = [[0.0; NS]; NS];
    let mut b = [0.0; NS];
    for q in 0..NQ {
        let (inv, det) = checked_inverse(x, &t.derivs[q], scale, Some(q))?;
        let vol = det * t.weights[q];
        let mut phi = [[0.0; 4]; NS];
        for s in 0..NS {
            phi[s] = slots(t.values[q][s], global_gradient(&inv, &t.derivs[q][s]));
        }
        for r in 0..NS {
            for s in 0..NS {
                a[r][s] += vol * P::stiffness(c, &phi[r], &phi[s]);
            }
            b[r] += vol * P::load(c, q, &phi[r]);
        }
    }
    for r in 0..NS {
        for s in 0..NS {
            sink.store_a(r, s, a[r][s]);
        }
    }
    for r in 0..NS {
        sink.store_b(r, b[r]);
    }
    Ok(())
}

fn qss_linear<const NS: usize, const NQ: usize, P: Physics, S: Sink>(
    t: &RefTables<NS, NQ>,
    x: &[[f64; 3]; NS],
    c: &P::Coeffs,
    sink: &mut S,
) -> Result<(), GeometryError> {
    let (inv, det) = checked_inverse(x, &t.derivs[0], element_scale(x), None)?;
    let mut grads = [[0.0; 3]; NS];
    for s in 0..NS {
        grads[s] = global_gradient(&inv, &t.derivs[0][s]);
    }
    let mut a = [[0.0; NS]; NS];
    let mut b = [0.0; NS];
    for q in 0..NQ {
        let vol = det * t.weights[q];
        let mut phi = [[0.0; 4]; NS];
        for s in 0..NS {
            phi[s] = slots(t.values[q][s], grads[s]);
        }
        for r in 0..NS {
            for s in 0..NS {
                a[r][s] += vol * P::stiffness(c, &phi[r], &phi[s]);
            }
            b[r] += vol * P::load(c, q, &phi[r]);
        }
    }
    for r in 0..NS {
        for s in 0..NS {
            sink.store_a(r, s, a[r][s]);
        }
    }
    for r in 0..NS {
        sink.store_b(r, b[r]);
    }
    Ok(())
}

fn sqs_generic<const NS: usize, const NQ: usize, P: Physics, S: Sink>(
    t: &RefTables<NS, NQ>,
    x: &[[f64; 3]; NS],
    c: &P::Coeffs,
    sink: &mut S,
) -> Result<(), GeometryError> {
    let scale = element_scale(x);
    for r in 0..NS {
        let mut row = [0.0; NS];
        let mut br = 0.0;
        for q in 0..NQ {
            let (inv, det) = checked_inverse(x, &t.derivs[q], scale, Some(q))?;
            let vol = det * t.weights[q];
            let mut phi = [[0.0; 4]; NS];
            for s in 0..NS {
                phi[s] = slots(t.values[q][s], global_gradient(&inv, &t.derivs[q][s]));
            }
            for s in 0..NS {
                row[s] += vol * P::stiffness(c, &phi[r], &phi[s]);
            }
            br += vol * P::load(c, q, &phi[r]);
        }
        for s in 0..NS {
            sink.store_a(r, s, row[s]);
        }
        sink.store_b(r, br);
    }
    Ok(())
}

fn sqs_linear<const NS: usize, const NQ: usize, P: Physics, S: Sink>(
    t: &RefTables<NS, NQ>,
    x: &[[f64; 3]; NS],
    c: &P::Coeffs,
    sink: &mut S,
) -> Result<(), GeometryError> {
    let (inv, det) = checked_inverse(x, &t.derivs[0], element_scale(x), None)?;
    let mut grads = [[0.0; 3]; NS];
    for s in 0..NS {
        grads[s] = global_gradient(&inv, &t.derivs[0][s]);
    }
    for r in 0..NS {
        let mut row = [0.0; NS];
        let mut br = 0.0;
        for q in 0..NQ {
            let vol = det * t.weights[q];
            let phi_r = slots(t.values[q][r], grads[r]);
            for s in 0..NS {
                row[s] += vol * P::stiffness(c, &phi_r, &slots(t.values[q][s], grads[s]));
            }
            br += vol * P::load(c, q, &phi_r);
        }
        for s in 0..NS {
            sink.store_a(r, s, row[s]);
        }
        sink.store_b(r, br);
    }
    Ok(())
}

fn ssq_generic<const NS: usize, const NQ: usize, P: Physics, S: Sink>(
    t: &RefTables<NS, NQ>,
    x: &[[f64; 3]; NS],
    c: &P::Coeffs,
    sink: &mut S,
) -> Result<(), GeometryError> {
    let scale = element_scale(x);
    for r in 0..NS {
        for s in 0..NS {
            let mut a = 0.0;
            let mut b = 0.0;
            for q in 0..NQ {
                let (inv, det) = checked_inverse(x, &t.derivs[q], scale, Some(q))?;
                let vol = det * t.weights[q];
                let phi_r = slots(t.values[q][r], global_gradient(&inv, &t.derivs[q][r]));
                let phi_s = slots(t.values[q][s], global_gradient(&inv, &t.derivs[q][s]));
                a += vol * P::stiffness(c, &phi_r, &phi_s);
                if r == s {
                    b += vol * P::load(c, q, &phi_r);
                }
            }
            sink.store_a(r, s, a);
            if r == s {
                sink.store_b(r, b);
            }
        }
    }
    Ok(())
}

fn ssq_linear<const NS: usize, const NQ: usize, P: Physics, S: Sink>(
    t: &RefTables<NS, NQ>,
    x: &[[f64; 3]; NS],
    c: &P::Coeffs,
    sink: &mut S,
) -> Result<(), GeometryError> {
    let (inv, det) = checked_inverse(x, &t.derivs[0], element_scale(x), None)?;
    let mut grads = [[0.0; 3]; NS];
    for s in 0..NS {
        grads[s] = global_gradient(&inv, &t.derivs[0][s]);
    }
    for r in 0..NS {
        for s in 0..NS {
            let mut a = 0.0;
            let mut b = 0.0;
            for q in 0..NQ {
                let vol = det * t.weights[q];
                let phi_r = slots(t.values[q][r], grads[r]);
                a += vol * P::stiffness(c, &phi_r, &slots(t.values[q][s], grads[s]));
                if r == s {
                    b += vol * P::load(c, q, &phi_r);
                }
            }
            sink.store_a(r, s, a);
            if r == s {
                sink.store_b(r, b);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Poisson;
    use crate::refelem::tet_tables;

    #[derive(Default)]
    struct Recorder(Vec<(char, usize, usize)>);

    impl Sink for Recorder {
        fn store_a(&mut self, r: usize, s: usize, _: f64) {
            self.0.push(('a', r, s));
        }
        fn store_b(&mut self, r: usize, _: f64) {
            self.0.push(('b', r, 0));
        }
    }

    fn stores(variant: Variant) -> Vec<(char, usize, usize)> {
        let x = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let mut rec = Recorder::default();
        let k = select_kernel::<4, 4, Poisson, Recorder>(variant, GeometryPath::GeoLinear);
        k(tet_tables(), &x, &[1.0; 6], &mut rec).unwrap();
        rec.0
    }

    #[test]
    fn store_order_follows_loop_nesting() {
        let qss = stores(Variant::Qss);
        assert_eq!(qss.len(), 20);
        assert!(qss[..16].iter().all(|s| s.0 == 'a') && qss[16..].iter().all(|s| s.0 == 'b'));

        // SQS: a row of A then its load entry
        let sqs = stores(Variant::Sqs);
        assert_eq!(sqs.len(), 20);
        assert_eq!(&sqs[..5], &[('a', 0, 0), ('a', 0, 1), ('a', 0, 2), ('a', 0, 3), ('b', 0, 0)]);

        // SSQ: every entry stored as soon as it is complete
        let ssq = stores(Variant::Ssq);
        assert_eq!(ssq.len(), 20);
        assert_eq!(&ssq[..3], &[('a', 0, 0), ('b', 0, 0), ('a', 0, 1)]);
    }
}
