//! Problem-specific final updates. Each kernel is monomorphized over one of
//! these, so the Poisson kernels never touch a diffusion tensor.

use super::ProblemClass;
use crate::refelem::MAX_QUAD;

/// Per-point shape data: `[φ, ∂φ/∂x, ∂φ/∂y, ∂φ/∂z]`.
pub(crate) type Slots = [f64; 4];

pub(crate) trait Physics {
    const CLASS: ProblemClass;
    type Coeffs: Copy;

    /// Local copy from the element's flat coefficient data.
    fn from_slice(flat: &[f64]) -> Self::Coeffs;

    /// `Σ_{i,j} c[i][j] φ_r[i] φ_s[j]`
    fn stiffness(c: &Self::Coeffs, r: &Slots, s: &Slots) -> f64;

    /// `Σ_i d[i](q) φ_r[i]`
    fn load(c: &Self::Coeffs, q: usize, r: &Slots) -> f64;
}

pub(crate) struct Poisson;

impl Physics for Poisson {
    const CLASS: ProblemClass = ProblemClass::Poisson;
    type Coeffs = [f64; MAX_QUAD];

    #[inline(always)]
    fn from_slice(flat: &[f64]) -> Self::Coeffs {
        let mut d0 = [0.0; MAX_QUAD];
        d0[..flat.len()].copy_from_slice(flat);
        d0
    }

    #[inline(always)]
    fn stiffness(_: &Self::Coeffs, r: &Slots, s: &Slots) -> f64 {
        r[1] * s[1] + r[2] * s[2] + r[3] * s[3]
    }

    #[inline(always)]
    fn load(c: &Self::Coeffs, q: usize, r: &Slots) -> f64 {
        c[q] * r[0]
    }
}

pub(crate) struct ConvDiff;

#[derive(Debug, Clone, Copy)]
pub(crate) struct ConvDiffCoeffs {
    c: [[f64; 4]; 4],
    d: [f64; 4],
}

impl Physics for ConvDiff {
    const CLASS: ProblemClass = ProblemClass::ConvDiff;
    type Coeffs = ConvDiffCoeffs;

    #[inline(always)]
    fn from_slice(flat: &[f64]) -> Self::Coeffs {
        let mut k = ConvDiffCoeffs { c: [[0.0; 4]; 4], d: [0.0; 4] };
        for i in 0..4 {
            k.c[i].copy_from_slice(&flat[4 * i..4 * i + 4]);
        }
        k.d.copy_from_slice(&flat[16..20]);
        k
    }

    #[inline(always)]
    fn stiffness(k: &Self::Coeffs, r: &Slots, s: &Slots) -> f64 {
        let mut acc = 0.0;
        for i in 0..4 {
            acc += r[i] * (k.c[i][0] * s[0] + k.c[i][1] * s[1] + k.c[i][2] * s[2] + k.c[i][3] * s[3]);
        }
        acc
    }

    #[inline(always)]
    fn load(k: &Self::Coeffs, _q: usize, r: &Slots) -> f64 {
        k.d[0] * r[0] + k.d[1] * r[1] + k.d[2] * r[2] + k.d[3] * r[3]
    }
}
