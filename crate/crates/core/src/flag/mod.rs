//! Partial flags in `ℝ^d`, transversality, divergence and limit sets for `PGL(d, ℝ)`.
//!
//! A flag of type `{i_1 < … < i_k}` is stored as one orthonormal frame of
//! `i_k` columns whose first `i` columns span `V_i`. Flags are compared through
//! their projectors, so the choice of frame never matters.

mod limit;

pub(crate) use limit::q_limit_set_on;
pub use limit::{
    attracting_line, hausdorff, hausdorff_one_sided, q_divergence, q_limit_set, DivergenceCertificate, Representation,
    Verdict,
};

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Numerical thresholds of the flag and boundary checks, in one place.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Smallest singular value ratio `σ_i / σ_{i+1}` for which a flag is defined.
    pub gap: f64,
    pub nesting: f64,
    pub transverse: f64,
    /// Resolution at which limit clouds are deduplicated.
    pub dedup: f64,
    /// Invertibility: `σ_min > invertible · σ_max`.
    pub invertible: f64,
    /// Number of trailing elements a divergence verdict looks at.
    pub tail_window: usize,
    /// Distance below which a matrix counts as the identity.
    pub kernel: f64,
}

pub const TOLERANCES: Tolerances = Tolerances {
    gap: 1.0 + 1e-6,
    nesting: 1e-9,
    transverse: 1e-9,
    dedup: 1e-6,
    invertible: 1e-12,
    tail_window: 5,
    kernel: 1e-10,
};

impl Default for Tolerances {
    fn default() -> Self {
        TOLERANCES
    }
}

/// An invertible matrix up to scale: unit Frobenius norm, first nonzero entry positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveMatrix {
    m: DMatrix<f64>,
}

fn normalize(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.norm();
    if n > 0.0 {
        m /= n;
    }
    // entries below this count as zero when fixing the sign
    if let Some(&x) = m.transpose().iter().find(|x| x.abs() > 1e-12) {
        if x < 0.0 {
            m.neg_mut();
        }
    }
    m
}

impl ProjectiveMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() < 2 {
            return Err(Error::DimensionMismatch(format!("expected a square matrix of size >= 2, got {}x{}", m.nrows(), m.ncols())));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
        }
        let s = m.clone().singular_values();
        let (hi, lo) = (s[0], s[s.len() - 1]);
        if !(hi > 0.0 && lo > TOLERANCES.invertible * hi) {
            return Err(Error::InvalidParameter("matrix is not invertible".into()));
        }
        Ok(ProjectiveMatrix { m: normalize(m) })
    }

    /// From row-major entries.
    pub fn from_rows(d: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != d * d {
            return Err(Error::DimensionMismatch(format!("{} entries for a {d}x{d} matrix", entries.len())));
        }
        Self::new(DMatrix::from_row_slice(d, d, entries))
    }

    pub fn identity(d: usize) -> Self {
        ProjectiveMatrix { m: normalize(DMatrix::identity(d, d)) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// Representative with `|det| = 1`.
    pub fn unimodular(&self) -> DMatrix<f64> {
        let det = self.m.determinant().abs();
        &self.m / libm::pow(det, 1.0 / self.dim() as f64)
    }

    pub fn mul(&self, other: &Self) -> Self {
        ProjectiveMatrix { m: normalize(&self.m * &other.m) }
    }

    pub fn inverse(&self) -> Self {
        let inv = self.m.clone().try_inverse().expect("invertible by construction");
        ProjectiveMatrix { m: normalize(inv) }
    }

    pub fn pow(&self, n: i64) -> Self {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut out = Self::identity(self.dim());
        let mut sq = base;
        let mut e = n.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                out = out.mul(&sq);
            }
            sq = sq.mul(&sq);
            e >>= 1;
        }
        out
    }

    /// Singular values, largest first.
    pub fn singular_values(&self) -> Vec<f64> {
        self.m.clone().singular_values().iter().copied().collect()
    }

    /// `σ_i / σ_{i+1}` for `i = 1, …, d-1`.
    pub fn gaps(&self) -> Vec<f64> {
        gaps_of(&self.singular_values())
    }

    /// Distance in `PGL(d, ℝ)` between unimodular representatives, up to sign.
    pub fn distance(&self, other: &Self) -> f64 {
        let (a, b) = (self.unimodular(), other.unimodular());
        (&a - &b).norm().min((&a + &b).norm())
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.distance(&Self::identity(self.dim())) <= tol
    }

    /// `g · ξ`: the frame is mapped and orthonormalized again.
    pub fn apply(&self, flag: &Flag) -> Result<Flag> {
        if flag.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!("{}x{} matrix on a flag in R^{}", self.dim(), self.dim(), flag.dim())));
        }
        Flag::from_frame(flag.ty.clone(), &self.m * &flag.frame)
    }
}

fn gaps_of(s: &[f64]) -> Vec<f64> {
    s.windows(2).map(|w| if w[1] > 0.0 { w[0] / w[1] } else { f64::INFINITY }).collect()
}

/// A set of indices `{i_1 < … < i_k} ⊂ {1, …, d-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ParabolicType {
    dim: usize,
    indices: Vec<usize>,
}

impl ParabolicType {
    pub fn new(dim: usize, indices: &[usize]) -> Result<Self> {
        let mut idx = indices.to_vec();
        idx.sort_unstable();
        idx.dedup();
        if dim < 2 || idx.is_empty() || idx[0] == 0 || idx[idx.len() - 1] >= dim {
            return Err(Error::InvalidParameter(format!("indices {indices:?} are not a parabolic type in dimension {dim}")));
        }
        Ok(ParabolicType { dim, indices: idx })
    }

    /// Lines, i.e. the projective space.
    pub fn lines(dim: usize) -> Self {
        ParabolicType { dim, indices: alloc::vec![1] }
    }

    /// Full flags.
    pub fn full(dim: usize) -> Self {
        ParabolicType { dim, indices: (1..dim).collect() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn is_symmetric(&self) -> bool {
        self.indices.iter().all(|&i| self.indices.contains(&(self.dim - i)))
    }

    fn top(&self) -> usize {
        self.indices[self.indices.len() - 1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Flag {
    ty: ParabolicType,
    frame: DMatrix<f64>,
}

impl Flag {
    /// Orthonormalizes the first `top index` columns of `frame` in order.
    pub fn from_frame(ty: ParabolicType, frame: DMatrix<f64>) -> Result<Self> {
        let k = ty.top();
        if frame.nrows() != ty.dim || frame.ncols() < k {
            return Err(Error::DimensionMismatch(format!(
                "a {}x{} frame cannot carry a flag of type {:?} in R^{}",
                frame.nrows(),
                frame.ncols(),
                ty.indices,
                ty.dim
            )));
        }
        let frame = orthonormalize(frame.columns(0, k).into_owned())?;
        Ok(Flag { ty, frame })
    }

    /// From one basis per index of the type, checking `V_i ⊂ V_j` for `i < j`.
    pub fn from_subspaces(ty: ParabolicType, bases: &[DMatrix<f64>]) -> Result<Self> {
        if bases.len() != ty.indices.len() {
            return Err(Error::TypeMismatch);
        }
        let mut ortho = Vec::with_capacity(bases.len());
        for (b, &i) in bases.iter().zip(&ty.indices) {
            if b.nrows() != ty.dim || b.ncols() != i {
                return Err(Error::DimensionMismatch(format!("basis of V_{i} is {}x{}", b.nrows(), b.ncols())));
            }
            ortho.push(orthonormalize(b.clone())?);
        }
        for w in ortho.windows(2) {
            // V ⊂ W iff (I - P_W) V = 0
            let (v, wb) = (&w[0], &w[1]);
            let residual = v - wb * (wb.transpose() * v);
            if residual.norm() > TOLERANCES.nesting {
                return Err(Error::InvalidParameter("subspaces are not nested".into()));
            }
        }
        // extend the smaller bases to one frame
        let top = ortho.last().unwrap();
        let mut cols: Vec<nalgebra::DVector<f64>> = Vec::new();
        for b in &ortho {
            for c in b.column_iter() {
                cols.push(c.into_owned());
            }
        }
        let all = DMatrix::from_columns(&cols);
        let frame = greedy_frame(&all, top.ncols())?;
        Flag::from_frame(ty, frame)
    }

    /// The line through `v`.
    pub fn line(v: &[f64]) -> Result<Self> {
        let ty = ParabolicType::lines(v.len());
        Flag::from_frame(ty, DMatrix::from_column_slice(v.len(), 1, v))
    }

    /// The line at angle `theta` in `ℝP¹`.
    pub fn line_at(theta: f64) -> Self {
        Flag::line(&[libm::cos(theta), libm::sin(theta)]).expect("unit vector")
    }

    pub fn parabolic_type(&self) -> &ParabolicType {
        &self.ty
    }

    pub fn dim(&self) -> usize {
        self.ty.dim
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    /// Orthonormal basis of `V_i`.
    pub fn subspace(&self, i: usize) -> Result<DMatrix<f64>> {
        if !self.ty.indices.contains(&i) {
            return Err(Error::TypeMismatch);
        }
        Ok(self.frame.columns(0, i).into_owned())
    }

    pub fn projector(&self, i: usize) -> Result<DMatrix<f64>> {
        let b = self.subspace(i)?;
        Ok(&b * b.transpose())
    }

    /// For lines in `ℝP¹`, the angle in `[0, π)` of the line.
    pub fn angle(&self) -> Option<f64> {
        if self.ty.dim != 2 {
            return None;
        }
        Some(line_angle(self.frame[(0, 0)], self.frame[(1, 0)]))
    }
}

pub(crate) fn line_angle(x: f64, y: f64) -> f64 {
    let t = libm::atan2(y, x);
    let t = if t < 0.0 { t + core::f64::consts::PI } else { t };
    if t >= core::f64::consts::PI {
        0.0
    } else {
        t
    }
}

/// Thin QR; the first `i` columns of the result span the first `i` columns of `m`.
fn orthonormalize(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = m.ncols();
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let qr = m.qr();
    let r = qr.r();
    if (0..k).any(|i| r[(i, i)].abs() <= TOLERANCES.invertible * scale) {
        return Err(Error::InvalidParameter("basis vectors are linearly dependent".into()));
    }
    Ok(qr.q())
}

/// First `k` linearly independent columns of `m`, in order.
fn greedy_frame(m: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
    let mut kept: Vec<nalgebra::DVector<f64>> = Vec::new();
    for c in m.column_iter() {
        let mut v = c.into_owned();
        for q in &kept {
            let p = q.dot(&v);
            v -= q * p;
        }
        let n = v.norm();
        if n > 1e-8 {
            kept.push(v / n);
        }
        if kept.len() == k {
            return Ok(DMatrix::from_columns(&kept));
        }
    }
    Err(Error::InvalidParameter("subspaces have the wrong dimensions".into()))
}

/// Flag spanned by the leading left singular vectors of `g`, with all gaps `σ_i / σ_{i+1}`.
pub fn attracting_flag(g: &ProjectiveMatrix, ty: &ParabolicType) -> Result<(Flag, Vec<f64>)> {
    if g.dim() != ty.dim {
        return Err(Error::DimensionMismatch(format!("{}x{} matrix, type in R^{}", g.dim(), g.dim(), ty.dim)));
    }
    let svd = g.m.clone().svd(true, false);
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();
    let gaps = gaps_of(&s);
    for &i in &ty.indices {
        if gaps[i - 1].is_nan() || gaps[i - 1] <= TOLERANCES.gap {
            return Err(Error::GapTooSmall { index: i, gap: gaps[i - 1] });
        }
    }
    let u = svd.u.expect("left singular vectors requested");
    Ok((Flag::from_frame(ty.clone(), u)?, gaps))
}

fn same_type(a: &Flag, b: &Flag) -> Result<()> {
    if a.ty != b.ty {
        return Err(Error::TypeMismatch);
    }
    Ok(())
}

/// Whether `V_i + W_{d-i} = ℝ^d` at every index, with the margin `min σ_min[V_i | W_{d-i}]`.
pub fn is_transverse(xi: &Flag, eta: &Flag) -> Result<(bool, f64)> {
    same_type(xi, eta)?;
    let d = xi.dim();
    let mut margin = f64::INFINITY;
    for &i in &xi.ty.indices {
        if !eta.ty.indices.contains(&(d - i)) {
            return Err(Error::TypeMismatch);
        }
        let mut stacked = DMatrix::zeros(d, d);
        stacked.columns_mut(0, i).copy_from(&xi.frame.columns(0, i));
        stacked.columns_mut(i, d - i).copy_from(&eta.frame.columns(0, d - i));
        let s = stacked.singular_values();
        margin = margin.min(s[d - 1]);
    }
    Ok((margin > TOLERANCES.transverse, margin))
}

/// `max_i ‖P_i - Q_i‖₂`, the sine of the largest principal angle over the indices.
pub fn flag_distance(xi: &Flag, eta: &Flag) -> Result<f64> {
    same_type(xi, eta)?;
    if xi.dim() == 2 {
        let (a, b) = (xi.frame.column(0), eta.frame.column(0));
        return Ok((a[0] * b[1] - a[1] * b[0]).abs().min(1.0));
    }
    let mut worst: f64 = 0.0;
    for &i in &xi.ty.indices {
        // ‖(I - P_V) W‖₂ is the sine directly, without the cancellation in √(1 - cos²)
        let (v, w) = (xi.frame.columns(0, i), eta.frame.columns(0, i));
        let r = w - v * (v.transpose() * w);
        worst = worst.max(r.singular_values()[0].min(1.0));
    }
    Ok(worst)
}
