use alloc::format;
use alloc::vec::Vec;

use core::f64::consts::PI;

use super::{attracting_flag, flag_distance, line_angle, Flag, ParabolicType, ProjectiveMatrix, TOLERANCES};
use crate::error::{Error, Result};
use crate::group::{Ball, GroupElement, GroupOracle};

/// Images of the letters of a group oracle in `PGL(d, ℝ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Representation {
    dim: usize,
    letters: Vec<ProjectiveMatrix>,
    inverses: Vec<ProjectiveMatrix>,
}

impl Representation {
    /// One matrix per letter of `oracle`, in letter order.
    pub fn new(oracle: &GroupOracle, letters: Vec<ProjectiveMatrix>) -> Result<Self> {
        if letters.len() != oracle.letters().len() {
            return Err(Error::DimensionMismatch(format!(
                "{} matrices for {} letters",
                letters.len(),
                oracle.letters().len()
            )));
        }
        let dim = letters.first().map_or(2, ProjectiveMatrix::dim);
        if letters.iter().any(|m| m.dim() != dim) {
            return Err(Error::DimensionMismatch("letter images of different sizes".into()));
        }
        let inverses = letters.iter().map(ProjectiveMatrix::inverse).collect();
        Ok(Representation { dim, letters, inverses })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn letter_matrices(&self) -> &[ProjectiveMatrix] {
        &self.letters
    }

    pub fn letter_power(&self, letter: usize, e: i64) -> ProjectiveMatrix {
        match e {
            1 => self.letters[letter].clone(),
            -1 => self.inverses[letter].clone(),
            _ => self.letters[letter].pow(e),
        }
    }

    /// Image of the `gi`-th generator of `oracle`.
    pub fn generator_image(&self, oracle: &GroupOracle, gi: usize) -> ProjectiveMatrix {
        let s = &oracle.generator_sources()[gi];
        self.letter_power(s.letter, s.sign)
    }

    /// Image of an element whose syllables are spelled by unit letters.
    pub fn image(&self, oracle: &GroupOracle, g: &GroupElement) -> Result<ProjectiveMatrix> {
        let word = oracle
            .letter_exponents(g)
            .ok_or_else(|| Error::UnsupportedKind("element has no letter spelling".into()))?;
        let mut m = ProjectiveMatrix::identity(self.dim);
        for (li, e) in word {
            m = m.mul(&self.letter_power(li, e));
        }
        Ok(m)
    }

    /// Images of every element of `ball`, built along its spanning tree.
    pub fn ball_images(&self, oracle: &GroupOracle, ball: &Ball) -> Vec<ProjectiveMatrix> {
        let gens: Vec<ProjectiveMatrix> =
            (0..oracle.generators().len()).map(|gi| self.generator_image(oracle, gi)).collect();
        let mut out: Vec<ProjectiveMatrix> = Vec::with_capacity(ball.len());
        for p in &ball.parents {
            let m = match p {
                None => ProjectiveMatrix::identity(self.dim),
                Some((q, gi)) => out[*q as usize].mul(&gens[*gi as usize]),
            };
            out.push(m);
        }
        out
    }

    fn raw2(&self, oracle: &GroupOracle) -> Vec<[f64; 4]> {
        (0..oracle.generators().len())
            .map(|gi| {
                let m = self.generator_image(oracle, gi);
                let m = m.matrix();
                [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
            })
            .collect()
    }
}

/// Angle of the attracting line of a row-major `2×2` matrix and its gap `σ_1 / σ_2`.
pub fn attracting_line(m: &[f64; 4]) -> (f64, f64) {
    let [a, b, c, d] = *m;
    let (p, q, r) = (a * a + b * b, a * c + b * d, c * c + d * d);
    let half = 0.5 * (p - r);
    let s1 = 0.5 * (p + r) + libm::sqrt(half * half + q * q);
    let det = (a * d - b * c).abs();
    let theta = 0.5 * libm::atan2(2.0 * q, p - r);
    let gap = if det > 0.0 { s1 / det } else { f64::INFINITY };
    (line_angle(libm::cos(theta), libm::sin(theta)), gap)
}

fn mul2(x: &[f64; 4], y: &[f64; 4]) -> [f64; 4] {
    let m = [
        x[0] * y[0] + x[1] * y[2],
        x[0] * y[1] + x[1] * y[3],
        x[2] * y[0] + x[3] * y[2],
        x[2] * y[1] + x[3] * y[3],
    ];
    let n = libm::sqrt(m.iter().map(|v| v * v).sum());
    [m[0] / n, m[1] / n, m[2] / n, m[3] / n]
}

/// Sorted angles with neighbours closer than `tol` in `|sin Δ|` merged, wrapping at `π`.
fn dedup_angles(mut a: Vec<f64>, tol: f64) -> Vec<f64> {
    a.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(a.len());
    for t in a {
        if out.last().is_none_or(|&l| libm::sin(t - l) > tol) {
            out.push(t);
        }
    }
    if out.len() > 1 && libm::sin(out[0] + PI - out[out.len() - 1]) <= tol {
        out.pop();
    }
    out
}

/// Attracting flags of the images of all elements of word length at most `depth`
/// whose relevant gaps pass the threshold, deduplicated.
pub fn q_limit_set(
    rep: &Representation,
    oracle: &GroupOracle,
    depth: u32,
    ty: &ParabolicType,
    cap: usize,
) -> Result<Vec<Flag>> {
    if ty.dim() != rep.dim() {
        return Err(Error::DimensionMismatch(format!("type in R^{}, representation in R^{}", ty.dim(), rep.dim())));
    }
    if depth == 0 {
        return Ok(Vec::new());
    }
    let ball = oracle.enumerate_ball(depth, cap)?;
    Ok(q_limit_set_on(rep, oracle, &ball, ty))
}

/// [`q_limit_set`] over a precomputed ball.
pub(crate) fn q_limit_set_on(rep: &Representation, oracle: &GroupOracle, ball: &Ball, ty: &ParabolicType) -> Vec<Flag> {
    if rep.dim() == 2 {
        let gens = rep.raw2(oracle);
        let mut mats: Vec<[f64; 4]> = Vec::with_capacity(ball.len());
        let mut angles = Vec::new();
        for p in &ball.parents {
            let m = match p {
                None => [1.0, 0.0, 0.0, 1.0],
                Some((q, gi)) => mul2(&mats[*q as usize], &gens[*gi as usize]),
            };
            let (theta, gap) = attracting_line(&m);
            if gap > TOLERANCES.gap {
                angles.push(theta);
            }
            mats.push(m);
        }
        return dedup_angles(angles, TOLERANCES.dedup).into_iter().map(Flag::line_at).collect();
    }
    let mut out: Vec<Flag> = Vec::new();
    for m in rep.ball_images(oracle, ball) {
        let Ok((f, _)) = attracting_flag(&m, ty) else { continue };
        if out.iter().all(|g| flag_distance(g, &f).unwrap_or(0.0) > TOLERANCES.dedup) {
            out.push(f);
        }
    }
    out
}

fn angles_of(a: &[Flag]) -> Option<Vec<f64>> {
    a.iter().map(Flag::angle).collect()
}

/// `|sin|` distance from `t` to the nearest angle of the sorted nonempty list `s`.
fn nearest_on_circle(s: &[f64], t: f64) -> f64 {
    let i = s.partition_point(|&x| x < t);
    let cands = [s[i % s.len()], s[(i + s.len() - 1) % s.len()]];
    cands.iter().map(|&x| libm::sin(t - x).abs()).fold(f64::INFINITY, f64::min)
}

/// `sup_{x ∈ a} inf_{y ∈ b} d(x, y)`; zero for empty `a`, infinite for empty `b`.
pub fn hausdorff_one_sided(a: &[Flag], b: &[Flag]) -> Result<f64> {
    if a.is_empty() {
        return Ok(0.0);
    }
    if b.is_empty() {
        return Ok(f64::INFINITY);
    }
    if let (Some(aa), Some(mut bb)) = (angles_of(a), angles_of(b)) {
        bb.sort_by(f64::total_cmp);
        return Ok(aa.iter().map(|&t| nearest_on_circle(&bb, t)).fold(0.0, f64::max));
    }
    let mut worst: f64 = 0.0;
    for x in a {
        let mut best = f64::INFINITY;
        for y in b {
            best = best.min(flag_distance(x, y)?);
        }
        worst = worst.max(best);
    }
    Ok(worst)
}

pub fn hausdorff(a: &[Flag], b: &[Flag]) -> Result<f64> {
    Ok(hausdorff_one_sided(a, b)?.max(hausdorff_one_sided(b, a)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Divergent,
    Bounded,
    Inconclusive,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Divergent => "divergent",
            Verdict::Bounded => "bounded",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceCertificate {
    /// Per element, `σ_i / σ_{i+1}` for `i = 1, …, d-1`.
    pub gaps: Vec<Vec<f64>>,
    pub verdict: Verdict,
    /// Attracting flag of the last element, for divergent sequences.
    pub limit: Option<Flag>,
    /// Attracting flag of the inverse of the last element, for symmetric types.
    pub inverse_limit: Option<Flag>,
}

/// Divergent when every relevant gap passes the threshold and strictly grows over
/// the tail window; bounded when all gaps are trivial or the tail does not exceed
/// the largest earlier gap; inconclusive otherwise.
pub fn q_divergence(seq: &[ProjectiveMatrix], ty: &ParabolicType) -> Result<DivergenceCertificate> {
    if let Some(m) = seq.iter().find(|m| m.dim() != ty.dim()) {
        return Err(Error::DimensionMismatch(format!("{}x{} matrix, type in R^{}", m.dim(), m.dim(), ty.dim())));
    }
    let gaps: Vec<Vec<f64>> = seq.iter().map(ProjectiveMatrix::gaps).collect();
    let mut cert = DivergenceCertificate { gaps, verdict: Verdict::Inconclusive, limit: None, inverse_limit: None };
    if seq.is_empty() {
        return Ok(cert);
    }
    let w = TOLERANCES.tail_window;
    let relevant = |g: &[f64]| ty.indices().iter().map(|&i| g[i - 1]).fold(f64::INFINITY, f64::min);
    let rel: Vec<f64> = cert.gaps.iter().map(|g| relevant(g)).collect();
    if rel.iter().all(|&g| g <= TOLERANCES.gap) {
        cert.verdict = Verdict::Bounded;
        return Ok(cert);
    }
    if seq.len() < w {
        return Ok(cert);
    }
    let tail = &cert.gaps[seq.len() - w..];
    let grows = ty.indices().iter().all(|&i| {
        tail.iter().all(|g| g[i - 1] > TOLERANCES.gap) && tail.windows(2).all(|p| p[1][i - 1] > p[0][i - 1])
    });
    if grows {
        cert.verdict = Verdict::Divergent;
        let last = &seq[seq.len() - 1];
        cert.limit = attracting_flag(last, ty).ok().map(|f| f.0);
        if ty.is_symmetric() {
            cert.inverse_limit = attracting_flag(&last.inverse(), ty).ok().map(|f| f.0);
        }
    } else if seq.len() > w {
        let head = rel[..seq.len() - w].iter().copied().fold(0.0, f64::max);
        if rel[seq.len() - w..].iter().all(|&g| g <= head) {
            cert.verdict = Verdict::Bounded;
        }
    }
    Ok(cert)
}
