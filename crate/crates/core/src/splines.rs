//! One-dimensional B-spline machinery on open knot vectors.
//!
//! A [`KnotVector`] is described by its degree `p`, the strictly increasing
//! breakpoints `0 = z_0 < ... < z_{m-1} = 1` and a uniform interior
//! multiplicity `r`. The regularity of the spanned spline space is
//! `alpha = p - r` (`alpha = -1` means discontinuous at every interior
//! breakpoint).
//!
//! Evaluation is right-continuous at interior breakpoints and uses the left
//! limit at `x = 1`.

use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg;

/// Absolute tolerance for comparing knot values (all knots live in `[0, 1]`).
pub const KNOT_TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct KnotVector {
    degree: usize,
    breakpoints: Vec<f64>,
    multiplicity: usize,
    knots: Vec<f64>,
}

impl KnotVector {
    /// Builds the open knot vector of degree `degree` on `breakpoints` with
    /// every interior breakpoint repeated `multiplicity` times.
    pub fn new(degree: usize, breakpoints: &[f64], multiplicity: usize) -> Result<Self> {
        if multiplicity == 0 || multiplicity > degree + 1 {
            return Err(Error::param(
                "r",
                format!(
                    "interior multiplicity {multiplicity} must satisfy 1 <= r <= p + 1 = {}",
                    degree + 1
                ),
            ));
        }
        if breakpoints.len() < 2 {
            return Err(Error::param("Z", "at least two breakpoints are required"));
        }
        let first = breakpoints[0];
        let last = breakpoints[breakpoints.len() - 1];
        if first.abs() > KNOT_TOL || (last - 1.0).abs() > KNOT_TOL {
            return Err(Error::param(
                "Z",
                format!("breakpoints must start at 0 and end at 1, got [{first}, {last}]"),
            ));
        }
        for w in breakpoints.windows(2) {
            if !(w[1] - w[0] > KNOT_TOL) {
                return Err(Error::param(
                    "Z",
                    format!("breakpoints must be strictly increasing ({} then {})", w[0], w[1]),
                ));
            }
        }
        let mut bps = breakpoints.to_vec();
        bps[0] = 0.0;
        *bps.last_mut().unwrap() = 1.0;

        let m = bps.len();
        let mut knots = Vec::with_capacity(2 * (degree + 1) + (m - 2) * multiplicity);
        knots.extend(std::iter::repeat_n(0.0, degree + 1));
        for &z in &bps[1..m - 1] {
            knots.extend(std::iter::repeat_n(z, multiplicity));
        }
        knots.extend(std::iter::repeat_n(1.0, degree + 1));
        Ok(KnotVector {
            degree,
            breakpoints: bps,
            multiplicity,
            knots,
        })
    }

    /// Uniform breakpoints with `n_elements` elements.
    pub fn uniform(degree: usize, n_elements: usize, multiplicity: usize) -> Result<Self> {
        if n_elements == 0 {
            return Err(Error::param("n_elements", "at least one element is required"));
        }
        Self::new(degree, &uniform_breakpoints(n_elements), multiplicity)
    }

    /// Builds a knot vector from a full open knot sequence. Interior knots
    /// must all share the same multiplicity.
    pub fn from_knots(degree: usize, knots: &[f64]) -> Result<Self> {
        if knots.len() < 2 * (degree + 1) {
            return Err(Error::param("knots", "too few knots for the degree"));
        }
        let mut groups: Vec<(f64, usize)> = Vec::new();
        for &k in knots {
            match groups.last_mut() {
                Some((v, c)) if (k - *v).abs() <= KNOT_TOL => *c += 1,
                Some((v, _)) if k < *v => {
                    return Err(Error::param("knots", "knot sequence must be nondecreasing"))
                }
                _ => groups.push((k, 1)),
            }
        }
        let n = groups.len();
        if n < 2 || groups[0].1 != degree + 1 || groups[n - 1].1 != degree + 1 {
            return Err(Error::param(
                "knots",
                "knot vector must be open (end knots repeated p + 1 times)",
            ));
        }
        let r = if n > 2 { groups[1].1 } else { 1 };
        if groups[1..n - 1].iter().any(|g| g.1 != r) {
            return Err(Error::param(
                "knots",
                "interior knots must share a single multiplicity",
            ));
        }
        let bps: Vec<f64> = groups.iter().map(|g| g.0).collect();
        Self::new(degree, &bps, r)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn multiplicity(&self) -> usize {
        self.multiplicity
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Regularity `alpha = p - r`.
    pub fn regularity(&self) -> i64 {
        self.degree as i64 - self.multiplicity as i64
    }

    /// Number of basis functions, `p + 1 + (m - 2) r`.
    pub fn dim(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn n_elements(&self) -> usize {
        self.breakpoints.len() - 1
    }

    /// Element containing `x` under the right-continuity convention.
    pub fn element_of(&self, x: f64) -> usize {
        let m = self.breakpoints.len();
        let idx = self.breakpoints.partition_point(|&z| z <= x);
        idx.clamp(1, m - 1) - 1
    }

    /// Knot span index `mu` with `knots[mu] <= x < knots[mu + 1]`.
    fn span(&self, x: f64) -> usize {
        let n = self.dim();
        let idx = self.knots.partition_point(|&k| k <= x);
        idx.clamp(self.degree + 1, n) - 1
    }

    /// Elements (inclusive range) on which basis function `i` is nonzero.
    pub fn support_elements(&self, i: usize) -> (usize, usize) {
        let lo = self.knots[i];
        let hi = self.knots[i + self.degree + 1];
        let first = self.element_of(lo);
        let last = self.breakpoints.partition_point(|&z| z < hi - KNOT_TOL);
        (first, last.max(first + 1) - 1)
    }

    /// Values and derivatives up to order `nderiv` of the `p + 1` basis
    /// functions active at `x`.
    pub fn eval_basis(&self, x: f64, nderiv: usize) -> Result<BasisEvaluation> {
        if !(-KNOT_TOL..=1.0 + KNOT_TOL).contains(&x) {
            return Err(Error::Domain { value: x });
        }
        if nderiv > self.degree {
            return Err(Error::param(
                "nderiv",
                format!("requested {nderiv} derivatives of a degree {} basis", self.degree),
            ));
        }
        let x = x.clamp(0.0, 1.0);
        let span = self.span(x);
        let values = ders_basis_funs(&self.knots, self.degree, span, x, nderiv);
        Ok(BasisEvaluation {
            first_active_index: span - self.degree,
            degree: self.degree,
            nderiv,
            values,
        })
    }

    /// Evaluates `sum_i c_i B_i^{(d)}(x)`.
    pub fn eval_spline(&self, coeffs: &[f64], x: f64, d: usize) -> Result<f64> {
        assert_eq!(coeffs.len(), self.dim(), "coefficient count mismatch");
        let ev = self.eval_basis(x, d)?;
        Ok(ev
            .row(d)
            .iter()
            .enumerate()
            .map(|(k, b)| b * coeffs[ev.first_active_index + k])
            .sum())
    }

    /// Knot vector of `S^{p-1}_{alpha-1}` on the same breakpoints: the image
    /// of `d/dx`. Its dimension is one less.
    pub fn derivative_space(&self) -> Result<KnotVector> {
        if self.degree == 0 {
            return Err(Error::UnsupportedSpace(
                "cannot differentiate a degree 0 space".into(),
            ));
        }
        if self.regularity() < 0 {
            return Err(Error::UnsupportedSpace(
                "derivative of a discontinuous (alpha = -1) space is not a spline space".into(),
            ));
        }
        KnotVector::new(self.degree - 1, &self.breakpoints, self.multiplicity)
    }

    /// Matrix `D` (dim-1 x dim) with `d/dx sum c_i B_i = sum (D c)_j B_j`
    /// in [`Self::derivative_space`].
    pub fn derivative_matrix(&self) -> Result<Mat<f64>> {
        let target = self.derivative_space()?;
        let p = self.degree as f64;
        let n = self.dim();
        let t = &self.knots;
        let mut d = Mat::<f64>::zeros(n - 1, n);
        for j in 0..n - 1 {
            let len = t[j + self.degree + 1] - t[j + 1];
            let a = p / len;
            d.write(j, j + 1, a);
            d.write(j, j, -a);
        }
        debug_assert_eq!(target.dim(), n - 1);
        Ok(d)
    }

    /// Refines by inserting new breakpoints, each with the current interior
    /// multiplicity. The original space is a subspace of the result.
    pub fn insert_knots(&self, new_breakpoints: &[f64]) -> Result<KnotVector> {
        let merged = merge_breakpoints(&self.breakpoints, new_breakpoints)?;
        KnotVector::new(self.degree, &merged, self.multiplicity)
    }

    /// Inserts breakpoints and returns the refined knot vector together with
    /// the subdivision matrix `T` (n_fine x n_coarse): fine coefficients are
    /// `T * coarse`. Built by repeated single-knot (Boehm) insertion.
    pub fn insert_knots_with_matrix(
        &self,
        new_breakpoints: &[f64],
    ) -> Result<(KnotVector, Mat<f64>)> {
        let refined = self.insert_knots(new_breakpoints)?;
        let p = self.degree;
        let mut knots = self.knots.clone();
        let n0 = self.dim();
        let mut t = Mat::<f64>::identity(n0, n0);
        let mut sorted: Vec<f64> = new_breakpoints.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for &x in &sorted {
            for _ in 0..self.multiplicity {
                let n = t.nrows();
                let k = knots.partition_point(|&u| u <= x) - 1;
                let mut next = Mat::<f64>::zeros(n + 1, t.ncols());
                for i in 0..=n {
                    for c in 0..t.ncols() {
                        let v = if i + p <= k {
                            t.read(i, c)
                        } else if i > k {
                            t.read(i - 1, c)
                        } else {
                            let a = (x - knots[i]) / (knots[i + p] - knots[i]);
                            a * t.read(i, c) + (1.0 - a) * t.read(i - 1, c)
                        };
                        next.write(i, c, v);
                    }
                }
                knots.insert(k + 1, x);
                t = next;
            }
        }
        debug_assert_eq!(t.nrows(), refined.dim());
        Ok((refined, t))
    }

    /// Raises the degree to `target_p` on the same breakpoints while keeping
    /// the regularity `alpha`, so every spline of `self` is represented
    /// exactly in the result.
    pub fn degree_elevate(&self, target_p: usize) -> Result<KnotVector> {
        if target_p < self.degree {
            return Err(Error::param(
                "target_p",
                format!("target degree {target_p} is below current degree {}", self.degree),
            ));
        }
        let r = self.multiplicity + (target_p - self.degree);
        KnotVector::new(target_p, &self.breakpoints, r)
    }

    /// Sets the interior multiplicity (knot repetition). Lowering `r` gives
    /// a space that no longer contains the original one.
    pub fn with_multiplicity(&self, r: usize) -> Result<KnotVector> {
        KnotVector::new(self.degree, &self.breakpoints, r)
    }

    /// Whether `self` is a subspace of `other`.
    pub fn is_subspace_of(&self, other: &KnotVector) -> bool {
        if other.degree < self.degree {
            return false;
        }
        let other_alpha = other.regularity();
        let self_alpha = self.regularity();
        // Every breakpoint of self must be one of other, with no higher continuity there.
        self.breakpoints[1..self.breakpoints.len() - 1].iter().all(|z| {
            other
                .breakpoints
                .iter()
                .any(|y| (y - z).abs() <= KNOT_TOL)
                && other_alpha <= self_alpha
        })
    }

    /// `(p + 1)` Gauss points per element, mapped to each element.
    pub fn element_samples(&self, per_element: usize) -> Vec<f64> {
        let (xs, _) = crate::assembly::gauss_rule(per_element).expect("valid rule size");
        let mut out = Vec::with_capacity(per_element * self.n_elements());
        for e in self.breakpoints.windows(2) {
            for &g in &xs {
                out.push(e[0] + (e[1] - e[0]) * g);
            }
        }
        out
    }

    /// Collocation matrix `A[s][i] = B_i^{(d)}(samples[s])`.
    pub fn collocation_matrix(&self, samples: &[f64], d: usize) -> Result<Mat<f64>> {
        let mut a = Mat::<f64>::zeros(samples.len(), self.dim());
        for (s, &x) in samples.iter().enumerate() {
            let ev = self.eval_basis(x, d)?;
            for (k, v) in ev.row(d).iter().enumerate() {
                a.write(s, ev.first_active_index + k, *v);
            }
        }
        Ok(a)
    }

    /// Least-squares transfer matrix `T` (n_fine x n_coarse) expressing
    /// coarse basis functions in the `fine` space. Exact when `self` is a
    /// subspace of `fine`.
    pub fn transfer_matrix(&self, fine: &KnotVector) -> Result<Mat<f64>> {
        if !self.is_subspace_of(fine) {
            return Err(Error::Refinement(
                "target space does not contain the source space".into(),
            ));
        }
        let samples = fine.element_samples(fine.degree + 2);
        let a = fine.collocation_matrix(&samples, 0)?;
        let b = self.collocation_matrix(&samples, 0)?;
        Ok(linalg::lstsq(&a, &b))
    }
}

/// Values (and derivatives) of the basis functions active at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisEvaluation {
    pub first_active_index: usize,
    degree: usize,
    nderiv: usize,
    values: Vec<f64>,
}

impl BasisEvaluation {
    /// Row `d`: the `d`-th derivatives of the `p + 1` active functions.
    pub fn row(&self, d: usize) -> &[f64] {
        assert!(d <= self.nderiv);
        let w = self.degree + 1;
        &self.values[d * w..(d + 1) * w]
    }

    pub fn value(&self, d: usize, k: usize) -> f64 {
        self.row(d)[k]
    }

    pub fn n_active(&self) -> usize {
        self.degree + 1
    }

    pub fn nderiv(&self) -> usize {
        self.nderiv
    }
}

pub fn uniform_breakpoints(n_elements: usize) -> Vec<f64> {
    (0..=n_elements)
        .map(|i| i as f64 / n_elements as f64)
        .collect()
}

/// Union of two breakpoint sets. New points must lie strictly inside
/// `(0, 1)` and differ from the existing ones.
pub fn merge_breakpoints(existing: &[f64], new: &[f64]) -> Result<Vec<f64>> {
    let mut out = existing.to_vec();
    for &x in new {
        if !(x > KNOT_TOL && x < 1.0 - KNOT_TOL) {
            return Err(Error::Refinement(format!(
                "new breakpoint {x} must lie strictly inside (0, 1)"
            )));
        }
        if out.iter().any(|&z| (z - x).abs() <= KNOT_TOL) {
            return Err(Error::Refinement(format!("breakpoint {x} is already present")));
        }
        out.push(x);
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(out)
}

/// Union of two breakpoint sets, tolerating common points.
pub fn union_breakpoints(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    out.sort_by(|x, y| x.partial_cmp(y).unwrap());
    out.dedup_by(|x, y| (*x - *y).abs() <= 1e-12);
    out
}

/// Midpoint subdivision of every element, repeated `times` times.
pub fn bisect_breakpoints(breakpoints: &[f64], times: usize) -> Vec<f64> {
    let mut out = breakpoints.to_vec();
    for _ in 0..times {
        let mut next = Vec::with_capacity(2 * out.len());
        for w in out.windows(2) {
            next.push(w[0]);
            next.push(0.5 * (w[0] + w[1]));
        }
        next.push(*out.last().unwrap());
        out = next;
    }
    out
}

/// Active-span Cox-de Boor recursion with derivatives. Returns a flat
/// `(nderiv + 1) x (p + 1)` table.
fn ders_basis_funs(knots: &[f64], p: usize, span: usize, x: f64, nderiv: usize) -> Vec<f64> {
    let w = p + 1;
    let mut ndu = vec![0.0; w * w];
    let mut left = vec![0.0; w];
    let mut right = vec![0.0; w];
    ndu[0] = 1.0;
    for j in 1..=p {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            // lower triangle holds knot differences
            ndu[j * w + r] = right[r + 1] + left[j - r];
            let temp = ndu[r * w + j - 1] / ndu[j * w + r];
            ndu[r * w + j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j * w + j] = saved;
    }

    let mut ders = vec![0.0; (nderiv + 1) * w];
    for j in 0..=p {
        ders[j] = ndu[j * w + p];
    }
    let mut a = vec![0.0; 2 * w];
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        a.iter_mut().for_each(|v| *v = 0.0);
        a[0] = 1.0;
        for k in 1..=nderiv {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p as isize - k as isize;
            if r >= k {
                let rk = rk as usize;
                let pk = pk as usize;
                a[s2 * w] = a[s1 * w] / ndu[(pk + 1) * w + rk];
                d = a[s2 * w] * ndu[rk * w + pk];
            }
            let j1: isize = if rk >= -1 { 1 } else { -rk };
            let j2: isize = if r as isize - 1 <= pk {
                k as isize - 1
            } else {
                p as isize - r as isize
            };
            let mut j = j1;
            while j <= j2 {
                let ju = j as usize;
                let idx = (rk + j) as usize;
                let pk1 = (pk + 1) as usize;
                a[s2 * w + ju] = (a[s1 * w + ju] - a[s1 * w + ju - 1]) / ndu[pk1 * w + idx];
                d += a[s2 * w + ju] * ndu[idx * w + pk as usize];
                j += 1;
            }
            if r as isize <= pk {
                let pk1 = (pk + 1) as usize;
                a[s2 * w + k] = -a[s1 * w + k - 1] / ndu[pk1 * w + r];
                d += a[s2 * w + k] * ndu[r * w + pk as usize];
            }
            ders[k * w + r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut fac = p as f64;
    for k in 1..=nderiv {
        for j in 0..=p {
            ders[k * w + j] *= fac;
        }
        fac *= (p - k) as f64;
    }
    ders
}
