//! Finite truncations of the quotient module: the compressed shift as a matrix on the
//! orthogonal complement of a polynomial submodule inside a monomial box.

use nalgebra::DVector;

use crate::bundle::{CMat, KernelFrame};
use crate::error::{Error, Result};
use crate::inner::RationalInner;
use crate::linalg::complex_nullspace;
use crate::poly::{BiPoly, Var};
use crate::reduce::commutant;
use crate::scalar::{conj, Real, C};

/// Relative threshold separating the complement from the span of the shifts.
const COMPLEMENT_TOL: f64 = 1e-10;
pub const DEFAULT_COMMUTANT_DEGREE: usize = 14;
pub const DEFAULT_RESIDUAL_DEGREE: usize = 40;
/// Weight discrepancy tolerated between the closed formula and the matrix.
pub const WEIGHT_TOL: f64 = 1e-9;

/// Orthonormal basis of `box ⊖ span{z^s w^t p}` where the box is all `z^a w^b`,
/// `0 <= a, b <= degree`, with orthonormal monomials.
#[derive(Clone, Debug)]
pub struct TruncationBasis<T: Real> {
    pub degree: usize,
    pub poly: BiPoly<T>,
    /// `(a, b)` in lexicographic order; the position is the coordinate index.
    pub monomials: Vec<(usize, usize)>,
    /// Columns: orthonormal basis of the complement, in monomial coordinates.
    pub q: CMat<T>,
    /// Shifts `(s, t)` of `p` lying inside the box.
    pub shifts: Vec<(usize, usize)>,
}

impl<T: Real> TruncationBasis<T> {
    pub fn dim(&self) -> usize {
        self.q.ncols()
    }

    pub fn box_len(&self) -> usize {
        (self.degree + 1) * (self.degree + 1)
    }

    pub fn index(&self, a: usize, b: usize) -> usize {
        a * (self.degree + 1) + b
    }

    /// Monomial coordinates of a shifted copy `z^s w^t p`.
    pub fn shifted(&self, s: usize, t: usize) -> DVector<C<T>> {
        let mut v = DVector::zeros(self.box_len());
        for (a, b, c) in self.poly.terms() {
            v[self.index(a + s, b + t)] = c;
        }
        v
    }
}

fn admissible_shifts<T: Real>(p: &BiPoly<T>, degree: usize) -> Vec<(usize, usize)> {
    let (dz, dw) = (p.deg_z(), p.deg_w());
    (0..=degree - dz)
        .flat_map(|s| (0..=degree - dw).map(move |t| (s, t)))
        .collect()
}

pub fn quotient_basis<T: Real>(p: &BiPoly<T>, degree: usize) -> Result<TruncationBasis<T>> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    if p.deg_z() > degree || p.deg_w() > degree {
        return Err(Error::InvalidArgument(format!(
            "polynomial of bidegree ({}, {}) does not fit the box of degree {degree}",
            p.deg_z(),
            p.deg_w()
        )));
    }
    let monomials: Vec<(usize, usize)> = (0..=degree)
        .flat_map(|a| (0..=degree).map(move |b| (a, b)))
        .collect();
    let shifts = admissible_shifts(p, degree);
    let mut basis = TruncationBasis {
        degree,
        poly: p.clone(),
        monomials,
        q: CMat::zeros(0, 0),
        shifts,
    };
    let len = basis.box_len();
    let mut adj = CMat::<T>::zeros(basis.shifts.len(), len);
    for (r, &(s, t)) in basis.shifts.iter().enumerate() {
        adj.row_mut(r).copy_from(&basis.shifted(s, t).adjoint());
    }
    let cols = complex_nullspace(&adj, T::lit(COMPLEMENT_TOL));
    basis.q = if cols.is_empty() {
        CMat::zeros(len, 0)
    } else {
        CMat::from_columns(&cols)
    };
    Ok(basis)
}

/// Multiplication by `var` on the monomial box, dropping what leaves the box.
fn box_multiplication<T: Real>(degree: usize, var: Var) -> CMat<T> {
    let side = degree + 1;
    let mut m = CMat::zeros(side * side, side * side);
    for a in 0..side {
        for b in 0..side {
            let (na, nb) = match var {
                Var::Z => (a + 1, b),
                Var::W => (a, b + 1),
            };
            if na < side && nb < side {
                m[(na * side + nb, a * side + b)] = C::new(T::one(), T::zero());
            }
        }
    }
    m
}

#[derive(Clone, Debug)]
pub struct CompressedShiftMatrix<T: Real> {
    /// `Q^H M Q` in the coordinates of `basis.q`.
    pub s: CMat<T>,
    pub var: Var,
    pub basis: TruncationBasis<T>,
    /// Per basis column, the norm of the part of `var * column` pushed out of the box:
    /// the truncation's contamination.
    pub overflow: Vec<T>,
}

impl<T: Real> CompressedShiftMatrix<T> {
    pub fn norm(&self) -> T {
        if self.s.is_empty() {
            return T::zero();
        }
        self.s
            .singular_values()
            .iter()
            .fold(T::zero(), |a, &b| a.max(b))
    }
}

pub fn compress_shift<T: Real>(basis: &TruncationBasis<T>, var: Var) -> CompressedShiftMatrix<T> {
    let m = box_multiplication::<T>(basis.degree, var);
    let q = &basis.q;
    let mq = &m * q;
    let s = q.adjoint() * &mq;
    let overflow = (0..q.ncols())
        .map(|c| {
            let col = q.column(c);
            let lost: T = basis
                .monomials
                .iter()
                .enumerate()
                .filter(|(_, &(a, b))| match var {
                    Var::Z => a == basis.degree,
                    Var::W => b == basis.degree,
                })
                .map(|(k, _)| col[k].norm_sqr())
                .fold(T::zero(), |x, y| x + y);
            lost.sqrt()
        })
        .collect();
    CompressedShiftMatrix {
        s,
        var,
        basis: basis.clone(),
        overflow,
    }
}

/// Weight of the multiplicity-`n` weighted shift for `z^m - w^n` at level `N`.
pub fn weight_formula<T: Real>(m: usize, level: usize) -> T {
    let num = T::lit((level / m + 1) as f64).sqrt();
    let den = T::lit(((level + 1) / m + 1) as f64).sqrt();
    num / den
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightRow<T: Real> {
    pub level: usize,
    pub formula: T,
    pub matrix: T,
    pub diff: T,
    /// Inside the part of the box free of truncation effects.
    pub clean: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightTable<T: Real> {
    pub m: usize,
    pub n: usize,
    pub degree: usize,
    /// Side of the monomial box actually used.
    pub box_degree: usize,
    /// Number of `w^j` lying in the quotient.
    pub multiplicity: usize,
    pub rows: Vec<WeightRow<T>>,
}

/// Unit vector along `sum_k z^{N - mk} w^{nk}` in monomial coordinates, if it fits the box.
fn level_vector<T: Real>(
    basis: &TruncationBasis<T>,
    m: usize,
    n: usize,
    level: usize,
) -> Option<DVector<C<T>>> {
    let count = level / m + 1;
    if level > basis.degree || n * (count - 1) > basis.degree {
        return None;
    }
    let mut v = DVector::zeros(basis.box_len());
    let c = C::new(T::one() / T::lit(count as f64).sqrt(), T::zero());
    for k in 0..count {
        v[basis.index(level - m * k, n * k)] = c;
    }
    Some(v)
}

/// Side of the monomial box that holds every level vector up to `degree - 1` with one
/// spare row in `w`.
pub fn weight_box_degree(m: usize, n: usize, degree: usize) -> usize {
    degree.max(n * (degree.saturating_sub(1) / m) + 1)
}

/// Weights of `S_z` on the quotient by `z^m - w^n` for levels `N <= degree - 2`, from the
/// closed formula and from the truncated matrix; disagreement outside the contaminated edge
/// is an error. The box is widened in `w` by [`weight_box_degree`] so that each level fits.
pub fn weighted_shift_weights<T: Real>(
    m: usize,
    n: usize,
    degree: usize,
) -> Result<WeightTable<T>> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument("m and n must be positive".into()));
    }
    if degree < 2 {
        return Err(Error::InvalidArgument("degree must be at least 2".into()));
    }
    let p = BiPoly::from_real_terms(&[(m, 0, 1.0), (0, n, -1.0)]);
    let side = weight_box_degree(m, n, degree);
    let basis = quotient_basis(&p, side)?;
    let shift = compress_shift(&basis, Var::Z);
    let qh = basis.q.adjoint();
    let coords = |v: &DVector<C<T>>| &qh * v;
    let multiplicity = (0..=side)
        .filter(|&j| {
            let mut e = DVector::zeros(basis.box_len());
            e[basis.index(0, j)] = C::new(T::one(), T::zero());
            coords(&e).norm() > T::lit(1.0 - 1e-9)
        })
        .count();
    let mut rows = Vec::new();
    let mut level = 0;
    while level + 2 <= degree {
        let (Some(u), Some(v)) = (
            level_vector(&basis, m, n, level),
            level_vector(&basis, m, n, level + 1),
        ) else {
            break;
        };
        let (cu, cv) = (coords(&u), coords(&v));
        let matrix = cv.dotc(&(&shift.s * &cu)).re;
        let formula = weight_formula::<T>(m, level);
        let diff = (matrix - formula).abs();
        let top_w = n * ((level + 1) / m);
        let clean = level + 2 <= side && top_w < side;
        if clean && diff > T::lit(WEIGHT_TOL) {
            return Err(Error::WeightMismatch {
                n: level,
                formula: formula.as_f64(),
                matrix: matrix.as_f64(),
            });
        }
        rows.push(WeightRow {
            level,
            formula,
            matrix,
            diff,
            clean,
        });
        level += 1;
    }
    Ok(WeightTable {
        m,
        n,
        degree,
        box_degree: side,
        multiplicity,
        rows,
    })
}

/// Matrix-free projector onto `box ⊖ span{z^s w^t q}` by conjugate gradients on the normal
/// equations of the shifts.
struct SubmoduleProjector<'a, T: Real> {
    q: &'a BiPoly<T>,
    degree: usize,
    shifts_z: usize,
    shifts_w: usize,
}

impl<'a, T: Real> SubmoduleProjector<'a, T> {
    fn new(q: &'a BiPoly<T>, degree: usize) -> Self {
        Self {
            q,
            degree,
            shifts_z: degree + 1 - q.deg_z(),
            shifts_w: degree + 1 - q.deg_w(),
        }
    }

    fn side(&self) -> usize {
        self.degree + 1
    }

    /// `sum x_st z^s w^t q`.
    fn synth(&self, x: &[C<T>]) -> Vec<C<T>> {
        let side = self.side();
        let mut out = vec![C::new(T::zero(), T::zero()); side * side];
        for s in 0..self.shifts_z {
            for t in 0..self.shifts_w {
                let c = x[s * self.shifts_w + t];
                if c == C::new(T::zero(), T::zero()) {
                    continue;
                }
                for (a, b, k) in self.q.terms() {
                    out[(a + s) * side + b + t] += c * k;
                }
            }
        }
        out
    }

    /// `<v, z^s w^t q>` for every shift.
    fn analyse(&self, v: &[C<T>]) -> Vec<C<T>> {
        let side = self.side();
        let terms: Vec<(usize, usize, C<T>)> = self.q.terms().collect();
        (0..self.shifts_z * self.shifts_w)
            .map(|k| {
                let (s, t) = (k / self.shifts_w, k % self.shifts_w);
                terms
                    .iter()
                    .fold(C::new(T::zero(), T::zero()), |acc, &(a, b, c)| {
                        acc + conj(c) * v[(a + s) * side + b + t]
                    })
            })
            .collect()
    }

    fn project(&self, v: &[C<T>]) -> Vec<C<T>> {
        let dot = |a: &[C<T>], b: &[C<T>]| {
            a.iter()
                .zip(b)
                .fold(C::new(T::zero(), T::zero()), |s, (x, y)| s + conj(*x) * y)
        };
        let nrm = |a: &[C<T>]| dot(a, a).re.sqrt();
        let dim = self.shifts_z * self.shifts_w;
        let rhs = self.analyse(v);
        let scale = nrm(v).max(T::lit(f64::MIN_POSITIVE));
        let mut x = vec![C::new(T::zero(), T::zero()); dim];
        let mut r = rhs.clone();
        let mut p = r.clone();
        let mut rr = dot(&r, &r).re;
        let tol = T::lit(1e-15) * scale;
        for _ in 0..(20 * dim).max(100) {
            if rr.sqrt() <= tol {
                break;
            }
            let ap = self.analyse(&self.synth(&p));
            let alpha = rr / dot(&p, &ap).re;
            for k in 0..dim {
                x[k] += p[k] * alpha;
                r[k] -= ap[k] * alpha;
            }
            let rr_new = dot(&r, &r).re;
            let beta = rr_new / rr;
            for k in 0..dim {
                p[k] = r[k] + p[k] * beta;
            }
            rr = rr_new;
        }
        let sub = self.synth(&x);
        v.iter().zip(&sub).map(|(a, b)| *a - b).collect()
    }
}

/// Largest relative defect `|S* v - conj(lambda) v| / |v|` over a kernel frame truncated
/// to the box, with `S*` computed in the truncated quotient.
///
/// The submodule is generated by the numerator; it equals `theta H^2` whenever the
/// denominator has no zeros on the closed bidisk.
pub fn kernel_residual<T: Real>(
    theta: &RationalInner<T>,
    lambda: C<T>,
    frame: &KernelFrame<T>,
    degree: usize,
) -> T {
    let q = theta.numerator();
    let side = degree + 1;
    let proj = SubmoduleProjector::new(q, degree);
    let mut worst = T::zero();
    for v in &frame.vectors {
        let raw: Vec<C<T>> = (0..side * side)
            .map(|k| v.coefficient(k / side, k % side))
            .collect();
        let vh = proj.project(&raw);
        let norm = vh.iter().fold(T::zero(), |s, c| s + c.norm_sqr()).sqrt();
        if norm == T::zero() {
            continue;
        }
        // Backward shift in z is the adjoint of multiplication on the box.
        let back: Vec<C<T>> = (0..side * side)
            .map(|k| {
                if k / side < degree {
                    vh[k + side]
                } else {
                    C::new(T::zero(), T::zero())
                }
            })
            .collect();
        let sv = proj.project(&back);
        let lc = conj(lambda);
        let defect = sv
            .iter()
            .zip(&vh)
            .fold(T::zero(), |s, (a, b)| s + (*a - *b * lc).norm_sqr())
            .sqrt();
        worst = worst.max(defect / norm);
    }
    worst
}

/// Coordinates (columns, in `basis.q` coordinates) of the quotient vectors supported on
/// monomials of `z`-degree at most `interior`.
pub fn interior_coordinates<T: Real>(basis: &TruncationBasis<T>, interior: usize) -> CMat<T> {
    let outside: Vec<usize> = basis
        .monomials
        .iter()
        .enumerate()
        .filter(|(_, &(a, _))| a > interior)
        .map(|(k, _)| k)
        .collect();
    let q = &basis.q;
    let mut rows = CMat::<T>::zeros(outside.len().max(1), q.ncols());
    for (r, &k) in outside.iter().enumerate() {
        rows.row_mut(r).copy_from(&q.row(k));
    }
    let cols = complex_nullspace(&rows, T::lit(1e-8));
    if cols.is_empty() {
        CMat::zeros(q.ncols(), 0)
    } else {
        CMat::from_columns(&cols)
    }
}

/// Dimension of the commutant of `{S, S^H}` compressed to the quotient vectors of
/// `z`-degree at most `interior`, i.e. the truncation of `ker (S^*)^{interior + 1}`.
pub fn commutant_dim_estimate<T: Real>(
    shift: &CompressedShiftMatrix<T>,
    interior: usize,
) -> Result<usize> {
    let basis = &shift.basis;
    let total = basis.poly.terms().map(|(a, b, _)| a + b).max().unwrap_or(0);
    let top = basis.degree.saturating_sub(total + 1);
    if interior > top {
        return Err(Error::InvalidArgument(format!(
            "interior degree {interior} exceeds {top}"
        )));
    }
    let y = interior_coordinates(basis, interior);
    let r = y.ncols();
    if r == 0 {
        return Ok(0);
    }
    let s_int = y.adjoint() * &shift.s * &y;
    Ok(commutant(&[s_int.clone(), s_int.adjoint()], r).len())
}
