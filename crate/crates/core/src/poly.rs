//! Dense bivariate and univariate complex polynomials.

use crate::error::{Error, Result};
use crate::scalar::{abs, conj, Real, C};

/// Which variable of a [`BiPoly`] is frozen or solved for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    Z,
    W,
}

/// Relative magnitude below which a coefficient counts as zero for degree purposes.
pub(crate) fn trim_threshold<T: Real>() -> T {
    let floor = T::lit(1e-13);
    let e = T::eps() * T::lit(16.0);
    if e > floor {
        e
    } else {
        floor
    }
}

/// Bivariate polynomial `sum c[a][b] z^a w^b`, stored densely with rows indexed by the
/// power of `z`.
#[derive(Clone, Debug, PartialEq)]
pub struct BiPoly<T: Real> {
    rows: usize,
    cols: usize,
    coeffs: Vec<C<T>>,
}

impl<T: Real> BiPoly<T> {
    pub fn zero() -> Self {
        Self {
            rows: 1,
            cols: 1,
            coeffs: vec![C::new(T::zero(), T::zero())],
        }
    }

    pub fn constant(c: C<T>) -> Self {
        Self {
            rows: 1,
            cols: 1,
            coeffs: vec![c],
        }
        .trimmed()
    }

    pub fn monomial(a: usize, b: usize, c: C<T>) -> Self {
        let mut p = Self::with_shape(a + 1, b + 1);
        p.coeffs[a * (b + 1) + b] = c;
        p.trimmed()
    }

    fn with_shape(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            coeffs: vec![C::new(T::zero(), T::zero()); rows * cols],
        }
    }

    /// Builds from `rows[a][b]`, the coefficient of `z^a w^b`. Ragged rows are zero-padded.
    pub fn from_rows(rows: Vec<Vec<C<T>>>) -> Self {
        let nr = rows.len().max(1);
        let nc = rows.iter().map(Vec::len).max().unwrap_or(1).max(1);
        let mut p = Self::with_shape(nr, nc);
        for (a, row) in rows.into_iter().enumerate() {
            for (b, c) in row.into_iter().enumerate() {
                p.coeffs[a * nc + b] = c;
            }
        }
        p.trimmed()
    }

    /// Builds from `(a, b, coefficient)` triples; repeated monomials add up.
    pub fn from_terms(terms: &[(usize, usize, C<T>)]) -> Self {
        let nr = terms.iter().map(|t| t.0).max().unwrap_or(0) + 1;
        let nc = terms.iter().map(|t| t.1).max().unwrap_or(0) + 1;
        let mut p = Self::with_shape(nr, nc);
        for &(a, b, c) in terms {
            p.coeffs[a * nc + b] += c;
        }
        p.trimmed()
    }

    /// Real-coefficient convenience constructor.
    pub fn from_real_terms(terms: &[(usize, usize, f64)]) -> Self {
        let t: Vec<_> = terms
            .iter()
            .map(|&(a, b, c)| (a, b, C::new(T::lit(c), T::zero())))
            .collect();
        Self::from_terms(&t)
    }

    pub fn coeff(&self, a: usize, b: usize) -> C<T> {
        if a < self.rows && b < self.cols {
            self.coeffs[a * self.cols + b]
        } else {
            C::new(T::zero(), T::zero())
        }
    }

    pub fn deg_z(&self) -> usize {
        self.rows - 1
    }

    pub fn deg_w(&self) -> usize {
        self.cols - 1
    }

    pub fn degree(&self) -> (usize, usize) {
        (self.deg_z(), self.deg_w())
    }

    pub fn max_abs(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, c| m.max(abs(*c)))
    }

    pub fn is_zero(&self) -> bool {
        self.max_abs() == T::zero()
    }

    /// Rows of coefficients, `rows()[a][b]` for `z^a w^b`.
    pub fn rows(&self) -> Vec<Vec<C<T>>> {
        (0..self.rows)
            .map(|a| self.coeffs[a * self.cols..(a + 1) * self.cols].to_vec())
            .collect()
    }

    /// Nonzero terms `(a, b, c)`.
    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, C<T>)> + '_ {
        let cols = self.cols;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.re != T::zero() || c.im != T::zero())
            .map(move |(i, c)| (i / cols, i % cols, *c))
    }

    fn trimmed(mut self) -> Self {
        let thr = self.max_abs() * trim_threshold::<T>();
        let keep = |c: &C<T>| abs(*c) > thr;
        let mut rows = self.rows;
        while rows > 1 && !(0..self.cols).any(|b| keep(&self.coeffs[(rows - 1) * self.cols + b])) {
            rows -= 1;
        }
        let mut cols = self.cols;
        while cols > 1 && !(0..rows).any(|a| keep(&self.coeffs[a * self.cols + cols - 1])) {
            cols -= 1;
        }
        if rows != self.rows || cols != self.cols {
            let mut out = Self::with_shape(rows, cols);
            for a in 0..rows {
                for b in 0..cols {
                    out.coeffs[a * cols + b] = self.coeffs[a * self.cols + b];
                }
            }
            self = out;
        }
        self
    }

    /// Nested Horner evaluation.
    pub fn eval(&self, z: C<T>, w: C<T>) -> C<T> {
        let mut acc = C::new(T::zero(), T::zero());
        for a in (0..self.rows).rev() {
            let mut row = C::new(T::zero(), T::zero());
            for b in (0..self.cols).rev() {
                row = row * w + self.coeffs[a * self.cols + b];
            }
            acc = acc * z + row;
        }
        acc
    }

    /// Reflection `z^m w^n conj(p(1/conj z, 1/conj w))`.
    pub fn reflect(&self, m: usize, n: usize) -> Result<Self> {
        if m < self.deg_z() || n < self.deg_w() {
            return Err(Error::ReflectionDegree {
                m,
                n,
                dz: self.deg_z(),
                dw: self.deg_w(),
            });
        }
        let mut out = Self::with_shape(m + 1, n + 1);
        for (a, b, c) in self.terms() {
            out.coeffs[(m - a) * (n + 1) + (n - b)] = conj(c);
        }
        Ok(out.trimmed())
    }

    /// Reflection at the polynomial's own bidegree.
    pub fn reflect_self(&self) -> Self {
        self.reflect(self.deg_z(), self.deg_w())
            .expect("own degree is admissible")
    }

    /// Freezes one variable at `lambda`, returning a polynomial in the other.
    pub fn fiber(&self, lambda: C<T>, frozen: Var) -> UniPoly<T> {
        let coeffs = match frozen {
            Var::Z => (0..self.cols)
                .map(|b| {
                    (0..self.rows)
                        .rev()
                        .fold(C::new(T::zero(), T::zero()), |acc, a| {
                            acc * lambda + self.coeff(a, b)
                        })
                })
                .collect(),
            Var::W => (0..self.rows)
                .map(|a| {
                    (0..self.cols)
                        .rev()
                        .fold(C::new(T::zero(), T::zero()), |acc, b| {
                            acc * lambda + self.coeff(a, b)
                        })
                })
                .collect(),
        };
        UniPoly::new(coeffs)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::with_shape(self.rows + other.rows - 1, self.cols + other.cols - 1);
        for (a, b, c) in self.terms() {
            for (a2, b2, c2) in other.terms() {
                out.coeffs[(a + a2) * out.cols + b + b2] += c * c2;
            }
        }
        out.trimmed()
    }

    pub fn pow(&self, k: usize) -> Self {
        (0..k).fold(Self::constant(C::new(T::one(), T::zero())), |acc, _| {
            acc.mul(self)
        })
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            coeffs: self.coeffs.iter().map(|c| *c * s).collect(),
        }
        .trimmed()
    }

    /// `z^k w^l p`.
    pub fn shift(&self, k: usize, l: usize) -> Self {
        let mut out = Self::with_shape(self.rows + k, self.cols + l);
        for (a, b, c) in self.terms() {
            out.coeffs[(a + k) * out.cols + b + l] = c;
        }
        out.trimmed()
    }

    pub fn sub(&self, other: &Self) -> Self {
        let rows = self.rows.max(other.rows);
        let cols = self.cols.max(other.cols);
        let mut out = Self::with_shape(rows, cols);
        for a in 0..rows {
            for b in 0..cols {
                out.coeffs[a * cols + b] = self.coeff(a, b) - other.coeff(a, b);
            }
        }
        out.trimmed()
    }

    /// Swaps the roles of `z` and `w`.
    pub fn swap_vars(&self) -> Self {
        let mut out = Self::with_shape(self.cols, self.rows);
        for (a, b, c) in self.terms() {
            out.coeffs[b * out.cols + a] = c;
        }
        out.trimmed()
    }

    /// Coefficient polynomials in `z` of each power of `w`.
    pub fn w_coefficients(&self) -> Vec<UniPoly<T>> {
        (0..self.cols)
            .map(|b| UniPoly::new((0..self.rows).map(|a| self.coeff(a, b)).collect()))
            .collect()
    }

    pub fn map_scalar<U: Real>(&self) -> BiPoly<U> {
        BiPoly {
            rows: self.rows,
            cols: self.cols,
            coeffs: self
                .coeffs
                .iter()
                .map(|c| C::new(U::lit(c.re.as_f64()), U::lit(c.im.as_f64())))
                .collect(),
        }
    }
}

/// Univariate polynomial with ascending coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct UniPoly<T: Real> {
    coeffs: Vec<C<T>>,
}

impl<T: Real> UniPoly<T> {
    pub fn new(mut coeffs: Vec<C<T>>) -> Self {
        if coeffs.is_empty() {
            coeffs.push(C::new(T::zero(), T::zero()));
        }
        let thr = coeffs.iter().fold(T::zero(), |m, c| m.max(abs(*c))) * trim_threshold::<T>();
        while coeffs.len() > 1 && abs(*coeffs.last().unwrap()) <= thr {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(
            coeffs
                .iter()
                .map(|&c| C::new(T::lit(c), T::zero()))
                .collect(),
        )
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[C<T>]) -> Self {
        let mut c = vec![C::new(T::one(), T::zero())];
        for &r in roots {
            let mut next = vec![C::new(T::zero(), T::zero()); c.len() + 1];
            for (i, &ci) in c.iter().enumerate() {
                next[i + 1] += ci;
                next[i] -= ci * r;
            }
            c = next;
        }
        Self { coeffs: c }
    }

    pub fn coeffs(&self) -> &[C<T>] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && abs(self.coeffs[0]) == T::zero()
    }

    pub fn leading(&self) -> C<T> {
        *self.coeffs.last().unwrap()
    }

    pub fn eval(&self, x: C<T>) -> C<T> {
        self.coeffs
            .iter()
            .rev()
            .fold(C::new(T::zero(), T::zero()), |acc, c| acc * x + *c)
    }

    /// Value and first derivative.
    pub fn eval_with_derivative(&self, x: C<T>) -> (C<T>, C<T>) {
        let zero = C::new(T::zero(), T::zero());
        self.coeffs
            .iter()
            .rev()
            .fold((zero, zero), |(p, d), c| (p * x + *c, d * x + p))
    }

    /// Taylor coefficients of the polynomial re-expanded about `c`.
    pub fn taylor_shift(&self, c: C<T>) -> Vec<C<T>> {
        let mut a = self.coeffs.clone();
        let n = a.len();
        for i in 0..n {
            for j in (i..n - 1).rev() {
                let t = a[j + 1] * c;
                a[j] += t;
            }
        }
        a
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::new(vec![]);
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| *c * T::lit(k as f64))
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c64;

    type P = BiPoly<f64>;

    fn close(a: C<f64>, b: C<f64>, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn eval_examples() {
        let p = P::from_real_terms(&[(0, 0, 1.0), (1, 1, -0.5)]);
        assert!(close(
            p.eval(c64(1.0, 0.0), c64(1.0, 0.0)),
            c64(0.5, 0.0),
            1e-15
        ));
        let c = 0.1;
        let p = P::from_real_terms(&[(2, 1, 2.0), (1, 0, -1.0), (0, 0, c)]);
        assert!(close(
            p.eval(c64(0.1, 0.0), c64(0.0, 0.0)),
            c64(0.0, 0.0),
            1e-15
        ));
        let p = P::from_real_terms(&[(1, 0, 1.0), (0, 1, -1.0)]);
        let x = c64(0.3, 0.1);
        assert_eq!(p.eval(x, x), c64(0.0, 0.0));
    }

    #[test]
    fn reflect_examples() {
        let t = 0.3;
        let p = P::from_real_terms(&[(0, 0, 1.0), (1, 1, -t)]);
        assert_eq!(
            p.reflect(1, 1).unwrap(),
            P::from_real_terms(&[(1, 1, 1.0), (0, 0, -t)])
        );
        let one = P::from_real_terms(&[(0, 0, 1.0)]);
        assert_eq!(
            one.reflect(2, 3).unwrap(),
            P::from_real_terms(&[(2, 3, 1.0)])
        );
        let c = 0.1;
        let p = P::from_real_terms(&[(0, 0, 2.0), (1, 1, -1.0), (2, 1, c)]);
        assert_eq!(
            p.reflect(2, 1).unwrap(),
            P::from_real_terms(&[(2, 1, 2.0), (1, 0, -1.0), (0, 0, c)])
        );
    }

    #[test]
    fn reflect_rejects_small_degree() {
        let p = P::from_real_terms(&[(2, 1, 1.0)]);
        assert!(matches!(
            p.reflect(1, 1),
            Err(Error::ReflectionDegree { .. })
        ));
    }

    #[test]
    fn fiber_examples() {
        let t = 0.5;
        let p = P::from_real_terms(&[(1, 1, 1.0), (0, 0, -t)]);
        let f = p.fiber(c64(0.8, 0.0), Var::Z);
        assert!(
            close(f.coeffs()[0], c64(-t, 0.0), 1e-15) && close(f.coeffs()[1], c64(0.8, 0.0), 1e-15)
        );
        let p = P::from_real_terms(&[(2, 0, 1.0), (0, 3, -1.0)]);
        let f = p.fiber(c64(0.0, 0.0), Var::Z);
        assert_eq!(f.degree(), 3);
        assert_eq!(f.coeffs()[3], c64(-1.0, 0.0));
        assert_eq!(f.coeffs()[0], c64(0.0, 0.0));
        let p = P::from_real_terms(&[(2, 1, 2.0), (1, 0, -1.0), (0, 0, 0.1)]);
        let f = p.fiber(c64(0.25, 0.0), Var::Z);
        assert!(close(f.coeffs()[1], c64(0.125, 0.0), 1e-15));
        assert!(close(f.coeffs()[0], c64(-0.15, 0.0), 1e-15));
    }

    #[test]
    fn degrees_are_trimmed() {
        let p = P::from_real_terms(&[(0, 0, 1.0), (3, 2, 1e-20)]);
        assert_eq!(p.degree(), (0, 0));
        let q = P::from_real_terms(&[(1, 0, 1.0), (0, 1, -1.0)]).pow(3);
        assert_eq!(q.degree(), (3, 3));
        assert_eq!(q.coeff(1, 2), c64(3.0, 0.0));
    }

    #[test]
    fn taylor_shift_matches_derivatives() {
        let p = UniPoly::<f64>::from_real(&[1.0, -2.0, 0.5, 3.0]);
        let c = c64(0.3, -0.2);
        let t = p.taylor_shift(c);
        assert!(close(t[0], p.eval(c), 1e-14));
        assert!(close(t[1], p.derivative().eval(c), 1e-14));
        assert!(close(
            t[2] * 2.0,
            p.derivative().derivative().eval(c),
            1e-13
        ));
    }

    #[test]
    fn works_in_single_precision() {
        let p = BiPoly::<f32>::from_real_terms(&[(0, 0, 1.0), (1, 1, -0.5)]);
        let v = p.eval(c64(1.0, 0.0), c64(1.0, 0.0));
        assert!((v.re - 0.5).abs() < 1e-6);
    }
}
