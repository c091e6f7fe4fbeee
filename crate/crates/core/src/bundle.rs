//! Reproducing-kernel frames of `Ker S*_{z - lambda}`, their Gram matrices, and the
//! connection and curvature of the kernel bundle.
//!
//! Frames are anti-holomorphic in `lambda`. Gram matrices follow `G[i][j] = <e_i, e_j>`,
//! the connection is `Theta = dbar(G) G^{-1}` and the raw curvature is `d(Theta)`, with
//! `d = (d_x - i d_y)/2` and `dbar = (d_x + i d_y)/2`.

use nalgebra::{Cholesky, DMatrix};
use rayon::prelude::*;

use crate::assign::hungarian;
use crate::error::{Error, Result};
use crate::inner::{numerator_fiber_roots, RationalInner};
use crate::scalar::{abs, binomial, cis, conj, cpow_frac, cpowi, factorial, Real, C};
use crate::spectrum::{classify_point, VerdictKind, DEFAULT_TOL};

pub type CMat<T> = DMatrix<C<T>>;

/// `K_lambda(z) K^{(j)}_zeta(w)` with `K^{(j)}_zeta(w) = j! w^j / (1 - conj(zeta) w)^{j+1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameVector<T: Real> {
    pub lambda: C<T>,
    pub zeta: C<T>,
    pub j: usize,
}

impl<T: Real> FrameVector<T> {
    pub fn new(lambda: C<T>, zeta: C<T>, j: usize) -> Self {
        Self { lambda, zeta, j }
    }

    /// Taylor coefficient of `z^a w^b`.
    pub fn coefficient(&self, a: usize, b: usize) -> C<T> {
        if b < self.j {
            return C::new(T::zero(), T::zero());
        }
        let falling = (b - self.j + 1..=b).fold(T::one(), |acc, k| acc * T::lit(k as f64));
        cpowi(conj(self.lambda), a) * cpowi(conj(self.zeta), b - self.j) * falling
    }

    fn key(&self) -> [T; 5] {
        [
            T::lit(self.j as f64),
            self.lambda.re,
            self.lambda.im,
            self.zeta.re,
            self.zeta.im,
        ]
    }
}

/// `d_u^i d_v^j (1 - u v)^{-1}` in closed form.
fn mixed_derivative<T: Real>(i: usize, j: usize, u: C<T>, v: C<T>) -> C<T> {
    let one = C::new(T::one(), T::zero());
    let s = one / (one - u * v);
    let mut acc = C::new(T::zero(), T::zero());
    for k in 0..=i.min(j) {
        let coef = binomial::<T>(i, k) * factorial::<T>(j) / factorial::<T>(j - k)
            * factorial::<T>(j + i - k)
            / factorial::<T>(j);
        acc += cpowi(u, j - k) * cpowi(v, i - k) * cpowi(s, j + i - k + 1) * coef;
    }
    acc * factorial::<T>(j)
}

/// `<u, v>` in the Hardy space of the bidisk, linear in `u`. Exactly Hermitian.
pub fn kernel_inner_product<T: Real>(u: &FrameVector<T>, v: &FrameVector<T>) -> C<T> {
    let (ku, kv) = (u.key(), v.key());
    let swap = ku
        .iter()
        .zip(kv.iter())
        .find(|(a, b)| a != b)
        .is_some_and(|(a, b)| a > b);
    if swap {
        return conj(raw_inner(v, u));
    }
    raw_inner(u, v)
}

fn raw_inner<T: Real>(u: &FrameVector<T>, v: &FrameVector<T>) -> C<T> {
    let one = C::new(T::one(), T::zero());
    let z_part = one / (one - conj(u.lambda) * v.lambda);
    z_part * mixed_derivative(u.j, v.j, conj(u.zeta), v.zeta)
}

/// Finite linear combination of frame vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelVector<T: Real> {
    pub terms: Vec<(C<T>, FrameVector<T>)>,
}

impl<T: Real> KernelVector<T> {
    pub fn single(v: FrameVector<T>) -> Self {
        Self {
            terms: vec![(C::new(T::one(), T::zero()), v)],
        }
    }

    pub fn coefficient(&self, a: usize, b: usize) -> C<T> {
        self.terms
            .iter()
            .fold(C::new(T::zero(), T::zero()), |acc, (c, v)| {
                acc + *c * v.coefficient(a, b)
            })
    }

    pub fn scaled(&self, s: C<T>) -> Self {
        Self {
            terms: self.terms.iter().map(|(c, v)| (*c * s, *v)).collect(),
        }
    }

    /// Linear combination `sum_k coeffs[k] vectors[k]`.
    pub fn combine(vectors: &[KernelVector<T>], coeffs: &[C<T>]) -> Self {
        Self {
            terms: vectors
                .iter()
                .zip(coeffs)
                .flat_map(|(v, c)| v.terms.iter().map(move |(d, f)| (*c * *d, *f)))
                .collect(),
        }
    }
}

/// Inner product of combinations, linear in the first argument.
pub fn inner<T: Real>(u: &KernelVector<T>, v: &KernelVector<T>) -> C<T> {
    let mut acc = C::new(T::zero(), T::zero());
    for (a, x) in &u.terms {
        for (b, y) in &v.terms {
            acc += *a * conj(*b) * kernel_inner_product(x, y);
        }
    }
    acc
}

/// Ordered frame of the kernel space at `lambda`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelFrame<T: Real> {
    pub lambda: C<T>,
    pub vectors: Vec<KernelVector<T>>,
}

impl<T: Real> KernelFrame<T> {
    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    /// Frame from nodes with multiplicities: derivative towers `j = 0..mult`.
    pub fn from_nodes(lambda: C<T>, nodes: &[(C<T>, usize)]) -> Self {
        let vectors = nodes
            .iter()
            .flat_map(|&(zeta, m)| {
                (0..m).map(move |j| KernelVector::single(FrameVector::new(lambda, zeta, j)))
            })
            .collect();
        Self { lambda, vectors }
    }

    /// Frame `sum_k coeffs[(k, i)] e_k` for each column `i`.
    pub fn transform(&self, coeffs: &CMat<T>) -> Self {
        let vectors = (0..coeffs.ncols())
            .map(|i| {
                let col: Vec<C<T>> = coeffs.column(i).iter().copied().collect();
                KernelVector::combine(&self.vectors, &col)
            })
            .collect();
        Self {
            lambda: self.lambda,
            vectors,
        }
    }
}

/// Canonical frame of `Ker S*_{z - lambda}` from the numerator's fiber zeros in `D`.
pub fn kernel_frame<T: Real>(theta: &RationalInner<T>, lambda: C<T>) -> Result<KernelFrame<T>> {
    let v = classify_point(theta, lambda, T::lit(DEFAULT_TOL))?;
    if v.kind != VerdictKind::FredholmSpectrum {
        return Err(Error::NotFredholm {
            re: lambda.re.as_f64(),
            im: lambda.im.as_f64(),
        });
    }
    let roots = numerator_fiber_roots(theta, lambda)?.inside(T::one());
    Ok(KernelFrame::from_nodes(lambda, roots.roots()))
}

/// `G[i][j] = <e_i, e_j>`.
pub fn gram<T: Real>(frame: &KernelFrame<T>) -> CMat<T> {
    cross_gram(frame, frame)
}

/// `C[i][j] = <a_i, b_j>`.
pub fn cross_gram<T: Real>(a: &KernelFrame<T>, b: &KernelFrame<T>) -> CMat<T> {
    CMat::from_fn(a.rank(), b.rank(), |i, j| {
        inner(&a.vectors[i], &b.vectors[j])
    })
}

/// Orthogonal frame `e_j = w^j K_lambda(z) / (1 - conj(lambda)^m w^n)` of the kernel bundle of
/// `[z^m - w^n]^perp`, as combinations of node kernels at `lambda^{m/n} zeta^k`.
pub fn zm_wn_frame<T: Real>(m: usize, n: usize, lambda: C<T>) -> Result<KernelFrame<T>> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument("m and n must be positive".into()));
    }
    if abs(lambda) == T::zero() {
        return Err(Error::InvalidArgument(
            "frame nodes collide at lambda = 0".into(),
        ));
    }
    if abs(lambda) >= T::one() {
        return Err(Error::InvalidArgument(
            "lambda must lie in the open disk".into(),
        ));
    }
    let root = cpow_frac(lambda, m, n);
    let nt = T::lit(n as f64);
    let zeta = |k: usize| cis(T::two_pi() * T::lit(k as f64) / nt);
    let vectors = (0..n)
        .map(|j| {
            let scale = C::new(T::one(), T::zero()) / (cpowi(conj(root), j) * nt);
            let terms = (0..n)
                .map(|k| {
                    (
                        zeta(j * k % n) * scale,
                        FrameVector::new(lambda, root * zeta(k), 0),
                    )
                })
                .collect();
            KernelVector { terms }
        })
        .collect();
    Ok(KernelFrame { lambda, vectors })
}

/// Frames near an anchor point, continued analytically by matching fiber zeros to the
/// anchor's nodes.
#[derive(Clone, Debug)]
pub struct FrameField<T: Real> {
    theta: RationalInner<T>,
    anchor: C<T>,
    nodes: Vec<(C<T>, usize)>,
}

impl<T: Real> FrameField<T> {
    pub fn new(theta: &RationalInner<T>, anchor: C<T>) -> Result<Self> {
        kernel_frame(theta, anchor)?;
        let nodes = numerator_fiber_roots(theta, anchor)?
            .inside(T::one())
            .roots()
            .to_vec();
        Ok(Self {
            theta: theta.clone(),
            anchor,
            nodes,
        })
    }

    /// Field anchored at `anchor` with a prescribed node ordering.
    pub fn with_nodes(theta: &RationalInner<T>, anchor: C<T>, nodes: Vec<(C<T>, usize)>) -> Self {
        Self {
            theta: theta.clone(),
            anchor,
            nodes,
        }
    }

    pub fn nodes(&self) -> &[(C<T>, usize)] {
        &self.nodes
    }

    pub fn anchor(&self) -> C<T> {
        self.anchor
    }

    pub fn rank(&self) -> usize {
        self.nodes.iter().map(|n| n.1).sum()
    }

    pub fn theta(&self) -> &RationalInner<T> {
        &self.theta
    }

    /// Nodes at `lambda` in anchor order.
    pub fn nodes_at(&self, lambda: C<T>) -> Result<Vec<(C<T>, usize)>> {
        match_nodes(&self.theta, &self.nodes, lambda)
    }

    pub fn at(&self, lambda: C<T>) -> Result<KernelFrame<T>> {
        Ok(KernelFrame::from_nodes(lambda, &self.nodes_at(lambda)?))
    }
}

/// Fiber zeros at `lambda` matched one-to-one to `reference` by minimal total displacement.
pub fn match_nodes<T: Real>(
    theta: &RationalInner<T>,
    reference: &[(C<T>, usize)],
    lambda: C<T>,
) -> Result<Vec<(C<T>, usize)>> {
    let roots = numerator_fiber_roots(theta, lambda)?;
    let cur = roots.roots();
    if cur.len() < reference.len() {
        return Err(Error::FrameTracking(format!(
            "{} distinct nodes at reference, {} at {}",
            reference.len(),
            cur.len(),
            lambda
        )));
    }
    let cost: Vec<Vec<f64>> = reference
        .iter()
        .map(|&(a, _)| cur.iter().map(|&(b, _)| abs(a - b).as_f64()).collect())
        .collect();
    let assign = hungarian(&cost);
    let mut out = Vec::with_capacity(reference.len());
    for (k, &j) in assign.iter().enumerate() {
        let (zeta, mult) = cur[j];
        if mult != reference[k].1 || abs(zeta) >= T::one() {
            return Err(Error::FrameTracking(format!(
                "node multiplicity or location changed at {lambda}"
            )));
        }
        out.push((zeta, mult));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionSample<T: Real> {
    pub lambda: C<T>,
    /// `dbar(G) G^{-1}` in the anti-holomorphic frame.
    pub matrix: CMat<T>,
}

pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// `Theta = dbar(G) G^{-1}` by fourth-order central differences of step `h` in each real
/// coordinate.
pub fn connection_matrix<T, F>(gram_at: F, lambda: C<T>, h: T) -> Result<ConnectionSample<T>>
where
    T: Real,
    F: Fn(C<T>) -> Result<CMat<T>>,
{
    let g0 = gram_at(lambda)?;
    let ginv = g0.clone().try_inverse().ok_or(Error::SingularGram {
        re: lambda.re.as_f64(),
        im: lambda.im.as_f64(),
    })?;
    let diff = |dir: C<T>| -> Result<CMat<T>> {
        let at = |s: f64| gram_at(lambda + dir * (h * T::lit(s)));
        let (p1, m1, p2, m2) = (at(1.0)?, at(-1.0)?, at(2.0)?, at(-2.0)?);
        let c8 = C::new(T::lit(8.0), T::zero());
        let denom = C::new(T::lit(12.0) * h, T::zero());
        Ok(((p1 - m1) * c8 - (p2 - m2)) / denom)
    };
    let dx = diff(C::new(T::one(), T::zero()))?;
    let dy = diff(C::new(T::zero(), T::one()))?;
    let half = C::new(T::lit(0.5), T::zero());
    let dbar = (dx + dy * C::new(T::zero(), T::one())) * half;
    Ok(ConnectionSample {
        lambda,
        matrix: dbar * ginv,
    })
}

/// Truncated power series `sum_{a+b <= order} c_ab x^a y^b` with matrix coefficients, used
/// with `x = conj(delta)` and `y = delta`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatSeries<T: Real> {
    order: usize,
    dim: usize,
    coeffs: Vec<CMat<T>>,
}

fn sidx(a: usize, b: usize) -> usize {
    let d = a + b;
    d * (d + 1) / 2 + b
}

impl<T: Real> MatSeries<T> {
    pub fn zero(order: usize, dim: usize) -> Self {
        let len = sidx(0, order) + 1;
        Self {
            order,
            dim,
            coeffs: vec![CMat::zeros(dim, dim); len],
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, a: usize, b: usize) -> &CMat<T> {
        &self.coeffs[sidx(a, b)]
    }

    pub fn set(&mut self, a: usize, b: usize, m: CMat<T>) {
        self.coeffs[sidx(a, b)] = m;
    }

    pub fn constant(&self) -> &CMat<T> {
        self.get(0, 0)
    }

    fn terms(order: usize) -> impl Iterator<Item = (usize, usize)> {
        (0..=order).flat_map(|d| (0..=d).map(move |b| (d - b, b)))
    }

    pub fn mul(&self, o: &Self) -> Self {
        let order = self.order.min(o.order);
        let mut out = Self::zero(order, self.dim);
        for (a, b) in Self::terms(order) {
            let lhs = self.get(a, b);
            for (c, d) in Self::terms(order - a - b) {
                let k = sidx(a + c, b + d);
                out.coeffs[k] += lhs * o.get(c, d);
            }
        }
        out
    }

    pub fn add(&self, o: &Self) -> Self {
        let order = self.order.min(o.order);
        let mut out = Self::zero(order, self.dim);
        for (a, b) in Self::terms(order) {
            out.set(a, b, self.get(a, b) + o.get(a, b));
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        let order = self.order.min(o.order);
        let mut out = Self::zero(order, self.dim);
        for (a, b) in Self::terms(order) {
            out.set(a, b, self.get(a, b) - o.get(a, b));
        }
        out
    }

    /// Derivative in `x`.
    pub fn dx(&self) -> Self {
        let order = self.order.saturating_sub(1);
        let mut out = Self::zero(order, self.dim);
        if self.order == 0 {
            return out;
        }
        for (a, b) in Self::terms(order) {
            out.set(
                a,
                b,
                self.get(a + 1, b) * C::new(T::lit((a + 1) as f64), T::zero()),
            );
        }
        out
    }

    /// Derivative in `y`.
    pub fn dy(&self) -> Self {
        let order = self.order.saturating_sub(1);
        let mut out = Self::zero(order, self.dim);
        if self.order == 0 {
            return out;
        }
        for (a, b) in Self::terms(order) {
            out.set(
                a,
                b,
                self.get(a, b + 1) * C::new(T::lit((b + 1) as f64), T::zero()),
            );
        }
        out
    }

    pub fn transpose(&self) -> Self {
        Self {
            order: self.order,
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|m| m.transpose()).collect(),
        }
    }

    pub fn inverse(&self) -> Option<Self> {
        let c0inv = self.constant().clone().try_inverse()?;
        let mut y = self.clone();
        y.set(0, 0, CMat::zeros(self.dim, self.dim));
        let mut neg = Self::zero(self.order, self.dim);
        for (a, b) in Self::terms(self.order) {
            neg.set(a, b, -(&c0inv * y.get(a, b)));
        }
        let mut acc = Self::zero(self.order, self.dim);
        acc.set(0, 0, CMat::identity(self.dim, self.dim));
        let mut power = acc.clone();
        for _ in 0..self.order {
            power = power.mul(&neg);
            acc = acc.add(&power);
        }
        let mut out = Self::zero(self.order, self.dim);
        for (a, b) in Self::terms(self.order) {
            out.set(a, b, acc.get(a, b) * &c0inv);
        }
        Some(out)
    }

    pub fn commutator(&self, o: &Self) -> Self {
        self.mul(o).sub(&o.mul(self))
    }
}

/// Number of points on the sampling circle for Gram jets.
pub const JET_SAMPLES: usize = 32;

/// Taylor jet `G(lambda0 + delta) = sum c_ab conj(delta)^a delta^b` up to total degree
/// `order`, from cross-Gram matrices of frames sampled on the circle of the given radius.
pub fn gram_jet<T, F>(frame_at: F, lambda0: C<T>, radius: T, order: usize) -> Result<MatSeries<T>>
where
    T: Real,
    F: Fn(C<T>) -> Result<KernelFrame<T>> + Sync,
{
    let n = JET_SAMPLES;
    let nt = T::lit(n as f64);
    let omega = |k: usize| cis(T::two_pi() * T::lit((k % n) as f64) / nt);
    let frames: Vec<KernelFrame<T>> = (0..n)
        .into_par_iter()
        .map(|s| frame_at(lambda0 + omega(s) * radius))
        .collect::<Result<_>>()?;
    let dim = frames[0].rank();
    if frames.iter().any(|f| f.rank() != dim) {
        return Err(Error::FrameTracking(
            "frame rank changes on the sampling circle".into(),
        ));
    }
    let cross: Vec<Vec<CMat<T>>> = frames
        .par_iter()
        .map(|a| frames.iter().map(|b| cross_gram(a, b)).collect())
        .collect();
    let mut out = MatSeries::zero(order, dim);
    let norm = C::new(T::one() / (nt * nt), T::zero());
    for a in 0..=order {
        let partial: Vec<CMat<T>> = (0..n)
            .map(|t| {
                (0..n).fold(CMat::zeros(dim, dim), |acc, s| {
                    acc + &cross[s][t] * omega(a * s)
                })
            })
            .collect();
        for b in 0..=order - a {
            let sum = (0..n).fold(CMat::zeros(dim, dim), |acc, t| {
                acc + &partial[t] * conj(omega(b * t))
            });
            let scale = norm / C::new(radius.powi((a + b) as i32), T::zero());
            out.set(a, b, sum * scale);
        }
    }
    Ok(out)
}

/// Maps an endomorphism in frame coordinates with metric `h = L L^H` to the orthonormal
/// frame: `L^H M L^{-H}`.
pub fn to_orthonormal<T: Real>(l: &CMat<T>, m: &CMat<T>) -> CMat<T> {
    let lh = l.adjoint();
    let lhinv = lh
        .clone()
        .try_inverse()
        .expect("Cholesky factor is invertible");
    &lh * m * lhinv
}

/// Inverse of [`to_orthonormal`].
pub fn from_orthonormal<T: Real>(l: &CMat<T>, m: &CMat<T>) -> CMat<T> {
    let lh = l.adjoint();
    let lhinv = lh
        .clone()
        .try_inverse()
        .expect("Cholesky factor is invertible");
    lhinv * m * lh
}

/// Curvature or one of its covariant derivatives at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureSample<T: Real> {
    pub lambda: C<T>,
    /// `(i, j)`: `i` covariant derivatives in `conj(lambda)` after `j` in `lambda`.
    pub order: (usize, usize),
    /// Raw matrix in the frame's convention, transposed back to `G[i][j] = <e_i, e_j>`.
    pub raw: CMat<T>,
    /// Same endomorphism in the orthonormal frame obtained from the Cholesky factor of the
    /// metric; Hermitian for the curvature itself.
    pub orthonormal: CMat<T>,
}

/// Connection and curvature jets at a point.
#[derive(Clone, Debug)]
pub struct BundleJets<T: Real> {
    pub lambda: C<T>,
    /// Metric `h = G^T` as a series.
    pub metric: MatSeries<T>,
    /// `h^{-1} dbar(h)` as a series.
    pub connection: MatSeries<T>,
    /// Cholesky factor of `h(lambda)`.
    pub cholesky: CMat<T>,
}

pub fn bundle_jets<T, F>(
    frame_at: F,
    lambda: C<T>,
    radius: T,
    order: usize,
) -> Result<BundleJets<T>>
where
    T: Real,
    F: Fn(C<T>) -> Result<KernelFrame<T>> + Sync,
{
    let g = gram_jet(frame_at, lambda, radius, order)?;
    let h = g.transpose();
    let singular = || Error::SingularGram {
        re: lambda.re.as_f64(),
        im: lambda.im.as_f64(),
    };
    let hinv = h.inverse().ok_or_else(singular)?;
    let chol = Cholesky::new(h.constant().clone()).ok_or_else(singular)?;
    let connection = hinv.mul(&h.dx());
    Ok(BundleJets {
        lambda,
        metric: h,
        connection,
        cholesky: chol.l(),
    })
}

/// Tolerance on the anti-Hermitian part of the orthonormal curvature, relative to its size.
pub const HERMITIAN_TOL: f64 = 1e-6;

/// Curvature `d(dbar(G) G^{-1})` and covariant derivatives of total order up to
/// `max_order`, sampled from frames on a circle of the given radius around `lambda`.
pub fn curvature_samples<T, F>(
    frame_at: F,
    lambda: C<T>,
    radius: T,
    max_order: usize,
) -> Result<Vec<CurvatureSample<T>>>
where
    T: Real,
    F: Fn(C<T>) -> Result<KernelFrame<T>> + Sync,
{
    let jets = bundle_jets(frame_at, lambda, radius, max_order + 2)?;
    let theta = &jets.connection;
    let curvature = theta.dy();
    let l = &jets.cholesky;
    let k_on = to_orthonormal(l, curvature.constant());
    let size = k_on.norm();
    if size > T::zero() {
        let defect = (&k_on - k_on.adjoint()).norm() / size;
        if defect > T::lit(HERMITIAN_TOL) {
            return Err(Error::NonHermitianCurvature {
                defect: defect.as_f64(),
            });
        }
    }
    let mut out = Vec::new();
    for total in 0..=max_order {
        for i in (0..=total).rev() {
            let j = total - i;
            let mut phi = curvature.clone();
            for _ in 0..j {
                phi = phi.dy();
            }
            for _ in 0..i {
                phi = phi.dx().add(&theta.commutator(&phi));
            }
            let m = phi.constant().clone();
            out.push(CurvatureSample {
                lambda,
                order: (i, j),
                orthonormal: to_orthonormal(l, &m),
                raw: m.transpose(),
            });
        }
    }
    Ok(out)
}
