//! Reducibility of the compressed shift: block structure of the curvature algebra on each
//! Fredholm component and strict reducibility across components.

use std::collections::VecDeque;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bundle::{
    cross_gram, curvature_samples, from_orthonormal, gram, match_nodes, CMat, FrameField,
    KernelFrame, KernelVector,
};
use crate::error::{Error, Result};
use crate::inner::{numerator_fiber_roots, RationalInner};
use crate::linalg::{
    complex_nullspace, hermitian_eigen, range_basis, rank, real_nullspace, unvectorize, vectorize,
};
use crate::scalar::{abs, cis, conj, Real, C};
use crate::spectrum::FredholmRegionMap;

/// Relative singular-value threshold for algebra and commutant dimensions.
pub const RANK_TOL: f64 = 1e-8;
/// Modulus below which normalized cross inner products count as zero.
pub const ORTHO_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ORDER: usize = 2;
pub const DEFAULT_PRODUCT_LENGTH: usize = 3;
/// Sample points per component for sub-bundle orthogonality checks.
pub const DEFAULT_ORTHO_SAMPLES: usize = 25;
/// Random draws of a global commutant element when searching for a witness.
pub const WITNESS_DRAWS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Irreducible,
    Reducible,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Irreducible => "irreducible",
            Verdict::Reducible => "reducible",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReduceOptions {
    pub max_order: usize,
    pub product_length: usize,
    pub seed: u64,
    /// Points per component for resampling votes.
    pub samples_per_component: usize,
    /// Points per component for the sub-bundle orthogonality check.
    pub ortho_samples: usize,
}

impl Default for ReduceOptions {
    fn default() -> Self {
        Self {
            max_order: DEFAULT_MAX_ORDER,
            product_length: DEFAULT_PRODUCT_LENGTH,
            seed: 0,
            samples_per_component: 3,
            ortho_samples: DEFAULT_ORTHO_SAMPLES,
        }
    }
}

/// Self-adjoint matrix algebra generated by the curvature and its covariant derivatives.
#[derive(Clone, Debug)]
pub struct MatrixAlgebraBasis<T: Real> {
    pub lambda: C<T>,
    /// Normalized generators in the orthonormal frame.
    pub generators: Vec<CMat<T>>,
    /// Basis of the algebra, orthonormal for the Frobenius inner product.
    pub span_basis: Vec<CMat<T>>,
    pub dim: usize,
    /// Cholesky factor of the metric at `lambda`: maps frame coordinates to the orthonormal
    /// frame in which the generators are written.
    pub cholesky: CMat<T>,
    pub max_order: usize,
    pub product_length: usize,
    /// Sampling radius used for the jets.
    pub radius: T,
    pub escalated: bool,
}

impl<T: Real> MatrixAlgebraBasis<T> {
    pub fn size(&self) -> usize {
        self.span_basis.first().map_or(0, |m| m.nrows())
    }

    /// Largest relative residual of a product of two basis elements after projection onto the span.
    pub fn closure_defect(&self) -> T {
        let vecs: Vec<DVector<C<T>>> = self.span_basis.iter().map(vectorize).collect();
        let mut worst = T::zero();
        for a in &self.span_basis {
            for b in &self.span_basis {
                let p = vectorize(&(a * b));
                let norm = p.norm();
                if norm == T::zero() {
                    continue;
                }
                let mut r = p.clone();
                for v in &vecs {
                    let c = v.dotc(&r);
                    r -= v * c;
                }
                worst = worst.max(r.norm() / norm);
            }
        }
        worst
    }
}

/// Incremental orthonormal basis of a space of matrices.
struct Span<T: Real> {
    vecs: Vec<DVector<C<T>>>,
    n: usize,
}

impl<T: Real> Span<T> {
    fn new(n: usize) -> Self {
        Self {
            vecs: Vec::new(),
            n,
        }
    }

    /// Adds `m` if it is independent of the current span; returns the new basis element.
    fn push(&mut self, m: &CMat<T>) -> Option<CMat<T>> {
        let v = vectorize(m);
        let norm = v.norm();
        // Inputs are products of unit-norm matrices, so tiny ones are roundoff.
        if norm <= T::lit(1e-10) || self.vecs.len() == self.n * self.n {
            return None;
        }
        let mut r = v / C::new(norm, T::zero());
        for _ in 0..2 {
            for b in &self.vecs {
                let c = b.dotc(&r);
                r -= b * c;
            }
        }
        let rn = r.norm();
        if rn <= T::lit(RANK_TOL) {
            return None;
        }
        r /= C::new(rn, T::zero());
        self.vecs.push(r.clone());
        Some(unvectorize(&r, self.n))
    }
}

/// Closes `generators` (and their adjoints) under products of length up to `length`.
pub fn algebra_from_generators<T: Real>(
    lambda: C<T>,
    generators: Vec<CMat<T>>,
    length: usize,
    cholesky: CMat<T>,
) -> MatrixAlgebraBasis<T> {
    let n = cholesky.nrows();
    let mut letters: Vec<CMat<T>> = Vec::new();
    for g in &generators {
        letters.push(g.clone());
        letters.push(g.adjoint());
    }
    let mut span = Span::new(n);
    let mut basis = Vec::new();
    if let Some(b) = span.push(&CMat::identity(n, n)) {
        basis.push(b);
    }
    let mut frontier = Vec::new();
    for g in &letters {
        if let Some(b) = span.push(g) {
            basis.push(b.clone());
            frontier.push(b);
        }
    }
    for _ in 1..length {
        let mut next = Vec::new();
        for w in &frontier {
            for g in &letters {
                if let Some(b) = span.push(&(w * g)) {
                    basis.push(b.clone());
                    next.push(b);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    let adjoints: Vec<CMat<T>> = basis.iter().map(|b| b.adjoint()).collect();
    for a in &adjoints {
        if let Some(b) = span.push(a) {
            basis.push(b);
        }
    }
    let stacked = CMat::from_columns(&basis.iter().map(vectorize).collect::<Vec<_>>());
    let dim = rank(&stacked, T::lit(RANK_TOL));
    MatrixAlgebraBasis {
        lambda,
        generators,
        span_basis: basis,
        dim,
        cholesky,
        max_order: 0,
        product_length: length,
        radius: T::zero(),
        escalated: false,
    }
}

fn min_separation<T: Real>(nodes: &[(C<T>, usize)]) -> T {
    let mut best = T::max_value().unwrap_or_else(|| T::lit(f64::MAX));
    for (a, x) in nodes.iter().enumerate() {
        for y in &nodes[a + 1..] {
            best = best.min(abs(x.0 - y.0));
        }
    }
    best
}

fn boundary_margin<T: Real>(nodes: &[(C<T>, usize)]) -> T {
    nodes
        .iter()
        .fold(T::one(), |m, n| m.min(T::one() - abs(n.0)))
}

/// Largest radius (halving from a boundary-limited start) on which the node frame continues
/// around the circle without monodromy, collisions or escaping nodes.
pub fn safe_radius<T: Real>(theta: &RationalInner<T>, lambda: C<T>) -> Result<T> {
    let field = FrameField::new(theta, lambda)?;
    let sep0 = min_separation(field.nodes());
    let margin0 = boundary_margin(field.nodes());
    let steps = 64;
    let probe = |r: T| -> bool {
        let mut prev = field.nodes().to_vec();
        for k in 1..=steps {
            let mu = lambda + cis(T::two_pi() * T::lit(k as f64 / steps as f64)) * r;
            let (Ok(anchored), Ok(tracked)) = (field.nodes_at(mu), match_nodes(theta, &prev, mu))
            else {
                return false;
            };
            if anchored != tracked
                || min_separation(&tracked) < T::lit(0.6) * sep0
                || boundary_margin(&tracked) < T::lit(0.5) * margin0
            {
                return false;
            }
            prev = tracked;
        }
        true
    };
    let mut r = T::lit(0.25).min(T::lit(0.4) * (T::one() - abs(lambda)));
    for _ in 0..12 {
        if probe(r) {
            return Ok(r);
        }
        r *= T::lit(0.5);
    }
    Err(Error::FrameTracking(format!(
        "no usable sampling radius around {lambda}"
    )))
}

fn algebra_with_escalation<T: Real>(
    theta: &RationalInner<T>,
    lambda: C<T>,
    max_order: usize,
    length: usize,
) -> Result<MatrixAlgebraBasis<T>> {
    let radius = safe_radius(theta, lambda)?;
    let field = FrameField::new(theta, lambda)?;
    let frame_at = |mu: C<T>| field.at(mu);
    let samples = curvature_samples(frame_at, lambda, radius, max_order + 1)?;
    let anchor = field.at(lambda)?;
    let h = gram(&anchor).transpose();
    let chol = Cholesky::new(h).ok_or(Error::SingularGram {
        re: lambda.re.as_f64(),
        im: lambda.im.as_f64(),
    })?;
    let l = chol.l();
    let gens = |order: usize| -> Vec<CMat<T>> {
        let mats: Vec<&CMat<T>> = samples
            .iter()
            .filter(|s| s.order.0 + s.order.1 <= order)
            .map(|s| &s.orthonormal)
            .collect();
        let top = mats
            .iter()
            .map(|m| m.norm())
            .fold(T::zero(), |a, b| a.max(b));
        mats.into_iter()
            .filter(|m| m.norm() > T::lit(1e-12) * top)
            .map(|m| m / C::new(m.norm(), T::zero()))
            .collect()
    };
    let build = |order: usize, len: usize| {
        let mut a = algebra_from_generators(lambda, gens(order), len, l.clone());
        a.max_order = order;
        a.radius = radius;
        a
    };
    let base = build(max_order, length);
    let lower = build(max_order.saturating_sub(1), length.saturating_sub(1).max(1));
    if lower.dim == base.dim {
        return Ok(base);
    }
    let mut up = build(max_order + 1, length + 1);
    up.escalated = true;
    Ok(up)
}

/// Curvature algebra at `lambda`, checked for stability at two nearby points.
pub fn curvature_algebra<T: Real>(
    theta: &RationalInner<T>,
    lambda: C<T>,
    max_order: usize,
    length: usize,
) -> Result<MatrixAlgebraBasis<T>> {
    let alg = algebra_with_escalation(theta, lambda, max_order, length)?;
    let delta = alg.radius * T::lit(0.5);
    let mut dims = vec![alg.dim];
    for s in [T::one(), -T::one()] {
        let mu = lambda + C::new(delta * s, T::zero());
        dims.push(algebra_with_escalation(theta, mu, max_order, length)?.dim);
    }
    if dims.iter().any(|&d| d != alg.dim) {
        return Err(Error::Coalescing {
            re: lambda.re.as_f64(),
            im: lambda.im.as_f64(),
            dims,
        });
    }
    Ok(alg)
}

/// Block structure at a point.
#[derive(Clone, Debug)]
pub struct ReducibilityReport<T: Real> {
    pub component_id: Option<usize>,
    pub lambda: C<T>,
    /// `(n_i, m_i)`: the algebra is `sum M_{n_i} (x) I_{m_i}`.
    pub blocks: Vec<(usize, usize)>,
    pub commutant_dim: usize,
    pub algebra_dim: usize,
    /// Commutant basis in the orthonormal frame.
    pub commutant_basis: Vec<CMat<T>>,
    /// Rank-minimal projections of the commutant in the orthonormal frame.
    pub minimal_projections: Vec<CMat<T>>,
    pub verdict: Verdict,
    pub sample_points: Vec<C<T>>,
    /// Commutant dimension at each sample point.
    pub votes: Vec<usize>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, a: usize) -> usize {
        let mut r = a;
        while self.0[r] != r {
            r = self.0[r];
        }
        self.0[a] = r;
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        self.0[ra.max(rb)] = ra.min(rb);
    }
}

/// Commutant `{X : AX = XA}` of a set of `n x n` matrices.
pub fn commutant<T: Real>(mats: &[CMat<T>], n: usize) -> Vec<CMat<T>> {
    let id = CMat::<T>::identity(n, n);
    let mut stacked = CMat::<T>::zeros(mats.len().max(1) * n * n, n * n);
    for (k, a) in mats.iter().enumerate() {
        let block = id.kronecker(a) - a.transpose().kronecker(&id);
        stacked
            .view_mut((k * n * n, 0), (n * n, n * n))
            .copy_from(&block);
    }
    complex_nullspace(&stacked, T::lit(RANK_TOL))
        .iter()
        .map(|v| unvectorize(v, n))
        .collect()
}

/// Real basis of the self-adjoint part of a `*`-closed matrix space.
fn hermitian_part<T: Real>(basis: &[CMat<T>]) -> Vec<CMat<T>> {
    let half = C::new(T::lit(0.5), T::zero());
    let ihalf = C::new(T::zero(), T::lit(-0.5));
    let mut cands = Vec::new();
    for c in basis {
        cands.push((c + c.adjoint()) * half);
        cands.push((c - c.adjoint()) * ihalf);
    }
    // Orthonormalize over the reals: <A, B> = Re tr(A^H B).
    let top = cands
        .iter()
        .map(|m| m.norm())
        .fold(T::zero(), |a, b| a.max(b));
    let mut out: Vec<CMat<T>> = Vec::new();
    for m in cands {
        let norm = m.norm();
        if norm <= T::lit(RANK_TOL) * top {
            continue;
        }
        let mut r = &m / C::new(norm, T::zero());
        for _ in 0..2 {
            for b in &out {
                let c = b.dotc(&r).re;
                r -= b * C::new(c, T::zero());
            }
        }
        let rn = r.norm();
        if rn > T::lit(RANK_TOL) {
            out.push(r / C::new(rn, T::zero()));
        }
    }
    out
}

/// Commutant of the algebra and the block structure read off from a random self-adjoint
/// commutant element.
pub fn commutant_and_blocks<T: Real>(
    alg: &MatrixAlgebraBasis<T>,
    seed: u64,
) -> Result<ReducibilityReport<T>> {
    let n = alg.size();
    let comm = commutant(&alg.span_basis, n);
    let herm = hermitian_part(&comm);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = herm.iter().fold(CMat::<T>::zeros(n, n), |acc, h| {
        acc + h * C::new(T::lit(rng.gen_range(-1.0..1.0)), T::zero())
    });
    let (vals, vecs) = hermitian_eigen(&x);
    let spread =
        vals.last().copied().unwrap_or(T::zero()) - vals.first().copied().unwrap_or(T::zero());
    let scale = vals.iter().fold(spread, |m, v| m.max(v.abs()));
    let gap = T::lit(1e-6) * scale.max(T::lit(f64::MIN_POSITIVE));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (k, &v) in vals.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if v - vals[*g.last().unwrap()] <= gap => g.push(k),
            _ => groups.push(vec![k]),
        }
    }
    let projections: Vec<CMat<T>> = groups
        .iter()
        .map(|g| {
            let v = CMat::from_columns(
                &g.iter()
                    .map(|&k| vecs.column(k).into_owned())
                    .collect::<Vec<_>>(),
            );
            &v * v.adjoint()
        })
        .collect();
    let mut uf = UnionFind((0..projections.len()).collect());
    for a in 0..projections.len() {
        for b in a + 1..projections.len() {
            if comm
                .iter()
                .any(|c| (&projections[a] * c * &projections[b]).norm() > T::lit(1e-6))
            {
                uf.union(a, b);
            }
        }
    }
    let mut blocks: Vec<(usize, usize)> = Vec::new();
    let mut seen: Vec<usize> = Vec::new();
    for a in 0..projections.len() {
        let r = uf.find(a);
        if seen.contains(&r) {
            continue;
        }
        seen.push(r);
        let members: Vec<usize> = (0..projections.len())
            .filter(|&b| uf.find(b) == r)
            .collect();
        let ranks: Vec<usize> = members.iter().map(|&b| groups[b].len()).collect();
        if ranks.iter().any(|&k| k != ranks[0]) {
            return Err(Error::Numerical(
                "equivalent minimal projections of different rank".into(),
            ));
        }
        blocks.push((ranks[0], members.len()));
    }
    blocks.sort_unstable();
    let m2: usize = blocks.iter().map(|b| b.1 * b.1).sum();
    let n2: usize = blocks.iter().map(|b| b.0 * b.0).sum();
    let nm: usize = blocks.iter().map(|b| b.0 * b.1).sum();
    if m2 != comm.len() || n2 != alg.dim || nm != n {
        return Err(Error::Numerical(format!(
            "blocks {blocks:?} inconsistent with algebra dim {} and commutant dim {}",
            alg.dim,
            comm.len()
        )));
    }
    Ok(ReducibilityReport {
        component_id: None,
        lambda: alg.lambda,
        blocks,
        commutant_dim: comm.len(),
        algebra_dim: alg.dim,
        verdict: if comm.len() == 1 {
            Verdict::Irreducible
        } else {
            Verdict::Reducible
        },
        commutant_basis: comm,
        minimal_projections: projections,
        sample_points: vec![alg.lambda],
        votes: Vec::new(),
    })
}

/// Block analysis at several points of one component; the reported structure is the one
/// at the first point whose commutant dimension agrees with the majority.
pub fn reduce_component<T: Real>(
    theta: &RationalInner<T>,
    points: &[C<T>],
    opts: &ReduceOptions,
) -> Result<ReducibilityReport<T>> {
    let reports: Vec<Result<ReducibilityReport<T>>> = points
        .par_iter()
        .enumerate()
        .map(|(k, &p)| {
            let alg = curvature_algebra(theta, p, opts.max_order, opts.product_length)?;
            commutant_and_blocks(&alg, opts.seed.wrapping_add(k as u64))
        })
        .collect();
    let mut ok = Vec::new();
    let mut last_err = None;
    for r in reports {
        match r {
            Ok(r) => ok.push(r),
            Err(e @ Error::Coalescing { .. }) | Err(e @ Error::FrameTracking(_)) => {
                last_err = Some(e)
            }
            Err(e) => return Err(e),
        }
    }
    if ok.is_empty() {
        return Err(last_err.unwrap_or_else(|| Error::InvalidArgument("no sample points".into())));
    }
    let votes: Vec<usize> = ok.iter().map(|r| r.commutant_dim).collect();
    let majority = *votes
        .iter()
        .max_by_key(|&&d| {
            (
                votes.iter().filter(|&&e| e == d).count(),
                std::cmp::Reverse(d),
            )
        })
        .unwrap();
    let mut report = ok
        .into_iter()
        .find(|r| r.commutant_dim == majority)
        .unwrap();
    report.sample_points = points.to_vec();
    report.votes = votes;
    Ok(report)
}

/// Outcome of an orthogonality test between two families of sections.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrthogonalityCheck<T: Real> {
    pub orthogonal: bool,
    /// Largest `|<u, v>| / (|u| |v|)` over all sampled pairs.
    pub max_inner: T,
}

/// Whether every section in `first` is orthogonal to every section in `second`.
pub fn cross_component_orthogonal<T: Real>(
    first: &[KernelFrame<T>],
    second: &[KernelFrame<T>],
) -> OrthogonalityCheck<T> {
    let normalized = |f: &KernelFrame<T>| -> Vec<(KernelVector<T>, T)> {
        f.vectors
            .iter()
            .map(|v| {
                (
                    v.clone(),
                    crate::bundle::inner(v, v).re.max(T::zero()).sqrt(),
                )
            })
            .collect()
    };
    let a: Vec<Vec<(KernelVector<T>, T)>> = first.iter().map(normalized).collect();
    let b: Vec<Vec<(KernelVector<T>, T)>> = second.iter().map(normalized).collect();
    let max_inner = a
        .par_iter()
        .map(|fa| {
            let mut m = T::zero();
            for (u, nu) in fa {
                for fb in &b {
                    for (v, nv) in fb {
                        let denom = *nu * *nv;
                        if denom > T::zero() {
                            m = m.max(abs(crate::bundle::inner(u, v)) / denom);
                        }
                    }
                }
            }
            m
        })
        .reduce(T::zero, |x, y| x.max(y));
    OrthogonalityCheck {
        orthogonal: max_inner < T::lit(ORTHO_TOL),
        max_inner,
    }
}

/// Analytic test for the two-factor homogeneous case `(z - a w)(z - b w)`.
pub fn degree2_criterion<T: Real>(alpha: C<T>, beta: C<T>) -> Result<bool> {
    if alpha == C::new(T::zero(), T::zero()) || beta == C::new(T::zero(), T::zero()) {
        return Err(Error::InvalidArgument(
            "degree-2 criterion needs nonzero coefficients".into(),
        ));
    }
    Ok(abs(alpha + beta) < T::lit(1e-12))
}

/// Usable points of a component, deepest first.
#[derive(Clone, Debug)]
pub struct ComponentSites<T: Real> {
    pub label: usize,
    pub index: usize,
    /// `(point, depth)`: depth is the grid distance to the nearest unusable cell.
    pub sites: Vec<(C<T>, usize)>,
}

impl<T: Real> ComponentSites<T> {
    pub fn base(&self) -> C<T> {
        self.sites[0].0
    }

    /// `count` points spread over the component, the deepest one first.
    pub fn spread(&self, count: usize) -> Vec<C<T>> {
        let mut pts = vec![self.sites[0].0];
        let mut rest: Vec<&(C<T>, usize)> = self.sites[1..].iter().collect();
        rest.sort_by(|a, b| {
            (a.0.im, a.0.re)
                .partial_cmp(&(b.0.im, b.0.re))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let want = count.saturating_sub(1).min(rest.len());
        for k in 0..want {
            pts.push(rest[k * rest.len() / want].0);
        }
        pts
    }

    /// `count` distinct points drawn at random among the deeper half of the sites.
    pub fn random(&self, count: usize, rng: &mut ChaCha8Rng) -> Vec<C<T>> {
        let pool = (self.sites.len() / 2).max(1);
        let mut chosen = vec![0usize];
        while chosen.len() < count.min(pool) {
            let k = rng.gen_range(0..pool);
            if !chosen.contains(&k) {
                chosen.push(k);
            }
        }
        chosen.into_iter().map(|k| self.sites[k].0).collect()
    }
}

/// Cells of a Fredholm component where the node pattern is generic, nodes are well
/// separated and away from the circle, ordered by depth.
pub fn component_sites<T: Real>(
    theta: &RationalInner<T>,
    map: &FredholmRegionMap<T>,
    label: usize,
) -> Result<ComponentSites<T>> {
    let n = map.grid.n;
    let comp = map
        .components
        .iter()
        .find(|c| c.label == label)
        .ok_or_else(|| Error::InvalidArgument(format!("no component {label}")))?;
    let cells = map.cells_of(label);
    let info: Vec<Option<(Vec<usize>, T, T)>> = cells
        .par_iter()
        .map(|&(i, j)| {
            let roots = numerator_fiber_roots(theta, map.grid.point(i, j))
                .ok()?
                .inside(T::one());
            let nodes = roots.roots();
            let mut pattern: Vec<usize> = nodes.iter().map(|n| n.1).collect();
            pattern.sort_unstable();
            Some((pattern, min_separation(nodes), boundary_margin(nodes)))
        })
        .collect();
    let mut patterns: Vec<(Vec<usize>, usize)> = Vec::new();
    for (p, _, _) in info.iter().flatten() {
        match patterns.iter_mut().find(|q| &q.0 == p) {
            Some(q) => q.1 += 1,
            None => patterns.push((p.clone(), 1)),
        }
    }
    let generic = patterns
        .iter()
        .max_by_key(|p| p.1)
        .map(|p| p.0.clone())
        .unwrap_or_default();
    let mut good = vec![false; n * n];
    for (&(i, j), inf) in cells.iter().zip(&info) {
        if let Some((p, sep, margin)) = inf {
            good[j * n + i] = *p == generic && *sep >= T::lit(0.05) && *margin >= T::lit(0.02);
        }
    }
    let mut dist = vec![usize::MAX; n * n];
    let mut queue = VecDeque::new();
    for c in 0..n * n {
        let (i, j) = (c % n, c / n);
        if !good[c] {
            dist[c] = 0;
            queue.push_back(c);
        } else if i == 0 || j == 0 || i + 1 == n || j + 1 == n {
            dist[c] = 1;
            queue.push_back(c);
        }
    }
    while let Some(c) = queue.pop_front() {
        let (i, j) = (c % n, c / n);
        let nbrs = [
            (i > 0).then(|| c - 1),
            (i + 1 < n).then(|| c + 1),
            (j > 0).then(|| c - n),
            (j + 1 < n).then(|| c + n),
        ];
        for d in nbrs.into_iter().flatten() {
            if dist[d] == usize::MAX {
                dist[d] = dist[c] + 1;
                queue.push_back(d);
            }
        }
    }
    let mut sites: Vec<(usize, usize)> = cells
        .iter()
        .map(|&(i, j)| (j * n + i, dist[j * n + i]))
        .filter(|s| s.1 >= 1 && good[s.0])
        .collect();
    if sites.is_empty() {
        return Err(Error::Numerical(format!(
            "component {label} has no usable sample points"
        )));
    }
    sites.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(ComponentSites {
        label,
        index: comp.index,
        sites: sites
            .into_iter()
            .map(|(c, d)| (map.grid.point(c % n, c / n), d))
            .collect(),
    })
}

/// One side of a witness decomposition on one component.
#[derive(Clone, Debug)]
pub struct WitnessComponent<T: Real> {
    pub label: usize,
    pub base: C<T>,
    /// Projection onto the first sub-bundle at `base`, in the orthonormal frame.
    pub projection: CMat<T>,
    pub rank: usize,
    pub first: Vec<KernelFrame<T>>,
    pub second: Vec<KernelFrame<T>>,
}

#[derive(Clone, Debug)]
pub struct Witness<T: Real> {
    pub components: Vec<WitnessComponent<T>>,
    pub max_inner: T,
}

#[derive(Clone, Debug)]
pub struct StrictReducibilityReport<T: Real> {
    pub per_component: Vec<ReducibilityReport<T>>,
    /// Entry `[i][j]`: first sub-bundle over component `i` orthogonal to the second over `j`.
    pub cross_orthogonality: Vec<Vec<bool>>,
    pub verdict: Verdict,
    pub witness: Option<Witness<T>>,
    /// Real dimension of the self-adjoint part of the global commutant.
    pub global_commutant_dim: usize,
    /// Decided by a component of rank one.
    pub shortcut: bool,
}

/// Data of one component used by the cross-component system.
struct Patch<T: Real> {
    label: usize,
    base: KernelFrame<T>,
    cholesky: CMat<T>,
    /// Hermitian commutant basis at the base point, orthonormal frame.
    herm: Vec<CMat<T>>,
    /// Frames at constraint points with `C(s, base)` and its inverse.
    samples: Vec<(KernelFrame<T>, CMat<T>, CMat<T>)>,
}

impl<T: Real> Patch<T> {
    fn new(
        theta: &RationalInner<T>,
        label: usize,
        report: &ReducibilityReport<T>,
        cholesky: CMat<T>,
        points: &[C<T>],
    ) -> Result<Self> {
        let base = FrameField::new(theta, report.lambda)?.at(report.lambda)?;
        let samples = points
            .iter()
            .filter(|&&p| p != report.lambda)
            .map(|&p| {
                let f = crate::bundle::kernel_frame(theta, p)?;
                let c = cross_gram(&f, &base);
                let ci = c.clone().try_inverse().ok_or(Error::SingularGram {
                    re: p.re.as_f64(),
                    im: p.im.as_f64(),
                })?;
                Ok((f, c, ci))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            label,
            base,
            cholesky,
            herm: hermitian_part(&report.commutant_basis),
            samples,
        })
    }

    /// Frame-coordinate matrix of the self-adjoint operator that is `m` (orthonormal frame)
    /// at the base point, at every sample point (base first).
    fn propagate(&self, m: &CMat<T>) -> Vec<CMat<T>> {
        let phi = from_orthonormal(&self.cholesky, m);
        let conj_phi = phi.map(conj);
        let mut out = vec![phi];
        for (_, c, ci) in &self.samples {
            out.push((c * &conj_phi * ci).transpose());
        }
        out
    }

    fn frames(&self) -> Vec<&KernelFrame<T>> {
        std::iter::once(&self.base)
            .chain(self.samples.iter().map(|s| &s.0))
            .collect()
    }
}

/// Sections of the range of `phi` (frame coordinates) in `frame`.
fn sub_frame<T: Real>(frame: &KernelFrame<T>, phi: &CMat<T>) -> KernelFrame<T> {
    frame.transform(&range_basis(phi, T::lit(1e-6)))
}

/// Strict reducibility of the kernel bundle over all Fredholm components of `map`.
pub fn strict_reducibility<T: Real>(
    theta: &RationalInner<T>,
    map: &FredholmRegionMap<T>,
    opts: &ReduceOptions,
) -> Result<StrictReducibilityReport<T>> {
    if theta.has_z_only_factor() {
        return Err(Error::UnivariateFactor { var: 'z' });
    }
    if theta.has_w_only_factor() {
        return Err(Error::UnivariateFactor { var: 'w' });
    }
    let comps: Vec<_> = map.fredholm_components().filter(|c| !c.thin).collect();
    if comps.is_empty() {
        return Err(Error::InvalidArgument(
            "no Fredholm component on the grid".into(),
        ));
    }
    if comps.iter().any(|c| c.index == 1) {
        return Ok(StrictReducibilityReport {
            per_component: Vec::new(),
            cross_orthogonality: Vec::new(),
            verdict: Verdict::Irreducible,
            witness: None,
            global_commutant_dim: 1,
            shortcut: true,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let sites: Vec<ComponentSites<T>> = comps
        .iter()
        .map(|c| component_sites(theta, map, c.label))
        .collect::<Result<_>>()?;
    let mut per_component = Vec::with_capacity(sites.len());
    let mut algebras = Vec::with_capacity(sites.len());
    for s in &sites {
        let pts = s.random(opts.samples_per_component, &mut rng);
        let mut report = reduce_component(theta, &pts, opts)?;
        report.component_id = Some(s.label);
        // Anchor the global system at a point where the algebra was actually computed.
        let alg = curvature_algebra(theta, report.lambda, opts.max_order, opts.product_length)?;
        algebras.push(alg);
        per_component.push(report);
    }

    let constraint_points: Vec<Vec<C<T>>> = sites.iter().map(|s| s.spread(6)).collect();
    let patches: Vec<Patch<T>> = per_component
        .iter()
        .zip(&algebras)
        .zip(&constraint_points)
        .zip(&sites)
        .map(|(((r, a), pts), s)| Patch::new(theta, s.label, r, a.cholesky.clone(), pts))
        .collect::<Result<_>>()?;
    let null = global_commutant(&patches);
    let global_dim = null.len();

    let ortho_points: Vec<Vec<C<T>>> = sites.iter().map(|s| s.spread(opts.ortho_samples)).collect();
    let witness_patches: Vec<Patch<T>> = per_component
        .iter()
        .zip(&algebras)
        .zip(&ortho_points)
        .zip(&sites)
        .map(|(((r, a), pts), s)| Patch::new(theta, s.label, r, a.cholesky.clone(), pts))
        .collect::<Result<_>>()?;

    let mut best: Option<(Witness<T>, Vec<Vec<bool>>)> = None;
    if global_dim > 1 {
        for _ in 0..WITNESS_DRAWS {
            let coeffs: Vec<T> = (0..global_dim)
                .map(|_| T::lit(rng.gen_range(-1.0..1.0)))
                .collect();
            let x = null
                .iter()
                .zip(&coeffs)
                .fold(DVector::<T>::zeros(null[0].len()), |acc, (v, &c)| {
                    acc + v * c
                });
            let elements = split_unknowns(&patches, &x);
            if let Some(found) = witness_from_element(&witness_patches, &elements) {
                let done = found.0.max_inner < T::lit(ORTHO_TOL);
                if best
                    .as_ref()
                    .is_none_or(|b| found.0.max_inner < b.0.max_inner)
                {
                    best = Some(found);
                }
                if done {
                    break;
                }
            }
        }
    }
    let (witness, cross) = match best {
        Some((w, c)) if w.max_inner < T::lit(ORTHO_TOL) => (Some(w), c),
        Some((_, c)) => (None, c),
        None => (
            None,
            local_candidate_matrix(&witness_patches, &per_component),
        ),
    };
    Ok(StrictReducibilityReport {
        verdict: if witness.is_some() {
            Verdict::Reducible
        } else {
            Verdict::Irreducible
        },
        per_component,
        cross_orthogonality: cross,
        witness,
        global_commutant_dim: global_dim,
        shortcut: false,
    })
}

/// Real nullspace of the symmetry constraints `Phi(s)^T C(s,t) = C(s,t) conj(Phi(t))` over
/// all pairs of constraint points, in the unknowns of [`Patch::herm`].
fn global_commutant<T: Real>(patches: &[Patch<T>]) -> Vec<DVector<T>> {
    let offsets: Vec<usize> = patches
        .iter()
        .scan(0, |acc, p| {
            let o = *acc;
            *acc += p.herm.len();
            Some(o)
        })
        .collect();
    let unknowns: usize = patches.iter().map(|p| p.herm.len()).sum();
    // Points as (patch, index within patch); fields[u][point] for unit unknown u.
    let points: Vec<(usize, usize)> = patches
        .iter()
        .enumerate()
        .flat_map(|(a, p)| (0..=p.samples.len()).map(move |k| (a, k)))
        .collect();
    let frames: Vec<Vec<&KernelFrame<T>>> = patches.iter().map(|p| p.frames()).collect();
    let fields: Vec<Vec<CMat<T>>> = patches
        .iter()
        .flat_map(|p| p.herm.iter().map(move |h| p.propagate(h)))
        .collect();
    let owner: Vec<usize> = (0..unknowns)
        .map(|u| offsets.iter().rposition(|&o| o <= u).unwrap())
        .collect();
    let mut rows: Vec<Vec<T>> = Vec::new();
    for (x, &(pa, ka)) in points.iter().enumerate() {
        for &(pb, kb) in &points[x + 1..] {
            if pa == pb && (ka == 0 || kb == 0) {
                continue;
            }
            let c = cross_gram(frames[pa][ka], frames[pb][kb]);
            let scale = C::new(T::one() / c.norm(), T::zero());
            let residuals: Vec<CMat<T>> = (0..unknowns)
                .map(|u| {
                    let zero = CMat::zeros(c.nrows(), c.ncols());
                    let left = if owner[u] == pa {
                        fields[u][ka].transpose() * &c
                    } else {
                        zero.clone()
                    };
                    let right = if owner[u] == pb {
                        &c * fields[u][kb].map(conj)
                    } else {
                        zero
                    };
                    (left - right) * scale
                })
                .collect();
            for e in 0..c.len() {
                rows.push(residuals.iter().map(|r| r[e].re).collect());
                rows.push(residuals.iter().map(|r| r[e].im).collect());
            }
        }
    }
    if rows.is_empty() {
        // A single component with a single point: every local element extends.
        return (0..unknowns)
            .map(|u| {
                let mut v = DVector::zeros(unknowns);
                v[u] = T::one();
                v
            })
            .collect();
    }
    let m = DMatrix::from_fn(rows.len(), unknowns, |r, c| rows[r][c]);
    // Rows are scaled by |C(s,t)| and unknowns have unit norm: O(1) is the natural scale.
    real_nullspace(&m, T::lit(1e-7), T::one())
}

/// Per-component Hermitian matrices (orthonormal frame at the base) of a global element.
fn split_unknowns<T: Real>(patches: &[Patch<T>], x: &DVector<T>) -> Vec<CMat<T>> {
    let mut k = 0;
    patches
        .iter()
        .map(|p| {
            let n = p.base.rank();
            let mut m = CMat::zeros(n, n);
            for h in &p.herm {
                m += h * C::new(x[k], T::zero());
                k += 1;
            }
            m
        })
        .collect()
}

/// Tries every spectral gap of the element; returns the best decomposition that is proper on
/// every component together with its cross-orthogonality matrix.
fn witness_from_element<T: Real>(
    patches: &[Patch<T>],
    elements: &[CMat<T>],
) -> Option<(Witness<T>, Vec<Vec<bool>>)> {
    let eigs: Vec<(Vec<T>, CMat<T>)> = elements.iter().map(hermitian_eigen).collect();
    let mut all: Vec<T> = eigs.iter().flat_map(|e| e.0.iter().copied()).collect();
    all.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let spread = *all.last()? - all[0];
    let mut best: Option<(Witness<T>, Vec<Vec<bool>>)> = None;
    for w in all.windows(2) {
        if w[1] - w[0] <= T::lit(1e-6) * spread {
            continue;
        }
        let thr = (w[0] + w[1]) * T::lit(0.5);
        let projs: Vec<(CMat<T>, usize)> = eigs
            .iter()
            .map(|(vals, vecs)| {
                let cols: Vec<_> = vals
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v > thr)
                    .map(|(k, _)| vecs.column(k).into_owned())
                    .collect();
                let n = vecs.nrows();
                if cols.is_empty() {
                    return (CMat::zeros(n, n), 0);
                }
                let v = CMat::from_columns(&cols);
                (&v * v.adjoint(), cols.len())
            })
            .collect();
        if projs
            .iter()
            .zip(patches)
            .any(|((_, r), p)| *r == 0 || *r == p.base.rank())
        {
            continue;
        }
        let candidate = decomposition(patches, &projs);
        if best
            .as_ref()
            .is_none_or(|b| candidate.0.max_inner < b.0.max_inner)
        {
            best = Some(candidate);
        }
    }
    best
}

fn decomposition<T: Real>(
    patches: &[Patch<T>],
    projs: &[(CMat<T>, usize)],
) -> (Witness<T>, Vec<Vec<bool>>) {
    let comps: Vec<WitnessComponent<T>> = patches
        .iter()
        .zip(projs)
        .map(|(p, (proj, r))| {
            let n = proj.nrows();
            let fields = p.propagate(proj);
            let comp = p.propagate(&(CMat::identity(n, n) - proj));
            let frames = p.frames();
            WitnessComponent {
                label: p.label,
                base: p.base.lambda,
                projection: proj.clone(),
                rank: *r,
                first: frames
                    .iter()
                    .zip(&fields)
                    .map(|(f, phi)| sub_frame(f, phi))
                    .collect(),
                second: frames
                    .iter()
                    .zip(&comp)
                    .map(|(f, phi)| sub_frame(f, phi))
                    .collect(),
            }
        })
        .collect();
    let mut max_inner = T::zero();
    let cross: Vec<Vec<bool>> = comps
        .iter()
        .map(|a| {
            comps
                .iter()
                .map(|b| {
                    let check = cross_component_orthogonal(&a.first, &b.second);
                    max_inner = max_inner.max(check.max_inner);
                    check.orthogonal
                })
                .collect()
        })
        .collect();
    (
        Witness {
            components: comps,
            max_inner,
        },
        cross,
    )
}

/// Cross-orthogonality of independently chosen local minimal projections, reported when
/// no global element splits the bundle.
fn local_candidate_matrix<T: Real>(
    patches: &[Patch<T>],
    reports: &[ReducibilityReport<T>],
) -> Vec<Vec<bool>> {
    let projs: Option<Vec<(CMat<T>, usize)>> = reports
        .iter()
        .map(|r| {
            let p = r.minimal_projections.first()?;
            let k = rank(p, T::lit(1e-6));
            (k < p.nrows()).then(|| (p.clone(), k))
        })
        .collect();
    match projs {
        Some(p) => decomposition(patches, &p).1,
        None => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inner::make_polynomial;
    use crate::poly::BiPoly;
    use crate::scalar::c64;

    fn poly(terms: &[(usize, usize, f64)]) -> RationalInner<f64> {
        make_polynomial(BiPoly::from_real_terms(terms), Vec::new()).unwrap()
    }

    #[test]
    fn scalar_algebra_for_z2_minus_w2() {
        let th = poly(&[(2, 0, 1.0), (0, 2, -1.0)]);
        let alg = curvature_algebra(&th, c64(0.5, 0.1), 2, 3).unwrap();
        assert_eq!(alg.dim, 1);
        let rep = commutant_and_blocks(&alg, 1).unwrap();
        assert_eq!(rep.commutant_dim, 4);
        assert_eq!(rep.blocks, vec![(1, 2)]);
        assert_eq!(rep.verdict, Verdict::Reducible);
    }

    #[test]
    fn full_algebra_for_double_line() {
        let th = poly(&[(2, 0, 1.0), (1, 1, -2.0), (0, 2, 1.0)]);
        let alg = curvature_algebra(&th, c64(0.3, 0.0), 2, 3).unwrap();
        assert_eq!(alg.dim, 4);
        assert!(alg.closure_defect() < 1e-8);
        let rep = commutant_and_blocks(&alg, 1).unwrap();
        assert_eq!(rep.commutant_dim, 1);
        assert_eq!(rep.verdict, Verdict::Irreducible);
    }

    #[test]
    fn distinct_slopes_irreducible() {
        let th = poly(&[(2, 0, 1.0), (1, 1, -3.0), (0, 2, 2.0)]);
        let alg = curvature_algebra(&th, c64(0.4, 0.2), 2, 3).unwrap();
        let rep = commutant_and_blocks(&alg, 3).unwrap();
        assert_eq!(rep.commutant_dim, 1);
    }

    #[test]
    fn degree2_examples() {
        assert!(degree2_criterion(c64::<f64>(1.0, 0.0), c64(-1.0, 0.0)).unwrap());
        assert!(!degree2_criterion(c64::<f64>(1.0, 0.0), c64(2.0, 0.0)).unwrap());
        assert!(degree2_criterion(c64::<f64>(0.0, 0.5), c64(0.0, -0.5)).unwrap());
        assert!(degree2_criterion(c64::<f64>(0.0, 0.0), c64(1.0, 0.0)).is_err());
    }

    #[test]
    fn rank_one_self_overlap() {
        let f = KernelFrame::from_nodes(c64::<f64>(0.2, 0.0), &[(c64(0.1, 0.0), 1)]);
        let check = cross_component_orthogonal(std::slice::from_ref(&f), std::slice::from_ref(&f));
        assert!(!check.orthogonal);
        assert!((check.max_inner - 1.0).abs() < 1e-12);
    }
}
