//! Spectral classification of points, essential curves, and Fredholm region maps.

use std::collections::VecDeque;
use std::io::{self, Write};

use rayon::prelude::*;

use crate::assign::hungarian;
use crate::error::{Error, Result};
use crate::inner::{numerator_fiber_roots, RationalInner};
use crate::poly::{BiPoly, Var};
use crate::roots::{uni_roots, DEFAULT_CLUSTER_TOL};
use crate::scalar::{abs, cis, Real, C};

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_GRID: usize = 301;
pub const DEFAULT_RADIUS: f64 = 1.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VerdictKind {
    Resolvent,
    Essential,
    FredholmSpectrum,
}

impl VerdictKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictKind::Resolvent => "resolvent",
            VerdictKind::Essential => "essential",
            VerdictKind::FredholmSpectrum => "fredholm",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SpectralVerdict {
    pub kind: VerdictKind,
    pub index: usize,
}

impl SpectralVerdict {
    pub const RESOLVENT: Self = Self {
        kind: VerdictKind::Resolvent,
        index: 0,
    };
    pub const ESSENTIAL: Self = Self {
        kind: VerdictKind::Essential,
        index: 0,
    };

    pub fn fredholm(index: usize) -> Self {
        Self {
            kind: VerdictKind::FredholmSpectrum,
            index,
        }
    }
}

/// Classifies `lambda` relative to the spectrum and essential spectrum of `S_z`.
pub fn classify_point<T: Real>(
    theta: &RationalInner<T>,
    lambda: C<T>,
    tol: T,
) -> Result<SpectralVerdict> {
    if theta.is_pure_z() {
        return classify_pure_z(theta, lambda, tol);
    }
    if theta.has_z_only_factor() {
        return Err(Error::UnivariateFactor { var: 'z' });
    }
    let r = abs(lambda);
    if (r - T::one()).abs() < tol {
        return Ok(SpectralVerdict::ESSENTIAL);
    }
    if r > T::one() {
        return Ok(SpectralVerdict::RESOLVENT);
    }
    let roots = numerator_fiber_roots(theta, lambda)?;
    if roots
        .roots()
        .iter()
        .any(|&(w, _)| (abs(w) - T::one()).abs() < tol)
    {
        return Ok(SpectralVerdict::ESSENTIAL);
    }
    let m = roots.inside(T::one()).total();
    Ok(if m == 0 {
        SpectralVerdict::RESOLVENT
    } else {
        SpectralVerdict::fredholm(m)
    })
}

/// Numerator independent of `w`: the spectrum is the zero set of `q` in `D`, each zero an
/// eigenvalue of infinite multiplicity, and the circle is resolvent.
fn classify_pure_z<T: Real>(
    theta: &RationalInner<T>,
    lambda: C<T>,
    tol: T,
) -> Result<SpectralVerdict> {
    let zq = theta
        .numerator()
        .fiber(C::new(T::zero(), T::zero()), Var::W);
    if zq.degree() == 0 {
        return Ok(SpectralVerdict::RESOLVENT);
    }
    let roots = uni_roots(&zq, T::lit(DEFAULT_CLUSTER_TOL))?;
    let hit = roots
        .roots()
        .iter()
        .any(|&(z, _)| abs(z) < T::one() && abs(z - lambda) < tol);
    Ok(if hit {
        SpectralVerdict::ESSENTIAL
    } else {
        SpectralVerdict::RESOLVENT
    })
}

/// Fredholm index of `S*_{z - lambda}`: fiber zeros in the disk, with multiplicity.
pub fn fredholm_index<T: Real>(theta: &RationalInner<T>, lambda: C<T>) -> Result<usize> {
    let v = classify_point(theta, lambda, T::lit(DEFAULT_TOL))?;
    match v.kind {
        VerdictKind::Essential => Err(Error::IndexUndefined {
            re: lambda.re.as_f64(),
            im: lambda.im.as_f64(),
        }),
        _ => Ok(v.index),
    }
}

/// A traced branch of the essential set: samples `(t, z(t))` with `q(z(t), e^{it}) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyline<T: Real> {
    pub points: Vec<(T, C<T>)>,
    pub uncertain: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EssentialCurves<T: Real> {
    pub curves: Vec<Polyline<T>>,
    pub branch_count: usize,
}

struct Branch<T: Real> {
    points: Vec<(T, C<T>)>,
    uncertain: bool,
}

fn z_roots_at<T: Real>(q: &BiPoly<T>, t: T) -> Vec<C<T>> {
    let fiber = q.fiber(cis(t), Var::W);
    if fiber.is_zero() {
        return vec![];
    }
    uni_roots(&fiber, T::lit(DEFAULT_CLUSTER_TOL))
        .map(|r| r.flat())
        .unwrap_or_default()
}

/// Matches `prev` roots to `cur` roots; returns `(assignment, ambiguous)` where
/// `assignment[i]` is the index in `cur` continuing `prev[i]`, or `None` if it vanished.
fn match_roots<T: Real>(prev: &[C<T>], cur: &[C<T>], tol: T) -> (Vec<Option<usize>>, bool) {
    if prev.is_empty() || cur.is_empty() {
        return (vec![None; prev.len()], false);
    }
    let dist = |a: C<T>, b: C<T>| abs(a - b).as_f64();
    let ambiguous = prev.iter().any(|&p| {
        let mut d: Vec<(f64, usize)> = cur
            .iter()
            .enumerate()
            .map(|(j, &c)| (dist(p, c), j))
            .collect();
        d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        d.len() > 1 && d[1].0 - d[0].0 < tol.as_f64() && abs(cur[d[0].1] - cur[d[1].1]) > tol
    });
    if prev.len() <= cur.len() {
        let cost: Vec<Vec<f64>> = prev
            .iter()
            .map(|&p| cur.iter().map(|&c| dist(p, c)).collect())
            .collect();
        (hungarian(&cost).into_iter().map(Some).collect(), ambiguous)
    } else {
        let cost: Vec<Vec<f64>> = cur
            .iter()
            .map(|&c| prev.iter().map(|&p| dist(p, c)).collect())
            .collect();
        let back = hungarian(&cost);
        let mut out = vec![None; prev.len()];
        for (j, i) in back.into_iter().enumerate() {
            out[i] = Some(j);
        }
        (out, ambiguous)
    }
}

/// Tracks roots from `t0` to `t1`, subdividing up to four times when matching is ambiguous.
fn track_step<T: Real>(
    q: &BiPoly<T>,
    prev: &[C<T>],
    t0: T,
    t1: T,
    depth: usize,
    tol: T,
) -> (Vec<C<T>>, Vec<Option<usize>>, bool) {
    let cur = z_roots_at(q, t1);
    let (assign, ambiguous) = match_roots(prev, &cur, tol);
    if !ambiguous {
        return (cur, assign, false);
    }
    if depth >= 4 {
        return (cur, assign, true);
    }
    let mid = (t0 + t1) / T::lit(2.0);
    let (mid_roots, a1, u1) = track_step(q, prev, t0, mid, depth + 1, tol);
    let (end_roots, a2, u2) = track_step(q, &mid_roots, mid, t1, depth + 1, tol);
    let composed = a1.iter().map(|m| m.and_then(|j| a2[j])).collect();
    (end_roots, composed, u1 || u2)
}

/// Traces `{z in closed D : q(z, e^{it}) = 0}` as continuous branches over `t in [0, 2 pi)`.
pub fn trace_essential_curves<T: Real>(
    theta: &RationalInner<T>,
    steps: usize,
    tol: T,
) -> Result<EssentialCurves<T>> {
    if steps < 64 {
        return Err(Error::InvalidArgument(format!(
            "steps must be at least 64, got {steps}"
        )));
    }
    let q = theta.numerator();
    let two_pi = T::two_pi();
    let t_at = |i: usize| two_pi * T::lit(i as f64) / T::lit(steps as f64);
    let mut roots = z_roots_at(q, T::zero());
    let mut branches: Vec<Branch<T>> = roots
        .iter()
        .map(|&z| Branch {
            points: vec![(T::zero(), z)],
            uncertain: false,
        })
        .collect();
    let mut owner: Vec<usize> = (0..roots.len()).collect();
    let first_roots = roots.clone();
    for i in 1..=steps {
        if i == steps {
            // Wrap-around: join each branch to the branch that started at its continuation.
            let (wrap, _) = match_roots(&roots, &first_roots, tol);
            let mut next: Vec<Option<usize>> = vec![None; branches.len()];
            for (k, m) in wrap.iter().enumerate() {
                if let Some(j) = m {
                    next[owner[k]] = Some(*j);
                }
            }
            branches = join_cycles(branches, &next);
            break;
        }
        let t1 = t_at(i);
        let (cur, assign, uncertain) = track_step(q, &roots, t_at(i - 1), t1, 0, tol);
        let mut new_owner = vec![usize::MAX; cur.len()];
        for (k, m) in assign.iter().enumerate() {
            if let Some(j) = m {
                new_owner[*j] = owner[k];
                let b = &mut branches[owner[k]];
                b.points.push((t1, cur[*j]));
                b.uncertain |= uncertain;
            }
        }
        for (j, o) in new_owner.iter_mut().enumerate() {
            if *o == usize::MAX {
                *o = branches.len();
                branches.push(Branch {
                    points: vec![(t1, cur[j])],
                    uncertain,
                });
            }
        }
        roots = cur;
        owner = new_owner;
    }
    let limit = T::one() + tol;
    let mut curves = Vec::new();
    for b in branches {
        let mut current: Vec<(T, C<T>)> = Vec::new();
        for &(t, z) in &b.points {
            if abs(z) <= limit {
                current.push((t, z));
            } else if !current.is_empty() {
                curves.push(Polyline {
                    points: std::mem::take(&mut current),
                    uncertain: b.uncertain,
                });
            }
        }
        if !current.is_empty() {
            curves.push(Polyline {
                points: current,
                uncertain: b.uncertain,
            });
        }
    }
    let branch_count = curves.len();
    Ok(EssentialCurves {
        curves,
        branch_count,
    })
}

/// Concatenates branches along the wrap-around successor map, so every cycle of the
/// monodromy becomes a single branch.
fn join_cycles<T: Real>(branches: Vec<Branch<T>>, next: &[Option<usize>]) -> Vec<Branch<T>> {
    let n = branches.len();
    let mut has_pred = vec![false; n];
    for (i, s) in next.iter().enumerate() {
        if let Some(j) = s {
            if *j != i {
                has_pred[*j] = true;
            }
        }
    }
    let mut slots: Vec<Option<Branch<T>>> = branches.into_iter().map(Some).collect();
    let mut out = Vec::new();
    let mut visited = vec![false; n];
    let starts: Vec<usize> = (0..n).filter(|&i| !has_pred[i]).chain(0..n).collect();
    for s in starts {
        if visited[s] {
            continue;
        }
        let mut cur = s;
        let mut acc: Option<Branch<T>> = None;
        while !visited[cur] {
            visited[cur] = true;
            let b = slots[cur].take().expect("visited once");
            acc = Some(match acc {
                None => b,
                Some(mut a) => {
                    a.points.extend(b.points);
                    a.uncertain |= b.uncertain;
                    a
                }
            });
            match next[cur] {
                Some(j) => cur = j,
                None => break,
            }
        }
        out.extend(acc);
    }
    out
}

/// Rectangular lattice of `n x n` nodes over `[-radius, radius]^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid<T: Real> {
    pub radius: T,
    pub n: usize,
}

impl<T: Real> Grid<T> {
    pub fn new(radius: T, n: usize) -> Self {
        Self { radius, n }
    }

    pub fn step(&self) -> T {
        T::lit(2.0) * self.radius / T::lit((self.n - 1) as f64)
    }

    /// Node at column `i` (real part) and row `j` (imaginary part).
    pub fn point(&self, i: usize, j: usize) -> C<T> {
        let h = self.step();
        C::new(
            -self.radius + h * T::lit(i as f64),
            -self.radius + h * T::lit(j as f64),
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Component<T: Real> {
    pub label: usize,
    pub kind: VerdictKind,
    pub index: usize,
    pub representative: C<T>,
    pub cell_count: usize,
    pub thin: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FredholmRegionMap<T: Real> {
    pub grid: Grid<T>,
    pub cells: Vec<SpectralVerdict>,
    pub labels: Vec<Option<usize>>,
    pub components: Vec<Component<T>>,
}

impl<T: Real> FredholmRegionMap<T> {
    pub fn verdict(&self, i: usize, j: usize) -> SpectralVerdict {
        self.cells[j * self.grid.n + i]
    }

    pub fn label(&self, i: usize, j: usize) -> Option<usize> {
        self.labels[j * self.grid.n + i]
    }

    pub fn fredholm_components(&self) -> impl Iterator<Item = &Component<T>> {
        self.components
            .iter()
            .filter(|c| c.kind == VerdictKind::FredholmSpectrum)
    }

    /// Index vector of the Fredholm components, in raster order of first appearance.
    pub fn alpha(&self) -> Vec<usize> {
        self.fredholm_components().map(|c| c.index).collect()
    }

    /// Grid nodes belonging to component `label`.
    pub fn cells_of(&self, label: usize) -> Vec<(usize, usize)> {
        let n = self.grid.n;
        (0..n * n)
            .filter(|&k| self.labels[k] == Some(label))
            .map(|k| (k % n, k / n))
            .collect()
    }
}

/// Classifies every grid node; nodes within half a cell diagonal of the unit circle are
/// essential so regions never connect across it.
pub fn classify_grid<T: Real>(
    theta: &RationalInner<T>,
    grid: Grid<T>,
    tol: T,
) -> Result<Vec<SpectralVerdict>> {
    let n = grid.n;
    let band = grid.step() * T::lit(std::f64::consts::FRAC_1_SQRT_2);
    let pure_z = theta.is_pure_z();
    let rows: Result<Vec<Vec<SpectralVerdict>>> = (0..n)
        .into_par_iter()
        .map(|j| {
            (0..n)
                .map(|i| {
                    let lambda = grid.point(i, j);
                    if !pure_z && (abs(lambda) - T::one()).abs() < band {
                        return Ok(SpectralVerdict::ESSENTIAL);
                    }
                    match classify_point(theta, lambda, tol) {
                        Err(Error::ZeroFiber { .. }) => Ok(SpectralVerdict::ESSENTIAL),
                        other => other,
                    }
                })
                .collect()
        })
        .collect();
    Ok(rows?.into_iter().flatten().collect())
}

/// Connected components of cells satisfying `member`, labelled in raster order, with
/// 4-connectivity.
pub(crate) fn flood_components<F: Fn(usize) -> Option<u64>>(
    n: usize,
    key: F,
) -> (Vec<Option<usize>>, Vec<usize>) {
    let mut labels = vec![None; n * n];
    let mut seeds = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n * n {
        let Some(k0) = key(start) else { continue };
        if labels[start].is_some() {
            continue;
        }
        let label = seeds.len();
        seeds.push(start);
        labels[start] = Some(label);
        queue.push_back(start);
        while let Some(c) = queue.pop_front() {
            let (i, j) = (c % n, c / n);
            let mut nb = Vec::with_capacity(4);
            if i > 0 {
                nb.push(c - 1);
            }
            if i + 1 < n {
                nb.push(c + 1);
            }
            if j > 0 {
                nb.push(c - n);
            }
            if j + 1 < n {
                nb.push(c + n);
            }
            for d in nb {
                if labels[d].is_none() && key(d) == Some(k0) {
                    labels[d] = Some(label);
                    queue.push_back(d);
                }
            }
        }
    }
    (labels, seeds)
}

/// Cell of each component farthest (in grid steps) from the component's boundary.
fn deepest_cells(n: usize, labels: &[Option<usize>], count: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; n * n];
    let mut queue = VecDeque::new();
    for c in 0..n * n {
        let Some(l) = labels[c] else { continue };
        let (i, j) = (c % n, c / n);
        let edge = i == 0
            || j == 0
            || i + 1 == n
            || j + 1 == n
            || labels[c - 1] != Some(l)
            || labels[c + 1] != Some(l)
            || labels[c - n] != Some(l)
            || labels[c + n] != Some(l);
        if edge {
            dist[c] = 0;
            queue.push_back(c);
        }
    }
    while let Some(c) = queue.pop_front() {
        let (i, j) = (c % n, c / n);
        let l = labels[c];
        let mut nb = Vec::with_capacity(4);
        if i > 0 {
            nb.push(c - 1);
        }
        if i + 1 < n {
            nb.push(c + 1);
        }
        if j > 0 {
            nb.push(c - n);
        }
        if j + 1 < n {
            nb.push(c + n);
        }
        for d in nb {
            if labels[d] == l && dist[d] == usize::MAX {
                dist[d] = dist[c] + 1;
                queue.push_back(d);
            }
        }
    }
    let mut best = vec![(0usize, usize::MAX); count];
    for c in 0..n * n {
        if let Some(l) = labels[c] {
            if best[l].1 == usize::MAX || dist[c] > best[l].0 {
                best[l] = (dist[c], c);
            }
        }
    }
    best.into_iter().map(|b| b.1).collect()
}

/// Partitions the grid into connected regions of constant verdict and index.
pub fn decompose_fredholm_regions<T: Real>(
    theta: &RationalInner<T>,
    radius: T,
    grid_n: usize,
) -> Result<FredholmRegionMap<T>> {
    decompose_with_tol(theta, radius, grid_n, T::lit(DEFAULT_TOL))
}

pub fn decompose_with_tol<T: Real>(
    theta: &RationalInner<T>,
    radius: T,
    grid_n: usize,
    tol: T,
) -> Result<FredholmRegionMap<T>> {
    if grid_n < 101 {
        return Err(Error::InvalidArgument(format!(
            "grid must have at least 101 nodes per side, got {grid_n}"
        )));
    }
    let grid = Grid::new(radius, grid_n);
    let cells = classify_grid(theta, grid, tol)?;
    let key = |c: usize| {
        let v = cells[c];
        match v.kind {
            VerdictKind::Essential => None,
            VerdictKind::Resolvent => Some(0),
            VerdictKind::FredholmSpectrum => Some(1 + v.index as u64),
        }
    };
    let (labels, seeds) = flood_components(grid_n, key);
    let mut counts = vec![0usize; seeds.len()];
    for l in labels.iter().flatten() {
        counts[*l] += 1;
    }
    let deep = deepest_cells(grid_n, &labels, seeds.len());
    let mut components = Vec::with_capacity(seeds.len());
    for (label, &seed) in seeds.iter().enumerate() {
        let v = cells[seed];
        let members = labels
            .iter()
            .zip(&cells)
            .filter(|(l, _)| **l == Some(label));
        if members.clone().any(|(_, c)| c.index != v.index) {
            return Err(Error::NonConstantIndex { label });
        }
        let d = deep[label];
        components.push(Component {
            label,
            kind: v.kind,
            index: v.index,
            representative: grid.point(d % grid_n, d / grid_n),
            cell_count: counts[label],
            thin: counts[label] < 4,
        });
    }
    Ok(FredholmRegionMap {
        grid,
        cells,
        labels,
        components,
    })
}

/// Whether `{lambda in D : factor(lambda, .) has a zero in D}` is connected on the grid.
pub fn factor_projection_connected<T: Real>(factor: &BiPoly<T>, grid: Grid<T>) -> bool {
    let n = grid.n;
    let member: Vec<bool> = (0..n * n)
        .into_par_iter()
        .map(|c| {
            let lambda = grid.point(c % n, c / n);
            if abs(lambda) >= T::one() {
                return false;
            }
            let fiber = factor.fiber(lambda, Var::Z);
            if fiber.is_zero() {
                return true;
            }
            uni_roots(&fiber, T::lit(DEFAULT_CLUSTER_TOL))
                .map(|r| r.roots().iter().any(|&(w, _)| abs(w) < T::one()))
                .unwrap_or(false)
        })
        .collect();
    let (_, seeds) = flood_components(n, |c| member[c].then_some(0));
    seeds.len() <= 1
}

/// Cowen-Douglas verdict for `S_z*`: every declared factor (or the numerator itself) has a
/// connected zero projection.
pub fn cowen_douglas<T: Real>(theta: &RationalInner<T>, grid: Grid<T>) -> bool {
    if theta.factors().is_empty() {
        factor_projection_connected(theta.numerator(), grid)
    } else {
        theta
            .factors()
            .iter()
            .all(|f| factor_projection_connected(&f.poly, grid))
    }
}

/// Grayscale level of a verdict: resolvent 255, essential 0, index `i` maps to `200 - 40 i`.
pub fn gray_level(v: SpectralVerdict) -> u8 {
    match v.kind {
        VerdictKind::Resolvent => 255,
        VerdictKind::Essential => 0,
        VerdictKind::FredholmSpectrum => (200i64 - 40 * v.index as i64).clamp(1, 254) as u8,
    }
}

/// CSV dump `re,im,verdict,index` with 17 significant digits.
pub fn write_csv<T: Real, W: Write>(map: &FredholmRegionMap<T>, out: &mut W) -> io::Result<()> {
    writeln!(out, "re,im,verdict,index")?;
    let n = map.grid.n;
    for j in 0..n {
        for i in 0..n {
            let p = map.grid.point(i, j);
            let v = map.verdict(i, j);
            writeln!(
                out,
                "{:.16e},{:.16e},{},{}",
                p.re.as_f64(),
                p.im.as_f64(),
                v.kind.as_str(),
                v.index
            )?;
        }
    }
    Ok(())
}

/// Binary PGM with the top row at the largest imaginary part.
pub fn write_pgm<T: Real, W: Write>(map: &FredholmRegionMap<T>, out: &mut W) -> io::Result<()> {
    let n = map.grid.n;
    write!(out, "P5\n{n} {n}\n255\n")?;
    let mut row = vec![0u8; n];
    for j in (0..n).rev() {
        for (i, px) in row.iter_mut().enumerate() {
            *px = gray_level(map.verdict(i, j));
        }
        out.write_all(&row)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inner::{make_polynomial, make_rational_inner};
    use crate::scalar::c64;

    type P = BiPoly<f64>;

    fn inner(terms: &[(usize, usize, f64)]) -> RationalInner<f64> {
        make_rational_inner(P::from_real_terms(terms), 0, 0, vec![]).unwrap()
    }

    fn poly(terms: &[(usize, usize, f64)]) -> RationalInner<f64> {
        make_polynomial(P::from_real_terms(terms), vec![]).unwrap()
    }

    #[test]
    fn classify_examples() {
        let th = inner(&[(0, 0, 1.0), (1, 1, -0.5)]);
        assert_eq!(
            classify_point(&th, c64(0.7, 0.0), 1e-6).unwrap(),
            SpectralVerdict::fredholm(1)
        );
        assert_eq!(
            classify_point(&th, c64(0.3, 0.0), 1e-6).unwrap(),
            SpectralVerdict::RESOLVENT
        );
        assert_eq!(
            classify_point(&th, c64(0.0, 1.0), 1e-6).unwrap(),
            SpectralVerdict::ESSENTIAL
        );
        assert_eq!(
            classify_point(&th, c64(0.0, 1.2), 1e-6).unwrap(),
            SpectralVerdict::RESOLVENT
        );
        let th = inner(&[(0, 0, 2.0), (1, 1, -1.0), (2, 1, 0.1)]);
        assert_eq!(
            classify_point(&th, c64(0.25, 0.0), 1e-6).unwrap(),
            SpectralVerdict::RESOLVENT
        );
        let th = poly(&[(2, 0, 1.0), (0, 2, -1.0)]);
        assert_eq!(
            classify_point(&th, c64(0.5, 0.0), 1e-6).unwrap(),
            SpectralVerdict::fredholm(2)
        );
    }

    #[test]
    fn index_examples() {
        let t = [0.3, 0.6];
        let p = P::from_real_terms(&[(0, 0, 1.0), (1, 1, -t[0])])
            .mul(&P::from_real_terms(&[(0, 0, 1.0), (1, 1, -t[1])]));
        let th = make_rational_inner(p, 0, 0, vec![]).unwrap();
        assert_eq!(fredholm_index(&th, c64(0.45, 0.0)).unwrap(), 1);
        assert_eq!(fredholm_index(&th, c64(0.8, 0.0)).unwrap(), 2);
        let th = make_polynomial(
            P::from_real_terms(&[(1, 0, 1.0), (0, 1, -1.0)]).pow(3),
            vec![],
        )
        .unwrap();
        assert_eq!(fredholm_index(&th, c64(0.2, 0.0)).unwrap(), 3);
        assert!(matches!(
            fredholm_index(&th, c64(1.0, 0.0)),
            Err(Error::IndexUndefined { .. })
        ));
    }

    #[test]
    fn pure_z_blaschke() {
        let th = make_rational_inner(P::from_real_terms(&[(0, 0, 1.0)]), 1, 0, vec![]).unwrap();
        assert_eq!(
            classify_point(&th, c64(0.0, 0.0), 1e-6).unwrap(),
            SpectralVerdict::ESSENTIAL
        );
        assert_eq!(
            classify_point(&th, c64(1.0, 0.0), 1e-6).unwrap(),
            SpectralVerdict::RESOLVENT
        );
        assert_eq!(
            classify_point(&th, c64(0.4, 0.2), 1e-6).unwrap(),
            SpectralVerdict::RESOLVENT
        );
        let th = make_rational_inner(
            P::from_real_terms(&[(0, 0, 1.0), (1, 0, -0.5)]),
            0,
            0,
            vec![],
        )
        .unwrap();
        assert_eq!(
            classify_point(&th, c64(0.5, 0.0), 1e-6).unwrap(),
            SpectralVerdict::ESSENTIAL
        );
        assert_eq!(
            classify_point(&th, c64(0.0, -1.0), 1e-6).unwrap(),
            SpectralVerdict::RESOLVENT
        );
    }

    #[test]
    fn mixed_z_factor_is_rejected() {
        let q = P::from_real_terms(&[(1, 0, 1.0), (0, 1, -1.0)])
            .mul(&P::from_real_terms(&[(1, 0, 1.0), (0, 0, -0.5)]));
        let th = make_polynomial(q, vec![]).unwrap();
        assert!(matches!(
            classify_point(&th, c64(0.1, 0.0), 1e-6),
            Err(Error::UnivariateFactor { var: 'z' })
        ));
    }

    #[test]
    fn curves_of_simple_examples() {
        let th = inner(&[(0, 0, 1.0), (1, 1, -0.5)]);
        let c = trace_essential_curves(&th, 256, 1e-9).unwrap();
        assert_eq!(c.branch_count, 1);
        assert!(c.curves[0]
            .points
            .iter()
            .all(|p| (abs(p.1) - 0.5).abs() < 1e-12));
        assert!(!c.curves[0].uncertain);
        let th = poly(&[(1, 0, 1.0), (0, 1, -1.0)]);
        let c = trace_essential_curves(&th, 128, 1e-9).unwrap();
        assert_eq!(c.branch_count, 1);
        assert!(c.curves[0]
            .points
            .iter()
            .all(|p| (abs(p.1) - 1.0).abs() < 1e-12));
        let th = poly(&[(2, 0, 1.0), (0, 1, -1.0)]);
        let c = trace_essential_curves(&th, 128, 1e-9).unwrap();
        assert_eq!(c.branch_count, 1);
        assert!(c.curves[0].points.len() >= 256);
    }

    #[test]
    fn curves_are_continuous() {
        let th = inner(&[(0, 0, 1.0), (0, 1, -0.5), (1, 0, -0.5)]);
        let c = trace_essential_curves(&th, 1024, 1e-9).unwrap();
        for curve in &c.curves {
            for w in curve.points.windows(2) {
                assert!(abs(w[1].1 - w[0].1) < 0.05);
            }
        }
    }

    #[test]
    fn grid_regions_of_annulus() {
        let th = inner(&[(0, 0, 1.0), (1, 1, -0.5)]);
        let map = decompose_fredholm_regions(&th, 1.1, 101).unwrap();
        let fred: Vec<_> = map.fredholm_components().collect();
        assert_eq!(fred.len(), 1);
        assert_eq!(fred[0].index, 1);
        let rep = fred[0].representative;
        assert!(abs(rep) > 0.5 && abs(rep) < 1.0);
    }

    #[test]
    fn projection_connectivity() {
        let grid = Grid::new(1.1, 151);
        assert!(factor_projection_connected(
            &P::from_real_terms(&[(1, 1, 1.0), (0, 0, -0.5)]),
            grid
        ));
        assert!(!factor_projection_connected(
            &P::from_real_terms(&[(2, 1, 2.0), (1, 0, -1.0), (0, 0, 0.1)]),
            grid
        ));
        assert!(factor_projection_connected(
            &P::from_real_terms(&[(2, 0, 1.0), (0, 2, -1.0)]),
            grid
        ));
    }

    #[test]
    fn gray_levels() {
        assert_eq!(gray_level(SpectralVerdict::RESOLVENT), 255);
        assert_eq!(gray_level(SpectralVerdict::ESSENTIAL), 0);
        assert_eq!(gray_level(SpectralVerdict::fredholm(1)), 160);
        assert_eq!(gray_level(SpectralVerdict::fredholm(9)), 1);
    }
}
