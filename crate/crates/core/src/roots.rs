//! Univariate root finding: balanced companion matrix, Newton polish, multiplicity clustering.

use nalgebra::{DMatrix, Schur};

use crate::error::{Error, Result};
use crate::poly::UniPoly;
use crate::scalar::{abs, Real, C};

/// Default distance below which numerically computed roots are merged.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-7;

/// Roots of a univariate polynomial with multiplicities, sorted by `(re, im)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RootSet<T: Real> {
    roots: Vec<(C<T>, usize)>,
}

impl<T: Real> RootSet<T> {
    pub fn new(mut roots: Vec<(C<T>, usize)>) -> Self {
        roots.sort_by(|a, b| {
            a.0.re
                .partial_cmp(&b.0.re)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(
                    a.0.im
                        .partial_cmp(&b.0.im)
                        .unwrap_or(std::cmp::Ordering::Equal),
                )
        });
        Self { roots }
    }

    pub fn roots(&self) -> &[(C<T>, usize)] {
        &self.roots
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    /// Sum of multiplicities.
    pub fn total(&self) -> usize {
        self.roots.iter().map(|r| r.1).sum()
    }

    /// Roots repeated according to multiplicity.
    pub fn flat(&self) -> Vec<C<T>> {
        self.roots
            .iter()
            .flat_map(|&(r, m)| std::iter::repeat_n(r, m))
            .collect()
    }

    /// Restriction to roots with `|root| < radius`.
    pub fn inside(&self, radius: T) -> Self {
        Self {
            roots: self
                .roots
                .iter()
                .copied()
                .filter(|r| abs(r.0) < radius)
                .collect(),
        }
    }
}

/// All complex roots of `p` with multiplicity.
pub fn uni_roots<T: Real>(p: &UniPoly<T>, cluster_tol: T) -> Result<RootSet<T>> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let c = p.coeffs();
    let zeros_at_origin = c
        .iter()
        .take_while(|x| x.re == T::zero() && x.im == T::zero())
        .count();
    let reduced = UniPoly::new(c[zeros_at_origin..].to_vec());
    let mut raw: Vec<C<T>> = match reduced.degree() {
        0 => vec![],
        1 => {
            let r = reduced.coeffs();
            vec![-r[0] / r[1]]
        }
        _ => companion_eigenvalues(&reduced)?
            .into_iter()
            .map(|x| polish(&reduced, x))
            .collect(),
    };
    let mut clusters = cluster(&mut raw, cluster_tol);
    clusters = merge_multiple(&reduced, clusters);
    if zeros_at_origin > 0 {
        clusters.push((C::new(T::zero(), T::zero()), zeros_at_origin));
    }
    Ok(RootSet::new(clusters))
}

fn companion_eigenvalues<T: Real>(p: &UniPoly<T>) -> Result<Vec<C<T>>> {
    let n = p.degree();
    let c = p.coeffs();
    let lead = c[n];
    let mut m = DMatrix::<C<T>>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = C::new(T::one(), T::zero());
    }
    for i in 0..n {
        m[(i, n - 1)] = -c[i] / lead;
    }
    balance(&mut m);
    let schur = Schur::try_new(m, T::eps(), 100 * n.max(10))
        .ok_or_else(|| Error::Numerical("companion Schur iteration did not converge".into()))?;
    let ev = schur
        .eigenvalues()
        .ok_or_else(|| Error::Numerical("companion eigenvalues unavailable".into()))?;
    Ok(ev.iter().copied().collect())
}

/// Diagonal similarity scaling by powers of two that equalizes row and column norms.
fn balance<T: Real>(m: &mut DMatrix<C<T>>) {
    let n = m.nrows();
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let l1 = |z: C<T>| z.re.abs() + z.im.abs();
    for _ in 0..100 {
        let mut converged = true;
        for i in 0..n {
            let mut col = T::zero();
            let mut row = T::zero();
            for j in 0..n {
                if j != i {
                    col += l1(m[(j, i)]);
                    row += l1(m[(i, j)]);
                }
            }
            if col == T::zero() || row == T::zero() {
                continue;
            }
            let sum = col + row;
            let mut f = T::one();
            let mut g = row / two;
            while col < g {
                f *= two;
                col *= four;
            }
            g = row * two;
            while col > g {
                f /= two;
                col /= four;
            }
            if (col + row) / f < T::lit(0.95) * sum {
                converged = false;
                let finv = T::one() / f;
                for j in 0..n {
                    m[(i, j)] *= finv;
                    m[(j, i)] *= f;
                }
            }
        }
        if converged {
            break;
        }
    }
}

/// Three safeguarded Newton steps; a step is kept only if it reduces `|p|`.
fn polish<T: Real>(p: &UniPoly<T>, mut x: C<T>) -> C<T> {
    let mut fx = abs(p.eval(x));
    for _ in 0..3 {
        let (v, d) = p.eval_with_derivative(x);
        if abs(d) == T::zero() || fx == T::zero() {
            break;
        }
        let cand = x - v / d;
        let fc = abs(p.eval(cand));
        if fc < fx {
            x = cand;
            fx = fc;
        } else {
            break;
        }
    }
    x
}

/// Greedy merging of roots closer than `tol` to a seed root.
fn cluster<T: Real>(raw: &mut [C<T>], tol: T) -> Vec<(C<T>, usize)> {
    raw.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap_or(std::cmp::Ordering::Equal));
    let mut used = vec![false; raw.len()];
    let mut out = Vec::new();
    for i in 0..raw.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut sum = raw[i];
        let mut count = 1usize;
        for j in i + 1..raw.len() {
            if !used[j] && abs(raw[j] - raw[i]) < tol {
                used[j] = true;
                sum += raw[j];
                count += 1;
            }
        }
        out.push((sum / T::lit(count as f64), count));
    }
    out
}

/// Groups nearby clusters into a single multiple root when their spread is no larger than
/// the perturbation roundoff alone produces for an `m`-fold root, roughly `eps^(1/m)`.
fn merge_multiple<T: Real>(p: &UniPoly<T>, clusters: Vec<(C<T>, usize)>) -> Vec<(C<T>, usize)> {
    let k = clusters.len();
    if k < 2 {
        return clusters;
    }
    let loose = {
        let a = T::lit(1e-3);
        let b = T::eps().powf(T::lit(1.0 / 3.0)) * T::lit(10.0);
        if a > b {
            a
        } else {
            b
        }
    };
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        parent[i] = r;
        r
    }
    for i in 0..k {
        for j in i + 1..k {
            if abs(clusters[i].0 - clusters[j].0) < loose {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b] = a;
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut index_of = vec![usize::MAX; k];
    for i in 0..k {
        let r = find(&mut parent, i);
        if index_of[r] == usize::MAX {
            index_of[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[index_of[r]].push(i);
    }
    let lead = abs(p.leading());
    let mut out = Vec::new();
    for g in groups {
        if g.len() == 1 {
            out.push(clusters[g[0]]);
            continue;
        }
        let m: usize = g.iter().map(|&i| clusters[i].1).sum();
        let c = g.iter().fold(C::new(T::zero(), T::zero()), |acc, &i| {
            acc + clusters[i].0 * T::lit(clusters[i].1 as f64)
        }) / T::lit(m as f64);
        let base = abs(c).max(T::one());
        let scale = p
            .coeffs()
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (i, a)| acc + abs(*a) * base.powi(i as i32));
        let spread = g
            .iter()
            .fold(T::zero(), |acc, &i| acc.max(abs(clusters[i].0 - c)));
        let predicted = (T::eps() * scale / lead).powf(T::one() / T::lit(m as f64));
        if spread <= T::lit(50.0) * predicted {
            out.push((refine_multiple(p, c, m, spread), m));
        } else {
            out.extend(g.iter().map(|&i| clusters[i]));
        }
    }
    out
}

/// Newton on the `(m-1)`-th derivative, where an `m`-fold root is simple.
fn refine_multiple<T: Real>(p: &UniPoly<T>, c: C<T>, m: usize, spread: T) -> C<T> {
    let d = (1..m).fold(p.clone(), |q, _| q.derivative());
    let mut x = c;
    for _ in 0..6 {
        let (v, dv) = d.eval_with_derivative(x);
        if abs(dv) == T::zero() {
            break;
        }
        let next = x - v / dv;
        if abs(next - c) > spread * T::lit(2.0) {
            break;
        }
        x = next;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c64;

    fn roots(c: &[f64]) -> RootSet<f64> {
        uni_roots(&UniPoly::from_real(c), 1e-7).unwrap()
    }

    #[test]
    fn square_roots_of_minus_one() {
        let r = roots(&[1.0, 0.0, 1.0]);
        assert_eq!(r.len(), 2);
        assert!((r.roots()[0].0 - c64::<f64>(0.0, -1.0)).norm() < 1e-14);
        assert!((r.roots()[1].0 - c64::<f64>(0.0, 1.0)).norm() < 1e-14);
        assert!(r.roots().iter().all(|x| x.1 == 1));
    }

    #[test]
    fn double_root() {
        let r = roots(&[0.25, -1.0, 1.0]);
        assert_eq!(r.roots().len(), 1);
        assert_eq!(r.roots()[0].1, 2);
        assert!((r.roots()[0].0.re - 0.5).abs() < 1e-10);
    }

    #[test]
    fn linear() {
        let r = roots(&[-0.5, 0.8]);
        assert_eq!(r.total(), 1);
        assert!((r.roots()[0].0.re - 0.625).abs() < 1e-15);
    }

    #[test]
    fn triple_and_quadruple_roots() {
        let z = c64::<f64>(0.2, 0.0);
        let p = UniPoly::from_roots(&[z, z, z]);
        let r = uni_roots(&p, 1e-7).unwrap();
        assert_eq!(r.roots().len(), 1);
        assert_eq!(r.roots()[0].1, 3);
        let a = c64::<f64>(0.3, -0.4);
        let p = UniPoly::from_roots(&[a, a, a, a, c64(-0.5, 0.1)]);
        let r = uni_roots(&p, 1e-7).unwrap();
        assert_eq!(r.total(), 5);
        assert!(r
            .roots()
            .iter()
            .any(|x| x.1 == 4 && (x.0 - a).norm() < 1e-8));
    }

    #[test]
    fn roots_at_origin_are_exact() {
        let r = roots(&[0.0, 0.0, -1.0]);
        assert_eq!(r.roots(), &[(c64(0.0, 0.0), 2)]);
    }

    #[test]
    fn close_distinct_roots_stay_separate() {
        let p = UniPoly::from_roots(&[c64::<f64>(0.5, 0.0), c64(0.5 + 1e-4, 0.0)]);
        let r = uni_roots(&p, 1e-7).unwrap();
        assert_eq!(r.len(), 2);
    }

    #[test]
    fn constant_has_no_roots_and_zero_errors() {
        assert!(roots(&[3.0]).is_empty());
        assert!(matches!(
            uni_roots(&UniPoly::<f64>::from_real(&[0.0]), 1e-7),
            Err(Error::ZeroPolynomial)
        ));
    }

    #[test]
    fn single_precision() {
        let r = uni_roots(&UniPoly::<f32>::from_real(&[1.0, 0.0, 1.0]), 1e-4).unwrap();
        assert_eq!(r.total(), 2);
        assert!((r.roots()[1].0.im - 1.0).abs() < 1e-5);
    }
}
