//! Rational inner functions `theta = z^k w^l p~ / p` and polynomial quotient inputs.

use crate::error::{Error, Result};
use crate::poly::{trim_threshold, BiPoly, UniPoly, Var};
use crate::roots::{uni_roots, RootSet, DEFAULT_CLUSTER_TOL};
use crate::scalar::{abs, cis, Real, C};

/// Whether the object models `theta = q/p` or a polynomial submodule generator `q` (`p = 1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Inner,
    Polynomial,
}

/// A factor declared irreducible by the caller, with its exponent.
#[derive(Clone, Debug, PartialEq)]
pub struct Factor<T: Real> {
    pub poly: BiPoly<T>,
    pub exp: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RationalInner<T: Real> {
    k: usize,
    l: usize,
    p: BiPoly<T>,
    q: BiPoly<T>,
    factors: Vec<Factor<T>>,
    mode: Mode,
    z_factor: bool,
    w_factor: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport<T: Real> {
    pub interior_min_modulus: T,
    pub torus_zero_candidates: Vec<(C<T>, C<T>)>,
    pub disk_times_circle_violations: Vec<(C<T>, C<T>)>,
}

impl<T: Real> StabilityReport<T> {
    pub fn is_stable(&self) -> bool {
        self.disk_times_circle_violations.is_empty()
    }
}

pub const DEFAULT_STABILITY_GRID: usize = 720;
pub const DEFAULT_STABILITY_TOL: f64 = 1e-6;

/// Builds `theta = z^k w^l p~/p`, rejecting denominators with zeros in the closed bidisk
/// away from the torus.
pub fn make_rational_inner<T: Real>(
    p: BiPoly<T>,
    k: usize,
    l: usize,
    factors: Vec<Factor<T>>,
) -> Result<RationalInner<T>> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let report = validate_stability(&p, DEFAULT_STABILITY_GRID, T::lit(DEFAULT_STABILITY_TOL));
    if let Some(&(z, w)) = report.disk_times_circle_violations.first() {
        return Err(Error::NotInner {
            z_re: z.re.as_f64(),
            z_im: z.im.as_f64(),
            w_re: w.re.as_f64(),
            w_im: w.im.as_f64(),
        });
    }
    let q = p.reflect_self().shift(k, l);
    RationalInner::assemble(k, l, p, q, factors, Mode::Inner)
}

/// Polynomial-mode object: numerator `q`, denominator 1.
pub fn make_polynomial<T: Real>(q: BiPoly<T>, factors: Vec<Factor<T>>) -> Result<RationalInner<T>> {
    if q.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let one = BiPoly::constant(C::new(T::one(), T::zero()));
    RationalInner::assemble(0, 0, one, q, factors, Mode::Polynomial)
}

impl<T: Real> RationalInner<T> {
    fn assemble(
        k: usize,
        l: usize,
        p: BiPoly<T>,
        q: BiPoly<T>,
        factors: Vec<Factor<T>>,
        mode: Mode,
    ) -> Result<Self> {
        if !factors.is_empty() {
            check_factor_product(&q, &factors)?;
        }
        let z_factor = univariate_factor(&q, Var::Z);
        let w_factor = univariate_factor(&q, Var::W);
        Ok(Self {
            k,
            l,
            p,
            q,
            factors,
            mode,
            z_factor,
            w_factor,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn denominator(&self) -> &BiPoly<T> {
        &self.p
    }

    pub fn numerator(&self) -> &BiPoly<T> {
        &self.q
    }

    pub fn factors(&self) -> &[Factor<T>] {
        &self.factors
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// True when the numerator has a nonconstant factor depending on `z` alone.
    pub fn has_z_only_factor(&self) -> bool {
        self.z_factor
    }

    /// True when the numerator has a nonconstant factor depending on `w` alone.
    pub fn has_w_only_factor(&self) -> bool {
        self.w_factor
    }

    /// Numerator free of `w`: a finite Blaschke product in `z` (or a polynomial in `z`).
    pub fn is_pure_z(&self) -> bool {
        self.q.deg_w() == 0
    }

    pub fn eval(&self, z: C<T>, w: C<T>) -> C<T> {
        self.q.eval(z, w) / self.p.eval(z, w)
    }

    /// Same object in another precision.
    pub fn map_scalar<U: Real>(&self) -> RationalInner<U> {
        RationalInner {
            k: self.k,
            l: self.l,
            p: self.p.map_scalar(),
            q: self.q.map_scalar(),
            factors: self
                .factors
                .iter()
                .map(|f| Factor {
                    poly: f.poly.map_scalar(),
                    exp: f.exp,
                })
                .collect(),
            mode: self.mode,
            z_factor: self.z_factor,
            w_factor: self.w_factor,
        }
    }
}

fn check_factor_product<T: Real>(q: &BiPoly<T>, factors: &[Factor<T>]) -> Result<()> {
    let prod = factors
        .iter()
        .fold(BiPoly::constant(C::new(T::one(), T::zero())), |acc, f| {
            acc.mul(&f.poly.pow(f.exp))
        });
    let (dz, dw) = (q.deg_z().max(prod.deg_z()), q.deg_w().max(prod.deg_w()));
    let mut num = C::new(T::zero(), T::zero());
    let mut den = T::zero();
    for a in 0..=dz {
        for b in 0..=dw {
            let x = prod.coeff(a, b);
            num += x.conj() * q.coeff(a, b);
            den += x.norm_sqr();
        }
    }
    if den == T::zero() {
        return Err(Error::FactorMismatch {
            residual: f64::INFINITY,
        });
    }
    let u = num / den;
    let residual = q.sub(&prod.scale(u)).max_abs() / q.max_abs().max(T::one());
    let unimodular = (abs(u) - T::one()).abs();
    let tol = T::lit(1e-10).max(T::eps() * T::lit(1e3));
    if residual > tol || unimodular > tol {
        return Err(Error::FactorMismatch {
            residual: residual.max(unimodular).as_f64(),
        });
    }
    Ok(())
}

/// Detects a nonconstant factor of `q` depending only on `var`: a common root of the
/// coefficient polynomials of the other variable.
pub fn univariate_factor<T: Real>(q: &BiPoly<T>, var: Var) -> bool {
    let q = match var {
        Var::Z => q.clone(),
        Var::W => q.swap_vars(),
    };
    let coeffs: Vec<UniPoly<T>> = q
        .w_coefficients()
        .into_iter()
        .filter(|c| !c.is_zero())
        .collect();
    let Some(seed) = coeffs.iter().min_by_key(|c| c.degree()) else {
        return false;
    };
    if seed.degree() == 0 {
        return false;
    }
    let Ok(roots) = uni_roots(seed, T::lit(DEFAULT_CLUSTER_TOL)) else {
        return false;
    };
    let tol = T::lit(1e-8).max(T::eps().sqrt());
    roots.roots().iter().any(|&(r, _)| {
        let base = abs(r).max(T::one());
        coeffs.iter().all(|c| {
            let scale = c
                .coeffs()
                .iter()
                .enumerate()
                .fold(T::zero(), |acc, (i, a)| acc + abs(*a) * base.powi(i as i32));
            abs(c.eval(r)) <= tol * scale
        })
    })
}

/// Sampling-based stability check of a denominator.
pub fn validate_stability<T: Real>(p: &BiPoly<T>, grid_n: usize, tol: T) -> StabilityReport<T> {
    let radii = [
        0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99, 1.0,
    ];
    let one = T::one();
    let mut torus = Vec::new();
    let mut viol = Vec::new();
    let grid_n = grid_n.max(1);
    let two_pi = T::two_pi();
    for &r in &radii {
        let r = T::lit(r);
        let count = if r == T::zero() { 1 } else { grid_n };
        for i in 0..count {
            let lambda = cis(two_pi * T::lit(i as f64) / T::lit(grid_n as f64)) * r;
            let fiber = p.fiber(lambda, Var::Z);
            if fiber_vanishes(p, &fiber, lambda) {
                viol.push((lambda, C::new(T::zero(), T::zero())));
                continue;
            }
            let Ok(roots) = uni_roots(&fiber, T::lit(DEFAULT_CLUSTER_TOL)) else {
                continue;
            };
            for &(w, _) in roots.roots() {
                let m = abs(w);
                if m < one - tol {
                    viol.push((lambda, w));
                } else if r == one && (m - one).abs() < tol {
                    torus.push((lambda, w));
                }
            }
        }
    }
    for (var, flip) in [(Var::Z, false), (Var::W, true)] {
        if let Some(r) = univariate_root_in_disk(p, var, tol) {
            let zero = C::new(T::zero(), T::zero());
            viol.push(if flip { (zero, r) } else { (r, zero) });
        }
    }
    let coarse = (grid_n / 10).max(8);
    let pts: Vec<C<T>> = radii[..radii.len() - 1]
        .iter()
        .flat_map(|&r| {
            let n = if r == 0.0 { 1 } else { coarse };
            (0..n).map(move |i| cis(two_pi * T::lit(i as f64) / T::lit(coarse as f64)) * T::lit(r))
        })
        .collect();
    let mut min_mod = T::max_value().unwrap_or_else(|| T::lit(f64::MAX));
    for &z in &pts {
        for &w in &pts {
            min_mod = min_mod.min(abs(p.eval(z, w)));
        }
    }
    StabilityReport {
        interior_min_modulus: min_mod,
        torus_zero_candidates: torus,
        disk_times_circle_violations: viol,
    }
}

/// A root `r` with `|r| < 1 - tol` of a factor of `p` depending only on `var`.
fn univariate_root_in_disk<T: Real>(p: &BiPoly<T>, var: Var, tol: T) -> Option<C<T>> {
    if !univariate_factor(p, var) {
        return None;
    }
    let q = match var {
        Var::Z => p.clone(),
        Var::W => p.swap_vars(),
    };
    let coeffs: Vec<UniPoly<T>> = q
        .w_coefficients()
        .into_iter()
        .filter(|c| !c.is_zero())
        .collect();
    let seed = coeffs.iter().min_by_key(|c| c.degree())?;
    let roots = uni_roots(seed, T::lit(DEFAULT_CLUSTER_TOL)).ok()?;
    let check = T::lit(1e-8).max(T::eps().sqrt());
    roots
        .roots()
        .iter()
        .find(|&&(r, _)| {
            abs(r) < T::one() - tol
                && coeffs.iter().all(|c| {
                    let scale = c.coeffs().iter().fold(T::zero(), |acc, a| acc + abs(*a));
                    abs(c.eval(r)) <= check * scale
                })
        })
        .map(|&(r, _)| r)
}

fn fiber_vanishes<T: Real>(p: &BiPoly<T>, fiber: &UniPoly<T>, lambda: C<T>) -> bool {
    let base = abs(lambda).max(T::one());
    let scale = p.max_abs() * base.powi(p.deg_z() as i32) * T::lit((p.deg_z() + 1) as f64);
    fiber
        .coeffs()
        .iter()
        .all(|c| abs(*c) <= trim_threshold::<T>() * T::lit(100.0) * scale)
}

/// Roots in `w` of `q(lambda, w)`, with multiplicity.
pub fn numerator_fiber_roots<T: Real>(
    theta: &RationalInner<T>,
    lambda: C<T>,
) -> Result<RootSet<T>> {
    let fiber = theta.q.fiber(lambda, Var::Z);
    if fiber_vanishes(&theta.q, &fiber, lambda) {
        return Err(Error::ZeroFiber {
            re: lambda.re.as_f64(),
            im: lambda.im.as_f64(),
        });
    }
    uni_roots(&fiber, T::lit(DEFAULT_CLUSTER_TOL))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c64;

    type P = BiPoly<f64>;

    fn ex291(t: f64) -> RationalInner<f64> {
        make_rational_inner(P::from_real_terms(&[(0, 0, 1.0), (1, 1, -t)]), 0, 0, vec![]).unwrap()
    }

    #[test]
    fn example_numerators() {
        let th = ex291(0.5);
        assert_eq!(
            th.numerator(),
            &P::from_real_terms(&[(1, 1, 1.0), (0, 0, -0.5)])
        );
        let th = make_rational_inner(
            P::from_real_terms(&[(0, 0, 1.0), (0, 1, -0.5), (1, 0, -0.5)]),
            0,
            0,
            vec![],
        )
        .unwrap();
        assert_eq!(
            th.numerator(),
            &P::from_real_terms(&[(1, 1, 1.0), (1, 0, -0.5), (0, 1, -0.5)])
        );
        let th = make_rational_inner(
            P::from_real_terms(&[(0, 0, 2.0), (1, 1, -1.0), (2, 1, 0.1)]),
            0,
            0,
            vec![],
        )
        .unwrap();
        assert_eq!(
            th.numerator(),
            &P::from_real_terms(&[(2, 1, 2.0), (1, 0, -1.0), (0, 0, 0.1)])
        );
    }

    #[test]
    fn interior_zero_is_rejected() {
        let err = make_rational_inner(
            P::from_real_terms(&[(1, 0, 1.0), (0, 0, -0.5)]),
            0,
            0,
            vec![],
        )
        .unwrap_err();
        match err {
            Error::NotInner { z_re, .. } => assert!((z_re - 0.5).abs() < 1e-9),
            e => panic!("unexpected {e:?}"),
        }
        let err = make_rational_inner(
            P::from_real_terms(&[(0, 0, 0.3), (1, 1, -1.0)]),
            0,
            0,
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotInner { .. }));
    }

    #[test]
    fn stability_reports() {
        let rep = validate_stability(&P::from_real_terms(&[(0, 0, 1.0), (1, 1, -0.5)]), 720, 1e-6);
        assert!(rep.is_stable());
        assert!(rep.interior_min_modulus > 0.4);
        let rep = validate_stability(&P::from_real_terms(&[(1, 0, 1.0), (0, 0, -0.5)]), 720, 1e-6);
        assert!(rep
            .disk_times_circle_violations
            .iter()
            .any(|v| (v.0 - c64::<f64>(0.5, 0.0)).norm() < 1e-9));
        let rep = validate_stability(
            &P::from_real_terms(&[(0, 0, 2.0), (1, 1, -1.0), (2, 1, 0.1)]),
            720,
            1e-6,
        );
        assert!(rep.is_stable());
        let rep = validate_stability(
            &P::from_real_terms(&[(0, 0, 1.0), (0, 1, -0.5), (1, 0, -0.5)]),
            720,
            1e-6,
        );
        assert!(rep.is_stable());
        assert!(!rep.torus_zero_candidates.is_empty());
    }

    #[test]
    fn fiber_roots() {
        let r = numerator_fiber_roots(&ex291(0.5), c64(0.8, 0.0)).unwrap();
        assert_eq!(r.total(), 1);
        assert!((r.roots()[0].0.re - 0.625).abs() < 1e-14);
        let th = make_rational_inner(
            P::from_real_terms(&[(0, 0, 2.0), (1, 1, -1.0), (2, 1, 0.1)]),
            0,
            0,
            vec![],
        )
        .unwrap();
        let r = numerator_fiber_roots(&th, c64(0.25, 0.0)).unwrap();
        assert!((r.roots()[0].0.re - 1.2).abs() < 1e-13);
        let th = make_polynomial(P::from_real_terms(&[(2, 0, 1.0), (0, 2, -1.0)]), vec![]).unwrap();
        let r = numerator_fiber_roots(&th, c64(0.5, 0.0)).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r.roots()[0].0.re + 0.5).abs() < 1e-14 && (r.roots()[1].0.re - 0.5).abs() < 1e-14);
    }

    #[test]
    fn zero_fiber_errors() {
        let q = P::from_real_terms(&[(1, 1, 1.0), (0, 1, -0.5)]);
        let th = make_polynomial(q, vec![]).unwrap();
        assert!(th.has_z_only_factor() && th.has_w_only_factor());
        assert!(matches!(
            numerator_fiber_roots(&th, c64(0.5, 0.0)),
            Err(Error::ZeroFiber { .. })
        ));
    }

    #[test]
    fn univariate_factors_detected() {
        let zw = P::from_real_terms(&[(1, 0, 1.0), (0, 1, -1.0)]);
        let zf = P::from_real_terms(&[(1, 0, 1.0), (0, 0, -0.3)]);
        assert!(!univariate_factor(&zw, Var::Z));
        assert!(univariate_factor(&zw.mul(&zf), Var::Z));
        assert!(!univariate_factor(&zw.mul(&zf), Var::W));
        assert!(univariate_factor(
            &P::from_real_terms(&[(1, 1, 1.0)]),
            Var::W
        ));
    }

    #[test]
    fn factor_product_is_checked() {
        let a = P::from_real_terms(&[(1, 0, 1.0), (0, 1, -1.0)]);
        let b = P::from_real_terms(&[(1, 0, 1.0), (0, 1, 1.0)]);
        let q = a.mul(&b);
        let ok = make_polynomial(
            q.clone(),
            vec![
                Factor {
                    poly: a.clone(),
                    exp: 1,
                },
                Factor {
                    poly: b.scale(c64(-1.0, 0.0)),
                    exp: 1,
                },
            ],
        );
        assert!(ok.is_ok());
        let bad = make_polynomial(q, vec![Factor { poly: a, exp: 2 }]);
        assert!(matches!(bad, Err(Error::FactorMismatch { .. })));
    }

    #[test]
    fn boundary_modulus_is_one() {
        let th = make_rational_inner(
            P::from_real_terms(&[(0, 0, 2.0), (1, 1, -1.0), (2, 1, 0.1)]),
            1,
            2,
            vec![],
        )
        .unwrap();
        for i in 0..50 {
            let z = cis(0.37 * i as f64);
            let w = cis(1.91 * i as f64 + 0.2);
            assert!((th.eval(z, w).norm() - 1.0).abs() < 1e-12);
        }
    }
}
