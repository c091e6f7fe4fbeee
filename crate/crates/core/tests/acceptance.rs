//! Acceptance suite: one PASS/FAIL line per criterion. Runs with its own harness so the
//! lines are printed regardless of output capture.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use bidisk::bundle::{FrameVector, KernelVector};
use bidisk::quotient::weight_formula;
use bidisk::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type P = BiPoly<f64>;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn c(re: f64, im: f64) -> C<f64> {
    C::new(re, im)
}

fn inner_fn(terms: &[(usize, usize, f64)]) -> RationalInner64 {
    make_rational_inner(P::from_real_terms(terms), 0, 0, vec![]).unwrap()
}

fn poly(q: P) -> RationalInner64 {
    make_polynomial(q, vec![]).unwrap()
}

fn linear(a: C<f64>, b: C<f64>) -> P {
    P::from_terms(&[(1, 0, a), (0, 1, b)])
}

fn random_disk_point(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> C<f64> {
    C::from_polar(
        rng.gen_range(lo..hi),
        rng.gen_range(0.0..std::f64::consts::TAU),
    )
}

/// Checks every cell against `expect`; cells where `expect` returns `None` are skipped.
fn misclassified(
    map: &FredholmRegionMap64,
    expect: impl Fn(C<f64>) -> Option<SpectralVerdict>,
) -> (usize, usize) {
    let n = map.grid.n;
    let mut checked = 0;
    let mut bad = 0;
    for j in 0..n {
        for i in 0..n {
            if let Some(e) = expect(map.grid.point(i, j)) {
                checked += 1;
                if map.verdict(i, j) != e {
                    bad += 1;
                }
            }
        }
    }
    (checked, bad)
}

fn annulus_example() -> Outcome {
    let th = inner_fn(&[(0, 0, 1.0), (1, 1, -0.5)]);
    let start = Instant::now();
    let map = decompose_fredholm_regions(&th, 1.1, 301).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let (checked, bad) = misclassified(&map, |z| {
        let r = z.norm();
        if r < 0.48 || r > 1.02 {
            Some(SpectralVerdict::RESOLVENT)
        } else if r > 0.52 && r < 0.98 {
            Some(SpectralVerdict::fredholm(1))
        } else {
            None
        }
    });
    // Inside the bands only the two neighbouring classes or the essential class may occur.
    let n = map.grid.n;
    let mut band_bad = 0;
    for j in 0..n {
        for i in 0..n {
            let r = map.grid.point(i, j).norm();
            let v = map.verdict(i, j);
            let near_inner = (r - 0.5).abs() <= 0.02;
            let near_outer = (r - 1.0).abs() <= 0.02;
            if near_inner || near_outer {
                let ok = v == SpectralVerdict::ESSENTIAL
                    || v == SpectralVerdict::RESOLVENT
                    || v == SpectralVerdict::fredholm(1);
                if !ok {
                    band_bad += 1;
                }
            }
        }
    }
    outcome(
        bad == 0 && band_bad == 0 && secs < 10.0,
        format!(
            "{checked} cells checked, {bad} misclassified, {band_bad} bad band cells, {secs:.2} s"
        ),
    )
}

fn disk_hole_example() -> Outcome {
    let th = inner_fn(&[(0, 0, 1.0), (0, 1, -0.5), (1, 0, -0.5)]);
    let centre = c(2.0 / 3.0, 0.0);
    let map = decompose_fredholm_regions(&th, 1.1, 301).unwrap();
    let (checked, bad) = misclassified(&map, |z| {
        let d = (z - centre).norm();
        let r = z.norm();
        if d < 1.0 / 3.0 - 0.02 || r > 1.02 {
            Some(SpectralVerdict::RESOLVENT)
        } else if d > 1.0 / 3.0 + 0.02 && r < 0.98 {
            Some(SpectralVerdict::fredholm(1))
        } else {
            None
        }
    });
    let curves = trace_essential_curves(&th, 1024, 1e-9).unwrap();
    let dev = curves
        .curves
        .iter()
        .flat_map(|cv| cv.points.iter())
        .map(|p| ((p.1 - centre).norm() - 1.0 / 3.0).abs())
        .fold(0.0, f64::max);
    let samples: usize = curves.curves.iter().map(|cv| cv.points.len()).sum();
    outcome(
        bad == 0 && dev < 1e-6 && samples >= 1024,
        format!("{checked} cells checked, {bad} misclassified, {samples} curve samples, max radial deviation {dev:.2e}"),
    )
}

fn disconnected_example() -> Outcome {
    let th = inner_fn(&[(0, 0, 2.0), (1, 1, -1.0), (2, 1, 0.1)]);
    let ring_bad = (0..360)
        .filter(|&k| {
            let z = C::from_polar(0.25, k as f64 * std::f64::consts::TAU / 360.0);
            classify_point(&th, z, 1e-6).unwrap() != SpectralVerdict::RESOLVENT
        })
        .count();
    let map = decompose_fredholm_regions(&th, 1.1, 301).unwrap();
    let alpha = map.alpha();
    let report = strict_reducibility(&th, &map, &ReduceOptions::default()).unwrap();
    outcome(
        ring_bad == 0 && alpha == vec![1, 1] && report.verdict == Verdict::Irreducible,
        format!(
            "{ring_bad}/360 ring points not resolvent, index vector {alpha:?}, verdict {}",
            report.verdict.as_str()
        ),
    )
}

fn power_frame_formulas() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut gram_err: f64 = 0.0;
    let mut conn_err: f64 = 0.0;
    for (m, n) in [(1, 2), (2, 2), (2, 3)] {
        for _ in 0..100 {
            let lam = random_disk_point(&mut rng, 0.05, 0.9);
            let r2 = lam.norm_sqr();
            let g = gram(&zm_wn_frame(m, n, lam).unwrap());
            let scale = 1.0 / ((1.0 - r2) * (1.0 - r2.powi(m as i32)));
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { scale } else { 0.0 };
                    gram_err = gram_err.max((g[(i, j)] - want).norm() / scale);
                }
            }
            let conn = connection_matrix(
                |z| Ok(gram(&zm_wn_frame(m, n, z)?)),
                lam,
                bundle::DEFAULT_FD_STEP,
            )
            .unwrap()
            .matrix;
            let coef = lam / (1.0 - r2)
                + lam * (m as f64) * r2.powi(m as i32 - 1) / (1.0 - r2.powi(m as i32));
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { coef } else { c(0.0, 0.0) };
                    conn_err = conn_err.max((conn[(i, j)] - want).norm());
                }
            }
        }
    }
    outcome(
        gram_err < 1e-10 && conn_err < 1e-6,
        format!("max relative Gram error {gram_err:.2e}, max connection error {conn_err:.2e}"),
    )
}

fn verdict_table() -> Outcome {
    let z = c(1.0, 0.0);
    let cases: Vec<(&str, P, Verdict)> = vec![
        (
            "z^2 - w^2",
            P::from_real_terms(&[(2, 0, 1.0), (0, 2, -1.0)]),
            Verdict::Reducible,
        ),
        (
            "(z - w)^2",
            linear(z, c(-1.0, 0.0)).pow(2),
            Verdict::Irreducible,
        ),
        (
            "(z - w)^3",
            linear(z, c(-1.0, 0.0)).pow(3),
            Verdict::Irreducible,
        ),
        (
            "(z - w)(z + w)",
            linear(z, c(-1.0, 0.0)).mul(&linear(z, c(1.0, 0.0))),
            Verdict::Reducible,
        ),
        (
            "(z - w)(z - 2w)",
            linear(z, c(-1.0, 0.0)).mul(&linear(z, c(-2.0, 0.0))),
            Verdict::Irreducible,
        ),
        (
            "(z - w)(z - 0.5i w)",
            linear(z, c(-1.0, 0.0)).mul(&linear(z, c(0.0, -0.5))),
            Verdict::Irreducible,
        ),
        (
            "(z - 0.5i w)(z + 0.5i w)",
            linear(z, c(0.0, -0.5)).mul(&linear(z, c(0.0, 0.5))),
            Verdict::Reducible,
        ),
    ];
    let mut hits = 0;
    let mut lines = Vec::new();
    for (name, q, want) in cases {
        let th = poly(q);
        let map = decompose_fredholm_regions(&th, 1.1, 151).unwrap();
        let rep = strict_reducibility(&th, &map, &ReduceOptions::default()).unwrap();
        if rep.verdict == want {
            hits += 1;
        } else {
            lines.push(format!("{name}: got {}", rep.verdict.as_str()));
        }
        if name == "z^2 - w^2" {
            // blocks (1, x2) and a four-dimensional commutant
            let ok = rep
                .per_component
                .iter()
                .all(|r| r.blocks == vec![(1, 2)] && r.commutant_dim == 4);
            if ok {
                hits += 1;
            } else {
                lines.push(format!(
                    "{name}: local structure {:?}",
                    rep.per_component
                        .iter()
                        .map(|r| (&r.blocks, r.commutant_dim))
                        .collect::<Vec<_>>()
                ));
            }
        } else if want == Verdict::Irreducible && !rep.shortcut && rep.global_commutant_dim != 1 {
            lines.push(format!(
                "{name}: global commutant dimension {}",
                rep.global_commutant_dim
            ));
            hits -= 1;
        }
    }
    outcome(hits == 8, format!("{hits}/8 verdicts {}", lines.join("; ")))
}

fn sum_difference_witness() -> Outcome {
    let cc = 0.1;
    let th = inner_fn(&[(0, 0, 2.0), (1, 2, -1.0), (2, 2, cc)]);
    let map = decompose_fredholm_regions(&th, 1.1, 301).unwrap();
    let report = strict_reducibility(&th, &map, &ReduceOptions::default()).unwrap();
    let rho = |lam: C<f64>| ((lam - cc) / (lam * lam * 2.0)).sqrt();
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    let mut node_err: f64 = 0.0;
    for j in 0..25 {
        for i in 0..25 {
            let lam = c(
                -1.0 + 2.0 * (i as f64 + 0.5) / 25.0,
                -1.0 + 2.0 * (j as f64 + 0.5) / 25.0,
            );
            let verdict = classify_point(&th, lam, 1e-6).unwrap();
            if verdict != SpectralVerdict::fredholm(2) || (lam - cc).norm() < 1e-3 {
                continue;
            }
            let r = rho(lam);
            // The witness nodes must be the numerator's fiber zeros in the disk.
            let mut roots: Vec<C<f64>> =
                numerator_fiber_roots(&th, lam).unwrap().inside(1.0).flat();
            roots.sort_by(|a, b| (a - r).norm().partial_cmp(&(b - r).norm()).unwrap());
            node_err = node_err
                .max((roots[0] - r).norm())
                .max((roots[1] + r).norm());
            let kp = KernelVector::single(FrameVector::new(lam, r, 0));
            let km = KernelVector::single(FrameVector::new(lam, -r, 0));
            let one = c(1.0, 0.0);
            let s = one / (r.conj() * 2.0);
            plus.push(bundle::KernelFrame {
                lambda: lam,
                vectors: vec![KernelVector::combine(
                    &[kp.clone(), km.clone()],
                    &[one, one],
                )],
            });
            minus.push(bundle::KernelFrame {
                lambda: lam,
                vectors: vec![KernelVector::combine(&[kp, km], &[s, -s])],
            });
        }
    }
    let check = cross_component_orthogonal(&plus, &minus);
    let internal = report
        .witness
        .as_ref()
        .map(|w| w.max_inner)
        .unwrap_or(f64::NAN);
    outcome(
        report.verdict == Verdict::Reducible && check.orthogonal && check.max_inner < 1e-8 && node_err < 1e-8,
        format!(
            "verdict {}, {} sample points, max cross inner product {:.2e}, computed witness {internal:.2e}",
            report.verdict.as_str(),
            plus.len(),
            check.max_inner
        ),
    )
}

fn weighted_shift() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for (m, n) in [(1, 1), (2, 2), (2, 3), (3, 2)] {
        let table = weighted_shift_weights::<f64>(m, n, 14).unwrap();
        ok &= table.multiplicity == n;
        let levels: Vec<usize> = table.rows.iter().map(|r| r.level).collect();
        ok &= levels == (0..=12).collect::<Vec<_>>() || (0..=12).all(|l| levels.contains(&l));
        for row in &table.rows {
            let formula: f64 = weight_formula(m, row.level);
            let independent =
                (((row.level / m) + 1) as f64).sqrt() / ((((row.level + 1) / m) + 1) as f64).sqrt();
            ok &= (formula - independent).abs() < 1e-15;
            worst = worst.max((row.matrix - independent).abs());
        }
    }
    outcome(ok && worst < 1e-10, format!("max weight error {worst:.2e}"))
}

/// Taylor coefficients of `K^{(j)}_zeta` in one variable, written out directly.
fn series_coefficients(zeta: C<f64>, j: usize, len: usize) -> Vec<C<f64>> {
    (0..len)
        .map(|b| {
            if b < j {
                return c(0.0, 0.0);
            }
            let falling: f64 = ((b - j + 1)..=b).map(|k| k as f64).product();
            zeta.conj().powu((b - j) as u32) * falling
        })
        .collect()
}

fn series_inner(u: &FrameVector<f64>, v: &FrameVector<f64>, degree: usize) -> C<f64> {
    let dot = |a: Vec<C<f64>>, b: Vec<C<f64>>| {
        a.iter()
            .zip(&b)
            .fold(c(0.0, 0.0), |s, (x, y)| s + x * y.conj())
    };
    let len = degree + 1;
    dot(
        series_coefficients(u.lambda, 0, len),
        series_coefficients(v.lambda, 0, len),
    ) * dot(
        series_coefficients(u.zeta, u.j, len),
        series_coefficients(v.zeta, v.j, len),
    )
}

fn kernel_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let u = FrameVector::new(
            random_disk_point(&mut rng, 0.0, 0.8),
            random_disk_point(&mut rng, 0.0, 0.8),
            rng.gen_range(0..3),
        );
        let v = FrameVector::new(
            random_disk_point(&mut rng, 0.0, 0.8),
            random_disk_point(&mut rng, 0.0, 0.8),
            rng.gen_range(0..3),
        );
        let closed = bundle::kernel_inner_product(&u, &v);
        let series = series_inner(&u, &v, 200);
        worst = worst.max((closed - series).norm() / series.norm().max(1.0));
    }
    let cases = [
        inner_fn(&[(0, 0, 1.0), (1, 1, -0.5)]),
        poly(linear(c(1.0, 0.0), c(-1.0, 0.0)).pow(2)),
        poly(P::from_real_terms(&[(2, 0, 1.0), (0, 2, -1.0)])),
        inner_fn(&[(0, 0, 1.0), (0, 1, -0.5), (1, 0, -0.5)]),
        poly(P::from_real_terms(&[(3, 0, 1.0), (0, 2, -1.0)])),
    ];
    let degree = 24;
    let mut passed = 0;
    let mut tried = 0;
    let mut worst_ratio: f64 = 0.0;
    while tried < 50 {
        let th = &cases[tried % cases.len()];
        let lam = random_disk_point(&mut rng, 0.2, 0.85);
        let Ok(frame) = kernel_frame(th, lam) else {
            continue;
        };
        tried += 1;
        let (r, jmax) = frame
            .vectors
            .iter()
            .flat_map(|v| v.terms.iter())
            .fold((lam.norm(), 0), |(r, j), t| {
                (r.max(t.1.zeta.norm()), j.max(t.1.j))
            });
        let bound = ((degree + 1) as f64).powi(jmax as i32) * r.powi(degree as i32);
        let res = kernel_residual(th, lam, &frame, degree);
        worst_ratio = worst_ratio.max(res / bound);
        if res < bound {
            passed += 1;
        }
    }
    outcome(
        worst < 1e-10 && passed == 50,
        format!("max inner product error {worst:.2e}, residuals {passed}/50 below tail bound (max ratio {worst_ratio:.2})"),
    )
}

fn commutant_estimates() -> Outcome {
    let cases: [(&str, P, usize); 4] = [
        (
            "z^2 - w^2",
            P::from_real_terms(&[(2, 0, 1.0), (0, 2, -1.0)]),
            4,
        ),
        (
            "z^3 - w^2",
            P::from_real_terms(&[(3, 0, 1.0), (0, 2, -1.0)]),
            4,
        ),
        ("(z - w)^2", linear(c(1.0, 0.0), c(-1.0, 0.0)).pow(2), 1),
        ("z - w", linear(c(1.0, 0.0), c(-1.0, 0.0)), 1),
    ];
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, q, want) in cases {
        let dims: Vec<usize> = [14, 16]
            .iter()
            .map(|&d| {
                let basis = quotient_basis(&q, d).unwrap();
                commutant_dim_estimate(&compress_shift(&basis, Var::Z), 10).unwrap()
            })
            .collect();
        ok &= dims.iter().all(|&d| d == want);
        lines.push(format!("{name} {dims:?}"));
    }
    outcome(ok, lines.join(", "))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("annulus spectrum on a 301 grid", annulus_example),
        (
            "disk-with-hole spectrum and essential circle",
            disk_hole_example,
        ),
        ("disconnected zero projection", disconnected_example),
        (
            "power-difference frame Gram and connection",
            power_frame_formulas,
        ),
        ("reducibility verdicts", verdict_table),
        ("sum/difference reducing sections", sum_difference_witness),
        ("weighted-shift weights", weighted_shift),
        ("kernel oracle and residuals", kernel_oracle),
        ("commutant dimension estimates", commutant_estimates),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        if !result.pass {
            failures += 1;
        }
        println!(
            "criterion {}: {} [{name}] {} ({:.1} s)",
            k + 1,
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
