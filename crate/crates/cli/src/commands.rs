use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use bidisk::bundle::{bundle_jets, connection_matrix, curvature_samples, gram, FrameField};
use bidisk::io::{complex, matrix, strict_json, InnerInput, PolyJson};
use bidisk::quotient::{
    commutant_dim_estimate, compress_shift, kernel_residual, quotient_basis, weighted_shift_weights,
};
use bidisk::reduce::{safe_radius, strict_reducibility, ReduceOptions};
use bidisk::spectrum::{
    cowen_douglas, decompose_with_tol, factor_projection_connected, trace_essential_curves,
    write_csv, write_pgm, Grid,
};
use bidisk::{kernel_frame, BiPoly64, FredholmRegionMap64, RationalInner64, Var, C};

use crate::{CliError, Config};

/// Tolerance of the essential-curve tracer.
pub const CURVE_TOL: f64 = 1e-9;

pub struct Job<'a> {
    pub desc: &'a InnerInput,
    pub theta: &'a RationalInner64,
    pub cfg: &'a Config,
    pub out: &'a Path,
}

type Outcome = Result<Vec<PathBuf>, CliError>;

impl Job<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn header(&self) -> Value {
        json!({ "config": self.cfg, "input": self.desc })
    }

    fn region_map(&self) -> Result<FredholmRegionMap64, CliError> {
        Ok(decompose_with_tol(
            self.theta,
            self.cfg.radius,
            self.cfg.grid,
            self.cfg.tol,
        )?)
    }

    fn reduce_options(&self) -> ReduceOptions {
        ReduceOptions {
            seed: self.cfg.seed,
            max_order: self.cfg.max_order,
            product_length: self.cfg.product_length,
            ..ReduceOptions::default()
        }
    }
}

fn write_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    write_file(path, |w| writeln!(w, "{text}"))
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

fn components_json(map: &FredholmRegionMap64) -> Value {
    json!(map
        .components
        .iter()
        .map(|c| json!({
            "label": c.label,
            "kind": c.kind.as_str(),
            "index": c.index,
            "representative": complex(c.representative),
            "cells": c.cell_count,
            "thin": c.thin,
        }))
        .collect::<Vec<_>>())
}

fn factor_polys(theta: &RationalInner64) -> Vec<BiPoly64> {
    if theta.factors().is_empty() {
        vec![theta.numerator().clone()]
    } else {
        theta.factors().iter().map(|f| f.poly.clone()).collect()
    }
}

pub fn analyze(job: &Job) -> Outcome {
    let (theta, cfg) = (job.theta, job.cfg);
    let map = job.region_map()?;
    let curves = trace_essential_curves(theta, cfg.curve_steps, CURVE_TOL)?;
    let grid = Grid::new(cfg.radius, cfg.grid);
    let per_factor: Vec<Value> = factor_polys(theta)
        .iter()
        .map(|f| json!({ "factor": PolyJson::from_poly(f), "connected_projection": factor_projection_connected(f, grid) }))
        .collect();
    let reducibility = match strict_reducibility(theta, &map, &job.reduce_options()) {
        Ok(r) => {
            json!({ "verdict": r.verdict.as_str(), "global_commutant_dim": r.global_commutant_dim })
        }
        Err(e) => json!({ "verdict": Value::Null, "reason": e.to_string() }),
    };
    let report = merge(
        job.header(),
        json!({
            "components": components_json(&map),
            "index_vector": map.alpha(),
            "essential_curve_count": curves.branch_count,
            "cowen_douglas": { "verdict": cowen_douglas(theta, grid), "factors": per_factor },
            "reducibility": reducibility,
        }),
    );
    let path = job.path("analyze.json");
    write_json(&path, &report)?;
    Ok(vec![path])
}

pub fn spectrum_map(job: &Job) -> Outcome {
    let map = job.region_map()?;
    let csv = job.path("spectrum.csv");
    let pgm = job.path("spectrum.pgm");
    let summary = job.path("spectrum.json");
    write_file(&csv, |w| write_csv(&map, w))?;
    write_file(&pgm, |w| write_pgm(&map, w))?;
    write_json(
        &summary,
        &merge(
            job.header(),
            json!({ "components": components_json(&map), "index_vector": map.alpha() }),
        ),
    )?;
    Ok(vec![csv, pgm, summary])
}

pub fn curves(job: &Job) -> Outcome {
    let curves = trace_essential_curves(job.theta, job.cfg.curve_steps, CURVE_TOL)?;
    let list: Vec<Value> = curves
        .curves
        .iter()
        .map(|c| {
            json!({
                "uncertain": c.uncertain,
                "points": c.points.iter().map(|(t, z)| [*t, z.re, z.im]).collect::<Vec<_>>(),
            })
        })
        .collect();
    let path = job.path("curves.json");
    write_json(
        &path,
        &merge(
            job.header(),
            json!({ "branch_count": curves.branch_count, "curves": list }),
        ),
    )?;
    Ok(vec![path])
}

fn bundle_point(job: &Job, lambda: C<f64>) -> Result<Value, bidisk::Error> {
    let theta = job.theta;
    let field = FrameField::new(theta, lambda)?;
    let frame = field.at(lambda)?;
    let connection = connection_matrix(|z| Ok(gram(&field.at(z)?)), lambda, job.cfg.fd_step)?;
    let radius = safe_radius(theta, lambda)?;
    let curvature = curvature_samples(|z| field.at(z), lambda, radius, 0)?;
    let jets = bundle_jets(|z| field.at(z), lambda, radius, 2)?;
    Ok(json!({
        "lambda": complex(lambda),
        "nodes": field.nodes().iter().map(|&(z, m)| json!({ "zeta": complex(z), "multiplicity": m })).collect::<Vec<_>>(),
        "gram": matrix(&gram(&frame)),
        "connection": matrix(&connection.matrix),
        "curvature": matrix(&curvature[0].raw),
        "curvature_orthonormal": matrix(&curvature[0].orthonormal),
        "orthonormal_transform": matrix(&jets.cholesky),
        "jet_radius": radius,
    }))
}

pub fn bundle(job: &Job) -> Outcome {
    let points: Vec<C<f64>> = if job.cfg.lambda.is_empty() {
        let map = job.region_map()?;
        map.fredholm_components()
            .filter(|c| !c.thin)
            .map(|c| c.representative)
            .collect()
    } else {
        job.cfg.lambda.iter().map(|p| C::new(p[0], p[1])).collect()
    };
    let reports: Vec<Value> = points
        .iter()
        .map(|&z| {
            bundle_point(job, z)
                .unwrap_or_else(|e| json!({ "lambda": complex(z), "error": e.to_string() }))
        })
        .collect();
    let path = job.path("bundle.json");
    write_json(&path, &merge(job.header(), json!({ "points": reports })))?;
    Ok(vec![path])
}

pub fn reduce_check(job: &Job) -> Outcome {
    let map = job.region_map()?;
    let report = strict_reducibility(job.theta, &map, &job.reduce_options())?;
    let path = job.path("reduce.json");
    write_json(&path, &merge(job.header(), strict_json(&report)))?;
    Ok(vec![path])
}

/// `(m, n)` when the polynomial is a multiple of `z^m - w^n`.
fn power_difference(q: &BiPoly64) -> Option<(usize, usize)> {
    let terms: Vec<(usize, usize, C<f64>)> = q.terms().filter(|t| t.2.norm() > 0.0).collect();
    match terms.as_slice() {
        [(0, n, b), (m, 0, a)] | [(m, 0, a), (0, n, b)]
            if *m > 0 && *n > 0 && (*a + *b).norm() <= 1e-14 * a.norm() =>
        {
            Some((*m, *n))
        }
        _ => None,
    }
}

pub fn quotient_lab(job: &Job) -> Outcome {
    let (theta, cfg) = (job.theta, job.cfg);
    let q = theta.numerator();
    let mut estimates = Vec::new();
    let mut norm = 0.0;
    let mut overflow = 0.0_f64;
    for degree in [cfg.degree, cfg.degree + 2] {
        let basis = quotient_basis(q, degree)?;
        let shift = compress_shift(&basis, Var::Z);
        if degree == cfg.degree {
            norm = shift.norm();
            overflow = shift.overflow.iter().copied().fold(0.0, f64::max);
        }
        estimates.push(json!({ "degree": degree, "quotient_dim": basis.dim(), "commutant_dim": commutant_dim_estimate(&shift, cfg.interior_degree)? }));
    }
    let residuals: Vec<Value> = cfg
        .lambda
        .iter()
        .map(|p| {
            let z = C::new(p[0], p[1]);
            match kernel_frame(theta, z) {
                Ok(f) => {
                    json!({ "lambda": p, "residual": kernel_residual(theta, z, &f, cfg.degree) })
                }
                Err(e) => json!({ "lambda": p, "error": e.to_string() }),
            }
        })
        .collect();
    let mut paths = Vec::new();
    let weights = match power_difference(q) {
        Some((m, n)) => {
            let table = weighted_shift_weights::<f64>(m, n, cfg.degree)?;
            let csv = job.path("weights.csv");
            let mut text = String::from("N,formula,matrix,abs_diff\n");
            for r in &table.rows {
                let _ = writeln!(
                    text,
                    "{},{:.16e},{:.16e},{:.16e}",
                    r.level, r.formula, r.matrix, r.diff
                );
            }
            write_file(&csv, |w| w.write_all(text.as_bytes()))?;
            paths.push(csv);
            json!({
                "m": m,
                "n": n,
                "multiplicity": table.multiplicity,
                "box_degree": table.box_degree,
                "max_abs_diff": table.rows.iter().map(|r| r.diff).fold(0.0, f64::max),
            })
        }
        None => Value::Null,
    };
    let path = job.path("quotient.json");
    write_json(
        &path,
        &merge(
            job.header(),
            json!({
                "shift_norm": norm,
                "max_overflow": overflow,
                "commutant_estimates": estimates,
                "residuals": residuals,
                "weights": weights,
            }),
        ),
    )?;
    paths.insert(0, path);
    Ok(paths)
}
