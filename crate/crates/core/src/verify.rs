//! End-to-end self-checks: each check recomputes a known fact with the
//! toolkit and compares it against an independent value or oracle.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constants::{delta_oct, delta_tet, delta_tet_from_solid_angles, fcc_density, cell_volume_identity, pt};
use crate::density::{
    fitted_constant_growth, covering_chain_audit, density_bound_check, monte_carlo_covered_volume, DensityProbe,
};
use crate::error::Result;
use crate::geom::Point3;
use crate::lp::{
    branch_and_bound, face_score_demo, random_bounded_lp, simplex_max, vertex_enumeration_max, BnbOutcome,
    FaceScoreProblem, LpOutcome, RelaxableProblem, SeparableConcave,
};
use crate::packing::{fcc_packing, hcp_packing, saturate, Packing, Window};
use crate::stargraph::{
    canonical_form, classify_with, local_star, pent_star, star_graph, truncation_radius, GraphKind, ReferenceSet,
};
use crate::voronoi::{fcc_cell_volume, VertexFunction, VoronoiBuilder};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Knobs for [`run_all`].
#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Reference graphs to classify against.
    pub references: ReferenceSet,
    /// Samples for the Monte-Carlo covered-volume oracle.
    pub monte_carlo_samples: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            references: ReferenceSet::shipped().clone(),
            monte_carlo_samples: 10_000_000,
        }
    }
}

type Outcome = Result<(bool, String)>;
type NamedCheck<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn close(value: f64, expected: f64, tol: f64) -> bool {
    (value - expected).abs() <= tol
}

fn check_delta_tet() -> Outcome {
    let closed = 8f64.sqrt() * (2f64.sqrt() / 5.0).atan();
    let v = delta_tet();
    let sa = delta_tet_from_solid_angles();
    Ok((
        close(v, closed, 1e-12) && close(v, sa, 1e-9) && close(v, 0.7797, 1e-4),
        format!("delta_tet = {v:.15}, solid-angle reconstruction {sa:.15}"),
    ))
}

fn check_eight_pt() -> Outcome {
    let v = 8.0 * pt();
    Ok((close(v, 0.442989, 1e-6), format!("8 pt = {v:.15}")))
}

fn check_delta_oct() -> Outcome {
    let v = delta_oct();
    let excess = 6.0 * (4.0 * (-1.0f64 / 3.0).acos() - 2.0 * PI) / 3.0 / (8.0 * 2f64.sqrt() / 3.0);
    Ok((
        close(v, 0.72, 0.005) && close(v, excess, 1e-9),
        format!("delta_oct = {v:.15}, spherical-excess value {excess:.15}"),
    ))
}

fn check_fcc_density() -> Outcome {
    let v = fcc_density();
    Ok((close(v, 0.74048, 1e-5), format!("pi/sqrt(18) = {v:.15}")))
}

fn check_cell_volume_identity() -> Outcome {
    let v = cell_volume_identity();
    Ok((
        close(v, 32f64.sqrt(), 1e-9),
        format!("-8pt/(4 delta_oct) + 4pi/(3 delta_oct) = {v:.15}"),
    ))
}

fn check_lattice_cells(p: &Packing) -> Outcome {
    let cells = VoronoiBuilder::new(p).interior_cells()?;
    let worst = cells
        .iter()
        .map(|c| (c.volume - fcc_cell_volume()).abs())
        .fold(0.0, f64::max);
    Ok((
        !cells.is_empty() && worst <= 1e-9,
        format!("{} interior cells, max |vol - sqrt(32)| = {worst:.3e}", cells.len()),
    ))
}

fn check_saturated_circumradius() -> Outcome {
    let seedling = Packing::new(
        "seed",
        Window::origin(9.0)?,
        vec![Point3::ORIGIN, Point3::new(2.3, 0.4, 0.0), Point3::new(-0.5, 2.6, 1.1)],
    )?;
    let p = saturate(&seedling, 17, 0.5)?;
    let cells = VoronoiBuilder::new(&p).interior_cells()?;
    let worst = cells.iter().map(|c| c.circumradius).fold(0.0, f64::max);
    Ok((
        !cells.is_empty() && worst <= 2.0 + 1e-9,
        format!("{} balls, {} interior cells, max circumradius {worst:.12}", p.len(), cells.len()),
    ))
}

fn check_density_bound() -> Outcome {
    let p = fcc_packing(41.0)?;
    let radii = [5.0, 10.0, 20.0, 40.0];
    let rows = density_bound_check(&p, Point3::ORIGIN, &radii, 0.0)?;
    let growth = fitted_constant_growth(&rows).unwrap_or(f64::INFINITY);
    let all_bounded = rows.iter().all(|r| r.satisfied);
    let detail = rows
        .iter()
        .map(|r| format!("r={}: delta={:.9} bound={:.9}", r.r, r.delta, r.bound))
        .collect::<Vec<_>>()
        .join("; ");
    Ok((
        all_bounded && growth <= 1.5,
        format!("{detail}; fitted-C growth {growth:.4}"),
    ))
}

fn check_ball_count_inequality() -> Outcome {
    let p = fcc_packing(25.0)?;
    let probe = DensityProbe::new(&p);
    let mut n = 0;
    for r in [1.0, 2.5, 5.0, 10.0, 15.0, 20.0] {
        for x in [Point3::ORIGIN, Point3::new(0.7, -0.3, 1.1)] {
            let rep = probe.finite_density(x, r)?;
            if !rep.satisfies_ball_count_bound() {
                return Ok((false, format!("violated at x={x}, r={r}")));
            }
            n += 1;
        }
    }
    let audit = covering_chain_audit(&p, &VertexFunction::zero(&p), Point3::ORIGIN, 10.0)?;
    Ok((
        audit.left_le_middle && audit.middle_le_right,
        format!("A <= |ball count| 4pi/3 on {n} reports; covering chain holds at r=10"),
    ))
}

fn check_monte_carlo(samples: u64) -> Outcome {
    let p = fcc_packing(11.0)?;
    let exact = DensityProbe::new(&p).covered_volume(Point3::ORIGIN, 10.0)?;
    let mc = monte_carlo_covered_volume(&p, Point3::ORIGIN, 10.0, samples, 2024)?;
    let z = (exact - mc.estimate).abs() / mc.standard_error;
    Ok((
        z <= 3.0,
        format!(
            "lens sum {exact:.6}, {} samples give {:.6} ± {:.6} ({z:.2} s.e.)",
            mc.samples, mc.estimate, mc.standard_error
        ),
    ))
}

fn check_kissing_graphs() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for (name, p) in [("fcc", fcc_packing(6.0)?), ("hcp", hcp_packing(6.0)?)] {
        let s = local_star(&p, 0)?;
        let g = star_graph(&s)?;
        let hist = g.face_size_histogram();
        let good = s.u_set.len() == 12
            && s.u_set.iter().all(|u| (u.distance(s.center) - 2.0).abs() <= 1e-12)
            && (g.vertex_count(), g.edge_count(), g.face_count()) == (12, 24, 14)
            && hist.get(&3) == Some(&8)
            && hist.get(&4) == Some(&6)
            && hist.len() == 2;
        ok &= good;
        details.push(format!(
            "{name}: |U|={} V={} E={} F={} faces {:?}",
            s.u_set.len(),
            g.vertex_count(),
            g.edge_count(),
            g.face_count(),
            hist
        ));
    }
    Ok((ok, details.join("; ")))
}

fn check_reference_graphs(refs: &ReferenceSet) -> Outcome {
    let computed = ReferenceSet::compute()?;
    let mut problems = Vec::new();
    for c in &computed.graphs {
        match refs.get(c.kind) {
            None => problems.push(format!("{} missing", c.kind.name())),
            Some(r) => {
                if r.canonical_code_hex != c.canonical_code_hex {
                    problems.push(format!("{} stored code differs from the recomputed graph", c.kind.name()));
                }
                if canonical_form(&r.graph).hex() != r.canonical_code_hex {
                    problems.push(format!("{} stored code does not match its stored graph", c.kind.name()));
                }
                let got = classify_with(&c.graph, refs).kind;
                if got != c.kind {
                    problems.push(format!("{} classifies as {}", c.kind.name(), got.name()));
                }
            }
        }
    }
    let codes: BTreeSet<&str> = computed.graphs.iter().map(|g| g.canonical_code_hex.as_str()).collect();
    if codes.len() != 3 {
        problems.push("reference codes are not pairwise distinct".into());
    }
    Ok(if problems.is_empty() {
        (true, "FCC, HCP, PENT codes distinct and reproduced".into())
    } else {
        (false, problems.join("; "))
    })
}

fn check_fcc_window_classification(refs: &ReferenceSet) -> Outcome {
    let p = fcc_packing(10.0)?;
    let interior = p.interior_indices();
    let mut wrong = Vec::new();
    for &v in &interior {
        let g = star_graph(&local_star(&p, v)?)?;
        if classify_with(&g, refs).kind != GraphKind::Fcc {
            wrong.push(v);
        }
    }
    Ok((
        !interior.is_empty() && wrong.is_empty(),
        format!("{} interior vertices, {} not FCC", interior.len(), wrong.len()),
    ))
}

fn check_pent_star() -> Outcome {
    let s = pent_star();
    let pts = &s.u_set;
    let radial = pts.iter().map(|u| (u.norm() - 2.0).abs()).fold(0.0, f64::max);
    let mut min_pair = f64::INFINITY;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            min_pair = min_pair.min(pts[i].distance(pts[j]));
        }
    }
    // Poles plus two rings of five at opposite heights.
    let poles = pts.iter().filter(|u| (u.z.abs() - 2.0).abs() < 1e-12).count();
    let upper = pts.iter().filter(|u| u.z > 1e-9 && u.z < 2.0 - 1e-9).count();
    let lower = pts.iter().filter(|u| u.z < -1e-9 && u.z > -2.0 + 1e-9).count();
    let g = star_graph(&s)?;
    let edges_ok = (0..pts.len()).all(|i| {
        (i + 1..pts.len()).all(|j| g.has_edge(i, j) == (pts[i].distance(pts[j]) <= truncation_radius()))
    });
    Ok((
        pts.len() == 12 && radial <= 1e-12 && min_pair >= 2.0 - 1e-9 && (poles, upper, lower) == (2, 5, 5) && edges_ok,
        format!("12 points, max |r-2| {radial:.1e}, min pair {min_pair:.12}, poles {poles}, rings {upper}+{lower}"),
    ))
}

fn check_simplex_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    let mut worst: f64 = 0.0;
    let mut disagreements = 0;
    for k in 0..100 {
        let lp = random_bounded_lp(&mut rng, 1 + k % 6, k % 11);
        match (simplex_max(&lp)?, vertex_enumeration_max(&lp)?) {
            (LpOutcome::Optimal { value, .. }, Some(o)) => worst = worst.max((value - o).abs()),
            (LpOutcome::Infeasible, None) => {}
            _ => disagreements += 1,
        }
    }
    Ok((
        disagreements == 0 && worst <= 1e-8,
        format!("100 random programs, max |simplex - enumeration| {worst:.2e}, {disagreements} status mismatches"),
    ))
}

fn grid_max(p: &SeparableConcave, steps: usize) -> f64 {
    // Separable: maximize each coordinate on a grid.
    p.root
        .iter()
        .map(|&[a, b]| {
            (0..=steps)
                .map(|i| (p.f)(a + (b - a) * i as f64 / steps as f64))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum()
}

fn audit_certificate<P: RelaxableProblem + ?Sized>(p: &P, outcome: &BnbOutcome, seed: u64) -> std::result::Result<String, String> {
    match outcome {
        BnbOutcome::Certified(c) => {
            if !c.verified {
                return Err("certificate not verified".into());
            }
            if !c.audit_tiling(&p.root_box()) {
                return Err("leaves do not tile the root box".into());
            }
            c.audit_soundness(p, 100, &mut ChaCha8Rng::seed_from_u64(seed))
                .map_err(|(i, _, v)| format!("leaf {i} sampled {v} above its bound"))?;
            Ok(format!("certified, bound {:.9}, {} leaves", c.global_bound, c.leaves.len()))
        }
        other => Err(format!("expected a certificate, got {other:?}")),
    }
}

fn check_branch_and_bound() -> Outcome {
    let mut notes = Vec::new();
    let squares = SeparableConcave::neg_sum_squares(3);
    let sines = SeparableConcave::sum_sines(2);
    let cases: [(&SeparableConcave, f64); 3] = [(&squares, 0.5), (&sines, 1.9), (&sines, 2.1)];
    for (i, (p, target)) in cases.into_iter().enumerate() {
        let oracle = grid_max(p, 2000);
        let outcome = branch_and_bound(p, target, 1_000_000)?;
        let verdict = if oracle < target {
            audit_certificate(p, &outcome, i as u64)
        } else {
            match &outcome {
                BnbOutcome::Refuted { witness, value, .. }
                    if *value >= target && (p.objective(witness) - value).abs() <= 1e-12 =>
                {
                    Ok(format!("refuted, witness value {value:.9}"))
                }
                other => Err(format!("expected a refutation, got {other:?}")),
            }
        };
        match verdict {
            Ok(s) => notes.push(format!("{} target {target} (grid max {oracle:.6}): {s}", p.name)),
            Err(e) => return Ok((false, format!("{} target {target}: {e}", p.name))),
        }
    }
    Ok((true, notes.join("; ")))
}

fn check_face_score() -> Outcome {
    let g = star_graph(&local_star(&fcc_packing(6.0)?, 0)?)?;
    let p = FaceScoreProblem::new(&g);
    let opt = p.closed_form_optimum();
    let above = face_score_demo(&g, opt + 0.05, 10_000)?;
    let cert = match audit_certificate(&p, &above, 99) {
        Ok(s) => s,
        Err(e) => return Ok((false, e)),
    };
    let below = face_score_demo(&g, opt - 0.05, 10_000)?;
    let refuted = matches!(below, BnbOutcome::Refuted { value, .. } if value >= opt - 0.05);
    Ok((refuted, format!("toy optimum {opt:.6}: above target {cert}; below target refuted={refuted}")))
}

/// Every check, in a fixed order.
pub fn run_all(opts: &VerifyOptions) -> VerifyReport {
    let refs = &opts.references;
    let checks: Vec<NamedCheck<'_>> = vec![
        ("constants.delta_tet", Box::new(check_delta_tet)),
        ("constants.eight_pt", Box::new(check_eight_pt)),
        ("constants.delta_oct", Box::new(check_delta_oct)),
        ("constants.fcc_density", Box::new(check_fcc_density)),
        ("constants.cell_volume_identity", Box::new(check_cell_volume_identity)),
        ("voronoi.fcc_volume", Box::new(|| check_lattice_cells(&fcc_packing(8.0)?))),
        ("voronoi.hcp_volume", Box::new(|| check_lattice_cells(&hcp_packing(8.0)?))),
        ("voronoi.saturated_circumradius", Box::new(check_saturated_circumradius)),
        ("density.explicit_bound", Box::new(check_density_bound)),
        ("density.ball_count_inequality", Box::new(check_ball_count_inequality)),
        ("density.monte_carlo", Box::new(|| check_monte_carlo(opts.monte_carlo_samples))),
        ("graph.kissing_stars", Box::new(check_kissing_graphs)),
        ("graph.reference_codes", Box::new(|| check_reference_graphs(refs))),
        ("graph.fcc_window_classification", Box::new(|| check_fcc_window_classification(refs))),
        ("graph.pent_star", Box::new(check_pent_star)),
        ("lp.simplex_vs_enumeration", Box::new(check_simplex_oracle)),
        ("lp.branch_and_bound", Box::new(check_branch_and_bound)),
        ("lp.face_score_demo", Box::new(check_face_score)),
    ];
    let checks: Vec<CheckResult> = checks
        .into_iter()
        .map(|(name, f)| {
            let start = Instant::now();
            let (passed, detail) = match f() {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            CheckResult {
                name: name.into(),
                passed,
                detail,
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect();
    let all_passed = checks.iter().all(|c| c.passed);
    VerifyReport { checks, all_passed }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> VerifyOptions {
        VerifyOptions {
            monte_carlo_samples: 200_000,
            ..VerifyOptions::default()
        }
    }

    #[test]
    fn all_checks_pass() {
        let report = run_all(&quick());
        assert!(report.checks.len() >= 12);
        for c in &report.checks {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn corrupted_references_fail_the_graph_checks() {
        let mut opts = quick();
        let fcc = opts.references.graphs.iter_mut().find(|g| g.kind == GraphKind::Fcc).unwrap();
        fcc.canonical_code_hex = fcc.canonical_code_hex.replace('a', "b");
        let report = run_all(&opts);
        let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
        assert!(failed.contains(&"graph.reference_codes"), "{failed:?}");
        assert!(!report.all_passed);
    }
}
