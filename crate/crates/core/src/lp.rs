//! Dense linear programming and a branch-and-bound harness that certifies an
//! upper bound on a nonlinear maximum by linear relaxation on boxes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stargraph::{truncation_radius, PlaneGraph};

/// Pivot magnitude below which a tableau entry counts as zero.
const PIVOT_TOL: f64 = 1e-11;
/// Phase-one residual above which a program is infeasible.
const FEASIBILITY_TOL: f64 = 1e-9;
/// Degenerate pivots tolerated under Dantzig pricing before switching to
/// Bland's rule.
pub const BLAND_AFTER_DEGENERATE: usize = 1000;
/// Slack on `sample <= lp_bound` before a relaxation is declared unsound.
pub const SOUNDNESS_TOL: f64 = 1e-9;

/// One `coefficients · x <= bound` row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub coefficients: Vec<f64>,
    pub bound: f64,
}

/// Maximize `objective · x + offset` subject to the constraints and
/// `lo <= x <= hi`. Lower bounds must be finite; an upper bound may be `+∞`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub variable_bounds: Vec<(f64, f64)>,
    #[serde(default)]
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum LpOutcome {
    Optimal { value: f64, point: Vec<f64> },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>, variable_bounds: Vec<(f64, f64)>) -> Self {
        Self {
            objective,
            constraints: Vec::new(),
            variable_bounds,
            offset: 0.0,
        }
    }

    pub fn dimension(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, coefficients: Vec<f64>, bound: f64) {
        self.constraints.push(Constraint { coefficients, bound });
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dimension();
        if self.variable_bounds.len() != n {
            return Err(Error::InvalidProgram(format!(
                "{} variable bounds for {n} variables",
                self.variable_bounds.len()
            )));
        }
        if self.objective.iter().any(|c| !c.is_finite()) || !self.offset.is_finite() {
            return Err(Error::InvalidProgram("objective is not finite".into()));
        }
        for (j, &(lo, hi)) in self.variable_bounds.iter().enumerate() {
            if !lo.is_finite() || hi.is_nan() || hi == f64::NEG_INFINITY || hi < lo {
                return Err(Error::InvalidProgram(format!("bad bounds [{lo}, {hi}] on variable {j}")));
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coefficients.len() != n {
                return Err(Error::InvalidProgram(format!(
                    "constraint {i} has {} coefficients, expected {n}",
                    c.coefficients.len()
                )));
            }
            if c.coefficients.iter().any(|a| !a.is_finite()) || !c.bound.is_finite() {
                return Err(Error::InvalidProgram(format!("constraint {i} is not finite")));
            }
        }
        Ok(())
    }

    /// `objective · x + offset`
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>() + self.offset
    }

    /// Largest violation of any constraint or bound at `x` (0 when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self
            .constraints
            .iter()
            .map(|c| c.coefficients.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() - c.bound);
        let bounds = self
            .variable_bounds
            .iter()
            .zip(x)
            .flat_map(|(&(lo, hi), &v)| [lo - v, v - hi]);
        rows.chain(bounds).fold(0.0, f64::max)
    }
}

/// Dense simplex tableau; the last row holds reduced costs, the last column
/// right-hand sides.
struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
    degenerate_pivots: usize,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.width]
    }

    fn constraint_rows(&self) -> usize {
        self.rows.len() - 1
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Maximize the objective row over columns allowed by `enterable`.
    fn optimize(&mut self, enterable: &dyn Fn(usize) -> bool) -> Phase {
        let obj = self.constraint_rows();
        loop {
            let bland = self.degenerate_pivots >= BLAND_AFTER_DEGENERATE;
            let mut entering = None;
            let mut best = -PIVOT_TOL;
            for j in (0..self.width).filter(|&j| enterable(j)) {
                let d = self.rows[obj][j];
                if d < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(c) = entering else {
                return Phase::Optimal;
            };
            let mut leaving: Option<(usize, f64)> = None;
            for i in 0..obj {
                let a = self.rows[i][c];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    let better = match leaving {
                        None => true,
                        Some((k, r)) => {
                            ratio < r - 1e-12 || (ratio <= r + 1e-12 && self.basis[i] < self.basis[k])
                        }
                    };
                    if better {
                        leaving = Some((i, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leaving else {
                return Phase::Unbounded;
            };
            if ratio <= 1e-12 {
                self.degenerate_pivots += 1;
            }
            self.pivot(r, c);
        }
    }
}

/// Maximize a linear program with a dense two-phase simplex.
///
/// Variables are shifted to `y = x − lo >= 0`; finite upper bounds become
/// explicit rows. Pricing is Dantzig's rule, switching to Bland's rule after
/// [`BLAND_AFTER_DEGENERATE`] degenerate pivots so cycling cannot occur.
pub fn simplex_max(lp: &LinearProgram) -> Result<LpOutcome> {
    lp.validate()?;
    let n = lp.dimension();
    let lo: Vec<f64> = lp.variable_bounds.iter().map(|b| b.0).collect();

    // Rows a·y <= b in shifted variables.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for c in &lp.constraints {
        let shift: f64 = c.coefficients.iter().zip(&lo).map(|(a, l)| a * l).sum();
        rows.push((c.coefficients.clone(), c.bound - shift));
    }
    for (j, &(l, h)) in lp.variable_bounds.iter().enumerate() {
        if h.is_finite() {
            let mut a = vec![0.0; n];
            a[j] = 1.0;
            rows.push((a, h - l));
        }
    }

    let m = rows.len();
    let artificial_rows: Vec<usize> = (0..m).filter(|&i| rows[i].1 < 0.0).collect();
    let slack0 = n;
    let art0 = n + m;
    let width = n + m + artificial_rows.len();
    let mut t = Tableau {
        rows: vec![vec![0.0; width + 1]; m + 1],
        basis: vec![0; m],
        width,
        degenerate_pivots: 0,
    };
    let mut art_index = art0;
    for (i, (a, b)) in rows.iter().enumerate() {
        let flip = *b < 0.0;
        let s = if flip { -1.0 } else { 1.0 };
        for (dst, src) in t.rows[i][..n].iter_mut().zip(a) {
            *dst = s * src;
        }
        t.rows[i][slack0 + i] = s;
        t.rows[i][width] = s * b;
        if flip {
            t.rows[i][art_index] = 1.0;
            t.basis[i] = art_index;
            art_index += 1;
        } else {
            t.basis[i] = slack0 + i;
        }
    }

    if !artificial_rows.is_empty() {
        // Phase one: maximize −Σ artificials.
        for j in art0..width {
            t.rows[m][j] = 1.0;
        }
        for &i in &artificial_rows {
            let row = t.rows[i].clone();
            for (v, r) in t.rows[m].iter_mut().zip(&row) {
                *v -= r;
            }
        }
        t.optimize(&|_| true);
        if -t.rows[m][width] > FEASIBILITY_TOL * (1.0 + artificial_rows.len() as f64) {
            return Ok(LpOutcome::Infeasible);
        }
        // Drive remaining artificials out of the basis; rows that cannot be
        // pivoted are redundant and dropped.
        let mut i = 0;
        while i < t.constraint_rows() {
            if t.basis[i] >= art0 {
                match (0..art0).find(|&j| t.rows[i][j].abs() > 1e-9) {
                    Some(j) => t.pivot(i, j),
                    None => {
                        t.rows.remove(i);
                        t.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    // Phase two.
    let obj = t.constraint_rows();
    for v in t.rows[obj].iter_mut() {
        *v = 0.0;
    }
    for j in 0..n {
        t.rows[obj][j] = -lp.objective[j];
    }
    for i in 0..obj {
        let b = t.basis[i];
        let f = t.rows[obj][b];
        if f != 0.0 {
            let row = t.rows[i].clone();
            for (v, r) in t.rows[obj].iter_mut().zip(&row) {
                *v -= f * r;
            }
        }
    }
    if let Phase::Unbounded = t.optimize(&|j| j < art0) {
        return Ok(LpOutcome::Unbounded);
    }
    let mut point = lo;
    for i in 0..obj {
        if t.basis[i] < n {
            point[t.basis[i]] += t.rhs(i).max(0.0);
        }
    }
    // Clamp rounding noise back into the bounds.
    for (x, &(l, h)) in point.iter_mut().zip(&lp.variable_bounds) {
        *x = x.clamp(l, h);
    }
    Ok(LpOutcome::Optimal {
        value: lp.evaluate(&point),
        point,
    })
}

/// Maximum over all vertices of the feasible region by exhaustive
/// enumeration of active sets; `None` when no vertex is feasible. Requires
/// finite bounds. Exponential: for oracle use on small programs only.
pub fn vertex_enumeration_max(lp: &LinearProgram) -> Result<Option<f64>> {
    lp.validate()?;
    let n = lp.dimension();
    let mut planes: Vec<(Vec<f64>, f64)> = lp
        .constraints
        .iter()
        .map(|c| (c.coefficients.clone(), c.bound))
        .collect();
    for (j, &(l, h)) in lp.variable_bounds.iter().enumerate() {
        if !h.is_finite() {
            return Err(Error::InvalidProgram("vertex enumeration needs finite bounds".into()));
        }
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), h));
        e[j] = -1.0;
        planes.push((e, -l));
    }
    let mut best: Option<f64> = None;
    let mut choice: Vec<usize> = (0..n).collect();
    if n == 0 {
        return Ok((lp.max_violation(&[]) <= 1e-9).then_some(lp.offset));
    }
    loop {
        let a: Vec<Vec<f64>> = choice.iter().map(|&k| planes[k].0.clone()).collect();
        let b: Vec<f64> = choice.iter().map(|&k| planes[k].1).collect();
        if let Some(x) = solve_square(a, b) {
            if lp.max_violation(&x) <= 1e-9 {
                let v = lp.evaluate(&x);
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
        // Next n-combination of the planes.
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(best);
            }
            k -= 1;
            if choice[k] < planes.len() - n + k {
                choice[k] += 1;
                for t in k + 1..n {
                    choice[t] = choice[t - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Gaussian elimination with partial pivoting; `None` if singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[p][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, p);
        b.swap(col, p);
        let pivot_row = a[col].clone();
        for r in col + 1..n {
            let f = a[r][col] / pivot_row[col];
            if f != 0.0 {
                for (x, p) in a[r][col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= f * p;
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// A random program with `n` variables in `[-1, 1]`-ish boxes and `m` rows,
/// for oracle comparisons.
pub fn random_bounded_lp(rng: &mut impl rand::Rng, n: usize, m: usize) -> LinearProgram {
    let mut lp = LinearProgram::new(
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        (0..n)
            .map(|_| (rng.gen_range(-2.0..0.0), rng.gen_range(0.5..2.0)))
            .collect(),
    );
    for _ in 0..m {
        lp.add_constraint((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(), rng.gen_range(-0.5..1.5));
    }
    lp
}

/// An axis-aligned box `[lo_i, hi_i]`.
pub type Interval = [f64; 2];

/// A maximization problem over a box with a linear relaxation on sub-boxes.
pub trait RelaxableProblem {
    fn root_box(&self) -> Vec<Interval>;

    /// True objective at a point of the box.
    fn objective(&self, x: &[f64]) -> f64;

    /// A linear program whose first `root_box().len()` variables are the box
    /// coordinates, bounded by `bx`, and whose maximum is at least the
    /// objective's maximum on `bx`.
    fn relax(&self, bx: &[Interval]) -> LinearProgram;

    /// Extra points of `bx` at which to evaluate the objective, besides the
    /// box center and the relaxation's maximizer.
    fn sample_points(&self, _bx: &[Interval]) -> Vec<Vec<f64>> {
        Vec::new()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    #[serde(rename = "box")]
    pub bx: Vec<Interval>,
    pub bound: f64,
}

/// A tiling of the root box into leaves whose relaxation bounds are all below
/// the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub target: f64,
    pub global_bound: f64,
    pub verified: bool,
    pub node_count: usize,
    pub max_depth: usize,
    pub leaves: Vec<Leaf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BnbOutcome {
    Certified(BoundCertificate),
    Refuted {
        target: f64,
        witness: Vec<f64>,
        value: f64,
        node_count: usize,
    },
    Inconclusive {
        target: f64,
        node_count: usize,
        reason: String,
    },
}

fn box_center(bx: &[Interval]) -> Vec<f64> {
    bx.iter().map(|[a, b]| 0.5 * (a + b)).collect()
}

fn box_volume(bx: &[Interval]) -> f64 {
    bx.iter().map(|[a, b]| b - a).product()
}

/// Depth-first branch and bound. A box is closed when its relaxation bound is
/// strictly below `target`; a sample at or above the target refutes; any
/// sample above its box's bound is a [`Error::SoundnessViolation`]. Otherwise
/// the widest coordinate is split at its midpoint.
pub fn branch_and_bound<P: RelaxableProblem + ?Sized>(p: &P, target: f64, max_nodes: usize) -> Result<BnbOutcome> {
    let root = p.root_box();
    if root.iter().any(|[a, b]| !(a.is_finite() && b.is_finite() && a <= b)) {
        return Err(Error::InvalidArgument("root box must be finite and ordered".into()));
    }
    let dim = root.len();
    let mut stack = vec![(root, 0usize)];
    let mut leaves = Vec::new();
    let mut node_count = 0;
    let mut max_depth = 0;
    while let Some((bx, depth)) = stack.pop() {
        if node_count >= max_nodes {
            return Ok(BnbOutcome::Inconclusive {
                target,
                node_count,
                reason: format!("node limit {max_nodes} reached"),
            });
        }
        node_count += 1;
        max_depth = max_depth.max(depth);
        let lp = p.relax(&bx);
        let (bound, lp_point) = match simplex_max(&lp)? {
            LpOutcome::Optimal { value, point } => (value, Some(point[..dim].to_vec())),
            LpOutcome::Infeasible => (f64::NEG_INFINITY, None),
            LpOutcome::Unbounded => (f64::INFINITY, None),
        };
        if bound < target {
            leaves.push(Leaf { bx, bound });
            continue;
        }
        let mut samples = vec![box_center(&bx)];
        samples.extend(lp_point);
        samples.extend(p.sample_points(&bx));
        let mut best: Option<(f64, Vec<f64>)> = None;
        for x in samples {
            let x: Vec<f64> = x.iter().zip(&bx).map(|(v, [a, b])| v.clamp(*a, *b)).collect();
            let value = p.objective(&x);
            if value > bound + SOUNDNESS_TOL {
                return Err(Error::SoundnessViolation {
                    bound,
                    sampled: value,
                    box_index: node_count - 1,
                });
            }
            if best.as_ref().is_none_or(|(v, _)| value > *v) {
                best = Some((value, x));
            }
        }
        if let Some((value, witness)) = best.filter(|(v, _)| *v >= target) {
            return Ok(BnbOutcome::Refuted {
                target,
                witness,
                value,
                node_count,
            });
        }
        let (k, width) = bx
            .iter()
            .enumerate()
            .map(|(k, [a, b])| (k, b - a))
            .fold((0, -1.0), |acc, kw| if kw.1 > acc.1 { kw } else { acc });
        if width <= 1e-12 {
            return Ok(BnbOutcome::Inconclusive {
                target,
                node_count,
                reason: "box cannot be split further".into(),
            });
        }
        let mid = 0.5 * (bx[k][0] + bx[k][1]);
        let mut low = bx.clone();
        let mut high = bx;
        low[k][1] = mid;
        high[k][0] = mid;
        // Explore the lower half first.
        stack.push((high, depth + 1));
        stack.push((low, depth + 1));
    }
    leaves.sort_by(|a, b| {
        a.bx.iter()
            .flatten()
            .zip(b.bx.iter().flatten())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let global_bound = leaves.iter().map(|l| l.bound).fold(f64::NEG_INFINITY, f64::max);
    Ok(BnbOutcome::Certified(BoundCertificate {
        target,
        global_bound,
        verified: global_bound < target,
        node_count,
        max_depth,
        leaves,
    }))
}

impl BoundCertificate {
    /// Leaves lie in `root`, have pairwise disjoint interiors, and their
    /// volumes sum to the root volume within `1e-9` relative.
    pub fn audit_tiling(&self, root: &[Interval]) -> bool {
        let tol = 1e-12;
        let inside = self.leaves.iter().all(|l| {
            l.bx.len() == root.len()
                && l.bx
                    .iter()
                    .zip(root)
                    .all(|([a, b], [ra, rb])| a >= &(ra - tol) && b <= &(rb + tol) && a <= b)
        });
        if !inside {
            return false;
        }
        for (i, a) in self.leaves.iter().enumerate() {
            for b in &self.leaves[i + 1..] {
                let overlap: f64 = a
                    .bx
                    .iter()
                    .zip(&b.bx)
                    .map(|([a0, a1], [b0, b1])| (a1.min(*b1) - a0.max(*b0)).max(0.0))
                    .product();
                if overlap > tol {
                    return false;
                }
            }
        }
        let total: f64 = self.leaves.iter().map(|l| box_volume(&l.bx)).sum();
        let root_volume = box_volume(root);
        (total - root_volume).abs() <= 1e-9 * root_volume.max(f64::MIN_POSITIVE)
    }

    /// Draw `samples_per_leaf` uniform points in every leaf and check the
    /// true objective stays below the leaf bound. Returns the first offending
    /// `(leaf index, point, value)`.
    pub fn audit_soundness<P: RelaxableProblem + ?Sized>(
        &self,
        p: &P,
        samples_per_leaf: usize,
        rng: &mut impl rand::Rng,
    ) -> std::result::Result<(), (usize, Vec<f64>, f64)> {
        for (i, leaf) in self.leaves.iter().enumerate() {
            for _ in 0..samples_per_leaf {
                let x: Vec<f64> = leaf
                    .bx
                    .iter()
                    .map(|&[a, b]| if b > a { rng.gen_range(a..=b) } else { a })
                    .collect();
                let v = p.objective(&x);
                if v > leaf.bound + SOUNDNESS_TOL {
                    return Err((i, x, v));
                }
            }
        }
        Ok(())
    }
}

/// Upper envelope of tangent lines of a concave function `f` on `[a, b]`,
/// touching at both ends, the midpoint, and the peak when inside.
fn tangent_lines(f: &dyn Fn(f64) -> f64, df: &dyn Fn(f64) -> f64, peak: Option<f64>, a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut points = vec![a, b, 0.5 * (a + b)];
    if let Some(p) = peak.filter(|p| *p > a && *p < b) {
        points.push(p);
    }
    // Line t <= slope * x + intercept.
    points
        .into_iter()
        .map(|p| (df(p), f(p) - df(p) * p))
        .collect()
}

/// Largest value any single tangent line reaches on `[a, b]`, minimized
/// over the lines: a finite upper bound for the epigraph variable.
fn tangent_cap(lines: &[(f64, f64)], a: f64, b: f64) -> f64 {
    lines
        .iter()
        .map(|(s, c)| (s * a + c).max(s * b + c))
        .fold(f64::INFINITY, f64::min)
}

/// `Σ f(x_i)` for a concave scalar function `f`, relaxed by tangent lines.
pub struct SeparableConcave {
    pub name: String,
    pub root: Vec<Interval>,
    pub f: fn(f64) -> f64,
    pub df: fn(f64) -> f64,
    pub peak: Option<f64>,
}

impl SeparableConcave {
    /// Maximize `−Σ x_i²` on `[−1, 1]^dim`; the maximum is 0.
    pub fn neg_sum_squares(dim: usize) -> Self {
        Self {
            name: "neg_sum_squares".into(),
            root: vec![[-1.0, 1.0]; dim],
            f: |x| -x * x,
            df: |x| -2.0 * x,
            peak: Some(0.0),
        }
    }

    /// Maximize `Σ sin x_i` on `[0, π/2]^dim`; the maximum is `dim`.
    pub fn sum_sines(dim: usize) -> Self {
        Self {
            name: "sum_sines".into(),
            root: vec![[0.0, std::f64::consts::FRAC_PI_2]; dim],
            f: f64::sin,
            df: f64::cos,
            peak: Some(std::f64::consts::FRAC_PI_2),
        }
    }
}

impl RelaxableProblem for SeparableConcave {
    fn root_box(&self) -> Vec<Interval> {
        self.root.clone()
    }

    fn objective(&self, x: &[f64]) -> f64 {
        x.iter().map(|&v| (self.f)(v)).sum()
    }

    fn relax(&self, bx: &[Interval]) -> LinearProgram {
        let d = bx.len();
        let mut bounds: Vec<(f64, f64)> = bx.iter().map(|&[a, b]| (a, b)).collect();
        let mut all_lines = Vec::with_capacity(d);
        for &[a, b] in bx {
            let lines = tangent_lines(&self.f, &self.df, self.peak, a, b);
            let low = (self.f)(a).min((self.f)(b)) - 1.0;
            bounds.push((low, tangent_cap(&lines, a, b).max(low)));
            all_lines.push(lines);
        }
        let mut objective = vec![0.0; 2 * d];
        objective[d..].fill(1.0);
        let mut lp = LinearProgram::new(objective, bounds);
        for (i, lines) in all_lines.into_iter().enumerate() {
            for (slope, intercept) in lines {
                let mut row = vec![0.0; 2 * d];
                row[d + i] = 1.0;
                row[i] = -slope;
                lp.add_constraint(row, intercept);
            }
        }
        lp
    }

    fn sample_points(&self, bx: &[Interval]) -> Vec<Vec<f64>> {
        // The separable maximizer on the box: each coordinate at its clamped peak.
        match self.peak {
            Some(p) => vec![bx.iter().map(|&[a, b]| p.clamp(a, b)).collect()],
            None => Vec::new(),
        }
    }
}

/// Edge length at which every toy face term peaks.
pub const TOY_EDGE_OPTIMUM: f64 = 2.2;
/// Toy base score per edge of a face.
pub const TOY_BASE_PER_EDGE: f64 = 0.1;

/// Toy separable face score on a plane graph, a stand-in for a real local
/// score used only to exercise the bounding machinery.
///
/// One variable `ℓ_e ∈ [2, 2 t0]` per edge; face `f` of size `k` scores
/// `0.1 k − Σ_{e ∈ f} (ℓ_e − 2.2)²`; the total is the sum over faces. The
/// relaxation has one epigraph variable per face–edge incidence, bounded by
/// tangent lines.
pub struct FaceScoreProblem {
    edges: Vec<(usize, usize)>,
    /// Per face: its size and the indices of its edges.
    faces: Vec<(usize, Vec<usize>)>,
}

impl FaceScoreProblem {
    pub fn new(g: &PlaneGraph) -> Self {
        let edges: Vec<(usize, usize)> = g.edges().collect();
        let index = |a: usize, b: usize| {
            edges
                .iter()
                .position(|&e| e == (a.min(b), a.max(b)))
                .expect("face edges belong to the graph")
        };
        let faces = g
            .faces()
            .iter()
            .map(|f| {
                let k = f.len();
                (k, (0..k).map(|i| index(f[i], f[(i + 1) % k])).collect())
            })
            .collect();
        Self { edges, faces }
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    fn base(&self) -> f64 {
        self.faces.iter().map(|(k, _)| TOY_BASE_PER_EDGE * *k as f64).sum()
    }

    /// Exact maximum: every face peaks at `ℓ = 2.2` simultaneously.
    pub fn closed_form_optimum(&self) -> f64 {
        self.base()
    }
}

fn toy_term(l: f64) -> f64 {
    -(l - TOY_EDGE_OPTIMUM).powi(2)
}

fn toy_term_slope(l: f64) -> f64 {
    -2.0 * (l - TOY_EDGE_OPTIMUM)
}

impl RelaxableProblem for FaceScoreProblem {
    fn root_box(&self) -> Vec<Interval> {
        vec![[2.0, truncation_radius()]; self.edges.len()]
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.base()
            + self
                .faces
                .iter()
                .flat_map(|(_, es)| es.iter().map(|&e| toy_term(x[e])))
                .sum::<f64>()
    }

    fn relax(&self, bx: &[Interval]) -> LinearProgram {
        let e = self.edges.len();
        let incidences: Vec<usize> = self.faces.iter().flat_map(|(_, es)| es.iter().copied()).collect();
        let n = e + incidences.len();
        let mut bounds: Vec<(f64, f64)> = bx.iter().map(|&[a, b]| (a, b)).collect();
        let lines: Vec<Vec<(f64, f64)>> = bx
            .iter()
            .map(|&[a, b]| tangent_lines(&toy_term, &toy_term_slope, Some(TOY_EDGE_OPTIMUM), a, b))
            .collect();
        for &edge in &incidences {
            let [a, b] = bx[edge];
            let low = toy_term(a).min(toy_term(b)) - 1.0;
            bounds.push((low, tangent_cap(&lines[edge], a, b).max(low)));
        }
        let mut objective = vec![0.0; n];
        objective[e..].fill(1.0);
        let mut lp = LinearProgram::new(objective, bounds);
        lp.offset = self.base();
        for (s, &edge) in incidences.iter().enumerate() {
            for &(slope, intercept) in &lines[edge] {
                let mut row = vec![0.0; n];
                row[e + s] = 1.0;
                row[edge] = -slope;
                lp.add_constraint(row, intercept);
            }
        }
        lp
    }

    fn sample_points(&self, bx: &[Interval]) -> Vec<Vec<f64>> {
        vec![bx.iter().map(|&[a, b]| TOY_EDGE_OPTIMUM.clamp(a, b)).collect()]
    }
}

/// Run branch and bound on the toy face score of `g`.
pub fn face_score_demo(g: &PlaneGraph, target: f64, max_nodes: usize) -> Result<BnbOutcome> {
    branch_and_bound(&FaceScoreProblem::new(g), target, max_nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn square_lp() -> LinearProgram {
        let mut lp = LinearProgram::new(vec![1.0, 1.0], vec![(0.0, 2.0), (0.0, 2.0)]);
        lp.add_constraint(vec![1.0, 0.0], 1.0);
        lp.add_constraint(vec![0.0, 1.0], 1.0);
        lp
    }

    #[test]
    fn small_programs() {
        match simplex_max(&square_lp()).unwrap() {
            LpOutcome::Optimal { value, point } => {
                assert!((value - 2.0).abs() < 1e-12);
                assert!((point[0] - 1.0).abs() < 1e-12 && (point[1] - 1.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        let mut infeasible = LinearProgram::new(vec![1.0], vec![(0.0, 1.0)]);
        infeasible.add_constraint(vec![1.0], -1.0);
        assert_eq!(simplex_max(&infeasible).unwrap(), LpOutcome::Infeasible);

        let unbounded = LinearProgram::new(vec![1.0], vec![(0.0, f64::INFINITY)]);
        assert_eq!(simplex_max(&unbounded).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn malformed_programs() {
        let mut lp = square_lp();
        lp.constraints[0].coefficients.pop();
        assert!(matches!(simplex_max(&lp), Err(Error::InvalidProgram(_))));
        let lp = LinearProgram::new(vec![1.0], vec![(1.0, 0.0)]);
        assert!(simplex_max(&lp).is_err());
    }

    #[test]
    fn lower_bounds_and_equalities() {
        // max −x − y with x + y >= 3, x,y in [1, 5].
        let mut lp = LinearProgram::new(vec![-1.0, -1.0], vec![(1.0, 5.0), (1.0, 5.0)]);
        lp.add_constraint(vec![-1.0, -1.0], -3.0);
        assert!((simplex_max(&lp).unwrap().value().unwrap() + 3.0).abs() < 1e-12);
        // x = 2 via two opposite rows.
        let mut lp = LinearProgram::new(vec![1.0], vec![(0.0, 10.0)]);
        lp.add_constraint(vec![1.0], 2.0);
        lp.add_constraint(vec![-1.0], -2.0);
        assert!((simplex_max(&lp).unwrap().value().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_program_terminates() {
        // Many constraints through the same vertex.
        let n = 4;
        let mut lp = LinearProgram::new(vec![1.0; n], vec![(0.0, 1.0); n]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let row: Vec<f64> = (0..n).map(|_| rand::Rng::gen_range(&mut rng, 0.0..1.0)).collect();
            lp.add_constraint(row, 0.0);
        }
        assert!(simplex_max(&lp).unwrap().value().unwrap().abs() < 1e-12);
    }

    #[test]
    fn random_programs_match_vertex_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut infeasible = 0;
        for k in 0..100 {
            let n = 1 + k % 6;
            let m = k % 11;
            let lp = random_bounded_lp(&mut rng, n, m);
            let oracle = vertex_enumeration_max(&lp).unwrap();
            match (simplex_max(&lp).unwrap(), oracle) {
                (LpOutcome::Optimal { value, point }, Some(o)) => {
                    assert!((value - o).abs() < 1e-8, "lp {k}: {value} vs {o}");
                    assert!(lp.max_violation(&point) < 1e-9);
                }
                (LpOutcome::Infeasible, None) => infeasible += 1,
                (got, want) => panic!("lp {k}: {got:?} vs {want:?}"),
            }
        }
        assert!(infeasible < 50);
    }

    #[test]
    fn sum_squares_certificate() {
        let p = SeparableConcave::neg_sum_squares(3);
        let BnbOutcome::Certified(c) = branch_and_bound(&p, 0.5, 1_000_000).unwrap() else {
            panic!("expected a certificate");
        };
        assert!(c.verified && c.global_bound < 0.5);
        assert!(c.audit_tiling(&p.root_box()));
        assert!(c.audit_soundness(&p, 100, &mut ChaCha8Rng::seed_from_u64(1)).is_ok());
    }

    #[test]
    fn sum_sines_outcomes() {
        let p = SeparableConcave::sum_sines(2);
        match branch_and_bound(&p, 1.9, 1_000_000).unwrap() {
            BnbOutcome::Refuted { witness, value, .. } => {
                assert!(value >= 1.9);
                assert!((p.objective(&witness) - value).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        let BnbOutcome::Certified(c) = branch_and_bound(&p, 2.1, 1_000_000).unwrap() else {
            panic!("expected a certificate");
        };
        assert!(c.verified && c.global_bound < 2.1);
        assert!(c.audit_tiling(&p.root_box()));
        assert!(c.audit_soundness(&p, 100, &mut ChaCha8Rng::seed_from_u64(2)).is_ok());
    }

    #[test]
    fn splitting_certificate_tiles() {
        // Without the peak tangent the root bound is loose and boxes split.
        let p = SeparableConcave {
            name: "shifted".into(),
            root: vec![[-1.0, 1.0]; 2],
            f: |x| -(x - 0.3) * (x - 0.3),
            df: |x| -2.0 * (x - 0.3),
            peak: None,
        };
        let BnbOutcome::Certified(c) = branch_and_bound(&p, 0.01, 1_000_000).unwrap() else {
            panic!("expected a certificate");
        };
        assert!(c.leaves.len() > 1);
        assert!(c.max_depth > 0);
        assert!(c.audit_tiling(&p.root_box()));
        assert!(c.audit_soundness(&p, 100, &mut ChaCha8Rng::seed_from_u64(4)).is_ok());
        let mut broken = c.clone();
        broken.leaves.pop();
        assert!(!broken.audit_tiling(&p.root_box()));
    }

    #[test]
    fn node_limit_is_inconclusive() {
        let p = SeparableConcave::sum_sines(2);
        assert!(matches!(
            branch_and_bound(&p, 1.9999999, 3).unwrap(),
            BnbOutcome::Inconclusive { .. } | BnbOutcome::Refuted { .. }
        ));
        // A tie with the true maximum is never certified.
        let q = SeparableConcave::neg_sum_squares(1);
        assert!(!matches!(branch_and_bound(&q, 0.0, 100).unwrap(), BnbOutcome::Certified(_)));
    }

    #[test]
    fn unsound_relaxation_is_reported() {
        struct Liar;
        impl RelaxableProblem for Liar {
            fn root_box(&self) -> Vec<Interval> {
                vec![[0.0, 1.0]]
            }
            fn objective(&self, x: &[f64]) -> f64 {
                x[0]
            }
            fn relax(&self, bx: &[Interval]) -> LinearProgram {
                let mut lp = LinearProgram::new(vec![0.0], vec![(bx[0][0], bx[0][1])]);
                lp.offset = -1.0;
                lp
            }
        }
        // The lying bound −1 is below the target, so every box closes; the
        // soundness audit catches it.
        let BnbOutcome::Certified(c) = branch_and_bound(&Liar, 0.5, 10).unwrap() else {
            panic!()
        };
        assert!(c.audit_soundness(&Liar, 100, &mut ChaCha8Rng::seed_from_u64(5)).is_err());
        // With the target below the lie, sampling hits it during the search.
        assert!(matches!(
            branch_and_bound(&Liar, -2.0, 10),
            Err(Error::SoundnessViolation { .. })
        ));
    }

    fn triangle() -> PlaneGraph {
        PlaneGraph::new(3, [(0, 1), (1, 2), (0, 2)], vec![vec![0, 1, 2], vec![2, 1, 0]], "triangle").unwrap()
    }

    #[test]
    fn face_score_on_a_triangle() {
        let g = triangle();
        let p = FaceScoreProblem::new(&g);
        let opt = p.closed_form_optimum();
        assert!((opt - 0.6).abs() < 1e-15);
        let BnbOutcome::Certified(c) = face_score_demo(&g, opt + 0.01, 1000).unwrap() else {
            panic!()
        };
        assert!(c.verified);
        assert!((c.global_bound - opt).abs() < 1e-8);
        assert!(matches!(face_score_demo(&g, opt - 0.01, 1000).unwrap(), BnbOutcome::Refuted { .. }));
    }

    #[test]
    fn face_score_on_fcc() {
        use crate::packing::fcc_packing;
        use crate::stargraph::{local_star, star_graph};
        let g = star_graph(&local_star(&fcc_packing(6.0).unwrap(), 0).unwrap()).unwrap();
        let p = FaceScoreProblem::new(&g);
        assert_eq!(p.edge_count(), 24);
        let opt = p.closed_form_optimum();
        assert!((opt - 4.8).abs() < 1e-12);
        let BnbOutcome::Certified(c) = face_score_demo(&g, opt + 0.05, 1000).unwrap() else {
            panic!()
        };
        assert!((c.global_bound - opt).abs() < 1e-8);
        assert!(c.audit_tiling(&p.root_box()));
        assert!(c.audit_soundness(&p, 100, &mut ChaCha8Rng::seed_from_u64(6)).is_ok());
        match face_score_demo(&g, opt - 0.05, 1000).unwrap() {
            BnbOutcome::Refuted { value, .. } => assert!(value >= opt - 0.05),
            other => panic!("{other:?}"),
        }
    }
}

#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn value_ignores_row_order_and_redundant_rows(seed in any::<u64>(), n in 1usize..6, m in 2usize..10) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let lp = random_bounded_lp(&mut rng, n, m);
            let base = simplex_max(&lp).unwrap();

            let mut shuffled = lp.clone();
            shuffled.constraints.shuffle(&mut rng);
            let mut redundant = lp.clone();
            let (a, b) = (&lp.constraints[0], &lp.constraints[1]);
            redundant.add_constraint(
                a.coefficients.iter().zip(&b.coefficients).map(|(x, y)| x + y).collect(),
                a.bound + b.bound + 0.25,
            );
            redundant.add_constraint(a.coefficients.clone(), a.bound);

            for other in [shuffled, redundant] {
                match (&base, simplex_max(&other).unwrap()) {
                    (LpOutcome::Optimal { value: v, .. }, LpOutcome::Optimal { value: w, .. }) => {
                        prop_assert!((v - w).abs() < 1e-9, "{} vs {}", v, w);
                    }
                    (LpOutcome::Infeasible, LpOutcome::Infeasible) => {}
                    (x, y) => prop_assert!(false, "{:?} vs {:?}", x, y),
                }
            }
        }
    }
}
