//! Contact models: the ellipsoidal limit surface of a uniform circular patch,
//! polyhedral friction cones and the bounded friction polytope of a
//! multi-point patch.

use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
use nalgebra::{Vector2, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use super::{StabilityError, StabilityVerdict};

/// Ratio between the effective torsional radius and the patch radius of a
/// uniform-pressure circular contact.
pub const TORSION_RADIUS_RATIO: f64 = 0.6;

/// Uniform-pressure circular contact. The contact frame has `z` along the
/// contact normal, pointing out of the supporting body, so a wrench with
/// `f_z > 0` pulls the contact apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircularPatchJoint {
    pub mu: f64,
    pub radius: f64,
    pub normal_force: f64,
}

impl CircularPatchJoint {
    pub fn new(mu: f64, radius: f64, normal_force: f64) -> Result<Self, StabilityError> {
        if !(mu > 0.0 && radius > 0.0 && normal_force >= 0.0) {
            return Err(StabilityError::InvalidJoint(format!(
                "circular patch needs mu > 0, r > 0, N >= 0 (got mu={mu}, r={radius}, N={normal_force})"
            )));
        }
        Ok(Self {
            mu,
            radius,
            normal_force,
        })
    }

    /// Effective torsional radius `k`.
    pub fn k(&self) -> f64 {
        TORSION_RADIUS_RATIO * self.radius
    }
}

/// Quadratic form of the ellipsoidal limit surface for the planar wrench
/// `[f_t1, f_t2, m_n]` (two tangential forces and the moment about the
/// normal). Written with a y-normal contact frame this is the familiar
/// `f_x²/(Nμ)² + f_z²/(Nμ)² + m_y²/(Nkμ)²`.
pub fn limit_surface_form(w_planar: [f64; 3], joint: &CircularPatchJoint) -> f64 {
    let n = joint.normal_force;
    let mu = joint.mu;
    let k = joint.k();
    let [f1, f2, m] = w_planar;
    if w_planar.iter().all(|c| *c == 0.0) {
        return 0.0;
    }
    let form = f1 * f1 / ((n * mu) * (n * mu))
        + f2 * f2 / ((n * mu) * (n * mu))
        + m * m / ((n * k * mu) * (n * k * mu));
    if form.is_nan() {
        // 0/0 in one term with a nonzero load elsewhere
        f64::INFINITY
    } else {
        form
    }
}

/// Stable iff the planar wrench lies strictly inside the limit surface.
/// The margin is `1 - form`; an unloaded patch reports `-inf` for any
/// nonzero planar wrench.
pub fn limit_surface_stable(w_planar: [f64; 3], joint: &CircularPatchJoint) -> StabilityVerdict {
    let form = limit_surface_form(w_planar, joint);
    StabilityVerdict::from_margin(1.0 - form)
}

/// Multi-point patch: point contacts at coplanar corners (`z = 0` in the
/// patch frame, normal `+z`) each pressed with its own normal force.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonPatchJoint {
    pub mu: f64,
    #[serde(with = "corners_serde")]
    pub corners: Vec<Vector3<f64>>,
    pub corner_normal_forces: Vec<f64>,
}

mod corners_serde {
    use nalgebra::Vector3;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Vector3<f64>], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|c| [c.x, c.y, c.z])
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vector3<f64>>, D::Error> {
        Ok(Vec::<[f64; 3]>::deserialize(d)?
            .into_iter()
            .map(Vector3::from)
            .collect())
    }
}

impl PolygonPatchJoint {
    pub fn new(
        mu: f64,
        corners: Vec<Vector3<f64>>,
        corner_normal_forces: Vec<f64>,
    ) -> Result<Self, StabilityError> {
        if corners.len() < 3 {
            return Err(StabilityError::InvalidJoint(
                "polygon patch needs at least 3 corners".into(),
            ));
        }
        if corners.len() != corner_normal_forces.len() {
            return Err(StabilityError::InvalidJoint(
                "one normal force per corner".into(),
            ));
        }
        if corners.iter().any(|c| c.z.abs() > 1e-9) {
            return Err(StabilityError::InvalidJoint(
                "polygon patch corners must lie in the z = 0 plane".into(),
            ));
        }
        if mu < 0.0 || corner_normal_forces.iter().any(|n| *n < 0.0 || !n.is_finite()) {
            return Err(StabilityError::InvalidJoint(
                "friction and corner normal forces must be nonnegative".into(),
            ));
        }
        Ok(Self {
            mu,
            corners,
            corner_normal_forces,
        })
    }

    pub fn total_normal_force(&self) -> f64 {
        self.corner_normal_forces.iter().sum()
    }

    fn loaded_corners(&self) -> impl Iterator<Item = (&Vector3<f64>, f64)> {
        self.corners
            .iter()
            .zip(self.corner_normal_forces.iter().copied())
            .filter(|(_, n)| *n > 0.0)
    }
}

const FC_DIRECTIONS: [(f64, f64); 4] = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)];

/// Generalized friction cone generators of a polygon patch, as 6D wrenches
/// `[f; p × f]` about the patch origin. Each loaded corner contributes the
/// four polyhedral edges `N_i (±μ, 0, 1)`, `N_i (0, ±μ, 1)`; exact duplicates
/// (e.g. with `μ = 0`) are dropped and unloaded corners contribute nothing.
pub fn friction_cone_generators(joint: &PolygonPatchJoint) -> Vec<Vector6<f64>> {
    let mut out: Vec<Vector6<f64>> = Vec::with_capacity(4 * joint.corners.len());
    for (p, n) in joint.loaded_corners() {
        for (dx, dy) in FC_DIRECTIONS {
            let f = Vector3::new(joint.mu * dx, joint.mu * dy, 1.0) * n;
            let m = p.cross(&f);
            let g = Vector6::new(f.x, f.y, f.z, m.x, m.y, m.z);
            if !out.iter().any(|h| *h == g) {
                out.push(g);
            }
        }
    }
    out
}

/// Membership of `w` in the convex cone spanned by `generators`.
///
/// Stable when `w` is a strictly positive combination of the generators,
/// i.e. lies in the relative interior of the cone; `w = 0` is always stable.
/// The margin is the largest `t` with `ŵ = Σ λ_i ĝ_i`, `λ_i ≥ t`, over unit
/// normalized vectors, clamped to `[-1, 1]`: positive inside, zero on the
/// boundary, `-1` when `w` is outside the linear span.
pub fn in_convex_cone(w: &Vector6<f64>, generators: &[Vector6<f64>]) -> StabilityVerdict {
    let wn = w.norm();
    if wn == 0.0 {
        return StabilityVerdict::from_margin(1.0);
    }
    let gens: Vec<Vector6<f64>> = generators
        .iter()
        .filter(|g| g.norm() > 0.0)
        .map(|g| g.normalize())
        .collect();
    if gens.is_empty() {
        return StabilityVerdict::from_margin(-1.0);
    }
    let target = w / wn;
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let slack: Vec<_> = gens
        .iter()
        .map(|_| lp.add_var(0.0, (0.0, f64::INFINITY)))
        .collect();
    let t = lp.add_var(1.0, (-1.0, 1.0));
    let sum: Vector6<f64> = gens.iter().sum();
    for row in 0..6 {
        let mut e = LinearExpr::empty();
        for (v, g) in slack.iter().zip(&gens) {
            if g[row] != 0.0 {
                e.add(*v, g[row]);
            }
        }
        e.add(t, sum[row]);
        lp.add_constraint(e, ComparisonOp::Eq, target[row]);
    }
    match lp.solve() {
        Ok(sol) => StabilityVerdict::from_margin(*sol.var_value(t)),
        Err(_) => StabilityVerdict::from_margin(-1.0),
    }
}

/// Largest boundary scale of the patch's bounded friction polytope along
/// `w_fric = [f_x, f_y, m_z]`: the maximum `s` with `s·w_fric` transmissible
/// when each corner's friction is limited to its own scaled cone section.
/// Returns `+inf` for a zero frictional wrench.
pub fn friction_polytope_scale(joint: &PolygonPatchJoint, w_fric: [f64; 3]) -> f64 {
    if w_fric.iter().all(|c| *c == 0.0) {
        return f64::INFINITY;
    }
    const SCALE_CAP: f64 = 1e9;
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let s = lp.add_var(1.0, (0.0, SCALE_CAP));
    let mut rows = [
        LinearExpr::empty(),
        LinearExpr::empty(),
        LinearExpr::empty(),
    ];
    for (p, n) in joint.loaded_corners() {
        let mut budget = LinearExpr::empty();
        for (dx, dy) in FC_DIRECTIONS {
            let fx = joint.mu * n * dx;
            let fy = joint.mu * n * dy;
            let mz = p.x * fy - p.y * fx;
            let v = lp.add_var(0.0, (0.0, f64::INFINITY));
            for (row, c) in rows.iter_mut().zip([fx, fy, mz]) {
                if c != 0.0 {
                    row.add(v, c);
                }
            }
            budget.add(v, 1.0);
        }
        lp.add_constraint(budget, ComparisonOp::Le, 1.0);
    }
    for (mut row, target) in rows.into_iter().zip(w_fric) {
        row.add(s, -target);
        lp.add_constraint(row, ComparisonOp::Eq, 0.0);
    }
    match lp.solve() {
        Ok(sol) => *sol.var_value(s),
        Err(_) => 0.0,
    }
}

/// Margin of the non-frictional directions of a polygon patch: the pressed
/// load `ΣN_i - f_z` must stay positive and the resulting center of pressure
/// must stay inside the corner polygon. `1 - gauge` of the center of
/// pressure relative to the polygon centroid; `-1` under net tension.
pub fn polygon_support_margin(joint: &PolygonPatchJoint, w: &Vector6<f64>) -> f64 {
    let preload = joint.total_normal_force();
    let pressed = preload - w[2];
    if pressed <= 0.0 {
        return -1.0;
    }
    let (mut sx, mut sy) = (0.0, 0.0);
    for (p, n) in joint.corners.iter().zip(&joint.corner_normal_forces) {
        sx += p.x * n;
        sy += p.y * n;
    }
    let cop = Vector2::new((sx + w[4]) / pressed, (sy - w[3]) / pressed);
    let pts: Vec<Vector2<f64>> = joint.corners.iter().map(|c| c.xy()).collect();
    1.0 - polygon_gauge(&pts, &cop)
}

/// Gauge of `x` with respect to the convex hull of `pts`, centered at the
/// hull's vertex centroid: `< 1` strictly inside, `1` on the boundary.
fn polygon_gauge(pts: &[Vector2<f64>], x: &Vector2<f64>) -> f64 {
    let hull = convex_hull(pts);
    if hull.len() < 3 {
        return f64::INFINITY;
    }
    let c: Vector2<f64> = hull.iter().sum::<Vector2<f64>>() / hull.len() as f64;
    let d = x - c;
    let mut gauge: f64 = 0.0;
    for i in 0..hull.len() {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        let e = b - a;
        // counter-clockwise hull: outward normal is (e.y, -e.x)
        let n = Vector2::new(e.y, -e.x);
        let offset = n.dot(&(a - c));
        if offset > 0.0 {
            gauge = gauge.max(n.dot(&d) / offset);
        }
    }
    gauge
}

/// Counter-clockwise convex hull (monotone chain).
fn convex_hull(pts: &[Vector2<f64>]) -> Vec<Vector2<f64>> {
    let mut p: Vec<Vector2<f64>> = pts.to_vec();
    p.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross = |o: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>| {
        (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
    };
    let mut lower: Vec<Vector2<f64>> = Vec::new();
    for q in &p {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], q) <= 0.0
        {
            lower.pop();
        }
        lower.push(*q);
    }
    let mut upper: Vec<Vector2<f64>> = Vec::new();
    for q in p.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], q) <= 0.0
        {
            upper.pop();
        }
        upper.push(*q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

pub const GRAVITY: f64 = 9.81;

/// Support reactions of a simply supported beam carrying a uniform load of
/// total mass `mass` spread over `extent` and centered at `center` (measured
/// from the left support). Returns `(left, right)` in newtons.
pub fn beam_support_forces(
    beam_length: f64,
    mass: f64,
    center: f64,
    extent: f64,
    gravity: f64,
) -> Result<(f64, f64), StabilityError> {
    if !(beam_length > 0.0) || mass < 0.0 || extent < 0.0 {
        return Err(StabilityError::InvalidJoint(format!(
            "beam length must be positive and mass/extent nonnegative (L={beam_length}, m={mass}, e={extent})"
        )));
    }
    let tol = 1e-12 * beam_length;
    if center - extent / 2.0 < -tol || center + extent / 2.0 > beam_length + tol {
        return Err(StabilityError::UnsupportedLoad {
            center,
            extent,
            beam_length,
        });
    }
    let total = mass * gravity;
    let right = total * center / beam_length;
    Ok((total - right, right))
}

/// Beam lying on a table, supported at its two ends: a four-corner patch
/// centered on the beam with corners at `(±L/2, ±W/2)`. Each end reaction is
/// split equally between the two corners at that end.
pub fn beam_table_patch(
    beam_length: f64,
    beam_width: f64,
    mu: f64,
    left: f64,
    right: f64,
) -> Result<PolygonPatchJoint, StabilityError> {
    let (hl, hw) = (beam_length / 2.0, beam_width / 2.0);
    PolygonPatchJoint::new(
        mu,
        vec![
            Vector3::new(-hl, -hw, 0.0),
            Vector3::new(-hl, hw, 0.0),
            Vector3::new(hl, -hw, 0.0),
            Vector3::new(hl, hw, 0.0),
        ],
        vec![left / 2.0, left / 2.0, right / 2.0, right / 2.0],
    )
}
