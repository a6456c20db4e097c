use super::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn approx(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn single_variable_max() {
    let mut lp = LinearProgram::new(1);
    lp.set_objective(&[(0, 1.0)], Sense::Maximize);
    lp.add_row(vec![(0, 1.0)], Relation::Le, 3.0);
    lp.set_bounds(0, 0.0, f64::INFINITY);
    let sol = solve_lp(&lp).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!(approx(sol.value, 3.0, 1e-9));
    assert!(approx(sol.x[0], 3.0, 1e-9));
}

#[test]
fn contradictory_rows_are_infeasible() {
    let mut lp = LinearProgram::new(1);
    lp.add_row(vec![(0, 1.0)], Relation::Le, 0.0);
    lp.add_row(vec![(0, 1.0)], Relation::Ge, 1.0);
    let sol = solve_lp(&lp).unwrap();
    assert_eq!(sol.status, LpStatus::Infeasible);
}

#[test]
fn unbounded_direction_detected() {
    let mut lp = LinearProgram::new(2);
    lp.set_objective(&[(0, 1.0), (1, 1.0)], Sense::Maximize);
    lp.add_row(vec![(0, 1.0), (1, -1.0)], Relation::Le, 1.0);
    let sol = solve_lp(&lp).unwrap();
    assert_eq!(sol.status, LpStatus::Unbounded);
}

/// Max-P over random bounded polygons agrees with the vertex-enumeration
/// oracle, which never touches the simplex path.
#[test]
fn polygon_max_p_matches_vertex_enumeration() {
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..50 {
        let n_sides = rng.gen_range(4..=16);
        let radius = rng.gen_range(0.2..2.0);
        let cx = rng.gen_range(-0.5..0.5);
        let cy = rng.gen_range(-0.5..0.5);
        let rows: Vec<([f64; 2], f64)> = (0..n_sides)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n_sides as f64;
                let (s, c) = th.sin_cos();
                ([c, s], radius + c * cx + s * cy)
            })
            .collect();
        let verts = enumerate_vertices_2d(&rows);
        assert!(!verts.is_empty());
        let best_p = verts.iter().map(|v| v[0]).fold(f64::MIN, f64::max);

        let mut lp = LinearProgram::new(2);
        lp.set_objective(&[(0, 1.0)], Sense::Maximize);
        for (a, b) in &rows {
            lp.add_row(vec![(0, a[0]), (1, a[1])], Relation::Le, *b);
        }
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(approx(sol.value, best_p, 1e-7), "{} vs {}", sol.value, best_p);
    }
}

#[test]
fn equality_rows_and_free_variables() {
    // min x + y s.t. x - y = 2, x + y >= 4, both free.
    let mut lp = LinearProgram::new(2);
    lp.set_objective(&[(0, 1.0), (1, 1.0)], Sense::Minimize);
    lp.add_row(vec![(0, 1.0), (1, -1.0)], Relation::Eq, 2.0);
    lp.add_row(vec![(0, 1.0), (1, 1.0)], Relation::Ge, 4.0);
    let sol = solve_lp(&lp).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!(approx(sol.value, 4.0, 1e-8));
    assert!(approx(sol.x[0], 3.0, 1e-8));
    assert!(approx(sol.x[1], 1.0, 1e-8));
}

#[test]
fn redundant_equality_rows_are_tolerated() {
    let mut lp = LinearProgram::new(2);
    lp.set_objective(&[(0, 1.0)], Sense::Maximize);
    lp.add_row(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 1.0);
    lp.add_row(vec![(0, 2.0), (1, 2.0)], Relation::Eq, 2.0);
    lp.set_bounds(0, 0.0, f64::INFINITY);
    lp.set_bounds(1, 0.0, f64::INFINITY);
    let sol = solve_lp(&lp).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!(approx(sol.value, 1.0, 1e-9));
}

#[test]
fn bounds_both_sides_and_mirror() {
    // max -2x + y with x in [-1, 2], y <= 5 (unbounded below in y).
    let mut lp = LinearProgram::new(2);
    lp.set_objective(&[(0, -2.0), (1, 1.0)], Sense::Maximize);
    lp.set_bounds(0, -1.0, 2.0);
    lp.set_bounds(1, f64::NEG_INFINITY, 5.0);
    let sol = solve_lp(&lp).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!(approx(sol.value, 7.0, 1e-9));
    assert!(approx(sol.x[0], -1.0, 1e-9));
    assert!(approx(sol.x[1], 5.0, 1e-9));
}

/// |primal - dual| <= 1e-6 (1 + |primal|) on row-only programs where the dual
/// objective is just rhs . duals.
#[test]
fn duality_gap_on_random_programs() {
    let mut rng = StdRng::seed_from_u64(99);
    let mut solved = 0;
    while solved < 40 {
        let n = rng.gen_range(2..6);
        let m = rng.gen_range(2..8);
        let mut lp = LinearProgram::new(n);
        let obj: Vec<(usize, f64)> = (0..n).map(|j| (j, rng.gen_range(-1.0..1.0))).collect();
        lp.set_objective(&obj, Sense::Maximize);
        for _ in 0..m {
            let coeffs: Vec<(usize, f64)> =
                (0..n).map(|j| (j, rng.gen_range(-1.0..1.0))).collect();
            lp.add_row(coeffs, Relation::Le, rng.gen_range(0.5..2.0));
        }
        for j in 0..n {
            lp.set_bounds(j, 0.0, f64::INFINITY);
        }
        let sol = solve_lp(&lp).unwrap();
        if sol.status != LpStatus::Optimal {
            continue;
        }
        solved += 1;
        let dual_obj: f64 = lp
            .rows()
            .iter()
            .zip(&sol.row_duals)
            .map(|(r, y)| r.rhs * y)
            .sum();
        assert!(
            (sol.value - dual_obj).abs() <= 1e-6 * (1.0 + sol.value.abs()),
            "primal {} dual {}",
            sol.value,
            dual_obj
        );
    }
}

#[test]
fn determinism_identical_lp_identical_answer() {
    let build = || {
        let mut lp = LinearProgram::new(3);
        lp.set_objective(&[(0, 1.0), (1, 2.0), (2, -1.0)], Sense::Maximize);
        lp.add_row(vec![(0, 1.0), (1, 1.0), (2, 1.0)], Relation::Le, 4.0);
        lp.add_row(vec![(0, 1.0), (1, -1.0)], Relation::Ge, -2.0);
        lp.add_row(vec![(1, 1.0), (2, 3.0)], Relation::Eq, 1.0);
        for j in 0..3 {
            lp.set_bounds(j, 0.0, 3.0);
        }
        lp
    };
    let a = solve_lp(&build()).unwrap();
    let b = solve_lp(&build()).unwrap();
    assert_eq!(a.status, b.status);
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    for (xa, xb) in a.x.iter().zip(&b.x) {
        assert_eq!(xa.to_bits(), xb.to_bits());
    }
}

#[test]
fn feasibility_zero_violation_when_realizable() {
    // Target P = 1.5 realizable inside box [0, 2].
    let mut lp = LinearProgram::new(1);
    lp.set_bounds(0, 0.0, 2.0);
    let r = lp.add_row(vec![(0, 1.0)], Relation::Eq, 1.5);
    let out = solve_feasibility(&lp, &[r]).unwrap();
    assert!(out.violation.abs() <= 1e-9);
    assert!(approx(out.x[0], 1.5, 1e-9));
}

/// Shifting a solved max-P target beyond the optimum by delta yields
/// violation exactly delta, and slacks obey the sign condition.
#[test]
fn feasibility_violation_equals_overshoot() {
    let mut box_lp = LinearProgram::new(2);
    box_lp.set_bounds(0, -0.4, 0.9);
    box_lp.set_bounds(1, -0.2, 0.3);
    box_lp.set_objective(&[(0, 1.0), (1, 1.0)], Sense::Maximize);
    let max_p = solve_lp(&box_lp).unwrap().value;
    let delta = 0.125;

    let mut lp = LinearProgram::new(2);
    lp.set_bounds(0, -0.4, 0.9);
    lp.set_bounds(1, -0.2, 0.3);
    let r = lp.add_row(vec![(0, 1.0), (1, 1.0)], Relation::Eq, max_p + delta);
    let out = solve_feasibility(&lp, &[r]).unwrap();
    assert!(approx(out.violation, delta, 1e-8));
    let (sp, sm) = out.slacks[0];
    assert!(sp >= -1e-12 && sm >= -1e-12, "slacks must be nonnegative");
    assert!(approx(sp, delta, 1e-8));
}

#[test]
fn malformed_programs_are_rejected() {
    let mut lp = LinearProgram::new(1);
    lp.add_row(vec![(0, f64::NAN)], Relation::Le, 1.0);
    assert!(solve_lp(&lp).is_err());

    let mut lp2 = LinearProgram::new(1);
    lp2.add_row(vec![(3, 1.0)], Relation::Le, 1.0);
    assert!(solve_lp(&lp2).is_err());
}

#[test]
fn no_rows_only_bounds() {
    let mut lp = LinearProgram::new(2);
    lp.set_objective(&[(0, 1.0), (1, -1.0)], Sense::Maximize);
    lp.set_bounds(0, -1.0, 4.0);
    lp.set_bounds(1, 2.0, 6.0);
    let sol = solve_lp(&lp).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!(approx(sol.value, 2.0, 1e-12));
}

#[test]
fn degenerate_stacked_rows_still_terminate() {
    // Many coincident constraints through the optimum force degenerate pivots.
    let mut lp = LinearProgram::new(2);
    lp.set_objective(&[(0, 1.0), (1, 1.0)], Sense::Maximize);
    for k in 0..12 {
        let a = 1.0 + (k as f64) * 1e-15;
        lp.add_row(vec![(0, a), (1, 1.0)], Relation::Le, 1.0);
    }
    lp.set_bounds(0, 0.0, f64::INFINITY);
    lp.set_bounds(1, 0.0, f64::INFINITY);
    let sol = solve_lp(&lp).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!(approx(sol.value, 1.0, 1e-8));
}
