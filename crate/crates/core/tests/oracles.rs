use std::f64::consts::PI;

use kornshell::grid_field::{ScalarField, ShellGrid, VecField3};
use kornshell::korn_solver::{korn_second_constant, EigenOptions, GridPolicy};
use kornshell::shell_ops::{gradient, strain};
use kornshell::surface::{SurfacePatch, Vec3};

fn curved_patches() -> Vec<SurfacePatch> {
    vec![
        SurfacePatch::cylinder(1.0, PI, 1.0).unwrap(),
        SurfacePatch::sphere_band(1.0, PI / 3.0, 2.0 * PI / 3.0, PI).unwrap(),
        SurfacePatch::torus(2.0, 1.0, 1.0, 0.0, 1.0).unwrap(),
    ]
}

/// A smooth Cartesian vector field and its Jacobian `J[i][k] = dv_i / dX_k`.
fn cartesian(x: Vec3) -> (Vec3, [[f64; 3]; 3]) {
    let [a, b, c] = x;
    let v = [(a * b).sin() + c * c, (b - c).cos() * a, (a + 2.0 * c).exp() * 0.1 + b * b];
    let j = [
        [b * (a * b).cos(), a * (a * b).cos(), 2.0 * c],
        [(b - c).cos(), -a * (b - c).sin(), a * (b - c).sin()],
        [0.1 * (a + 2.0 * c).exp(), 2.0 * b, 0.2 * (a + 2.0 * c).exp()],
    ];
    (v, j)
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn mat_vec(m: &[[f64; 3]; 3], v: Vec3) -> Vec3 {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

/// Relative L2 error of the shell gradient against `f_i . J f_j` with
/// `(f_0, f_1, f_2) = (n, e_theta, e_z)` at the physical point `r + t n`.
fn frame_change_error(patch: &SurfacePatch, n: usize) -> (f64, f64) {
    let grid = ShellGrid::new(patch, 0.1, n, n, n).unwrap();
    let mut comps = vec![vec![0.0; grid.len()]; 3];
    let mut exact = Vec::with_capacity(grid.len());
    for idx in 0..grid.len() {
        let (t, th, z) = grid.coords(idx);
        let fr = patch.frame(th, z).unwrap();
        let r = patch.embedding(th, z).unwrap();
        let x = [r[0] + t * fr.n[0], r[1] + t * fr.n[1], r[2] + t * fr.n[2]];
        let (v, j) = cartesian(x);
        let basis = [fr.n, fr.e_theta, fr.e_z];
        for (c, f) in comps.iter_mut().zip(basis) {
            c[idx] = dot(v, f);
        }
        let mut m = [[0.0; 3]; 3];
        for (row, fi) in basis.iter().enumerate() {
            for (col, fj) in basis.iter().enumerate() {
                m[row][col] = dot(*fi, mat_vec(&j, *fj));
            }
        }
        exact.push(m);
    }
    let mut it = comps.into_iter().map(|c| ScalarField::from_values(&grid, c).unwrap());
    let u = VecField3::new(it.next().unwrap(), it.next().unwrap(), it.next().unwrap()).unwrap();
    let g = gradient(&u, patch).unwrap();
    let w = grid.quadrature_weights(patch);
    let (mut err, mut tot) = (0.0, 0.0);
    for (idx, ex) in exact.iter().enumerate() {
        let got = g.at(idx);
        for i in 0..3 {
            for k in 0..3 {
                err += w[idx] * (got[i][k] - ex[i][k]).powi(2);
                tot += w[idx] * ex[i][k].powi(2);
            }
        }
    }
    ((err / tot).sqrt(), grid.max_spacing())
}

#[test]
fn shell_gradient_matches_conjugated_cartesian_jacobian() {
    for p in curved_patches() {
        let levels: Vec<(f64, f64)> = [9, 17, 33].iter().map(|&n| frame_change_error(&p, n)).collect();
        let (e0, d0) = levels[0];
        let (e2, d2) = levels[2];
        let order = (e0 / e2).ln() / (d0 / d2).ln();
        assert!(e2 < 1e-2, "{}: finest error {e2:.2e}", p.name());
        assert!(order >= 1.8, "{}: observed order {order:.3} ({levels:?})", p.name());
    }
}

#[test]
fn second_eigenvalue_does_not_drop_on_nested_refinement() {
    let p = SurfacePatch::cylinder(1.0, PI, 1.0).unwrap();
    let opts = EigenOptions::default();
    let coarse = korn_second_constant(&p, 0.1, &GridPolicy::new(3, 7, 7), &opts).unwrap();
    let fine = korn_second_constant(&p, 0.1, &GridPolicy::new(5, 13, 13), &opts).unwrap();
    assert!(fine.lambda >= 0.98 * coarse.lambda, "{} < {}", fine.lambda, coarse.lambda);
}

#[test]
fn second_maximizer_is_not_rigid() {
    for p in [SurfacePatch::plate(1.0, 1.0).unwrap(), SurfacePatch::cylinder(1.0, PI, 1.0).unwrap()] {
        let r = korn_second_constant(&p, 0.1, &GridPolicy::new(3, 8, 8), &EigenOptions::default()).unwrap();
        let g = gradient(&r.maximizer, &p).unwrap();
        let gn = kornshell::grid_field::norm(&g, &p).unwrap();
        let en = kornshell::grid_field::norm(&strain(&g), &p).unwrap();
        assert!(en > 1e-8 * gn, "{}: strain {en:.2e} vs gradient {gn:.2e}", p.name());
    }
}
