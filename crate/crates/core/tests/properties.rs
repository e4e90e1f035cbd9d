use std::f64::consts::PI;

use proptest::prelude::*;

use kornshell::grid_field::{diff, inner_product, norm, sample, Axis, ShellGrid, VecField3};
use kornshell::korn_solver::{fit_scaling, split_weights, FormWeights, QuadraticForm, ShellForm, ShellForms};
use kornshell::rect_harmonic::{hardy_check, Rect};
use kornshell::shell_ops::{
    gradient, korn_terms, random_rigid_motions, rigid_motion_field, skew_part, strain, StrainSource,
};
use kornshell::surface::SurfacePatch;

fn patch(kind: u8) -> SurfacePatch {
    match kind % 4 {
        0 => SurfacePatch::plate(1.0, 1.0).unwrap(),
        1 => SurfacePatch::cylinder(1.0, PI, 1.0).unwrap(),
        2 => SurfacePatch::sphere_band(1.0, PI / 3.0, 2.0 * PI / 3.0, PI).unwrap(),
        _ => SurfacePatch::torus(2.0, 1.0, 1.0, 0.0, 1.0).unwrap(),
    }
}

fn field(grid: &ShellGrid, c: &[f64]) -> VecField3 {
    let comp = |o: usize| {
        let c = c[o..o + 4].to_vec();
        sample(move |t, th, z| c[0] + c[1] * (2.0 * th + z).sin() + c[2] * t * z + c[3] * (t + th * z).cos(), grid)
    };
    VecField3::new(comp(0), comp(4), comp(8)).unwrap()
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, 12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn inner_product_is_symmetric_and_matches_norm(kind in 0u8..4, c in coeffs()) {
        let p = patch(kind);
        let g = ShellGrid::new(&p, 0.1, 3, 7, 6).unwrap();
        let u = field(&g, &c);
        let [a, b, _] = u.components();
        prop_assert_eq!(inner_product(a, b, &p).unwrap(), inner_product(b, a, &p).unwrap());
        let n = norm(a, &p).unwrap();
        let ip = inner_product(a, a, &p).unwrap();
        prop_assert!((n * n - ip).abs() <= 1e-14 * ip.max(1e-300));
    }

    #[test]
    fn diff_is_exact_on_quadratics_in_the_interior(q in prop::array::uniform3(-3.0..3.0f64)) {
        let p = SurfacePatch::plate(1.3, 0.8).unwrap();
        let g = ShellGrid::new(&p, 0.2, 4, 6, 5).unwrap();
        let f = sample(|_, th, _| q[0] + q[1] * th + q[2] * th * th, &g);
        let d = diff(&f, Axis::Theta).unwrap();
        for (idx, v) in d.values().iter().enumerate() {
            let (_, th, _) = g.coords(idx);
            let exact = q[1] + 2.0 * q[2] * th;
            prop_assert!((v - exact).abs() <= 1e-11 * (1.0 + exact.abs()));
        }
    }

    #[test]
    fn gradient_splits_into_strain_and_skew(kind in 0u8..4, c in coeffs()) {
        let p = patch(kind);
        let g = ShellGrid::new(&p, 0.1, 3, 6, 6).unwrap();
        let m = gradient(&field(&g, &c), &p).unwrap();
        let (e, w) = (strain(&m), skew_part(&m));
        let back = e.add(&w).unwrap();
        for idx in 0..g.len() {
            let (x, y, s, k) = (m.at(idx), back.at(idx), e.at(idx), w.at(idx));
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert!((x[i][j] - y[i][j]).abs() <= 1e-12 * (1.0 + x[i][j].abs()));
                    prop_assert_eq!(s[i][j], s[j][i]);
                    prop_assert_eq!(k[i][j], -k[j][i]);
                }
            }
        }
    }

    #[test]
    fn quotients_are_scale_invariant(kind in 0u8..4, c in coeffs(), scale in prop_oneof![1e-3..1e-1f64, 1e1..1e3f64]) {
        let p = patch(kind);
        let g = ShellGrid::new(&p, 0.1, 3, 6, 6).unwrap();
        let u = field(&g, &c);
        let a = korn_terms(&u, &p, StrainSource::Full).unwrap();
        let b = korn_terms(&u.scaled(scale), &p, StrainSource::Full).unwrap();
        prop_assert!((a.interp_quotient() - b.interp_quotient()).abs() <= 1e-12 * a.interp_quotient());
        prop_assert!((a.second_quotient() - b.second_quotient()).abs() <= 1e-12 * a.second_quotient());
    }

    #[test]
    fn split_denominator_envelopes_the_product_term(kind in 0u8..4, c in coeffs(), log_s in -6.0..6.0f64) {
        let p = patch(kind);
        let h = 0.1;
        let g = ShellGrid::new(&p, h, 3, 6, 6).unwrap();
        let u = field(&g, &c);
        let k = korn_terms(&u, &p, StrainSource::Full).unwrap();
        prop_assume!(k.normal > 1e-8 && k.strain > 1e-8);
        let forms = ShellForms::new(&p, &g, StrainSource::Full).unwrap();
        let x = u.to_dofs();
        let d = |s: f64| ShellForm::new(forms.clone(), split_weights(s, h), "D").energy(&x);
        let exact = k.interp_denominator();
        prop_assert!(d(log_s.exp()) >= exact * (1.0 - 1e-12));
        let s_star = k.strain / k.normal;
        prop_assert!((d(s_star) - exact).abs() <= 1e-10 * exact);
    }

    #[test]
    fn forms_are_symmetric(kind in 0u8..4, c in coeffs(), c2 in coeffs()) {
        let p = patch(kind);
        let g = ShellGrid::new(&p, 0.1, 3, 5, 6).unwrap();
        let forms = ShellForms::new(&p, &g, StrainSource::Full).unwrap();
        let (x, y) = (field(&g, &c).to_dofs(), field(&g, &c2).to_dofs());
        for w in [FormWeights::G, FormWeights::M, FormWeights::E, FormWeights::N] {
            let f = ShellForm::new(forms.clone(), w, "F");
            let (mut fx, mut fy) = (vec![0.0; x.len()], vec![0.0; x.len()]);
            f.apply(&x, &mut fx);
            f.apply(&y, &mut fy);
            let (a, b): (f64, f64) = (y.iter().zip(&fx).map(|(p, q)| p * q).sum(), x.iter().zip(&fy).map(|(p, q)| p * q).sum());
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn fit_recovers_power_laws(slope in -2.0..2.0f64, c in 0.1..10.0f64) {
        let pts: Vec<(f64, f64)> = [0.2, 0.1, 0.05, 0.025].iter().map(|&h: &f64| (h, c * h.powf(slope))).collect();
        let f = fit_scaling(&pts).unwrap();
        prop_assert!((f.slope - slope).abs() <= 1e-10);
        prop_assert!((f.intercept - c.ln()).abs() <= 1e-9);
    }

    #[test]
    fn random_rigid_motions_are_skew_and_nearly_strain_free(seed in any::<u64>(), kind in 1u8..4) {
        let p = patch(kind);
        let g = ShellGrid::new(&p, 0.1, 9, 17, 17).unwrap();
        for (a, b) in random_rigid_motions(seed, 2) {
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert_eq!(b[i][j], -b[j][i]);
                }
            }
            let m = gradient(&rigid_motion_field(a, b, &p, &g).unwrap(), &p).unwrap();
            let (gn, en) = (norm(&m, &p).unwrap(), norm(&strain(&m), &p).unwrap());
            prop_assume!(gn > 1e-6);
            prop_assert!(en <= 10.0 * g.max_spacing().powi(2) * gn, "{} vs {}", en / gn, g.max_spacing());
        }
    }

    #[test]
    fn hardy_estimate_holds_for_piecewise_linear_functions(
        values in prop::collection::vec(-3.0..3.0f64, 3..12),
        a in 0.1..5.0f64,
    ) {
        // breakpoints sit on the half-resolution nodes so the coarse-sampling check is exact
        let m = values.len() - 1;
        let n = 4 * m;
        let samples: Vec<f64> = (0..=n)
            .map(|k| {
                let x = k as f64 / 4.0;
                let i = (x.floor() as usize).min(m - 1);
                let f = x - i as f64;
                values[i] * (1.0 - f) + values[i + 1] * f
            })
            .collect();
        let r = hardy_check(&samples, a).unwrap();
        prop_assert!(r.lhs <= r.rhs * (1.0 + 1e-12), "{} > {}", r.lhs, r.rhs);
    }

    #[test]
    fn boundary_distance_is_bounded(h in 0.01..1.0f64, extra in 0.01..5.0f64, fx in 0.0..1.0f64, fy in 0.0..1.0f64) {
        let b = 3.0 * h + extra;
        let r = Rect::new(h, b).unwrap();
        prop_assert!(r.is_thin());
        let d = r.distance_to_boundary(fx * h, fy * b);
        prop_assert!(d >= 0.0 && d <= 0.5 * h + 1e-15);
    }
}
