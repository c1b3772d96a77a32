use std::sync::OnceLock;

use proptest::prelude::*;

use hd_core::assembly::{energy, Medium};
use hd_core::dispersion::{solve, SolveOptions};
use hd_core::dual::{dual_value, make_smoother, Orientation};
use hd_core::eigen::{recycling_value, robin_eigen, BoundaryCondition, EigenOptions, EigenReport};
use hd_core::mesh::{generate, read_mesh, write_mesh, ConductorSpec, Generator, MeshSpec, TriMesh};
use hd_core::model::{warp, warp_derivative};
use hd_core::NodalField;

fn annulus() -> &'static TriMesh<f64> {
    static MESH: OnceLock<TriMesh<f64>> = OnceLock::new();
    MESH.get_or_init(|| {
        generate(&MeshSpec::new(Generator::Disk { radius: 2.0 }, 1, ConductorSpec::Disk { radius: 1.0 })).unwrap()
    })
}

fn robin_pair() -> &'static EigenReport<f64> {
    static PAIR: OnceLock<EigenReport<f64>> = OnceLock::new();
    PAIR.get_or_init(|| robin_eigen(annulus(), 2.5, 1.0, &EigenOptions::default()).unwrap())
}

fn field(values: &[f64]) -> NodalField<f64> {
    let n = annulus().n_vertices();
    NodalField((0..n).map(|i| values[i % values.len()]).collect())
}

fn unit_values() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0f64..=1.0, 7..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn energy_is_convex(a in unit_values(), b in unit_values(), p in 1.2f64..4.0, phi in 0.0f64..3.0, psi in 0.0f64..3.0) {
        let mesh = annulus();
        let medium = Medium::uniform(mesh, p, phi, psi).unwrap();
        let (f, g) = (field(&a), field(&b));
        let mid = NodalField(f.iter().zip(g.iter()).map(|(x, y)| 0.5 * (x + y)).collect());
        let e = |u: &NodalField<f64>| energy(mesh, &medium, u).unwrap().total;
        let (ef, eg) = (e(&f), e(&g));
        prop_assert!(e(&mid) <= 0.5 * (ef + eg) + 1e-12 * (1.0 + ef + eg));
    }

    #[test]
    fn energy_is_p_homogeneous(a in unit_values(), p in 1.2f64..4.0, c in 0.1f64..5.0) {
        let mesh = annulus();
        let medium = Medium::uniform(mesh, p, 1.0, 2.0).unwrap();
        let f = field(&a);
        let e = energy(mesh, &medium, &f).unwrap().total;
        let ec = energy(mesh, &medium, &f.scaled(c)).unwrap().total;
        prop_assert!((ec - c.powf(p) * e).abs() <= 1e-10 * (1.0 + ec));
    }

    #[test]
    fn dual_dominates_twice_energy(a in unit_values(), p in 1.2f64..4.0, phi in 0.0f64..3.0, psi in 0.0f64..3.0) {
        let mesh = annulus();
        let medium = Medium::uniform(mesh, p, phi, psi).unwrap();
        let f = field(&a);
        let e = energy(mesh, &medium, &f).unwrap().total;
        let d = dual_value(mesh, &medium, &f).unwrap();
        prop_assert!(d >= 2.0 * e - 1e-10 * (1.0 + e));
    }

    #[test]
    fn recycling_bounds_eigenvalue(a in proptest::collection::vec(0.05f64..=1.0, 7..40)) {
        let pair = robin_pair();
        let u = field(&a);
        let value = recycling_value(annulus(), pair.p, BoundaryCondition::Robin(1.0), &u, pair.lambda).unwrap();
        prop_assert!(value >= pair.lambda * (1.0 - 1e-10));
    }

    #[test]
    fn smoother_is_monotone(eps in 0.01f64..0.2, mut ts in proptest::collection::vec(0.0f64..=1.0, 2..30)) {
        let Ok(h) = make_smoother(eps, Orientation::Upper) else {
            prop_assert!(eps > 0.19);
            return Ok(());
        };
        prop_assert!(h.delta < 1.0);
        prop_assert!(h.h(0.0).abs() < 1e-15);
        prop_assert!((h.h(1.0) - 1.0).abs() < 1e-10);
        ts.sort_by(f64::total_cmp);
        for w in ts.windows(2) {
            prop_assert!(h.h(w[1]) >= h.h(w[0]) - 1e-14);
        }
    }

    #[test]
    fn field_text_round_trip(a in unit_values()) {
        let f = field(&a);
        let mut buf = Vec::new();
        f.write_text(&mut buf).unwrap();
        let g = NodalField::<f64>::read_text(buf.as_slice()).unwrap();
        prop_assert_eq!(f.values(), g.values());
    }

    #[test]
    fn warp_solves_its_ode(kappa in -4.0f64..4.0, lambda in -3.0f64..3.0, t in 0.0f64..1.5) {
        prop_assert!((warp(kappa, lambda, 0.0) - 1.0).abs() < 1e-15);
        prop_assert!((warp_derivative(kappa, lambda, 0.0) + lambda).abs() < 1e-14);
        let h = 1e-4;
        let second = (warp(kappa, lambda, t + h) - 2.0 * warp(kappa, lambda, t) + warp(kappa, lambda, t - h)) / (h * h);
        let scale = 1.0 + warp(kappa, lambda, t).abs() * (1.0 + kappa.abs());
        prop_assert!((second + kappa * warp(kappa, lambda, t)).abs() < 1e-5 * scale);
        let slope = (warp(kappa, lambda, t + h) - warp(kappa, lambda, t - h)) / (2.0 * h);
        prop_assert!((slope - warp_derivative(kappa, lambda, t)).abs() < 1e-6 * scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn minimizer_stays_in_unit_range(p in 1.5f64..3.5, phi in 0.0f64..5.0, psi in 0.0f64..5.0) {
        let mesh = annulus();
        let medium = Medium::uniform(mesh, p, phi, psi).unwrap();
        let r = solve(mesh, &medium, &SolveOptions::default()).unwrap();
        let (lo, hi) = r.minimizer.range();
        prop_assert!(lo >= -1e-10 && hi <= 1.0 + 1e-10);
        prop_assert!(r.identity_residual < 1e-8);
    }

    #[test]
    fn mesh_text_round_trip(level in 0u32..3, side in 0.5f64..3.0) {
        let mesh: TriMesh<f64> = generate(&MeshSpec::new(Generator::Square { side }, level, ConductorSpec::None)).unwrap();
        let mut buf = Vec::new();
        write_mesh(&mesh, &mut buf).unwrap();
        let back: TriMesh<f64> = read_mesh(buf.as_slice()).unwrap();
        prop_assert_eq!(mesh.triangles(), back.triangles());
        prop_assert_eq!(mesh.vertices(), back.vertices());
        prop_assert_eq!(mesh.region(), back.region());
    }
}
