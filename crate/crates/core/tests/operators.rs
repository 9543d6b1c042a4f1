use lpkit_core::atoms::{build_atom, Ball, Shape, Source};
use lpkit_core::kernel::builtin;
use lpkit_core::operators::{evaluate, OperatorParams, OperatorTag};
use lpkit_core::quad::oracle::{dense_oracle, DenseResolution};
use lpkit_core::quad::QuadPlan;

fn atom_at(c: &[f64]) -> Source {
    build_atom(2, 1.0, Ball::new(c, 1.0), &Shape::radial_bump(), 1).unwrap().source()
}

fn eval(tag: OperatorTag, f: &Source, x: &[f64], lambda: f64) -> f64 {
    let k = builtin("circle-harmonic-1").unwrap();
    let params = OperatorParams::operator_only(2, 1.5, lambda).unwrap();
    evaluate(tag, &k, f, x, &params, &QuadPlan::default()).unwrap().estimate.value
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

#[test]
fn reflections_of_a_radial_atom() {
    // cos θ is odd under x₁ ↦ −x₁ and even under x₂ ↦ −x₂; μ squares it away
    let f = atom_at(&[0.0, 0.0]);
    for tag in [OperatorTag::Area, OperatorTag::Star] {
        let a = eval(tag, &f, &[5.0, 3.0], 3.0);
        let b = eval(tag, &f, &[-5.0, 3.0], 3.0);
        let c = eval(tag, &f, &[5.0, -3.0], 3.0);
        assert!(close(a, b, 1e-6) && close(a, c, 1e-6), "{tag:?}: {a} {b} {c}");
    }
}

#[test]
fn translation_covariance() {
    let f = atom_at(&[0.0, 0.0]);
    let g = atom_at(&[2.5, -1.0]);
    for tag in [OperatorTag::Area, OperatorTag::Star] {
        let a = eval(tag, &f, &[6.0, 2.0], 3.0);
        let b = eval(tag, &g, &[8.5, 1.0], 3.0);
        assert!(close(a, b, 1e-6), "{tag:?}: {a} vs {b}");
    }
}

#[test]
fn positive_homogeneity() {
    let f = atom_at(&[0.0, 0.0]);
    for tag in [OperatorTag::Area, OperatorTag::Star] {
        let a = eval(tag, &f, &[4.0, 1.0], 3.0);
        let b = eval(tag, &f.scaled(-2.5), &[4.0, 1.0], 3.0);
        assert!(close(2.5 * a, b, 1e-9), "{tag:?}: {a} vs {b}");
    }
}

#[test]
fn star_decreases_in_lambda() {
    let f = atom_at(&[0.0, 0.0]);
    let v: Vec<f64> = [2.5, 3.0, 4.0].iter().map(|&l| eval(OperatorTag::Star, &f, &[6.0, 0.0], l)).collect();
    assert!(v[0] > v[1] && v[1] > v[2], "{v:?}");
}

#[test]
fn area_function_inside_the_support_against_dense_grid() {
    let k = builtin("circle-harmonic-1").unwrap();
    let f = atom_at(&[0.0, 0.0]);
    let x = [0.5, 0.25];
    let a = eval(OperatorTag::Area, &f, &x, 3.0);
    let res = DenseResolution { n_d: 120, n_psi: 64, n_u: 48, n_theta: 32, reach: 24.0 };
    let d = dense_oracle(&k, &f, &x, OperatorTag::Area, 1.5, 3.0, 1e-3, &res).unwrap();
    assert!(close(a, d, 0.03), "{a} vs {d}");
}
