use hypowalk::fourier::{FourierBasis, FourierCoeffs};
use hypowalk::operator::{
    assemble_generator, assemble_transfer, assemble_transfer_with, eigen, flat_multiplier, markov_checks, sinc,
    AssemblyOptions, Layout,
};
use hypowalk::Model;
use num_complex::Complex64;
use proptest::prelude::*;

fn hermitian_coeffs(basis: FourierBasis, raw: &[(f64, f64)], only_n0: bool) -> FourierCoeffs {
    let mut c = FourierCoeffs::zeros(basis);
    let m = basis.cutoff as i64;
    let mut it = raw.iter().cycle();
    for n in 0..=m {
        for mm in -m..=m {
            if (n == 0 && mm < 0) || (only_n0 && n != 0) {
                continue;
            }
            let &(a, b) = it.next().unwrap();
            let z = if n == 0 && mm == 0 { Complex64::new(a, 0.0) } else { Complex64::new(a, b) };
            c.data[basis.index(mm, n).unwrap()] = z;
            c.data[basis.index(-mm, -n).unwrap()] = z.conj();
        }
    }
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flat_spectrum_is_the_sinc_multiplier(h in 0.01f64..0.5, cutoff in 2usize..10) {
        let op = assemble_transfer(Model::Flat2, h, cutoff, 16).unwrap();
        for b in &op.blocks {
            for (j, &i) in b.modes.iter().enumerate() {
                let (m, n) = op.basis.mode(i);
                for (r, v) in b.matrix.column(j).iter().enumerate() {
                    let expect = if r == j { flat_multiplier(m, n, h) } else { 0.0 };
                    prop_assert!((v - expect).abs() <= 1e-10, "({m},{n}) row {r}: {v} vs {expect}");
                }
            }
        }
    }

    #[test]
    fn one_field_quadratic_form_is_sinc_sum(h in 0.01f64..0.5, raw in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 40)) {
        let opts = AssemblyOptions { field: Some(0), ..Default::default() };
        let op = assemble_transfer_with(Model::Flat2, h, 6, &opts).unwrap();
        let u = hermitian_coeffs(op.basis, &raw, false);
        let tu = op.apply(&u).unwrap();
        let lhs = 2.0 * (u.inner(&u).re - u.inner(&tu).re);
        let rhs: f64 = u.data.iter().enumerate().map(|(i, z)| {
            let (m, _) = op.basis.mode(i);
            2.0 * (1.0 - sinc(std::f64::consts::TAU * m as f64 * h)) * z.norm_sqr()
        }).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-10);
    }

    #[test]
    fn transfer_contracts_and_dirichlet_form_is_nonnegative(
        h in 0.02f64..0.5,
        model in prop::sample::select(vec![Model::Flat2, Model::Grushin2]),
        raw in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 40),
    ) {
        let op = assemble_transfer(model, h, 5, 16).unwrap();
        let u = hermitian_coeffs(op.basis, &raw, false);
        let tu = op.apply(&u).unwrap();
        prop_assert!(tu.l2_norm() <= u.l2_norm() * (1.0 + 1e-12));
        prop_assert!(u.inner(&u).re - u.inner(&tu).re >= -1e-10);
        let hermitian = tu.data.iter().enumerate().all(|(i, z)| {
            let (m, n) = op.basis.mode(i);
            (tu.get(-m, -n).conj() - z).norm() <= 1e-12
        });
        prop_assert!(hermitian);
    }
}

#[test]
fn grushin_quadrature_converges() {
    for (cutoff, h) in [(16, 0.2), (32, 0.1), (64, 0.2), (64, 0.05)] {
        let m = cutoff as i64;
        let layout = Layout::Frequencies(vec![-m, -3, 0, 1, m / 2 + 1, m]);
        let at = |quadrature| {
            let opts = AssemblyOptions { quadrature, layout: layout.clone(), field: None };
            assemble_transfer_with(Model::Grushin2, h, cutoff, &opts).unwrap()
        };
        let (a, b) = (at(16), at(32));
        let diff = a.blocks.iter().zip(&b.blocks).map(|(x, y)| (&x.matrix - &y.matrix).amax()).fold(0.0, f64::max);
        assert!(diff <= 1e-10, "M={cutoff} h={h}: {diff:e}");
        assert!(a.raw_asymmetry <= 1e-9, "raw asymmetry {:e}", a.raw_asymmetry);
        assert_eq!(a.symmetry_residual(), 0.0);
    }
}

#[test]
fn dense_and_block_spectra_agree() {
    let dense = AssemblyOptions { layout: Layout::Dense, ..Default::default() };
    for h in [0.2, 0.07] {
        let b = eigen(&assemble_transfer(Model::Grushin2, h, 6, 16).unwrap()).unwrap().values();
        let d = eigen(&assemble_transfer_with(Model::Grushin2, h, 6, &dense).unwrap()).unwrap().values();
        let diff = b.iter().zip(&d).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff <= 1e-10, "h={h}: {diff:e}");
    }
    let bl = eigen(&assemble_generator(Model::Grushin2, 6).unwrap()).unwrap().values();
    let dl = eigen(&hypowalk::operator::assemble_generator_with(Model::Grushin2, 6, &dense).unwrap()).unwrap().values();
    let diff = bl.iter().zip(&dl).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(diff <= 1e-10, "generator: {diff:e}");
}

#[test]
fn grushin_zero_block_is_averaged_flat_operator() {
    let h = 0.13;
    let op = assemble_transfer(Model::Grushin2, h, 8, 16).unwrap();
    let b = op.block_for(0).unwrap();
    for (j, &i) in b.modes.iter().enumerate() {
        let (m, _) = op.basis.mode(i);
        for r in 0..b.matrix.nrows() {
            let expect = if r == j { 0.5 * (sinc(std::f64::consts::TAU * m as f64 * h) + 1.0) } else { 0.0 };
            assert!((b.matrix[(r, j)] - expect).abs() <= 1e-12);
        }
    }
    let l = assemble_generator(Model::Grushin2, 8).unwrap();
    let l0 = l.block_for(0).unwrap();
    for (j, &i) in l0.modes.iter().enumerate() {
        let (m, _) = l.basis.mode(i);
        assert!((l0.matrix[(j, j)] - std::f64::consts::PI.powi(2) / 3.0 * (m * m) as f64).abs() <= 1e-10);
    }
}

#[test]
fn generator_kernel_is_the_constants() {
    for model in [Model::Flat2, Model::Grushin2] {
        let v = eigen(&assemble_generator(model, 12).unwrap()).unwrap().values();
        assert!(v[0].abs() <= 1e-12);
        assert!(v[1] > 1e-3, "{model}: {}", v[1]);
        assert!(v.iter().all(|&x| x >= -1e-10));
    }
}

#[test]
fn markov_report_examples() {
    let r = markov_checks(&assemble_transfer(Model::Flat2, 0.1, 8, 16).unwrap()).unwrap();
    assert!(r.passed());
    assert_eq!(r.symmetry_residual, 0.0);
    assert!(r.min_eigenvalue >= -0.22);
    assert!((r.second_eigenvalue - 0.967_744_6).abs() < 1e-7);
    let g = markov_checks(&assemble_transfer(Model::Grushin2, 0.1, 16, 16).unwrap()).unwrap();
    assert!(g.passed() && g.max_abs_eigenvalue <= 1.0 + 1e-8);
}

#[test]
fn assembly_is_thread_count_invariant() {
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
            let op = assemble_transfer(Model::Grushin2, 0.07, 12, 16).unwrap();
            (op.blocks.iter().map(|b| b.matrix.clone()).collect::<Vec<_>>(), eigen(&op).unwrap().values())
        })
    };
    assert_eq!(run(1), run(4));
}
