use hypowalk::lie::{build_free_nilpotent, commutator_word, evaluate_word, witt_dimension, LieStructure};
use hypowalk::{ExactPoint, Point};
use num_rational::{BigRational, Rational64};
use num_traits::One;
use proptest::prelude::*;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn point(s: &LieStructure, raw: &[f64]) -> Point {
    Point::new(raw.iter().copied().cycle().take(s.dim()).collect())
}

fn max_diff(a: &Point, b: &Point) -> f64 {
    a.coords.iter().zip(&b.coords).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn structure() -> impl Strategy<Value = LieStructure> {
    (1usize..=3, 1usize..=4).prop_map(|(p, r)| build_free_nilpotent(p, r).unwrap())
}

fn coords() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 32)
}

#[test]
fn layer_dims_match_necklace_count() {
    // Witt: (1/n) sum_{d | n} mu(d) p^{n/d}
    fn mobius(n: usize) -> i64 {
        let (mut m, mut k, mut sign) = (n, 2, 1);
        while k * k <= m {
            if m % k == 0 {
                m /= k;
                if m % k == 0 {
                    return 0;
                }
                sign = -sign;
            }
            k += 1;
        }
        if m > 1 {
            -sign
        } else {
            sign
        }
    }
    for p in 1..=4usize {
        for r in 1..=5usize {
            let s = build_free_nilpotent(p, r).unwrap();
            let dims = s.layer_dims();
            for n in 1..=r {
                let sum: i64 = (1..=n).filter(|d| n % d == 0).map(|d| mobius(d) * (p as i64).pow((n / d) as u32)).sum();
                assert_eq!(dims[n - 1] as i64, sum / n as i64, "p={p} n={n}");
                assert_eq!(dims[n - 1], witt_dimension(p, n));
            }
            assert_eq!(s.dim(), dims.iter().sum::<usize>());
            assert_eq!(s.homogeneous_dim(), dims.iter().enumerate().map(|(j, a)| (j + 1) * a).sum::<usize>());
        }
    }
}

#[test]
fn structure_constants_are_exactly_antisymmetric_and_jacobi() {
    for p in 1..=4usize {
        for r in 1..=5usize {
            let s = build_free_nilpotent(p, r).unwrap();
            let d = s.dim();
            let w = |i: usize| s.weight(i);
            for a in 0..d {
                for b in 0..d {
                    let mut ab: Vec<(usize, i64)> = s.bracket_basis(a, b).to_vec();
                    let mut ba: Vec<(usize, i64)> = s.bracket_basis(b, a).iter().map(|&(g, c)| (g, -c)).collect();
                    ab.sort_unstable();
                    ba.sort_unstable();
                    assert_eq!(ab, ba);
                    for &(g, _) in &ab {
                        assert_eq!(w(g), w(a) + w(b), "grading");
                    }
                }
            }
            // only triples of total weight <= r can be nonzero
            let bracket = |x: usize, v: &[(usize, i64)], out: &mut Vec<i64>| {
                for &(g, c) in v {
                    for &(k, e) in s.bracket_basis(x, g) {
                        out[k] += c * e;
                    }
                }
            };
            for a in 0..d {
                for b in 0..d {
                    for c in 0..d {
                        if w(a) + w(b) + w(c) > r {
                            continue;
                        }
                        let mut acc = vec![0i64; d];
                        bracket(a, s.bracket_basis(b, c), &mut acc);
                        bracket(b, s.bracket_basis(c, a), &mut acc);
                        bracket(c, s.bracket_basis(a, b), &mut acc);
                        assert!(acc.iter().all(|&v| v == 0), "p={p} r={r} ({a},{b},{c})");
                    }
                }
            }
        }
    }
}

#[test]
fn product_agrees_with_degree_four_bch() {
    // log(e^X e^Y) = X + Y + [X,Y]/2 + ([X,[X,Y]] + [Y,[Y,X]])/12 - [Y,[X,[X,Y]]]/24
    for (p, r) in [(2, 4), (3, 3), (3, 4)] {
        let s = build_free_nilpotent(p, r).unwrap();
        let d = s.dim();
        let x: Vec<BigRational> = (0..d).map(|i| q(i as i64 % 5 - 2, 3)).collect();
        let y: Vec<BigRational> = (0..d).map(|i| q(7 - (i as i64 * 3) % 11, 4)).collect();
        let br = |a: &[BigRational], b: &[BigRational]| s.bracket(a, b).unwrap();
        let xy = br(&x, &y);
        let x_xy = br(&x, &xy);
        let y_yx = br(&y, &br(&y, &x));
        let y_x_xy = br(&y, &x_xy);
        let expect: Vec<BigRational> = (0..d)
            .map(|i| &x[i] + &y[i] + &xy[i] / q(2, 1) + (&x_xy[i] + &y_yx[i]) / q(12, 1) - &y_x_xy[i] / q(24, 1))
            .collect();
        let got = s.group_product(&ExactPoint::new(x), &ExactPoint::new(y)).unwrap();
        assert_eq!(got.coords, expect, "p={p} r={r}");
    }
}

#[test]
fn heisenberg_examples() {
    let s = build_free_nilpotent(2, 2).unwrap();
    let a = ExactPoint::new(vec![q(1, 1), q(0, 1), q(0, 1)]);
    let b = ExactPoint::new(vec![q(0, 1), q(1, 1), q(0, 1)]);
    let ab = s.group_product(&a, &b).unwrap();
    assert_eq!(ab.coords, vec![q(1, 1), q(1, 1), q(1, 2)]);
    assert_eq!(ab.to_heisenberg_chart(), [q(1, 1), q(1, 1), q(1, 1)]);
    let n = s.homogeneous_norm(&Point::new(vec![1.0, 1.0, 1.0])).unwrap();
    assert!((n - 5f64.powf(0.25)).abs() < 1e-12);
}

#[test]
fn top_layer_word_is_exact() {
    for (p, r) in [(2, 2), (2, 3), (3, 3), (2, 4)] {
        let s = build_free_nilpotent(p, r).unwrap();
        let alphas: Vec<Vec<usize>> = (0..p.pow(r as u32))
            .map(|mut code| {
                (0..r)
                    .map(|_| {
                        let g = code % p;
                        code /= p;
                        g
                    })
                    .collect()
            })
            .collect();
        for alpha in alphas {
            let t: Vec<Rational64> = (0..r).map(|l| Rational64::new(2 * l as i64 + 3, 5 - l as i64 * 7)).collect();
            let g = evaluate_word(&s, &commutator_word(&s, &alpha).unwrap(), &t).unwrap();
            let prod = t.iter().fold(Rational64::one(), |a, b| a * b);
            let expect: Vec<Rational64> =
                s.nested_generator_bracket::<Rational64>(&alpha).unwrap().into_iter().map(|c| c * prod).collect();
            assert_eq!(g.coords, expect, "alpha {alpha:?}");
        }
    }
}

#[test]
fn lower_layer_word_remainder_has_next_order() {
    let s = build_free_nilpotent(2, 4).unwrap();
    for alpha in [vec![0, 1], vec![1, 0], vec![0, 0, 1], vec![1, 0, 1]] {
        let k = alpha.len();
        let word = commutator_word(&s, &alpha).unwrap();
        let lead = s.nested_generator_bracket::<f64>(&alpha).unwrap();
        let t0 = [0.9, -0.7, 0.6];
        let ratios: Vec<f64> = [1.0, 0.5, 0.25, 0.125]
            .iter()
            .map(|&e| {
                let t: Vec<f64> = t0[..k].iter().map(|v| v * e).collect();
                let g = evaluate_word(&s, &word, &t).unwrap();
                let prod: f64 = t.iter().product();
                let rem = g.coords.iter().zip(&lead).map(|(c, l)| (c - prod * l).abs()).fold(0.0, f64::max);
                rem / e.powi(k as i32 + 1)
            })
            .collect();
        assert!(ratios[0] > 0.0, "alpha {alpha:?} has no remainder to measure");
        assert!(ratios.iter().all(|&r| r <= 1.5 * ratios[0] + 1e-12), "alpha {alpha:?}: {ratios:?}");
    }
}

#[test]
fn associativity_over_full_range() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    for p in 1..=4usize {
        for r in 1..=5usize {
            let s = build_free_nilpotent(p, r).unwrap();
            let cases = if s.dim() > 100 { 10 } else { 100 };
            for _ in 0..cases {
                let mut draw = || Point::new((0..s.dim()).map(|_| rng.random_range(-1.0..1.0)).collect());
                let (a, b, c) = (draw(), draw(), draw());
                let l = s.group_product(&s.group_product(&a, &b).unwrap(), &c).unwrap();
                let rr = s.group_product(&a, &s.group_product(&b, &c).unwrap()).unwrap();
                assert!(max_diff(&l, &rr) <= 1e-12, "p={p} r={r}: {}", max_diff(&l, &rr));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn product_is_associative(s in structure(), a in coords(), b in coords(), c in coords()) {
        let (a, b, c) = (point(&s, &a), point(&s, &b), point(&s, &c));
        let l = s.group_product(&s.group_product(&a, &b).unwrap(), &c).unwrap();
        let r = s.group_product(&a, &s.group_product(&b, &c).unwrap()).unwrap();
        prop_assert!(max_diff(&l, &r) <= 1e-12);
    }

    #[test]
    fn inverse_is_negation(s in structure(), a in coords()) {
        let a = point(&s, &a);
        prop_assert!(max_diff(&s.group_product(&a, &a.inverse()).unwrap(), &Point::identity(&s)) <= 1e-15);
    }

    #[test]
    fn dilation_is_a_homomorphism(s in structure(), a in coords(), b in coords(), t in 0.05f64..2.0) {
        let (a, b) = (point(&s, &a), point(&s, &b));
        let lhs = s.dilate(t, &s.group_product(&a, &b).unwrap()).unwrap();
        let rhs = s.group_product(&s.dilate(t, &a).unwrap(), &s.dilate(t, &b).unwrap()).unwrap();
        prop_assert!(max_diff(&lhs, &rhs) <= 1e-12);
    }

    #[test]
    fn norm_is_homogeneous(s in structure(), a in coords(), t in 0.05f64..2.0) {
        let a = point(&s, &a);
        let n = s.homogeneous_norm(&a).unwrap();
        let nt = s.homogeneous_norm(&s.dilate(t, &a).unwrap()).unwrap();
        prop_assert!((nt - t * n).abs() <= 1e-12 * (1.0 + nt));
    }

    #[test]
    fn product_is_triangular(s in structure(), a in coords(), b in coords()) {
        // layer j of a*b is a_j + b_j plus a function of lower layers only
        let (a, b) = (point(&s, &a), point(&s, &b));
        let ab = s.group_product(&a, &b).unwrap();
        let mut a2 = a.clone();
        let mut b2 = b.clone();
        let top = s.layer_range(s.step());
        for i in top.clone() {
            a2.coords[i] += 0.25;
            b2.coords[i] -= 0.5;
        }
        let ab2 = s.group_product(&a2, &b2).unwrap();
        for i in 0..s.dim() {
            let shift = if top.contains(&i) { -0.25 } else { 0.0 };
            prop_assert!((ab2.coords[i] - ab.coords[i] - shift).abs() <= 1e-12);
        }
    }

    #[test]
    fn bracket_of_vector_with_itself_vanishes(s in structure(), a in coords()) {
        let v = point(&s, &a).coords;
        prop_assert!(s.bracket(&v, &v).unwrap().iter().all(|c| c.abs() <= 1e-14));
    }

    #[test]
    fn exact_and_float_products_agree(num in prop::collection::vec(-20i64..20, 10)) {
        let s = build_free_nilpotent(2, 3).unwrap();
        let exact = |k: usize| ExactPoint::new(num[k * 5..k * 5 + 5].iter().map(|&n| q(n, 7)).collect());
        let float = |k: usize| Point::new(num[k * 5..k * 5 + 5].iter().map(|&n| n as f64 / 7.0).collect());
        let e = s.group_product(&exact(0), &exact(1)).unwrap();
        let f = s.group_product(&float(0), &float(1)).unwrap();
        for (x, y) in e.coords.iter().zip(&f.coords) {
            let xv = num_traits::ToPrimitive::to_f64(x).unwrap();
            prop_assert!((xv - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }
}
