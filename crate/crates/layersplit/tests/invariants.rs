//! Property tests for the tensor layout primitives, the derivative
//! operators, and scalar shrinkage. Oracles are index formulas and brute
//! force loops, never the code under test.

use proptest::collection::vec as pvec;
use proptest::prelude::*;

use layersplit::gradient::{self, DerivativeFilter, GradientField};
use layersplit::shrinkage::{shrink, shrink_scalar, ThresholdField};
use layersplit::tensor::{fold, DenseTensor, FlatVector};

fn small_dims() -> impl Strategy<Value = Vec<usize>> {
    prop_oneof![
        pvec(2usize..6, 2),
        pvec(2usize..5, 3),
        pvec(2usize..4, 4),
    ]
}

fn tensor_with_dims(dims: Vec<usize>) -> impl Strategy<Value = DenseTensor> {
    let n: usize = dims.iter().product();
    pvec(-3.0f64..3.0, n).prop_map(move |data| DenseTensor::new(dims.clone(), data).unwrap())
}

fn small_tensor() -> impl Strategy<Value = DenseTensor> {
    small_dims().prop_flat_map(tensor_with_dims)
}

/// Row-major strides, written out independently of the library.
fn strides_of(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for a in (0..dims.len() - 1).rev() {
        s[a] = s[a + 1] * dims[a + 1];
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unfold_then_fold_is_bitwise_identity(t in small_tensor()) {
        for axis in 0..t.order() {
            let m = t.unfold(axis).unwrap();
            let back = fold(&m, axis, t.dims()).unwrap();
            prop_assert_eq!(&back, &t);
        }
    }

    #[test]
    fn unfold_rows_walk_the_axis_and_columns_walk_the_rest(t in small_tensor()) {
        // Column j of the mode-k unfolding must enumerate the remaining
        // axes in row-major order with axis k deleted. Enumerate that
        // order here from scratch and compare element by element.
        let dims = t.dims();
        let st = strides_of(dims);
        for axis in 0..t.order() {
            let m = t.unfold(axis).unwrap();
            prop_assert_eq!(m.rows(), dims[axis]);
            prop_assert_eq!(m.cols(), t.len() / dims[axis]);
            let rest: Vec<usize> = (0..t.order()).filter(|&a| a != axis).collect();
            for r in 0..m.rows() {
                for c in 0..m.cols() {
                    let mut rem = c;
                    let mut flat = r * st[axis];
                    // Decode c into coordinates over `rest`, last axis fastest.
                    for &a in rest.iter().rev() {
                        flat += (rem % dims[a]) * st[a];
                        rem /= dims[a];
                    }
                    prop_assert_eq!(m.get(r, c), t.data()[flat]);
                }
            }
        }
    }

    #[test]
    fn unfolding_preserves_the_frobenius_norm(t in small_tensor()) {
        for axis in 0..t.order() {
            let m = t.unfold(axis).unwrap();
            prop_assert!((m.frobenius_norm() - t.frobenius_norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn stack_then_unstack_restores_every_component(t in small_tensor()) {
        let axes: Vec<usize> = (0..t.order().min(2)).collect();
        let f = DerivativeFilter::forward_difference();
        let field = gradient::gradient(&t, &axes, &f).unwrap();
        let stacked = field.stack();
        prop_assert_eq!(stacked.len(), t.len() * axes.len());
        let back = GradientField::from_stacked(&stacked, t.dims(), &axes).unwrap();
        for (a, b) in field.responses().iter().zip(back.responses()) {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn derivative_is_linear(
        dims in pvec(2usize..6, 2),
        s in -2.0f64..2.0,
        r in -2.0f64..2.0,
    ) {
        let make = |seed: usize| {
            DenseTensor::from_fn(&dims, |idx| {
                let flat: usize = idx.iter().zip(strides_of(&dims)).map(|(&i, st)| i * st).sum();
                ((flat * 7 + seed * 13) as f64 * 0.37).sin()
            })
            .unwrap()
        };
        let x = make(1);
        let y = make(2);
        let f = DerivativeFilter::forward_difference();
        for axis in 0..dims.len() {
            let lhs = gradient::derivative_response(
                &x.scaled(s).unwrap().add(&y.scaled(r).unwrap()).unwrap(),
                axis,
                &f,
            )
            .unwrap();
            let rhs = gradient::derivative_response(&x, axis, &f)
                .unwrap()
                .scaled(s)
                .unwrap()
                .add(&gradient::derivative_response(&y, axis, &f).unwrap().scaled(r).unwrap())
                .unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
        }
    }

    #[test]
    fn derivative_commutes_with_circular_shift(t in small_tensor(), shift in 1usize..4) {
        // Shifting the input along the filtered axis then differentiating
        // equals differentiating then shifting: circular operators are
        // shift equivariant.
        let f = DerivativeFilter::forward_difference();
        for axis in 0..t.order() {
            let n = t.dims()[axis];
            let roll = |src: &DenseTensor| {
                DenseTensor::from_fn(src.dims(), |idx| {
                    let mut j = idx.to_vec();
                    j[axis] = (idx[axis] + shift) % n;
                    src.get(&j)
                })
                .unwrap()
            };
            let a = gradient::derivative_response(&roll(&t), axis, &f).unwrap();
            let b = roll(&gradient::derivative_response(&t, axis, &f).unwrap());
            prop_assert!(a.max_abs_diff(&b).unwrap() < 1e-12);
        }
    }

    #[test]
    fn shrink_matches_the_scalar_definition(
        xs in pvec(-4.0f64..4.0, 1..40),
        ws in pvec(0.0f64..2.0, 40),
    ) {
        let w = ThresholdField::new(ws[..xs.len()].to_vec()).unwrap();
        let a = FlatVector::new(xs.clone()).unwrap();
        let out = shrink(&a, &w).unwrap();
        for i in 0..xs.len() {
            // Brute-force definition: move toward zero by the threshold,
            // stopping at zero.
            let want = if xs[i].abs() <= w.data()[i] {
                0.0
            } else {
                xs[i].signum() * (xs[i].abs() - w.data()[i])
            };
            prop_assert_eq!(out.data()[i], want);
        }
    }

    #[test]
    fn shrink_contracts_and_keeps_sign(
        xs in pvec(-4.0f64..4.0, 1..40),
        ws in pvec(0.0f64..2.0, 40),
    ) {
        let w = ThresholdField::new(ws[..xs.len()].to_vec()).unwrap();
        let a = FlatVector::new(xs.clone()).unwrap();
        let out = shrink(&a, &w).unwrap();
        for (x, y) in a.data().iter().zip(out.data()) {
            prop_assert!(y.abs() <= x.abs());
            prop_assert!(*y == 0.0 || y.signum() == x.signum());
        }
    }

    #[test]
    fn zero_threshold_shrink_is_exact_identity(x in -10.0f64..10.0) {
        prop_assert_eq!(shrink_scalar(x, 0.0), x);
    }

    #[test]
    fn tensor_construction_rejects_non_finite(idx in 0usize..12) {
        let mut data = vec![0.5; 12];
        data[idx] = f64::NAN;
        prop_assert!(DenseTensor::new(vec![3, 4], data).is_err());
    }
}

#[test]
fn order_bounds_are_enforced() {
    assert!(DenseTensor::zeros(&[5]).is_err());
    assert!(DenseTensor::zeros(&[2, 2, 2, 2, 2]).is_err());
    assert!(DenseTensor::zeros(&[3, 0]).is_err());
    assert!(DenseTensor::zeros(&[3, 3]).is_ok());
}
