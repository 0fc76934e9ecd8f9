use condgan::conditioning::{
    bilinear_pool_batch, replicate_concat_batch, spatial_bilinear_pool, spatial_replicate_concat, vector_concat,
    ConditionVector, SpatialTensor,
};
use condgan::Tensor;
use proptest::prelude::*;

fn spatial_case() -> impl Strategy<Value = (usize, usize, usize, Vec<f64>, Vec<f64>)> {
    (1usize..5, 1usize..4, 1usize..6).prop_flat_map(|(n, d, m)| {
        (
            Just(n),
            Just(d),
            Just(m),
            prop::collection::vec(-3.0f64..3.0, n * n * d),
            prop::collection::vec(-3.0f64..3.0, m),
        )
    })
}

fn spatial(n: usize, d: usize, x: &[f64]) -> SpatialTensor {
    SpatialTensor::new(Tensor::new(vec![n, n, d], x.to_vec()).unwrap()).unwrap()
}

fn cond(c: &[f64]) -> ConditionVector {
    ConditionVector::from_slice(c).unwrap()
}

proptest! {
    #[test]
    fn bilinear_pool_is_outer_product_per_pixel((n, d, m, x, c) in spatial_case()) {
        let out = spatial_bilinear_pool(&spatial(n, d, &x), &cond(&c)).unwrap();
        prop_assert_eq!(out.dims(), (n, n, d * m));
        for i in 0..n {
            for j in 0..n {
                let px = &x[(i * n + j) * d..(i * n + j + 1) * d];
                let o = out.pixel(i, j);
                for a in 0..m {
                    for b in 0..d {
                        prop_assert_eq!(o[a * d + b].to_bits(), (px[b] * c[a]).to_bits());
                    }
                }
            }
        }
    }

    #[test]
    fn replicate_concat_appends_c_everywhere((n, d, m, x, c) in spatial_case()) {
        let out = spatial_replicate_concat(&spatial(n, d, &x), &cond(&c)).unwrap();
        prop_assert_eq!(out.dims(), (n, n, d + m));
        for i in 0..n {
            for j in 0..n {
                let o = out.pixel(i, j);
                prop_assert_eq!(&o[..d], &x[(i * n + j) * d..(i * n + j + 1) * d]);
                prop_assert_eq!(&o[d..], &c[..]);
            }
        }
    }

    #[test]
    fn bilinear_pool_of_zero_condition_is_zero((n, d, m, x, _c) in spatial_case()) {
        let out = spatial_bilinear_pool(&spatial(n, d, &x), &cond(&vec![0.0; m])).unwrap();
        prop_assert!(out.values().data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn pooled_blocks_sum_to_x_for_a_distribution((n, d, m, x, c) in spatial_case()) {
        // c on the simplex: the m blocks of each pixel add back up to x
        let total: f64 = c.iter().map(|v| v.abs()).sum::<f64>() + 1e-9;
        let p: Vec<f64> = c.iter().map(|v| v.abs() / total).collect();
        let norm: f64 = p.iter().sum();
        let p: Vec<f64> = p.iter().map(|v| v / norm).collect();
        let out = spatial_bilinear_pool(&spatial(n, d, &x), &cond(&p)).unwrap();
        for i in 0..n {
            for j in 0..n {
                let o = out.pixel(i, j);
                for b in 0..d {
                    let s: f64 = (0..m).map(|a| o[a * d + b]).sum();
                    prop_assert!((s - x[(i * n + j) * d + b]).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn batched_forms_agree_with_single((n, d, m, x, c) in spatial_case()) {
        let xb = Tensor::new(vec![1, n, n, d], x.clone()).unwrap();
        let cb = Tensor::new(vec![1, m], c.clone()).unwrap();
        let single = spatial_bilinear_pool(&spatial(n, d, &x), &cond(&c)).unwrap();
        let batched = bilinear_pool_batch(&xb, &cb).unwrap();
        prop_assert_eq!(batched.data(), single.values().data());
        let single = spatial_replicate_concat(&spatial(n, d, &x), &cond(&c)).unwrap();
        let batched = replicate_concat_batch(&xb, &cb).unwrap();
        prop_assert_eq!(batched.data(), single.values().data());
    }

    #[test]
    fn vector_concat_is_z_then_c(
        z in prop::collection::vec(-1.0f64..1.0, 1..8),
        c in prop::collection::vec(0.0f64..1.0, 1..8),
    ) {
        let out = vector_concat(&Tensor::vector(&z).unwrap(), &cond(&c)).unwrap();
        let expect: Vec<f64> = z.iter().chain(&c).copied().collect();
        prop_assert_eq!(out.data(), &expect[..]);
    }
}

#[test]
fn mismatched_batches_are_dimension_errors() {
    let x = Tensor::zeros(&[2, 3, 3, 1]);
    let c = Tensor::zeros(&[3, 4]);
    assert!(matches!(bilinear_pool_batch(&x, &c), Err(condgan::Error::Dimension { .. })));
    assert!(matches!(replicate_concat_batch(&x, &c), Err(condgan::Error::Dimension { .. })));
}
