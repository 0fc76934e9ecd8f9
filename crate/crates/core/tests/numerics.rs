use condgan::adam::{adam_step, AdamHyper, AdamState};
use condgan::graph::Graph;
use condgan::tensor::matmul;
use condgan::training::{d_loss, g_loss, irgan_regularizer, GeneratorLossMode};
use condgan::Tensor;
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Tensor> {
    prop::collection::vec(-10.0f64..10.0, rows * cols).prop_map(move |d| Tensor::new(vec![rows, cols], d).unwrap())
}

fn matmul_case() -> impl Strategy<Value = (Tensor, Tensor)> {
    (1usize..7, 1usize..7, 1usize..7).prop_flat_map(|(a, k, b)| (matrix(a, k), matrix(k, b)))
}

/// `ln Σ exp(x_i)` in 80-bit-ish precision: terms are scaled by the max
/// and summed with Neumaier compensation.
fn log_sum_exp_oracle(x: &[f64]) -> f64 {
    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in x {
        let t = (v - m).exp();
        let s = sum + t;
        comp += if sum.abs() >= t.abs() { (sum - s) + t } else { (t - s) + sum };
        sum = s;
    }
    m + (sum + comp).ln()
}

proptest! {
    #[test]
    fn matmul_matches_triple_loop((a, b) in matmul_case()) {
        let (r, k) = a.rows_cols();
        let c = b.rows_cols().1;
        let out = matmul(&a, &b).unwrap();
        for i in 0..r {
            for j in 0..c {
                let mut acc = 0.0;
                for t in 0..k {
                    acc += a.data()[i * k + t] * b.data()[t * c + j];
                }
                prop_assert!((out.data()[i * c + j] - acc).abs() <= 1e-12 * (1.0 + acc.abs()));
            }
        }
    }

    #[test]
    fn cross_entropy_matches_oracle(
        rows in prop::collection::vec(prop::collection::vec(-30.0f64..30.0, 4), 1..6),
        picks in prop::collection::vec(0usize..4, 6),
    ) {
        let b = rows.len();
        let logits = Tensor::new(vec![b, 4], rows.concat()).unwrap();
        let mut target = vec![0.0; b * 4];
        for i in 0..b {
            target[i * 4 + picks[i]] = 1.0;
        }
        let target = Tensor::new(vec![b, 4], target).unwrap();
        let mut g = Graph::new();
        let x = g.constant(logits);
        let ce = g.softmax_cross_entropy(x, &target).unwrap();
        let expect = rows
            .iter()
            .zip(&picks)
            .map(|(r, &k)| log_sum_exp_oracle(r) - r[k])
            .sum::<f64>()
            / b as f64;
        let got = g.value(ce).item().unwrap();
        prop_assert!((got - expect).abs() <= 1e-12 * (1.0 + expect.abs()), "{got} vs {expect}");
    }

    #[test]
    fn losses_match_their_definitions(
        real in prop::collection::vec(1e-6f64..(1.0 - 1e-6), 1..10),
        fake in prop::collection::vec(1e-6f64..(1.0 - 1e-6), 1..10),
    ) {
        let n = real.len().min(fake.len());
        let (real, fake) = (&real[..n], &fake[..n]);
        let mean = |f: &dyn Fn(usize) -> f64| (0..n).map(f).sum::<f64>() / n as f64;
        let expect_d = -mean(&|i| real[i].ln() + (1.0 - fake[i]).ln());
        let rt = Tensor::vector(real).unwrap();
        let ft = Tensor::vector(fake).unwrap();
        prop_assert!((d_loss(&rt, &ft).unwrap() - expect_d).abs() <= 1e-12 * (1.0 + expect_d.abs()));
        let mm = mean(&|i| (1.0 - fake[i]).ln());
        prop_assert!((g_loss(&ft, GeneratorLossMode::Minimax).unwrap() - mm).abs() <= 1e-12 * (1.0 + mm.abs()));
        let ns = -mean(&|i| fake[i].ln());
        prop_assert!((g_loss(&ft, GeneratorLossMode::NonSaturating).unwrap() - ns).abs() <= 1e-12 * (1.0 + ns.abs()));
    }

    #[test]
    fn regularizer_is_scaled_cross_entropy(
        raw in prop::collection::vec(0.01f64..1.0, 3),
        pick in 0usize..3,
        lambda in 0.0f64..5.0,
    ) {
        let total: f64 = raw.iter().sum();
        let q = Tensor::new(vec![1, 3], raw.iter().map(|v| v / total).collect()).unwrap();
        let mut c = vec![0.0; 3];
        c[pick] = 1.0;
        let c = Tensor::new(vec![1, 3], c).unwrap();
        let expect = -lambda * (raw[pick] / total).ln();
        prop_assert!((irgan_regularizer(&q, &c, lambda).unwrap() - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
    }

    #[test]
    fn adam_matches_the_update_rule(
        grads in prop::collection::vec(-5.0f64..5.0, 1..8),
        lr in 0.0f64..0.1,
        start in -1.0f64..1.0,
    ) {
        let hyper = AdamHyper { lr, ..AdamHyper::default() };
        let mut p = Tensor::vector(&[start]).unwrap();
        let mut state = AdamState::new(&[1], hyper).unwrap();
        let (mut m, mut v, mut x) = (0.0f64, 0.0f64, start);
        for (t, &g) in grads.iter().enumerate() {
            adam_step(&mut p, &Tensor::vector(&[g]).unwrap(), &mut state).unwrap();
            m = hyper.beta1 * m + (1.0 - hyper.beta1) * g;
            v = hyper.beta2 * v + (1.0 - hyper.beta2) * g * g;
            let k = (t + 1) as i32;
            let m_hat = m / (1.0 - hyper.beta1.powi(k));
            let v_hat = v / (1.0 - hyper.beta2.powi(k));
            x -= lr * m_hat / (v_hat.sqrt() + hyper.epsilon);
            prop_assert!((p.data()[0] - x).abs() <= 1e-12, "{} vs {x}", p.data()[0]);
        }
        prop_assert_eq!(state.step, grads.len() as u64);
    }
}

#[test]
fn gradients_accumulate_over_reuse() {
    // f(x) = sum(x ⊙ x) + sum(x): df/dx = 2x + 1
    let mut g = Graph::new();
    let x = g.param(Tensor::vector(&[0.5, -2.0, 3.0]).unwrap());
    let sq = g.mul(x, x).unwrap();
    let both = g.add(sq, x).unwrap();
    let f = g.sum(both).unwrap();
    let grads = g.backward(f).unwrap();
    assert_eq!(grads.get(x).unwrap().data(), &[2.0, -3.0, 7.0]);
}

#[test]
fn constants_get_no_gradient() {
    let mut g = Graph::new();
    let x = g.param(Tensor::vector(&[1.0, 2.0]).unwrap());
    let k = g.constant(Tensor::vector(&[3.0, 4.0]).unwrap());
    let y = g.mul(x, k).unwrap();
    let f = g.sum(y).unwrap();
    let grads = g.backward(f).unwrap();
    assert_eq!(grads.get(x).unwrap().data(), &[3.0, 4.0]);
    assert!(grads.get(k).is_none());
}

#[test]
fn backward_needs_a_scalar() {
    let mut g = Graph::new();
    let x = g.param(Tensor::vector(&[1.0, 2.0]).unwrap());
    assert!(g.backward(x).is_err());
}
