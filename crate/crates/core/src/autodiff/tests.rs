use std::collections::BTreeMap;

use proptest::prelude::*;

use super::*;
use crate::rng::{normal_tensor, stream_rng, Stream};

fn scalar_param(v: f64) -> BTreeMap<String, Tensor> {
    BTreeMap::from([("w".to_string(), Tensor::scalar(v))])
}

#[test]
fn square_has_derivative_two_w() {
    let mut tape = Tape::<f64>::new();
    let w = tape.param("w", Tensor::scalar(3.0));
    let y = tape.mul(w, w);
    let g = tape.backward(y).unwrap();
    assert_eq!(g.get("w").unwrap().item(), 6.0);
}

#[test]
fn constant_function_has_zero_gradient() {
    let mut tape = Tape::<f64>::new();
    let w = tape.param("w", Tensor::scalar(3.0));
    let c = tape.constant(Tensor::scalar(5.0));
    let y = tape.add_scalar(c, 1.0);
    let g = tape.backward(y).unwrap();
    assert_eq!(g.get("w").unwrap().item(), 0.0);
    let _ = w;
}

#[test]
fn non_scalar_output_is_rejected() {
    let mut tape = Tape::<f64>::new();
    let w = tape.param("w", Tensor::zeros(&[2, 2]));
    assert!(matches!(tape.backward(w), Err(Error::NotScalar(_))));
}

#[test]
fn nan_is_reported_not_propagated() {
    let mut tape = Tape::<f64>::new();
    let w = tape.param("w", Tensor::scalar(-1.0));
    let l = tape.log(w);
    assert!(matches!(tape.backward(l), Err(Error::NonFinite(_))));
}

#[test]
fn opaque_op_has_no_derivative() {
    let mut tape = Tape::<f64>::new();
    let w = tape.param("w", Tensor::scalar(0.3));
    let x = tape.input(Tensor::scalar(0.7));
    let p = tape.mul(w, x);
    let m = tape.map(p, "round", f64::round);
    assert!(matches!(
        tape.backward(m),
        Err(Error::NoDerivative("round"))
    ));
    assert!(matches!(
        tape.input_gradient(m, x),
        Err(Error::NoDerivative("round"))
    ));
}

fn two_layer_tanh(tape: &mut Tape, p: &BTreeMap<String, NodeId>, x: &Tensor) -> Result<NodeId> {
    let x = tape.constant(x.clone());
    let h = tape.matmul(x, p["w1"]);
    let h = tape.add_row(h, p["b1"]);
    let h = tape.tanh(h);
    let o = tape.matmul(h, p["w2"]);
    let o = tape.add_row(o, p["b2"]);
    let o = tape.tanh(o);
    Ok(tape.sum(o))
}

fn random_params(seed: u64, shapes: &[(&str, usize, usize)]) -> BTreeMap<String, Tensor> {
    let mut rng = stream_rng(seed, Stream::Init);
    shapes
        .iter()
        .map(|&(n, r, c)| {
            (
                n.to_string(),
                normal_tensor::<f64, _>(&mut rng, r, c).map(|v| v * 0.7),
            )
        })
        .collect()
}

#[test]
fn dense_tanh_network_matches_finite_differences() {
    let params = random_params(
        11,
        &[("w1", 3, 5), ("b1", 1, 5), ("w2", 5, 2), ("b2", 1, 2)],
    );
    let x = normal_tensor::<f64, _>(&mut stream_rng(12, Stream::Data), 4, 3);
    let err = finite_diff_check(|t, p| two_layer_tanh(t, p, &x), &params, 1e-6).unwrap();
    assert!(err < 1e-6, "max relative error {err:e}");
}

#[test]
fn finite_diff_check_is_tight_on_a_quadratic() {
    let params = BTreeMap::from([(
        "v".to_string(),
        Tensor::matrix(1, 3, vec![0.5, -1.5, 2.0]).unwrap(),
    )]);
    let q = |t: &mut Tape, p: &BTreeMap<String, NodeId>| {
        let s = t.square(p["v"]);
        let s = t.scale(s, 1.5);
        Ok(t.sum(s))
    };
    assert!(finite_diff_check(q, &params, 1e-4).unwrap() < 1e-9);
}

#[test]
fn corrupted_gradient_is_detected() {
    let params = scalar_param(0.5);
    let f = |t: &mut Tape, p: &BTreeMap<String, NodeId>| Ok(t.mul(p["w"], p["w"]));
    let numeric = finite_diff_gradient(f, &params, 1e-5).unwrap();
    let mut corrupted = numeric.clone();
    corrupted.get_mut("w").unwrap().data_mut()[0] += 0.1;
    // true derivative 1.0, corrupted 1.1 -> relative error 0.1 / 1.1
    let err = max_relative_error(&corrupted, &numeric);
    assert!((err - 0.1 / 1.1).abs() < 1e-6, "{err}");
}

#[test]
fn input_gradient_of_squared_norm() {
    let mut tape = Tape::<f64>::new();
    let x = tape.input(Tensor::matrix(1, 2, vec![1.0, 2.0]).unwrap());
    let s = tape.square(x);
    let f = tape.sum(s);
    let g = tape.input_gradient(f, x).unwrap();
    assert_eq!(tape.value(g).data(), &[2.0, 4.0]);
}

fn penalty_of_linear_critic(w: &[f64], xs: &[f64]) -> (f64, Vec<f64>) {
    let mut tape = Tape::<f64>::new();
    let wn = tape.param("w", Tensor::matrix(w.len(), 1, w.to_vec()).unwrap());
    let b = tape.param("b", Tensor::scalar(0.3));
    let x = tape.input(Tensor::matrix(xs.len() / w.len(), w.len(), xs.to_vec()).unwrap());
    let f = tape.matmul(x, wn);
    let f = tape.add_row(f, b);
    let total = tape.sum(f);
    let gx = tape.input_gradient(total, x).unwrap();
    for r in 0..tape.value(gx).rows() {
        assert_eq!(tape.value(gx).row(r), w);
    }
    let sq = tape.square(gx);
    let n2 = tape.sum_cols(sq);
    let norm = tape.sqrt(n2);
    let d = tape.add_scalar(norm, -1.0);
    let p = tape.square(d);
    let p = tape.mean(p);
    let g = tape.backward(p).unwrap();
    assert_eq!(g.get("b").unwrap().item(), 0.0);
    (tape.value(p).item(), g.get("w").unwrap().to_f64_vec())
}

#[test]
fn linear_critic_penalty_and_its_weight_gradient() {
    let w = [1.2, -2.0, 0.5];
    let xs = [0.1, 0.2, 0.3, -1.0, 4.0, 2.0];
    let (p, gw) = penalty_of_linear_critic(&w, &xs);
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!((p - (norm - 1.0).powi(2)).abs() < 1e-12);
    for (g, wi) in gw.iter().zip(&w) {
        let expected = 2.0 * (norm - 1.0) * wi / norm;
        assert!((g - expected).abs() < 1e-12, "{g} vs {expected}");
    }
}

/// Penalty `mean_i (|grad_x f(x_i)| - 1)^2` of a 2-hidden-layer critic.
fn critic_penalty(
    tape: &mut Tape,
    p: &BTreeMap<String, NodeId>,
    x: &Tensor,
    act: fn(&mut Tape, NodeId) -> NodeId,
) -> Result<NodeId> {
    let xi = tape.input(x.clone());
    let mut h = xi;
    for (w, b) in [("w1", "b1"), ("w2", "b2")] {
        h = tape.matmul(h, p[w]);
        h = tape.add_row(h, p[b]);
        h = act(tape, h);
    }
    let o = tape.matmul(h, p["w3"]);
    let o = tape.add_row(o, p["b3"]);
    let total = tape.sum(o);
    let g = tape.input_gradient(total, xi)?;
    let sq = tape.square(g);
    let n2 = tape.sum_cols(sq);
    let norm = tape.sqrt(n2);
    let d = tape.add_scalar(norm, -1.0);
    let d2 = tape.square(d);
    Ok(tape.mean(d2))
}

#[test]
fn penalty_parameter_gradient_matches_finite_differences() {
    let params = random_params(
        21,
        &[
            ("w1", 2, 6),
            ("b1", 1, 6),
            ("w2", 6, 5),
            ("b2", 1, 5),
            ("w3", 5, 1),
            ("b3", 1, 1),
        ],
    );
    let x = normal_tensor::<f64, _>(&mut stream_rng(22, Stream::Data), 5, 2);
    let err =
        finite_diff_check(|t, p| critic_penalty(t, p, &x, Tape::tanh), &params, 1e-6).unwrap();
    assert!(err < 1e-4, "tanh critic: {err:e}");
    let err = finite_diff_check(
        |t, p| critic_penalty(t, p, &x, Tape::sigmoid),
        &params,
        1e-6,
    )
    .unwrap();
    assert!(err < 1e-4, "sigmoid critic: {err:e}");
}

#[test]
fn leaky_critic_penalty_gradient_matches_away_from_kinks() {
    let params = random_params(
        31,
        &[
            ("w1", 2, 6),
            ("b1", 1, 6),
            ("w2", 6, 5),
            ("b2", 1, 5),
            ("w3", 5, 1),
            ("b3", 1, 1),
        ],
    );
    let x = normal_tensor::<f64, _>(&mut stream_rng(32, Stream::Data), 5, 2);
    let leaky = |t: &mut Tape, h: NodeId| t.leaky_relu(h, 0.2);
    let err = finite_diff_check(|t, p| critic_penalty(t, p, &x, leaky), &params, 1e-7).unwrap();
    assert!(err < 1e-4, "leaky critic: {err:e}");
}

#[test]
fn leaky_relu_kink_uses_right_derivative() {
    let mut tape = Tape::<f64>::new();
    let w = tape.param("w", Tensor::scalar(0.0));
    let y = tape.leaky_relu(w, 0.2);
    assert_eq!(tape.backward(y).unwrap().get("w").unwrap().item(), 1.0);
}

#[test]
fn parameters_off_the_ancestry_get_exact_zeros() {
    let mut tape = Tape::<f64>::new();
    let a = tape.param("a", Tensor::matrix(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap());
    let _b = tape.param("b", Tensor::matrix(1, 3, vec![1.0, 2.0, 3.0]).unwrap());
    let s = tape.tanh(a);
    let s = tape.sum(s);
    let g = tape.backward(s).unwrap();
    assert!(g.get("b").unwrap().data().iter().all(|&v| v == 0.0));
    assert_eq!(g.get("b").unwrap().shape(), &[1, 3]);
}

#[test]
fn backward_is_replay_deterministic() {
    let params = random_params(
        41,
        &[("w1", 3, 4), ("b1", 1, 4), ("w2", 4, 1), ("b2", 1, 1)],
    );
    let x = normal_tensor::<f64, _>(&mut stream_rng(42, Stream::Data), 6, 3);
    let mut tape = Tape::new();
    let ids: BTreeMap<_, _> = params
        .iter()
        .map(|(n, v)| (n.clone(), tape.param(n.clone(), v.clone())))
        .collect();
    let out = two_layer_tanh(&mut tape, &ids, &x).unwrap();
    tape.replay().unwrap();
    assert_eq!(tape.backward(out).unwrap(), tape.backward(out).unwrap());
}

#[test]
fn replay_covers_second_order_nodes() {
    let params = random_params(
        51,
        &[
            ("w1", 2, 3),
            ("b1", 1, 3),
            ("w2", 3, 3),
            ("b2", 1, 3),
            ("w3", 3, 1),
            ("b3", 1, 1),
        ],
    );
    let x = normal_tensor::<f64, _>(&mut stream_rng(52, Stream::Data), 4, 2);
    let mut tape = Tape::new();
    let ids: BTreeMap<_, _> = params
        .iter()
        .map(|(n, v)| (n.clone(), tape.param(n.clone(), v.clone())))
        .collect();
    critic_penalty(&mut tape, &ids, &x, Tape::tanh).unwrap();
    tape.replay().unwrap();
}

#[test]
fn squared_input_gradient_norm_is_differentiable() {
    // backward(|grad_x f|^2) against finite differences, for a sigmoid critic
    let params = random_params(
        61,
        &[("w1", 3, 4), ("b1", 1, 4), ("w2", 4, 1), ("b2", 1, 1)],
    );
    let x = normal_tensor::<f64, _>(&mut stream_rng(62, Stream::Data), 3, 3);
    let f = |t: &mut Tape, p: &BTreeMap<String, NodeId>| {
        let xi = t.input(x.clone());
        let h = t.matmul(xi, p["w1"]);
        let h = t.add_row(h, p["b1"]);
        let h = t.sigmoid(h);
        let o = t.matmul(h, p["w2"]);
        let o = t.add_row(o, p["b2"]);
        let s = t.sum(o);
        let g = t.input_gradient(s, xi)?;
        let g2 = t.square(g);
        Ok(t.sum(g2))
    };
    assert!(finite_diff_check(f, &params, 1e-6).unwrap() < 1e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn backward_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, seed in 0u64..1000) {
        let params = random_params(seed, &[("w", 3, 2), ("v", 1, 2)]);
        let x = normal_tensor::<f64, _>(&mut stream_rng(seed, Stream::Data), 4, 3);
        let build = |t: &mut Tape, p: &BTreeMap<String, NodeId>, which: u8| {
            let xi = t.constant(x.clone());
            let h = t.matmul(xi, p["w"]);
            let h = t.add_row(h, p["v"]);
            let f = t.tanh(h);
            let f = t.sum(f);
            let g = t.sigmoid(h);
            let g = t.square(g);
            let g = t.sum(g);
            match which {
                0 => f,
                1 => g,
                _ => {
                    let fa = t.scale(f, a);
                    let gb = t.scale(g, b);
                    t.add(fa, gb)
                }
            }
        };
        let grad = |which: u8| {
            let mut t = Tape::new();
            let ids: BTreeMap<_, _> = params.iter().map(|(n, v)| (n.clone(), t.param(n.clone(), v.clone()))).collect();
            let out = build(&mut t, &ids, which);
            t.backward(out).unwrap()
        };
        let (gf, gg, gc) = (grad(0), grad(1), grad(2));
        for (name, c) in gc.iter() {
            let f = gf.get(name).unwrap();
            let g = gg.get(name).unwrap();
            for k in 0..c.len() {
                let expected = a * f.data()[k] + b * g.data()[k];
                prop_assert!((c.data()[k] - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
            }
        }
    }
}
