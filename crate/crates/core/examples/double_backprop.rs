//! Gradient of a gradient penalty, checked against finite differences.
//!
//! `cargo run --release --example double_backprop [critics]`

use std::collections::BTreeMap;

use wgad::autodiff::{finite_diff_check, NodeId, Tape};
use wgad::gan::gradient_penalty;
use wgad::nn::{Activation, Network, NetworkSpec};
use wgad::rng::{normal_tensor, stream_rng, Stream};

fn main() -> wgad::Result<()> {
    let critics: u64 = std::env::args()
        .nth(1)
        .map_or(5, |s| s.parse().expect("critic count"));
    let mut rng = stream_rng(42, Stream::Data);
    for k in 0..critics {
        let spec = NetworkSpec::dense(&[3, 8, 8, 1], Activation::Tanh, Activation::Identity)?;
        let critic: Network = Network::new_indexed(spec, 42, k);
        let real = normal_tensor(&mut rng, 4, 3);
        let fake = normal_tensor(&mut rng, 4, 3);
        let penalty = |tape: &mut Tape<f64>, ids: &BTreeMap<String, NodeId>| {
            let bound = critic.bind_nodes(tape, ids);
            let mut eps = stream_rng(k, Stream::Training);
            gradient_penalty(tape, &critic, &bound, &real, &fake, &mut eps)
        };
        let err = finite_diff_check(penalty, critic.params.trainable(), 1e-6)?;
        println!("critic {k}: max relative error {err:.3e}");
    }
    Ok(())
}
