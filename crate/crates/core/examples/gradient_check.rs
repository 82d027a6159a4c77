//! Compares the analytic gradient of each training loss with central
//! finite differences on the eight-node fixture.
//!
//!     cargo run --example gradient_check

use fair_unlearn::fixtures::{eight_node_graph, eight_node_masks};
use fair_unlearn::nn::{GraphContext, LossWeights, ModelDims, ModelParams, Objective, ParamGroup};

const EPS: f64 = 1e-4;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ctx = GraphContext::new(eight_node_graph());
    let params = ModelParams::init(ModelDims::new(4, 3, 3, 3), 0);
    let mut obj = Objective::from_masks(&ctx, &eight_node_masks())?;
    obj.set_partition(vec![0, 0, 0, 0, 1, 1, 1, 1])?;

    let terms = [
        ("classification", LossWeights::classification()),
        ("estimator", LossWeights::estimator()),
        ("covariance", LossWeights::covariance()),
        ("adversary", LossWeights::adversary()),
        ("generator a=.5 b=10", LossWeights::generator(0.5, 10.0)),
    ];
    for (name, w) in terms {
        let state = obj.forward(&params, &ctx)?;
        let analytic = obj.backprop(&params, &state, &ctx, &w)?.classifier.to_flat();
        let value = |p: &ModelParams| -> Result<f64, Box<dyn std::error::Error>> {
            Ok(obj.losses(&obj.forward(p, &ctx)?).weighted(&w))
        };
        let base = params.classifier.to_flat();
        let mut worst: f64 = 0.0;
        for i in 0..base.len() {
            let mut shifted = base.clone();
            let mut probe = params.clone();
            shifted[i] += EPS;
            probe.classifier.set_flat(&shifted)?;
            let up = value(&probe)?;
            shifted[i] -= 2.0 * EPS;
            probe.classifier.set_flat(&shifted)?;
            let down = value(&probe)?;
            let numeric = (up - down) / (2.0 * EPS);
            let scale = analytic[i].abs().max(numeric.abs());
            if scale >= 1e-8 {
                worst = worst.max((analytic[i] - numeric).abs() / scale);
            }
        }
        println!("{name:<22} classifier gradient, max relative error {worst:.2e}");
    }
    Ok(())
}
