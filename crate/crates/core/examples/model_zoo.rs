//! Layer table of the three-stage classifier and its 2/4-stage variants.
//!
//! ```bash
//! cargo run --release --example model_zoo
//! ```

use artefact_net::nn::ModelConfig;
use artefact_net::zoo;

fn table(model: &ModelConfig) -> artefact_net::Result<()> {
    println!("{} (input {:?})", model.name, model.input_shape);
    for ((layer, shape), params) in model.layers.iter().zip(model.shapes()?).zip(model.param_shapes()?) {
        let n = params.map_or(0, |p| p.weights.iter().product::<usize>() + p.bias.iter().product::<usize>());
        println!("  {:<8} {:<16} {:>9}", layer.kind(), format!("{shape:?}"), n);
    }
    println!("  total {}\n", zoo::count_parameters(model)?);
    Ok(())
}

fn main() -> artefact_net::Result<()> {
    table(&zoo::build_reference_model())?;
    for depth in [2, 4] {
        table(&zoo::build_variant(depth)?)?;
    }
    Ok(())
}
