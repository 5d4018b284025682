//! How far can a deleted row stray from the span of the others? Zero means
//! the projector leaves the weights unchanged.

use graph_unlearn::features::{delta_measure, DeltaMode, FeatureMatrix};
use graph_unlearn::graph::NodeSet;

fn main() -> graph_unlearn::Result<()> {
    let duplicated = FeatureMatrix::from_rows(&vec![vec![1.0, 2.0, -1.0]; 5])?;
    let identity = FeatureMatrix::identity(4);
    let tall = FeatureMatrix::from_rows(&[
        vec![1.0, 0.0],
        vec![0.0, 1.0],
        vec![1.0, 1.0],
        vec![3.0, -2.0],
    ])?;
    for (name, x) in [("duplicated rows", &duplicated), ("identity", &identity), ("n > d", &tall)] {
        println!("{name:<16} leave-one-out δ = {:.4}", delta_measure(x, DeltaMode::LeaveOneOutAll, None, None)?);
    }
    let set = NodeSet::new(vec![3]);
    println!("row 3 against the rest: {:.4}", delta_measure(&identity, DeltaMode::AgainstSet, Some(&set), None)?);
    Ok(())
}
