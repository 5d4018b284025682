//! Project a weight vector onto the span of the rows that remain after a
//! deletion, and check that the result is orthogonal-complement free.

use graph_unlearn::features::{project_onto_span, span_residual, FeatureMatrix, GramState};

fn main() -> graph_unlearn::Result<()> {
    // four rows in R^3; rows 0 and 1 span the x-y plane, row 3 adds z
    let x = FeatureMatrix::from_rows(&[
        vec![1.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![1.0, 1.0, 0.0],
        vec![0.0, 0.0, 2.0],
    ])?;
    let w = vec![0.5, -1.0, 3.0];

    // delete row 3: the remaining span loses the z axis
    let remain = [0, 1, 2];
    let x_remain = x.select_rows(&remain)?;
    let gram = GramState::of_rows(&x, &remain)?;
    let p = project_onto_span(&w, &x_remain, &gram, None)?;

    println!("w            = {w:?}");
    println!("projected    = {:?}", p.w_projected);
    println!("coefficients = {:?}", p.alpha);
    println!("‖X_r(w − w_p)‖ = {:.2e}", p.orthogonality_residual);
    println!("distance of w from span = {:.4}", span_residual(&w, &x_remain, None)?);
    Ok(())
}
