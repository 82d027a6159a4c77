//! Group fairness metrics on hand-written predictions.
//!
//!     cargo run --example fairness_metrics

use fair_unlearn::metrics::{accuracy, equal_opportunity, fairness_report, statistical_parity};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // eight applicants, two groups of four
    let labels = [1, 1, 0, 0, 1, 1, 0, 0];
    let groups = [0, 0, 0, 0, 1, 1, 1, 1];
    let preds = [1, 1, 1, 0, 1, 0, 0, 0];

    println!("accuracy            {:.3}", accuracy(&preds, &labels)?);
    // positive rate 3/4 against 1/4
    println!("statistical parity  {:.3}", statistical_parity(&preds, &groups)?);
    // true positive rate 2/2 against 1/2
    println!("equal opportunity   {:.3}", equal_opportunity(&preds, &labels, &groups)?);

    let report = fairness_report(&preds, &labels, &groups)?;
    println!("counts by [group][label]: {:?}", report.group_counts);

    // a group without positive labels leaves equal opportunity undefined
    let labels = [1, 1, 0, 0, 0, 0, 0, 0];
    match equal_opportunity(&preds, &labels, &groups) {
        Ok(v) => println!("unexpected value {v}"),
        Err(e) => println!("undefined case: {e}"),
    }
    Ok(())
}
