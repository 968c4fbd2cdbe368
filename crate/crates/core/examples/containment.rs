//! The nesting step behind the Bernstein bound: after burn-in, the
//! posterior ellipsoid sits inside the prior ellipsoid. Checked with the
//! exact secular-equation oracle on realized and adversarial states, and
//! compared with the scalar sufficient condition.
//!
//! cargo run --release --example containment

use selfnorm::linalg::{ellipsoid_contains, max_outer_form, Ellipsoid};
use selfnorm::verification::{check_alpha_sufficiency, realized_instances, synthetic_instances};
use selfnorm::SymMatrix;

fn main() -> selfnorm::Result<()> {
    // A plain containment query first.
    let outer = Ellipsoid::new(vec![0.0, 0.0], SymMatrix::diag(&[4.0, 1.0]))?;
    let inner = Ellipsoid::new(vec![1.0, 0.0], SymMatrix::diag(&[0.9, 0.1]))?;
    println!(
        "max outer form over inner = {:.6}, contained = {}",
        max_outer_form(&outer, &inner)?,
        ellipsoid_contains(&outer, &inner, 1e-9)?
    );

    let dims = [1, 2, 3, 5];
    for (name, instances) in [
        ("realized", realized_instances(400, &dims, 5)?),
        ("synthetic", synthetic_instances(400, &dims, 6)?),
    ] {
        let r = check_alpha_sufficiency(&instances)?;
        println!(
            "{name:<10} admitted {:>4}  containment failures {}  worst max form {:.4}  \
             derived condition held {:>4} (uncontained {})  printed condition held {:>4}",
            r.n_admitted,
            r.n_containment_failures,
            r.worst_max_form,
            r.n_sufficient_derived,
            r.n_derived_not_contained,
            r.n_sufficient_printed
        );
    }
    Ok(())
}
