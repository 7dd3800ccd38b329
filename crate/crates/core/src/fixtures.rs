//! Small named models and graphs with known closed-form behavior.

use crate::graph::Dag;
use crate::scm::{ConfoundedAnm, NoiseSpec, StructuralFunction};

fn lin(terms: &[(usize, f64)]) -> StructuralFunction {
    terms
        .iter()
        .fold(StructuralFunction::constant(0.0), |f, &(p, c)| f.with_linear(p, c))
}

fn two_node(x2: StructuralFunction, y: StructuralFunction, cov: [[f64; 3]; 3]) -> ConfoundedAnm {
    let g = Dag::new(2, [(0, 1)]).expect("static graph");
    let rows: Vec<&[f64]> = cov.iter().map(|r| r.as_slice()).collect();
    let noise = NoiseSpec::from_rows(&[0.0; 3], &rows).expect("static covariance");
    ConfoundedAnm::unflagged(g, vec![StructuralFunction::constant(0.0), x2], y, noise)
        .expect("static model")
}

/// `X1 = U1`, `X2 = X1 + U2`, `Y = X1·X2 + U_Y`.
pub fn table1_m1() -> ConfoundedAnm {
    two_node(
        lin(&[(0, 1.0)]),
        StructuralFunction::constant(0.0).with_pairwise(0, 1, 1.0),
        [[1.0, 0.5, 0.0], [0.5, 1.0, 0.0], [0.0, 0.0, 1.0]],
    )
}

/// `X2 = 1.2·X1 + 1.2·U2`, written with the scaled noise `U2' = 1.2·U2`.
pub fn table1_m2() -> ConfoundedAnm {
    let (s12, s22) = (0.25 * 1.2, (7.0 / 12.0) * 1.44);
    two_node(
        lin(&[(0, 1.2)]),
        StructuralFunction::constant(0.0).with_pairwise(0, 1, 1.0),
        [[1.0, s12, 0.0], [s12, s22, 0.0], [0.0, 0.0, 1.0]],
    )
}

/// `X2 = 2·X1 + U2`, `Y = X1 + X2 + U_Y`, so `E[Y | do(x1)] = 3·x1`.
pub fn appendix_m1() -> ConfoundedAnm {
    two_node(
        lin(&[(0, 2.0)]),
        lin(&[(0, 1.0), (1, 1.0)]),
        [[1.0, 0.25, 0.0], [0.25, 2.0, 0.0], [0.0, 0.0, 1.0]],
    )
}

/// `X2 = X1 + U2`, `Y = X1 + X2 + U_Y`, so `E[Y | do(x1)] = 2·x1`.
pub fn appendix_m2() -> ConfoundedAnm {
    two_node(
        lin(&[(0, 1.0)]),
        lin(&[(0, 1.0), (1, 1.0)]),
        [[1.0, 1.25, 0.0], [1.25, 3.5, 0.0], [0.0, 0.0, 1.0]],
    )
}

/// `X2 = 3·X1 + U2`, `Y = 2·X1 + X2 + U_Y`, so `E[Y | do(x1)] = 5·x1`.
pub fn appendix_m3() -> ConfoundedAnm {
    two_node(
        lin(&[(0, 3.0)]),
        lin(&[(0, 2.0), (1, 1.0)]),
        [[1.0, 0.5, 0.0], [0.5, 3.0, 0.0], [0.0, 0.0, 1.0]],
    )
}

/// `X2 = 2·X1 + U2`, `Y = 2·X1 + X2 + U_Y`, so `E[Y | do(x1)] = 4·x1`.
pub fn appendix_m4() -> ConfoundedAnm {
    two_node(
        lin(&[(0, 2.0)]),
        lin(&[(0, 2.0), (1, 1.0)]),
        [[1.0, 1.5, 0.0], [1.5, 5.0, 0.0], [0.0, 0.0, 1.0]],
    )
}

/// `X2 = X1 + U2`, `Y = X1 + X2 + U_Y` with `Cov(U2, U_Y) = 0.5`.
///
/// `E[Y | do(x1), X2 = x2] = x1 + x2 + 0.5·(x2 − x1)`.
pub fn correlated_outcome() -> ConfoundedAnm {
    two_node(
        lin(&[(0, 1.0)]),
        lin(&[(0, 1.0), (1, 1.0)]),
        [[1.0, 0.0, 0.0], [0.0, 1.0, 0.5], [0.0, 0.5, 1.0]],
    )
}

/// Four treatments with `X1 → X4`, `X2 → X3`, `X2 → X4`, `X3 → X4`.
pub fn g1() -> Dag {
    Dag::new(4, [(0, 3), (1, 3), (1, 2), (2, 3)]).expect("static graph")
}

/// The chain `X1 → X2 → X3 → X4`.
pub fn g2() -> Dag {
    Dag::new(4, [(0, 1), (1, 2), (2, 3)]).expect("static graph")
}

/// Four treatments with no edges among them.
pub fn g3() -> Dag {
    Dag::empty(4)
}
