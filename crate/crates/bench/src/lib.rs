//! Fixtures shared by the kernel benchmarks.

use halfcurve::dirichlet::DirichletChar;
use halfcurve::spaces::{build_space, space_precision, ModularFormSpace};

/// S_{5/2}(20) with enough coefficients for U(25).
pub fn half_fixture() -> ModularFormSpace {
    let chi = DirichletChar::trivial(20);
    build_space(5, 20, &chi, true, space_precision(5, 20, 25)).expect("fixture space")
}

/// S_4(30) with enough coefficients for U(5).
pub fn integral_fixture() -> ModularFormSpace {
    let chi = DirichletChar::trivial(30);
    build_space(8, 30, &chi, true, space_precision(8, 30, 5)).expect("fixture space")
}
