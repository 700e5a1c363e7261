//! The guide in `book/`, compiled as doc-tests so its listings keep working.

#[doc = include_str!("../../../book/src/intro.md")]
pub mod intro {}

#[doc = include_str!("../../../book/src/ch1_operators.md")]
pub mod chapter1 {}

#[doc = include_str!("../../../book/src/ch2_norms.md")]
pub mod chapter2 {}

#[doc = include_str!("../../../book/src/ch3_ledger.md")]
pub mod chapter3 {}

#[doc = include_str!("../../../book/src/ch4_solver.md")]
pub mod chapter4 {}

#[doc = include_str!("../../../book/src/ch5_problems.md")]
pub mod chapter5 {}

#[doc = include_str!("../../../book/src/ch6_cli.md")]
pub mod chapter6 {}
