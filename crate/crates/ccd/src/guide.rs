//! The book chapters from `book/src`, mirrored here so their code samples run
//! as doc-tests and cannot drift from the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/problem-model.md")]
pub mod problem_model {}

#[doc = include_str!("../../../book/src/relaxation.md")]
pub mod relaxation {}

#[doc = include_str!("../../../book/src/ranking.md")]
pub mod ranking {}

#[doc = include_str!("../../../book/src/framework.md")]
pub mod framework {}

#[doc = include_str!("../../../book/src/solver.md")]
pub mod solver {}

#[doc = include_str!("../../../book/src/baseline.md")]
pub mod baseline {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
