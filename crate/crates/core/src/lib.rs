pub mod hedging;
pub mod lp;
pub mod paths;
pub mod payoffs;
pub mod pricing;
pub mod tree;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/paths.md")]
    mod paths {}
    #[doc = include_str!("../../../book/src/payoffs.md")]
    mod payoffs {}
    #[doc = include_str!("../../../book/src/trees.md")]
    mod trees {}
    #[doc = include_str!("../../../book/src/lp.md")]
    mod lp {}
    #[doc = include_str!("../../../book/src/pricing.md")]
    mod pricing {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    mod bounds {}
    #[doc = include_str!("../../../book/src/hedging.md")]
    mod hedging {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
