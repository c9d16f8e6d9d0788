pub mod analysis;
pub mod audit;
pub mod entropy;
pub mod mitigation;
pub mod scaling;
pub mod secrets;
pub mod tokenizer;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/tokenization.md")]
    mod tokenization {}
    #[doc = include_str!("../../../book/src/entropy.md")]
    mod entropy {}
    #[doc = include_str!("../../../book/src/secrets.md")]
    mod secrets {}
    #[doc = include_str!("../../../book/src/distribution-shift.md")]
    mod distribution_shift {}
    #[doc = include_str!("../../../book/src/mitigation.md")]
    mod mitigation {}
    #[doc = include_str!("../../../book/src/vocabulary-scaling.md")]
    mod vocabulary_scaling {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
