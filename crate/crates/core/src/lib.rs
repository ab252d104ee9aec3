//! Arithmetic intersection numbers of Heegner divisors on modular curves of
//! mixed Cartan level.

pub mod arith;
pub mod cli;
pub mod factored;
pub mod fibre;
pub mod genus_char;
pub mod heegner;
pub mod intersection;
pub mod padic_model;
pub mod quaternion;
pub mod table;

pub use factored::FactoredNumber;
pub use genus_char::DiscriminantPair;
pub use heegner::{Discriminant, Level, PairTag};
