//! Property checks shared by the per-topic test binaries and the acceptance
//! gate. Each check returns an error naming its minimal failing case.
#![allow(dead_code)]

pub mod autodiff;
pub mod pipeline;
pub mod ranking;
pub mod structure;

/// One `#[test]` per named check of a props module.
macro_rules! property_tests {
    ($module:ident: $($name:ident),* $(,)?) => {
        $(
            #[test]
            fn $name() {
                if let Err(e) = props::$module::$name() {
                    panic!("{e}");
                }
            }
        )*
    };
}
pub(crate) use property_tests;

pub type Check = (&'static str, fn() -> crate::common::Outcome);

/// Runs every check, returning the failures.
pub fn failures(checks: &[Check]) -> Vec<String> {
    checks.iter().filter_map(|(name, f)| f().err().map(|e| format!("{name}: {e}"))).collect()
}
