//! Library half of the command-line verifier: the economy file format,
//! structured report emission, exact-arithmetic re-verification, and the
//! subcommand implementations shared between the binary and the tests.

pub mod commands;
pub mod exact;
pub mod format;
pub mod report;

/// Process exit codes, fixed against the verdict taxonomy: pass or
/// efficient, a diagnosed condition failure, a found inefficiency, bad
/// input, and a refused enumeration.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const CONDITION_FAILURE: i32 = 2;
    pub const INEFFICIENT: i32 = 3;
    pub const INPUT: i32 = 4;
    pub const CAP: i32 = 5;
}

/// Map a core error to its process exit code.
pub fn exit_code_for(err: &paretolab_core::Error) -> i32 {
    match err.kind() {
        paretolab_core::ErrorKind::Resource => exit::CAP,
        _ => exit::INPUT,
    }
}
