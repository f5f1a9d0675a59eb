pub mod eval;
pub mod solve;
pub mod source;
pub mod verify;
pub mod zeros;

use crate::output::Artifact;

/// A finished run: its artifact and whether every gating check passed.
pub struct Outcome {
    pub artifact: Artifact,
    pub pass: bool,
}
