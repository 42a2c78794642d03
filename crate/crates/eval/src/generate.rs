//! Downstream text generation behind a small client trait.

use std::fmt;

use crate::error::Result;

pub trait TextGenerator: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn generate(&self, prompt: &str) -> Result<String>;
}

/// Returns the same text for every prompt.
#[derive(Debug, Clone, Default)]
pub struct EchoGenerator {
    reply: String,
}

impl EchoGenerator {
    pub fn new(reply: impl Into<String>) -> Self {
        EchoGenerator { reply: reply.into() }
    }
}

impl TextGenerator for EchoGenerator {
    fn name(&self) -> &str {
        "echo"
    }

    fn generate(&self, _prompt: &str) -> Result<String> {
        Ok(self.reply.clone())
    }
}
