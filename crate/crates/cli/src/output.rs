//! Output sink selection: stdout by default, a file with `--out`.

use std::io::Write;
use std::path::PathBuf;

use clap::Args;

use crate::CliError;

#[derive(Args, Clone, Debug, Default)]
pub struct OutputArgs {
    /// Write the report to this file instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Report encoding.
    #[arg(long, value_enum, default_value = "table")]
    pub format: crate::config::FormatArg,
}

impl OutputArgs {
    pub fn write(&self, content: &str) -> Result<(), CliError> {
        match &self.out {
            Some(path) => std::fs::write(path, content)
                .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display()))),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(content.as_bytes())
                    .and_then(|_| stdout.flush())
                    .map_err(|e| CliError::config(format!("cannot write stdout: {e}")))
            }
        }
    }
}

/// Serializes a value as pretty JSON with a trailing newline.
pub fn to_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::config(format!("JSON serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}
