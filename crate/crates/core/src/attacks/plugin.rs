//! Subprocess protocol for external regenerators.
//!
//! The plugin is invoked as
//! `CMD... --input <in.png> --output <out.png> --strength <s>`, must exit 0,
//! and may print one JSON object on stdout.

use std::io::Read;
use std::process::{Command, Stdio};
use std::thread;
use std::time::Duration;

use wait_timeout::ChildExt;

use crate::error::{Error, Result};
use crate::imagecore::{load_image, save_image, Image};

pub const DEFAULT_PLUGIN_TIMEOUT_SECS: u64 = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct PluginOutput {
    pub image: Image,
    /// The JSON object printed by the plugin, if any.
    pub diagnostics: Option<serde_json::Value>,
}

/// Runs `command` on `x_w` through temporary PNG files.
pub fn plugin_regenerate(x_w: &Image, command: &[String], strength: f64, timeout_secs: u64) -> Result<PluginOutput> {
    let (program, args) = command.split_first().ok_or_else(|| Error::invalid("plugin command is empty"))?;
    let dir = tempfile::Builder::new().prefix("wmlab-plugin-").tempdir()?;
    let input = dir.path().join("input.png");
    let output = dir.path().join("output.png");
    save_image(x_w, &input)?;

    let mut child = Command::new(program)
        .args(args)
        .arg("--input")
        .arg(&input)
        .arg("--output")
        .arg(&output)
        .arg("--strength")
        .arg(strength.to_string())
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| Error::Plugin(format!("cannot start '{program}': {e}")))?;

    let mut stdout = child.stdout.take().expect("stdout is piped");
    let mut stderr = child.stderr.take().expect("stderr is piped");
    let out_reader = thread::spawn(move || {
        let mut s = String::new();
        stdout.read_to_string(&mut s).map(|_| s)
    });
    let err_reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = stderr.read_to_string(&mut s);
        s
    });

    let status = match child.wait_timeout(Duration::from_secs(timeout_secs))? {
        Some(status) => status,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(Error::PluginTimeout(timeout_secs));
        }
    };
    let stdout = out_reader
        .join()
        .map_err(|_| Error::Plugin("stdout reader panicked".into()))?
        .map_err(|e| Error::Plugin(format!("stdout is not valid UTF-8: {e}")))?;
    let stderr = err_reader.join().unwrap_or_default();

    if !status.success() {
        let tail: String = stderr.lines().last().unwrap_or("").chars().take(200).collect();
        return Err(Error::Plugin(format!("exited with {status}: {tail}")));
    }
    let diagnostics = parse_diagnostics(&stdout)?;
    if !output.exists() {
        return Err(Error::Plugin("no output image written".into()));
    }
    let image = load_image(&output).map_err(|e| Error::Plugin(format!("malformed output image: {e}")))?;
    if (image.width(), image.height()) != (x_w.width(), x_w.height()) {
        return Err(Error::Plugin(format!(
            "output is {}x{}, expected {}x{}",
            image.width(),
            image.height(),
            x_w.width(),
            x_w.height()
        )));
    }
    let image = match (image.channels(), x_w.channels()) {
        (a, b) if a == b => image,
        (3, 1) => Image::from_planes(&[image.luma()])?,
        (a, b) => return Err(Error::ChannelCount { expected: b, got: a }),
    };
    Ok(PluginOutput { image, diagnostics })
}

fn parse_diagnostics(stdout: &str) -> Result<Option<serde_json::Value>> {
    let text = stdout.trim();
    if text.is_empty() {
        return Ok(None);
    }
    match serde_json::from_str::<serde_json::Value>(text) {
        Ok(v @ serde_json::Value::Object(_)) => Ok(Some(v)),
        Ok(_) => Err(Error::Plugin("stdout must be a single JSON object".into())),
        Err(e) => Err(Error::Plugin(format!("stdout is not a single JSON object: {e}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagnostics_parsing() {
        assert_eq!(parse_diagnostics("  \n").unwrap(), None);
        assert!(parse_diagnostics(r#"{"steps": 60}"#).unwrap().is_some());
        assert!(parse_diagnostics("[1, 2]").is_err());
        assert!(parse_diagnostics("{} {}").is_err());
        assert!(parse_diagnostics("loading model...").is_err());
    }

    #[test]
    fn missing_program_is_a_plugin_error() {
        let x = Image::filled(4, 4, 3, 0.5).unwrap();
        let err = plugin_regenerate(&x, &["/nonexistent/wmlab-plugin".into()], 1.0, 5).unwrap_err();
        assert!(matches!(err, Error::Plugin(_)));
        assert!(matches!(plugin_regenerate(&x, &[], 1.0, 5), Err(Error::InvalidParameter(_))));
    }
}
