//! Layered configuration: command-line flags over a TOML file over defaults.
//!
//! The file holds one optional table per subcommand, with keys spelled like
//! the long flags:
//!
//! ```toml
//! [fit]
//! algorithm = "sss"
//! lambda2 = 50.0
//!
//! [simulate]
//! p = 300
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::commands::benchmark::BenchmarkArgs;
use crate::commands::evaluate::EvaluateArgs;
use crate::commands::fit::FitArgs;
use crate::commands::simulate::SimulateArgs;
use crate::error::{CliError, Result};

/// Declares a struct of optional settings together with `or`, which fills
/// every unset field from a lower-precedence layer.
macro_rules! layered {
    (
        $(#[$meta:meta])*
        pub struct $name:ident {
            $( $(#[$fmeta:meta])* pub $field:ident : Option<$ty:ty>, )*
        }
    ) => {
        $(#[$meta])*
        pub struct $name {
            $( $(#[$fmeta])* pub $field: Option<$ty>, )*
        }

        impl $name {
            /// Keeps set fields, taking the rest from `lower`.
            pub fn or(self, lower: Self) -> Self {
                Self { $( $field: self.$field.or(lower.$field), )* }
            }
        }
    };
}
pub(crate) use layered;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub simulate: Option<SimulateArgs>,
    pub fit: Option<FitArgs>,
    pub evaluate: Option<EvaluateArgs>,
    pub benchmark: Option<BenchmarkArgs>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::parse(path, e.to_string().trim_end().to_owned()))
    }
}

/// Renders a resolved section as TOML, e.g. `[fit]` followed by its keys.
pub fn render_section<T: Serialize>(name: &str, section: &T) -> Result<String> {
    #[derive(Serialize)]
    struct Wrapper<'a, T> {
        #[serde(flatten)]
        inner: std::collections::BTreeMap<&'a str, &'a T>,
    }
    let mut inner = std::collections::BTreeMap::new();
    inner.insert(name, section);
    toml::to_string(&Wrapper { inner }).map_err(|e| CliError::Internal(format!("cannot render configuration: {e}")))
}

/// Parses a comma-separated list of 1-based indices into 0-based ones.
/// The empty string is the empty list.
pub fn parse_index_list(text: &str, what: &str) -> Result<Vec<usize>> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|tok| {
            let tok = tok.trim();
            match tok.parse::<usize>() {
                Ok(j) if j >= 1 => Ok(j - 1),
                _ => Err(CliError::InvalidInput(format!(
                    "{what}: '{tok}' is not a positive 1-based index"
                ))),
            }
        })
        .collect()
}
