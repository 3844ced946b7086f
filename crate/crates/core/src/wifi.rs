//! Built-in IEEE 802.11n (2012) rate-1/2 base matrices.
//!
//! The three rate-1/2 codes (z = 27, 54, 81; n = 648, 1296, 1944) are
//! embedded from `data/` and available by alias. [`load_code`] resolves a
//! code argument as: built-in alias, then filesystem path, then a path
//! relative to the directory named by the `QCLDPC_DATA_DIR` environment
//! variable.

use crate::code::{load_base_matrix, load_base_matrix_file, BaseMatrix};
use crate::{Error, Result};
use std::path::Path;

/// 12×24, z = 27, n = 648.
pub const WIFI_648: &str = include_str!("../data/wifi_648_r12_z27.txt");
/// 12×24, z = 54, n = 1296.
pub const WIFI_1296: &str = include_str!("../data/wifi_1296_r12_z54.txt");
/// 12×24, z = 81, n = 1944.
pub const WIFI_1944: &str = include_str!("../data/wifi_1944_r12_z81.txt");

/// Environment variable naming the default base-matrix data directory.
pub const DATA_DIR_ENV: &str = "QCLDPC_DATA_DIR";

/// Alias names accepted by [`load_code`], shortest code first.
pub const BUILTIN_NAMES: [&str; 3] = ["wifi-648", "wifi-1296", "wifi-1944"];

/// Returns the embedded matrix text for a built-in alias.
pub fn builtin(name: &str) -> Option<&'static str> {
    match name {
        "wifi-648" => Some(WIFI_648),
        "wifi-1296" => Some(WIFI_1296),
        "wifi-1944" => Some(WIFI_1944),
        _ => None,
    }
}

/// Loads a base matrix from a built-in alias, a file path, or a file under
/// `$QCLDPC_DATA_DIR`.
pub fn load_code(name: &str) -> Result<BaseMatrix> {
    if let Some(text) = builtin(name) {
        return load_base_matrix(text);
    }
    let path = Path::new(name);
    if path.exists() {
        return load_base_matrix_file(path);
    }
    if let Ok(dir) = std::env::var(DATA_DIR_ENV) {
        let candidate = Path::new(&dir).join(name);
        if candidate.exists() {
            return load_base_matrix_file(&candidate);
        }
    }
    Err(Error::ReadIo {
        path: name.to_string(),
        source: std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!(
                "not a built-in code ({}) and no such file (also tried ${DATA_DIR_ENV})",
                BUILTIN_NAMES.join(", ")
            ),
        ),
    })
}
