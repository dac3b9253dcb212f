//! Bundled desk-scale experiment configs.

pub const NAMES: [&str; 4] = ["linear-awgn", "ssfm-3ch-4span", "ssfm-3ch-dcf", "npn-grid"];

pub fn text(name: &str) -> Option<&'static str> {
    Some(match name {
        "linear-awgn" => include_str!("../../presets/linear-awgn.toml"),
        "ssfm-3ch-4span" => include_str!("../../presets/ssfm-3ch-4span.toml"),
        "ssfm-3ch-dcf" => include_str!("../../presets/ssfm-3ch-dcf.toml"),
        "npn-grid" => include_str!("../../presets/npn-grid.toml"),
        _ => return None,
    })
}
