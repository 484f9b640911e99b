//! Scenario files compiled into the binary.

pub const PRESETS: &[(&str, &str)] = &[
    (
        "aloha_high_be",
        include_str!("../presets/aloha_high_be.toml"),
    ),
    (
        "aloha_standard_be",
        include_str!("../presets/aloha_standard_be.toml"),
    ),
    (
        "common_channel_jamming",
        include_str!("../presets/common_channel_jamming.toml"),
    ),
    (
        "csma_confirmed",
        include_str!("../presets/csma_confirmed.toml"),
    ),
    ("csma_high_be", include_str!("../presets/csma_high_be.toml")),
    (
        "csma_standard_be",
        include_str!("../presets/csma_standard_be.toml"),
    ),
    (
        "gts_confirmed",
        include_str!("../presets/gts_confirmed.toml"),
    ),
    (
        "gts_unconfirmed",
        include_str!("../presets/gts_unconfirmed.toml"),
    ),
    (
        "large_csma_100",
        include_str!("../presets/large_csma_100.toml"),
    ),
    (
        "large_csma_100_stressed",
        include_str!("../presets/large_csma_100_stressed.toml"),
    ),
    (
        "large_csma_300",
        include_str!("../presets/large_csma_300.toml"),
    ),
    (
        "large_gts_100",
        include_str!("../presets/large_gts_100.toml"),
    ),
    (
        "large_gts_300",
        include_str!("../presets/large_gts_300.toml"),
    ),
    (
        "lorawan_coexistence",
        include_str!("../presets/lorawan_coexistence.toml"),
    ),
    (
        "max_throughput",
        include_str!("../presets/max_throughput.toml"),
    ),
    (
        "model_validation",
        include_str!("../presets/model_validation.toml"),
    ),
    ("peer_to_peer", include_str!("../presets/peer_to_peer.toml")),
    ("star", include_str!("../presets/star.toml")),
];

pub fn get(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// First comment line of the preset, used as its description.
pub fn describe(text: &str) -> &str {
    text.lines()
        .next()
        .and_then(|l| l.strip_prefix("# "))
        .unwrap_or("")
}
