//! Built-in prompt, token and depth-bin settings for indoor scenes.

use crate::ablation::PromptDesign;
use crate::model::BinPartition;

/// Prompt template used for every token.
pub const TEMPLATE: &str = "This object is {}";

/// Default softmax temperature.
pub const TEMPERATURE: f64 = 0.1;

/// Semantic distance tokens, nearest first.
pub const TOKENS: [&str; 7] = [
    "giant",
    "extremely close",
    "close",
    "not in distance",
    "a little remote",
    "far",
    "unseen",
];

/// Depth (meters) attached to each entry of [`TOKENS`].
pub const ORIGINAL_BINS: [f64; 7] = [1.00, 1.50, 2.00, 2.25, 2.50, 2.75, 3.00];

/// Named bin partitions compared in the class-dependent bin ablation.
pub const PARTITIONS: [(&str, [f64; 7]); 5] = [
    ("original", ORIGINAL_BINS),
    ("class-dependent-1", [1.00, 2.00, 2.25, 2.50, 2.75, 3.00, 4.00]),
    ("class-dependent-2", [1.00, 1.50, 2.00, 2.50, 3.00, 3.50, 4.00]),
    ("class-dependent-3", [1.00, 1.25, 1.50, 1.75, 2.00, 2.25, 2.50]),
    ("class-dependent-4", [2.00, 2.50, 3.00, 3.25, 3.50, 3.75, 4.00]),
];

/// Token lists compared in the prompt-design ablation.
pub const PROMPT_DESIGNS: [(&str, [&str; 7]); 4] = [
    ("original", TOKENS),
    (
        "prompt-1",
        ["extremely close", "close", "middle", "a little far", "far", "quite far", "unseen"],
    ),
    (
        "prompt-2",
        [
            "extremely close",
            "very close",
            "close",
            "a little close",
            "a little far",
            "far",
            "unseen",
        ],
    ),
    (
        "prompt-3",
        [
            "giant",
            "close",
            "a little close",
            "not in distance",
            "a bit remote",
            "far",
            "unseen",
        ],
    ),
];

pub fn original_bins() -> BinPartition {
    BinPartition::new("original", ORIGINAL_BINS.to_vec()).expect("preset bins are valid")
}

/// Looks up a built-in partition by name.
pub fn partition(name: &str) -> Option<BinPartition> {
    PARTITIONS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(n, bins)| BinPartition::new(*n, bins.to_vec()).expect("preset bins are valid"))
}

pub fn partitions() -> Vec<BinPartition> {
    PARTITIONS
        .iter()
        .map(|(n, bins)| BinPartition::new(*n, bins.to_vec()).expect("preset bins are valid"))
        .collect()
}

pub fn prompt_designs() -> Vec<PromptDesign> {
    PROMPT_DESIGNS
        .iter()
        .map(|(name, tokens)| PromptDesign {
            name: name.to_string(),
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
        })
        .collect()
}
