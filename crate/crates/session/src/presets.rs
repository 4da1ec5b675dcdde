//! Named starting configurations offered by `GET /presets`.

use efgame::constructions::{Caps, Mutations, Preset, PresetConfig, ProfileSpec};
use efgame::game::GameVariant;
use efgame::trees::{LocalFamily, Tree};
use efgame::{CardinalProfile, Result};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NamedPreset {
    pub name: &'static str,
    pub description: &'static str,
    pub config: PresetConfig,
    pub variant: String,
}

fn small_caps() -> Caps {
    Caps { max_u: 1, max_lambda_set: 1, max_fn_size: 1, ..Caps::default() }
}

pub fn presets() -> Result<Vec<NamedPreset>> {
    let path2 = Tree::from_parents(&[None, Some(0)])?;
    let cherry = Tree::from_parents(&[None, Some(0), Some(0)])?;
    let path3 = Tree::from_parents(&[None, Some(0), Some(1)])?;
    Ok(vec![
        NamedPreset {
            name: "s1-minimal",
            description: "quadruple preset, λ = 2, all functions into {0}, singleton sorts",
            config: PresetConfig::s1_minimal(),
            variant: GameVariant::FixedBudget { mu: 2 }.to_string(),
        },
        NamedPreset {
            name: "s2-small",
            description: "quadruple preset over the profile <0,2,4>, family of a two-node path",
            config: PresetConfig {
                preset: Preset::S2,
                profile: ProfileSpec::Profile(CardinalProfile::new(vec![0, 2, 4])?),
                family: Some(LocalFamily::embed(&path2, 4)?),
                tree: None,
                caps: Caps { max_u: 2, ..Caps::default() },
                mutations: Mutations::default(),
            },
            variant: GameVariant::FixedBudget { mu: 1 }.to_string(),
        },
        NamedPreset {
            name: "s3-cherry",
            description: "witness preset, λ = 3, root with two leaves",
            config: PresetConfig {
                preset: Preset::S3,
                profile: ProfileSpec::Lambda(3),
                family: None,
                tree: Some(cherry.to_doc()),
                caps: small_caps(),
                mutations: Mutations::default(),
            },
            variant: GameVariant::FixedBudget { mu: 3 }.to_string(),
        },
        NamedPreset {
            name: "s4-path",
            description: "witness preset over the profile <0,3>, three-node path, star budget",
            config: PresetConfig {
                preset: Preset::S4,
                profile: ProfileSpec::Profile(CardinalProfile::regular(3)?),
                family: None,
                tree: Some(path3.to_doc()),
                caps: small_caps(),
                mutations: Mutations::default(),
            },
            variant: GameVariant::Star.to_string(),
        },
    ])
}

pub fn find(name: &str) -> Result<Option<NamedPreset>> {
    Ok(presets()?.into_iter().find(|p| p.name == name))
}
