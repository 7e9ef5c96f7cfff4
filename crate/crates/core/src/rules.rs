use serde::{Deserialize, Serialize};

/// Point values for scoring. Defaults follow the standard base game.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleTable {
    pub road_per_tile: u32,
    pub city_per_tile: u32,
    pub city_per_shield: u32,
    pub incomplete_road_per_tile: u32,
    pub incomplete_city_per_tile: u32,
    pub incomplete_city_per_shield: u32,
    pub cloister_base: u32,
    pub cloister_per_neighbor: u32,
    pub field_per_city: u32,
    /// When off, field slots cannot be claimed and fields never score.
    pub fields_enabled: bool,
}

impl Default for RuleTable {
    fn default() -> Self {
        RuleTable {
            road_per_tile: 1,
            city_per_tile: 2,
            city_per_shield: 2,
            incomplete_road_per_tile: 1,
            incomplete_city_per_tile: 1,
            incomplete_city_per_shield: 1,
            cloister_base: 1,
            cloister_per_neighbor: 1,
            field_per_city: 3,
            fields_enabled: true,
        }
    }
}
