use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use relaynet::gridmap::{parse_map, WorldPoint};
use relaynet::mission::{Knobs, Scenario};
use relaynet::radio::RadioParams;
use relaynet::{Error, Result};

/// On-disk scenario description. The map path is resolved relative to the
/// scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub map: PathBuf,
    pub bs: WorldPoint,
    pub robot_starts: Vec<WorldPoint>,
    pub goals: Vec<WorldPoint>,
    #[serde(default)]
    pub radio: RadioParams,
    #[serde(default = "default_w_c")]
    pub w_c: f64,
    /// Meters per tick; one cell per tick when omitted.
    #[serde(default)]
    pub speed: Option<f64>,
    /// Overrides `radio.seed` when present.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub knobs: Knobs,
}

fn default_w_c() -> f64 {
    1.0
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<ScenarioFile> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Builds the scenario, reading the map relative to `base_dir`.
    pub fn into_scenario(self, base_dir: &Path) -> Result<Scenario> {
        let map_path = base_dir.join(&self.map);
        let map = parse_map(&fs::read_to_string(&map_path)?)?;
        let mut radio = self.radio;
        if let Some(seed) = self.seed {
            radio.seed = seed;
        }
        let speed = self.speed.unwrap_or(map.resolution());
        let mut scenario = Scenario::new(map, self.bs, self.robot_starts, self.goals, radio);
        scenario.w_c = self.w_c;
        scenario.robot_speed = speed;
        scenario.knobs = self.knobs;
        scenario.validate()?;
        Ok(scenario)
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path)?;
    let file = ScenarioFile::from_json(&text)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    file.into_scenario(base)
}

/// Writes `scenario` as a scenario file plus a map file next to it.
pub fn save_scenario(scenario: &Scenario, path: &Path, map_name: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::write(dir.join(map_name), scenario.map.to_string())?;
    let file = ScenarioFile {
        map: PathBuf::from(map_name),
        bs: scenario.bs,
        robot_starts: scenario.robot_starts.clone(),
        goals: scenario.goals.clone(),
        radio: scenario.radio.clone(),
        w_c: scenario.w_c,
        speed: Some(scenario.robot_speed),
        seed: None,
        knobs: scenario.knobs.clone(),
    };
    fs::write(path, file.to_json()?)?;
    Ok(())
}

/// Rejects documents that parse but describe no work.
pub fn check_nonempty(scenario: &Scenario) -> Result<()> {
    if scenario.goals.is_empty() {
        return Err(Error::Scenario("scenario has no goals".into()));
    }
    Ok(())
}
