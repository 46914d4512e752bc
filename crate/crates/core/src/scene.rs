//! Indoor geometry: room, access point, RIS element array, obstacles and the
//! reference/test point grids.
//!
//! The room spans `[0, width] × [0, length] × [0, height]`. The RIS is a uniform
//! linear array on the far wall `y = length`, the access point sits on the floor.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const fn floor(x: f64, y: f64) -> Self {
        Self { x, y, z: 0.0 }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    fn axis(&self, i: usize) -> f64 {
        match i {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }
}

/// Axis-aligned box resting on the floor. `width` is the x extent, `length` the
/// y extent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObstacleBox {
    pub center: Position,
    pub width: f64,
    pub length: f64,
    pub height: f64,
}

impl ObstacleBox {
    pub fn min(&self) -> Position {
        Position::new(
            self.center.x - self.width / 2.0,
            self.center.y - self.length / 2.0,
            self.center.z - self.height / 2.0,
        )
    }

    pub fn max(&self) -> Position {
        Position::new(
            self.center.x + self.width / 2.0,
            self.center.y + self.length / 2.0,
            self.center.z + self.height / 2.0,
        )
    }

    /// Whether `(x, y)` lies in the closed floor footprint.
    pub fn footprint_contains(&self, x: f64, y: f64) -> bool {
        let (lo, hi) = (self.min(), self.max());
        (lo.x..=hi.x).contains(&x) && (lo.y..=hi.y).contains(&y)
    }

    /// Open-segment vs open-box test (slab method). Segments that only touch
    /// the boundary, including ones lying in a face plane, do not intersect.
    fn intersects_open_segment(&self, a: &Position, b: &Position) -> bool {
        let (lo, hi) = (self.min(), self.max());
        let mut t_enter = 0.0_f64;
        let mut t_exit = 1.0_f64;
        for axis in 0..3 {
            let (pa, pb) = (a.axis(axis), b.axis(axis));
            let (bmin, bmax) = (lo.axis(axis), hi.axis(axis));
            let d = pb - pa;
            if d == 0.0 {
                if pa <= bmin || pa >= bmax {
                    return false;
                }
                continue;
            }
            let t1 = (bmin - pa) / d;
            let t2 = (bmax - pa) / d;
            t_enter = t_enter.max(t1.min(t2));
            t_exit = t_exit.min(t1.max(t2));
            if t_enter >= t_exit {
                return false;
            }
        }
        t_enter < t_exit
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomDims {
    pub width: f64,
    pub length: f64,
    pub height: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    /// Footprint center `[x, y]`; the box rests on the floor.
    pub center: [f64; 2],
    pub width: f64,
    pub length: f64,
    pub height: f64,
}

/// Human-editable scene description (TOML). The README lists the keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub room: RoomDims,
    pub carrier_hz: f64,
    pub ap_position: [f64; 3],
    pub ap_antennas: usize,
    pub ris_elements: usize,
    /// x coordinate of the array center on the `y = length` wall.
    pub ris_center_x: f64,
    pub ris_height: f64,
    pub rp_spacing: f64,
    /// Offset of the first grid line from the `x = 0` and `y = 0` walls.
    pub rp_offset: f64,
    /// Drop grid points that fall inside an obstacle footprint.
    pub rp_exclude_obstacles: bool,
    /// Extra loss applied to a path that crosses an obstacle.
    pub blockage_penalty_db: f64,
    pub test_points: Vec<[f64; 2]>,
    pub obstacles: Vec<ObstacleSpec>,
}

impl SceneConfig {
    pub fn office(n_elements: usize, m_antennas: usize) -> Self {
        let room = RoomDims {
            width: 6.0,
            length: 10.0,
            height: 3.0,
        };
        let mut obstacles = Vec::with_capacity(8);
        for row in 1..=4 {
            for col in 1..=2 {
                obstacles.push(ObstacleSpec {
                    center: [
                        room.width * col as f64 / 3.0,
                        room.length * row as f64 / 5.0,
                    ],
                    width: 0.6,
                    length: 1.0,
                    height: 1.0,
                });
            }
        }
        let mut test_points = Vec::with_capacity(32);
        for i in 0..8 {
            for x in [1.0, 2.5, 3.5, 5.0] {
                test_points.push([x, 1.5 + i as f64]);
            }
        }
        Self {
            room,
            carrier_hz: 2.6e9,
            ap_position: [0.0, 0.0, 0.0],
            ap_antennas: m_antennas,
            ris_elements: n_elements,
            ris_center_x: room.width / 2.0,
            ris_height: room.height / 2.0,
            rp_spacing: 0.5,
            rp_offset: 0.25,
            rp_exclude_obstacles: false,
            blockage_penalty_db: 20.0,
            test_points,
            obstacles,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scene config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }
}

#[derive(Clone, Debug)]
pub struct Scene {
    config: SceneConfig,
    wavelength: f64,
    ap_position: Position,
    ris_element_positions: Vec<Position>,
    obstacles: Vec<ObstacleBox>,
    reference_points: Vec<Position>,
    test_points: Vec<Position>,
}

/// The office layout: 6 × 10 × 3 m room, RIS on the `y = 10` wall, AP in the
/// floor corner at the origin, 240 reference points, 32 test points, 8 obstacles.
pub fn build_default_scene(n_elements: usize, m_antennas: usize) -> Result<Scene> {
    Scene::from_config(SceneConfig::office(n_elements, m_antennas))
}

impl Scene {
    pub fn from_config(config: SceneConfig) -> Result<Self> {
        let room = config.room;
        if !(room.width > 0.0 && room.length > 0.0 && room.height > 0.0) {
            return Err(Error::config("room dimensions must be positive"));
        }
        if config.ris_elements == 0 || config.ap_antennas == 0 {
            return Err(Error::config(
                "RIS element count and AP antenna count must be >= 1",
            ));
        }
        if !(config.carrier_hz > 0.0) {
            return Err(Error::config("carrier frequency must be positive"));
        }
        if !(config.blockage_penalty_db >= 0.0) {
            return Err(Error::config("blockage penalty must be >= 0 dB"));
        }
        let wavelength = SPEED_OF_LIGHT / config.carrier_hz;
        let [ax, ay, az] = config.ap_position;
        let ap_position = Position::new(ax, ay, az);

        let mut scene = Scene {
            wavelength,
            ap_position,
            ris_element_positions: Vec::new(),
            obstacles: Vec::new(),
            reference_points: Vec::new(),
            test_points: Vec::new(),
            config,
        };
        if !scene.contains(&ap_position) {
            return Err(Error::config("AP position lies outside the room"));
        }

        let n = scene.config.ris_elements;
        let spacing = wavelength / 2.0;
        let span = spacing * (n - 1) as f64;
        let (cx, cz) = (scene.config.ris_center_x, scene.config.ris_height);
        if cx - span / 2.0 < 0.0 || cx + span / 2.0 > room.width {
            return Err(Error::config(format!(
                "RIS array of {n} elements spans {span:.3} m and does not fit on the {} m wall",
                room.width
            )));
        }
        if !(0.0..=room.height).contains(&cz) {
            return Err(Error::config("RIS height lies outside the room"));
        }
        scene.ris_element_positions = (0..n)
            .map(|i| {
                let offset = (i as f64 - (n - 1) as f64 / 2.0) * spacing;
                Position::new(cx + offset, room.length, cz)
            })
            .collect();

        for spec in &scene.config.obstacles {
            if !(spec.width > 0.0 && spec.length > 0.0 && spec.height > 0.0) {
                return Err(Error::config("obstacle dimensions must be positive"));
            }
            let b = ObstacleBox {
                center: Position::new(spec.center[0], spec.center[1], spec.height / 2.0),
                width: spec.width,
                length: spec.length,
                height: spec.height,
            };
            if !(scene.contains(&b.min()) && scene.contains(&b.max())) {
                return Err(Error::config(format!(
                    "obstacle centered at ({}, {}) does not fit inside the room",
                    spec.center[0], spec.center[1]
                )));
            }
            scene.obstacles.push(b);
        }

        let (step, offset) = (scene.config.rp_spacing, scene.config.rp_offset);
        if !(step > 0.0) || !(offset > 0.0) {
            return Err(Error::config("grid spacing and offset must be positive"));
        }
        // Index-based generation keeps coordinates free of accumulated drift.
        let nx = ((room.width - offset) / step).ceil() as usize;
        let ny = ((room.length - offset) / step).ceil() as usize;
        for iy in 0..ny {
            for ix in 0..nx {
                let p = Position::floor(offset + ix as f64 * step, offset + iy as f64 * step);
                if !scene.strictly_inside_floor(&p) {
                    continue;
                }
                if scene.config.rp_exclude_obstacles && scene.in_obstacle_footprint(&p) {
                    continue;
                }
                scene.reference_points.push(p);
            }
        }

        for &[x, y] in &scene.config.test_points {
            let p = Position::floor(x, y);
            if !scene.strictly_inside_floor(&p) || scene.in_obstacle_footprint(&p) {
                return Err(Error::config(format!(
                    "test point ({x}, {y}) must lie strictly inside the floor and off every obstacle"
                )));
            }
            scene.test_points.push(p);
        }
        Ok(scene)
    }

    pub fn config(&self) -> &SceneConfig {
        &self.config
    }

    pub fn hash(&self) -> String {
        self.config.hash()
    }

    pub fn room(&self) -> RoomDims {
        self.config.room
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn ap_position(&self) -> Position {
        self.ap_position
    }

    pub fn ap_antennas(&self) -> usize {
        self.config.ap_antennas
    }

    pub fn ris_elements(&self) -> usize {
        self.config.ris_elements
    }

    pub fn ris_element_positions(&self) -> &[Position] {
        &self.ris_element_positions
    }

    pub fn obstacles(&self) -> &[ObstacleBox] {
        &self.obstacles
    }

    pub fn reference_points(&self) -> &[Position] {
        &self.reference_points
    }

    pub fn test_points(&self) -> &[Position] {
        &self.test_points
    }

    pub fn blockage_penalty_db(&self) -> f64 {
        self.config.blockage_penalty_db
    }

    /// Closed room bounds.
    pub fn contains(&self, p: &Position) -> bool {
        let r = self.config.room;
        (0.0..=r.width).contains(&p.x)
            && (0.0..=r.length).contains(&p.y)
            && (0.0..=r.height).contains(&p.z)
    }

    fn strictly_inside_floor(&self, p: &Position) -> bool {
        let r = self.config.room;
        p.x > 0.0 && p.x < r.width && p.y > 0.0 && p.y < r.length && p.z == 0.0
    }

    pub fn in_obstacle_footprint(&self, p: &Position) -> bool {
        self.obstacles
            .iter()
            .any(|b| b.footprint_contains(p.x, p.y))
    }

    /// Clamp `(x, y)` into the floor rectangle.
    pub fn clamp_to_floor(&self, x: f64, y: f64) -> Position {
        let r = self.config.room;
        Position::floor(x.clamp(0.0, r.width), y.clamp(0.0, r.length))
    }

    /// 1-based element position on the RIS wall.
    pub fn ris_element_position(&self, n: usize) -> Result<Position> {
        if n == 0 || n > self.ris_element_positions.len() {
            return Err(Error::IndexOutOfRange {
                index: n,
                len: self.ris_element_positions.len(),
            });
        }
        Ok(self.ris_element_positions[n - 1])
    }

    /// Whether the open segment `(a, b)` passes through the interior of any obstacle.
    pub fn segment_blocked(&self, a: &Position, b: &Position) -> bool {
        // Fixed endpoint order makes the answer exactly symmetric in floating point.
        let (p, q) = if (a.x, a.y, a.z) <= (b.x, b.y, b.z) {
            (a, b)
        } else {
            (b, a)
        };
        self.obstacles
            .iter()
            .any(|o| o.intersects_open_segment(p, q))
    }

    /// Test point nearest the room center (first one on ties).
    pub fn central_test_point(&self) -> Option<Position> {
        let r = self.config.room;
        let center = Position::floor(r.width / 2.0, r.length / 2.0);
        self.test_points
            .iter()
            .copied()
            .fold(None, |best, p| match best {
                Some(b) if b.distance(&center) <= p.distance(&center) => Some(b),
                _ => Some(p),
            })
    }

    /// Copy of this scene with a different RIS size; everything else unchanged.
    pub fn with_ris_elements(&self, n_elements: usize) -> Result<Scene> {
        let mut config = self.config.clone();
        config.ris_elements = n_elements;
        Scene::from_config(config)
    }
}
