//! The simulated museum: floorplan geometry, beacons, the visitor avatar and
//! scripted crowd agents, advanced on a fixed tick.

use serde::{Deserialize, Serialize};

use crate::geometry::{open_segment_hits_segment, point_segment_distance, ConvexPolygon, Rect, Vec2};
use crate::scenario::ValidationError;
use crate::time::SimTime;

/// Default radius of a crowd agent, in meters.
pub const DEFAULT_AGENT_RADIUS: f64 = 0.3;
/// Default walking speed, in m/s.
pub const DEFAULT_WALK_SPEED: f64 = 1.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub a: Vec2,
    pub b: Vec2,
    pub attenuation_db: f64,
}

/// A static obstruction such as a shelf or display case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub label: String,
    /// Convex polygon, either winding.
    pub vertices: Vec<Vec2>,
    pub attenuation_db: f64,
}

impl Obstacle {
    pub fn polygon(&self) -> ConvexPolygon<'_> {
        ConvexPolygon::new(&self.vertices)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gallery {
    pub id: String,
    pub region: Rect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub id: String,
    pub position: Vec2,
    #[serde(default)]
    pub gallery: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Floorplan {
    pub bounds: Rect,
    #[serde(default)]
    pub walls: Vec<Wall>,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    #[serde(default)]
    pub galleries: Vec<Gallery>,
    #[serde(default)]
    pub artifacts: Vec<Artifact>,
}

impl Floorplan {
    pub fn empty(bounds: Rect) -> Self {
        Floorplan {
            bounds,
            walls: Vec::new(),
            obstacles: Vec::new(),
            galleries: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn artifact(&self, id: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.id == id)
    }

    /// First gallery (in declaration order) whose region contains `p`.
    pub fn gallery_at(&self, p: Vec2) -> Option<&Gallery> {
        self.galleries.iter().find(|g| g.region.contains(p))
    }

    /// Is `p` strictly inside some obstacle?
    pub fn in_obstacle(&self, p: Vec2) -> bool {
        self.obstacles.iter().any(|o| o.polygon().contains_strict(p))
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if !self.bounds.is_proper() {
            return Err(ValidationError::geometry(
                "floorplan.bounds",
                "bounds must be a finite rectangle with positive width and height",
            ));
        }
        for (i, wall) in self.walls.iter().enumerate() {
            let path = format!("floorplan.walls[{i}]");
            if !self.bounds.contains(wall.a) || !self.bounds.contains(wall.b) {
                return Err(ValidationError::geometry(path, "wall endpoint outside bounds"));
            }
            if wall.a == wall.b {
                return Err(ValidationError::geometry(path, "wall has zero length"));
            }
            check_attenuation(&path, wall.attenuation_db)?;
        }
        for (i, obstacle) in self.obstacles.iter().enumerate() {
            let path = format!("floorplan.obstacles[{i}]");
            if !obstacle.polygon().is_valid() {
                return Err(ValidationError::geometry(
                    format!("{path}.vertices"),
                    format!(
                        "obstacle '{}' must be a non-degenerate convex polygon with at least 3 vertices",
                        obstacle.label
                    ),
                ));
            }
            if obstacle.vertices.iter().any(|v| !self.bounds.contains(*v)) {
                return Err(ValidationError::geometry(path, "obstacle vertex outside bounds"));
            }
            check_attenuation(&path, obstacle.attenuation_db)?;
        }
        let mut gallery_ids = std::collections::BTreeSet::new();
        for (i, gallery) in self.galleries.iter().enumerate() {
            let path = format!("floorplan.galleries[{i}]");
            if !gallery_ids.insert(gallery.id.as_str()) {
                return Err(ValidationError::reference(
                    path,
                    format!("duplicate gallery id '{}'", gallery.id),
                ));
            }
            if !gallery.region.is_proper() || !self.bounds.contains_rect(&gallery.region) {
                return Err(ValidationError::geometry(
                    path,
                    format!("gallery '{}' region must be a proper rectangle inside bounds", gallery.id),
                ));
            }
        }
        let mut artifact_ids = std::collections::BTreeSet::new();
        for (i, artifact) in self.artifacts.iter().enumerate() {
            let path = format!("floorplan.artifacts[{i}]");
            if !artifact_ids.insert(artifact.id.as_str()) {
                return Err(ValidationError::reference(
                    path,
                    format!("duplicate artifact id '{}'", artifact.id),
                ));
            }
            if !self.bounds.contains(artifact.position) {
                return Err(ValidationError::geometry(
                    format!("{path}.position"),
                    format!("artifact '{}' outside bounds", artifact.id),
                ));
            }
            if let Some(gallery) = &artifact.gallery {
                if !gallery_ids.contains(gallery.as_str()) {
                    return Err(ValidationError::reference(
                        format!("{path}.gallery"),
                        format!("artifact '{}' references unknown gallery '{gallery}'", artifact.id),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn check_attenuation(path: &str, db: f64) -> Result<(), ValidationError> {
    if db.is_finite() && db >= 0.0 {
        Ok(())
    } else {
        Err(ValidationError::range(
            format!("{path}.attenuation_db"),
            "attenuation must be a finite, non-negative dB value",
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Beacon {
    pub id: String,
    /// The home artifact this beacon is mounted on.
    pub artifact_id: String,
    /// Defaults to the artifact position when omitted from a scenario.
    #[serde(default)]
    pub position: Option<Vec2>,
    #[serde(default = "default_true")]
    pub enabled: bool,
}

fn default_true() -> bool {
    true
}

impl Beacon {
    /// Position after scenario loading has resolved it.
    pub fn pos(&self) -> Vec2 {
        self.position.unwrap_or_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisitorState {
    pub position: Vec2,
    /// Unit heading.
    pub facing: Vec2,
    pub phone_raised: bool,
    pub speed: f64,
}

impl VisitorState {
    pub fn at(position: Vec2, facing_radians: f64) -> Self {
        VisitorState {
            position,
            facing: Vec2::from_angle(facing_radians),
            phone_raised: false,
            speed: DEFAULT_WALK_SPEED,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub t: SimTime,
    pub position: Vec2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrowdAgent {
    pub id: String,
    pub waypoints: Vec<Waypoint>,
    #[serde(default = "default_agent_radius")]
    pub radius: f64,
}

fn default_agent_radius() -> f64 {
    DEFAULT_AGENT_RADIUS
}

impl CrowdAgent {
    /// Piecewise-linear position; holds the first/last waypoint outside the
    /// scripted span and is exact at waypoint times.
    pub fn position_at(&self, t: SimTime) -> Vec2 {
        let wps = &self.waypoints;
        let Some(first) = wps.first() else {
            return Vec2::ZERO;
        };
        if t <= first.t {
            return first.position;
        }
        for pair in wps.windows(2) {
            let (from, to) = (pair[0], pair[1]);
            if t == to.t {
                return to.position;
            }
            if t < to.t {
                let span = (to.t - from.t).as_micros() as f64;
                let frac = (t - from.t).as_micros() as f64 / span;
                return from.position + (to.position - from.position) * frac;
            }
        }
        wps[wps.len() - 1].position
    }

    pub fn validate(&self, index: usize, bounds: &Rect) -> Result<(), ValidationError> {
        let path = format!("crowd[{index}]");
        if self.waypoints.is_empty() {
            return Err(ValidationError::schema(
                format!("{path}.waypoints"),
                format!("agent '{}' needs at least one waypoint", self.id),
            ));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(ValidationError::range(format!("{path}.radius"), "radius must be positive"));
        }
        for (j, pair) in self.waypoints.windows(2).enumerate() {
            if pair[1].t <= pair[0].t {
                return Err(ValidationError::range(
                    format!("{path}.waypoints[{}].t", j + 1),
                    "waypoint times must be strictly increasing",
                ));
            }
        }
        for (j, wp) in self.waypoints.iter().enumerate() {
            if !bounds.contains(wp.position) {
                return Err(ValidationError::geometry(
                    format!("{path}.waypoints[{j}].position"),
                    "waypoint outside bounds",
                ));
            }
        }
        Ok(())
    }
}

/// Crowd agent at a point in time, as consumed by the radio model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrowdDisk {
    pub center: Vec2,
    pub radius: f64,
}

/// Something on the floorplan crossed by a line of sight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Occluder {
    Wall(usize),
    Obstacle(usize),
}

impl Occluder {
    pub fn attenuation_db(self, floorplan: &Floorplan) -> f64 {
        match self {
            Occluder::Wall(i) => floorplan.walls[i].attenuation_db,
            Occluder::Obstacle(i) => floorplan.obstacles[i].attenuation_db,
        }
    }
}

/// Every wall and obstacle that the open segment `(a, b)` touches, each once,
/// walls first, in declaration order.
pub fn line_of_sight(a: Vec2, b: Vec2, floorplan: &Floorplan) -> Vec<Occluder> {
    let walls = floorplan
        .walls
        .iter()
        .enumerate()
        .filter(|(_, w)| open_segment_hits_segment(a, b, w.a, w.b))
        .map(|(i, _)| Occluder::Wall(i));
    let obstacles = floorplan
        .obstacles
        .iter()
        .enumerate()
        .filter(|(_, o)| o.polygon().hit_by_open_segment(a, b))
        .map(|(i, _)| Occluder::Obstacle(i));
    walls.chain(obstacles).collect()
}

/// One tick's worth of visitor input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "cmd", rename_all = "snake_case")]
pub enum MoveCommand {
    /// Walk (and face) along `direction` radians.
    Walk { direction: f64 },
    /// Face `facing` radians without moving.
    Turn { facing: f64 },
    SetRaised { raised: bool },
    #[default]
    Idle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub floorplan: Floorplan,
    pub beacons: Vec<Beacon>,
    pub visitor: VisitorState,
    pub crowd: Vec<CrowdAgent>,
    crowd_positions: Vec<Vec2>,
    pub time: SimTime,
}

impl WorldState {
    pub fn new(
        floorplan: Floorplan,
        beacons: Vec<Beacon>,
        visitor: VisitorState,
        crowd: Vec<CrowdAgent>,
    ) -> Self {
        let crowd_positions = crowd.iter().map(|a| a.position_at(SimTime::ZERO)).collect();
        WorldState {
            floorplan,
            beacons,
            visitor,
            crowd,
            crowd_positions,
            time: SimTime::ZERO,
        }
    }

    pub fn crowd_positions(&self) -> &[Vec2] {
        &self.crowd_positions
    }

    pub fn crowd_disks(&self) -> Vec<CrowdDisk> {
        self.crowd
            .iter()
            .zip(&self.crowd_positions)
            .map(|(agent, &center)| CrowdDisk {
                center,
                radius: agent.radius,
            })
            .collect()
    }

    pub fn beacon(&self, id: &str) -> Option<&Beacon> {
        self.beacons.iter().find(|b| b.id == id)
    }

    /// Can the visitor move in a straight line from `from` to `to`?
    ///
    /// Touching a wall or an obstacle anywhere along the path, including the
    /// destination point, blocks the move.
    pub fn path_clear(&self, from: Vec2, to: Vec2) -> bool {
        let fp = &self.floorplan;
        if !to.is_finite() || !fp.bounds.contains(to) {
            return false;
        }
        let touches_wall = fp.walls.iter().any(|w| {
            open_segment_hits_segment(from, to, w.a, w.b) || point_segment_distance(to, w.a, w.b) == 0.0
        });
        if touches_wall {
            return false;
        }
        !fp.obstacles.iter().any(|o| {
            let poly = o.polygon();
            poly.hit_by_open_segment(from, to) || poly.contains(to)
        })
    }

    /// Advance by `dt`. Illegal moves leave the visitor where it is.
    pub fn step(&mut self, command: MoveCommand, dt: SimTime) {
        match command {
            MoveCommand::Walk { direction } if direction.is_finite() => {
                let heading = Vec2::from_angle(direction);
                self.visitor.facing = heading;
                let target = self.visitor.position + heading * (self.visitor.speed * dt.as_secs());
                if self.path_clear(self.visitor.position, target) {
                    self.visitor.position = target;
                }
            }
            MoveCommand::Turn { facing } if facing.is_finite() => {
                self.visitor.facing = Vec2::from_angle(facing);
            }
            MoveCommand::SetRaised { raised } => self.visitor.phone_raised = raised,
            _ => {}
        }
        self.time += dt;
        for (slot, agent) in self.crowd_positions.iter_mut().zip(&self.crowd) {
            *slot = agent.position_at(self.time);
        }
    }
}
