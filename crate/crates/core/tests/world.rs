mod support;

use proptest::prelude::*;
use seamquest::geometry::{Rect, Vec2};
use seamquest::world::{
    line_of_sight, Beacon, CrowdAgent, Floorplan, MoveCommand, Obstacle, Occluder, VisitorState, Wall, Waypoint,
    WorldState,
};
use seamquest::SimTime;
use support::{ccw, cyrus_beck};

fn v(x: f64, y: f64) -> Vec2 {
    Vec2::new(x, y)
}

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Vec2> {
    vec![v(x0, y0), v(x1, y0), v(x1, y1), v(x0, y1)]
}

fn room_with(obstacles: Vec<Vec<Vec2>>) -> Floorplan {
    let mut fp = Floorplan::empty(Rect::new(v(0.0, 0.0), v(20.0, 20.0)));
    fp.obstacles = obstacles
        .into_iter()
        .enumerate()
        .map(|(i, vertices)| Obstacle {
            label: format!("o{i}"),
            vertices,
            attenuation_db: 5.0,
        })
        .collect();
    fp
}

/// Segment-polygon hit, per the oracle: the clipped interval must reach
/// into the open parameter range (0, 1).
fn oracle_hits(a: Vec2, b: Vec2, poly: &[Vec2]) -> bool {
    if a == b {
        return false;
    }
    match cyrus_beck(a, b, &ccw(poly.to_vec())) {
        Some((lo, hi)) => lo <= hi && hi > 0.0 && lo < 1.0,
        None => false,
    }
}

#[test]
fn segment_through_shelf_reports_it_once() {
    let fp = room_with(vec![rect(5.0, 5.0, 7.0, 9.0)]);
    assert_eq!(line_of_sight(v(1.0, 7.0), v(15.0, 7.0), &fp), vec![Occluder::Obstacle(0)]);
    assert!(line_of_sight(v(1.0, 1.0), v(15.0, 1.0), &fp).is_empty());
}

#[test]
fn grazing_a_vertex_counts() {
    let fp = room_with(vec![rect(5.0, 5.0, 7.0, 9.0)]);
    // passes exactly through the corner (7, 5)
    assert!(oracle_hits(v(5.0, 3.0), v(9.0, 7.0), &fp.obstacles[0].vertices));
    assert_eq!(line_of_sight(v(5.0, 3.0), v(9.0, 7.0), &fp), vec![Occluder::Obstacle(0)]);
    // runs along an edge
    assert_eq!(line_of_sight(v(5.0, 0.0), v(5.0, 19.0), &fp), vec![Occluder::Obstacle(0)]);
}

#[test]
fn walls_before_obstacles_in_declaration_order() {
    let mut fp = room_with(vec![rect(8.0, 4.0, 9.0, 6.0)]);
    fp.walls = vec![
        Wall { a: v(3.0, 0.0), b: v(3.0, 10.0), attenuation_db: 10.0 },
        Wall { a: v(12.0, 0.0), b: v(12.0, 3.0), attenuation_db: 10.0 },
        Wall { a: v(14.0, 0.0), b: v(14.0, 10.0), attenuation_db: 7.0 },
    ];
    assert_eq!(
        line_of_sight(v(1.0, 5.0), v(18.0, 5.0), &fp),
        vec![Occluder::Wall(0), Occluder::Wall(2), Occluder::Obstacle(0)]
    );
}

#[test]
fn beacon_mounted_on_a_wall_is_not_occluded_by_it() {
    let mut fp = room_with(vec![]);
    fp.walls.push(Wall { a: v(10.0, 0.0), b: v(10.0, 20.0), attenuation_db: 10.0 });
    assert!(line_of_sight(v(2.0, 5.0), v(10.0, 5.0), &fp).is_empty());
}

#[test]
fn blocked_walk_stays_put() {
    let fp = room_with(vec![rect(5.0, 0.0, 6.0, 20.0)]);
    let mut w = WorldState::new(fp, vec![], VisitorState::at(v(4.5, 10.0), 0.0), vec![]);
    for _ in 0..20 {
        w.step(MoveCommand::Walk { direction: 0.0 }, SimTime::from_secs(0.1));
    }
    // The last legal step ends 0.38 m short; the next one would touch the shelf.
    assert!(w.visitor.position.x < 5.0);
    assert!(w.visitor.position.x > 4.5);
    assert_eq!(w.time, SimTime::from_secs(2.0));
}

#[test]
fn walk_sets_facing_and_turn_does_not_move() {
    let mut w = WorldState::new(room_with(vec![]), vec![], VisitorState::at(v(10.0, 10.0), 0.0), vec![]);
    w.step(MoveCommand::Turn { facing: 1.0 }, SimTime::from_secs(0.1));
    assert_eq!(w.visitor.position, v(10.0, 10.0));
    assert!((w.visitor.facing.angle() - 1.0).abs() < 1e-12);
    w.step(MoveCommand::Walk { direction: std::f64::consts::PI }, SimTime::from_secs(0.5));
    assert!((w.visitor.position.x - 9.4).abs() < 1e-12);
    assert!((w.visitor.facing.x + 1.0).abs() < 1e-12);
    w.step(MoveCommand::Walk { direction: f64::NAN }, SimTime::from_secs(0.1));
    assert!((w.visitor.position.x - 9.4).abs() < 1e-12);
    w.step(MoveCommand::SetRaised { raised: true }, SimTime::from_secs(0.1));
    assert!(w.visitor.phone_raised);
}

#[test]
fn crowd_agents_follow_waypoints() {
    let agent = CrowdAgent {
        id: "a".into(),
        radius: 0.3,
        waypoints: vec![
            Waypoint { t: SimTime::from_secs(1.0), position: v(0.0, 0.0) },
            Waypoint { t: SimTime::from_secs(3.0), position: v(4.0, 2.0) },
        ],
    };
    assert_eq!(agent.position_at(SimTime::ZERO), v(0.0, 0.0));
    assert_eq!(agent.position_at(SimTime::from_secs(2.0)), v(2.0, 1.0));
    assert_eq!(agent.position_at(SimTime::from_secs(3.0)), v(4.0, 2.0));
    assert_eq!(agent.position_at(SimTime::from_secs(9.0)), v(4.0, 2.0));

    let beacons = vec![Beacon { id: "b".into(), artifact_id: "x".into(), position: Some(v(1.0, 1.0)), enabled: true }];
    let mut w = WorldState::new(room_with(vec![]), beacons, VisitorState::at(v(1.0, 1.0), 0.0), vec![agent]);
    for _ in 0..20 {
        w.step(MoveCommand::Idle, SimTime::from_secs(0.1));
    }
    assert_eq!(w.crowd_positions()[0], v(2.0, 1.0));
    assert_eq!(w.crowd_disks()[0].radius, 0.3);
}

fn small_int() -> impl Strategy<Value = f64> {
    (0i32..=10).prop_map(f64::from)
}

fn grid_point() -> impl Strategy<Value = Vec2> {
    (small_int(), small_int()).prop_map(|(x, y)| v(x, y))
}

/// Convex polygon from the hull of random grid points, or `None` if degenerate.
fn hull(points: Vec<Vec2>) -> Option<Vec<Vec2>> {
    let mut pts = points;
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return None;
    }
    let cross = |o: Vec2, a: Vec2, b: Vec2| (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    let mut lower: Vec<Vec2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Vec2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    (lower.len() >= 3).then_some(lower)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn obstacle_hits_match_cyrus_beck(points in prop::collection::vec(grid_point(), 3..7),
                                      a in grid_point(), b in grid_point(), flip: bool) {
        let Some(mut poly) = hull(points) else { return Ok(()) };
        if flip {
            poly.reverse();
        }
        let fp = room_with(vec![poly.clone()]);
        let got = !line_of_sight(a, b, &fp).is_empty();
        prop_assert_eq!(got, oracle_hits(a, b, &poly), "poly {:?} seg {:?}-{:?}", poly, a, b);
    }

    #[test]
    fn line_of_sight_is_symmetric(points in prop::collection::vec(grid_point(), 3..7),
                                  wall in (grid_point(), grid_point()), a in grid_point(), b in grid_point()) {
        let Some(poly) = hull(points) else { return Ok(()) };
        let mut fp = room_with(vec![poly]);
        fp.walls.push(Wall { a: wall.0, b: wall.1, attenuation_db: 3.0 });
        prop_assert_eq!(line_of_sight(a, b, &fp), line_of_sight(b, a, &fp));
    }

    #[test]
    fn walking_never_enters_an_obstacle(dirs in prop::collection::vec(-4.0..4.0f64, 1..300)) {
        let fp = room_with(vec![rect(4.0, 4.0, 6.0, 12.0), vec![v(12.0, 3.0), v(16.0, 6.0), v(13.0, 9.0)]]);
        let mut w = WorldState::new(fp, vec![], VisitorState::at(v(2.0, 2.0), 0.0), vec![]);
        for d in dirs {
            w.step(MoveCommand::Walk { direction: d }, SimTime::from_secs(0.25));
            let p = w.visitor.position;
            prop_assert!(w.floorplan.bounds.contains(p));
            prop_assert!(!w.floorplan.in_obstacle(p));
            for o in &w.floorplan.obstacles {
                prop_assert!(!o.polygon().contains(p), "{:?} on {}", p, o.label);
            }
        }
    }
}
