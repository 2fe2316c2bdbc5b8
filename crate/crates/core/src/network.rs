//! Anchor population and the chained-trilateration deployment.
//!
//! Deployment seeds three random anchors, places a fourth on their group's
//! trilateration point (the triple's centroid), then repeatedly forms a new
//! group from the last-placed anchor plus two fresh random anchors and places
//! the next anchor on that group's point, until the population is reached.
//! Chaining the placed anchor into the following group keeps every anchor
//! attached to a group and links consecutive groups in the adjacency map.
//!
//! Attacks flip selected anchors to `compromised`, displacing only their
//! *reported* position: a cheating node lies about its coordinates while its
//! radio keeps measuring physical distances from where it really is.
//! Quarantine marks flagged anchors and removes their groups from later
//! localization queries.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::geometry::{self, centroid, GeometryError, Point};

/// Rejection-sampling budget for any single placement step.
const MAX_PLACEMENT_ATTEMPTS: u32 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AnchorId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupId(pub u32);

impl core::fmt::Display for AnchorId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl core::fmt::Display for GroupId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum NetworkError {
    #[error("deployment needs at least 4 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("deployment area {width} x {height} m must be positive and finite")]
    InvalidArea { width: f64, height: f64 },
    #[error("placement failed after {0} consecutive rejected samples")]
    PlacementExhausted(u32),
    #[error("attack count {count} exceeds population {population}")]
    CountExceedsPopulation { count: usize, population: usize },
    #[error("attack offsets [{offset_min}, {offset_max}] must satisfy 0 <= min <= max")]
    InvalidOffsets { offset_min: f64, offset_max: f64 },
    #[error("unknown anchor id {0}")]
    UnknownAnchorId(AnchorId),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// One anchor node. `reported_position` equals `true_position` bit-for-bit
/// unless the node is compromised.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorNode {
    pub id: AnchorId,
    pub true_position: Point,
    pub reported_position: Point,
    pub compromised: bool,
    pub quarantined: bool,
}

/// An ordered anchor triple with its trilateration point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrilaterationGroup {
    pub id: GroupId,
    pub members: [AnchorId; 3],
    pub trilateration_point: Point,
}

impl TrilaterationGroup {
    pub fn contains(&self, id: AnchorId) -> bool {
        self.members.contains(&id)
    }
}

/// A deployed anchor population with its groups and group adjacency.
/// Immutable after construction; attack and quarantine return new values.
#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub area_width: f64,
    pub area_height: f64,
    pub anchors: Vec<AnchorNode>,
    pub groups: Vec<TrilaterationGroup>,
    /// Group adjacency: two groups are neighbors when an anchor is associated
    /// with both (as a member or as the anchor placed on the group's
    /// trilateration point). Neighbor lists are sorted ascending.
    pub neighbor_map: BTreeMap<GroupId, Vec<GroupId>>,
}

impl Deployment {
    pub fn anchor(&self, id: AnchorId) -> Option<&AnchorNode> {
        let a = self.anchors.get(id.0 as usize)?;
        debug_assert_eq!(a.id, id);
        Some(a)
    }

    pub fn group(&self, id: GroupId) -> Option<&TrilaterationGroup> {
        let g = self.groups.get(id.0 as usize)?;
        debug_assert_eq!(g.id, id);
        Some(g)
    }

    pub fn neighbors(&self, id: GroupId) -> &[GroupId] {
        self.neighbor_map.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Groups whose member triple contains the given anchor.
    pub fn groups_containing(&self, id: AnchorId) -> impl Iterator<Item = &TrilaterationGroup> {
        self.groups.iter().filter(move |g| g.contains(id))
    }

    /// Whether a group survives quarantine: none of its members is
    /// quarantined.
    pub fn is_active(&self, group: &TrilaterationGroup) -> bool {
        group.members.iter().all(|&m| self.anchor(m).map(|a| !a.quarantined).unwrap_or(false))
    }

    /// Groups usable for localization queries (no quarantined member).
    pub fn active_groups(&self) -> impl Iterator<Item = &TrilaterationGroup> {
        self.groups.iter().filter(|g| self.is_active(g))
    }

    /// Member positions of a group: (reported, true), in member order.
    pub(crate) fn member_positions(&self, group: &TrilaterationGroup) -> ([Point; 3], [Point; 3]) {
        let mut reported = [Point::default(); 3];
        let mut truth = [Point::default(); 3];
        for (k, &m) in group.members.iter().enumerate() {
            let a = &self.anchors[m.0 as usize];
            reported[k] = a.reported_position;
            truth[k] = a.true_position;
        }
        (reported, truth)
    }
}

/// A compromise campaign: how many anchors lie, and how far their reported
/// positions move (uniform radius in `[offset_min, offset_max]`, uniform
/// direction).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackSpec {
    pub count: usize,
    pub offset_min: f64,
    pub offset_max: f64,
}

impl AttackSpec {
    pub fn new(count: usize, offset_min: f64, offset_max: f64) -> Result<Self, NetworkError> {
        if !(offset_min.is_finite() && offset_max.is_finite())
            || offset_min < 0.0
            || offset_min > offset_max
        {
            return Err(NetworkError::InvalidOffsets { offset_min, offset_max });
        }
        Ok(Self { count, offset_min, offset_max })
    }
}

fn random_point<R: Rng + ?Sized>(width: f64, height: f64, rng: &mut R) -> Point {
    Point::new(rng.random_range(0.0..=width), rng.random_range(0.0..=height))
}

fn clamp_to_area(p: Point, width: f64, height: f64) -> Point {
    Point::new(p.x.clamp(0.0, width), p.y.clamp(0.0, height))
}

fn triple_valid(a: Point, b: Point, c: Point) -> bool {
    geometry::canonical_frame(a, b, c).is_ok()
}

struct DeployState {
    anchors: Vec<AnchorNode>,
    groups: Vec<TrilaterationGroup>,
    /// anchor -> groups it is associated with (member or placed-on-point).
    assoc: BTreeMap<AnchorId, BTreeSet<GroupId>>,
}

impl DeployState {
    fn push_anchor(&mut self, position: Point) -> AnchorId {
        let id = AnchorId(self.anchors.len() as u32);
        self.anchors.push(AnchorNode {
            id,
            true_position: position,
            reported_position: position,
            compromised: false,
            quarantined: false,
        });
        id
    }

    fn push_group(&mut self, members: [AnchorId; 3]) -> Result<GroupId, NetworkError> {
        let id = GroupId(self.groups.len() as u32);
        let pts: Vec<Point> =
            members.iter().map(|m| self.anchors[m.0 as usize].true_position).collect();
        let point = centroid(&pts)?;
        self.groups.push(TrilaterationGroup { id, members, trilateration_point: point });
        for m in members {
            self.assoc.entry(m).or_default().insert(id);
        }
        Ok(id)
    }

    fn associate(&mut self, anchor: AnchorId, group: GroupId) {
        self.assoc.entry(anchor).or_default().insert(group);
    }

    fn position(&self, id: AnchorId) -> Point {
        self.anchors[id.0 as usize].true_position
    }
}

/// Deploys `node_count` anchors over a `width x height` area by chained
/// trilateration. Pure in `(area, node_count, rng stream)`.
pub fn deploy<R: Rng + ?Sized>(
    area_width: f64,
    area_height: f64,
    node_count: usize,
    rng: &mut R,
) -> Result<Deployment, NetworkError> {
    if !(area_width.is_finite() && area_height.is_finite()) || area_width <= 0.0 || area_height <= 0.0
    {
        return Err(NetworkError::InvalidArea { width: area_width, height: area_height });
    }
    if node_count < 4 {
        return Err(NetworkError::TooFewNodes(node_count));
    }

    let mut state =
        DeployState { anchors: Vec::new(), groups: Vec::new(), assoc: BTreeMap::new() };

    // Seed triple, rejecting degenerate geometry.
    let mut attempts = 0;
    let (p0, p1, p2) = loop {
        let a = random_point(area_width, area_height, rng);
        let b = random_point(area_width, area_height, rng);
        let c = random_point(area_width, area_height, rng);
        if triple_valid(a, b, c) {
            break (a, b, c);
        }
        attempts += 1;
        if attempts >= MAX_PLACEMENT_ATTEMPTS {
            return Err(NetworkError::PlacementExhausted(attempts));
        }
    };
    let a0 = state.push_anchor(p0);
    let a1 = state.push_anchor(p1);
    let a2 = state.push_anchor(p2);
    let g0 = state.push_group([a0, a1, a2])?;

    let first_point =
        clamp_to_area(state.groups[g0.0 as usize].trilateration_point, area_width, area_height);
    let mut link = state.push_anchor(first_point);
    state.associate(link, g0);

    while state.anchors.len() < node_count {
        let remaining = node_count - state.anchors.len();
        let link_pos = state.position(link);

        if remaining == 1 {
            // Not enough room for two fresh anchors: close the chain with one
            // random existing member plus one fresh anchor.
            let mut attempts = 0;
            let (existing, fresh) = loop {
                let idx = rng.random_range(0..state.anchors.len());
                let candidate = AnchorId(idx as u32);
                let q = random_point(area_width, area_height, rng);
                if candidate != link && triple_valid(link_pos, state.position(candidate), q) {
                    break (candidate, q);
                }
                attempts += 1;
                if attempts >= MAX_PLACEMENT_ATTEMPTS {
                    return Err(NetworkError::PlacementExhausted(attempts));
                }
            };
            let fresh_id = state.push_anchor(fresh);
            state.push_group([link, existing, fresh_id])?;
            break;
        }

        let mut attempts = 0;
        let (q1, q2) = loop {
            let q1 = random_point(area_width, area_height, rng);
            let q2 = random_point(area_width, area_height, rng);
            if triple_valid(link_pos, q1, q2) {
                break (q1, q2);
            }
            attempts += 1;
            if attempts >= MAX_PLACEMENT_ATTEMPTS {
                return Err(NetworkError::PlacementExhausted(attempts));
            }
        };
        let n1 = state.push_anchor(q1);
        let n2 = state.push_anchor(q2);
        let gid = state.push_group([link, n1, n2])?;

        if state.anchors.len() < node_count {
            let point = clamp_to_area(
                state.groups[gid.0 as usize].trilateration_point,
                area_width,
                area_height,
            );
            link = state.push_anchor(point);
            state.associate(link, gid);
        }
    }

    // Adjacency: groups sharing an associated anchor.
    let mut neighbor_sets: BTreeMap<GroupId, BTreeSet<GroupId>> =
        state.groups.iter().map(|g| (g.id, BTreeSet::new())).collect();
    for groups in state.assoc.values() {
        for &a in groups {
            for &b in groups {
                if a != b {
                    neighbor_sets.get_mut(&a).expect("group registered").insert(b);
                }
            }
        }
    }
    let neighbor_map =
        neighbor_sets.into_iter().map(|(g, set)| (g, set.into_iter().collect())).collect();

    Ok(Deployment {
        area_width,
        area_height,
        anchors: state.anchors,
        groups: state.groups,
        neighbor_map,
    })
}

/// Compromises exactly `spec.count` distinct anchors chosen uniformly without
/// replacement, displacing each reported position by a uniform-random offset.
/// Returns a new deployment; the input is untouched.
pub fn inject_attack<R: Rng + ?Sized>(
    dep: &Deployment,
    spec: &AttackSpec,
    rng: &mut R,
) -> Result<Deployment, NetworkError> {
    if spec.offset_min < 0.0 || spec.offset_min > spec.offset_max {
        return Err(NetworkError::InvalidOffsets {
            offset_min: spec.offset_min,
            offset_max: spec.offset_max,
        });
    }
    if spec.count > dep.anchors.len() {
        return Err(NetworkError::CountExceedsPopulation {
            count: spec.count,
            population: dep.anchors.len(),
        });
    }
    let mut out = dep.clone();
    if spec.count == 0 {
        return Ok(out);
    }
    let victims = rand::seq::index::sample(rng, dep.anchors.len(), spec.count);
    for idx in victims {
        let radius = rng.random_range(spec.offset_min..=spec.offset_max);
        let angle = rng.random_range(0.0..core::f64::consts::TAU);
        let offset = Point::new(radius * crate::math::cos(angle), radius * crate::math::sin(angle));
        let node = &mut out.anchors[idx];
        node.compromised = true;
        node.reported_position = node.true_position + offset;
    }
    Ok(out)
}

/// Marks the flagged anchors quarantined. Groups containing a quarantined
/// member are excluded from localization queries (see
/// [`Deployment::active_groups`]).
pub fn quarantine(
    dep: &Deployment,
    flagged: &BTreeSet<AnchorId>,
) -> Result<Deployment, NetworkError> {
    for &id in flagged {
        if dep.anchor(id).is_none() {
            return Err(NetworkError::UnknownAnchorId(id));
        }
    }
    let mut out = dep.clone();
    for &id in flagged {
        out.anchors[id.0 as usize].quarantined = true;
    }
    Ok(out)
}
