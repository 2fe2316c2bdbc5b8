//! The central server's reference location stores.
//!
//! At deployment time the server records, for every group, its trilateration
//! point (store `M1`) and, for every neighboring group, a cross reference
//! (`M2`, `M3`, ... in ascending neighbor order): the group's point as
//! re-trilaterated by a mixed triple borrowing an anchor from the neighbor.
//! All references are computed from true positions before any attack — the
//! stores are what detection later compares live measurements against.
//! Individual nodes never see their neighbors' records; scoping them to this
//! store models that.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use thiserror::Error;

use crate::geometry::{self, GeometryError, Point, RangeTriple};
use crate::network::{AnchorId, Deployment, GroupId, TrilaterationGroup};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum RegistryError {
    #[error("duplicate reference record for group {group} tag {tag}")]
    DuplicateRecord { group: GroupId, tag: StoreTag },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Which memory slot a record occupies: `M1` is the group's own reference,
/// `M2+` are cross references against neighbors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StoreTag(pub u32);

impl StoreTag {
    pub const M1: StoreTag = StoreTag(1);

    pub fn is_primary(&self) -> bool {
        self.0 == 1
    }
}

impl core::fmt::Display for StoreTag {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "M{}", self.0)
    }
}

/// One saved location reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceRecord {
    pub group_id: GroupId,
    /// The triple that produced the reference: the group's own members for
    /// `M1`, a mixed triple for cross records.
    pub members: [AnchorId; 3],
    pub point: Point,
    pub tag: StoreTag,
}

/// All reference records, indexed per group. Written once at setup, read-only
/// afterwards.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReferenceStore {
    records: Vec<ReferenceRecord>,
    by_group: BTreeMap<GroupId, Vec<usize>>,
}

impl ReferenceStore {
    /// Builds a store from records, enforcing `(group, tag)` uniqueness.
    pub fn from_records(records: Vec<ReferenceRecord>) -> Result<Self, RegistryError> {
        let mut by_group: BTreeMap<GroupId, Vec<usize>> = BTreeMap::new();
        for (idx, rec) in records.iter().enumerate() {
            let slots = by_group.entry(rec.group_id).or_default();
            if slots.iter().any(|&i| records[i].tag == rec.tag) {
                return Err(RegistryError::DuplicateRecord { group: rec.group_id, tag: rec.tag });
            }
            slots.push(idx);
        }
        Ok(Self { records, by_group })
    }

    pub fn records(&self) -> &[ReferenceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// The group's own (`M1`) reference.
    pub fn m1(&self, group: GroupId) -> Option<&ReferenceRecord> {
        self.for_group(group).find(|r| r.tag.is_primary())
    }

    /// Cross records (`M2+`) of a group, in tag order.
    pub fn cross_records(&self, group: GroupId) -> impl Iterator<Item = &ReferenceRecord> {
        self.for_group(group).filter(|r| !r.tag.is_primary())
    }

    /// Looks up one record by `(group, tag)`. Cross tags follow neighbor
    /// order: the k-th neighbor (ascending id) of a group maps to `M(k+2)`,
    /// so a missing entry means the mixed triple was degenerate at build time.
    pub fn by_tag(&self, group: GroupId, tag: StoreTag) -> Option<&ReferenceRecord> {
        self.for_group(group).find(|r| r.tag == tag)
    }

    fn for_group(&self, group: GroupId) -> impl Iterator<Item = &ReferenceRecord> {
        self.by_group
            .get(&group)
            .into_iter()
            .flat_map(move |idxs| idxs.iter().map(move |&i| &self.records[i]))
    }
}

/// Computes every group's references from the deployment's true positions:
/// one `M1` per group plus one cross record per (group, neighbor) adjacency.
/// Mixed triples that fail the degeneracy checks are skipped with a warning.
pub fn build_references(dep: &Deployment) -> Result<ReferenceStore, RegistryError> {
    let mut records = Vec::new();
    for group in &dep.groups {
        records.push(ReferenceRecord {
            group_id: group.id,
            members: group.members,
            point: group.trilateration_point,
            tag: StoreTag::M1,
        });
        for (k, &neighbor_id) in dep.neighbors(group.id).iter().enumerate() {
            let neighbor = dep.group(neighbor_id).expect("neighbor map references known groups");
            match cross_reference(dep, group, neighbor) {
                Some(rec) => {
                    records.push(ReferenceRecord { tag: StoreTag(k as u32 + 2), ..rec });
                }
                None => {
                    log::warn!(
                        "skipping degenerate mixed triple for group {} / neighbor {}",
                        group.id,
                        neighbor_id
                    );
                }
            }
        }
    }
    ReferenceStore::from_records(records)
}

/// Re-trilaterates `group`'s point through the first non-degenerate mixed
/// triple (two of its members plus one of the neighbor's), using exact ranges
/// from true positions.
fn cross_reference(
    dep: &Deployment,
    group: &TrilaterationGroup,
    neighbor: &TrilaterationGroup,
) -> Option<ReferenceRecord> {
    let target = group.trilateration_point;
    for (a, b) in [(0usize, 1usize), (0, 2), (1, 2)] {
        for &borrowed in &neighbor.members {
            let ga = group.members[a];
            let gb = group.members[b];
            if borrowed == ga || borrowed == gb {
                continue;
            }
            let pts = [
                dep.anchor(ga)?.true_position,
                dep.anchor(gb)?.true_position,
                dep.anchor(borrowed)?.true_position,
            ];
            let ranges = RangeTriple::exact(pts, target);
            if let Ok(loc) = geometry::trilaterate(pts, &ranges) {
                return Some(ReferenceRecord {
                    group_id: group.id,
                    members: [ga, gb, borrowed],
                    point: loc.position,
                    tag: StoreTag::M1, // overwritten by the caller
                });
            }
        }
    }
    None
}
