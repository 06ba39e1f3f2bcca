use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeModel, LatticeSpec, RationalVec2};
use crate::rational::RatStr;

/// A finite subset of `τ + Λ`, stored as integer coordinates in the input basis.
///
/// Input order is preserved (it breaks ties downstream); duplicates are
/// dropped, keeping the first occurrence.
#[derive(Clone, Debug)]
pub struct LatticePointSet {
    model: Arc<LatticeModel>,
    offset: RationalVec2,
    points: Vec<[i64; 2]>,
}

impl LatticePointSet {
    pub fn new(model: Arc<LatticeModel>, offset: RationalVec2, points: Vec<[i64; 2]>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(points.len());
        let points: Vec<[i64; 2]> = points.into_iter().filter(|p| seen.insert(*p)).collect();
        if points.is_empty() {
            return Err(Error::precondition("point set is empty"));
        }
        Ok(LatticePointSet { model, offset, points })
    }

    /// Points at offset zero.
    pub fn from_points(model: Arc<LatticeModel>, points: Vec<[i64; 2]>) -> Result<Self> {
        LatticePointSet::new(model, RationalVec2::zero(), points)
    }

    /// Trusted constructor for already deduplicated, nonempty input.
    pub(crate) fn from_unique(model: Arc<LatticeModel>, offset: RationalVec2, points: Vec<[i64; 2]>) -> Self {
        debug_assert!(!points.is_empty());
        LatticePointSet { model, offset, points }
    }

    pub fn model(&self) -> &LatticeModel {
        &self.model
    }

    pub fn model_arc(&self) -> &Arc<LatticeModel> {
        &self.model
    }

    pub fn offset(&self) -> &RationalVec2 {
        &self.offset
    }

    pub fn points(&self) -> &[[i64; 2]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Subset by predicate, same lattice and offset. Fails if nothing is kept.
    pub fn filter(&self, mut keep: impl FnMut(&[i64; 2]) -> bool) -> Result<Self> {
        let pts: Vec<[i64; 2]> = self.points.iter().copied().filter(|p| keep(p)).collect();
        if pts.is_empty() {
            return Err(Error::precondition("filtered point set is empty"));
        }
        Ok(LatticePointSet { model: self.model.clone(), offset: self.offset.clone(), points: pts })
    }

    pub fn to_file(&self) -> PointSetFile {
        PointSetFile {
            lattice: self.model.to_spec(),
            offset: Some(self.offset.to_strings()),
            points: self.points.clone(),
        }
    }
}

/// Point-set file layout.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointSetFile {
    pub lattice: LatticeSpec,
    #[serde(default)]
    pub offset: Option<[RatStr; 2]>,
    pub points: Vec<[i64; 2]>,
}

impl PointSetFile {
    pub fn into_point_set(self) -> Result<LatticePointSet> {
        let model = Arc::new(self.lattice.resolve()?);
        let offset = self.offset.as_ref().map(RationalVec2::from_strings).unwrap_or_else(RationalVec2::zero);
        LatticePointSet::new(model, offset, self.points)
    }
}

pub fn parse_point_set_json(text: &str) -> Result<LatticePointSet> {
    if text.trim().is_empty() {
        return Err(Error::parse("empty point-set file"));
    }
    let file: PointSetFile = serde_json::from_str(text)?;
    file.into_point_set()
}
