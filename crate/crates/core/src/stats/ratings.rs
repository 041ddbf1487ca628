//! Rating records, the CSV exchange format and the sparse rating matrix.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};

use super::StatsError;
use crate::twstrs::Item;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageKind {
    Avatar,
    Real,
}

impl ImageKind {
    pub const ALL: [ImageKind; 2] = [ImageKind::Avatar, ImageKind::Real];

    pub fn as_str(self) -> &'static str {
        match self {
            ImageKind::Avatar => "avatar",
            ImageKind::Real => "real",
        }
    }
}

impl fmt::Display for ImageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One rater's score for one item of one image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub rater_id: String,
    pub image_id: String,
    pub image_kind: ImageKind,
    pub item: Item,
    pub value: u8,
}

impl RatingRecord {
    pub fn validate(&self) -> Result<(), String> {
        if self.value > self.item.max_score() {
            return Err(format!(
                "{} value {} exceeds maximum {}",
                self.item,
                self.value,
                self.item.max_score()
            ));
        }
        if self.rater_id.is_empty() || self.image_id.is_empty() {
            return Err("rater_id and image_id must be non-empty".into());
        }
        Ok(())
    }
}

/// Arithmetic mean of all ratings for `(image_id, item)`.
pub fn mean_rating(records: &[RatingRecord], image_id: &str, item: Item) -> Result<f64, StatsError> {
    let values: Vec<f64> = records
        .iter()
        .filter(|r| r.image_id == image_id && r.item == item)
        .map(|r| r.value as f64)
        .collect();
    if values.is_empty() {
        return Err(StatsError::NoRatings {
            image_id: image_id.to_string(),
            item,
        });
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Reads `rater_id,image_id,image_kind,item,value` rows.
pub fn read_ratings_csv<R: Read>(r: R) -> Result<Vec<RatingRecord>, StatsError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, row) in reader.deserialize::<RatingRecord>().enumerate() {
        // Header is line 1.
        let line = i + 2;
        let rec = row.map_err(|e| StatsError::InvalidRecord { line, message: e.to_string() })?;
        rec.validate().map_err(|message| StatsError::InvalidRecord { line, message })?;
        if !seen.insert((rec.rater_id.clone(), rec.image_id.clone(), rec.item)) {
            return Err(StatsError::DuplicateRating {
                rater_id: rec.rater_id,
                image_id: rec.image_id,
                item: rec.item,
            });
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn write_ratings_csv<W: Write>(w: W, records: &[RatingRecord]) -> Result<(), StatsError> {
    let mut writer = csv::Writer::from_writer(w);
    for r in records {
        writer.serialize(r).map_err(|e| StatsError::Csv(e.to_string()))?;
    }
    writer.flush().map_err(|e| StatsError::Csv(e.to_string()))
}

/// Items × images × raters, with absent entries for missing ratings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RatingMatrix {
    cells: BTreeMap<Item, BTreeMap<String, BTreeMap<String, u8>>>,
    kinds: BTreeMap<String, ImageKind>,
}

impl RatingMatrix {
    pub fn from_records(records: &[RatingRecord]) -> Result<Self, StatsError> {
        let mut m = RatingMatrix::default();
        for r in records {
            m.insert(r)?;
        }
        Ok(m)
    }

    pub fn insert(&mut self, r: &RatingRecord) -> Result<(), StatsError> {
        r.validate().map_err(|message| StatsError::InvalidRecord { line: 0, message })?;
        if let Some(kind) = self.kinds.insert(r.image_id.clone(), r.image_kind) {
            if kind != r.image_kind {
                return Err(StatsError::InvalidRecord {
                    line: 0,
                    message: format!("image {} is both {} and {}", r.image_id, kind, r.image_kind),
                });
            }
        }
        let by_rater = self
            .cells
            .entry(r.item)
            .or_default()
            .entry(r.image_id.clone())
            .or_default();
        if by_rater.insert(r.rater_id.clone(), r.value).is_some() {
            return Err(StatsError::DuplicateRating {
                rater_id: r.rater_id.clone(),
                image_id: r.image_id.clone(),
                item: r.item,
            });
        }
        Ok(())
    }

    pub fn get(&self, item: Item, image_id: &str, rater_id: &str) -> Option<u8> {
        self.cells.get(&item)?.get(image_id)?.get(rater_id).copied()
    }

    pub fn kind(&self, image_id: &str) -> Option<ImageKind> {
        self.kinds.get(image_id).copied()
    }

    pub fn items(&self) -> impl Iterator<Item = Item> + '_ {
        self.cells.keys().copied()
    }

    pub fn images(&self) -> impl Iterator<Item = &str> {
        self.kinds.keys().map(String::as_str)
    }

    /// Restricts the matrix to images of one kind.
    pub fn of_kind(&self, kind: ImageKind) -> RatingMatrix {
        let keep = |id: &String| self.kinds.get(id) == Some(&kind);
        RatingMatrix {
            cells: self
                .cells
                .iter()
                .map(|(item, imgs)| {
                    let imgs = imgs.iter().filter(|(id, _)| keep(id)).map(|(k, v)| (k.clone(), v.clone())).collect();
                    (*item, imgs)
                })
                .collect(),
            kinds: self.kinds.iter().filter(|(id, _)| keep(id)).map(|(k, v)| (k.clone(), *v)).collect(),
        }
    }

    /// Values per image (in image-id order) for one item; missing ratings are absent.
    pub fn units(&self, item: Item) -> Vec<Vec<u8>> {
        self.cells
            .get(&item)
            .map(|imgs| imgs.values().map(|r| r.values().copied().collect()).collect())
            .unwrap_or_default()
    }

    /// Number of ratings per image for one item, in image-id order.
    pub fn rating_counts(&self, item: Item) -> BTreeMap<String, usize> {
        self.cells
            .get(&item)
            .map(|imgs| imgs.iter().map(|(id, r)| (id.clone(), r.len())).collect())
            .unwrap_or_default()
    }
}
