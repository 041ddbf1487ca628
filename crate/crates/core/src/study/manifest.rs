use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::Path;

use super::StudyError;
use crate::stats::ImageKind;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageEntry {
    pub image_id: String,
    pub image_kind: ImageKind,
    pub front_uri: String,
    pub side_uri: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quota {
    pub avatar: usize,
    pub real: usize,
}

impl Default for Quota {
    fn default() -> Self {
        Quota { avatar: 50, real: 50 }
    }
}

impl Quota {
    pub fn for_kind(&self, kind: ImageKind) -> usize {
        match kind {
            ImageKind::Avatar => self.avatar,
            ImageKind::Real => self.real,
        }
    }

    pub fn total(&self) -> usize {
        self.avatar + self.real
    }
}

fn default_target() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyManifest {
    pub images: Vec<ImageEntry>,
    #[serde(default = "default_target")]
    pub target_ratings_per_image: usize,
    #[serde(default)]
    pub per_rater_quota: Quota,
}

impl StudyManifest {
    pub fn new(images: Vec<ImageEntry>) -> Self {
        StudyManifest {
            images,
            target_ratings_per_image: default_target(),
            per_rater_quota: Quota::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, StudyError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| StudyError::InvalidManifest(format!("{}: {e}", path.display())))?;
        let manifest: StudyManifest = serde_json::from_str(&text)
            .map_err(|e| StudyError::InvalidManifest(format!("{}: {e}", path.display())))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<(), StudyError> {
        let bad = |m: String| Err(StudyError::InvalidManifest(m));
        if self.images.is_empty() {
            return bad("manifest lists no images".into());
        }
        let mut seen = HashSet::new();
        for img in &self.images {
            if img.image_id.is_empty() {
                return bad("empty image_id".into());
            }
            if !seen.insert(img.image_id.as_str()) {
                return bad(format!("duplicate image_id {}", img.image_id));
            }
        }
        if self.per_rater_quota.total() == 0 {
            return bad("per-rater quota is zero".into());
        }
        for kind in ImageKind::ALL {
            let available = self.count(kind);
            let quota = self.per_rater_quota.for_kind(kind);
            if quota > available {
                return bad(format!("{kind} quota {quota} exceeds the {available} available images"));
            }
        }
        Ok(())
    }

    pub fn count(&self, kind: ImageKind) -> usize {
        self.images.iter().filter(|i| i.image_kind == kind).count()
    }

    pub fn image(&self, image_id: &str) -> Option<&ImageEntry> {
        self.images.iter().find(|i| i.image_id == image_id)
    }

    /// `n_avatar` + `n_real` placeholder images with predictable URIs.
    pub fn synthetic(n_avatar: usize, n_real: usize) -> Self {
        let mut images = Vec::with_capacity(n_avatar + n_real);
        for (kind, n) in [(ImageKind::Avatar, n_avatar), (ImageKind::Real, n_real)] {
            for i in 0..n {
                let id = format!("{kind}_{i:04}");
                images.push(ImageEntry {
                    front_uri: format!("/images/{id}_front.png"),
                    side_uri: format!("/images/{id}_side.png"),
                    image_id: id,
                    image_kind: kind,
                });
            }
        }
        StudyManifest::new(images)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_validation() {
        let m = StudyManifest::synthetic(100, 100);
        m.validate().unwrap();
        assert_eq!(m.per_rater_quota, Quota { avatar: 50, real: 50 });
        assert_eq!(m.target_ratings_per_image, 10);

        assert!(StudyManifest::synthetic(0, 0).validate().is_err());
        assert!(StudyManifest::synthetic(40, 100).validate().is_err());
        let mut dup = StudyManifest::synthetic(60, 60);
        dup.images[1].image_id = dup.images[0].image_id.clone();
        assert!(dup.validate().is_err());
    }

    #[test]
    fn json_defaults_apply() {
        let text = r#"{"images":[{"image_id":"a","image_kind":"avatar","front_uri":"f","side_uri":"s"}],
                       "per_rater_quota":{"avatar":1,"real":0}}"#;
        let m: StudyManifest = serde_json::from_str(text).unwrap();
        assert_eq!(m.target_ratings_per_image, 10);
        m.validate().unwrap();
    }
}
