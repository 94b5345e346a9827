//! Equirectangular frame sequences stored as numbered PNG files plus a JSON
//! manifest.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameManifest {
    pub width: u32,
    pub height: u32,
    pub fps: f64,
    pub frame_count: usize,
}

impl FrameManifest {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Data(format!("frame size {}x{} is empty", self.width, self.height)));
        }
        if !(self.fps > 0.0) || !self.fps.is_finite() {
            return Err(Error::Data(format!("fps {} must be positive", self.fps)));
        }
        Ok(())
    }

    pub fn duration_s(&self) -> f64 {
        self.frame_count as f64 / self.fps
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let s = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let m: FrameManifest = serde_json::from_str(&s)?;
        m.validate()?;
        Ok(m)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        std::fs::write(&path, s).map_err(|e| Error::io(&path, e))
    }
}

pub fn frame_file_name(index: usize) -> String {
    format!("{index:06}.png")
}

#[derive(Debug, Clone)]
enum FrameStore {
    Memory(Vec<Arc<RgbImage>>),
    Directory(PathBuf),
}

/// A 360-degree video as an addressable list of equirectangular frames.
#[derive(Debug, Clone)]
pub struct EquirectSequence {
    manifest: FrameManifest,
    store: FrameStore,
}

impl EquirectSequence {
    pub fn from_frames(fps: f64, frames: Vec<RgbImage>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::Data("sequence has no frames".into()))?;
        let (width, height) = first.dimensions();
        if let Some(i) = frames.iter().position(|f| f.dimensions() != (width, height)) {
            return Err(Error::Data(format!("frame {i} differs in size from frame 0")));
        }
        let manifest = FrameManifest {
            width,
            height,
            fps,
            frame_count: frames.len(),
        };
        manifest.validate()?;
        Ok(Self {
            manifest,
            store: FrameStore::Memory(frames.into_iter().map(Arc::new).collect()),
        })
    }

    /// Opens a frame directory; frames are decoded on access.
    pub fn open(dir: &Path) -> Result<Self> {
        let manifest = FrameManifest::read(dir)?;
        Ok(Self {
            manifest,
            store: FrameStore::Directory(dir.to_path_buf()),
        })
    }

    pub fn manifest(&self) -> &FrameManifest {
        &self.manifest
    }
    pub fn width(&self) -> u32 {
        self.manifest.width
    }
    pub fn height(&self) -> u32 {
        self.manifest.height
    }
    pub fn fps(&self) -> f64 {
        self.manifest.fps
    }
    pub fn len(&self) -> usize {
        self.manifest.frame_count
    }
    pub fn is_empty(&self) -> bool {
        self.manifest.frame_count == 0
    }
    pub fn duration_s(&self) -> f64 {
        self.manifest.duration_s()
    }

    pub fn frame(&self, index: usize) -> Result<Arc<RgbImage>> {
        if index >= self.len() {
            return Err(Error::Data(format!("missing input frame {index} (sequence has {})", self.len())));
        }
        let img = match &self.store {
            FrameStore::Memory(frames) => frames[index].clone(),
            FrameStore::Directory(dir) => {
                let path = dir.join(frame_file_name(index));
                let img = image::open(&path)
                    .map_err(|e| Error::Data(format!("missing input frame {index}: {e}")))?
                    .to_rgb8();
                Arc::new(img)
            }
        };
        if img.dimensions() != (self.width(), self.height()) {
            return Err(Error::Data(format!(
                "frame {index} is {}x{}, manifest says {}x{}",
                img.width(),
                img.height(),
                self.width(),
                self.height()
            )));
        }
        Ok(img)
    }

    /// Writes frames and manifest into `dir` (created if needed).
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for i in 0..self.len() {
            write_png(&*self.frame(i)?, &dir.join(frame_file_name(i)))?;
        }
        self.manifest.write(dir)
    }
}

pub fn write_png(img: &RgbImage, path: &Path) -> Result<()> {
    img.save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}
