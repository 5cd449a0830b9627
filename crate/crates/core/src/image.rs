//! Minimal owned image buffers plus PNG I/O.

use std::path::{Path, PathBuf};

use image::{ImageBuffer, Luma};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageIoError {
    #[error("unreadable image {path}: {source}")]
    Unreadable {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("cannot write image {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

/// Row-major 8-bit intensity image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    /// Loads any PNG and converts it to luma.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ImageIoError> {
        let path = path.as_ref();
        let img = image::open(path)
            .map_err(|source| ImageIoError::Unreadable {
                path: path.to_path_buf(),
                source,
            })?
            .into_luma8();
        Ok(Self {
            width: img.width() as usize,
            height: img.height() as usize,
            data: img.into_raw(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ImageIoError> {
        let path = path.as_ref();
        let buf: ImageBuffer<Luma<u8>, _> =
            ImageBuffer::from_raw(self.width as u32, self.height as u32, self.data.clone()).expect("buffer size");
        buf.save(path).map_err(|source| ImageIoError::Write {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Row-major raw depth in sensor units; `0` means no reading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u16>,
}

impl DepthImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn filled(width: usize, height: usize, value: u16) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u16) {
        self.data[y * self.width + x] = v;
    }

    /// Loads a 16-bit single channel PNG.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ImageIoError> {
        let path = path.as_ref();
        let img = image::open(path)
            .map_err(|source| ImageIoError::Unreadable {
                path: path.to_path_buf(),
                source,
            })?
            .into_luma16();
        Ok(Self {
            width: img.width() as usize,
            height: img.height() as usize,
            data: img.into_raw(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ImageIoError> {
        let path = path.as_ref();
        let buf: ImageBuffer<Luma<u16>, _> =
            ImageBuffer::from_raw(self.width as u32, self.height as u32, self.data.clone()).expect("buffer size");
        buf.save(path).map_err(|source| ImageIoError::Write {
            path: path.to_path_buf(),
            source,
        })
    }
}
