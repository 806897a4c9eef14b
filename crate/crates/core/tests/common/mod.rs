#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rua::image::{encode_ppm, Image};

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_rua"))
}

pub fn rua(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("run rua binary")
}

pub fn random_image(w: u32, h: u32, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..w * h * 3).map(|_| rng.random()).collect();
    Image::from_raw(w, h, data).unwrap()
}

/// Smooth gradients with a little noise, closer to photographs than pure
/// noise.
pub fn photo_like(w: u32, h: u32, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity((w * h * 3) as usize);
    for y in 0..h {
        for x in 0..w {
            let base = [x * 255 / w.max(1), y * 255 / h.max(1), (x + y) * 127 / (w + h).max(1)];
            for v in base {
                data.push((v as i32 + rng.random_range(-12..=12)).clamp(0, 255) as u8);
            }
        }
    }
    Image::from_raw(w, h, data).unwrap()
}

/// Writes `count` PPM files named img_000.ppm, img_001.ppm, …
pub fn write_corpus(dir: &Path, count: usize, w: u32, h: u32, seed: u64) {
    std::fs::create_dir_all(dir).unwrap();
    for i in 0..count {
        let img = photo_like(w, h, seed.wrapping_add(i as u64));
        std::fs::write(dir.join(format!("img_{i:03}.ppm")), encode_ppm(&img)).unwrap();
    }
}

/// Sorted (file name, bytes) pairs of a directory.
pub fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

/// Search template that scores r with the built-in synthetic surface.
pub fn demo_template(extra: &str) -> String {
    format!("'{}' demo-surface {extra} --r {{r}}", bin().display())
}

pub fn best_r(stdout: &str) -> f64 {
    let line = stdout.lines().find(|l| l.starts_with("best r = ")).expect("best line");
    line["best r = ".len()..].split(',').next().unwrap().trim().parse().unwrap()
}
