//! Network area, node placement and torus distances.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkArea {
    pub width: f64,
    pub height: f64,
    /// Wrap-around distances; plain Euclidean geometry when false.
    pub torus: bool,
}

impl NetworkArea {
    pub fn new(width: f64, height: f64, torus: bool) -> Result<Self> {
        if !(width > 0.0 && height > 0.0) {
            return Err(Error::Config(format!("area must be positive, got {width} x {height}")));
        }
        Ok(NetworkArea { width, height, torus })
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn contains(&self, p: Point) -> bool {
        (0.0..self.width).contains(&p.x) && (0.0..self.height).contains(&p.y)
    }

    /// Shortest displacement from `p` to `q`, wrapping each axis on a torus.
    pub fn displacement(&self, p: Point, q: Point) -> (f64, f64) {
        let wrap = |d: f64, size: f64| {
            if !self.torus {
                return d;
            }
            let d = d.rem_euclid(size);
            if d > size / 2.0 {
                d - size
            } else {
                d
            }
        };
        (wrap(q.x - p.x, self.width), wrap(q.y - p.y, self.height))
    }

    pub fn distance(&self, p: Point, q: Point) -> f64 {
        let (dx, dy) = self.displacement(p, q);
        dx.hypot(dy)
    }
}

/// Cell centers of a `rows x cols` grid, row by row starting at the bottom.
pub fn place_rus_grid(l: usize, rows: usize, cols: usize, area: &NetworkArea) -> Result<Vec<Point>> {
    if rows * cols != l || l == 0 {
        return Err(Error::Config(format!("grid {rows}x{cols} does not hold {l} RUs")));
    }
    let mut out = Vec::with_capacity(l);
    for j in 0..rows {
        for i in 0..cols {
            out.push(Point::new(
                (i as f64 + 0.5) * area.width / cols as f64,
                (j as f64 + 0.5) * area.height / rows as f64,
            ));
        }
    }
    Ok(out)
}

/// Uniform i.i.d. positions over the area.
pub fn place_ues_uniform<R: Rng>(k: usize, area: &NetworkArea, rng: &mut R) -> Vec<Point> {
    (0..k).map(|_| Point::new(rng.gen_range(0.0..area.width), rng.gen_range(0.0..area.height))).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkLayout {
    pub area: NetworkArea,
    pub rus: Vec<Point>,
    pub ues: Vec<Point>,
    pub antennas: usize,
}

impl NetworkLayout {
    pub fn num_rus(&self) -> usize {
        self.rus.len()
    }

    pub fn num_ues(&self) -> usize {
        self.ues.len()
    }

    /// RU-to-UE distances, indexed `[l][k]`.
    pub fn distances(&self) -> Vec<Vec<f64>> {
        self.rus.iter().map(|&r| self.ues.iter().map(|&u| self.area.distance(r, u)).collect()).collect()
    }
}
