//! Ray-cast colour vision.

use std::f64::consts::PI;

/// A visible disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sighting {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    pub color: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eye {
    pub rays: usize,
    /// Full field of view, radians.
    pub fov: f64,
    pub range: f64,
}

impl Eye {
    /// Ray offsets from the heading, evenly spread edge to edge.
    pub fn ray_offset(&self, i: usize) -> f64 {
        if self.rays <= 1 {
            0.0
        } else {
            -self.fov / 2.0 + self.fov * i as f64 / (self.rays - 1) as f64
        }
    }

    /// Fills `out` (length `3·rays`) with red, green and blue channel blocks.
    ///
    /// Each ray reports the colour of the nearest disc it intersects, scaled
    /// by `1 − d/range` where `d` is the distance to that disc's centre.
    pub fn look<'a>(
        &self,
        x: f64,
        y: f64,
        heading: f64,
        scene: impl IntoIterator<Item = &'a Sighting>,
        out: &mut [f64],
    ) {
        let r = self.rays;
        debug_assert_eq!(out.len(), 3 * r);
        out.fill(0.0);
        // nearest hit distance per ray; f64::INFINITY when nothing seen
        let mut best = [f64::INFINITY; 64];
        let best = &mut best[..r.min(64)];
        let half_fov = self.fov / 2.0;
        for s in scene {
            let dx = s.x - x;
            let dy = s.y - y;
            let d = (dx * dx + dy * dy).sqrt();
            if d - s.radius > self.range || d >= self.range {
                continue;
            }
            let intensity = (1.0 - d / self.range).clamp(0.0, 1.0);
            let (bearing, half_width) = if d <= s.radius {
                (0.0, PI)
            } else {
                (wrap(dy.atan2(dx) - heading), (s.radius / d).asin())
            };
            if bearing.abs() > half_fov + half_width {
                continue;
            }
            for (i, slot) in best.iter_mut().enumerate() {
                let delta = wrap(self.ray_offset(i) - bearing);
                if delta.abs() > half_width {
                    continue;
                }
                let hit = if d <= s.radius {
                    0.0
                } else {
                    let along = d * delta.cos();
                    let perp = d * delta.sin();
                    along - (s.radius * s.radius - perp * perp).max(0.0).sqrt()
                };
                if hit < *slot {
                    *slot = hit;
                    for c in 0..3 {
                        out[c * r + i] = s.color[c] * intensity;
                    }
                }
            }
        }
    }
}

/// Wraps an angle into (−π, π].
pub fn wrap(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    const GREEN: [f64; 3] = [0.0, 1.0, 0.0];

    fn eye(rays: usize) -> Eye {
        Eye {
            rays,
            fov: 120f64.to_radians(),
            range: 30.0,
        }
    }

    #[test]
    fn empty_scene_is_dark() {
        let mut out = [1.0; 24];
        eye(8).look(50.0, 50.0, 0.0, &[], &mut out);
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn food_dead_ahead_at_half_range() {
        let e = eye(9);
        let food = [Sighting {
            x: 65.0,
            y: 50.0,
            radius: 0.5,
            color: GREEN,
        }];
        let mut out = [0.0; 27];
        e.look(50.0, 50.0, 0.0, &food, &mut out);
        let center = 4;
        assert!((out[9 + center] - 0.5).abs() < 1e-12);
        assert_eq!(out[center], 0.0);
        assert_eq!(out[18 + center], 0.0);
        // neighbours 15 degrees off miss a half-unit disc at 15 units
        assert_eq!(out[9 + center - 1], 0.0);
    }

    #[test]
    fn objects_behind_are_invisible() {
        let food = [Sighting {
            x: 40.0,
            y: 50.0,
            radius: 0.5,
            color: GREEN,
        }];
        let mut out = [0.0; 24];
        eye(8).look(50.0, 50.0, 0.0, &food, &mut out);
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn nearest_object_occludes() {
        let scene = [
            Sighting {
                x: 70.0,
                y: 50.0,
                radius: 1.0,
                color: GREEN,
            },
            Sighting {
                x: 60.0,
                y: 50.0,
                radius: 1.0,
                color: [1.0, 0.0, 0.0],
            },
        ];
        let mut out = [0.0; 27];
        eye(9).look(50.0, 50.0, 0.0, &scene, &mut out);
        assert!((out[4] - (1.0 - 10.0 / 30.0)).abs() < 1e-12);
        assert_eq!(out[9 + 4], 0.0);
    }

    #[test]
    fn heading_rotates_view() {
        let food = [Sighting {
            x: 50.0,
            y: 70.0,
            radius: 0.5,
            color: GREEN,
        }];
        let mut out = [0.0; 27];
        eye(9).look(50.0, 50.0, std::f64::consts::FRAC_PI_2, &food, &mut out);
        assert!((out[9 + 4] - (1.0 - 20.0 / 30.0)).abs() < 1e-12);
    }
}
