use std::f64::consts::TAU;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{node_name, node_rng, WorldGrid};
use crate::error::{Error, Result};
use crate::trace_io::{SessionRecord, TimeWindow, Trace, DAY};

/// Random Direction parameters.
///
/// A node picks a uniform heading, travels straight to the world boundary,
/// pauses there (online), and repeats. Headings that would leave the world
/// from the current wall are reflected back inward.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RdConfig {
    pub node_count: usize,
    pub speed_min: f64,
    pub speed_max: f64,
    pub pause_time: f64,
    pub sim_duration: i64,
    pub world: WorldGrid,
    pub seed: u64,
}

impl Default for RdConfig {
    fn default() -> Self {
        RdConfig {
            node_count: 100,
            speed_min: 1.0,
            speed_max: 5.0,
            pause_time: 600.0,
            sim_duration: 28 * DAY,
            world: WorldGrid::new(1000.0, 1000.0, 250.0).expect("valid default world"),
            seed: 1,
        }
    }
}

impl RdConfig {
    pub fn validate(&self) -> Result<()> {
        self.world.validate()?;
        if !(self.speed_min > 0.0 && self.speed_min <= self.speed_max && self.speed_max.is_finite())
        {
            return Err(Error::arg(format!(
                "speed range [{}, {}] must satisfy 0 < min <= max",
                self.speed_min, self.speed_max
            )));
        }
        if !(self.pause_time >= 0.0 && self.pause_time.is_finite()) {
            return Err(Error::arg("pause time must be nonnegative"));
        }
        if self.sim_duration <= 0 {
            return Err(Error::arg("simulation duration must be positive"));
        }
        Ok(())
    }
}

pub fn generate_random_direction(config: &RdConfig) -> Result<Trace> {
    config.validate()?;
    let per_node: Vec<Vec<SessionRecord>> = (0..config.node_count)
        .into_par_iter()
        .map(|i| rd_node(config, i))
        .collect::<Result<_>>()?;
    let window = TimeWindow::covering(0, config.sim_duration, DAY)?;
    Ok(Trace::new(per_node.into_iter().flatten().collect(), window))
}

fn rd_node(config: &RdConfig, node: usize) -> Result<Vec<SessionRecord>> {
    let mut out = Vec::new();
    if config.pause_time == 0.0 {
        return Ok(out);
    }
    let name = node_name(node);
    let world = &config.world;
    let end = config.sim_duration as f64;
    let mut rng = node_rng(config.seed, node);
    let (mut x, mut y) = world.bounds().sample(&mut rng);
    let mut t = 0.0;
    while t < end {
        let (dx, dy, d) = loop {
            let theta = rng.random::<f64>() * TAU;
            let (mut dx, mut dy) = (theta.cos(), theta.sin());
            if (x <= 0.0 && dx < 0.0) || (x >= world.width && dx > 0.0) {
                dx = -dx;
            }
            if (y <= 0.0 && dy < 0.0) || (y >= world.height && dy > 0.0) {
                dy = -dy;
            }
            let reach = |p: f64, dp: f64, hi: f64| {
                if dp > 0.0 {
                    (hi - p) / dp
                } else if dp < 0.0 {
                    -p / dp
                } else {
                    f64::INFINITY
                }
            };
            let d = reach(x, dx, world.width).min(reach(y, dy, world.height));
            if d > 1e-9 {
                break (dx, dy, d);
            }
        };
        x = (x + d * dx).clamp(0.0, world.width);
        y = (y + d * dy).clamp(0.0, world.height);
        // Snap the coordinate that hit the wall so the next reflection fires.
        if (world.width - x).abs() < 1e-6 {
            x = world.width;
        } else if x.abs() < 1e-6 {
            x = 0.0;
        }
        if (world.height - y).abs() < 1e-6 {
            y = world.height;
        } else if y.abs() < 1e-6 {
            y = 0.0;
        }
        let speed = rng.random_range(config.speed_min..=config.speed_max);
        let arrive = t + d / speed;
        if arrive >= end {
            break;
        }
        let leave = (arrive + config.pause_time).min(end);
        let (start, stop) = (arrive.floor() as i64, leave.floor() as i64);
        if stop > start {
            let (c, r) = world.cell_of(x, y)?;
            out.push(SessionRecord::new(
                &name,
                super::location_id(c, r),
                start,
                stop,
            ));
        }
        t = leave;
    }
    Ok(out)
}
