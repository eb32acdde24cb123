use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{location_id, node_name, node_rng, CommunityAssignment, Rect, WorldGrid};
use crate::error::{Error, Result};
use crate::trace_io::{SessionRecord, TimeWindow, Trace, DAY};

pub const WEEK: i64 = 7 * DAY;
const HOUR: i64 = 3600;

/// One row of the weekly schedule. `probabilities` covers the node's own
/// communities in order, then whole-world roaming as the last entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Period {
    /// Seconds since the start of the week.
    pub start: i64,
    pub duration: i64,
    pub probabilities: Vec<f64>,
}

/// Repeating weekly table of periods that tile `[0, WEEK)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub periods: Vec<Period>,
}

impl Default for Schedule {
    /// Five working days of night, day and evening periods, then a two-day
    /// weekend, over `[primary, hub, roam]`.
    fn default() -> Self {
        let mut periods = Vec::new();
        for day in 0..7 {
            let base = day * DAY;
            if day < 5 {
                for (from, to, p) in [
                    (0, 8, [0.70, 0.25, 0.05]),
                    (8, 18, [0.85, 0.10, 0.05]),
                    (18, 24, [0.60, 0.35, 0.05]),
                ] {
                    periods.push(Period {
                        start: base + from * HOUR,
                        duration: (to - from) * HOUR,
                        probabilities: p.to_vec(),
                    });
                }
            } else {
                periods.push(Period {
                    start: base,
                    duration: DAY,
                    probabilities: vec![0.70, 0.25, 0.05],
                });
            }
        }
        Schedule { periods }
    }
}

impl Schedule {
    /// One period for the whole week.
    pub fn constant(probabilities: Vec<f64>) -> Self {
        Schedule {
            periods: vec![Period {
                start: 0,
                duration: WEEK,
                probabilities,
            }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut at = 0;
        let width = self.periods.first().map_or(0, |p| p.probabilities.len());
        for p in &self.periods {
            if p.start != at || p.duration <= 0 {
                return Err(Error::arg(format!(
                    "schedule periods must tile the week contiguously; gap or overlap at {at}s"
                )));
            }
            at += p.duration;
            if p.probabilities.len() != width || width < 2 {
                return Err(Error::arg(
                    "every period needs the same number (>= 2) of probabilities",
                ));
            }
            let sum: f64 = p.probabilities.iter().sum();
            if p.probabilities.iter().any(|&q| q.is_nan() || q < 0.0) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::arg(format!(
                    "period at {}s has probabilities summing to {sum}",
                    p.start
                )));
            }
        }
        if at != WEEK {
            return Err(Error::arg(format!(
                "schedule covers {at}s, a week is {WEEK}s"
            )));
        }
        Ok(())
    }

    /// Number of entries per probability vector.
    pub fn areas(&self) -> usize {
        self.periods.first().map_or(0, |p| p.probabilities.len())
    }

    /// Period active at absolute time `t` and the absolute time it ends.
    fn at(&self, t: f64) -> (&Period, f64) {
        let week_start = (t / WEEK as f64).floor() * WEEK as f64;
        let offset = t - week_start;
        let idx = self
            .periods
            .partition_point(|p| (p.start + p.duration) as f64 <= offset)
            .min(self.periods.len() - 1);
        let p = &self.periods[idx];
        (p, week_start + (p.start + p.duration) as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TvcConfig {
    pub node_count: usize,
    pub speed_min: f64,
    pub speed_max: f64,
    pub pause_time: f64,
    pub sim_duration: i64,
    pub world: WorldGrid,
    pub schedule: Schedule,
    pub seed: u64,
}

impl Default for TvcConfig {
    fn default() -> Self {
        TvcConfig {
            node_count: 100,
            speed_min: 1.0,
            speed_max: 5.0,
            pause_time: 2000.0,
            sim_duration: 28 * DAY,
            world: WorldGrid::default(),
            schedule: Schedule::default(),
            seed: 1,
        }
    }
}

impl TvcConfig {
    pub fn validate(&self) -> Result<()> {
        self.world.validate()?;
        self.schedule.validate()?;
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

    fn check_assignment(&self, a: &CommunityAssignment) -> Result<()> {
        if a.node_count() != self.node_count {
            return Err(Error::arg(format!(
                "assignment covers {} nodes, config has {}",
                a.node_count(),
                self.node_count
            )));
        }
        let bounds = self.world.bounds();
        for group in a.group_communities() {
            if group.len() + 1 != self.schedule.areas() {
                return Err(Error::arg(format!(
                    "schedule has {} entries but nodes have {} communities plus roaming",
                    self.schedule.areas(),
                    group.len()
                )));
            }
            if let Some(r) = group
                .iter()
                .find(|r| !r.within(&bounds) || r.x0 >= r.x1 || r.y0 >= r.y1)
            {
                return Err(Error::arg(format!(
                    "community {r:?} is not a rectangle inside the world"
                )));
            }
        }
        Ok(())
    }
}

/// Time-variant community model.
///
/// Each epoch a node draws a target area from the active period's
/// probabilities, walks to a uniform point in it, and pauses. Pauses are
/// clipped at period ends; a node whose walk outlasts its period draws again
/// on arrival without pausing.
pub fn generate_tvc(config: &TvcConfig, assignment: &CommunityAssignment) -> Result<Trace> {
    config.validate()?;
    config.check_assignment(assignment)?;
    let per_node: Vec<Vec<SessionRecord>> = (0..config.node_count)
        .into_par_iter()
        .map(|i| tvc_node(config, assignment.communities_of(i), i))
        .collect::<Result<_>>()?;
    let window = TimeWindow::covering(0, config.sim_duration, DAY)?;
    Ok(Trace::new(per_node.into_iter().flatten().collect(), window))
}

fn tvc_node(config: &TvcConfig, communities: &[Rect], node: usize) -> Result<Vec<SessionRecord>> {
    let mut out = Vec::new();
    if config.pause_time == 0.0 {
        return Ok(out);
    }
    let name = node_name(node);
    let world = &config.world;
    let roam = world.bounds();
    let end = config.sim_duration as f64;
    let mut rng = node_rng(config.seed, node);
    let mut pos = roam.sample(&mut rng);
    let mut t = 0.0;
    while t < end {
        let (period, period_end) = config.schedule.at(t);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut area = period.probabilities.len() - 1;
        for (k, &p) in period.probabilities.iter().enumerate() {
            acc += p;
            if u < acc {
                area = k;
                break;
            }
        }
        let rect = communities.get(area).unwrap_or(&roam);
        let target = rect.sample(&mut rng);
        let speed = rng.random_range(config.speed_min..=config.speed_max);
        let dist = (target.0 - pos.0).hypot(target.1 - pos.1);
        let arrive = t + dist / speed;
        pos = target;
        if arrive >= end {
            break;
        }
        if arrive >= period_end {
            t = arrive;
            continue;
        }
        let leave = (arrive + config.pause_time).min(period_end).min(end);
        let (start, stop) = (arrive.floor() as i64, leave.floor() as i64);
        if stop > start {
            let (c, r) = world.cell_of(pos.0, pos.1)?;
            out.push(SessionRecord::new(&name, location_id(c, r), start, stop));
        }
        t = leave;
    }
    Ok(out)
}
