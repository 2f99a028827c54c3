//! Peak detection and frame-to-frame tracking.
//!
//! A peak is a grid-local maximum of `u` lying within `window` cells of a
//! point where `|d_x u|` exceeds the slope threshold.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::integrator::{Observer, StepInfo};
use crate::model::State;
use crate::spectral::SpectralField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub t: f64,
    pub x: f64,
    pub height: f64,
    pub max_nearby_slope: f64,
    /// Grid index of the maximum.
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BirthEvent {
    Initial,
    Emergence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeathEvent {
    /// Absorbed by the track with the given id.
    Merge {
        into: usize,
    },
    /// No longer detected and nothing nearby to merge with.
    Boundary,
    EndOfRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakTrack {
    pub id: usize,
    pub samples: Vec<Peak>,
    pub birth: BirthEvent,
    pub death: DeathEvent,
    /// Time of the first frame in which the track was no longer present.
    pub death_time: Option<f64>,
}

impl PeakTrack {
    pub fn birth_time(&self) -> f64 {
        self.samples[0].t
    }

    pub fn last(&self) -> &Peak {
        self.samples.last().expect("tracks are never empty")
    }

    /// Alive from its first sample until the frame where it disappeared;
    /// tracks surviving to the end are alive up to their last sample.
    pub fn alive_at(&self, t: f64) -> bool {
        if t < self.birth_time() {
            return false;
        }
        match self.death_time {
            Some(d) => t < d,
            None => t <= self.last().t,
        }
    }
}

/// Periodic distance on the torus of length `2 pi`.
pub fn periodic_distance(x: f64, y: f64) -> f64 {
    let d = (x - y).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Default slope window: `n / 64` cells, at least one.
pub fn default_window(n: usize) -> usize {
    (n / 64).max(1)
}

/// Detect peaks of `u` at time `t`.
pub fn detect_peaks(u: &SpectralField, t: f64, slope_threshold: f64, window: usize) -> Vec<Peak> {
    let window = window.max(1);
    let values = u.values();
    let slope = u.derivative();
    let slope = slope.values();
    let n = values.len();
    let grid = u.grid();
    let mut peaks = Vec::new();
    for m in 0..n {
        let left = values[(m + n - 1) % n];
        let right = values[(m + 1) % n];
        if !(left < values[m] && values[m] >= right) {
            continue;
        }
        let reach = window.min(n / 2) as isize;
        let max_slope = (-reach..=reach)
            .map(|d| slope[((m as isize + d).rem_euclid(n as isize)) as usize].abs())
            .fold(0.0f64, f64::max);
        if max_slope > slope_threshold {
            peaks.push(Peak {
                t,
                x: grid.point(m),
                height: values[m],
                max_nearby_slope: max_slope,
                index: m,
            });
        }
    }
    peaks
}

/// Link time-ordered frames of peaks into tracks.
///
/// Frame-to-frame matching is greedy by periodic distance, rejecting pairs
/// farther apart than `max_jump`. A track left unmatched next to a peak that
/// another track claimed merges into it; the longer-lived of the two keeps
/// going.
pub fn track_peaks(frames: &[Vec<Peak>], max_jump: f64) -> Vec<PeakTrack> {
    let mut times = Vec::with_capacity(frames.len());
    let mut last = f64::NEG_INFINITY;
    for frame in frames {
        if let Some(p) = frame.first() {
            last = p.t;
        }
        times.push(last);
    }
    track_frames(&times, frames, max_jump)
}

/// [`track_peaks`] with explicit frame times, so empty frames keep their time.
pub fn track_frames(times: &[f64], frames: &[Vec<Peak>], max_jump: f64) -> Vec<PeakTrack> {
    assert_eq!(times.len(), frames.len(), "one time per frame");
    let mut tracks: Vec<PeakTrack> = Vec::new();
    let mut active: Vec<usize> = Vec::new();

    for (f, frame) in frames.iter().enumerate() {
        let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
        for &tid in &active {
            let last = tracks[tid].last();
            for (j, p) in frame.iter().enumerate() {
                let d = periodic_distance(last.x, p.x);
                if d <= max_jump {
                    candidates.push((d, tid, j));
                }
            }
        }
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        let mut owner: Vec<Option<usize>> = vec![None; frame.len()];
        let mut matched_track = vec![false; tracks.len()];
        for &(_, tid, j) in &candidates {
            if owner[j].is_none() && !matched_track[tid] {
                owner[j] = Some(tid);
                matched_track[tid] = true;
            }
        }

        // Unmatched active tracks merge into a claimed peak within reach, if any.
        let mut merges: Vec<(usize, usize)> = Vec::new();
        let mut closed: Vec<usize> = Vec::new();
        for &tid in &active {
            if matched_track[tid] {
                continue;
            }
            let target = candidates
                .iter()
                .filter(|&&(_, t2, j)| t2 == tid && owner[j].is_some())
                .map(|&(_, _, j)| j)
                .next();
            match target {
                Some(j) => merges.push((tid, j)),
                None => closed.push(tid),
            }
        }

        let death_time = times[f];

        for (loser, j) in merges {
            let holder = owner[j].expect("merge target is owned");
            // The longer-lived track survives and takes the peak.
            let (survivor, absorbed) = if tracks[loser].birth_time() < tracks[holder].birth_time() {
                (loser, holder)
            } else {
                (holder, loser)
            };
            if survivor != holder {
                owner[j] = Some(survivor);
            }
            tracks[absorbed].death = DeathEvent::Merge {
                into: tracks[survivor].id,
            };
            tracks[absorbed].death_time = Some(death_time);
            // A track that lost its claim is no longer matched this frame.
            matched_track[absorbed] = false;
            matched_track[survivor] = true;
        }
        for tid in closed {
            tracks[tid].death = DeathEvent::Boundary;
            tracks[tid].death_time = Some(death_time);
        }

        let mut next_active = Vec::new();
        for (j, p) in frame.iter().enumerate() {
            match owner[j] {
                Some(tid) => {
                    tracks[tid].samples.push(*p);
                    next_active.push(tid);
                }
                None => {
                    let id = tracks.len();
                    tracks.push(PeakTrack {
                        id,
                        samples: vec![*p],
                        birth: if f == 0 {
                            BirthEvent::Initial
                        } else {
                            BirthEvent::Emergence
                        },
                        death: DeathEvent::EndOfRun,
                        death_time: None,
                    });
                    matched_track.push(true);
                    next_active.push(id);
                }
            }
        }
        next_active.sort_unstable();
        active = next_active;
    }
    tracks
}

/// Number of tracks alive at time `t`.
pub fn count_peaks(tracks: &[PeakTrack], t: f64) -> usize {
    tracks.iter().filter(|tr| tr.alive_at(t)).count()
}

/// Observer detecting peaks of `u` once per `stride` time units.
#[derive(Debug, Clone)]
pub struct PeakRecorder {
    stride: f64,
    next_mark: f64,
    slope_threshold: f64,
    window: usize,
    pub frames: Vec<Vec<Peak>>,
    pub frame_times: Vec<f64>,
}

impl PeakRecorder {
    pub fn new(stride: f64, slope_threshold: f64, window: usize) -> Self {
        PeakRecorder {
            stride,
            next_mark: f64::NEG_INFINITY,
            slope_threshold,
            window,
            frames: Vec::new(),
            frame_times: Vec::new(),
        }
    }
}

impl Observer for PeakRecorder {
    fn observe(&mut self, state: &State, _info: &StepInfo) {
        if state.t + 1e-12 < self.next_mark {
            return;
        }
        self.frames.push(detect_peaks(
            &state.u,
            state.t,
            self.slope_threshold,
            self.window,
        ));
        self.frame_times.push(state.t);
        self.next_mark = next_mark(state.t, self.stride);
    }
}

/// First multiple of `stride` strictly after `t`.
pub(crate) fn next_mark(t: f64, stride: f64) -> f64 {
    if !(stride > 0.0) {
        return f64::NEG_INFINITY;
    }
    let mut m = ((t / stride) + 1e-9).floor() + 1.0;
    if m * stride <= t {
        m += 1.0;
    }
    m * stride
}
