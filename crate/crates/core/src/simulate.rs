//! Runs episodes through a reservoir and yields decision-time states.

use serde::{Deserialize, Serialize};

use crate::reservoir::{Reservoir, ReservoirState};
use crate::scalar::Scalar;
use crate::seed::StreamRng;
use crate::tasks::{Episode, Task};

/// Hidden state at decision time plus the episode's label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Presentation<T> {
    pub state: ReservoirState<T>,
    pub label: usize,
    pub item: usize,
}

/// Anything that can hand trainers one presentation after another.
pub trait EpisodeSource<T: Scalar> {
    fn next_presentation(&mut self) -> Presentation<T>;
    fn n_class(&self) -> usize;
    fn n_nodes(&self) -> usize;
}

/// Each episode starts from `V = 0`, integrates every input step and stops at
/// the decision step.
#[derive(Clone)]
pub struct Simulator<'a, T> {
    reservoir: &'a Reservoir<T>,
    task: &'a Task<T>,
    rng: StreamRng,
    consumed: usize,
}

impl<'a, T: Scalar> Simulator<'a, T> {
    pub fn new(reservoir: &'a Reservoir<T>, task: &'a Task<T>, rng: StreamRng) -> Self {
        assert_eq!(reservoir.n_inputs(), task.n_inputs(), "task/reservoir input width");
        Self {
            reservoir,
            task,
            rng,
            consumed: 0,
        }
    }

    pub fn episodes_consumed(&self) -> usize {
        self.consumed
    }

    pub fn run_episode(&self, episode: &Episode) -> ReservoirState<T> {
        run_episode(self.reservoir, self.task, episode)
    }
}

pub fn run_episode<T: Scalar>(reservoir: &Reservoir<T>, task: &Task<T>, episode: &Episode) -> ReservoirState<T> {
    let mut integ = reservoir.integrator();
    let mut buf = vec![T::zero(); task.n_inputs()];
    task.for_each_input(episode, &mut buf, |_, s| {
        integ.advance(s).expect("input width checked at construction");
    });
    integ.state()
}

impl<T: Scalar> EpisodeSource<T> for Simulator<'_, T> {
    fn next_presentation(&mut self) -> Presentation<T> {
        let episode = self.task.draw_episode(&mut self.rng);
        self.consumed += 1;
        Presentation {
            state: self.run_episode(&episode),
            label: episode.label,
            item: episode.item,
        }
    }

    fn n_class(&self) -> usize {
        self.task.n_class()
    }

    fn n_nodes(&self) -> usize {
        self.reservoir.n_nodes()
    }
}

/// Cycles through a fixed list of presentations; handy for tests and for
/// replaying recorded streams.
#[derive(Debug, Clone)]
pub struct ReplaySource<T> {
    items: Vec<Presentation<T>>,
    n_class: usize,
    cursor: usize,
}

impl<T: Scalar> ReplaySource<T> {
    pub fn new(items: Vec<Presentation<T>>, n_class: usize) -> Self {
        assert!(!items.is_empty(), "replay source needs at least one presentation");
        Self {
            items,
            n_class,
            cursor: 0,
        }
    }

    pub fn consumed(&self) -> usize {
        self.cursor
    }
}

impl<T: Scalar> EpisodeSource<T> for ReplaySource<T> {
    fn next_presentation(&mut self) -> Presentation<T> {
        let p = self.items[self.cursor % self.items.len()].clone();
        self.cursor += 1;
        p
    }

    fn n_class(&self) -> usize {
        self.n_class
    }

    fn n_nodes(&self) -> usize {
        self.items[0].state.len()
    }
}
