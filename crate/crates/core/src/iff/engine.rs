use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

pub type TaskId = usize;

#[derive(Debug, Clone)]
struct Task<L, A> {
    label: L,
    /// `None` for tasks that occupy no actor, e.g. timers.
    actor: Option<A>,
    duration_us: u64,
    deps: Vec<TaskId>,
    start_us: Option<u64>,
    end_us: Option<u64>,
}

/// Minimal discrete-event engine for a DAG of timed tasks.
///
/// A task starts as soon as all its dependencies have finished and its actor
/// is idle. Each actor runs one task at a time. Time is an integer count of
/// microseconds; ties are broken by insertion order so runs are
/// reproducible.
#[derive(Debug, Clone)]
pub struct EventEngine<L, A> {
    tasks: Vec<Task<L, A>>,
}

impl<L: Clone, A: Copy + Eq> Default for EventEngine<L, A> {
    fn default() -> Self {
        Self::new()
    }
}

impl<L: Clone, A: Copy + Eq> EventEngine<L, A> {
    pub fn new() -> Self {
        EventEngine { tasks: Vec::new() }
    }

    pub fn add_task(
        &mut self,
        label: L,
        actor: Option<A>,
        duration_us: u64,
        deps: &[TaskId],
    ) -> TaskId {
        self.tasks.push(Task {
            label,
            actor,
            duration_us,
            deps: deps.to_vec(),
            start_us: None,
            end_us: None,
        });
        self.tasks.len() - 1
    }

    fn ready(&self, id: TaskId) -> bool {
        self.tasks[id]
            .deps
            .iter()
            .all(|&d| self.tasks.get(d).is_some_and(|t| t.end_us.is_some()))
    }

    /// Runs every task to completion and returns the makespan.
    ///
    /// Fails if some task can never start (a cycle or a dangling
    /// dependency).
    pub fn run(&mut self) -> Result<u64> {
        let mut queue: BinaryHeap<Reverse<(u64, usize, TaskId)>> = BinaryHeap::new();
        let mut busy: Vec<A> = Vec::new();
        let mut seq = 0usize;
        let mut now = 0u64;
        let mut makespan = 0u64;
        let mut finished = 0usize;

        loop {
            // Start everything that can start at `now`, in insertion order.
            for id in 0..self.tasks.len() {
                if self.tasks[id].start_us.is_some() || !self.ready(id) {
                    continue;
                }
                if let Some(actor) = self.tasks[id].actor {
                    if busy.contains(&actor) {
                        continue;
                    }
                    busy.push(actor);
                }
                let end = now
                    .checked_add(self.tasks[id].duration_us)
                    .ok_or_else(|| Error::Domain("event clock overflow".into()))?;
                self.tasks[id].start_us = Some(now);
                queue.push(Reverse((end, seq, id)));
                seq += 1;
            }
            let Some(Reverse((time, _, id))) = queue.pop() else {
                break;
            };
            now = time;
            makespan = makespan.max(time);
            self.tasks[id].end_us = Some(time);
            finished += 1;
            if let Some(actor) = self.tasks[id].actor {
                busy.retain(|a| *a != actor);
            }
        }

        if finished != self.tasks.len() {
            return Err(Error::Domain(format!(
                "internal: {} task(s) could never start (cyclic or dangling dependency)",
                self.tasks.len() - finished
            )));
        }
        Ok(makespan)
    }

    /// `(label, actor, start, end)` for every finished task in insertion
    /// order.
    pub fn schedule(&self) -> impl Iterator<Item = (L, Option<A>, u64, u64)> + '_ {
        self.tasks
            .iter()
            .filter_map(|t| Some((t.label.clone(), t.actor, t.start_us?, t.end_us?)))
    }
}
