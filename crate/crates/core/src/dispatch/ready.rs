use std::collections::{BTreeMap, VecDeque};

use crate::model::TaskId;

/// Released tasks ordered by priority key (smaller runs first), FIFO within
/// a key.
#[derive(Debug, Clone)]
pub struct ReadyList {
    priority: Vec<u64>,
    levels: BTreeMap<u64, VecDeque<TaskId>>,
    present: Vec<bool>,
    len: usize,
}

impl ReadyList {
    /// `priority[i]` is the key of task `i + 1`.
    pub fn new(priority: Vec<u64>) -> Self {
        let n = priority.len();
        ReadyList { priority, levels: BTreeMap::new(), present: vec![false; n], len: 0 }
    }

    fn index(task: TaskId) -> usize {
        task.0 as usize - 1
    }

    pub fn priority_of(&self, task: TaskId) -> u64 {
        self.priority[Self::index(task)]
    }

    pub fn contains(&self, task: TaskId) -> bool {
        self.present[Self::index(task)]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Appends `task` behind the ready tasks of equal priority.
    pub fn push(&mut self, task: TaskId) {
        let i = Self::index(task);
        assert!(!self.present[i], "task {task} already ready");
        self.present[i] = true;
        self.len += 1;
        self.levels.entry(self.priority[i]).or_default().push_back(task);
    }

    /// Highest-priority task, head of its level.
    pub fn peek(&self) -> Option<TaskId> {
        self.levels.values().next().and_then(|q| q.front().copied())
    }

    pub fn remove(&mut self, task: TaskId) -> bool {
        let i = Self::index(task);
        if !self.present[i] {
            return false;
        }
        let key = self.priority[i];
        let level = self.levels.get_mut(&key).expect("level exists");
        let pos = level.iter().position(|t| *t == task).expect("task queued");
        level.remove(pos);
        if level.is_empty() {
            self.levels.remove(&key);
        }
        self.present[i] = false;
        self.len -= 1;
        true
    }

    /// Moves `task` behind the other ready tasks of its priority.
    pub fn rotate(&mut self, task: TaskId) {
        if self.remove(task) {
            self.push(task);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = TaskId> + '_ {
        self.levels.values().flat_map(|q| q.iter().copied())
    }
}
