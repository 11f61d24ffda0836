use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::isa::{FunctionSpan, Instruction, Program, ValidateError};

/// One instruction with the labels attached to it.
#[derive(Debug, Clone)]
pub struct EditItem {
    pub labels: Vec<String>,
    pub inst: Instruction,
}

/// Mutable program view used by passes and glue codegen. Labels travel with
/// their instruction and function spans stretch over insertions, so edits
/// never invalidate symbolic targets.
#[derive(Debug, Clone)]
pub struct ProgramEditor {
    name: String,
    items: Vec<EditItem>,
    // Function spans as (name, start, end) over item indices, end exclusive.
    funcs: Vec<(String, usize, usize)>,
    label_names: BTreeSet<String>,
    fresh_counter: usize,
}

impl ProgramEditor {
    pub fn from_program(p: &Program) -> ProgramEditor {
        let mut items: Vec<EditItem> = p
            .instructions()
            .iter()
            .map(|inst| EditItem {
                labels: Vec::new(),
                inst: inst.clone(),
            })
            .collect();
        for (name, index) in p.labels() {
            items[*index].labels.push(name.clone());
        }
        ProgramEditor {
            name: String::from(p.name()),
            items,
            funcs: p
                .functions()
                .iter()
                .map(|f| (f.name.clone(), f.start, f.end))
                .collect(),
            label_names: p.labels().keys().cloned().collect(),
            fresh_counter: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[EditItem] {
        &self.items
    }

    pub fn inst(&self, index: usize) -> &Instruction {
        &self.items[index].inst
    }

    pub fn set_inst(&mut self, index: usize, inst: Instruction) {
        self.items[index].inst = inst;
    }

    pub fn has_labels(&self, index: usize) -> bool {
        !self.items[index].labels.is_empty()
    }

    /// Inserts `inst` so it executes immediately after item `index`, inside
    /// the same function span.
    pub fn insert_after(&mut self, index: usize, inst: Instruction) {
        self.items.insert(
            index + 1,
            EditItem {
                labels: Vec::new(),
                inst,
            },
        );
        for (_, start, end) in &mut self.funcs {
            if index < *start {
                *start += 1;
                *end += 1;
            } else if index < *end {
                *end += 1;
            }
        }
    }

    /// Inserts `inst` so it executes immediately before item `index` on the
    /// fallthrough path. Labels stay attached to the original instruction,
    /// so jumps to it skip the insertion.
    pub fn insert_before(&mut self, index: usize, inst: Instruction) {
        self.items.insert(
            index,
            EditItem {
                labels: Vec::new(),
                inst,
            },
        );
        for (_, start, end) in &mut self.funcs {
            if index < *start {
                *start += 1;
                *end += 1;
            } else if index < *end {
                *end += 1;
            }
        }
    }

    /// Removes item `index`; its labels move to the following item.
    pub fn remove(&mut self, index: usize) {
        let removed = self.items.remove(index);
        if !removed.labels.is_empty() {
            let next = &mut self.items[index];
            let mut labels = removed.labels;
            labels.append(&mut next.labels);
            next.labels = labels;
        }
        for (_, start, end) in &mut self.funcs {
            if index < *start {
                *start -= 1;
            }
            if index < *end {
                *end -= 1;
            }
        }
    }

    /// Attaches `label` to item `index`. The name must be fresh.
    pub fn add_label(&mut self, index: usize, label: String) {
        debug_assert!(!self.label_names.contains(&label));
        self.label_names.insert(label.clone());
        self.items[index].labels.push(label);
    }

    /// Returns a label name that collides with nothing in the program.
    pub fn fresh_label(&mut self, prefix: &str) -> String {
        loop {
            let candidate = format!("__{prefix}{}", self.fresh_counter);
            self.fresh_counter += 1;
            if !self.label_names.contains(&candidate) {
                return candidate;
            }
        }
    }

    pub fn finish(self) -> Result<Program, ValidateError> {
        let mut labels: BTreeMap<String, usize> = BTreeMap::new();
        let mut instructions = Vec::with_capacity(self.items.len());
        for (index, item) in self.items.into_iter().enumerate() {
            for label in item.labels {
                labels.insert(label, index);
            }
            instructions.push(item.inst);
        }
        let functions = self
            .funcs
            .into_iter()
            .map(|(name, start, end)| FunctionSpan { name, start, end })
            .collect();
        Program::new(self.name, instructions, labels, functions)
    }
}
