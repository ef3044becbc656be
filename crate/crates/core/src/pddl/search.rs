// SPDX-License-Identifier: Apache-2.0

//! Breadth-first reference planner for small instances.
//!
//! Ground actions are expanded in lexicographic `(name, args)` order and the
//! first path to reach a state is kept, so the returned plan is the
//! lexicographically least among the shortest plans.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;

use super::plan::{Plan, Provenance};
use super::problem::PddlProblem;
use super::validate::{GroundOp, State};
use super::{PddlDomain, OBJECT_TYPE};

/// Refuse to enumerate more ground actions than this.
pub const MAX_GROUND_ACTIONS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SearchError {
    #[error("no plan of length <= {max_depth}")]
    NoPlanWithinDepth { max_depth: usize },
    #[error("{ground_actions} ground actions exceeds the limit of {MAX_GROUND_ACTIONS}")]
    SearchSpaceTooLarge { ground_actions: u64 },
}

fn candidates<'a>(problem: &'a PddlProblem, ty: &str) -> Vec<&'a str> {
    let mut names: Vec<&str> = problem
        .objects
        .iter()
        .filter(|o| ty == OBJECT_TYPE || o.ty == ty)
        .map(|o| o.name.as_str())
        .collect();
    names.sort_unstable();
    names
}

fn ground_all(domain: &PddlDomain, problem: &PddlProblem) -> Result<Vec<GroundOp>, SearchError> {
    let mut total: u64 = 0;
    for action in &domain.actions {
        let count = action.params.iter().try_fold(1u64, |acc, p| {
            acc.checked_mul(candidates(problem, &p.ty).len() as u64)
        });
        total = count
            .and_then(|c| total.checked_add(c))
            .unwrap_or(u64::MAX);
        if total > MAX_GROUND_ACTIONS {
            return Err(SearchError::SearchSpaceTooLarge {
                ground_actions: total,
            });
        }
    }

    let mut ops = Vec::with_capacity(total as usize);
    for action in &domain.actions {
        let pools: Vec<Vec<&str>> = action
            .params
            .iter()
            .map(|p| candidates(problem, &p.ty))
            .collect();
        if pools.iter().any(Vec::is_empty) {
            continue;
        }
        // Odometer over the cartesian product.
        let mut idx = alloc::vec![0usize; pools.len()];
        'product: loop {
            let args: Vec<String> = idx.iter().zip(&pools).map(|(&i, p)| p[i].into()).collect();
            ops.push(GroundOp::instantiate(action, &args));
            for k in (0..pools.len()).rev() {
                idx[k] += 1;
                if idx[k] < pools[k].len() {
                    continue 'product;
                }
                idx[k] = 0;
            }
            break;
        }
    }
    ops.sort_by(|a, b| a.action.cmp(&b.action));
    Ok(ops)
}

/// Finds a shortest plan of at most `max_depth` steps.
pub fn brute_force_plan(
    domain: &PddlDomain,
    problem: &PddlProblem,
    max_depth: usize,
) -> Result<Plan, SearchError> {
    let ops = ground_all(domain, problem)?;
    let satisfied = |s: &State| problem.goal.iter().all(|g| s.contains(g));

    // Node: (state, parent node index, op index, depth).
    let mut nodes: Vec<(State, usize, usize, usize)> = alloc::vec![(problem.init.clone(), 0, 0, 0)];
    let mut seen: BTreeSet<State> = BTreeSet::new();
    seen.insert(problem.init.clone());
    let mut queue = VecDeque::from([0usize]);

    while let Some(n) = queue.pop_front() {
        if satisfied(&nodes[n].0) {
            let mut steps = Vec::new();
            let mut cur = n;
            while cur != 0 {
                steps.push(ops[nodes[cur].2].action.clone());
                cur = nodes[cur].1;
            }
            steps.reverse();
            return Ok(Plan {
                steps,
                provenance: Provenance::Search,
            });
        }
        let depth = nodes[n].3;
        if depth == max_depth {
            continue;
        }
        for (oi, op) in ops.iter().enumerate() {
            if op.unmet_condition(&nodes[n].0).is_some() {
                continue;
            }
            let mut next = nodes[n].0.clone();
            op.apply(&mut next);
            if seen.insert(next.clone()) {
                nodes.push((next, n, oi, depth + 1));
                queue.push_back(nodes.len() - 1);
            }
        }
    }
    Err(SearchError::NoPlanWithinDepth { max_depth })
}
