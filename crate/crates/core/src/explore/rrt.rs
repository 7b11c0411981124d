use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use super::{Context, Explorer, Rejection, Step, ROOT_ITERATION};
use crate::atlas::{walk, Atlas, WalkEnd};
use crate::constraint::{ambient_distance, ExtendedConfig};
use crate::kdtree::KdTree;
use crate::Result;

/// Fraction of the chart radius within which a new node reuses an existing
/// chart. Samples are drawn from the full radius, so nodes near the rim seed
/// new charts and the atlas grows with the tree.
pub const NODE_CHART_FRACTION: f64 = 0.5;

#[derive(Clone, Debug)]
pub struct TreeNode {
    pub state: ExtendedConfig,
    pub parent: Option<usize>,
    pub iteration: u64,
    /// Atlas chart the state is parametrised by.
    pub chart: usize,
}

/// Append-only tree with an exact nearest-neighbour index.
#[derive(Clone, Debug)]
pub struct ExplorationTree {
    nodes: Vec<TreeNode>,
    index: KdTree,
}

impl ExplorationTree {
    pub fn new(root: ExtendedConfig, chart: usize) -> Self {
        let mut index = KdTree::new(root.ambient_dim());
        index.insert(root.ambient().as_slice());
        Self {
            nodes: alloc::vec![TreeNode {
                state: root,
                parent: None,
                iteration: ROOT_ITERATION,
                chart,
            }],
            index,
        }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn push(&mut self, node: TreeNode) -> usize {
        let parent = node.parent.expect("only the root has no parent");
        assert!(parent < self.nodes.len());
        self.index.insert(node.state.ambient().as_slice());
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    /// Closest node by ambient distance, lowest index on ties.
    pub fn nearest(&self, x: &ExtendedConfig) -> usize {
        self.index.nearest(x.ambient().as_slice()).expect("tree has a root").0
    }

    /// Node indices from the root to `k`.
    pub fn path_to(&self, mut k: usize) -> Vec<usize> {
        let mut path = alloc::vec![k];
        while let Some(p) = self.nodes[k].parent {
            path.push(p);
            k = p;
        }
        path.reverse();
        path
    }
}

/// Uniform atlas sample, nearest node, clamped geodesic extension,
/// transition check.
pub struct RrtExplorer {
    tree: ExplorationTree,
    atlas: Atlas,
}

impl RrtExplorer {
    pub fn new(ctx: &Context<'_>, root: ExtendedConfig) -> Result<Self> {
        let mut atlas = Atlas::new(ctx.params.atlas);
        let chart = atlas.create_chart(ctx.system, root.clone())?;
        Ok(Self {
            tree: ExplorationTree::new(root, chart),
            atlas,
        })
    }

    pub fn tree(&self) -> &ExplorationTree {
        &self.tree
    }

    pub fn atlas(&self) -> &Atlas {
        &self.atlas
    }

    pub fn step(&mut self, ctx: &Context<'_>, iteration: u64, rng: &mut ChaCha8Rng) -> Step {
        let Ok((sample, source)) = self.atlas.sample_uniform(ctx.system, rng) else {
            return Step::Rejected(Rejection::SampleFailure);
        };
        if !ctx.valid(&sample) {
            return Step::Rejected(Rejection::InvalidState);
        }
        let near = self.tree.nearest(&sample);
        let from = &self.tree.nodes[near].state;
        let d_max = ctx.params.d_max;
        let target = if ambient_distance(from, &sample) > d_max {
            let w = walk(
                ctx.system,
                &ctx.params.atlas,
                from,
                &sample,
                ctx.params.atlas.geodesic_step,
                Some(d_max),
                |_| true,
            );
            if w.end == WalkEnd::Failed || w.states.len() < 2 {
                return Step::Rejected(Rejection::TransitionFailure);
            }
            let end = w.states.into_iter().next_back().expect("non-empty");
            if !ctx.valid(&end) {
                return Step::Rejected(Rejection::InvalidState);
            }
            end
        } else {
            sample
        };
        if !ctx.transition(from, &target) {
            return Step::Rejected(Rejection::TransitionFailure);
        }
        let eps = ctx.params.atlas.epsilon;
        let parent_chart = self.tree.nodes[near].chart;
        let keeps = |id: usize| {
            let c = self.atlas.chart(id);
            c.to_chart(&target).norm() <= NODE_CHART_FRACTION * c.radius() && c.deviation(&target) <= eps
        };
        let chart = if keeps(source) {
            source
        } else if keeps(parent_chart) {
            parent_chart
        } else {
            self.atlas
                .create_chart(ctx.system, target.clone())
                .unwrap_or(parent_chart)
        };
        let parent = self.tree.nodes[near].state.clone();
        self.tree.push(TreeNode {
            state: target.clone(),
            parent: Some(near),
            iteration,
            chart,
        });
        Step::Accepted {
            parent,
            state: target,
        }
    }
}

impl Explorer for RrtExplorer {
    fn step(&mut self, ctx: &Context<'_>, iteration: u64, rng: &mut ChaCha8Rng) -> Step {
        RrtExplorer::step(self, ctx, iteration, rng)
    }

    fn stored_states(&self) -> usize {
        self.tree.len()
    }

    fn occupied_cells(&self) -> usize {
        0
    }

    fn charts(&self) -> usize {
        self.atlas.len()
    }
}
