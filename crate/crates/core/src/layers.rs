//! Borrowed view of a contiguous range of layers with arbitrary weights.
//!
//! The greedy steps, the lookahead windows, and pricing all run on a slice of
//! the original graph with weights that may differ from the instance's own.

use crate::instance::LayeredGraph;
use crate::weight::Weight;

#[derive(Debug, Clone, Copy)]
pub struct Layers<'a, T> {
    graph: &'a LayeredGraph,
    first: usize,
    columns: &'a [Vec<T>],
}

impl<'a, T: Weight> Layers<'a, T> {
    /// `columns[l]` holds the weights of original layer `first + l`.
    pub fn new(graph: &'a LayeredGraph, first: usize, columns: &'a [Vec<T>]) -> Self {
        assert!(!columns.is_empty(), "a layer window needs at least one layer");
        assert!(first + columns.len() <= graph.m(), "window exceeds the graph");
        debug_assert!(columns.iter().all(|c| c.len() == graph.n()));
        Layers { graph, first, columns }
    }

    /// View over every layer of the graph.
    pub fn whole(graph: &'a LayeredGraph, columns: &'a [Vec<T>]) -> Self {
        Self::new(graph, 0, columns)
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// Number of layers in the view.
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn first(&self) -> usize {
        self.first
    }

    pub fn weight(&self, layer: usize, element: usize) -> T {
        self.columns[layer][element]
    }

    pub fn column(&self, layer: usize) -> &[T] {
        &self.columns[layer]
    }

    /// Successors in view layer `layer + 1` of `element` in view layer `layer`.
    pub fn successors(&self, layer: usize, element: usize) -> &'a [usize] {
        self.graph.successors(self.first + layer, element)
    }

    pub fn has_arc(&self, layer: usize, from: usize, to: usize) -> bool {
        self.graph.has_arc(self.first + layer, from, to)
    }

    pub fn graph(&self) -> &'a LayeredGraph {
        self.graph
    }

    /// Sub-view of view layers `from..to`.
    pub fn slice(&self, from: usize, to: usize) -> Layers<'a, T> {
        Layers::new(self.graph, self.first + from, &self.columns[from..to])
    }

    /// Objective of a layer-major assignment (`by_layer[l][k]`) whose tuples
    /// start from `offsets` instead of the first layer's weights.
    pub fn objective_with_offsets(&self, by_layer: &[Vec<usize>], offsets: &[T]) -> T {
        let mut running = offsets.to_vec();
        for (l, layer) in by_layer.iter().enumerate().skip(1) {
            for (k, &e) in layer.iter().enumerate() {
                running[k] = running[k] + self.weight(l, e);
            }
        }
        crate::weight::max_weight(running).unwrap_or(T::ZERO)
    }
}
