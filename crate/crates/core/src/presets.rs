//! Reference instances: the triangle and the associativity certificate.

use crate::cost::ExponentAssignment;
use crate::graph::{CertGraph, UndirectedGraph};
use crate::rational::q;
use crate::schedule::{LoadingSchedule, ScheduleItem};

use ScheduleItem::{Edge, Vertex};

pub fn triangle() -> UndirectedGraph {
    UndirectedGraph::complete(3)
}

/// `1, 2, {1,2}, 3, {2,3}, {1,3}`.
pub fn triangle_schedule() -> LoadingSchedule {
    LoadingSchedule::new(vec![Vertex(1), Vertex(2), Edge(1, 2), Vertex(3), Edge(2, 3), Edge(1, 3)])
}

/// `r1 = n^{4/7}`, `r2 = n^{5/7}`, `r3 = 1`, complete A1-A2, `lambda = n^{3/7}`.
pub fn triangle_assignment() -> ExponentAssignment {
    ExponentAssignment::new(vec![q(4, 7), q(5, 7), q(0, 1)], [((1, 2), q(5, 7)), ((2, 3), q(3, 7)), ((1, 3), q(0, 1))])
}

/// The four products `a3*a4 = a1`, `a2*a1`, `a2*a3`, `a5 = a2*a3` then `a5*a4`,
/// as directed edges `(2,1), (2,3), (3,4), (5,4)`.
pub fn associativity_certificate() -> CertGraph {
    CertGraph::new(5, [(2, 1), (2, 3), (3, 4), (5, 4)]).expect("static graph")
}

pub fn associativity_path() -> UndirectedGraph {
    UndirectedGraph::path(5)
}

/// `1, 2, 4, 3, {1,2}, {2,3}, {3,4}, 5, {4,5}`.
pub fn associativity_schedule() -> LoadingSchedule {
    LoadingSchedule::new(vec![
        Vertex(1),
        Vertex(2),
        Vertex(4),
        Vertex(3),
        Edge(1, 2),
        Edge(2, 3),
        Edge(3, 4),
        Vertex(5),
        Edge(4, 5),
    ])
}

pub fn associativity_assignment() -> ExponentAssignment {
    ExponentAssignment::new(
        vec![q(1, 1), q(4, 7), q(6, 7), q(5, 7), q(0, 1)],
        [((1, 2), q(6, 7)), ((2, 3), q(6, 7)), ((3, 4), q(5, 7)), ((4, 5), q(0, 1))],
    )
}

/// Stage captions used by the table emitter, setup first.
pub fn triangle_stage_names() -> Vec<&'static str> {
    vec!["setup", "load A1", "load A2", "load E12", "load v", "load {v,a2}", "load {v,a1}"]
}

pub fn associativity_stage_names() -> Vec<&'static str> {
    vec![
        "setup",
        "load a_1",
        "load a_2",
        "load a_4",
        "load a_3",
        "load a_2∘a_1",
        "load a_2∘a_3",
        "load a_3∘a_4",
        "load a_5",
        "load a_5∘a_4",
    ]
}
