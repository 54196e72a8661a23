//! Grounded task planning for a household gridworld: scene simulation, scene
//! graphs and their text encodings, a plan language, a small autoregressive
//! language model and the machinery that grounds generated plans in a scene.

pub mod domain;
pub mod error;
pub mod world;
pub mod graph2nl;
pub mod plandsl;
pub mod scenegraph;
pub mod lm;
pub mod grounding;
pub mod planner;
pub mod eval;
