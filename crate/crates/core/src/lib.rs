//! Dynamic `(1+eps)Delta` edge coloring.
//!
//! The engine keeps, after every edge insertion or deletion, exactly the
//! coloring a randomized static algorithm would produce on the current graph:
//! split the edges into random subgraphs, run a truncated Nibble on each with
//! its own palette, then color the failed edges with a greedy fallback.
//! Randomness is a pure function of `(seed, edge, incarnation)`, so the
//! static result can be recomputed from scratch and compared, which is what
//! [`oracle`] does.
//!
//! ```
//! use dyncolor::{Edge, Engine, Params};
//!
//! let params = Params::derive(0.3, 8, 1.0).unwrap();
//! let mut engine = Engine::new(20, params, 7);
//! engine.insert(Edge::of(0, 1)).unwrap();
//! engine.insert(Edge::of(1, 2)).unwrap();
//! assert_ne!(engine.color_of(Edge::of(0, 1)), engine.color_of(Edge::of(1, 2)));
//! dyncolor::oracle::check_engine(&engine).unwrap();
//! ```

pub mod engine;
pub mod graph;
pub mod greedy;
pub mod harness;
pub mod nibble;
pub mod oracle;
pub mod palette;
pub mod partition;
pub mod randomness;
pub mod stream;

pub use engine::{static_color, Coloring, Engine, EngineError, UpdateOp, UpdateReport};
pub use graph::{DynGraph, Edge, GraphError, NodeId};
pub use greedy::GreedyState;
pub use palette::PaletteState;
pub use randomness::{EdgeRng, NibbleConfig, Params};
pub use stream::{StreamFile, StreamKind, Update};
