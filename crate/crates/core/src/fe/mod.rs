//! Total-Lagrangian hexahedral finite elements.

pub mod element;
pub mod generate;
pub mod material;
pub mod mesh;
pub mod model;
pub mod statics;

pub use element::ElementKind;
pub use generate::{generate_beam_mesh, generate_circular_plate_mesh, generate_circular_plate_mesh_with, OgridParams};
pub use material::Material;
pub use mesh::{DofMap, Mesh};
pub use model::{FeModel, NonlinearScale};
pub use statics::{solve_constrained_static, NewtonOptions, StaticSolution};
