pub mod catalysis;
pub mod coherence;
pub mod cones;
pub mod divergences;
pub mod extension;
pub mod fw;
pub mod harness;
pub mod linalg;
pub mod measurement;
pub mod optim;
pub mod record;
pub mod ree;
pub mod rng;
pub mod sdp;
pub mod states;
