pub mod algebra;
pub mod boost;
pub mod dilate;
pub mod duhamel;
pub mod trajectories;
