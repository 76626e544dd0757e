//! Parallel block coordinate descent for composite convex objectives
//! `F(x) = f(x) + Ψ(x)`, with expected separable over-approximation (ESO)
//! constants, random block samplings, iteration-complexity certificates and
//! brute-force oracles for checking them.

pub mod blocks;
pub mod eso;
pub mod io;
pub mod model;
pub mod sampling;
pub mod solver;
pub mod theory;
