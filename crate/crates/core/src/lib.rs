//! Divergence-free virtual element discretization of the 2D incompressible
//! MHD equations on general polygonal meshes, with a decoupled
//! implicit-explicit BDF2 time integrator built around a scalar auxiliary
//! variable.
//!
//! Crate layout:
//! * [`mesh`] — polygonal meshes, generators, geometry, regularity checks
//! * [`poly`] — scaled monomial bases, polynomial calculus, quadrature
//! * [`spaces`] — degree-of-freedom layouts and local projectors
//! * [`forms`] — stabilized discrete bilinear/trilinear forms and loads
//! * [`system`] — global operators, boundary conditions, cached direct solves
//! * [`sav`] — the time integrator and energy monitoring
//! * [`analysis`] — manufactured solutions, error norms, convergence rates

pub mod la;
pub mod mesh;
pub mod poly;
pub mod analysis;
pub mod forms;
pub mod spaces;
pub mod sav;
pub mod system;
