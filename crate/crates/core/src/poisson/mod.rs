//! Poisson tensors, Hamiltonian functions, vector fields and the
//! finite-difference calculus used to check identities between them.

pub mod calculus;
pub mod field;
pub mod function;
pub mod oevel;
pub mod recursion;
pub mod tensor;

pub use calculus::{
    compatibility_defect, compatibility_defect_max, jacobiator, jacobiator_max, lie_derivative_scalar,
    lie_derivative_tensor, vector_field_commutator, Stencil,
};
pub use field::{bracket, build_y_minus1, hamiltonian_vector_field, FieldId, VectorField};
pub use function::{FunctionId, SmoothFunction};
pub use oevel::{oevel_relation_check, OevelConstants, OevelReport};
pub use recursion::{higher_tensor, recursion_operator, toda_recursion_closed_form};
pub use tensor::{BivectorField, TensorId};
