pub mod error;
pub mod experiment;
pub mod fixed_point;
pub mod function_space;
pub mod leray_schauder;
pub mod neural_op;
pub mod operator_zoo;
pub mod ortho_poly;
pub mod textio;
