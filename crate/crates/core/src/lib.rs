pub mod clockwork;
pub mod compiler;
pub mod harness;
pub mod metrology;
pub mod rtm;
