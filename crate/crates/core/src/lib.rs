pub mod alphabet;
pub mod decoded;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod labels;
pub mod lexicon;
pub mod losses;
pub mod rng;
pub mod sam;
pub mod seg_decode;
pub mod tensor;
pub mod io;
pub mod commands;
pub mod selftest;
pub mod synth;
