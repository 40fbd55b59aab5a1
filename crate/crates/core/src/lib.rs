//! Measuring the value profile a language model expresses on a 57-item
//! portrait values questionnaire, and comparing its structure with the
//! circular structure found in human respondents.

pub mod gateway;
pub mod model;
pub mod parser;
pub mod prompt;
pub mod analysis;
pub mod config;
pub mod figures;
pub mod report;
pub mod tables;
pub mod pipeline;
