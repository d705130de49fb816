pub mod algebra;
pub mod bayesopt;
pub mod cli;
pub mod model;
pub mod neural;
pub mod observability;
pub mod report;
pub mod scenarios;
pub mod simulate;
pub mod training;
