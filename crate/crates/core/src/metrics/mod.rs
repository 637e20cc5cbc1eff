pub mod aggregate;
pub mod calibrate;
pub mod compare;
pub mod output;
pub mod report;
pub mod stats;
