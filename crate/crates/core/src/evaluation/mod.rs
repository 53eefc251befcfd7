pub mod detection;
pub mod metrics;
pub mod report;
