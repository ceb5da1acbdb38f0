pub mod compare;
pub mod noise;
pub mod plan;
pub mod run;
pub mod sweep;
pub mod verify;
