pub mod commalg;
pub mod freealg;
pub mod finitering;
pub mod gsb;
pub mod theorems;
pub mod decide;
pub mod oracle;
pub mod cli;
