pub mod cli;
pub mod consistency;
pub mod ontology;
pub mod oracle;
pub mod protocol;
pub mod relstore;
pub mod spuriousness;
pub mod value;
