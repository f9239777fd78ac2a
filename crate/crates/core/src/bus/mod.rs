//! Topic grammar, the in-process bus and the event log.

pub mod broker;
pub mod log;
pub mod topic;

pub use broker::{replay, topic_report, Bus, BusError, Delivery, Publisher, Subscription};
pub use log::{render_log, EventLog, LogError, LogEvent, LoggedEvent, HEADER_LINE, LOG_VERSION};
pub use topic::{Interaction, Leaf, NamingError, Topic, TopicPath, TopicPattern, TF_TOPIC};
