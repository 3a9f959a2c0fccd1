//! Main-memory management of short-lived data.
//!
//! Records are tagged with an expiration time at insertion and vanish
//! from query results the moment that time passes. The workhorse is a
//! fully persistent treap ([`TreapSnapshot`]): a binary search tree on
//! keys and a minimum heap on expiration times, so the next record to
//! expire is always the root and eager expiration is a matter of
//! repeatedly discarding it. Updates produce new versions that share
//! structure with their predecessors, which gives snapshot-isolated
//! reads: one writer, any number of lock-free readers.
//!
//! [`ExpirableStore`] wraps a treap lineage with a clock, time-filtered
//! queries, and a configurable expiration sweep.

pub mod hash;
pub mod store;
pub mod time;
pub mod treap;

pub use hash::KeyHasher;
pub use store::{Clock, ExpirableStore, PutOutcome, StoreError, SweepPolicy};
pub use time::{ExpirationTime, ExtendedComparator};
pub use treap::{DepthStats, ExpiredRecord, Iter, TreapError, TreapSnapshot};
