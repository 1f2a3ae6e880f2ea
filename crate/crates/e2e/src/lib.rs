//! Holds the workspace acceptance suite (`cargo test -p retouch-e2e`). The
//! library itself is empty.
