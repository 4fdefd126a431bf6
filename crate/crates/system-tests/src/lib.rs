//! End-to-end checks of the whole workspace live in `tests/`.
