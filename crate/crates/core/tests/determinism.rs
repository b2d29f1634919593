//! Identical configs and seeds give identical records.

mod common;
mod props;

use props::property_tests;

property_tests!(pipeline: records_are_reproducible);
