//! Placeholder; demo exports land after the core is complete.
