#pragma once

namespace vse {

/// Caps the worker threads used by index training and batch search.
/// Values < 1 restore the runtime default.
void set_num_threads(int n);
int num_threads();

} // namespace vse
