#pragma once

namespace meshfeat {

/// Caps worker threads for parallel loops; n <= 0 restores the runtime default.
void set_num_threads(int n);
int num_threads();

}  // namespace meshfeat
