#pragma once

namespace icurisk {

/// Execution policy for kernels that have a serial reference and an OpenMP
/// variant. Both produce bit-identical results.
enum class Exec { serial, parallel };

int max_threads();
/// Bounds OpenMP worker count; n <= 0 leaves the runtime default.
void set_jobs(int n);

}  // namespace icurisk
