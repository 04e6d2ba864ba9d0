#pragma once

namespace gda::par {

/// Worker cap for the OpenMP kernels. Resolution order: set_threads(),
/// then the GDA_THREADS environment variable, then the hardware count.
int threads();
void set_threads(int n);

/// True when a kernel should open its own parallel region. Returns false
/// inside an enclosing region (e.g. batch-level parallelism in training)
/// so kernels degrade to their serial bodies instead of oversubscribing.
bool want_parallel();

}  // namespace gda::par
