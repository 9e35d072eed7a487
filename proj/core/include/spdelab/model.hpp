#pragma once

#include <cstddef>
#include <functional>

#include "spdelab/grid.hpp"
#include "spdelab/noise.hpp"
#include "spdelab/reaction.hpp"
#include "spdelab/solver.hpp"

namespace spdelab {

/// Everything that defines one SPDE instance on a grid.
struct Model {
  SpaceTimeGrid grid;
  CovarianceSpec noise = CovarianceSpec::white(0.25);
  ReactionFn f = ReactionFn::allen_cahn();
  Diffusion sigma = Diffusion::sine();
  InitialCondition u0 = InitialCondition::constant(0.0);
};

/// Runs body(worker, i) for i in [0, n) on `threads` workers (threads <= 0:
/// hardware concurrency). Work is handed out in index order; the first
/// exception (lowest index) is rethrown after all workers stop. Callers keep
/// per-worker scratch indexed by `worker` and write results by `i`, which
/// makes the outcome independent of the thread count.
void parallel_for(std::size_t n, int threads, const std::function<void(int worker, std::size_t i)>& body);

/// Worker count parallel_for will use for `threads`.
int resolve_threads(int threads, std::size_t n);

}  // namespace spdelab
