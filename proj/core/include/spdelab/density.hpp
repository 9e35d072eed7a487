#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "spdelab/model.hpp"

namespace spdelab {

/// Samples of u(t0, x0) across independent noise paths.
struct Ensemble {
  std::vector<double> samples;
  std::vector<std::uint64_t> seeds;
  /// Canonical description of everything that determines the samples.
  std::string fingerprint;
};

struct EnsembleOptions {
  double t0 = 0.5;
  double x0 = 0.0;
  int n_paths = 1000;
  std::uint64_t base_seed = 1;
  int threads = 0;
};

/// Canonical text "key=value;..." covering grid, noise, reaction, sigma,
/// initial condition, probe point and seeds.
std::string ensemble_fingerprint(const Model& model, const EnsembleOptions& options);

/// One forward solve per path on [0, t0] with seed derive_seed(base_seed, i).
/// A failing path aborts with a NumericError naming its seed.
Ensemble run_ensemble(const Model& model, const EnsembleOptions& options);

/// Ensemble CSV: a "# fingerprint: ..." line, then path_id,seed,value.
void write_ensemble_csv(const std::filesystem::path& file, const Ensemble& ensemble);
Ensemble read_ensemble_csv(const std::filesystem::path& file);

double silverman_bandwidth(std::span<const double> samples);

struct KdeCurve {
  /// Zero-variance ensemble: no curve, all mass at atom_value.
  bool atomic = false;
  double atom_value = 0.0;
  double bandwidth = 0.0;
  std::vector<double> values;
  std::vector<double> density;
  /// Trapezoid integral of the curve over the value grid.
  double mass = 0.0;
};

/// Gaussian-kernel density estimate on [min - 5h, max + 5h] with spacing at
/// most h/4 (at least 512 points). bandwidth <= 0 selects Silverman's rule.
/// Requires at least 100 samples.
KdeCurve kde(std::span<const double> samples, double bandwidth = 0.0);

/// CSV with header value,density.
void write_kde_csv(const std::filesystem::path& file, const KdeCurve& curve);

/// Largest fraction of samples in one bin of width `resolution`, minimized
/// over two binnings offset by resolution / 2. Requires at least 1000 samples.
double atom_test(std::span<const double> samples, double resolution);

}  // namespace spdelab
