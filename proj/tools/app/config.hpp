#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "spdelab/model.hpp"

namespace spdelab::app {

/// Flat-sectioned experiment description. Every field maps to one
/// "section.key" path in the INI text.
struct ExperimentConfig {
  struct Grid {
    double T = 1.0;
    int n_t = 512;
    double L = 8.0;
    int n_x = 256;
    int dim = 1;
    std::string boundary = "periodic";
  } grid;
  struct Noise {
    std::string kind = "white";
    double eta = 0.25;
    double length = 1.0;  // gaussian
    double beta = 0.5;    // riesz
  } noise;
  struct Reaction {
    std::string name = "allen-cahn";
    double kappa = 0.0;  // linear
  } reaction;
  struct Sigma {
    std::string name = "sine";
    double level = 1.0;
    double amplitude = 0.1;
  } sigma;
  struct Initial {
    std::string kind = "constant";
    double value = 0.0;
    double amplitude = 1.0;
    double variance = 0.5;
    double center = 0.0;
  } initial;
  struct Weight {
    double theta = 0.5;
    std::vector<double> centers{-4.0, 0.0, 4.0};
  } weight;
  struct Probe {
    double t0 = 0.5;
    double x0 = 0.0;
    int k_max = 6;
    double delta = 0.125;
    double epsilon = 1e-3;
  } probe;
  struct Picard {
    double stop_tol = 1e-5;
    int n_max = 25;
  } picard;
  struct Run {
    int n_paths = 100;
    std::uint64_t base_seed = 20261016;
    std::string output = "out";
    int threads = 0;
  } run;

  /// Builds grid, noise, reaction, sigma and initial datum. Throws ConfigError.
  Model model() const;
};

struct ConfigIssue {
  std::string key;
  std::string message;
};

/// Parses INI text. Unknown sections or keys and malformed values throw
/// ConfigError naming the key path. `overrides` are "section.key=value"
/// strings applied after the text.
ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& file, const std::vector<std::string>& overrides = {});

/// Canonical INI text: fixed section and key order, shortest round-trip numbers.
std::string serialize_config(const ExperimentConfig& config);

/// All violated invariants, each tagged with its key path. Empty when valid.
std::vector<ConfigIssue> validate_config(const ExperimentConfig& config);

/// Throws ConfigError for the first issue.
void require_valid(const ExperimentConfig& config);

}  // namespace spdelab::app
