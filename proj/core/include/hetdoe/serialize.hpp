#pragma once

// JSON documents for designs, model state, checkpoints and experiment
// configurations. Doubles are written with round-trip precision.
//
// Design:     {"dim": d, "x": [[...], ...], "a": [...], "ybar": [...], "s2": [...]}
// Model:      {"homoskedastic": bool, "theta": [...], "theta_g": [...], "g": g,
//              "delta": [...], "log_lambda": l, "kernel": "...", "noise_kernel": "...",
//              "mean_offset": m, "nu_hat": v, "nu_hat_g": vg}
// Checkpoint: {"iteration": t, "horizon": h, "last_action": "explore"|"replicate",
//              "seed": s, "design": Design, "model": Model, "refit": {...}}

#include "hetdoe/harness.hpp"
#include "hetdoe/hetgp.hpp"

#include <string>

namespace hetdoe {

std::string design_to_json(const UniqueDesign& design);
UniqueDesign design_from_json(const std::string& text);

std::string model_to_json(const HetGP& model);
// Rebuilds the model from its serialized parameters on `design`.
HetGP model_from_json(const std::string& text, const UniqueDesign& design, const HetGPOptions& options);

struct Checkpoint {
  int iteration = 0;
  int horizon = 0;
  Action last_action = Action::Explore;
  std::uint64_t seed = 0;
  UniqueDesign design;
  HetGPParams params;
  double mean_offset = 0.0;
};

std::string checkpoint_to_json(const Checkpoint& cp);
Checkpoint checkpoint_from_json(const std::string& text);

std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace hetdoe
