#pragma once

#include "clam/synth.hpp"
#include "clam/training.hpp"

#include <map>
#include <string>

namespace clam {

// Flat key=value text, one pair per line; '#' starts a comment line.
// Unknown keys and malformed values are Config errors naming the line.
std::map<std::string, std::string> parse_key_values(const std::string& text);

// learning_rate weight_decay batch_size min_epochs max_epochs patience seed
// alpha tau c1 c2 B mutually_exclusive
TrainConfig parse_train_config(const std::string& text, TrainConfig base = {});
std::string format_train_config(const TrainConfig& cfg);

// n_classes feature_dim k_min k_max evidence_fraction class_mean_separation noise_std seed
SynthSpec parse_synth_spec(const std::string& text, SynthSpec base = {});
std::string format_synth_spec(const SynthSpec& spec);

}  // namespace clam
