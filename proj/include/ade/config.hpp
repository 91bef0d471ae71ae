#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "ade/experiment.hpp"

namespace ade {

// Ordered key -> raw value.
using ConfigMap = std::map<std::string, std::string>;

/// "key = value" lines; '#' starts a comment. Throws FormatError naming the
/// line for malformed or repeated keys.
ConfigMap parse_config(std::string_view text);
ConfigMap load_config(const std::filesystem::path& path);

/// Applies recognised keys to the task's settings. Keys that belong only to
/// other tasks are ignored; unknown keys and bad values raise ConfigError.
///
/// Training keys: learning_rate, lr_decay_po, batch_size, epochs,
/// dropout_rate, seed. Tagger: lstm_state_size, char_embedding_dim,
/// char_filters, char_kernel_size, dropout_embeddings, dropout_lstm_output,
/// tune_word_embeddings. Networks: hidden_layers (comma list), leaky_slope,
/// class_weights. Relations: vicinity_window, span_head (last|first),
/// feature_pad_multiple, imbalance_warning_ratio. Experiments: k_folds,
/// dev_ratio, cv_seed, match_modes (comma list), cv_workers.
void apply_config(const ConfigMap& values, Task task, ExperimentConfig& config);

}  // namespace ade
