#pragma once

#include <string>

#include "l2d/mlp.hpp"
#include "l2d/train.hpp"

namespace l2d {

/// Versioned JSON checkpoint: layer shapes plus per-layer flat weight/bias
/// arrays encoded as base64 little-endian 64-bit floats.
std::string mlp_to_json(const MlpParams& params);
MlpParams mlp_from_json(const std::string& json_text);

void save_classifier(const Classifier& model, const std::string& path);
Classifier load_classifier(const std::string& path);

void save_scorer(const DeferralScorer& scorer, const std::string& path);
DeferralScorer load_scorer(const std::string& path);

/// Generic scalar head (baseline regressors / surrogate scorers).
void save_head(const MlpParams& params, const std::string& path);
MlpParams load_head(const std::string& path);

std::string base64_encode(const unsigned char* data, std::size_t len);
std::string base64_decode(const std::string& text);

}  // namespace l2d
