#include "l2d/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace l2d {

namespace {

constexpr char kAlphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

std::string encode_doubles(const std::vector<double>& values) {
  return base64_encode(reinterpret_cast<const unsigned char*>(values.data()),
                       values.size() * sizeof(double));
}

std::vector<double> decode_doubles(const std::string& text, std::size_t expected) {
  const std::string bytes = base64_decode(text);
  if (bytes.size() != expected * sizeof(double)) {
    throw std::runtime_error("checkpoint: payload size mismatch");
  }
  std::vector<double> values(expected);
  std::memcpy(values.data(), bytes.data(), bytes.size());
  return values;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

std::string base64_encode(const unsigned char* data, std::size_t len) {
  std::string out;
  out.reserve((len + 2) / 3 * 4);
  for (std::size_t i = 0; i < len; i += 3) {
    const unsigned b0 = data[i];
    const unsigned b1 = i + 1 < len ? data[i + 1] : 0;
    const unsigned b2 = i + 2 < len ? data[i + 2] : 0;
    out.push_back(kAlphabet[b0 >> 2]);
    out.push_back(kAlphabet[((b0 & 0x3u) << 4) | (b1 >> 4)]);
    out.push_back(i + 1 < len ? kAlphabet[((b1 & 0xFu) << 2) | (b2 >> 6)] : '=');
    out.push_back(i + 2 < len ? kAlphabet[b2 & 0x3Fu] : '=');
  }
  return out;
}

std::string base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw std::runtime_error("base64: bad length");
  int lookup[256];
  std::fill(std::begin(lookup), std::end(lookup), -1);
  for (int i = 0; i < 64; ++i) lookup[static_cast<unsigned char>(kAlphabet[i])] = i;

  std::string out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int vals[4];
    int pad = 0;
    for (int j = 0; j < 4; ++j) {
      const char c = text[i + j];
      if (c == '=') {
        vals[j] = 0;
        ++pad;
      } else {
        vals[j] = lookup[static_cast<unsigned char>(c)];
        if (vals[j] < 0) throw std::runtime_error("base64: bad character");
        if (pad > 0) throw std::runtime_error("base64: data after padding");
      }
    }
    const unsigned triple = (static_cast<unsigned>(vals[0]) << 18) |
                            (static_cast<unsigned>(vals[1]) << 12) |
                            (static_cast<unsigned>(vals[2]) << 6) |
                            static_cast<unsigned>(vals[3]);
    out.push_back(static_cast<char>((triple >> 16) & 0xFF));
    if (pad < 2) out.push_back(static_cast<char>((triple >> 8) & 0xFF));
    if (pad < 1) out.push_back(static_cast<char>(triple & 0xFF));
  }
  return out;
}

std::string mlp_to_json(const MlpParams& params) {
  params.validate();
  nlohmann::json doc;
  doc["version"] = 1;
  doc["kind"] = "mlp";
  doc["activation"] = "relu";
  doc["layer_sizes"] = params.layer_sizes;
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    weights.push_back(encode_doubles(params.weights[l]));
    biases.push_back(encode_doubles(params.biases[l]));
  }
  doc["weights"] = std::move(weights);
  doc["biases"] = std::move(biases);
  return doc.dump(2);
}

MlpParams mlp_from_json(const std::string& json_text) {
  const nlohmann::json doc = nlohmann::json::parse(json_text);
  if (doc.at("version").get<int>() != 1) {
    throw std::runtime_error("checkpoint: unsupported version");
  }
  MlpParams params;
  params.layer_sizes = doc.at("layer_sizes").get<std::vector<int>>();
  const auto& weights = doc.at("weights");
  const auto& biases = doc.at("biases");
  for (std::size_t l = 0; l + 1 < params.layer_sizes.size(); ++l) {
    const std::size_t fan_in = static_cast<std::size_t>(params.layer_sizes[l]);
    const std::size_t fan_out = static_cast<std::size_t>(params.layer_sizes[l + 1]);
    params.weights.push_back(
        decode_doubles(weights.at(l).get<std::string>(), fan_in * fan_out));
    params.biases.push_back(decode_doubles(biases.at(l).get<std::string>(), fan_out));
  }
  params.validate();
  return params;
}

void save_classifier(const Classifier& model, const std::string& path) {
  write_file(path, mlp_to_json(model.params));
}

Classifier load_classifier(const std::string& path) {
  return Classifier{mlp_from_json(read_file(path))};
}

void save_scorer(const DeferralScorer& scorer, const std::string& path) {
  nlohmann::json doc = nlohmann::json::parse(mlp_to_json(scorer.params));
  doc["dr_loss"] = dr_kind_name(scorer.kind);
  write_file(path, doc.dump(2));
}

DeferralScorer load_scorer(const std::string& path) {
  const std::string text = read_file(path);
  const nlohmann::json doc = nlohmann::json::parse(text);
  DeferralScorer scorer;
  scorer.params = mlp_from_json(text);
  scorer.kind = parse_dr_kind(doc.at("dr_loss").get<std::string>());
  return scorer;
}

void save_head(const MlpParams& params, const std::string& path) {
  write_file(path, mlp_to_json(params));
}

MlpParams load_head(const std::string& path) {
  return mlp_from_json(read_file(path));
}

}  // namespace l2d
