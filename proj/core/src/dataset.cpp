#include "l2d/dataset.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace l2d {

std::string split_name(Split split) {
  switch (split) {
    case Split::kBaseTrain: return "base-train";
    case Split::kDeferralTrain: return "deferral-train";
    case Split::kTest: return "test";
  }
  return "?";
}

Split parse_split(const std::string& name) {
  if (name == "base-train") return Split::kBaseTrain;
  if (name == "deferral-train") return Split::kDeferralTrain;
  if (name == "test") return Split::kTest;
  throw std::invalid_argument("unknown split '" + name + "'");
}

int Dataset::feature_dim() const {
  return examples.empty() ? 0 : static_cast<int>(examples.front().features.size());
}

void Dataset::validate() const {
  if (examples.empty()) throw std::invalid_argument("Dataset: empty");
  if (num_classes < 1) throw std::invalid_argument("Dataset: num_classes < 1");
  const std::size_t dim = examples.front().features.size();
  for (const auto& ex : examples) {
    if (ex.label < 0 || ex.label >= num_classes) {
      throw std::invalid_argument("Dataset: label out of range");
    }
    if (ex.features.size() != dim) {
      throw std::invalid_argument("Dataset: inconsistent feature dimension");
    }
  }
}

void write_jsonl(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& ex : data.examples) {
    nlohmann::json rec;
    rec["x"] = ex.features;
    rec["y"] = ex.label;
    out << rec.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Dataset read_jsonl(const std::string& path, Split split, int num_classes) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  Dataset data;
  data.split = split;
  data.num_classes = num_classes;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    LabeledExample ex;
    ex.features = rec.at("x").get<std::vector<double>>();
    ex.label = rec.at("y").get<int>();
    data.examples.push_back(std::move(ex));
  }
  data.validate();
  return data;
}

}  // namespace l2d
