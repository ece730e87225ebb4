#include "revfraud/pipeline/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "revfraud/errors.hpp"

namespace revfraud::pipeline {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || errno == ERANGE) throw ConfigError("config '" + key + "': not a number: " + v);
  return d;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  if (v.empty() || v.front() == '-') throw ConfigError("config '" + key + "': not a non-negative integer: " + v);
  const unsigned long long n = std::strtoull(v.c_str(), &end, 10);
  if (*end != '\0' || errno == ERANGE) throw ConfigError("config '" + key + "': not a non-negative integer: " + v);
  return n;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config '" + key + "': expected true or false, got " + v);
}

std::vector<std::size_t> to_widths(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  if (v.empty() || v == "none") return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_u64(key, trim(item)));
  return out;
}

std::string widths_text(const std::vector<std::size_t>& w) {
  if (w.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(w[i]);
  }
  return out;
}

std::string real_text(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace

void TrainConfig::validate() const {
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ConfigError("split_ratio must lie in (0, 1)");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(margin > 0.0 && std::isfinite(margin))) throw ConfigError("margin must be positive and finite");
  if (!(threshold > 0.0 && std::isfinite(threshold))) throw ConfigError("threshold must be positive and finite");
  if (text_dim == 0 || output_dim == 0) throw ConfigError("branch dimensions must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(adam.learning_rate > 0.0 && std::isfinite(adam.learning_rate))) {
    throw ConfigError("learning_rate must be positive and finite");
  }
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(adam.epsilon > 0.0 && std::isfinite(adam.epsilon))) throw ConfigError("Adam epsilon must be positive");
  for (std::size_t w : text_hidden) {
    if (w == 0) throw ConfigError("text_hidden widths must be positive");
  }
  for (std::size_t w : attribute_hidden) {
    if (w == 0) throw ConfigError("attribute_hidden widths must be positive");
  }
}

std::string TrainConfig::to_text() const {
  std::ostringstream out;
  out << "epochs = " << epochs << '\n'
      << "split_ratio = " << real_text(split_ratio) << '\n'
      << "batch_size = " << batch_size << '\n'
      << "margin = " << real_text(margin) << '\n'
      << "threshold = " << real_text(threshold) << '\n'
      << "seed = " << seed << '\n'
      << "text_dim = " << text_dim << '\n'
      << "text_hidden = " << widths_text(text_hidden) << '\n'
      << "attribute_hidden = " << widths_text(attribute_hidden) << '\n'
      << "output_dim = " << output_dim << '\n'
      << "dropout = " << real_text(dropout) << '\n'
      << "batch_norm = " << (batch_norm ? "true" : "false") << '\n'
      << "learning_rate = " << real_text(adam.learning_rate) << '\n'
      << "beta1 = " << real_text(adam.beta1) << '\n'
      << "beta2 = " << real_text(adam.beta2) << '\n'
      << "epsilon = " << real_text(adam.epsilon) << '\n';
  return out.str();
}

TrainConfig TrainConfig::parse(std::istream& in) {
  TrainConfig c;
  const std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters{
      {"epochs", [&](auto& k, auto& v) { c.epochs = to_u64(k, v); }},
      {"split_ratio", [&](auto& k, auto& v) { c.split_ratio = to_double(k, v); }},
      {"batch_size", [&](auto& k, auto& v) { c.batch_size = to_u64(k, v); }},
      {"margin", [&](auto& k, auto& v) { c.margin = to_double(k, v); }},
      {"threshold", [&](auto& k, auto& v) { c.threshold = to_double(k, v); }},
      {"seed", [&](auto& k, auto& v) { c.seed = to_u64(k, v); }},
      {"text_dim", [&](auto& k, auto& v) { c.text_dim = to_u64(k, v); }},
      {"text_hidden", [&](auto& k, auto& v) { c.text_hidden = to_widths(k, v); }},
      {"attribute_hidden", [&](auto& k, auto& v) { c.attribute_hidden = to_widths(k, v); }},
      {"output_dim", [&](auto& k, auto& v) { c.output_dim = to_u64(k, v); }},
      {"dropout", [&](auto& k, auto& v) { c.dropout = to_double(k, v); }},
      {"batch_norm", [&](auto& k, auto& v) { c.batch_norm = to_bool(k, v); }},
      {"learning_rate", [&](auto& k, auto& v) { c.adam.learning_rate = to_double(k, v); }},
      {"beta1", [&](auto& k, auto& v) { c.adam.beta1 = to_double(k, v); }},
      {"beta2", [&](auto& k, auto& v) { c.adam.beta2 = to_double(k, v); }},
      {"epsilon", [&](auto& k, auto& v) { c.adam.epsilon = to_double(k, v); }},
  };
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": missing '='");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    it->second(key, value);
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parse(in);
}

std::vector<ndmath::LayerSpec> branch_specs(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                                            std::size_t output_dim, double dropout, bool batch_norm) {
  using ndmath::LayerSpec;
  std::vector<LayerSpec> specs;
  std::size_t width = input_dim;
  for (std::size_t h : hidden) {
    if (dropout > 0.0) specs.push_back(LayerSpec::dropout(width, dropout));
    specs.push_back(LayerSpec::linear(width, h));
    if (batch_norm) specs.push_back(LayerSpec::batchnorm(h));
    specs.push_back(LayerSpec::relu(h));
    width = h;
  }
  specs.push_back(LayerSpec::linear(width, output_dim));
  return specs;
}

}  // namespace revfraud::pipeline
