#include "clam/config.hpp"

#include "clam/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

namespace clam {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw Error(ErrorKind::Config, "bad value for '" + key + "': '" + value + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(out)) throw Error(ErrorKind::Config, "non-finite value for '" + key + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  throw Error(ErrorKind::Config, "bad boolean for '" + key + "': '" + value + "'");
}

using Setter = std::function<void(const std::string&, const std::string&)>;

void apply_settings(const std::map<std::string, std::string>& kv, const std::map<std::string, Setter>& setters) {
  for (const auto& [key, value] : kv) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw Error(ErrorKind::Config, "unknown config key '" + key + "'");
    it->second(key, value);
  }
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::Config, "line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw Error(ErrorKind::Config, "line " + std::to_string(line_no) + ": empty key");
    if (!out.emplace(key, trim(line.substr(eq + 1))).second) {
      throw Error(ErrorKind::Config, "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }
  return out;
}

TrainConfig parse_train_config(const std::string& text, TrainConfig cfg) {
  const std::map<std::string, Setter> setters = {
      {"learning_rate", [&](auto& k, auto& v) { cfg.learning_rate = parse_number<double>(k, v); }},
      {"weight_decay", [&](auto& k, auto& v) { cfg.weight_decay = parse_number<double>(k, v); }},
      {"batch_size", [&](auto& k, auto& v) { cfg.batch_size = parse_number<int>(k, v); }},
      {"min_epochs", [&](auto& k, auto& v) { cfg.min_epochs = parse_number<int>(k, v); }},
      {"max_epochs", [&](auto& k, auto& v) { cfg.max_epochs = parse_number<int>(k, v); }},
      {"patience", [&](auto& k, auto& v) { cfg.patience = parse_number<int>(k, v); }},
      {"seed", [&](auto& k, auto& v) { cfg.seed = parse_number<std::uint64_t>(k, v); }},
      {"alpha", [&](auto& k, auto& v) { cfg.loss.alpha = parse_number<double>(k, v); }},
      {"tau", [&](auto& k, auto& v) { cfg.loss.tau = parse_number<double>(k, v); }},
      {"c1", [&](auto& k, auto& v) { cfg.loss.c1 = parse_number<double>(k, v); }},
      {"c2", [&](auto& k, auto& v) { cfg.loss.c2 = parse_number<double>(k, v); }},
      {"B", [&](auto& k, auto& v) { cfg.loss.B = parse_number<int>(k, v); }},
      {"mutually_exclusive", [&](auto& k, auto& v) { cfg.loss.mutually_exclusive = parse_bool(k, v); }},
  };
  apply_settings(parse_key_values(text), setters);
  cfg.validate();
  return cfg;
}

std::string format_train_config(const TrainConfig& c) {
  std::ostringstream s;
  s << "learning_rate=" << fmt_double(c.learning_rate) << "\nweight_decay=" << fmt_double(c.weight_decay)
    << "\nbatch_size=" << c.batch_size << "\nmin_epochs=" << c.min_epochs << "\nmax_epochs=" << c.max_epochs
    << "\npatience=" << c.patience << "\nseed=" << c.seed << "\nalpha=" << fmt_double(c.loss.alpha)
    << "\ntau=" << fmt_double(c.loss.tau) << "\nc1=" << fmt_double(c.loss.c1) << "\nc2=" << fmt_double(c.loss.c2)
    << "\nB=" << c.loss.B << "\nmutually_exclusive=" << (c.loss.mutually_exclusive ? 1 : 0) << "\n";
  return s.str();
}

SynthSpec parse_synth_spec(const std::string& text, SynthSpec spec) {
  const std::map<std::string, Setter> setters = {
      {"n_classes", [&](auto& k, auto& v) { spec.n_classes = parse_number<int>(k, v); }},
      {"feature_dim", [&](auto& k, auto& v) { spec.feature_dim = parse_number<int>(k, v); }},
      {"k_min", [&](auto& k, auto& v) { spec.k_min = parse_number<int>(k, v); }},
      {"k_max", [&](auto& k, auto& v) { spec.k_max = parse_number<int>(k, v); }},
      {"evidence_fraction", [&](auto& k, auto& v) { spec.evidence_fraction = parse_number<double>(k, v); }},
      {"class_mean_separation", [&](auto& k, auto& v) { spec.class_mean_separation = parse_number<double>(k, v); }},
      {"noise_std", [&](auto& k, auto& v) { spec.noise_std = parse_number<double>(k, v); }},
      {"seed", [&](auto& k, auto& v) { spec.seed = parse_number<std::uint64_t>(k, v); }},
  };
  apply_settings(parse_key_values(text), setters);
  spec.validate();
  return spec;
}

std::string format_synth_spec(const SynthSpec& s) {
  std::ostringstream o;
  o << "n_classes=" << s.n_classes << "\nfeature_dim=" << s.feature_dim << "\nk_min=" << s.k_min
    << "\nk_max=" << s.k_max << "\nevidence_fraction=" << fmt_double(s.evidence_fraction)
    << "\nclass_mean_separation=" << fmt_double(s.class_mean_separation) << "\nnoise_std=" << fmt_double(s.noise_std)
    << "\nseed=" << s.seed << "\n";
  return o.str();
}

}  // namespace clam
