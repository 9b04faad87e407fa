#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mde/error.hpp"
#include "mde/loss.hpp"
#include "mde/model.hpp"
#include "mde/optim.hpp"

namespace mde {

struct TrainConfig {
  std::size_t dim = 50;
  std::size_t batch_size = 100;
  std::size_t epochs = 1000;
  std::uint64_t seed = 1;
  int p = 1;
  std::array<double, kMaxTerms> weights{0.25, 0.5, 0.25, 0.0};
  double psi = 1.2;
  double gamma1 = 2.0;
  double gamma2 = 2.0;
  double beta1 = 1.0;
  double beta2 = 1.0;
  double xi = 0.1;
  double threshold = 0.05;
  double lr = 10.0;
  double rho = 0.95;
  double eps = 1e-6;
  std::string optimizer = "adadelta";
  std::size_t negatives_per_positive = 1;
  bool filtered_negatives = false;
  bool entity_norm = false;
  bool term4 = false;
  std::size_t checkpoint_interval = 0;
  std::string train_path;
  std::string valid_path;
  std::string test_path;
  std::string output_dir;

  ScoreConfig score_config() const {
    ScoreConfig c;
    c.weights = weights;
    c.psi = psi;
    c.p = p;
    c.term4 = term4;
    return c;
  }

  LossState loss_state() const {
    LossState s;
    s.gamma1 = gamma1;
    s.gamma2 = gamma2;
    s.xi = xi;
    s.threshold = threshold;
    s.beta1 = beta1;
    s.beta2 = beta2;
    return s;
  }

  AdadeltaState adadelta() const {
    AdadeltaState a;
    a.rho = rho;
    a.eps = eps;
    a.lr = lr;
    return a;
  }
};

inline void validate(const TrainConfig& c) {
  if (c.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (c.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (c.negatives_per_positive < 1) {
    throw ConfigError("negatives_per_positive must be >= 1");
  }
  if (c.dim < 1) throw ConfigError("dim must be >= 1");
  if (c.optimizer != "adadelta" && c.optimizer != "sgd") {
    throw ConfigError("optimizer must be 'adadelta' or 'sgd'");
  }
  if (!(c.rho > 0.0 && c.rho < 1.0)) throw ConfigError("rho must lie in (0, 1)");
  if (!(c.eps > 0.0)) throw ConfigError("eps must be positive");
  if (!(c.lr > 0.0)) throw ConfigError("lr must be positive");
  validate(c.score_config());
  validate(c.loss_state());
}

namespace detail {

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("invalid value '" + std::string(text) + "' for " +
                      std::string(key));
  }
  return value;
}

inline bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") {
    return false;
  }
  throw ConfigError("invalid boolean '" + std::string(text) + "' for " +
                    std::string(key));
}

// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

// One named TrainConfig field. The same table drives the config-file parser,
// the manifest writer and the command-line flags.
struct ConfigField {
  std::string name;
  std::string help;
  std::function<void(TrainConfig&, std::string_view)> set;
  std::function<std::string(const TrainConfig&)> get;
};

inline const std::vector<ConfigField>& config_fields() {
  using namespace detail;
  auto size_field = [](std::string name, std::string help,
                       std::size_t TrainConfig::*m) {
    return ConfigField{
        name, std::move(help),
        [m, name](TrainConfig& c, std::string_view v) {
          c.*m = parse_number<std::size_t>(name, v);
        },
        [m](const TrainConfig& c) { return std::to_string(c.*m); }};
  };
  auto real_field = [](std::string name, std::string help,
                       double TrainConfig::*m) {
    return ConfigField{name, std::move(help),
                       [m, name](TrainConfig& c, std::string_view v) {
                         c.*m = parse_number<double>(name, v);
                       },
                       [m](const TrainConfig& c) { return format_double(c.*m); }};
  };
  auto bool_field = [](std::string name, std::string help,
                       bool TrainConfig::*m) {
    return ConfigField{name, std::move(help),
                       [m, name](TrainConfig& c, std::string_view v) {
                         c.*m = parse_bool(name, v);
                       },
                       [m](const TrainConfig& c) {
                         return std::string(c.*m ? "true" : "false");
                       }};
  };
  auto text_field = [](std::string name, std::string help,
                       std::string TrainConfig::*m) {
    return ConfigField{
        name, std::move(help),
        [m](TrainConfig& c, std::string_view v) { c.*m = std::string(v); },
        [m](const TrainConfig& c) { return c.*m; }};
  };

  static const std::vector<ConfigField> fields = {
      size_field("dim", "embedding dimension", &TrainConfig::dim),
      size_field("batch_size", "positive triples per optimizer step",
                 &TrainConfig::batch_size),
      size_field("epochs", "training epochs", &TrainConfig::epochs),
      ConfigField{"seed", "random seed",
                  [](TrainConfig& c, std::string_view v) {
                    c.seed = parse_number<std::uint64_t>("seed", v);
                  },
                  [](const TrainConfig& c) { return std::to_string(c.seed); }},
      ConfigField{"p", "norm order (1 or 2)",
                  [](TrainConfig& c, std::string_view v) {
                    c.p = parse_number<int>("p", v);
                  },
                  [](const TrainConfig& c) { return std::to_string(c.p); }},
      ConfigField{"weights", "term weights w1,w2,w3,w4",
                  [](TrainConfig& c, std::string_view v) {
                    std::array<double, kMaxTerms> w{};
                    std::size_t i = 0;
                    while (true) {
                      auto comma = v.find(',');
                      if (i >= w.size()) {
                        throw ConfigError("weights takes 4 values");
                      }
                      w[i++] = parse_number<double>(
                          "weights", trim(v.substr(0, comma)));
                      if (comma == std::string_view::npos) break;
                      v.remove_prefix(comma + 1);
                    }
                    if (i != w.size()) throw ConfigError("weights takes 4 values");
                    c.weights = w;
                  },
                  [](const TrainConfig& c) {
                    std::string s;
                    for (std::size_t i = 0; i < c.weights.size(); ++i) {
                      if (i) s += ',';
                      s += format_double(c.weights[i]);
                    }
                    return s;
                  }},
      real_field("psi", "score offset subtracted from the weighted sum",
                 &TrainConfig::psi),
      real_field("gamma1", "positive-sample limit", &TrainConfig::gamma1),
      real_field("gamma2", "negative-sample limit", &TrainConfig::gamma2),
      real_field("beta1", "positive loss weight", &TrainConfig::beta1),
      real_field("beta2", "negative loss weight", &TrainConfig::beta2),
      real_field("xi", "limit controller step (0 freezes the limits)",
                 &TrainConfig::xi),
      real_field("threshold", "negative-loss threshold of the controller",
                 &TrainConfig::threshold),
      real_field("lr", "learning-rate multiplier", &TrainConfig::lr),
      real_field("rho", "Adadelta decay", &TrainConfig::rho),
      real_field("eps", "Adadelta stabiliser", &TrainConfig::eps),
      text_field("optimizer", "adadelta or sgd", &TrainConfig::optimizer),
      size_field("negatives_per_positive", "corruptions per positive triple",
                 &TrainConfig::negatives_per_positive),
      bool_field("filtered_negatives",
                 "reject corruptions that are training triples",
                 &TrainConfig::filtered_negatives),
      bool_field("entity_norm", "project entity vectors to unit norm",
                 &TrainConfig::entity_norm),
      bool_field("term4", "enable the h - r*t distance term",
                 &TrainConfig::term4),
      size_field("checkpoint_interval", "epochs between checkpoints (0: end only)",
                 &TrainConfig::checkpoint_interval),
      text_field("train", "training triples (TSV)", &TrainConfig::train_path),
      text_field("valid", "validation triples (TSV)", &TrainConfig::valid_path),
      text_field("test", "test triples (TSV)", &TrainConfig::test_path),
      text_field("output_dir", "directory for manifest, log and checkpoints",
                 &TrainConfig::output_dir),
  };
  return fields;
}

inline const ConfigField* find_config_field(std::string_view name) {
  for (const auto& f : config_fields()) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

inline void set_config_value(TrainConfig& c, std::string_view key,
                             std::string_view value) {
  const ConfigField* f = find_config_field(key);
  if (!f) throw ConfigError("unknown config key '" + std::string(key) + "'");
  f->set(c, value);
}

// Flat `key=value` lines; blank lines and comments are ignored. Values not given keep the defaults in `base`.
inline TrainConfig parse_config(std::istream& in, const std::string& origin,
                                TrainConfig base = {}) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = line;
    // '#' starts a comment at line start or after whitespace.
    for (std::size_t i = 0; i < text.size(); ++i) {
      if (text[i] == '#' && (i == 0 || text[i - 1] == ' ' || text[i - 1] == '\t')) {
        text = text.substr(0, i);
        break;
      }
    }
    text = detail::trim(text);
    if (text.empty()) continue;
    auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": expected key=value");
    }
    try {
      set_config_value(base, detail::trim(text.substr(0, eq)),
                       detail::trim(text.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

inline TrainConfig load_config_file(const std::string& path,
                                    TrainConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, path, std::move(base));
}

inline void write_config(std::ostream& os, const TrainConfig& c) {
  for (const auto& f : config_fields()) os << f.name << '=' << f.get(c) << '\n';
}

}  // namespace mde
