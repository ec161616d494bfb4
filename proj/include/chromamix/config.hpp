#ifndef CHROMAMIX_CONFIG_HPP_
#define CHROMAMIX_CONFIG_HPP_

// Experiment spec files: flat `key = value` lines with dotted sections
// (env.*, train.*, eval.*, run.*). '#' starts a comment.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "chromamix/env.hpp"
#include "chromamix/metrics.hpp"
#include "chromamix/ppo.hpp"

namespace chromamix {

inline constexpr const char* kCodeVersion = "0.1.0";

/// A spec problem tied to one field, e.g. "env.reward: missing required field".
class SpecError : public std::invalid_argument {
 public:
  SpecError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Shortest decimal that round-trips.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format_rgb(const Rgb& c) {
  return format_double(c.r) + "," + format_double(c.g) + "," + format_double(c.b);
}

struct EvalSpec {
  bool enabled = false;
  DynamicsModel dynamics = DynamicsModel::kWgm;
  std::vector<NamedTarget> targets = reference_targets();
  TransferOptions options;
};

struct ExperimentSpec {
  std::string name;
  EnvConfig env;
  TrainConfig train;
  std::vector<std::uint64_t> seeds{0};
  EvalSpec eval;
  std::string output_dir;  // empty: resolved by the caller
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (;;) {
    const auto next = s.find(sep, pos);
    out.push_back(trim(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw SpecError(key, "not a number: '" + text + "'");
  }
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "yes" || text == "1") return true;
  if (text == "false" || text == "no" || text == "0") return false;
  throw SpecError(key, "expected true/false, got '" + text + "'");
}

template <class F>
auto wrap(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const SpecError&) {
    throw;
  } catch (const std::exception& e) {
    throw SpecError(key, e.what());
  }
}

}  // namespace detail

/// Targets as "reference" or "NAME:r,g,b; NAME:r,g,b".
inline std::vector<NamedTarget> parse_targets(const std::string& text) {
  if (text == "reference") return reference_targets();
  std::vector<NamedTarget> out;
  if (text.empty()) return out;
  int auto_id = 0;
  for (const auto& item : detail::split(text, ';')) {
    if (item.empty()) continue;
    const auto colon = item.find(':');
    NamedTarget t;
    if (colon == std::string::npos) {
      t.name = "T" + std::to_string(++auto_id);
      t.color = parse_rgb(item);
    } else {
      t.name = detail::trim(item.substr(0, colon));
      t.color = parse_rgb(item.substr(colon + 1));
    }
    out.push_back(t);
  }
  return out;
}

inline std::string format_targets(const std::vector<NamedTarget>& targets) {
  std::string s;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (i) s += "; ";
    s += targets[i].name + ":" + format_rgb(targets[i].color);
  }
  return s;
}

using KeyValues = std::map<std::string, std::string>;

/// Splits spec text into key/value pairs without interpreting them.
inline KeyValues parse_kv(std::string_view text) {
  KeyValues kv;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw SpecError("line " + std::to_string(lineno), "expected 'key = value'");
    }
    const std::string key = detail::trim(t.substr(0, eq));
    if (kv.count(key)) throw SpecError(key, "duplicate key");
    kv[key] = detail::trim(t.substr(eq + 1));
  }
  return kv;
}

/// Builds a spec from key/value pairs. Unknown keys and missing required keys
/// are errors that name the field.
inline ExperimentSpec parse_spec(const KeyValues& kv) {
  static const std::set<std::string> kRequired{"name",        "env.state_variant", "env.include_target",
                                               "env.reward",  "env.horizon",       "env.tolerance",
                                               "env.dynamics"};
  for (const auto& k : kRequired) {
    if (!kv.count(k)) throw SpecError(k, "missing required field");
  }

  ExperimentSpec spec;
  std::set<std::string> used;
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    used.insert(key);
    return it->second;
  };
  auto num = [&](const std::string& key, auto& field) {
    if (auto v = get(key)) field = detail::parse_number<std::decay_t<decltype(field)>>(key, *v);
  };
  auto flag = [&](const std::string& key, bool& field) {
    if (auto v = get(key)) field = detail::parse_bool(key, *v);
  };

  spec.name = *get("name");
  if (spec.name.empty() || spec.name.find_first_of("/\\ ") != std::string::npos) {
    throw SpecError("name", "must be a non-empty identifier without spaces or slashes");
  }
  if (auto v = get("out")) spec.output_dir = *v;
  if (auto v = get("seeds")) {
    spec.seeds.clear();
    for (const auto& s : detail::split(*v, ',')) spec.seeds.push_back(detail::parse_number<std::uint64_t>("seeds", s));
    if (spec.seeds.empty()) throw SpecError("seeds", "at least one seed required");
  }

  EnvConfig& e = spec.env;
  num("env.state_variant", e.state_variant);
  flag("env.include_target", e.include_target);
  e.reward = detail::wrap("env.reward", [&] { return parse_reward(*get("env.reward")); });
  num("env.horizon", e.horizon);
  num("env.tolerance", e.tolerance);
  e.dynamics = detail::wrap("env.dynamics", [&] { return parse_dynamics(*get("env.dynamics")); });
  if (auto v = get("env.noise_std")) {
    const auto parts = detail::split(*v, ',');
    if (parts.size() == 1) {
      e.noise_std.fill(detail::parse_number<double>("env.noise_std", parts[0]));
    } else if (parts.size() == 3) {
      for (int k = 0; k < 3; ++k) e.noise_std[k] = detail::parse_number<double>("env.noise_std", parts[k]);
    } else {
      throw SpecError("env.noise_std", "expected one value or an r,g,b triple");
    }
  }
  flag("env.adv_enabled", e.adv_enabled);
  num("env.adv_prob", e.adv_prob);
  num("env.adv_eps", e.adv_eps);
  num("env.initial_volume", e.initial_volume);

  TrainConfig& tr = spec.train;
  num("train.total_steps", tr.total_steps);
  num("train.rollout_length", tr.rollout_length);
  num("train.minibatch", tr.minibatch);
  num("train.epochs", tr.epochs);
  num("train.gamma", tr.gamma);
  num("train.gae_lambda", tr.gae_lambda);
  num("train.clip_ratio", tr.clip_ratio);
  num("train.learning_rate", tr.learning_rate);
  num("train.value_coef", tr.value_coef);
  num("train.entropy_coef", tr.entropy_coef);
  num("train.max_grad_norm", tr.max_grad_norm);
  num("train.hidden", tr.hidden);

  EvalSpec& ev = spec.eval;
  flag("eval.enabled", ev.enabled);
  if (auto v = get("eval.dynamics")) {
    ev.dynamics = detail::wrap("eval.dynamics", [&] { return parse_dynamics(*v); });
  }
  if (auto v = get("eval.targets")) ev.targets = detail::wrap("eval.targets", [&] { return parse_targets(*v); });
  num("eval.reps", ev.options.reps);
  num("eval.horizon", ev.options.horizon);
  num("eval.tolerance", ev.options.tolerance);
  flag("eval.noise", ev.options.noise);
  flag("eval.adversarial", ev.options.adversarial);
  num("eval.seed", ev.options.seed);

  for (const auto& [k, v] : kv) {
    if (used.count(k) || k.rfind("run.", 0) == 0) continue;
    throw SpecError(k, "unknown field");
  }

  e.validate();
  tr.validate();
  if (ev.options.reps < 0) throw SpecError("eval.reps", "must be >= 0");
  if (ev.options.horizon < 1) throw SpecError("eval.horizon", "must be >= 1");
  if (!(ev.options.tolerance > 0.0)) throw SpecError("eval.tolerance", "must be > 0");
  return spec;
}

inline ExperimentSpec parse_spec(std::string_view text) { return parse_spec(parse_kv(text)); }

inline ExperimentSpec load_spec(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open spec file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_spec(ss.str());
}

/// Fully resolved spec text; parse_spec(format_spec(s)) reproduces s.
inline std::string format_spec(const ExperimentSpec& s) {
  std::ostringstream o;
  auto b = [](bool v) { return v ? "true" : "false"; };
  o << "name = " << s.name << '\n';
  o << "seeds = ";
  for (std::size_t i = 0; i < s.seeds.size(); ++i) o << (i ? "," : "") << s.seeds[i];
  o << '\n';
  if (!s.output_dir.empty()) o << "out = " << s.output_dir << '\n';
  const EnvConfig& e = s.env;
  o << "env.state_variant = " << e.state_variant << '\n'
    << "env.include_target = " << b(e.include_target) << '\n'
    << "env.reward = " << to_string(e.reward) << '\n'
    << "env.horizon = " << e.horizon << '\n'
    << "env.tolerance = " << format_double(e.tolerance) << '\n'
    << "env.dynamics = " << to_string(e.dynamics) << '\n'
    << "env.noise_std = " << format_double(e.noise_std[0]) << ',' << format_double(e.noise_std[1]) << ','
    << format_double(e.noise_std[2]) << '\n'
    << "env.adv_enabled = " << b(e.adv_enabled) << '\n'
    << "env.adv_prob = " << format_double(e.adv_prob) << '\n'
    << "env.adv_eps = " << format_double(e.adv_eps) << '\n'
    << "env.initial_volume = " << format_double(e.initial_volume) << '\n';
  const TrainConfig& t = s.train;
  o << "train.total_steps = " << t.total_steps << '\n'
    << "train.rollout_length = " << t.rollout_length << '\n'
    << "train.minibatch = " << t.minibatch << '\n'
    << "train.epochs = " << t.epochs << '\n'
    << "train.gamma = " << format_double(t.gamma) << '\n'
    << "train.gae_lambda = " << format_double(t.gae_lambda) << '\n'
    << "train.clip_ratio = " << format_double(t.clip_ratio) << '\n'
    << "train.learning_rate = " << format_double(t.learning_rate) << '\n'
    << "train.value_coef = " << format_double(t.value_coef) << '\n'
    << "train.entropy_coef = " << format_double(t.entropy_coef) << '\n'
    << "train.max_grad_norm = " << format_double(t.max_grad_norm) << '\n'
    << "train.hidden = " << t.hidden << '\n';
  const EvalSpec& ev = s.eval;
  o << "eval.enabled = " << b(ev.enabled) << '\n'
    << "eval.dynamics = " << to_string(ev.dynamics) << '\n'
    << "eval.targets = " << format_targets(ev.targets) << '\n'
    << "eval.reps = " << ev.options.reps << '\n'
    << "eval.horizon = " << ev.options.horizon << '\n'
    << "eval.tolerance = " << format_double(ev.options.tolerance) << '\n'
    << "eval.noise = " << b(ev.options.noise) << '\n'
    << "eval.adversarial = " << b(ev.options.adversarial) << '\n'
    << "eval.seed = " << ev.options.seed << '\n';
  return o.str();
}

}  // namespace chromamix

#endif  // CHROMAMIX_CONFIG_HPP_
