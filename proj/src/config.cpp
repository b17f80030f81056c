#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "mfcs/io.hpp"

namespace mfcs {

namespace {

namespace pt = boost::property_tree;

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::optional<std::string> raw(const std::string& section, const std::string& key) {
    seen_.insert(section + "." + key);
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return trim(*v);
  }

  std::string require(const std::string& section, const std::string& key) {
    auto v = raw(section, key);
    if (!v || v->empty()) {
      throw ConfigError(fmt::format("config: missing required field '{}' in [{}]", key, section));
    }
    return *v;
  }

  template <class T>
  void number(const std::string& section, const std::string& key, T& target, bool required = false) {
    const auto v = required ? std::optional<std::string>(require(section, key)) : raw(section, key);
    if (!v) return;
    T parsed{};
    const char* end = v->data() + v->size();
    const auto res = std::from_chars(v->data(), end, parsed);
    if (res.ec != std::errc() || res.ptr != end) {
      throw ConfigError(fmt::format("config: field '{}' in [{}] has invalid value '{}'", key,
                                    section, *v));
    }
    target = parsed;
  }

  void boolean(const std::string& section, const std::string& key, bool& target) {
    const auto v = raw(section, key);
    if (!v) return;
    std::string s = *v;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "true" || s == "1" || s == "yes") {
      target = true;
    } else if (s == "false" || s == "0" || s == "no") {
      target = false;
    } else {
      throw ConfigError(fmt::format("config: field '{}' in [{}] is not a boolean", key, section));
    }
  }

  template <class E>
  void choice(const std::string& section, const std::string& key, E& target,
              const std::map<std::string, E>& options, bool required = false) {
    const auto v = required ? std::optional<std::string>(require(section, key)) : raw(section, key);
    if (!v) return;
    const auto it = options.find(*v);
    if (it == options.end()) {
      std::string allowed;
      for (const auto& [name, _] : options) allowed += (allowed.empty() ? "" : "|") + name;
      throw ConfigError(fmt::format("config: field '{}' in [{}] must be one of {}, got '{}'", key,
                                    section, allowed, *v));
    }
    target = it->second;
  }

  void reject_unknown() const {
    for (const auto& [section, body] : tree_) {
      if (body.empty() && !body.data().empty()) {
        throw ConfigError(fmt::format("config: key '{}' outside any section", section));
      }
      for (const auto& [key, _] : body) {
        if (seen_.count(section + "." + key) == 0) {
          throw ConfigError(fmt::format("config: unknown field '{}' in [{}]", key, section));
        }
      }
    }
  }

 private:
  const pt::ptree& tree_;
  std::set<std::string> seen_;
};

const std::map<std::string, ExperimentMode> kModes{{"design", ExperimentMode::kDesign},
                                                   {"active-learning",
                                                    ExperimentMode::kActiveLearning}};
const std::map<std::string, CpVariant> kCp{{"split", CpVariant::kSplit},
                                           {"full", CpVariant::kFull}};
const std::map<std::string, PredictorKind> kPredictors{{"ridge", PredictorKind::kRidge},
                                                       {"gp", PredictorKind::kGp}};
const std::map<std::string, SplitConditioning> kConditioning{
    {"historical", SplitConditioning::kHistorical}, {"refit", SplitConditioning::kRefit}};
const std::map<std::string, ConditioningLabels> kLabels{{"observed", ConditioningLabels::kObserved},
                                                        {"true", ConditioningLabels::kTrue}};

template <class E>
std::string name_of(const std::map<std::string, E>& options, E value) {
  for (const auto& [name, v] : options) {
    if (v == value) return name;
  }
  return "?";
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ",") + s;
  return out;
}

}  // namespace

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& text) {
  const std::string s = trim(text);
  const auto dots = s.find("..");
  auto parse = [&](std::string_view part) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(part.data(), part.data() + part.size(), v);
    if (part.empty() || res.ec != std::errc() || res.ptr != part.data() + part.size()) {
      throw ConfigError(fmt::format("seeds: expected A..B, got '{}'", text));
    }
    return v;
  };
  if (dots == std::string::npos) {
    const auto v = parse(s);
    return {v, v};
  }
  const auto a = parse(std::string_view(s).substr(0, dots));
  const auto b = parse(std::string_view(s).substr(dots + 2));
  if (b < a) throw ConfigError(fmt::format("seeds: end precedes start in '{}'", text));
  return {a, b};
}

ExperimentConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("config: {}", e.message()));
  }
  Reader r(tree);
  ExperimentConfig c;
  const std::string ex = "experiment";
  r.choice(ex, "mode", c.mode, kModes, true);
  if (c.mode == ExperimentMode::kActiveLearning) {
    // Defaults for the active-learning protocol.
    c.predictor = PredictorKind::kGp;
    c.n_train = 64;
    c.n_cal = 16;
    c.lambda = 10.0;
    c.depths = {3};
    c.gamma_init_bias = 3.0;
  }
  r.choice(ex, "cp", c.cp, kCp);
  r.choice(ex, "predictor", c.predictor, kPredictors);
  if (auto v = r.raw(ex, "methods")) c.methods = split_list(*v);
  if (auto v = r.raw(ex, "depths")) {
    c.depths.clear();
    for (const auto& d : split_list(*v)) {
      std::size_t parsed = 0;
      const auto res = std::from_chars(d.data(), d.data() + d.size(), parsed);
      if (res.ec != std::errc() || res.ptr != d.data() + d.size()) {
        throw ConfigError(fmt::format("config: field 'depths' in [experiment] has invalid entry '{}'", d));
      }
      c.depths.push_back(parsed);
    }
  }
  r.number(ex, "alpha", c.alpha, true);
  r.number(ex, "n_train", c.n_train);
  r.number(ex, "n_cal", c.n_cal);
  r.number(ex, "lambda", c.lambda, true);
  r.number(ex, "T", c.steps, true);
  r.number(ex, "aci_step", c.aci_step);
  r.number(ex, "cal_assignment_prob", c.cal_assignment_prob);
  r.number(ex, "gamma_init_bias", c.gamma_init_bias);
  r.boolean(ex, "bounded", c.bounded);
  r.choice(ex, "split_conditioning", c.split_conditioning, kConditioning);
  r.choice(ex, "conditioning_labels", c.conditioning_labels, kLabels);
  if (auto v = r.raw(ex, "seeds")) std::tie(c.seed_begin, c.seed_end) = parse_seed_range(*v);

  const std::string po = "pool";
  r.number(po, "length", c.design_pool.length);
  r.number(po, "interaction_order", c.design_pool.interaction_order);
  r.number(po, "interaction_scale", c.design_pool.interaction_scale);
  double noise = c.mode == ExperimentMode::kDesign ? c.design_pool.noise_scale
                                                   : c.regression_pool.noise_scale;
  r.number(po, "noise_scale", noise);
  c.design_pool.noise_scale = noise;
  c.regression_pool.noise_scale = noise;
  std::uint64_t pool_seed = c.mode == ExperimentMode::kDesign ? c.design_pool.seed
                                                              : c.regression_pool.seed;
  r.number(po, "seed", pool_seed);
  c.design_pool.seed = pool_seed;
  c.regression_pool.seed = pool_seed;
  r.number(po, "size", c.regression_pool.size);
  r.number(po, "dimension", c.regression_pool.dimension);
  r.number(po, "feature_scale", c.regression_pool.feature_scale);
  r.number(po, "tail_dof", c.regression_pool.tail_dof);
  r.number(po, "nonlinearity", c.regression_pool.nonlinearity);
  r.number(po, "holdout", c.holdout);

  r.number("model", "ridge_regularization", c.ridge_regularization);
  r.number("model", "gp_sigma0", c.kernel.sigma0);
  r.number("model", "gp_noise_variance", c.kernel.noise_variance);
  r.number("full_cp", "grid_size", c.grid_size);
  r.number("weights", "max_operations", c.max_operations);
  r.boolean("output", "wall_time", c.wall_time);
  r.reject_unknown();

  try {
    c.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(fmt::format("config: {}", e.what()));
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("config: cannot read '{}'", path));
  return parse_config(in);
}

std::string canonical_config(const ExperimentConfig& c) {
  std::vector<std::string> depths;
  for (std::size_t d : c.depths) depths.push_back(std::to_string(d));
  std::map<std::string, std::string> fields{
      {"experiment.mode", name_of(kModes, c.mode)},
      {"experiment.cp", name_of(kCp, c.cp)},
      {"experiment.predictor", name_of(kPredictors, c.predictor)},
      {"experiment.methods", join(c.methods)},
      {"experiment.depths", join(depths)},
      {"experiment.alpha", format_real(c.alpha)},
      {"experiment.n_train", std::to_string(c.n_train)},
      {"experiment.n_cal", std::to_string(c.n_cal)},
      {"experiment.lambda", format_real(c.lambda)},
      {"experiment.T", std::to_string(c.steps)},
      {"experiment.aci_step", format_real(c.aci_step)},
      {"experiment.cal_assignment_prob", format_real(c.cal_assignment_prob)},
      {"experiment.gamma_init_bias", format_real(c.gamma_init_bias)},
      {"experiment.bounded", c.bounded ? "true" : "false"},
      {"experiment.split_conditioning", name_of(kConditioning, c.split_conditioning)},
      {"experiment.conditioning_labels", name_of(kLabels, c.conditioning_labels)},
      {"experiment.seeds", fmt::format("{}..{}", c.seed_begin, c.seed_end)},
      {"pool.length", std::to_string(c.design_pool.length)},
      {"pool.interaction_order", std::to_string(c.design_pool.interaction_order)},
      {"pool.interaction_scale", format_real(c.design_pool.interaction_scale)},
      {"pool.noise_scale", format_real(c.design_pool.noise_scale)},
      {"pool.seed", std::to_string(c.design_pool.seed)},
      {"pool.size", std::to_string(c.regression_pool.size)},
      {"pool.dimension", std::to_string(c.regression_pool.dimension)},
      {"pool.feature_scale", format_real(c.regression_pool.feature_scale)},
      {"pool.nonlinearity", format_real(c.regression_pool.nonlinearity)},
      {"pool.tail_dof", format_real(c.regression_pool.tail_dof)},
      {"pool.holdout", std::to_string(c.holdout)},
      {"model.ridge_regularization", format_real(c.ridge_regularization)},
      {"model.gp_sigma0", format_real(c.kernel.sigma0)},
      {"model.gp_noise_variance", format_real(c.kernel.noise_variance)},
      {"full_cp.grid_size", std::to_string(c.grid_size)},
      {"weights.max_operations", format_real(c.max_operations)},
      {"output.wall_time", c.wall_time ? "true" : "false"},
  };
  std::string out;
  for (const auto& [k, v] : fields) out += k + "=" + v + "\n";
  return out;
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_config(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace mfcs
