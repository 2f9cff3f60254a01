#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "scs/app.hpp"

namespace scs::app {

namespace {

struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename V>
V parse_value(const std::string& text);

template <>
int parse_value<int>(const std::string& text) {
  std::size_t used = 0;
  const long v = std::stol(text, &used);
  if (used != text.size()) throw std::invalid_argument("trailing characters");
  return static_cast<int>(v);
}

template <>
std::uint64_t parse_value<std::uint64_t>(const std::string& text) {
  if (!text.empty() && text[0] == '-') throw std::invalid_argument("negative");
  std::size_t used = 0;
  const auto v = std::stoull(text, &used);
  if (used != text.size()) throw std::invalid_argument("trailing characters");
  return v;
}

template <>
double parse_value<double>(const std::string& text) {
  std::size_t used = 0;
  const double v = std::stod(text, &used);
  if (used != text.size()) throw std::invalid_argument("trailing characters");
  return v;
}

template <>
bool parse_value<bool>(const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw std::invalid_argument("expected true or false");
}

template <>
std::string parse_value<std::string>(const std::string& text) {
  return text;
}

std::string show(int v) { return std::to_string(v); }
std::string show(std::uint64_t v) { return std::to_string(v); }
std::string show(bool v) { return v ? "true" : "false"; }
std::string show(const std::string& v) { return v; }
std::string show(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Builds a field from an accessor returning a reference into the config.
template <typename Access>
Field make_field(Access access) {
  using V = std::remove_reference_t<decltype(access(std::declval<RunConfig&>()))>;
  return {[access](RunConfig& c, const std::string& text) { access(c) = parse_value<V>(text); },
          [access](const RunConfig& c) { return show(access(const_cast<RunConfig&>(c))); }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    t["model.base_channels"] = make_field([](RunConfig& c) -> int& { return c.train.model.base_channels; });
    t["model.deep_channels"] = make_field([](RunConfig& c) -> int& { return c.train.model.deep_channels; });
    t["model.attn_qk_divisor"] = make_field([](RunConfig& c) -> int& { return c.train.model.attn_qk_divisor; });
    t["model.pyramid_levels"] = make_field([](RunConfig& c) -> int& { return c.train.model.pyramid_levels; });
    t["model.sr_blocks"] = make_field([](RunConfig& c) -> int& { return c.train.model.sr_blocks; });
    t["model.cpm_hidden"] = make_field([](RunConfig& c) -> int& { return c.train.model.cpm_hidden; });
    t["model.cpm_layers"] = make_field([](RunConfig& c) -> int& { return c.train.model.cpm_layers; });
    t["model.disc_base"] = make_field([](RunConfig& c) -> int& { return c.train.model.disc_base; });
    t["model.slope"] = make_field([](RunConfig& c) -> double& { return c.train.model.slope; });

    t["loss.content"] = make_field([](RunConfig& c) -> double& { return c.train.loss.content; });
    t["loss.perceptual"] = make_field([](RunConfig& c) -> double& { return c.train.loss.perceptual; });
    t["loss.adversarial"] = make_field([](RunConfig& c) -> double& { return c.train.loss.adversarial; });
    for (int l = 0; l < 5; ++l) {
      t["loss.layer" + std::to_string(l + 1)] =
          make_field([l](RunConfig& c) -> double& { return c.train.loss.layers[static_cast<std::size_t>(l)]; });
    }

    t["optim.lr"] = make_field([](RunConfig& c) -> double& { return c.train.optim.lr; });
    t["optim.beta1"] = make_field([](RunConfig& c) -> double& { return c.train.optim.beta1; });
    t["optim.beta2"] = make_field([](RunConfig& c) -> double& { return c.train.optim.beta2; });
    t["optim.eps"] = make_field([](RunConfig& c) -> double& { return c.train.optim.eps; });
    t["optim.weight_decay"] = make_field([](RunConfig& c) -> double& { return c.train.optim.weight_decay; });

    t["data.path"] = make_field([](RunConfig& c) -> std::string& { return c.data_path; });
    t["data.seed"] = make_field([](RunConfig& c) -> std::uint64_t& { return c.data_seed; });
    t["data.size"] = make_field([](RunConfig& c) -> int& { return c.data_size; });
    t["data.image_size"] = make_field([](RunConfig& c) -> int& { return c.data_image_size; });

    t["train.batch_size"] = make_field([](RunConfig& c) -> int& { return c.train.batch_size; });
    t["train.epochs"] = make_field([](RunConfig& c) -> int& { return c.train.epochs; });
    t["train.max_steps"] = make_field([](RunConfig& c) -> int& { return c.train.max_steps; });
    t["train.scale"] = make_field([](RunConfig& c) -> double& { return c.train.scale; });
    t["train.seed"] = make_field([](RunConfig& c) -> std::uint64_t& { return c.train.seed; });
    t["train.symmetric_d"] = make_field([](RunConfig& c) -> bool& { return c.train.symmetric_d; });
    t["train.perceptual_seed"] = make_field([](RunConfig& c) -> std::uint64_t& { return c.train.perceptual_seed; });
    t["train.checkpoint_every"] = make_field([](RunConfig& c) -> int& { return c.checkpoint_every; });
    t["train.schedule"] = {
        [](RunConfig& c, const std::string& v) { c.train.schedule = training::parse_schedule(v); },
        [](const RunConfig& c) { return std::string(training::to_string(c.train.schedule)); }};

    t["augment.alpha_px"] = make_field([](RunConfig& c) -> double& { return c.train.augment.alpha_px; });
    t["augment.sigma_px"] = make_field([](RunConfig& c) -> double& { return c.train.augment.sigma_px; });
    t["augment.reference_width"] = make_field([](RunConfig& c) -> double& { return c.train.augment.reference_width; });
    t["augment.flip_probability"] =
        make_field([](RunConfig& c) -> double& { return c.train.augment.flip_probability; });

    t["mode"] = {[](RunConfig& c, const std::string& v) { c.mode = model::parse_mode(v); },
                 [](const RunConfig& c) { return std::string(model::to_string(c.mode)); }};
    return t;
  }();
  return table;
}

}  // namespace

std::vector<std::string> run_config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, f] : fields()) keys.push_back(k);
  return keys;
}

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
  RunConfig config;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(number);
    if (eq == std::string::npos) throw UsageError(where + ": expected key = value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    const auto it = fields().find(key);
    if (it == fields().end()) throw UsageError(where + ": unknown config key '" + key + "'");
    try {
      it->second.set(config, value);
    } catch (const std::exception& e) {
      throw UsageError(where + ": bad value '" + value + "' for key '" + key + "' (" + e.what() + ")");
    }
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str(), path.string());
}

std::string dump_run_config(const RunConfig& config) {
  std::string out;
  for (const auto& [k, f] : fields()) out += k + " = " + f.get(config) + "\n";
  return out;
}

void apply_env_overrides(RunConfig& config) {
  if (const char* s = std::getenv("SCS_SEED"); s && *s) {
    try {
      config.train.seed = parse_value<std::uint64_t>(s);
    } catch (const std::exception&) {
      throw UsageError(std::string("SCS_SEED must be a non-negative integer, got '") + s + "'");
    }
  }
}

}  // namespace scs::app
