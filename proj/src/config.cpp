#include "vjlp/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "vjlp/io.hpp"
#include "vjlp/oracles.hpp"

namespace vjlp {

namespace {

std::string_view trim(std::string_view s)
{
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view key, std::string_view text)
{
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ContractViolation("config key '" + std::string(key) + "': not a number: '" + std::string(text) + "'");
  return value;
}

std::uint64_t parse_uint(std::string_view key, std::string_view text)
{
  std::uint64_t value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ContractViolation("config key '" + std::string(key) + "': not a nonnegative integer: '" +
                            std::string(text) + "'");
  return value;
}

std::vector<std::string_view> split_list(std::string_view text)
{
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!piece.empty()) parts.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return parts;
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F&& fmt)
{
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) s += ',';
    s += fmt(items[i]);
  }
  return s;
}

} // namespace

ActivationD parse_activation(std::string_view text)
{
  text = trim(text);
  if (text == "relu") return ActivationD::relu();
  if (text == "softplus") return ActivationD::softplus(1.0);
  if (text.starts_with("softplus:")) return ActivationD::softplus(parse_double("activation", text.substr(9)));
  throw ContractViolation("activation must be 'relu' or 'softplus:a', got '" + std::string(text) + "'");
}

std::string format_activation(const ActivationD& act)
{
  return act.kind == ActivationKind::kRelu ? "relu" : "softplus:" + format_double(act.scale);
}

void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value)
{
  key = trim(key);
  value = trim(value);
  if (key == "preset") cfg.preset = value;
  else if (key == "c") cfg.params.c = parse_double(key, value);
  else if (key == "epsilon") cfg.params.epsilon = parse_double(key, value);
  else if (key == "box") cfg.params.box = parse_double(key, value);
  else if (key == "gamma") cfg.gamma = parse_double(key, value);
  else if (key == "rho") cfg.rho = parse_double(key, value);
  else if (key == "delta") cfg.delta = parse_double(key, value);
  else if (key == "steps") cfg.steps = parse_uint(key, value);
  else if (key == "seed") cfg.seed = parse_uint(key, value);
  else if (key == "activation") cfg.activation = format_activation(parse_activation(value));
  else if (key == "observables") {
    cfg.observables.clear();
    for (auto o : split_list(value)) cfg.observables.emplace_back(o);
  } else if (key == "out") cfg.out = value;
  else if (key == "workers") cfg.workers = static_cast<int>(parse_uint(key, value));
  else if (key == "deltas") {
    cfg.deltas.clear();
    for (auto d : split_list(value)) cfg.deltas.push_back(parse_double(key, d));
  } else if (key == "replicas") cfg.replicas = static_cast<int>(parse_uint(key, value));
  else if (key == "burn_in") cfg.burn_in = parse_double(key, value);
  else if (key == "stride") cfg.stride = parse_uint(key, value);
  else if (key == "time") cfg.time = parse_double(key, value);
  else if (key == "horizon") cfg.horizon = parse_double(key, value);
  else if (key == "init") cfg.init = value;
  else if (key == "scheme") cfg.scheme = value;
  else throw ContractViolation("unknown config key '" + std::string(key) + "'");
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base)
{
  ExperimentConfig cfg = std::move(base);
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ContractViolation("config line " + std::to_string(line_no) + ": expected key = value");
    apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base)
{
  std::ifstream f(path);
  if (!f) throw ContractViolation("cannot read config file " + path.string());
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_config(buf.str(), std::move(base));
}

std::string serialize_config(const ExperimentConfig& cfg)
{
  std::ostringstream out;
  out << "preset = " << cfg.preset << '\n'
      << "c = " << format_double(cfg.params.c) << '\n'
      << "epsilon = " << format_double(cfg.params.epsilon) << '\n'
      << "box = " << format_double(cfg.params.box) << '\n'
      << "gamma = " << format_double(cfg.gamma) << '\n'
      << "rho = " << format_double(cfg.rho) << '\n'
      << "delta = " << format_double(cfg.delta) << '\n'
      << "steps = " << cfg.steps << '\n'
      << "seed = " << cfg.seed << '\n'
      << "activation = " << cfg.activation << '\n'
      << "observables = " << join(cfg.observables, [](const std::string& s) { return s; }) << '\n'
      << "out = " << cfg.out << '\n'
      << "workers = " << cfg.workers << '\n'
      << "deltas = " << join(cfg.deltas, [](double d) { return format_double(d); }) << '\n'
      << "replicas = " << cfg.replicas << '\n'
      << "burn_in = " << format_double(cfg.burn_in) << '\n'
      << "stride = " << cfg.stride << '\n'
      << "time = " << format_double(cfg.time) << '\n'
      << "horizon = " << format_double(cfg.horizon) << '\n'
      << "init = " << cfg.init << '\n'
      << "scheme = " << cfg.scheme << '\n';
  return out.str();
}

void validate_config(const ExperimentConfig& cfg)
{
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), cfg.preset) == names.end())
    throw ContractViolation("unknown preset '" + cfg.preset + "'");
  for (const auto& o : cfg.observables) make_observable(o);
  parse_activation(cfg.activation);
  scheme_config(cfg).check();
  if (!(cfg.delta > 0.0)) throw ContractViolation("delta must be positive");
  for (std::size_t i = 0; i < cfg.deltas.size(); ++i) {
    if (!(cfg.deltas[i] > 0.0)) throw ContractViolation("delta grid entries must be positive");
    if (i > 0 && !(cfg.deltas[i] < cfg.deltas[i - 1]))
      throw ContractViolation("delta grid must be sorted strictly descending");
  }
  if (cfg.workers < 1) throw ContractViolation("workers must be >= 1");
  if (cfg.replicas < 1) throw ContractViolation("replicas must be >= 1");
  if (cfg.stride < 1) throw ContractViolation("stride must be >= 1");
  if (!(cfg.burn_in >= 0.0)) throw ContractViolation("burn_in must be nonnegative");
  if (!(cfg.time > 0.0) || !(cfg.horizon > 0.0)) throw ContractViolation("time and horizon must be positive");
  if (cfg.init != "gibbs" && cfg.init != "zero") throw ContractViolation("init must be 'gibbs' or 'zero'");
  if (cfg.scheme != "bjaoajb" && cfg.scheme != "baoab") throw ContractViolation("scheme must be 'bjaoajb' or 'baoab'");
}

SchemeConfigD scheme_config(const ExperimentConfig& cfg)
{
  SchemeConfigD s;
  s.gamma = cfg.gamma;
  s.rho = cfg.rho;
  s.delta = cfg.delta;
  s.n_steps = cfg.steps;
  s.seed = cfg.seed;
  s.activation = parse_activation(cfg.activation);
  return s;
}

Preset preset_from(const ExperimentConfig& cfg) { return make_preset(cfg.preset, cfg.params); }

} // namespace vjlp
