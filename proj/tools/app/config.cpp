#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "potfield/csv.hpp"
#include "potfield/error.hpp"
#include "potfield/time_util.hpp"

namespace potfield::app {
namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw Error(ErrorCode::InvalidArgument, "invalid value '" + value + "' for '" + key + "'");
}

double to_double(const std::string& key, const std::string& v) {
  const auto d = csv::parse_double(v);
  if (!d || !std::isfinite(*d)) bad_value(key, v);
  return *d;
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, v);
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v);
}

std::string fmt(double v) { return csv::format(v); }

std::string join(const std::vector<std::string>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + xs[i];
  return out;
}

struct Field {
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define POTFIELD_STRING(KEY, MEMBER) \
  Field { KEY, [](const RunConfig& c) { return c.MEMBER; }, [](RunConfig& c, const std::string& v) { c.MEMBER = v; } }
#define POTFIELD_DOUBLE(KEY, MEMBER)                                                          \
  Field {                                                                                     \
    KEY, [](const RunConfig& c) { return fmt(c.MEMBER); },                                    \
        [](RunConfig& c, const std::string& v) { c.MEMBER = to_double(KEY, v); }              \
  }
#define POTFIELD_INT(KEY, MEMBER)                                                                        \
  Field {                                                                                                \
    KEY, [](const RunConfig& c) { return std::to_string(c.MEMBER); },                                    \
        [](RunConfig& c, const std::string& v) { c.MEMBER = static_cast<decltype(c.MEMBER)>(to_int(KEY, v)); } \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"assets", [](const RunConfig& c) { return join(c.assets); },
            [](RunConfig& c, const std::string& v) {
              c.assets.clear();
              for (const auto& a : csv::split(v)) {
                const auto name = csv::trim(a);
                if (!name.empty()) c.assets.emplace_back(name);
              }
            }},
      POTFIELD_STRING("trajectory", trajectory),
      POTFIELD_STRING("column.timestamp", schema.timestamp),
      POTFIELD_STRING("column.open", schema.open),
      POTFIELD_STRING("column.high", schema.high),
      POTFIELD_STRING("column.low", schema.low),
      POTFIELD_STRING("column.close", schema.close),
      POTFIELD_STRING("column.volume", schema.volume),
      Field{"price_field", [](const RunConfig& c) { return c.price_field; },
            [](RunConfig& c, const std::string& v) {
              if (!parse_price_field(v)) bad_value("price_field", v);
              c.price_field = v;
            }},
      POTFIELD_INT("resample", resample),
      POTFIELD_STRING("window.start", window_start),
      POTFIELD_STRING("window.end", window_end),
      POTFIELD_DOUBLE("subwindow", subwindow),
      Field{"normalize", [](const RunConfig& c) { return std::string(c.normalize ? "true" : "false"); },
            [](RunConfig& c, const std::string& v) { c.normalize = to_bool("normalize", v); }},
      POTFIELD_INT("gp.starts", gp_starts),
      POTFIELD_INT("gp.seed", gp_seed),
      POTFIELD_DOUBLE("gp.bound_low", gp_bound_low),
      POTFIELD_DOUBLE("gp.bound_high", gp_bound_high),
      POTFIELD_INT("gp.max_iter", gp_max_iter),
      POTFIELD_INT("gp.max_points", gp_max_points),
      POTFIELD_INT("grid.points_per_axis", grid_points_per_axis),
      POTFIELD_DOUBLE("grid.padding", grid_padding),
      POTFIELD_INT("grid.qmc_points", grid_qmc_points),
      POTFIELD_DOUBLE("kl.prior_var", kl_prior_var),
      POTFIELD_DOUBLE("lyapunov.epsilon_percentile", lyapunov_epsilon_percentile),
      POTFIELD_DOUBLE("lyapunov.epsilon", lyapunov_epsilon),
      POTFIELD_INT("lyapunov.k", lyapunov_k),
      POTFIELD_DOUBLE("wavelet.omega0", wavelet_omega0),
      POTFIELD_INT("wavelet.voices", wavelet_voices),
      POTFIELD_DOUBLE("wavelet.scale_window", wavelet_scale_window),
      POTFIELD_DOUBLE("wavelet.time_window", wavelet_time_window),
      POTFIELD_INT("convergence.grace", convergence_grace),
      POTFIELD_STRING("out", out),
  };
  return table;
}

#undef POTFIELD_STRING
#undef POTFIELD_DOUBLE
#undef POTFIELD_INT

std::filesystem::path resolve(const RunConfig& cfg, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : cfg.base_dir / path;
}

std::optional<double> parse_instant(const std::string& text) {
  if (text.empty()) return std::nullopt;
  if (auto d = csv::parse_double(text)) return *d;
  if (auto t = parse_timestamp(text)) return static_cast<double>(*t);
  throw Error(ErrorCode::InvalidArgument, "cannot parse time '" + text + "'");
}

}  // namespace

PipelineSettings RunConfig::pipeline() const {
  PipelineSettings s;
  s.normalize = normalize;
  s.train.starts = gp_starts;
  s.train.seed = gp_seed;
  s.train.bound_low = gp_bound_low;
  s.train.bound_high = gp_bound_high;
  s.train.max_iterations = gp_max_iter;
  s.train.max_points = gp_max_points;
  s.grid.points_per_axis = grid_points_per_axis;
  s.grid.padding = grid_padding;
  s.grid.qmc_points = grid_qmc_points;
  s.kl_prior_var = kl_prior_var;
  s.convergence_grace = convergence_grace;
  return s;
}

CoherenceSettings RunConfig::coherence() const {
  CoherenceSettings s;
  s.omega0 = wavelet_omega0;
  s.voices = wavelet_voices;
  s.scale_window_octaves = wavelet_scale_window;
  s.time_window_factor = wavelet_time_window;
  return s;
}

std::string defaults_text() {
  const RunConfig cfg;
  std::ostringstream out;
  for (const auto& f : fields()) out << f.key << " = " << f.get(cfg) << '\n';
  out << "# input.<ASSET> = path/to/ohlcv.csv   (one line per asset)\n";
  return out.str();
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key.rfind("input.", 0) == 0 && key.size() > 6) {
    const auto asset = key.substr(6);
    auto it = std::find_if(cfg.inputs.begin(), cfg.inputs.end(), [&](const auto& kv) { return kv.first == asset; });
    if (it != cfg.inputs.end()) {
      it->second = value;
    } else {
      cfg.inputs.emplace_back(asset, value);
    }
    return;
  }
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(cfg, value);
      return;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
}

void apply_config_text(RunConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = csv::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidArgument, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    apply_setting(cfg, std::string(csv::trim(body.substr(0, eq))), std::string(csv::trim(body.substr(eq + 1))));
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  RunConfig cfg;
  cfg.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  apply_config_text(cfg, buf.str());
  return cfg;
}

void validate(const RunConfig& cfg) {
  const auto start = parse_instant(cfg.window_start);
  const auto end = parse_instant(cfg.window_end);
  if (start && end && !(*start < *end)) throw Error(ErrorCode::InvalidArgument, "window.start must precede window.end");
  if (cfg.resample <= 0) throw Error(ErrorCode::InvalidArgument, "resample must be positive");
  if (!(cfg.subwindow > 0.0)) throw Error(ErrorCode::InvalidArgument, "subwindow must be positive");
  if (cfg.gp_starts < 1) throw Error(ErrorCode::InvalidArgument, "gp.starts must be >= 1");
  if (!(cfg.gp_bound_low > 0.0) || !(cfg.gp_bound_low < cfg.gp_bound_high)) {
    throw Error(ErrorCode::InvalidArgument, "gp bounds must satisfy 0 < bound_low < bound_high");
  }
  if (cfg.gp_max_iter < 1) throw Error(ErrorCode::InvalidArgument, "gp.max_iter must be >= 1");
  if (cfg.gp_max_points < 0 || cfg.grid_points_per_axis < 0 || cfg.grid_qmc_points < 1) {
    throw Error(ErrorCode::InvalidArgument, "grid and thinning sizes must be non-negative");
  }
  if (!(cfg.lyapunov_epsilon_percentile > 0.0 && cfg.lyapunov_epsilon_percentile <= 100.0)) {
    throw Error(ErrorCode::InvalidArgument, "lyapunov.epsilon_percentile must be in (0, 100]");
  }
  if (cfg.lyapunov_epsilon < 0.0 || cfg.lyapunov_k < 0) {
    throw Error(ErrorCode::InvalidArgument, "lyapunov.epsilon and lyapunov.k must be >= 0");
  }
  if (cfg.wavelet_voices < 1 || !(cfg.wavelet_omega0 > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "wavelet settings must be positive");
  }
  if (cfg.convergence_grace < 0) throw Error(ErrorCode::InvalidArgument, "convergence.grace must be >= 0");
}

nlohmann::ordered_json to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["schema_version"] = "1";
  auto& settings = j["settings"];
  for (const auto& f : fields()) {
    if (std::string_view(f.key) == "out") continue;
    settings[f.key] = f.get(cfg);
  }
  auto& inputs = j["inputs"];
  inputs = nlohmann::ordered_json::object();
  for (const auto& [asset, path] : cfg.inputs) inputs[asset] = path;
  return j;
}

Trajectory load_trajectory(const RunConfig& cfg) {
  Trajectory traj;
  if (!cfg.trajectory.empty()) {
    const auto full = read_trajectory_csv(resolve(cfg, cfg.trajectory).string());
    if (cfg.assets.empty()) {
      traj = full;
    } else {
      traj = full;
      traj.assets = cfg.assets;
      traj.states.resize(full.size(), static_cast<Eigen::Index>(cfg.assets.size()));
      for (std::size_t c = 0; c < cfg.assets.size(); ++c) {
        const auto it = std::find(full.assets.begin(), full.assets.end(), cfg.assets[c]);
        if (it == full.assets.end()) {
          throw Error(ErrorCode::UnknownAsset, "asset '" + cfg.assets[c] + "' not in trajectory file");
        }
        traj.states.col(static_cast<Eigen::Index>(c)) = full.states.col(it - full.assets.begin());
      }
    }
  } else {
    if (cfg.inputs.empty()) throw Error(ErrorCode::InvalidArgument, "config names no input files");
    std::vector<std::string> order = cfg.assets;
    if (order.empty()) {
      for (const auto& kv : cfg.inputs) order.push_back(kv.first);
    }
    std::vector<AssetSeries> series;
    for (const auto& asset : order) {
      const auto it = std::find_if(cfg.inputs.begin(), cfg.inputs.end(), [&](const auto& kv) { return kv.first == asset; });
      if (it == cfg.inputs.end()) throw Error(ErrorCode::UnknownAsset, "no input.'" + asset + "' configured");
      series.push_back({asset, parse_csv(resolve(cfg, it->second).string(), cfg.schema)});
    }
    traj = build_trajectory(series, *parse_price_field(cfg.price_field), cfg.resample);
  }

  const auto start = parse_instant(cfg.window_start);
  const auto end = parse_instant(cfg.window_end);
  Eigen::Index lo = 0, hi = traj.size();
  while (lo < hi && start && traj.times[static_cast<std::size_t>(lo)] < *start) ++lo;
  while (hi > lo && end && traj.times[static_cast<std::size_t>(hi - 1)] > *end) --hi;
  if (hi - lo < 3) throw Error(ErrorCode::TooShort, "fewer than 3 samples inside the configured window");
  return traj.slice(lo, hi);
}

}  // namespace potfield::app
