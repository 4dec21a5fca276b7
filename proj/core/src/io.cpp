#include "smurf/io.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "smurf/errors.hpp"
#include "smurf/version.hpp"

namespace smurf {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw io_error("read failure on " + path.string());
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw io_error("write failure on " + path.string());
}

json parse_json(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded())
    throw std::invalid_argument("malformed JSON in " + what);
  return j;
}

void require_keys(const json& j, const std::string& what,
                  std::initializer_list<const char*> allowed) {
  if (!j.is_object())
    throw std::invalid_argument(what + ": expected a JSON object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw std::invalid_argument(what + ": unknown key '" + item.key() + "'");
  }
}

double get_num(const json& j, const char* key, const std::string& what) {
  if (!j.contains(key) || !j.at(key).is_number())
    throw std::invalid_argument(what + ": missing or non-numeric '" + key +
                                "'");
  return j.at(key).get<double>();
}

int get_int(const json& j, const char* key, const std::string& what) {
  if (!j.contains(key) || !j.at(key).is_number_integer())
    throw std::invalid_argument(what + ": missing or non-integer '" + key +
                                "'");
  return j.at(key).get<int>();
}

std::vector<std::uint8_t> get_u8_array(const json& j, const char* key,
                                       const std::string& what) {
  if (!j.contains(key) || !j.at(key).is_array())
    throw std::invalid_argument(what + ": missing or non-array '" + key + "'");
  std::vector<std::uint8_t> out;
  out.reserve(j.at(key).size());
  for (const auto& v : j.at(key)) {
    if (!v.is_number_integer())
      throw std::invalid_argument(what + ": non-integer entry in '" + key +
                                  "'");
    const long long x = v.get<long long>();
    if (x < 0 || x > 255)
      throw std::invalid_argument(what + ": entry in '" + key +
                                  "' outside byte range");
    out.push_back(static_cast<std::uint8_t>(x));
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// R-row by K-column bare matrix, one trial per line.
void write_matrix_csv(const std::vector<double>& m, int K, int R,
                      const fs::path& path) {
  std::string text;
  text.reserve(static_cast<std::size_t>(K) * R * 8);
  for (int r = 0; r < R; ++r) {
    for (int k = 0; k < K; ++k) {
      if (k) text += ',';
      text += fmt(m[static_cast<std::size_t>(r) * K + k]);
    }
    text += '\n';
  }
  write_text(path, text);
}

void write_effect_csv(const EffectQuantiles& q, const fs::path& path) {
  std::string text = "index,q025,q25,median,q75,q975\n";
  for (std::size_t j = 0; j < q.median.size(); ++j) {
    text += std::to_string(j + 1);
    text += ',';
    text += fmt(q.q025[j]);
    text += ',';
    text += fmt(q.q25[j]);
    text += ',';
    text += fmt(q.median[j]);
    text += ',';
    text += fmt(q.q75[j]);
    text += ',';
    text += fmt(q.q975[j]);
    text += '\n';
  }
  write_text(path, text);
}

json params_to_json(const ModelParams& p) {
  return {{"rho_x", p.rho_x},           {"rho_z", p.rho_z},
          {"alpha_x", p.alpha_x},       {"alpha_z", p.alpha_z},
          {"sigma2_eps", p.sigma2_eps}, {"sigma2_del", p.sigma2_del},
          {"estimate_alpha", p.estimate_alpha}};
}

ModelParams params_from_json(const json& j, const std::string& what) {
  require_keys(j, what,
               {"rho_x", "rho_z", "alpha_x", "alpha_z", "sigma2_eps",
                "sigma2_del", "estimate_alpha"});
  ModelParams p;
  p.rho_x = get_num(j, "rho_x", what);
  p.rho_z = get_num(j, "rho_z", what);
  p.alpha_x = get_num(j, "alpha_x", what);
  p.alpha_z = get_num(j, "alpha_z", what);
  p.sigma2_eps = get_num(j, "sigma2_eps", what);
  p.sigma2_del = get_num(j, "sigma2_del", what);
  if (!j.contains("estimate_alpha") || !j.at("estimate_alpha").is_boolean())
    throw std::invalid_argument(what + ": missing boolean 'estimate_alpha'");
  p.estimate_alpha = j.at("estimate_alpha").get<bool>();
  return p;
}

std::uint64_t get_seed(const json& j, const std::string& what) {
  if (!j.contains("seed")) return 0;
  if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer())
    throw std::invalid_argument(what + ": 'seed' must be an integer");
  return j.at("seed").get<std::uint64_t>();
}

}  // namespace

Raster load_raster_json(const fs::path& path) {
  const std::string what = "raster " + path.string();
  json j = parse_json(read_text(path), what);
  require_keys(j, what,
               {"delta_s", "cue_bin", "cond_start_trial", "u_x", "u_z",
                "bins"});

  Raster raster;
  raster.delta_s = get_num(j, "delta_s", what);
  raster.cue_bin = get_int(j, "cue_bin", what);
  raster.cond_start_trial = get_int(j, "cond_start_trial", what);
  raster.u_x = get_u8_array(j, "u_x", what);
  raster.u_z = get_u8_array(j, "u_z", what);

  if (!j.contains("bins") || !j.at("bins").is_array() || j.at("bins").empty())
    throw std::invalid_argument(what + ": 'bins' must be a non-empty array");
  const auto& rows = j.at("bins");
  raster.n_trials = static_cast<int>(rows.size());
  std::size_t K = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!rows[r].is_array())
      throw std::invalid_argument(what + ": 'bins' rows must be arrays");
    if (r == 0) {
      K = rows[r].size();
      if (K == 0)
        throw std::invalid_argument(what + ": empty first trial in 'bins'");
      raster.n_bins = static_cast<int>(K);
      raster.bins.reserve(K * rows.size());
    } else if (rows[r].size() != K) {
      throw std::invalid_argument(what + ": ragged 'bins' rows");
    }
    for (const auto& v : rows[r]) {
      if (!v.is_number_integer())
        throw std::invalid_argument(what + ": non-integer bin entry");
      const long long x = v.get<long long>();
      if (x < 0 || x > 255)
        throw std::invalid_argument(what + ": bin entry outside byte range");
      raster.bins.push_back(static_cast<std::uint8_t>(x));
    }
  }
  return raster;
}

void save_raster_json(const Raster& raster, const fs::path& path) {
  json rows = json::array();
  for (int r = 1; r <= raster.n_trials; ++r) {
    json row = json::array();
    for (int k = 1; k <= raster.n_bins; ++k) row.push_back(raster.bin(k, r));
    rows.push_back(std::move(row));
  }
  json j{{"delta_s", raster.delta_s},
         {"cue_bin", raster.cue_bin},
         {"cond_start_trial", raster.cond_start_trial},
         {"u_x", raster.u_x},
         {"u_z", raster.u_z},
         {"bins", std::move(rows)}};
  write_text(path, j.dump(1) + "\n");
}

Raster load_raster_csv(const fs::path& path, double delta_s, int cue_bin,
                       int cond_start_trial) {
  const std::string text = read_text(path);
  const std::string what = "raster csv " + path.string();

  Raster raster;
  raster.delta_s = delta_s;
  raster.cue_bin = cue_bin;
  raster.cond_start_trial = cond_start_trial;

  std::istringstream lines(text);
  std::string line;
  std::size_t K = 0;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string cell;
    std::size_t count = 0;
    while (std::getline(cells, cell, ',')) {
      char* end = nullptr;
      const long v = std::strtol(cell.c_str(), &end, 10);
      if (end == cell.c_str() || v < 0 || v > 255)
        throw std::invalid_argument(what + ": bad cell '" + cell + "'");
      raster.bins.push_back(static_cast<std::uint8_t>(v));
      ++count;
    }
    if (K == 0)
      K = count;
    else if (count != K)
      throw std::invalid_argument(what + ": ragged rows");
    ++raster.n_trials;
  }
  if (K == 0) throw std::invalid_argument(what + ": no data rows");
  raster.n_bins = static_cast<int>(K);

  raster.u_x.resize(raster.n_bins);
  for (int k = 1; k <= raster.n_bins; ++k)
    raster.u_x[k - 1] = k >= cue_bin && cue_bin >= 1;
  raster.u_z.resize(raster.n_trials);
  for (int r = 1; r <= raster.n_trials; ++r)
    raster.u_z[r - 1] = r >= cond_start_trial && cond_start_trial >= 1;
  return raster;
}

void save_raster_csv(const Raster& raster, const fs::path& path) {
  std::string text;
  for (int r = 1; r <= raster.n_trials; ++r) {
    for (int k = 1; k <= raster.n_bins; ++k) {
      if (k > 1) text += ',';
      text += std::to_string(raster.bin(k, r));
    }
    text += '\n';
  }
  write_text(path, text);
}

SimConfig load_sim_config(const fs::path& path) {
  const std::string what = "sim config " + path.string();
  json j = parse_json(read_text(path), what);
  require_keys(j, what,
               {"n_trials", "trial_len_s", "delta_s", "cue_onset_s",
                "cond_start_trial", "baseline_rate_hz", "conditioned_rate_hz",
                "error_start_trial", "error_trial_count", "seed"});
  SimConfig cfg;
  if (j.contains("n_trials")) cfg.n_trials = get_int(j, "n_trials", what);
  if (j.contains("trial_len_s"))
    cfg.trial_len_s = get_num(j, "trial_len_s", what);
  if (j.contains("delta_s")) cfg.delta_s = get_num(j, "delta_s", what);
  if (j.contains("cue_onset_s"))
    cfg.cue_onset_s = get_num(j, "cue_onset_s", what);
  if (j.contains("cond_start_trial"))
    cfg.cond_start_trial = get_int(j, "cond_start_trial", what);
  if (j.contains("baseline_rate_hz"))
    cfg.baseline_rate_hz = get_num(j, "baseline_rate_hz", what);
  if (j.contains("conditioned_rate_hz"))
    cfg.conditioned_rate_hz = get_num(j, "conditioned_rate_hz", what);
  if (j.contains("error_start_trial"))
    cfg.error_start_trial = get_int(j, "error_start_trial", what);
  if (j.contains("error_trial_count"))
    cfg.error_trial_count = get_int(j, "error_trial_count", what);
  cfg.seed = get_seed(j, what);
  return cfg;
}

FitConfig load_fit_config(const fs::path& path) {
  const std::string what = "fit config " + path.string();
  json j = parse_json(read_text(path), what);
  require_keys(j, what,
               {"n_gibbs_per_iter", "burn_in", "max_em_iters", "conv_tol",
                "seed", "estimate_alpha", "rho_x", "rho_z"});
  FitConfig cfg;
  if (j.contains("n_gibbs_per_iter"))
    cfg.n_gibbs_per_iter = get_int(j, "n_gibbs_per_iter", what);
  if (j.contains("burn_in")) cfg.burn_in = get_int(j, "burn_in", what);
  if (j.contains("max_em_iters"))
    cfg.max_em_iters = get_int(j, "max_em_iters", what);
  if (j.contains("conv_tol")) cfg.conv_tol = get_num(j, "conv_tol", what);
  if (j.contains("estimate_alpha")) {
    if (!j.at("estimate_alpha").is_boolean())
      throw std::invalid_argument(what + ": 'estimate_alpha' must be boolean");
    cfg.estimate_alpha = j.at("estimate_alpha").get<bool>();
  }
  if (j.contains("rho_x")) cfg.rho_x = get_num(j, "rho_x", what);
  if (j.contains("rho_z")) cfg.rho_z = get_num(j, "rho_z", what);
  cfg.seed = get_seed(j, what);
  return cfg;
}

SweepConfig load_sweep_config(const fs::path& path) {
  const std::string what = "sweep config " + path.string();
  json j = parse_json(read_text(path), what);
  require_keys(j, what,
               {"base", "conditioned_rates_hz", "replicates", "fit",
                "threshold"});
  SweepConfig cfg;
  if (j.contains("base")) {
    json b = j.at("base");
    require_keys(b, what + ".base",
                 {"n_trials", "trial_len_s", "delta_s", "cue_onset_s",
                  "cond_start_trial", "baseline_rate_hz",
                  "conditioned_rate_hz", "error_start_trial",
                  "error_trial_count", "seed"});
    if (b.contains("n_trials"))
      cfg.base.n_trials = get_int(b, "n_trials", what);
    if (b.contains("trial_len_s"))
      cfg.base.trial_len_s = get_num(b, "trial_len_s", what);
    if (b.contains("delta_s")) cfg.base.delta_s = get_num(b, "delta_s", what);
    if (b.contains("cue_onset_s"))
      cfg.base.cue_onset_s = get_num(b, "cue_onset_s", what);
    if (b.contains("cond_start_trial"))
      cfg.base.cond_start_trial = get_int(b, "cond_start_trial", what);
    if (b.contains("baseline_rate_hz"))
      cfg.base.baseline_rate_hz = get_num(b, "baseline_rate_hz", what);
    if (b.contains("conditioned_rate_hz"))
      cfg.base.conditioned_rate_hz = get_num(b, "conditioned_rate_hz", what);
    if (b.contains("error_start_trial"))
      cfg.base.error_start_trial = get_int(b, "error_start_trial", what);
    if (b.contains("error_trial_count"))
      cfg.base.error_trial_count = get_int(b, "error_trial_count", what);
    cfg.base.seed = get_seed(b, what);
  }
  if (!j.contains("conditioned_rates_hz") ||
      !j.at("conditioned_rates_hz").is_array() ||
      j.at("conditioned_rates_hz").empty())
    throw std::invalid_argument(
        what + ": 'conditioned_rates_hz' must be a non-empty array");
  for (const auto& v : j.at("conditioned_rates_hz")) {
    if (!v.is_number())
      throw std::invalid_argument(what + ": non-numeric rate");
    cfg.conditioned_rates_hz.push_back(v.get<double>());
  }
  if (j.contains("replicates")) cfg.replicates = get_int(j, "replicates", what);
  if (j.contains("fit")) {
    json f = j.at("fit");
    require_keys(f, what + ".fit",
                 {"n_gibbs_per_iter", "burn_in", "max_em_iters", "conv_tol",
                  "seed", "estimate_alpha", "rho_x", "rho_z"});
    if (f.contains("n_gibbs_per_iter"))
      cfg.fit.n_gibbs_per_iter = get_int(f, "n_gibbs_per_iter", what);
    if (f.contains("burn_in")) cfg.fit.burn_in = get_int(f, "burn_in", what);
    if (f.contains("max_em_iters"))
      cfg.fit.max_em_iters = get_int(f, "max_em_iters", what);
    if (f.contains("conv_tol")) cfg.fit.conv_tol = get_num(f, "conv_tol", what);
    if (f.contains("estimate_alpha")) {
      if (!f.at("estimate_alpha").is_boolean())
        throw std::invalid_argument(what +
                                    ": 'estimate_alpha' must be boolean");
      cfg.fit.estimate_alpha = f.at("estimate_alpha").get<bool>();
    }
    if (f.contains("rho_x")) cfg.fit.rho_x = get_num(f, "rho_x", what);
    if (f.contains("rho_z")) cfg.fit.rho_z = get_num(f, "rho_z", what);
    cfg.fit.seed = get_seed(f, what);
  }
  if (j.contains("threshold")) cfg.threshold = get_num(j, "threshold", what);
  return cfg;
}

void save_fit_result(const FitResult& fit, const fs::path& json_path,
                     const std::string& sidecar_name) {
  json trace = json::array();
  for (const auto& t : fit.trace)
    trace.push_back({{"sigma2_eps", t.sigma2_eps},
                     {"sigma2_del", t.sigma2_del},
                     {"alpha_x", t.alpha_x},
                     {"alpha_z", t.alpha_z}});
  json j{{"params", params_to_json(fit.params)},
         {"theta_at", params_to_json(fit.draws.theta_at)},
         {"trace", std::move(trace)},
         {"converged", fit.converged},
         {"iterations", fit.iterations},
         {"n_draws", fit.draws.n_draws},
         {"n_bins", fit.draws.n_bins},
         {"n_trials", fit.draws.n_trials},
         {"burn_in_discarded", fit.draws.burn_in_discarded},
         {"seed", fit.draws.seed},
         {"pg_clamp",
          {{"draws", fit.pg_stats.draws}, {"clamped", fit.pg_stats.clamped}}},
         {"tool_version", version_string}};
  if (sidecar_name.empty())
    j["draws_sidecar"] = nullptr;
  else
    j["draws_sidecar"] = sidecar_name;
  write_text(json_path, j.dump(1) + "\n");

  if (sidecar_name.empty()) return;
  const fs::path side = json_path.parent_path() / sidecar_name;
  std::ofstream out(side, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + side.string() + " for writing");
  out.write(draws_sidecar_magic, 8);
  const auto& d = fit.draws;
  for (int i = 0; i < d.n_draws; ++i) {
    out.write(reinterpret_cast<const char*>(d.x_draw(i).data()),
              static_cast<std::streamsize>(sizeof(double)) * d.n_bins);
    out.write(reinterpret_cast<const char*>(d.z_draw(i).data()),
              static_cast<std::streamsize>(sizeof(double)) * d.n_trials);
  }
  out.close();
  if (!out) throw io_error("write failure on " + side.string());
}

LoadedFit load_fit_result(const fs::path& json_path) {
  const std::string what = "fit result " + json_path.string();
  json j = parse_json(read_text(json_path), what);
  require_keys(j, what,
               {"params", "theta_at", "trace", "converged", "iterations",
                "n_draws", "n_bins", "n_trials", "burn_in_discarded", "seed",
                "pg_clamp", "draws_sidecar", "tool_version"});

  LoadedFit loaded;
  FitResult& fit = loaded.fit;
  fit.params = params_from_json(j.at("params"), what + ".params");
  fit.draws.theta_at = params_from_json(j.at("theta_at"), what + ".theta_at");
  if (!j.contains("trace") || !j.at("trace").is_array())
    throw std::invalid_argument(what + ": missing 'trace' array");
  for (const auto& t : j.at("trace"))
    fit.trace.push_back({get_num(t, "sigma2_eps", what),
                         get_num(t, "sigma2_del", what),
                         get_num(t, "alpha_x", what),
                         get_num(t, "alpha_z", what)});
  if (!j.contains("converged") || !j.at("converged").is_boolean())
    throw std::invalid_argument(what + ": missing boolean 'converged'");
  fit.converged = j.at("converged").get<bool>();
  fit.iterations = get_int(j, "iterations", what);
  fit.draws.n_draws = get_int(j, "n_draws", what);
  fit.draws.n_bins = get_int(j, "n_bins", what);
  fit.draws.n_trials = get_int(j, "n_trials", what);
  fit.draws.burn_in_discarded = get_int(j, "burn_in_discarded", what);
  fit.draws.seed = get_seed(j, what);
  if (j.contains("pg_clamp")) {
    fit.pg_stats.draws = j.at("pg_clamp").value("draws", 0ULL);
    fit.pg_stats.clamped = j.at("pg_clamp").value("clamped", 0ULL);
  }

  if (!j.contains("draws_sidecar") || j.at("draws_sidecar").is_null())
    return loaded;
  if (!j.at("draws_sidecar").is_string())
    throw std::invalid_argument(what + ": 'draws_sidecar' must be a string");
  const fs::path side =
      json_path.parent_path() / j.at("draws_sidecar").get<std::string>();

  std::ifstream in(side, std::ios::binary);
  if (!in) throw io_error("cannot open draws sidecar " + side.string());
  char magic[8];
  in.read(magic, 8);
  if (in.gcount() != 8 || std::memcmp(magic, draws_sidecar_magic, 8) != 0)
    throw std::invalid_argument("bad magic in draws sidecar " + side.string());
  const auto n = static_cast<std::size_t>(fit.draws.n_draws);
  const auto K = static_cast<std::size_t>(fit.draws.n_bins);
  const auto R = static_cast<std::size_t>(fit.draws.n_trials);
  fit.draws.x.resize(n * K);
  fit.draws.z.resize(n * R);
  for (std::size_t i = 0; i < n; ++i) {
    in.read(reinterpret_cast<char*>(fit.draws.x.data() + i * K),
            static_cast<std::streamsize>(sizeof(double) * K));
    in.read(reinterpret_cast<char*>(fit.draws.z.data() + i * R),
            static_cast<std::streamsize>(sizeof(double) * R));
    if (!in)
      throw std::invalid_argument("truncated draws sidecar " + side.string());
  }
  if (in.peek() != std::ifstream::traits_type::eof())
    throw std::invalid_argument("trailing bytes in draws sidecar " +
                                side.string());
  loaded.has_draws = true;
  return loaded;
}

void save_summary(const SummarySurface& surface, const fs::path& dir) {
  const int K = surface.n_bins;
  const int R = surface.n_trials;
  write_matrix_csv(surface.prob_map, K, R, dir / "prob_map.csv");
  write_matrix_csv(surface.cif_mean, K, R, dir / "cif_mean.csv");
  write_effect_csv(surface.wt_effect.quantiles, dir / "wt_effect.csv");
  write_effect_csv(surface.ct_effect.quantiles, dir / "ct_effect.csv");

  const Detection& det = surface.detection;
  json j{{"detected", det.detected}, {"threshold", det.threshold}};
  if (det.detected) {
    j["learning_trial"] = det.learning_trial;
    j["learning_bin"] = det.learning_bin;
    j["learning_time_ms"] = det.learning_time_ms;
  } else {
    j["learning_trial"] = nullptr;
    j["learning_bin"] = nullptr;
    j["learning_time_ms"] = nullptr;
  }
  write_text(dir / "detection.json", j.dump(1) + "\n");
}

void save_sweep_csv(const std::vector<SweepRow>& rows, const fs::path& path) {
  std::string text =
      "conditioned_rate_hz,ratio,detections,mean_learning_time_ms,"
      "mean_learning_trial\n";
  for (const auto& row : rows) {
    text += fmt(row.conditioned_rate_hz);
    text += ',';
    text += fmt(row.ratio);
    text += ',';
    text += std::to_string(row.detections);
    text += ',';
    text += fmt(row.mean_learning_time_ms);
    text += ',';
    text += fmt(row.mean_learning_trial);
    text += '\n';
  }
  write_text(path, text);
}

void write_manifest(const RunManifest& manifest, const fs::path& dir) {
  json j{{"command", manifest.command},
         {"config_path", manifest.config_path},
         {"seed", manifest.seed},
         {"inputs", manifest.inputs},
         {"outputs", manifest.outputs},
         {"tool_version", manifest.tool_version},
         {"started", manifest.started},
         {"finished", manifest.finished}};
  const fs::path tmp = dir / ".manifest.json.tmp";
  const fs::path target = dir / "manifest.json";
  write_text(tmp, j.dump(1) + "\n");
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec)
    throw io_error("cannot move manifest into place: " + ec.message());
}

std::string iso8601_utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace smurf
