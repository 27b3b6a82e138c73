// Copyright 2026 The normsep Authors
// SPDX-License-Identifier: Apache-2.0

#include "core/records.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "core/error.hpp"
#include "core/spectral.hpp"

namespace normsep::harness {

using nlohmann::json;

namespace {

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> get_opt(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

template <typename T>
std::string cell(const std::optional<T>& v) {
  if (!v) return "";
  if constexpr (std::is_floating_point_v<T>) {
    return fmt17(*v);
  } else {
    return std::to_string(*v);
  }
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::kIo,
          "cannot open for writing: " + path.string());
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorCode::kIo,
          "cannot create directory " + dir.string() + ": " + ec.message());
}

double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  require(ec == std::errc() && ptr == e, ErrorCode::kIo,
          what + ": malformed number '" + s + "'");
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

json summary_to_json(const RunRecord& r) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["run_id"] = r.run_id;
  j["axis"] = r.axis;
  j["axis_value"] = r.axis_value;
  j["config"] = to_json(r.config);
  j["t_mem"] = opt(r.t_mem);
  j["t_grok"] = opt(r.t_grok);
  j["delay"] = opt(r.delay);
  j["tau_detect"] = opt(r.tau_detect);
  j["v_init"] = r.v_init;
  j["v_mem"] = opt(r.v_mem);
  j["v_post_at_grok"] = opt(r.v_post_at_grok);
  j["v_final"] = r.v_final;
  j["fit"] = r.fit ? analysis::to_json(*r.fit) : json(nullptr);
  j["grokked"] = r.grokked;
  j["support"] = r.support;
  j["regime"] = r.regime;
  j["failed"] = r.failed;
  j["error"] = r.error;
  j["trajectory_points"] = r.trajectory.size();
  return j;
}

RunRecord summary_from_json(const json& j) {
  RunRecord r;
  try {
    r.run_id = j.at("run_id").get<std::string>();
    r.axis = j.value("axis", "");
    r.axis_value = j.value("axis_value", "");
    r.config = config_from_json(j.at("config"));
    r.t_mem = get_opt<long>(j, "t_mem");
    r.t_grok = get_opt<long>(j, "t_grok");
    r.delay = get_opt<long>(j, "delay");
    r.tau_detect = get_opt<long>(j, "tau_detect");
    r.v_init = j.at("v_init").get<double>();
    r.v_mem = get_opt<double>(j, "v_mem");
    r.v_post_at_grok = get_opt<double>(j, "v_post_at_grok");
    r.v_final = j.at("v_final").get<double>();
    if (j.contains("fit") && !j.at("fit").is_null()) {
      r.fit = analysis::fit_from_json(j.at("fit"));
    }
    r.grokked = j.at("grokked").get<bool>();
    r.support = j.value("support", std::vector<int>{});
    r.regime = j.value("regime", "");
    r.failed = j.value("failed", false);
    r.error = j.value("error", "");
  } catch (const json::exception& e) {
    fail(ErrorCode::kIo, std::string("malformed run summary: ") + e.what());
  }
  return r;
}

void write_trajectory_csv(const RunRecord& r, std::ostream& out) {
  out << kTrajectoryHeader << '\n';
  for (const auto& p : r.trajectory) {
    out << p.step << ',' << fmt17(p.train_loss) << ',' << fmt17(p.val_loss)
        << ',' << fmt17(p.train_acc) << ',' << fmt17(p.val_acc) << ','
        << fmt17(p.v_sq_norm) << ',' << cell(p.r_value) << '\n';
  }
}

std::vector<TrajectoryPoint> read_trajectory_csv(std::istream& in,
                                                 const std::string& what) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::kIo,
          what + ": empty trajectory file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line == kTrajectoryHeader, ErrorCode::kIo,
          what + ": unexpected trajectory header");
  std::vector<TrajectoryPoint> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    require(f.size() == 7, ErrorCode::kIo, what + ": expected 7 columns");
    TrajectoryPoint p;
    p.step = static_cast<long>(parse_double(f[0], what));
    p.train_loss = parse_double(f[1], what);
    p.val_loss = parse_double(f[2], what);
    p.train_acc = parse_double(f[3], what);
    p.val_acc = parse_double(f[4], what);
    p.v_sq_norm = parse_double(f[5], what);
    if (!f[6].empty()) p.r_value = parse_double(f[6], what);
    out.push_back(p);
  }
  return out;
}

void write_sweep_summary_csv(std::span<const RunRecord> records,
                             std::ostream& out) {
  out << kSweepSummaryHeader << '\n';
  for (const auto& r : records) {
    std::optional<double> rho, gamma, r2;
    if (r.fit) {
      rho = r.fit->rho;
      gamma = r.fit->gamma_fit;
      r2 = r.fit->r2;
    }
    out << r.axis_value << ',' << r.config.seed << ','
        << (r.grokked ? "true" : "false") << ',' << cell(r.t_mem) << ','
        << cell(r.t_grok) << ',' << cell(r.delay) << ',' << cell(r.v_mem)
        << ',' << cell(r.v_post_at_grok) << ','
        << (r.failed ? "" : fmt17(r.v_final)) << ',' << cell(rho) << ','
        << cell(gamma) << ',' << cell(r2) << ',' << r.regime << '\n';
  }
}

void write_records(std::span<const RunRecord> records, const fs::path& dir) {
  ensure_dir(dir);
  for (const auto& r : records) {
    require(!r.run_id.empty(), ErrorCode::kInvalidArgument,
            "write_records: record without run_id");
    {
      auto out = open_out(dir / (r.run_id + ".trajectory.csv"));
      write_trajectory_csv(r, out);
    }
    auto out = open_out(dir / (r.run_id + ".summary.json"));
    out << summary_to_json(r).dump(2) << '\n';
  }
  auto out = open_out(dir / "sweep_summary.csv");
  write_sweep_summary_csv(records, out);
}

std::vector<RunRecord> read_records(const fs::path& dir) {
  std::error_code ec;
  require(fs::is_directory(dir, ec), ErrorCode::kIo,
          "records directory not found: " + dir.string());
  std::vector<fs::path> summaries;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    const std::string suffix = ".summary.json";
    if (name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      summaries.push_back(e.path());
    }
  }
  std::sort(summaries.begin(), summaries.end());
  std::vector<RunRecord> out;
  for (const auto& path : summaries) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::kIo,
            "cannot read " + path.string());
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      fail(ErrorCode::kIo, path.string() + ": " + e.what());
    }
    RunRecord r = summary_from_json(j);
    const fs::path tpath = dir / (r.run_id + ".trajectory.csv");
    std::ifstream tin(tpath);
    require(static_cast<bool>(tin), ErrorCode::kIo,
            "run " + r.run_id + ": missing trajectory file " + tpath.string());
    r.trajectory = read_trajectory_csv(tin, "run " + r.run_id);
    out.push_back(std::move(r));
  }
  return out;
}

json sweep_to_json(const SweepResult& s) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["axis"] = s.axis;
  j["points"] = json::array();
  for (const auto& p : s.points) {
    json runs = json::array();
    for (auto i : p.runs) runs.push_back(s.records[i].run_id);
    j["points"].push_back({{"axis_value", p.axis_value},
                           {"runs", runs},
                           {"grok_fraction", p.grok_fraction},
                           {"mean_delay", opt(p.mean_delay)},
                           {"mean_log_norm_ratio", p.mean_log_norm_ratio},
                           {"mean_norm_retention", p.mean_norm_retention},
                           {"regime", analysis::to_json(p.regime)}});
  }
  j["regressions"] = json::object();
  for (const auto& [k, v] : s.regressions) j["regressions"][k] = analysis::to_json(v);
  j["statistics"] = s.statistics;
  return j;
}

void write_sweep_json(const SweepResult& s, const fs::path& path) {
  ensure_dir(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  auto out = open_out(path);
  out << sweep_to_json(s).dump(2) << '\n';
}

namespace {
constexpr char kCkptMagic[8] = {'N', 'S', 'C', 'K', 'P', 'T', '0', '1'};
}

void write_checkpoint(const fs::path& path, long step,
                      std::span<const double> params) {
  ensure_dir(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIo,
          "cannot write checkpoint " + path.string());
  const std::int64_t s = step;
  const std::uint64_t n = params.size();
  out.write(kCkptMagic, sizeof kCkptMagic);
  out.write(reinterpret_cast<const char*>(&s), sizeof s);
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(params.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
  require(static_cast<bool>(out), ErrorCode::kIo,
          "short write on checkpoint " + path.string());
}

std::vector<double> read_checkpoint(const fs::path& path, long* step) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo,
          "cannot read checkpoint " + path.string());
  char magic[8];
  std::int64_t s = 0;
  std::uint64_t n = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&s), sizeof s);
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  require(in && std::memcmp(magic, kCkptMagic, sizeof magic) == 0 &&
              n < (std::uint64_t{1} << 32),
          ErrorCode::kIo, "not a checkpoint file: " + path.string());
  std::vector<double> out(n);
  in.read(reinterpret_cast<char*>(out.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  require(static_cast<bool>(in), ErrorCode::kIo,
          "truncated checkpoint " + path.string());
  if (step) *step = static_cast<long>(s);
  return out;
}

fs::path checkpoint_dir(const fs::path& dir, const std::string& run_id) {
  return dir / (run_id + ".checkpoints");
}

int spectral_from_checkpoints(const fs::path& run_dir, const std::string& run_id,
                              const fs::path& out_dir) {
  const fs::path spath = run_dir / (run_id + ".summary.json");
  std::ifstream sin(spath);
  require(static_cast<bool>(sin), ErrorCode::kIo,
          "run " + run_id + ": missing summary " + spath.string());
  json j;
  try {
    j = json::parse(sin);
  } catch (const json::exception& e) {
    fail(ErrorCode::kIo, spath.string() + ": " + e.what());
  }
  const RunRecord rec = summary_from_json(j);
  require(rec.config.is_modular(), ErrorCode::kInvalidArgument,
          "spectral: run " + run_id + " is not a modular task");

  const fs::path cdir = checkpoint_dir(run_dir, run_id);
  std::error_code ec;
  require(fs::is_directory(cdir, ec), ErrorCode::kIo,
          "run " + run_id + ": no checkpoints at " + cdir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(cdir)) {
    if (e.path().extension() == ".bin") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  require(!files.empty(), ErrorCode::kIo,
          "run " + run_id + ": checkpoint directory is empty");

  models::MlpModel model(rec.config.model_shape());
  std::vector<std::pair<long, spectral::SpectrumReport>> spectra;
  for (const auto& f : files) {
    long step = 0;
    model.unflatten(read_checkpoint(f, &step));
    spectra.emplace_back(step, spectral::model_spectrum(model));
  }
  std::sort(spectra.begin(), spectra.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<spectral::SpectrumReport> basis;
  for (const auto& [s, sp] : spectra) {
    if (rec.t_grok && s >= *rec.t_grok) basis.push_back(sp);
  }
  if (basis.empty()) basis.push_back(spectra.back().second);
  const auto support =
      spectral::select_support(basis, rec.config.support_coverage);

  ensure_dir(out_dir);
  for (auto& [s, sp] : spectra) {
    sp.set_support(support);
    const std::string stem = run_id + ".step" + std::to_string(s) + ".spectrum";
    {
      auto out = open_out(out_dir / (stem + ".csv"));
      spectral::write_spectrum_csv(sp, out);
    }
    auto out = open_out(out_dir / (stem + ".json"));
    spectral::write_spectrum_json(sp, out);
  }
  return static_cast<int>(spectra.size());
}

json analyze_records(std::span<const RunRecord> records) {
  require(!records.empty(), ErrorCode::kInvalidArgument,
          "analyze: no run records found");
  std::string axis = records.front().axis;
  SweepResult s = summarize(axis, {records.begin(), records.end()});
  json j = sweep_to_json(s);

  j["fits"] = json::array();
  for (const auto& r : s.records) {
    if (!r.fit) continue;
    json f = analysis::to_json(*r.fit);
    f["run_id"] = r.run_id;
    if (r.delay && r.v_mem && r.v_post_at_grok) {
      f["predicted_escape"] = analysis::predict_escape(
          r.fit->gamma_fit, *r.v_mem, *r.v_post_at_grok);
      f["delay"] = *r.delay;
    }
    j["fits"].push_back(f);
  }

  j["gap_regression"] = nullptr;
  try {
    const GapData g = gap_regression_dataset(records);
    json gr;
    gr["n_points"] = g.r.size();
    gr["violations"] = std::count_if(g.gap.begin(), g.gap.end(),
                                     [](double v) { return v < -1e-6; });
    if (g.r.size() >= 3) {
      auto ols = analysis::ols_fit(g.r, g.gap);
      if (g.r.size() >= 5) {
        const auto ci = analysis::bootstrap_slope_ci(g.r, g.gap, 2000, 0.05, 7);
        ols.ci_low = ci.low;
        ols.ci_high = ci.high;
        try {
          double mad = 0.0;
          for (std::size_t i = 0; i < g.r.size(); ++i) {
            mad += std::abs(g.gap[i] - (ols.slope * g.r[i] + ols.intercept));
          }
          mad /= double(g.r.size());
          gr["ransac"] = analysis::to_json(analysis::ransac_fit(
              g.r, g.gap, 2000, std::max(mad, 1e-9), 0.5, 11));
        } catch (const Error& e) {
          gr["ransac"] = {{"error", e.what()}};
        }
      }
      gr["ols"] = analysis::to_json(ols);
    }
    j["gap_regression"] = gr;
  } catch (const Error& e) {
    j["gap_regression"] = {{"error", e.what()}};
  }
  return j;
}

namespace {

bool has_records(const fs::path& dir) {
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string n = e.path().filename().string();
    if (n.size() > 13 && n.ends_with(".summary.json")) return true;
  }
  return false;
}

}  // namespace

int write_report(const fs::path& in_dir, const fs::path& out_dir) {
  std::error_code ec;
  require(fs::is_directory(in_dir, ec), ErrorCode::kIo,
          "report: input directory not found: " + in_dir.string());
  std::vector<std::pair<std::string, fs::path>> sources;
  if (has_records(in_dir)) sources.emplace_back("root", in_dir);
  std::vector<fs::path> subs;
  for (const auto& e : fs::directory_iterator(in_dir)) {
    if (e.is_directory() && has_records(e.path())) subs.push_back(e.path());
  }
  std::sort(subs.begin(), subs.end());
  for (const auto& s : subs) sources.emplace_back(s.filename().string(), s);
  require(!sources.empty(), ErrorCode::kIo,
          "report: no run records under " + in_dir.string());

  ensure_dir(out_dir);
  json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["sweeps"] = json::array();
  for (const auto& [name, dir] : sources) {
    const auto records = read_records(dir);
    const fs::path od = out_dir / name;
    ensure_dir(od / "trajectories");
    const json analysis_json = analyze_records(records);
    SweepResult s = summarize(records.front().axis, records);
    {
      auto out = open_out(od / "sweep_summary.csv");
      write_sweep_summary_csv(s.records, out);
    }
    {
      auto out = open_out(od / "analysis.json");
      out << analysis_json.dump(2) << '\n';
    }
    {
      auto out = open_out(od / "fits.csv");
      out << "run_id,axis_value,seed,t_mem,t_grok,a,rho,c,r2,gamma_fit\n";
      for (const auto& r : s.records) {
        if (!r.fit) continue;
        out << r.run_id << ',' << r.axis_value << ',' << r.config.seed << ','
            << cell(r.t_mem) << ',' << cell(r.t_grok) << ',' << fmt17(r.fit->a)
            << ',' << fmt17(r.fit->rho) << ',' << fmt17(r.fit->c) << ','
            << fmt17(r.fit->r2) << ',' << fmt17(r.fit->gamma_fit) << '\n';
      }
    }
    {
      auto out = open_out(od / "points.csv");
      out << "axis_value,n_runs,grok_fraction,mean_delay,mean_log_norm_ratio,"
             "mean_norm_retention,regime\n";
      for (const auto& p : s.points) {
        out << p.axis_value << ',' << p.runs.size() << ','
            << fmt17(p.grok_fraction) << ',' << cell(p.mean_delay) << ','
            << fmt17(p.mean_log_norm_ratio) << ','
            << fmt17(p.mean_norm_retention) << ','
            << analysis::to_string(p.regime.label) << '\n';
      }
    }
    for (const auto& r : s.records) {
      auto out = open_out(od / "trajectories" / (r.run_id + ".csv"));
      write_trajectory_csv(r, out);
    }
    manifest["sweeps"].push_back({{"name", name},
                                  {"axis", s.axis},
                                  {"runs", s.records.size()},
                                  {"source", dir.string()}});
  }
  auto out = open_out(out_dir / "manifest.json");
  out << manifest.dump(2) << '\n';
  return static_cast<int>(sources.size());
}

}  // namespace normsep::harness
